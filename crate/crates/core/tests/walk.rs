//! The reinforced walk against its mean-field limit.

use reinforced_choice::analysis::{find_equilibrium, unconstrained_fixed_point, EquilibriumOptions};
use reinforced_choice::schedule::{Exploration, ScheduleConfig};
use reinforced_choice::walk::{run, RewardModel, StartPolicy};
use reinforced_choice::Graph;

const MU: [f64; 4] = [2.0, 0.25, 0.5, 1.0];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn median_final(g: &Graph, cfg: &ScheduleConfig, steps: u64) -> Vec<f64> {
    let rm = RewardModel::noiseless(MU.to_vec()).unwrap();
    let finals: Vec<Vec<f64>> = (0..9)
        .map(|seed| {
            run(g, &rm, cfg, steps, seed, steps, &StartPolicy::Uniform)
                .unwrap()
                .final_x()
                .to_vec()
        })
        .collect();
    (0..g.node_count())
        .map(|i| median(finals.iter().map(|x| x[i]).collect()))
        .collect()
}

#[test]
fn steps_follow_edges_and_frequencies_count_visits() {
    let g = Graph::star(5, 2).unwrap();
    let rm = RewardModel::new(vec![1.0, 0.2, 0.4, 0.9, 0.3], 0.3).unwrap();
    let traj = run(&g, &rm, &ScheduleConfig::default(), 3000, 4, 1, &StartPolicy::Uniform).unwrap();
    let mut counts = [0u32; 5];
    for w in traj.snapshots.windows(2) {
        assert!(g.has_edge(w[0].xi, w[1].xi));
        counts[w[1].xi] += 1;
    }
    let x = traj.final_x();
    // The first step size is 1, so the uniform x(0) leaves no trace.
    for (i, &c) in counts.iter().enumerate() {
        let expected = c as f64 / 3000.0;
        assert!((x[i] - expected).abs() < 1e-9, "node {}: {} vs {expected}", i + 1, x[i]);
    }
}

#[test]
fn fixed_alpha_tracks_the_closed_form_on_the_complete_graph() {
    let alpha = 0.5;
    let cfg = ScheduleConfig::fixed(alpha, Exploration::Harmonic);
    let g = Graph::complete(4).unwrap();
    let got = median_final(&g, &cfg, 100_000);
    let want = unconstrained_fixed_point(&MU, alpha).unwrap();
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 0.03, "{got:?} vs {want:?}");
    }
}

#[test]
fn fixed_alpha_tracks_the_flow_equilibrium_on_the_chain() {
    let alpha = 0.5;
    let cfg = ScheduleConfig::fixed(alpha, Exploration::Harmonic);
    let g = Graph::linear(4).unwrap();
    let got = median_final(&g, &cfg, 100_000);
    let eq = find_equilibrium(&[0.25; 4], &g, &MU, alpha, &EquilibriumOptions::default()).unwrap();
    assert!(eq.converged);
    for (a, b) in got.iter().zip(&eq.point) {
        assert!((a - b).abs() < 0.03, "{got:?} vs {:?}", eq.point);
    }
}
