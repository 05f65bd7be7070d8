//! Comparison algorithms on the same constraint graph: simulated annealing
//! over noisy empirical means, and ε-greedy.
//!
//! Both keep the walk's bookkeeping: bandit feedback at the node moved to,
//! running means starting from `μ̂ = 0`, and the same frequency recursion.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::Graph;
use crate::schedule::{sa_temperature, ScheduleConfig, ScheduleState};
use crate::walk::{
    check_run, rng_from_seed, sample_index, Occupancy, RewardModel, StartPolicy, Trajectory,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaState {
    pub current: usize,
    pub occ: Occupancy,
    /// `γ` in `T_k = γ / ln(1 + k)`.
    pub gamma: f64,
}

impl SaState {
    pub fn new(m: usize, start: usize, gamma: f64) -> Self {
        Self {
            current: start,
            occ: Occupancy::new(m),
            gamma,
        }
    }

    /// Temperature for the next move; indices start at 1.
    pub fn temperature(&self) -> f64 {
        sa_temperature(self.occ.n + 1, self.gamma)
    }
}

/// Annealing kernel row at `x = current` over `N(x)` (order of
/// `g.neighbors(x)`): each `y ≠ x` gets
/// `exp(-(μ̂_x - μ̂_y)^+ / T) / |N(x)|`, the self-loop takes the rest.
pub fn sa_kernel(state: &SaState, g: &Graph, temp: f64, out: &mut Vec<f64>) {
    let x = state.current;
    let nbrs = g.neighbors(x);
    let share = 1.0 / nbrs.len() as f64;
    let here = state.occ.mu_hat[x];
    out.clear();
    let mut moved = 0.0;
    let mut self_slot = None;
    for (k, &y) in nbrs.iter().enumerate() {
        if y == x {
            self_slot = Some(k);
            out.push(0.0);
        } else {
            let drop = (here - state.occ.mu_hat[y]).max(0.0);
            let p = share * (-drop / temp).exp();
            moved += p;
            out.push(p);
        }
    }
    if let Some(k) = self_slot {
        out[k] = (1.0 - moved).max(0.0);
    }
}

pub fn sa_step<R: Rng + ?Sized>(
    state: &mut SaState,
    g: &Graph,
    rm: &RewardModel,
    rng: &mut R,
    scratch: &mut Vec<f64>,
) {
    sa_kernel(state, g, state.temperature(), scratch);
    let next = g.neighbors(state.current)[sample_index(scratch, rng)];
    let observed = rm.observe(next, rng);
    state.occ.visit(next, observed);
    state.current = next;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyState {
    pub current: usize,
    pub occ: Occupancy,
    pub sched: ScheduleState,
}

impl GreedyState {
    pub fn new(m: usize, start: usize, cfg: &ScheduleConfig) -> Self {
        Self {
            current: start,
            occ: Occupancy::new(m),
            sched: ScheduleState::new(cfg),
        }
    }
}

/// Neighbour of `current` with the largest running mean, lowest id on ties.
pub fn greedy_choice(state: &GreedyState, g: &Graph) -> usize {
    let mut best = state.current;
    let mut best_val = f64::NEG_INFINITY;
    for &j in g.neighbors(state.current) {
        if state.occ.mu_hat[j] > best_val {
            best = j;
            best_val = state.occ.mu_hat[j];
        }
    }
    best
}

pub fn greedy_step<R: Rng + ?Sized>(
    state: &mut GreedyState,
    g: &Graph,
    rm: &RewardModel,
    cfg: &ScheduleConfig,
    rng: &mut R,
) {
    let nbrs = g.neighbors(state.current);
    let next = if rng.random::<f64>() < state.sched.eps {
        nbrs[rng.random_range(0..nbrs.len())]
    } else {
        greedy_choice(state, g)
    };
    let observed = rm.observe(next, rng);
    state.occ.visit(next, observed);
    state.current = next;
    state.sched.advance(cfg);
}

pub fn run_sa(
    g: &Graph,
    rm: &RewardModel,
    gamma: f64,
    n_steps: u64,
    seed: u64,
    record_stride: u64,
    start: &StartPolicy,
) -> Result<Trajectory> {
    check_run(g, rm, n_steps)?;
    let mut rng = rng_from_seed(seed);
    let m = g.node_count();
    let first = start.pick(m, &mut rng)?;
    let mut state = SaState::new(m, first, gamma);
    let mut traj = Trajectory::recorder(record_stride);
    let mut scratch = Vec::new();
    // SA has no exploration mixture; the eps column carries 0 and the alpha
    // column the inverse temperature.
    traj.record(0, first, 0.0, 1.0 / state.temperature(), &state.occ.x, false);
    for k in 1..=n_steps {
        sa_step(&mut state, g, rm, &mut rng, &mut scratch);
        traj.record(k, state.current, 0.0, 1.0 / state.temperature(), &state.occ.x, k == n_steps);
    }
    Ok(traj)
}

pub fn run_greedy(
    g: &Graph,
    rm: &RewardModel,
    cfg: &ScheduleConfig,
    n_steps: u64,
    seed: u64,
    record_stride: u64,
    start: &StartPolicy,
) -> Result<Trajectory> {
    check_run(g, rm, n_steps)?;
    cfg.validate()?;
    let mut rng = rng_from_seed(seed);
    let m = g.node_count();
    let first = start.pick(m, &mut rng)?;
    let mut state = GreedyState::new(m, first, cfg);
    let mut traj = Trajectory::recorder(record_stride);
    // Greedy has no reinforcement exponent; the alpha column carries +inf.
    traj.record(0, first, state.sched.eps, f64::INFINITY, &state.occ.x, false);
    for k in 1..=n_steps {
        greedy_step(&mut state, g, rm, cfg, &mut rng);
        traj.record(k, state.current, state.sched.eps, f64::INFINITY, &state.occ.x, k == n_steps);
    }
    Ok(traj)
}
