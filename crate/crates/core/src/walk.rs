//! The reinforced walk.
//!
//! From node `i` the next node is drawn from
//! `(1 - ε) p̃(i, ·) + ε · uniform(N(i))`, where the reinforced part weighs
//! each neighbour `j` by `f̂_j = (μ̂_j x_j)^α`. Only the chosen node's reward
//! is observed (bandit feedback) and folded into its running mean. The
//! occupation frequencies follow `x ← x + (e_ξ - x)/(n+1)` from the uniform
//! prior, so `x(n) = S(n)/n` for every `n >= 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::schedule::{ScheduleConfig, ScheduleState};

/// Generator behind every run. Recorded in run metadata.
pub type RunRng = ChaCha8Rng;
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, SeedableRng::seed_from_u64)";

pub fn rng_from_seed(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Drift allowed on `Σ x` before the frequency vector is rescaled.
const SIMPLEX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    mu: Vec<f64>,
    noise_std: f64,
}

impl RewardModel {
    pub fn new(mu: Vec<f64>, noise_std: f64) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidParameter("empty reward vector".into()));
        }
        if let Some(bad) = mu.iter().find(|&&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "rewards must be positive, got {bad}"
            )));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise standard deviation must be >= 0, got {noise_std}"
            )));
        }
        Ok(Self { mu, noise_std })
    }

    pub fn noiseless(mu: Vec<f64>) -> Result<Self> {
        Self::new(mu, 0.0)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// `μ_i + ζ` with `ζ ~ N(0, noise_std²)`. Draws nothing when noiseless.
    pub fn observe<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        if self.noise_std == 0.0 {
            return self.mu[i];
        }
        let noise = Normal::new(0.0, self.noise_std).expect("validated std");
        self.mu[i] + noise.sample(rng)
    }
}

/// Visit counts, frequencies and running reward means shared by the walk
/// and the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub n: u64,
    pub counts: Vec<u64>,
    pub x: Vec<f64>,
    pub mu_hat: Vec<f64>,
}

impl Occupancy {
    pub fn new(m: usize) -> Self {
        Self {
            n: 0,
            counts: vec![0; m],
            x: vec![1.0 / m as f64; m],
            mu_hat: vec![0.0; m],
        }
    }

    /// Folds an observed reward at node `i` into its running mean.
    /// Must follow the increment of `counts[i]`.
    pub fn update_mean(&mut self, i: usize, observed: f64) {
        let s = self.counts[i] as f64;
        self.mu_hat[i] = (1.0 - 1.0 / s) * self.mu_hat[i] + observed / s;
    }

    /// Records a visit to `i` with the observed reward and advances `n`.
    pub fn visit(&mut self, i: usize, observed: f64) {
        self.counts[i] += 1;
        self.update_mean(i, observed);
        let a = crate::schedule::step_size(self.n);
        for (k, xk) in self.x.iter_mut().enumerate() {
            let hit = if k == i { 1.0 } else { 0.0 };
            *xk += a * (hit - *xk);
        }
        self.n += 1;
        let total: f64 = self.x.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_SLACK {
            self.x.iter_mut().for_each(|v| *v /= total);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkState {
    pub current: usize,
    pub occ: Occupancy,
    pub sched: ScheduleState,
}

impl WalkState {
    pub fn new(m: usize, start: usize, cfg: &ScheduleConfig) -> Self {
        Self {
            current: start,
            occ: Occupancy::new(m),
            sched: ScheduleState::new(cfg),
        }
    }

    /// Observes a reward at `i`, counts the visit and updates `μ̂_i` only.
    /// Returns the observed value.
    pub fn observe_and_update_mean<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        rm: &RewardModel,
        rng: &mut R,
    ) -> f64 {
        let observed = rm.observe(i, rng);
        self.occ.counts[i] += 1;
        self.occ.update_mean(i, observed);
        observed
    }
}

/// Log of the reinforcement weight `α ln(μ̂ x)`; `-∞` when `μ̂ x <= 0`.
///
/// Noisy observations can drive a running mean below zero. Such a node gets
/// no reinforced mass until its mean recovers; exploration still reaches it.
fn log_weight(mu_hat: f64, x: f64, alpha: f64) -> f64 {
    let v = mu_hat * x;
    if v > 0.0 {
        alpha * v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Transition probabilities from `state.current` over `N(current)`, in the
/// order of `g.neighbors(current)`, written into `out`.
pub fn neighbor_probabilities(
    state: &WalkState,
    g: &Graph,
    alpha: f64,
    eps: f64,
    out: &mut Vec<f64>,
) {
    let nbrs = g.neighbors(state.current);
    out.clear();
    out.extend(
        nbrs.iter()
            .map(|&j| log_weight(state.occ.mu_hat[j], state.occ.x[j], alpha)),
    );
    let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let uniform = 1.0 / nbrs.len() as f64;
    if top == f64::NEG_INFINITY {
        // 0/0: no neighbour carries reinforcement yet.
        out.iter_mut().for_each(|p| *p = uniform);
        return;
    }
    let mut total = 0.0;
    for p in out.iter_mut() {
        *p = (*p - top).exp();
        total += *p;
    }
    for p in out.iter_mut() {
        *p = (1.0 - eps) * (*p / total) + eps * uniform;
    }
}

/// Full length-`m` transition vector from the current node.
pub fn transition_probabilities(state: &WalkState, g: &Graph, alpha: f64, eps: f64) -> Vec<f64> {
    let mut local = Vec::new();
    neighbor_probabilities(state, g, alpha, eps, &mut local);
    let mut full = vec![0.0; g.node_count()];
    for (&j, p) in g.neighbors(state.current).iter().zip(local) {
        full[j] = p;
    }
    full
}

/// Inverse-CDF draw over `probs`; the last index absorbs rounding.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// One transition: sample, observe, update frequencies, advance schedules.
pub fn step<R: Rng + ?Sized>(
    state: &mut WalkState,
    g: &Graph,
    rm: &RewardModel,
    cfg: &ScheduleConfig,
    rng: &mut R,
    scratch: &mut Vec<f64>,
) {
    neighbor_probabilities(state, g, state.sched.alpha(), state.sched.eps, scratch);
    let next = g.neighbors(state.current)[sample_index(scratch, rng)];
    let observed = rm.observe(next, rng);
    state.occ.visit(next, observed);
    state.current = next;
    state.sched.advance(cfg);
}

/// Where a run starts. Node ids are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StartPolicy {
    Uniform,
    Node(usize),
    UniformIn(Vec<usize>),
}

impl StartPolicy {
    pub fn pick<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<usize> {
        match self {
            StartPolicy::Uniform => Ok(rng.random_range(0..m)),
            StartPolicy::Node(i) if *i < m => Ok(*i),
            StartPolicy::UniformIn(set) if !set.is_empty() && set.iter().all(|&i| i < m) => {
                Ok(set[rng.random_range(0..set.len())])
            }
            other => Err(Error::Config(format!(
                "start policy {other:?} is not valid for {m} nodes"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: u64,
    pub xi: usize,
    pub eps: f64,
    pub alpha: f64,
    pub x: Vec<f64>,
}

/// Snapshots at `n = 0`, every `stride` steps and at the final step.
/// Consecutive snapshots are graph neighbours only when `stride == 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub stride: u64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn final_x(&self) -> &[f64] {
        &self.snapshots.last().expect("trajectory is never empty").x
    }

    pub(crate) fn recorder(stride: u64) -> Self {
        Self {
            stride: stride.max(1),
            snapshots: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, n: u64, xi: usize, eps: f64, alpha: f64, x: &[f64], last: bool) {
        if n % self.stride == 0 || last {
            self.snapshots.push(Snapshot {
                n,
                xi,
                eps,
                alpha,
                x: x.to_vec(),
            });
        }
    }
}

/// Runs the reinforced walk for `n_steps` transitions.
pub fn run(
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
    let mut state = WalkState::new(m, first, cfg);
    let mut traj = Trajectory::recorder(record_stride);
    let mut scratch = Vec::new();
    traj.record(0, first, state.sched.eps, state.sched.alpha(), &state.occ.x, false);
    for k in 1..=n_steps {
        step(&mut state, g, rm, cfg, &mut rng, &mut scratch);
        traj.record(
            k,
            state.current,
            state.sched.eps,
            state.sched.alpha(),
            &state.occ.x,
            k == n_steps,
        );
    }
    Ok(traj)
}

pub(crate) fn check_run(g: &Graph, rm: &RewardModel, n_steps: u64) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be >= 1".into()));
    }
    if rm.mu().len() != g.node_count() {
        return Err(Error::Config(format!(
            "reward vector has {} entries for {} nodes",
            rm.mu().len(),
            g.node_count()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{AlphaMode, Exploration};
    use approx::assert_relative_eq;

    fn state_at(current: usize, x: Vec<f64>, mu_hat: Vec<f64>) -> WalkState {
        let m = x.len();
        let mut s = WalkState::new(m, current, &ScheduleConfig::default());
        s.occ.x = x;
        s.occ.mu_hat = mu_hat;
        s
    }

    #[test]
    fn running_mean_updates() {
        let rm = RewardModel::new(vec![0.7, 1.0], 0.0).unwrap();
        let mut s = WalkState::new(2, 0, &ScheduleConfig::default());
        let mut rng = rng_from_seed(1);
        assert_eq!(s.observe_and_update_mean(0, &rm, &mut rng), 0.7);
        assert_eq!(s.occ.mu_hat[0], 0.7);
        assert_eq!(s.occ.mu_hat[1], 0.0);

        let mut occ = Occupancy::new(2);
        occ.counts[0] = 1;
        occ.update_mean(0, 0.7);
        occ.counts[0] = 2;
        occ.update_mean(0, 0.9);
        assert_relative_eq!(occ.mu_hat[0], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn pure_exploration_is_uniform_on_neighbours() {
        let g = Graph::linear(4).unwrap();
        let s = state_at(1, vec![0.1, 0.2, 0.3, 0.4], vec![3.0, 1.0, 0.5, 2.0]);
        let p = transition_probabilities(&s, &g, 2.5, 1.0);
        for (j, pj) in p.iter().enumerate() {
            let expected = if j <= 2 { 1.0 / 3.0 } else { 0.0 };
            assert_relative_eq!(*pj, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn reinforced_kernel_on_three_chain() {
        let g = Graph::linear(3).unwrap();
        let s = state_at(1, vec![0.5, 0.25, 0.25], vec![2.0, 1.0, 1.0]);
        let p = transition_probabilities(&s, &g, 1.0, 0.0);
        assert_relative_eq!(p[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(p[1], 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(p[2], 1.0 / 6.0, epsilon = 1e-15);

        let sharp = transition_probabilities(&s, &g, 200.0, 0.0);
        assert!(sharp[0] > 1.0 - 1e-15);
        assert!(sharp[1] < 1e-100 && sharp[2] < 1e-100);
    }

    #[test]
    fn unvisited_neighbourhood_falls_back_to_uniform() {
        let g = Graph::complete(3).unwrap();
        let s = state_at(0, vec![1.0 / 3.0; 3], vec![0.0; 3]);
        let p = transition_probabilities(&s, &g, 5.0, 0.0);
        for pj in p {
            assert_relative_eq!(pj, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn frequency_recursion_arithmetic() {
        let mut occ = Occupancy::new(2);
        occ.n = 1;
        occ.x = vec![0.5, 0.5];
        occ.counts = vec![1, 0];
        occ.visit(0, 1.0);
        assert_eq!(occ.x, vec![0.75, 0.25]);
    }

    #[test]
    fn forced_move_when_kernel_is_degenerate() {
        let g = Graph::linear(2).unwrap();
        let cfg = ScheduleConfig {
            exploration: Exploration::Constant { c: 1.0 },
            epsilon0: 1e-300,
            alpha_mode: AlphaMode::Fixed,
            ..ScheduleConfig::default()
        };
        let rm = RewardModel::noiseless(vec![1.0, 1.0]).unwrap();
        let mut s = WalkState::new(2, 0, &cfg);
        s.sched.eps = 0.0;
        s.occ.x = vec![0.0, 1.0];
        s.occ.mu_hat = vec![0.0, 1.0];
        let mut scratch = Vec::new();
        for seed in 0..20 {
            let mut t = s.clone();
            step(&mut t, &g, &rm, &cfg, &mut rng_from_seed(seed), &mut scratch);
            assert_eq!(t.current, 1);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let g = Graph::two_cliques(2, 3).unwrap();
        let rm = RewardModel::new(vec![1.0, 1.0, 0.5, 0.5, 0.5], 0.3).unwrap();
        let cfg = ScheduleConfig::default();
        let a = run(&g, &rm, &cfg, 3000, 42, 1, &StartPolicy::Uniform).unwrap();
        let b = run(&g, &rm, &cfg, 3000, 42, 1, &StartPolicy::Uniform).unwrap();
        assert_eq!(a, b);
        let c = run(&g, &rm, &cfg, 3000, 43, 1, &StartPolicy::Uniform).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_step_run() {
        let g = Graph::complete(3).unwrap();
        let rm = RewardModel::noiseless(vec![1.0, 2.0, 3.0]).unwrap();
        let t = run(&g, &rm, &ScheduleConfig::default(), 1, 7, 100, &StartPolicy::Uniform).unwrap();
        assert_eq!(t.snapshots.len(), 2);
        let last = t.snapshots.last().unwrap();
        assert_eq!(last.n, 1);
        assert_eq!(last.x.iter().filter(|&&v| v == 1.0).count(), 1);
    }

    #[test]
    fn run_rejects_bad_inputs() {
        let g = Graph::complete(3).unwrap();
        let rm = RewardModel::noiseless(vec![1.0, 2.0]).unwrap();
        let cfg = ScheduleConfig::default();
        assert!(run(&g, &rm, &cfg, 10, 0, 1, &StartPolicy::Uniform).is_err());
        let rm = RewardModel::noiseless(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(run(&g, &rm, &cfg, 0, 0, 1, &StartPolicy::Uniform).is_err());
        assert!(run(&g, &rm, &cfg, 5, 0, 1, &StartPolicy::Node(3)).is_err());
        assert!(RewardModel::new(vec![1.0, 0.0], 0.0).is_err());
        assert!(RewardModel::new(vec![1.0], -1.0).is_err());
    }
}
