//! Mean-field analysis of the walk at a frozen exponent `α`.
//!
//! With `f_i = (μ_i x_i)^α`, the limit kernel from `i` picks `j ∈ N(i)` with
//! probability `f_j / Σ_{N(i)} f`. Its stationary law
//! `π̃_i ∝ f_i Σ_{N(i)} f_k` satisfies local balance, and the frequencies
//! track the flow `ẋ = π̃(x) - x`, a time change of the replicator dynamics
//! for the potential `Ψ = (1/2α) Σ a_ij f_i f_j`.
//!
//! Powers are evaluated in log space and normalised by the largest weight,
//! so kernels and stationary laws depend on `μ` only through ratios.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg;

/// Relative tolerance for ties in `argmax μ`.
pub const TIE_RTOL: f64 = 1e-12;

/// Components below this are reported as boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

fn check_mu(mu: &[f64]) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::InvalidSize("empty reward vector".into()));
    }
    if let Some(bad) = mu.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("rewards must be positive, got {bad}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")));
    }
    Ok(())
}

fn check_interior(x: &[f64]) -> Result<()> {
    if let Some((i, v)) = x.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NotInterior(format!("x_{} = {v}", i + 1)));
    }
    Ok(())
}

fn check_inputs(x: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<()> {
    check_mu(mu)?;
    check_alpha(alpha)?;
    let m = g.node_count();
    if x.len() != m || mu.len() != m {
        return Err(Error::InvalidSize(format!(
            "graph has {m} nodes, x has {}, μ has {}",
            x.len(),
            mu.len()
        )));
    }
    check_interior(x)
}

/// `f / max f` for `f_i = (μ_i x_i)^α`.
fn relative_weights(x: &[f64], mu: &[f64], alpha: f64) -> Vec<f64> {
    let logs: Vec<f64> = x
        .iter()
        .zip(mu)
        .map(|(xi, mi)| alpha * (mi.ln() + xi.ln()))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().map(|l| (l - top).exp()).collect()
}

fn neighbour_sums(g: &Graph, w: &[f64]) -> Vec<f64> {
    (0..g.node_count())
        .map(|i| g.neighbors(i).iter().map(|&j| w[j]).sum())
        .collect()
}

/// Dense row-stochastic matrix, zero off the neighbourhood pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitKernel {
    pub p: Vec<Vec<f64>>,
}

impl LimitKernel {
    pub fn size(&self) -> usize {
        self.p.len()
    }
}

pub fn limit_kernel(x: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<LimitKernel> {
    check_inputs(x, g, mu, alpha)?;
    let m = g.node_count();
    let w = relative_weights(x, mu, alpha);
    let sums = neighbour_sums(g, &w);
    let p = (0..m)
        .map(|i| {
            let mut row = vec![0.0; m];
            for &j in g.neighbors(i) {
                row[j] = w[j] / sums[i];
            }
            row
        })
        .collect();
    Ok(LimitKernel { p })
}

/// `π̃_i ∝ f_i Σ_{N(i)} f_k`.
pub fn stationary_closed_form(x: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_inputs(x, g, mu, alpha)?;
    Ok(stationary_unchecked(x, g, mu, alpha))
}

fn stationary_unchecked(x: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Vec<f64> {
    let w = relative_weights(x, mu, alpha);
    let sums = neighbour_sums(g, &w);
    let mass: Vec<f64> = w.iter().zip(&sums).map(|(a, b)| a * b).collect();
    let z: f64 = mass.iter().sum();
    mass.iter().map(|v| v / z).collect()
}

/// Largest `|π_i p_ij - π_j p_ji|` over all ordered pairs.
pub fn local_balance_violation(pi: &[f64], kernel: &LimitKernel) -> f64 {
    let m = kernel.size();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            worst = worst.max((pi[i] * kernel.p[i][j] - pi[j] * kernel.p[j][i]).abs());
        }
    }
    worst
}

/// Power iteration `π ← πP` from the uniform vector until
/// `‖πP - π‖∞ < tol`.
pub fn stationary_power_iteration(kernel: &LimitKernel, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let m = kernel.size();
    if m == 0 {
        return Err(Error::InvalidSize("empty kernel".into()));
    }
    let mut pi = vec![1.0 / m as f64; m];
    let mut next = vec![0.0; m];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in kernel.p.iter().enumerate() {
            for (j, pij) in row.iter().enumerate() {
                next[j] += pi[i] * pij;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        residual = pi
            .iter()
            .zip(&next)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        std::mem::swap(&mut pi, &mut next);
        if residual < tol {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialReport {
    /// `Ψ(x) = (1/2α) Σ a_ij f_i f_j`.
    pub value: f64,
    /// `φ_i = ∂Ψ/∂x_i = f_i Σ_{N(i)} f_j / x_i`.
    pub gradient: Vec<f64>,
    /// `Σ z_i (φ_i - φ̄)²` with `z = x/Σx` and `φ̄ = Σ z_j φ_j`: the rate of
    /// change of `Ψ` along the replicator flow.
    pub lyapunov: f64,
}

/// `Ψ` and its gradient with unnormalised weights. `x` need only be
/// positive; it is not projected onto the simplex.
pub fn potential(x: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<PotentialReport> {
    check_inputs(x, g, mu, alpha)?;
    let f: Vec<f64> = x
        .iter()
        .zip(mu)
        .map(|(xi, mi)| (alpha * (mi.ln() + xi.ln())).exp())
        .collect();
    let sums = neighbour_sums(g, &f);
    let value = f.iter().zip(&sums).map(|(a, b)| a * b).sum::<f64>() / (2.0 * alpha);
    let gradient: Vec<f64> = (0..x.len()).map(|i| f[i] * sums[i] / x[i]).collect();
    let total: f64 = x.iter().sum();
    let mean: f64 = x.iter().zip(&gradient).map(|(xi, p)| xi * p).sum::<f64>() / total;
    let lyapunov = x
        .iter()
        .zip(&gradient)
        .map(|(xi, p)| xi / total * (p - mean).powi(2))
        .sum();
    Ok(PotentialReport {
        value,
        gradient,
        lyapunov,
    })
}

/// `ż_i = z_i (φ_i - Σ_j z_j φ_j)`.
pub fn replicator_rhs(z: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let grad = potential(z, g, mu, alpha)?.gradient;
    let mean: f64 = z.iter().zip(&grad).map(|(a, b)| a * b).sum();
    Ok(z.iter().zip(&grad).map(|(zi, p)| zi * (p - mean)).collect())
}

/// `ẋ_i = x_i φ_i / Σ_k x_k φ_k - x_i`, which equals `π̃_i(x) - x_i`.
pub fn scaled_rhs(x: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let pi = stationary_closed_form(x, g, mu, alpha)?;
    Ok(pi.iter().zip(x).map(|(p, xi)| p - xi).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    Replicator,
    Scaled,
}

impl Flow {
    fn rhs(self, z: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<Vec<f64>> {
        match self {
            Flow::Replicator => replicator_rhs(z, g, mu, alpha),
            Flow::Scaled => scaled_rhs(z, g, mu, alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub dt_min: f64,
    pub flow: Flow,
    /// Keep every `record_every`-th point (plus the first and last).
    pub record_every: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            dt_min: 1e-6,
            flow: Flow::Replicator,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub z: Vec<f64>,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub points: Vec<PathPoint>,
    /// Smallest sub-step the integrator had to take.
    pub smallest_dt: f64,
}

impl Path {
    pub fn last(&self) -> &PathPoint {
        self.points.last().expect("paths hold the start point")
    }

    /// Largest drop of `Ψ` between consecutive recorded points, measured
    /// against `max(1, |Ψ|)`.
    pub fn worst_relative_decrease(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[0].psi - w[1].psi) / w[0].psi.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

fn rk4(z: &[f64], h: f64, flow: Flow, g: &Graph, mu: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let shifted = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        base.iter().zip(k).map(|(b, d)| b + s * d).collect()
    };
    let k1 = flow.rhs(z, g, mu, alpha)?;
    let k2 = flow.rhs(&shifted(z, &k1, h / 2.0), g, mu, alpha)?;
    let k3 = flow.rhs(&shifted(z, &k2, h / 2.0), g, mu, alpha)?;
    let k4 = flow.rhs(&shifted(z, &k3, h), g, mu, alpha)?;
    let mut out: Vec<f64> = (0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    check_interior(&out)?;
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// Advances by `h`, splitting the step in halves whenever an RK4 stage
/// leaves the open simplex.
fn advance(
    z: &[f64],
    h: f64,
    opts: &IntegrateOptions,
    g: &Graph,
    mu: &[f64],
    alpha: f64,
    smallest: &mut f64,
) -> Result<Vec<f64>> {
    match rk4(z, h, opts.flow, g, mu, alpha) {
        Ok(next) => {
            *smallest = smallest.min(h);
            Ok(next)
        }
        Err(Error::NotInterior(_)) if h / 2.0 >= opts.dt_min => {
            let mid = advance(z, h / 2.0, opts, g, mu, alpha, smallest)?;
            advance(&mid, h / 2.0, opts, g, mu, alpha, smallest)
        }
        Err(Error::NotInterior(what)) => Err(Error::Integration(format!(
            "step left the simplex below dt_min = {} ({what})",
            opts.dt_min
        ))),
        Err(e) => Err(e),
    }
}

fn check_start(z0: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<()> {
    check_inputs(z0, g, mu, alpha)?;
    let total: f64 = z0.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "start point must lie on the simplex, Σ z = {total}"
        )));
    }
    Ok(())
}

/// RK4 on the chosen flow for `steps` steps of size `opts.dt`.
pub fn integrate_replicator(
    z0: &[f64],
    g: &Graph,
    mu: &[f64],
    alpha: f64,
    steps: usize,
    opts: &IntegrateOptions,
) -> Result<Path> {
    check_start(z0, g, mu, alpha)?;
    if !(opts.dt > 0.0 && opts.dt_min > 0.0 && opts.dt_min <= opts.dt) {
        return Err(Error::InvalidParameter("need 0 < dt_min <= dt".into()));
    }
    let every = opts.record_every.max(1);
    let psi = |z: &[f64]| potential(z, g, mu, alpha).map(|r| r.value);
    let mut z = z0.to_vec();
    let mut points = vec![PathPoint {
        t: 0.0,
        psi: psi(&z)?,
        z: z.clone(),
    }];
    let mut smallest = opts.dt;
    for k in 1..=steps {
        z = advance(&z, opts.dt, opts, g, mu, alpha, &mut smallest)?;
        if k % every == 0 || k == steps {
            points.push(PathPoint {
                t: k as f64 * opts.dt,
                psi: psi(&z)?,
                z: z.clone(),
            });
        }
    }
    Ok(Path {
        points,
        smallest_dt: smallest,
    })
}

/// `‖x - π̃(x)‖∞`: zero exactly at fixed points of the stationary map.
pub fn fixed_point_residual(x: &[f64], g: &Graph, mu: &[f64], alpha: f64) -> Result<f64> {
    let pi = stationary_closed_form(x, g, mu, alpha)?;
    Ok(pi.iter().zip(x).fold(0.0f64, |acc, (p, xi)| acc.max((p - xi).abs())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointResult {
    pub point: Vec<f64>,
    pub residual: f64,
    pub location: Location,
    pub alpha: f64,
    /// Whether the residual fell below the requested tolerance.
    pub converged: bool,
    /// Flow time spent.
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumOptions {
    pub integrate: IntegrateOptions,
    pub tol: f64,
    pub max_time: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            integrate: IntegrateOptions {
                flow: Flow::Scaled,
                ..IntegrateOptions::default()
            },
            tol: 1e-10,
            max_time: 1e4,
        }
    }
}

fn classify(x: &[f64]) -> Location {
    if x.iter().all(|&v| v >= BOUNDARY_TOL) {
        Location::Interior
    } else {
        Location::Boundary
    }
}

/// Integrates from `z0` until the fixed-point residual drops below
/// `opts.tol` or `opts.max_time` runs out. The residual is reported either
/// way.
pub fn find_equilibrium(
    z0: &[f64],
    g: &Graph,
    mu: &[f64],
    alpha: f64,
    opts: &EquilibriumOptions,
) -> Result<FixedPointResult> {
    check_start(z0, g, mu, alpha)?;
    let io = &opts.integrate;
    // Check the residual every unit of flow time.
    let chunk = (1.0 / io.dt).ceil().max(1.0) as usize;
    let mut z = z0.to_vec();
    let mut t = 0.0;
    let mut smallest = io.dt;
    let mut residual = fixed_point_residual(&z, g, mu, alpha)?;
    while residual >= opts.tol && t < opts.max_time {
        for _ in 0..chunk {
            z = advance(&z, io.dt, io, g, mu, alpha, &mut smallest)?;
        }
        t += chunk as f64 * io.dt;
        residual = fixed_point_residual(&z, g, mu, alpha)?;
    }
    Ok(FixedPointResult {
        location: classify(&z),
        converged: residual < opts.tol,
        point: z,
        residual,
        alpha,
        time: t,
    })
}

/// Closed-form optimum on the complete graph for `α ∈ (0, 1)`:
/// `x_i ∝ μ_i^{α/(1-α)}`.
pub fn unconstrained_fixed_point(mu: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_mu(mu)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the closed form needs α in (0, 1), got {alpha}"
        )));
    }
    let k = alpha / (1.0 - alpha);
    let logs: Vec<f64> = mu.iter().map(|m| k * m.ln()).collect();
    Ok(softmax(&logs))
}

fn softmax(logs: &[f64]) -> Vec<f64> {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationResult {
    pub epsilon: f64,
    /// `1/m + (1-ε)(μ_i^α/Σ μ^α - 1/m)`.
    pub first_order: Vec<f64>,
    /// Solution of `x = (1-ε) f(x)/Σ f(x) + ε/m`.
    pub exact: Vec<f64>,
    /// `‖exact - first_order‖∞`.
    pub gap: f64,
    pub iterations: usize,
}

/// Expansion of the ε-perturbed unconstrained fixed point around the
/// uniform law, next to the exact point from damped Picard iteration.
pub fn epsilon_perturbation(mu: &[f64], alpha: f64, eps: f64) -> Result<PerturbationResult> {
    check_mu(mu)?;
    check_alpha(alpha)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1], got {eps}")));
    }
    let m = mu.len() as f64;
    let base = softmax(&mu.iter().map(|v| alpha * v.ln()).collect::<Vec<_>>());
    let first_order: Vec<f64> = base
        .iter()
        .map(|b| 1.0 / m + (1.0 - eps) * (b - 1.0 / m))
        .collect();

    const DAMPING: f64 = 0.5;
    const MAX_ITERS: usize = 1_000_000;
    let map = |x: &[f64]| -> Vec<f64> {
        let f = softmax(
            &x.iter()
                .zip(mu)
                .map(|(xi, mi)| alpha * (mi.ln() + xi.ln()))
                .collect::<Vec<_>>(),
        );
        f.iter().map(|fi| (1.0 - eps) * fi + eps / m).collect()
    };
    let mut x = vec![1.0 / m; mu.len()];
    let mut iterations = 0;
    loop {
        let tx = map(&x);
        let step = tx.iter().zip(&x).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        if step < 1e-15 {
            break;
        }
        iterations += 1;
        if iterations >= MAX_ITERS {
            return Err(Error::NoConvergence {
                iterations,
                residual: step,
            });
        }
        x = x.iter().zip(&tx).map(|(a, b)| (1.0 - DAMPING) * a + DAMPING * b).collect();
    }
    let gap = x
        .iter()
        .zip(&first_order)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(PerturbationResult {
        epsilon: eps,
        first_order,
        exact: x,
        gap,
        iterations,
    })
}

/// Indices attaining `max μ` up to relative tolerance [`TIE_RTOL`].
pub fn optimal_set(mu: &[f64]) -> Vec<usize> {
    let top = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..mu.len())
        .filter(|&i| mu[i] >= top - TIE_RTOL * top.abs())
        .collect()
}

pub fn mass_on(x: &[f64], nodes: &[usize]) -> f64 {
    nodes.iter().map(|&i| x[i]).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub alpha: f64,
    pub fixed_point: Option<FixedPointResult>,
    /// `Σ_{i∈D} π_i` at the fixed point found.
    pub optimal_mass: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationTable {
    /// Optimal nodes, 0-based.
    pub optimal: Vec<usize>,
    pub rows: Vec<ConcentrationRow>,
}

/// Fixed points found from `z0` for each exponent in `alphas`
/// (strictly increasing), with the mass they put on `argmax μ`.
pub fn alpha_concentration_check(
    g: &Graph,
    mu: &[f64],
    alphas: &[f64],
    z0: &[f64],
    opts: &EquilibriumOptions,
) -> Result<ConcentrationTable> {
    check_mu(mu)?;
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("α list must be strictly increasing".into()));
    }
    let optimal = optimal_set(mu);
    let rows = alphas
        .iter()
        .map(|&alpha| match find_equilibrium(z0, g, mu, alpha, opts) {
            Ok(fp) => ConcentrationRow {
                alpha,
                optimal_mass: Some(mass_on(&fp.point, &optimal)),
                fixed_point: Some(fp),
                error: None,
            },
            Err(e) => ConcentrationRow {
                alpha,
                fixed_point: None,
                optimal_mass: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(ConcentrationTable { optimal, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenBound {
    /// Least eigenvalue of `diag(p) - ppᵀ` on `{y : Σ y = 0}`.
    pub lambda_min: f64,
    /// `ε / m_i`.
    pub bound: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Smallest eigenvalue of the one-step indicator covariance restricted to
/// the zero-sum hyperplane, against the lower bound `ε/m_i`.
///
/// The bound holds because `yᵀQy = Var_p(y) >= min_j p_j ‖y‖²` for
/// zero-sum `y`, and every mixture component is at least `ε/m_i`.
pub fn covariance_eigen_bound(p: &[f64], eps: f64, m_i: usize) -> Result<EigenBound> {
    if m_i < 2 || p.len() != m_i {
        return Err(Error::InvalidSize(format!(
            "need m_i >= 2 probabilities, got m_i = {m_i} and {} entries",
            p.len()
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1], got {eps}")));
    }
    let bound = eps / m_i as f64;
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("p sums to {total}")));
    }
    if let Some(low) = p.iter().find(|&&v| v < bound - 1e-15) {
        return Err(Error::InvalidParameter(format!(
            "component {low} is below the mixture floor ε/m_i = {bound}"
        )));
    }
    let q: Vec<Vec<f64>> = (0..m_i)
        .map(|a| {
            (0..m_i)
                .map(|b| if a == b { p[a] - p[a] * p[a] } else { -p[a] * p[b] })
                .collect()
        })
        .collect();
    let restricted = linalg::restrict_to_zero_sum(&q);
    let lambda_min = linalg::symmetric_eigenvalues(&restricted)[0];
    Ok(EigenBound {
        lambda_min,
        bound,
        margin: lambda_min - bound,
        holds: lambda_min >= bound - 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_on_three_chain() {
        let g = Graph::linear(3).unwrap();
        let k = limit_kernel(&[0.5, 0.25, 0.25], &g, &[2.0, 1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(k.p[1][0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(k.p[1][1], 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(k.p[1][2], 1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(k.p[0][2], 0.0);
    }

    #[test]
    fn boundary_points_rejected() {
        let g = Graph::linear(3).unwrap();
        let mu = [1.0, 1.0, 1.0];
        for x in [[0.5, 0.5, 0.0], [1.0, 0.0, 0.0]] {
            assert!(matches!(limit_kernel(&x, &g, &mu, 1.0), Err(Error::NotInterior(_))));
            assert!(stationary_closed_form(&x, &g, &mu, 1.0).is_err());
            assert!(potential(&x, &g, &mu, 1.0).is_err());
        }
    }

    #[test]
    fn complete_graph_uniform_is_uniform() {
        let g = Graph::complete(5).unwrap();
        let x = [0.2; 5];
        let mu = [0.7; 5];
        for alpha in [0.1, 1.0, 7.0] {
            let k = limit_kernel(&x, &g, &mu, alpha).unwrap();
            assert!(k.p.iter().flatten().all(|v| (v - 0.2).abs() < 1e-15));
            let pi = stationary_closed_form(&x, &g, &mu, alpha).unwrap();
            assert!(pi.iter().all(|v| (v - 0.2).abs() < 1e-15));
            let v = replicator_rhs(&x, &g, &mu, alpha).unwrap();
            assert!(v.iter().all(|d| d.abs() < 1e-15));
        }
    }

    #[test]
    fn power_iteration_two_state() {
        let k = LimitKernel {
            p: vec![vec![0.75, 0.25], vec![0.5, 0.5]],
        };
        let pi = stationary_power_iteration(&k, 1e-15, 10_000).unwrap();
        assert_relative_eq!(pi[0], 2.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(pi[1], 1.0 / 3.0, epsilon = 1e-13);

        let lazy = LimitKernel {
            p: vec![vec![0.9, 0.05, 0.05], vec![0.05, 0.9, 0.05], vec![0.05, 0.05, 0.9]],
        };
        let pi = stationary_power_iteration(&lazy, 1e-15, 10_000).unwrap();
        assert!(pi.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-14));
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        let k = LimitKernel {
            p: vec![vec![0.999, 0.001], vec![0.002, 0.998]],
        };
        match stationary_power_iteration(&k, 1e-15, 3) {
            Err(Error::NoConvergence { iterations, .. }) => assert_eq!(iterations, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn star_closed_form_matches_power_iteration() {
        let g = Graph::star(4, 3).unwrap();
        let x = [0.25; 4];
        let mu = [1.0; 4];
        let pi = stationary_closed_form(&x, &g, &mu, 1.0).unwrap();
        let k = limit_kernel(&x, &g, &mu, 1.0).unwrap();
        let oracle = stationary_power_iteration(&k, 1e-15, 100_000).unwrap();
        for (a, b) in pi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
        // Leaves see {self, centre}, the centre sees everyone.
        assert_relative_eq!(pi[3], 4.0 / 10.0, epsilon = 1e-15);
        assert!(local_balance_violation(&pi, &k) < 1e-15);
    }

    #[test]
    fn potential_on_two_nodes() {
        let g = Graph::complete(2).unwrap();
        let r = potential(&[0.5, 0.5], &g, &[1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(r.value, 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.gradient[0], 1.0, epsilon = 1e-15);
        assert_eq!(r.lyapunov, 0.0);
    }

    #[test]
    fn scaled_flow_is_stationary_minus_x() {
        let g = Graph::linear(4).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4];
        let mu = [2.0, 0.25, 0.5, 1.0];
        let v = scaled_rhs(&x, &g, &mu, 1.3).unwrap();
        let r = replicator_rhs(&x, &g, &mu, 1.3).unwrap();
        let grad = potential(&x, &g, &mu, 1.3).unwrap().gradient;
        let mean: f64 = x.iter().zip(&grad).map(|(a, b)| a * b).sum();
        // The two flows differ by the positive factor Σ x_k φ_k.
        for i in 0..4 {
            assert_relative_eq!(r[i], mean * v[i], max_relative = 1e-12);
        }
        assert!(v.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn equilibrium_start_stays_put() {
        let g = Graph::complete(3).unwrap();
        let mu = [2.0, 1.0, 0.5];
        let alpha = 0.5;
        let star = unconstrained_fixed_point(&mu, alpha).unwrap();
        let path = integrate_replicator(&star, &g, &mu, alpha, 500, &IntegrateOptions::default()).unwrap();
        for pt in &path.points {
            for (a, b) in pt.z.iter().zip(&star) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn linear_chain_alpha_two_converges() {
        let g = Graph::linear(4).unwrap();
        let mu = [2.0, 0.25, 0.5, 1.0];
        let z0 = [0.26, 0.25, 0.25, 0.24];
        let opts = EquilibriumOptions {
            integrate: IntegrateOptions::default(),
            ..EquilibriumOptions::default()
        };
        let fp = find_equilibrium(&z0, &g, &mu, 2.0, &opts).unwrap();
        assert!(fp.converged, "{fp:?}");
        assert!(fp.residual < 1e-6);
        let path = integrate_replicator(&z0, &g, &mu, 2.0, 2000, &IntegrateOptions::default()).unwrap();
        assert!(path.worst_relative_decrease() <= 1e-9);
    }

    #[test]
    fn closed_form_optimum() {
        let mu = [2.0, 0.25, 0.5, 1.0];
        let x = unconstrained_fixed_point(&mu, 0.85).unwrap();
        // Independent evaluation of μ^(17/3) normalised.
        let w: Vec<f64> = mu.iter().map(|m: &f64| m.powf(0.85 / 0.15)).collect();
        let z: f64 = w.iter().sum();
        for (a, b) in x.iter().zip(&w) {
            assert_relative_eq!(*a, b / z, max_relative = 1e-12);
        }
        assert_relative_eq!(x[0], 0.9803, epsilon = 5e-5);
        assert_relative_eq!(x[1], 7.5e-6, epsilon = 5e-7);
        assert_relative_eq!(x[2], 3.8e-4, epsilon = 5e-6);
        assert_relative_eq!(x[3], 0.0193, epsilon = 5e-5);

        let half = unconstrained_fixed_point(&mu, 0.5).unwrap();
        for (a, b) in half.iter().zip([0.5333, 0.0667, 0.1333, 0.2667]) {
            assert_relative_eq!(*a, b, epsilon = 5e-5);
        }
        assert!(unconstrained_fixed_point(&mu, 1.0).is_err());
        assert!(unconstrained_fixed_point(&mu, 0.0).is_err());
    }

    #[test]
    fn closed_form_is_an_equilibrium_on_the_complete_graph() {
        let g = Graph::complete(4).unwrap();
        let mu = [2.0, 0.25, 0.5, 1.0];
        let x = unconstrained_fixed_point(&mu, 0.6).unwrap();
        assert!(fixed_point_residual(&x, &g, &mu, 0.6).unwrap() < 1e-14);
    }

    #[test]
    fn perturbation_values() {
        let r = epsilon_perturbation(&[2.0, 1.0], 1.0, 0.9).unwrap();
        assert_relative_eq!(r.first_order[0], 0.516_666_666_666_666_7, epsilon = 1e-15);
        let one = epsilon_perturbation(&[2.0, 0.3, 5.0], 2.0, 1.0).unwrap();
        assert!(one.exact.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert!(one.gap < 1e-15);

        let mu = [2.0, 0.25, 0.5, 1.0];
        let far = epsilon_perturbation(&mu, 1.0, 0.9).unwrap();
        let near = epsilon_perturbation(&mu, 1.0, 0.99).unwrap();
        let ratio = far.gap / near.gap;
        assert!((50.0..=200.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn optimal_set_ties() {
        assert_eq!(optimal_set(&[1.0, 3.0, 3.0 * (1.0 - 1e-13), 2.0]), vec![1, 2]);
        assert_eq!(optimal_set(&[1.0, 3.0, 3.0 * (1.0 - 1e-9)]), vec![1]);
        assert_eq!(optimal_set(&[0.5; 3]), vec![0, 1, 2]);
    }

    #[test]
    fn concentration_on_complete_graph() {
        let g = Graph::complete(4).unwrap();
        let mu = [2.0, 0.25, 0.5, 1.0];
        let z0 = [0.25; 4];
        let t = alpha_concentration_check(&g, &mu, &[1.0, 2.0, 4.0, 8.0, 16.0], &z0, &EquilibriumOptions::default())
            .unwrap();
        assert_eq!(t.optimal, vec![0]);
        let masses: Vec<f64> = t.rows.iter().map(|r| r.optimal_mass.unwrap()).collect();
        for w in masses.windows(2) {
            assert!(w[1] >= w[0], "{masses:?}");
        }
        assert!(alpha_concentration_check(&g, &mu, &[2.0, 1.0], &z0, &EquilibriumOptions::default()).is_err());
    }

    #[test]
    fn uniform_rewards_put_everything_in_d() {
        let g = Graph::linear(3).unwrap();
        let t = alpha_concentration_check(&g, &[1.0; 3], &[0.5, 3.0], &[0.2, 0.3, 0.5], &EquilibriumOptions::default())
            .unwrap();
        for r in t.rows {
            assert_relative_eq!(r.optimal_mass.unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigen_bound_equality_case() {
        let r = covariance_eigen_bound(&[0.5, 0.5], 1.0, 2).unwrap();
        assert_eq!(r.lambda_min, 0.5);
        assert_eq!(r.bound, 0.5);
        assert!(r.holds);
    }

    #[test]
    fn eigen_bound_corner_and_rejections() {
        for m_i in 2..=8usize {
            for eps in [0.01, 0.3, 1.0] {
                let floor = eps / m_i as f64;
                let mut p = vec![floor; m_i];
                p[0] = 1.0 - (m_i as f64 - 1.0) * floor;
                let r = covariance_eigen_bound(&p, eps, m_i).unwrap();
                assert!(r.holds, "m_i={m_i} eps={eps}: {r:?}");
            }
        }
        assert!(covariance_eigen_bound(&[0.95, 0.05], 0.2, 2).is_err());
        assert!(covariance_eigen_bound(&[1.0], 0.5, 1).is_err());
        assert!(covariance_eigen_bound(&[0.6, 0.6], 0.5, 2).is_err());
    }
}
