//! Exploration and cooling sequences.
//!
//! Schedule indices start at `n = 1`: the recursion example for `c(n)`
//! evaluates to 1 at `n = 0`, which would wipe out exploration after one
//! step. Logarithms are natural throughout.
//!
//! The walk consumes schedule index `n + 1` when it moves from step `n` to
//! step `n + 1`, so the first transition of every run uses `ε(1)` and `α(1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step size of the frequency recursion, `a(n) = 1/(n+1)`.
pub fn step_size(n: u64) -> f64 {
    1.0 / (n as f64 + 1.0)
}

/// `c(n) = 1/(1 + (n+1) ln(n+1))`, defined for `n >= 1`.
pub fn default_c(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "default_c is defined for n >= 1 only".into(),
        ));
    }
    let k = n as f64 + 1.0;
    Ok(1.0 / (1.0 + k * k.ln()))
}

/// Decrement of the cooling recursion `T(n+1) = (1 - b(n)) T(n)` that
/// reproduces `α(n+1) = α(n) (1 - 1/(n ln n))^{-1}`. Defined for `n >= 2`.
pub fn cooling_step(n: u64) -> f64 {
    debug_assert!(n >= 2);
    let n = n as f64;
    1.0 / (n * n.ln())
}

/// Temperature of the simulated-annealing baseline, `γ / ln(1 + k)`, `k >= 1`.
pub fn sa_temperature(k: u64, gamma: f64) -> f64 {
    gamma / (1.0 + k.max(1) as f64).ln()
}

/// How `ε(n)` evolves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Exploration {
    /// `ε(n+1) = (1 - c(n)) ε(n)` with `c(n) = 1/(1 + (n+1) ln(n+1))`.
    RecursionExample,
    /// `ε(n) = min(1, ε0 / ln(n+1))`.
    ExplicitLog,
    /// `ε(n+1) = (1 - c) ε(n)` for a constant `c ∈ [0, 1]`.
    Constant { c: f64 },
    /// `ε(n) = ε0 / n`, the classical ε-greedy choice.
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// `α = 1/T0` forever.
    Fixed,
    /// `α` held at `alpha_burn` for the first `burn_in` indices, then taken
    /// from the cooling recursion started at `T(2) = T0`.
    Cooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub epsilon0: f64,
    /// Initial temperature `T0 = 1/α0`.
    #[serde(rename = "T0", alias = "temperature0")]
    pub temperature0: f64,
    #[serde(rename = "c_mode", alias = "exploration")]
    pub exploration: Exploration,
    pub alpha_mode: AlphaMode,
    pub burn_in: u64,
    pub alpha_burn: f64,
    /// Temperature scale of the annealing baseline.
    pub gamma_sa: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            epsilon0: 1.0,
            // α(2) = 1/40 reaches α ≈ 1.2 by n = 10^5 under the cooling
            // recursion; much softer anchors never concentrate at that scale.
            temperature0: 40.0,
            exploration: Exploration::ExplicitLog,
            alpha_mode: AlphaMode::Cooled,
            burn_in: 1000,
            alpha_burn: 1e-2,
            gamma_sa: 0.1,
        }
    }
}

impl ScheduleConfig {
    /// Fixed exponent `alpha` with the given exploration rule.
    pub fn fixed(alpha: f64, exploration: Exploration) -> Self {
        Self {
            temperature0: 1.0 / alpha,
            exploration,
            alpha_mode: AlphaMode::Fixed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > 0.0 && self.epsilon0 <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon0 must lie in (0, 1], got {}",
                self.epsilon0
            )));
        }
        for (name, v) in [
            ("temperature0", self.temperature0),
            ("alpha_burn", self.alpha_burn),
            ("gamma_sa", self.gamma_sa),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Exploration::Constant { c } = self.exploration {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Config(format!(
                    "constant c must lie in [0, 1], got {c}"
                )));
            }
        }
        Ok(())
    }

    fn explicit_epsilon(&self, n: u64) -> Option<f64> {
        match self.exploration {
            Exploration::ExplicitLog => {
                Some((self.epsilon0 / (n as f64 + 1.0).ln()).min(1.0))
            }
            Exploration::Harmonic => Some(self.epsilon0 / n.max(1) as f64),
            _ => None,
        }
    }

    fn c(&self, n: u64) -> Result<f64> {
        match self.exploration {
            Exploration::RecursionExample => default_c(n),
            Exploration::Constant { c } => Ok(c),
            Exploration::ExplicitLog | Exploration::Harmonic => Err(Error::InvalidParameter(
                "explicit exploration modes have no c(n) recursion".into(),
            )),
        }
    }
}

/// Schedule values at index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub n: u64,
    pub eps: f64,
    /// Temperature in effect, `1/α`.
    pub temp: f64,
    /// State of the cooling recursion; differs from `temp` during burn-in.
    cooling_temp: f64,
}

impl ScheduleState {
    pub fn new(cfg: &ScheduleConfig) -> Self {
        let n = 1;
        let eps = cfg.explicit_epsilon(n).unwrap_or(cfg.epsilon0);
        let cooling_temp = cfg.temperature0;
        let temp = applied_temperature(cfg, n, cooling_temp);
        Self {
            n,
            eps,
            temp,
            cooling_temp,
        }
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.temp
    }

    /// Moves to index `n + 1`.
    pub fn advance(&mut self, cfg: &ScheduleConfig) {
        // c(n) is defined for every n >= 1, the only index this type reaches.
        self.eps = step_epsilon(self, cfg).expect("schedule index starts at 1");
        let (temp, cooling_temp) = next_temperatures(self, cfg);
        self.temp = temp;
        self.cooling_temp = cooling_temp;
        self.n += 1;
    }
}

fn applied_temperature(cfg: &ScheduleConfig, n: u64, cooling_temp: f64) -> f64 {
    match cfg.alpha_mode {
        AlphaMode::Fixed => cfg.temperature0,
        AlphaMode::Cooled if n <= cfg.burn_in => 1.0 / cfg.alpha_burn,
        AlphaMode::Cooled => cooling_temp,
    }
}

/// `ε(n+1)` from the state at index `n`.
pub fn step_epsilon(s: &ScheduleState, cfg: &ScheduleConfig) -> Result<f64> {
    if let Some(eps) = cfg.explicit_epsilon(s.n + 1) {
        return Ok(eps);
    }
    Ok((1.0 - cfg.c(s.n)?) * s.eps)
}

fn next_temperatures(s: &ScheduleState, cfg: &ScheduleConfig) -> (f64, f64) {
    let cooling_temp = match cfg.alpha_mode {
        AlphaMode::Fixed => s.cooling_temp,
        // T(2) = T0; the cooling decrement is undefined at n = 1.
        AlphaMode::Cooled if s.n < 2 => s.cooling_temp,
        AlphaMode::Cooled => s.cooling_temp * (1.0 - cooling_step(s.n)),
    };
    (applied_temperature(cfg, s.n + 1, cooling_temp), cooling_temp)
}

/// `(T(n+1), α(n+1))` from the state at index `n`.
pub fn step_temperature(s: &ScheduleState, cfg: &ScheduleConfig) -> (f64, f64) {
    let (temp, _) = next_temperatures(s, cfg);
    (temp, 1.0 / temp)
}

/// One numeric diagnostic of the schedule conditions.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    /// `(n, statistic)` at logarithmically spaced checkpoints.
    pub samples: Vec<(u64, f64)>,
    pub trending_satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub n_max: u64,
    pub node_count: usize,
    pub partial_sums: PartialSums,
    pub checks: Vec<ConditionCheck>,
    /// Messages for checks trending to violation.
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PartialSums {
    pub c: f64,
    pub eps_pow_m: f64,
    pub a_eps: f64,
    pub b: Option<f64>,
}

impl ConditionReport {
    pub fn all_satisfied(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn is_flagged(&self, name: &str) -> bool {
        self.checks
            .iter()
            .any(|c| c.name == name && !c.trending_satisfied)
    }
}

pub const COND_C_DECREASING: &str = "c(n) decreasing to 0";
pub const COND_NC: &str = "n·c(n) → 0";
pub const COND_SUM_C: &str = "Σ c(n) = ∞";
pub const COND_SUM_EPS_M: &str = "Σ ε(n)^m = ∞";
pub const COND_SUM_A_EPS: &str = "Σ a(n)ε(n) = ∞";
pub const COND_EPS_SQRT: &str = "ε(n) = ω(1/√n)";
pub const COND_SUM_B: &str = "Σ b(n) = ∞";
pub const COND_NB: &str = "n·b(n) → 0";
pub const COND_B_OVER_C: &str = "b(n) = o(c(n))";

/// Evaluates the schedule up to `n_max` and reports how the summability and
/// rate conditions trend. A diagnostic only: divergence is judged with the
/// statistic `n ln n · u(n)`, which stays bounded away from zero for
/// `Σ u(n) = ∞` of Bertrand type and collapses for summable power laws.
pub fn verify_conditions(cfg: &ScheduleConfig, n_max: u64, m: usize) -> Result<ConditionReport> {
    cfg.validate()?;
    if n_max < 100 {
        return Err(Error::InvalidParameter(format!(
            "verify_conditions needs n_max >= 100, got {n_max}"
        )));
    }
    let checkpoints = checkpoints(n_max);
    let cooled = cfg.alpha_mode == AlphaMode::Cooled;
    let mut sums = PartialSums {
        b: cooled.then_some(0.0),
        ..PartialSums::default()
    };

    let mut s = ScheduleState::new(cfg);
    let mut rows: Vec<Row> = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0;
    while s.n <= n_max {
        let n = s.n;
        let eps = s.eps;
        let cool_now = s.cooling_temp;
        s.advance(cfg);
        let c = if eps > 0.0 { 1.0 - s.eps / eps } else { f64::NAN };
        let b = 1.0 - s.cooling_temp / cool_now;

        if c.is_finite() {
            sums.c += c;
        }
        sums.eps_pow_m += eps.powi(m as i32);
        sums.a_eps += step_size(n) * eps;
        if let Some(sb) = sums.b.as_mut() {
            *sb += b;
        }
        if next_cp < checkpoints.len() && n == checkpoints[next_cp] {
            rows.push(Row { n, eps, c, b });
            next_cp += 1;
        }
    }

    let nf = |n: u64| n as f64;
    let bertrand = |n: u64, u: f64| nf(n) * nf(n).ln() * u;
    let mut checks = vec![
        trend(COND_C_DECREASING, &rows, |r| r.c, Trend::ToZero),
        trend(COND_NC, &rows, |r| nf(r.n) * r.c, Trend::ToZero),
        trend(COND_SUM_C, &rows, |r| bertrand(r.n, r.c), Trend::NoCollapse),
        trend(
            COND_SUM_EPS_M,
            &rows,
            |r| bertrand(r.n, r.eps.powi(m as i32)),
            Trend::NoCollapse,
        ),
        trend(
            COND_SUM_A_EPS,
            &rows,
            |r| bertrand(r.n, step_size(r.n) * r.eps),
            Trend::NoCollapse,
        ),
        trend(COND_EPS_SQRT, &rows, |r| r.eps * nf(r.n).sqrt(), Trend::Growing),
    ];
    let mut notes = vec![format!(
        "Σ ε(n)^m uses m = {m}; the interaction of large m with the schedule is not quantified"
    )];
    if cooled {
        // Only indices past burn-in see the cooled exponent.
        let cooled_rows: Vec<Row> = rows.iter().copied().filter(|r| r.n > cfg.burn_in).collect();
        if cooled_rows.len() >= 2 {
            checks.push(trend(COND_SUM_B, &cooled_rows, |r| bertrand(r.n, r.b), Trend::NoCollapse));
            checks.push(trend(COND_NB, &cooled_rows, |r| nf(r.n) * r.b, Trend::ToZero));
            checks.push(trend(COND_B_OVER_C, &cooled_rows, |r| r.b / r.c, Trend::ToZero));
        } else {
            notes.push("n_max too close to burn-in to judge the cooling conditions".into());
        }
    } else {
        notes.push("fixed exponent: b(n) = 0, cooling conditions not applicable".into());
    }
    let flags = checks
        .iter()
        .filter(|c| !c.trending_satisfied)
        .map(|c| format!("{} violated", c.name))
        .collect();
    Ok(ConditionReport {
        n_max,
        node_count: m,
        partial_sums: sums,
        checks,
        flags,
        notes,
    })
}

#[derive(Debug, Clone, Copy)]
struct Row {
    n: u64,
    eps: f64,
    c: f64,
    b: f64,
}

#[derive(Debug, Clone, Copy)]
enum Trend {
    /// Nonnegative and decaying at least like `1/ln n` over the last two
    /// decades, with 5% slack.
    ToZero,
    /// Larger at the end than two decades earlier.
    Growing,
    /// Not collapsed below half of its value two decades earlier.
    NoCollapse,
}

fn trend(name: &'static str, rows: &[Row], stat: impl Fn(&Row) -> f64, kind: Trend) -> ConditionCheck {
    let samples: Vec<(u64, f64)> = rows.iter().map(|r| (r.n, stat(r))).collect();
    let (n_end, end) = *samples.last().expect("at least one checkpoint");
    let target = (n_end / 100).max(samples[0].0);
    let (n_start, start) = *samples
        .iter()
        .rev()
        .find(|(n, _)| *n <= target)
        .unwrap_or(&samples[0]);
    let log_decay = (n_start as f64).ln() / (n_end as f64).ln();
    let trending_satisfied = end.is_finite()
        && start.is_finite()
        && match kind {
            Trend::ToZero => end >= 0.0 && end <= 1.05 * log_decay * start,
            Trend::Growing => end > start,
            Trend::NoCollapse => end > 0.0 && end >= 0.5 * start,
        };
    ConditionCheck {
        name,
        samples,
        trending_satisfied,
    }
}

fn checkpoints(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 10u64;
    while decade < n_max {
        for k in [1, 2, 5] {
            let n = decade * k;
            if n < n_max {
                out.push(n);
            }
        }
        decade *= 10;
    }
    out.push(n_max);
    out
}
