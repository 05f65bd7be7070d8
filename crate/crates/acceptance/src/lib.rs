//! Shared plumbing for the end-to-end acceptance run: bundled config
//! lookup, timed experiment runs and the verdict table.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use reinforced_choice::harness::{run_experiment, Experiment, ExperimentSummary};
use reinforced_choice::Result;

/// Directory holding the experiment configs shipped with the core crate.
pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/configs")
}

/// Loads `<configs>/<name>.json` and runs every seed, writing under `out`.
pub fn run_bundled(name: &str, out: &Path) -> Result<(ExperimentSummary, Duration)> {
    let exp = Experiment::load(&configs_dir().join(format!("{name}.json")))?;
    let started = Instant::now();
    let summary = run_experiment(&exp, out)?;
    Ok((summary, started.elapsed()))
}

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: &'static str, title: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            id,
            title,
            passed,
            detail: detail.into(),
        }
    }

    /// A criterion that could not be evaluated counts as failed.
    pub fn errored(id: &'static str, title: &'static str, err: impl fmt::Display) -> Self {
        Self::new(id, title, false, format!("error: {err}"))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} criterion {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

/// `‖a - b‖∞`.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Elapsed time as a short human string.
pub fn secs(d: Duration) -> String {
    if d < Duration::from_millis(1) {
        format!("{:.1} µs", d.as_secs_f64() * 1e6)
    } else {
        format!("{:.3} s", d.as_secs_f64())
    }
}
