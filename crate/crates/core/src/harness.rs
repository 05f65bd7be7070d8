//! Experiment configs, multi-seed runs, persisted trajectories and
//! summaries.
//!
//! Layout under the output root:
//!
//! ```text
//! <out>/<name>/<seed>/trajectory.csv   n,xi,eps,alpha,x_1..x_m (xi 1-based)
//! <out>/<name>/<seed>/meta.json
//! <out>/<name>/summary.json
//! ```
//!
//! Summaries are computed from the final rows of the CSV files, so
//! [`summarize_dir`] reproduces them from disk alone.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{mass_on, optimal_set};
use crate::baselines::{run_greedy, run_sa};
use crate::error::{Error, Result};
use crate::graph::{load_graph, Graph};
use crate::schedule::{Exploration, ScheduleConfig};
use crate::walk::{run, RewardModel, Snapshot, StartPolicy, Trajectory, RNG_ALGORITHM};

pub const SCHEMA_VERSION: u32 = 1;

/// Overrides `output_dir` of every config when set.
pub const OUT_DIR_ENV: &str = "REINFORCED_CHOICE_OUT";

/// Graph generators and files. Node numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Linear { m: usize },
    Star { m: usize, center: usize },
    Complete { m: usize },
    TwoCliques { m1: usize, m2: usize },
    /// Relative paths are resolved against the config file's directory.
    File { path: PathBuf },
}

impl GraphSpec {
    /// Builds the graph; returns loader repair notes for files.
    pub fn build(&self, base: &Path) -> Result<(Graph, Vec<String>)> {
        let g = match self {
            GraphSpec::Linear { m } => Graph::linear(*m)?,
            GraphSpec::Star { m, center } => {
                if *center == 0 || center > m {
                    return Err(Error::Config(format!("star centre {center} outside 1..={m}")));
                }
                Graph::star(*m, center - 1)?
            }
            GraphSpec::Complete { m } => Graph::complete(*m)?,
            GraphSpec::TwoCliques { m1, m2 } => Graph::two_cliques(*m1, *m2)?,
            GraphSpec::File { path } => {
                let loaded = load_graph(&base.join(path))?;
                return Ok((loaded.graph, loaded.repairs));
            }
        };
        Ok((g, Vec::new()))
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Linear { m } => write!(f, "linear:{m}"),
            GraphSpec::Star { m, center } => write!(f, "star:{m}:{center}"),
            GraphSpec::Complete { m } => write!(f, "complete:{m}"),
            GraphSpec::TwoCliques { m1, m2 } => write!(f, "two_cliques:{m1}:{m2}"),
            GraphSpec::File { path } => write!(f, "file:{}", path.display()),
        }
    }
}

/// Parses `linear:4`, `star:4:4`, `complete:4`, `two_cliques:2:8` or
/// `file:<path>`.
impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse graph spec {s:?}"));
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(GraphSpec::File { path: path.into() });
        }
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<usize> {
            parts.get(i).and_then(|p| p.parse().ok()).ok_or_else(bad)
        };
        let spec = match (parts[0], parts.len()) {
            ("linear", 2) => GraphSpec::Linear { m: num(1)? },
            ("complete", 2) => GraphSpec::Complete { m: num(1)? },
            ("star", 3) => GraphSpec::Star {
                m: num(1)?,
                center: num(2)?,
            },
            ("two_cliques", 3) => GraphSpec::TwoCliques {
                m1: num(1)?,
                m2: num(2)?,
            },
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

/// Reward noise `ζ ~ N(0, σ²)`, given by variance or standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    Variance(f64),
    Std(f64),
}

impl Noise {
    pub fn std(self) -> f64 {
        match self {
            Noise::Variance(v) => v.sqrt(),
            Noise::Std(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Reinforced,
    Sa,
    Greedy,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Reinforced => "reinforced",
            Algorithm::Sa => "sa",
            Algorithm::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { base: u64, count: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { base, count } => (0..*count).map(|k| base + k).collect(),
        }
    }
}

/// Start node policy, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    #[default]
    Uniform,
    Node(usize),
    UniformIn(Vec<usize>),
}

impl StartSpec {
    fn policy(&self, m: usize) -> Result<StartPolicy> {
        let zero_based = |i: usize| {
            if i == 0 || i > m {
                Err(Error::Config(format!("start node {i} outside 1..={m}")))
            } else {
                Ok(i - 1)
            }
        };
        Ok(match self {
            StartSpec::Uniform => StartPolicy::Uniform,
            StartSpec::Node(i) => StartPolicy::Node(zero_based(*i)?),
            StartSpec::UniformIn(set) => {
                if set.is_empty() {
                    return Err(Error::Config("uniform_in needs at least one node".into()));
                }
                StartPolicy::UniformIn(set.iter().map(|&i| zero_based(i)).collect::<Result<_>>()?)
            }
        })
    }
}

/// Pass/fail thresholds evaluated on the final frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum AcceptanceCheck {
    /// At least `min_seeds` seeds put mass `>= threshold` on `nodes`
    /// (1-based; defaults to the optimal set).
    MassAtLeast {
        #[serde(default)]
        nodes: Option<Vec<usize>>,
        threshold: f64,
        min_seeds: usize,
    },
    /// The coordinatewise median of the final vectors lies within `tol`
    /// of `target` in the max norm.
    MedianClose { target: Vec<f64>, tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub graph: GraphSpec,
    pub mu: Vec<f64>,
    /// Absent means noiseless rewards.
    #[serde(default)]
    pub noise: Option<Noise>,
    pub algorithm: Algorithm,
    /// Defaults to `ScheduleConfig::default()`, or `ε(n) = 1/n` for greedy.
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    pub n_steps: u64,
    pub seeds: Seeds,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub acceptance: Vec<AcceptanceCheck>,
}

fn default_stride() -> u64 {
    1000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json(origin, e))
    }

    /// sha256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn effective_schedule(&self) -> ScheduleConfig {
        match (&self.schedule, self.algorithm) {
            (Some(s), _) => s.clone(),
            (None, Algorithm::Greedy) => greedy_default_schedule(),
            (None, _) => ScheduleConfig::default(),
        }
    }
}

/// A validated config with everything needed to run it.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub graph: Graph,
    pub graph_repairs: Vec<String>,
    pub rewards: RewardModel,
    pub start: StartPolicy,
    pub seeds: Vec<u64>,
    pub hash: String,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = ExperimentConfig::from_json(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::new(config, base)
    }

    /// Validates `config`; graph files are resolved against `base`.
    pub fn new(mut config: ExperimentConfig, base: &Path) -> Result<Self> {
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        if config.name.is_empty() || config.name.contains(['/', '\\']) || config.name.starts_with('.') {
            return Err(Error::Config(format!("invalid experiment name {:?}", config.name)));
        }
        if let GraphSpec::File { path } = &config.graph {
            let resolved = base.join(path);
            if !resolved.exists() {
                return Err(Error::Config(format!("graph file {} not found", resolved.display())));
            }
            config.graph = GraphSpec::File { path: resolved };
        }
        let (graph, graph_repairs) = config.graph.build(Path::new(""))?;
        let report = graph.validate();
        if !report.is_valid() {
            return Err(Error::Config(format!("invalid graph: {}", report.messages().join("; "))));
        }
        let m = graph.node_count();
        if config.mu.len() != m {
            return Err(Error::Config(format!("μ has {} entries, graph has {m} nodes", config.mu.len())));
        }
        let std = config.noise.map_or(0.0, Noise::std);
        let rewards = RewardModel::new(config.mu.clone(), std).map_err(|e| Error::Config(e.to_string()))?;
        if config.n_steps == 0 {
            return Err(Error::Config("n_steps must be >= 1".into()));
        }
        if config.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        config.effective_schedule().validate()?;
        let seeds = config.seeds.expand();
        if seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        let start = config.start.policy(m)?;
        for check in &config.acceptance {
            match check {
                AcceptanceCheck::MassAtLeast { nodes, min_seeds, .. } => {
                    if let Some(nodes) = nodes {
                        if nodes.iter().any(|&i| i == 0 || i > m) {
                            return Err(Error::Config(format!("acceptance nodes {nodes:?} outside 1..={m}")));
                        }
                    }
                    if *min_seeds > seeds.len() {
                        return Err(Error::Config(format!(
                            "acceptance asks for {min_seeds} seeds, config has {}",
                            seeds.len()
                        )));
                    }
                }
                AcceptanceCheck::MedianClose { target, .. } => {
                    if target.len() != m {
                        return Err(Error::Config(format!("median target has {} entries, expected {m}", target.len())));
                    }
                }
            }
        }
        let hash = config.hash();
        Ok(Self {
            config,
            graph,
            graph_repairs,
            rewards,
            start,
            seeds,
            hash,
        })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Optimal nodes, 0-based.
    pub fn optimal_nodes(&self) -> Vec<usize> {
        optimal_set(&self.config.mu)
    }

    pub fn run_seed(&self, seed: u64) -> Result<Trajectory> {
        let c = &self.config;
        let sched = c.effective_schedule();
        match c.algorithm {
            Algorithm::Reinforced => run(
                &self.graph,
                &self.rewards,
                &sched,
                c.n_steps,
                seed,
                c.record_stride,
                &self.start,
            ),
            Algorithm::Sa => run_sa(
                &self.graph,
                &self.rewards,
                sched.gamma_sa,
                c.n_steps,
                seed,
                c.record_stride,
                &self.start,
            ),
            Algorithm::Greedy => run_greedy(
                &self.graph,
                &self.rewards,
                &sched,
                c.n_steps,
                seed,
                c.record_stride,
                &self.start,
            ),
        }
    }

    pub fn run_dir(&self, out_root: &Path) -> PathBuf {
        out_root.join(&self.config.name)
    }

    fn meta(&self, seed: u64) -> RunMeta {
        RunMeta {
            name: self.config.name.clone(),
            seed,
            config_hash: self.hash.clone(),
            algorithm: self.config.algorithm,
            graph: self.config.graph.to_string(),
            graph_file: match &self.config.graph {
                GraphSpec::File { path } => Some(path.clone()),
                _ => None,
            },
            node_count: self.node_count(),
            mu: self.config.mu.clone(),
            n_steps: self.config.n_steps,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Greedy runs without an explicit schedule use `ε(n) = 1/n`.
pub fn greedy_default_schedule() -> ScheduleConfig {
    ScheduleConfig {
        exploration: Exploration::Harmonic,
        ..ScheduleConfig::default()
    }
}

/// Sidecar written next to every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    pub algorithm: Algorithm,
    pub graph: String,
    pub graph_file: Option<PathBuf>,
    pub node_count: usize,
    pub mu: Vec<f64>,
    pub n_steps: u64,
    pub rng_algorithm: String,
    pub version: String,
}

/// `REINFORCED_CHOICE_OUT` if set, else the config's `output_dir`.
pub fn output_root(config: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| config.output_dir.clone())
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, m: usize) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let header: Vec<String> = ["n", "xi", "eps", "alpha"]
        .into_iter()
        .map(String::from)
        .chain((1..=m).map(|i| format!("x_{i}")))
        .collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for s in &traj.snapshots {
        write!(w, "{},{},{},{}", s.n, s.xi + 1, s.eps, s.alpha).map_err(io)?;
        for v in &s.x {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Trajectory {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 5 || cols[..4] != ["n", "xi", "eps", "alpha"] {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let m = cols.len() - 4;
    let mut snapshots = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != m + 4 {
            return Err(bad(format!("row {} has {} fields", k + 1, f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("row {}: bad number {s:?}", k + 1)));
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("row {}: bad integer {s:?}", k + 1)));
        let xi = int(f[1])?;
        if xi == 0 {
            return Err(bad(format!("row {}: node ids are 1-based", k + 1)));
        }
        snapshots.push(Snapshot {
            n: int(f[0])?,
            xi: xi as usize - 1,
            eps: num(f[2])?,
            alpha: num(f[3])?,
            x: f[4..].iter().map(|s| num(s)).collect::<Result<_>>()?,
        });
    }
    if snapshots.is_empty() {
        return Err(bad("no rows".into()));
    }
    let stride = snapshots.get(1).map_or(1, |s| s.n.max(1));
    Ok(Trajectory { stride, snapshots })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Type-7 sample quantile (linear interpolation between order statistics).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub final_x: Vec<f64>,
    /// `Σ_{i∈D} x_i` at the final step.
    pub optimal_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: AcceptanceCheck,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q10: Vec<f64>,
    pub q25: Vec<f64>,
    pub q50: Vec<f64>,
    pub q75: Vec<f64>,
    pub q90: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub algorithm: Algorithm,
    pub config_hash: String,
    pub n_steps: u64,
    /// Optimal nodes, 1-based.
    pub optimal_nodes: Vec<usize>,
    pub seeds: Vec<SeedResult>,
    /// Coordinatewise quantiles of the final vectors over seeds.
    pub quantiles: Quantiles,
    pub median_optimal_mass: f64,
    pub checks: Vec<CheckOutcome>,
    /// `None` when the config declares no checks.
    pub passed: Option<bool>,
}

impl ExperimentSummary {
    pub fn median_x(&self) -> &[f64] {
        &self.quantiles.q50
    }
}

pub fn summarize(exp: &Experiment, finals: &[(u64, Vec<f64>)]) -> ExperimentSummary {
    let optimal = exp.optimal_nodes();
    let m = exp.node_count();
    let seeds: Vec<SeedResult> = finals
        .iter()
        .map(|(seed, x)| SeedResult {
            seed: *seed,
            optimal_mass: mass_on(x, &optimal),
            final_x: x.clone(),
        })
        .collect();
    let coord = |q: f64| -> Vec<f64> {
        (0..m)
            .map(|i| quantile(&seeds.iter().map(|s| s.final_x[i]).collect::<Vec<_>>(), q))
            .collect()
    };
    let quantiles = Quantiles {
        q10: coord(0.1),
        q25: coord(0.25),
        q50: coord(0.5),
        q75: coord(0.75),
        q90: coord(0.9),
    };
    let median_optimal_mass = median(&seeds.iter().map(|s| s.optimal_mass).collect::<Vec<_>>());
    let checks: Vec<CheckOutcome> = exp
        .config
        .acceptance
        .iter()
        .map(|c| evaluate_check(c, &seeds, &quantiles.q50, &optimal))
        .collect();
    let passed = (!checks.is_empty()).then(|| checks.iter().all(|c| c.passed));
    ExperimentSummary {
        name: exp.config.name.clone(),
        algorithm: exp.config.algorithm,
        config_hash: exp.hash.clone(),
        n_steps: exp.config.n_steps,
        optimal_nodes: optimal.iter().map(|i| i + 1).collect(),
        seeds,
        quantiles,
        median_optimal_mass,
        checks,
        passed,
    }
}

fn evaluate_check(check: &AcceptanceCheck, seeds: &[SeedResult], median_x: &[f64], optimal: &[usize]) -> CheckOutcome {
    let (passed, detail) = match check {
        AcceptanceCheck::MassAtLeast {
            nodes,
            threshold,
            min_seeds,
        } => {
            let set: Vec<usize> = match nodes {
                Some(n) => n.iter().map(|i| i - 1).collect(),
                None => optimal.to_vec(),
            };
            let hits = seeds
                .iter()
                .filter(|s| mass_on(&s.final_x, &set) >= *threshold)
                .count();
            (
                hits >= *min_seeds,
                format!("{hits}/{} seeds with mass >= {threshold}", seeds.len()),
            )
        }
        AcceptanceCheck::MedianClose { target, tol } => {
            let dist = median_x
                .iter()
                .zip(target)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            (dist <= *tol, format!("max-norm distance {dist:.4} (tolerance {tol})"))
        }
    };
    CheckOutcome {
        check: check.clone(),
        passed,
        detail,
    }
}

/// Runs every seed in parallel, writes trajectories, metadata and the
/// summary, and returns the summary.
pub fn run_experiment(exp: &Experiment, out_root: &Path) -> Result<ExperimentSummary> {
    run_seeds(exp, &exp.seeds, out_root)
}

pub fn run_seeds(exp: &Experiment, seeds: &[u64], out_root: &Path) -> Result<ExperimentSummary> {
    let dir = exp.run_dir(out_root);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let m = exp.node_count();
    let finals: Vec<(u64, Vec<f64>)> = seeds
        .par_iter()
        .map(|&seed| -> Result<(u64, Vec<f64>)> {
            let traj = exp.run_seed(seed)?;
            let seed_dir = dir.join(seed.to_string());
            fs::create_dir_all(&seed_dir).map_err(|e| Error::io(&seed_dir, e))?;
            write_trajectory_csv(&seed_dir.join("trajectory.csv"), &traj, m)?;
            write_json(&seed_dir.join("meta.json"), &exp.meta(seed))?;
            Ok((seed, traj.final_x().to_vec()))
        })
        .collect::<Result<_>>()?;
    let summary = summarize(exp, &finals);
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Rebuilds the summary of `seeds` from the CSV files under `out_root`.
pub fn summarize_dir(exp: &Experiment, seeds: &[u64], out_root: &Path) -> Result<ExperimentSummary> {
    let dir = exp.run_dir(out_root);
    let finals = seeds
        .iter()
        .map(|&seed| {
            let traj = read_trajectory_csv(&dir.join(seed.to_string()).join("trajectory.csv"))?;
            Ok((seed, traj.final_x().to_vec()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(exp, &finals))
}

/// Per-step median optimal-node frequency, one column per experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareTable {
    pub names: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
    pub summaries: Vec<ExperimentSummary>,
}

impl CompareTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("n,{}\n", self.names.join(","));
        for (n, vals) in &self.rows {
            let cells: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{n},{}\n", cells.join(",")));
        }
        out
    }

    /// Median optimal-node frequency at the last common step, per column.
    pub fn final_medians(&self) -> Option<&[f64]> {
        self.rows.last().map(|(_, v)| v.as_slice())
    }
}

/// Runs each experiment and aligns the recorded steps they share.
pub fn compare(exps: &[Experiment], out_root_for: impl Fn(&Experiment) -> PathBuf) -> Result<CompareTable> {
    let first = exps
        .first()
        .ok_or_else(|| Error::Config("compare needs at least one config".into()))?;
    for e in &exps[1..] {
        if e.graph != first.graph {
            return Err(Error::Config(format!(
                "{} and {} use different graphs",
                first.config.name, e.config.name
            )));
        }
        if e.config.mu != first.config.mu {
            return Err(Error::Config(format!(
                "{} and {} use different reward vectors",
                first.config.name, e.config.name
            )));
        }
    }
    let names: Vec<String> = exps.iter().map(|e| e.config.name.clone()).collect();
    if names.iter().collect::<BTreeSet<_>>().len() != names.len() {
        return Err(Error::Config("compared configs need distinct names".into()));
    }
    let optimal = first.optimal_nodes();
    let mut summaries = Vec::new();
    let mut columns: Vec<Vec<(u64, f64)>> = Vec::new();
    for e in exps {
        let root = out_root_for(e);
        summaries.push(run_experiment(e, &root)?);
        let dir = e.run_dir(&root);
        let trajs = e
            .seeds
            .iter()
            .map(|s| read_trajectory_csv(&dir.join(s.to_string()).join("trajectory.csv")))
            .collect::<Result<Vec<_>>>()?;
        let steps: Vec<u64> = trajs[0].snapshots.iter().map(|s| s.n).collect();
        let col = steps
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let masses: Vec<f64> = trajs.iter().map(|t| mass_on(&t.snapshots[k].x, &optimal)).collect();
                (n, median(&masses))
            })
            .collect();
        columns.push(col);
    }
    let common: BTreeSet<u64> = columns
        .iter()
        .map(|c| c.iter().map(|(n, _)| *n).collect::<BTreeSet<_>>())
        .reduce(|a, b| &a & &b)
        .unwrap_or_default();
    let rows = common
        .into_iter()
        .map(|n| {
            let vals = columns
                .iter()
                .map(|c| c.iter().find(|(k, _)| *k == n).expect("common step").1)
                .collect();
            (n, vals)
        })
        .collect();
    Ok(CompareTable {
        names,
        rows,
        summaries,
    })
}

/// Connected graph on 2..=8 nodes with a random interior point, rewards in
/// `[0.1, 2]` and `α ∈ (0, 5]`.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub graph: Graph,
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    pub alpha: f64,
}

pub fn random_instance(seed: u64) -> RandomInstance {
    use rand::Rng;
    let mut rng = crate::walk::rng_from_seed(seed);
    let m = rng.random_range(2..=8usize);
    let mut edges = Vec::new();
    // A random spanning tree keeps the graph connected; extra edges on top.
    for i in 1..m {
        edges.push((rng.random_range(0..i), i));
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if rng.random_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(m, &edges).expect("edges within range");
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    RandomInstance {
        graph,
        x: raw.iter().map(|v| v / total).collect(),
        mu: (0..m).map(|_| rng.random_range(0.1..=2.0)).collect(),
        alpha: 5.0 * (1.0 - rng.random::<f64>()),
    }
}
