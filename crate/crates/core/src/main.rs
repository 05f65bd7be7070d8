use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use reinforced_choice::analysis::{self, EquilibriumOptions, Flow};
use reinforced_choice::graph::load_graph;
use reinforced_choice::harness::{self, Experiment, GraphSpec};
use reinforced_choice::schedule::{verify_conditions, ScheduleConfig};
use reinforced_choice::{Error, Graph};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_THRESHOLD: u8 = 4;

#[derive(Parser)]
#[command(name = "reinforced-choice", version, about = "Vertex-reinforced random walks for graph-constrained choice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config and write trajectories.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run this seed only.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Evaluate the mean-field analysis and print JSON.
    Analyze(AnalyzeArgs),
    /// Run several configs on the same graph and print the per-step median
    /// optimal-node frequency as CSV.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        /// Exit with status 4 if any declared acceptance check fails.
        #[arg(long = "assert")]
        assert_thresholds: bool,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a graph file against the walk's requirements.
    Validate {
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Stationary,
    Potential,
    Fixedpoint,
    Eigenbound,
    Concentration,
    Conditions,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// `linear:4`, `star:4:4`, `complete:4`, `two_cliques:2:8` or `file:<path>`.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Evaluation point; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    x: Option<Vec<f64>>,
    /// Use a random instance instead of graph, μ, x and α.
    #[arg(long)]
    random: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    mi: Option<usize>,
    /// Mixture for `eigenbound`; the extreme corner when omitted.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Start of the flow for `fixedpoint` and `concentration`.
    #[arg(long, value_delimiter = ',')]
    start: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "scaled")]
    flow: FlowArg,
    /// Schedule JSON for `conditions`; defaults otherwise.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    n_max: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    Replicator,
    Scaled,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let kind = if e.is_config_error() { "config" } else { "runtime" };
            let body = json!({"error": {"kind": kind, "message": e.to_string()}});
            eprintln!("{body}");
            ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}

fn dispatch(cmd: Command) -> reinforced_choice::Result<ExitCode> {
    match cmd {
        Command::Run { config, seed_override } => {
            let exp = Experiment::load(&config)?;
            let root = harness::output_root(&exp.config);
            let seeds = seed_override.map_or_else(|| exp.seeds.clone(), |s| vec![s]);
            let summary = harness::run_seeds(&exp, &seeds, &root)?;
            print_json(&json!({
                "name": summary.name,
                "output": exp.run_dir(&root),
                "median_x": summary.median_x(),
                "median_optimal_mass": summary.median_optimal_mass,
                "passed": summary.passed,
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze(args) => {
            print_json(&analyze(&args)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            configs,
            assert_thresholds,
            output,
        } => {
            let exps = configs
                .iter()
                .map(|p| Experiment::load(p))
                .collect::<reinforced_choice::Result<Vec<_>>>()?;
            let table = harness::compare(&exps, |e| harness::output_root(&e.config))?;
            let csv = table.to_csv();
            match output {
                Some(path) => std::fs::write(&path, csv).map_err(|e| io_error(&path, e))?,
                None => {
                    let _ = write!(std::io::stdout(), "{csv}");
                }
            }
            let failed: Vec<&str> = table
                .summaries
                .iter()
                .filter(|s| s.passed == Some(false))
                .map(|s| s.name.as_str())
                .collect();
            if assert_thresholds && !failed.is_empty() {
                eprintln!("{}", json!({"threshold_failures": failed}));
                return Ok(ExitCode::from(EXIT_THRESHOLD));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { graph } => {
            let loaded = load_graph(&graph)?;
            let report = loaded.graph.validate();
            for note in &loaded.repairs {
                println!("repaired: {note}");
            }
            if report.is_valid() {
                println!("OK");
                Ok(ExitCode::SUCCESS)
            } else {
                for msg in report.messages() {
                    println!("violation: {msg}");
                }
                Ok(ExitCode::from(EXIT_CONFIG))
            }
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn print_json(v: &Value) {
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("JSON value"));
}

fn missing(what: &str, kind: &str) -> Error {
    Error::Config(format!("--kind {kind} needs --{what}"))
}

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("serialisable result")
}

/// Graph, μ, x and α from the arguments (or a random instance).
fn instance(args: &AnalyzeArgs, kind: &str) -> reinforced_choice::Result<(Graph, String, Vec<f64>, Vec<f64>, f64)> {
    if let Some(seed) = args.random {
        let r = harness::random_instance(seed);
        return Ok((r.graph, format!("random:{seed}"), r.mu, r.x, r.alpha));
    }
    let mu = args.mu.clone().ok_or_else(|| missing("mu", kind))?;
    let alpha = args.alpha.ok_or_else(|| missing("alpha", kind))?;
    let (graph, label) = graph_arg(args, mu.len())?;
    let m = graph.node_count();
    let x = args.x.clone().unwrap_or_else(|| vec![1.0 / m as f64; m]);
    Ok((graph, label, mu, x, alpha))
}

/// `--graph`, or the complete graph on `m` nodes.
fn graph_arg(args: &AnalyzeArgs, m: usize) -> reinforced_choice::Result<(Graph, String)> {
    let spec: GraphSpec = match &args.graph {
        Some(s) => s.parse()?,
        None => GraphSpec::Complete { m },
    };
    let (g, _) = spec.build(Path::new("."))?;
    Ok((g, spec.to_string()))
}

fn start_point(args: &AnalyzeArgs, m: usize) -> Vec<f64> {
    args.start.clone().unwrap_or_else(|| vec![1.0 / m as f64; m])
}

fn analyze(args: &AnalyzeArgs) -> reinforced_choice::Result<Value> {
    let flow = match args.flow {
        FlowArg::Replicator => Flow::Replicator,
        FlowArg::Scaled => Flow::Scaled,
    };
    let mut eq_opts = EquilibriumOptions::default();
    eq_opts.integrate.flow = flow;

    Ok(match args.kind {
        Kind::Stationary => {
            let (g, label, mu, x, alpha) = instance(args, "stationary")?;
            let closed = analysis::stationary_closed_form(&x, &g, &mu, alpha)?;
            let kernel = analysis::limit_kernel(&x, &g, &mu, alpha)?;
            let oracle = analysis::stationary_power_iteration(&kernel, 1e-14, 10_000_000)?;
            let gap = closed
                .iter()
                .zip(&oracle)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            json!({
                "kind": "stationary", "graph": label, "mu": mu, "x": x, "alpha": alpha,
                "closed_form": closed,
                "power_iteration": oracle,
                "max_gap": gap,
                "local_balance_violation": analysis::local_balance_violation(&closed, &kernel),
            })
        }
        Kind::Potential => {
            let (g, label, mu, x, alpha) = instance(args, "potential")?;
            let report = analysis::potential(&x, &g, &mu, alpha)?;
            json!({"kind": "potential", "graph": label, "mu": mu, "x": x, "alpha": alpha, "potential": to_value(report)})
        }
        Kind::Fixedpoint => {
            let mu = args.mu.clone().ok_or_else(|| missing("mu", "fixedpoint"))?;
            let alpha = args.alpha.ok_or_else(|| missing("alpha", "fixedpoint"))?;
            let (g, label) = graph_arg(args, mu.len())?;
            let complete = g == Graph::complete(g.node_count())?;
            let closed = (complete && alpha < 1.0)
                .then(|| analysis::unconstrained_fixed_point(&mu, alpha))
                .transpose()?;
            let z0 = start_point(args, g.node_count());
            let eq = analysis::find_equilibrium(&z0, &g, &mu, alpha, &eq_opts)?;
            let (point, method) = match &closed {
                Some(p) => (p.clone(), "closed_form"),
                None => (eq.point.clone(), "flow"),
            };
            let residual = analysis::fixed_point_residual(&point, &g, &mu, alpha)?;
            json!({
                "kind": "fixedpoint", "graph": label, "mu": mu, "alpha": alpha,
                "point": point, "method": method, "residual": residual,
                "equilibrium": to_value(eq),
            })
        }
        Kind::Eigenbound => {
            let eps = args.eps.ok_or_else(|| missing("eps", "eigenbound"))?;
            let mi = args.mi.ok_or_else(|| missing("mi", "eigenbound"))?;
            let p = match &args.p {
                Some(p) => p.clone(),
                None => {
                    let floor = eps / mi as f64;
                    let mut p = vec![floor; mi];
                    if let Some(first) = p.first_mut() {
                        *first = 1.0 - (mi as f64 - 1.0) * floor;
                    }
                    p
                }
            };
            let r = analysis::covariance_eigen_bound(&p, eps, mi)?;
            json!({"kind": "eigenbound", "p": p, "eps": eps, "mi": mi, "result": to_value(r)})
        }
        Kind::Concentration => {
            let mu = args.mu.clone().ok_or_else(|| missing("mu", "concentration"))?;
            let alphas = args.alphas.clone().ok_or_else(|| missing("alphas", "concentration"))?;
            let (g, label) = graph_arg(args, mu.len())?;
            let z0 = start_point(args, g.node_count());
            let table = analysis::alpha_concentration_check(&g, &mu, &alphas, &z0, &eq_opts)?;
            json!({"kind": "concentration", "graph": label, "mu": mu, "start": z0, "table": to_value(table)})
        }
        Kind::Conditions => {
            let cfg: ScheduleConfig = match &args.schedule {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                    serde_json::from_str(&text).map_err(|e| Error::Json {
                        path: path.clone(),
                        source: e,
                    })?
                }
                None => ScheduleConfig::default(),
            };
            let m = args.mi.or(args.mu.as_ref().map(Vec::len)).unwrap_or(4);
            let report = verify_conditions(&cfg, args.n_max, m)?;
            json!({"kind": "conditions", "schedule": to_value(&cfg), "report": to_value(report)})
        }
    })
}
