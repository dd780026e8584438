use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use advlabel::experiment::{
    self, bound_sweep, dependent_curve, dependent_error_study, format_table, load_dataset, parse_range,
    run_grid, summarize, sweep_curve, write_results_csv, write_summary_csv, DependentConfig, GridConfig,
    LoadedDataset, Manifest, Method, SplitContext, SplitSpec, SweepConfig, DEFAULT_SEEDS,
};
use advlabel::fixture::{self, FixtureOptions, ACTIVE_TOLERANCE, TARGET_LABELS, TARGET_PREDICTIONS, TOLERANCE};
use advlabel::models::{FitConfig, Model, SigmoidLinearModel};
use advlabel::oracle::primal_value;
use advlabel::solver::{train, MultiplierRule, SolverConfig, StepSchedule, TrainStatus};
use advlabel::weak::BoundMode;
use advlabel::{accuracy, Error};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "advlabel", version, about = "Adversarial label learning from weak signals")]
struct Cli {
    /// Directory for every output file [default: results].
    #[arg(long, global = true)]
    results: Option<PathBuf>,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train ALL on one split and write the model, its trace and a run record.
    Train(TrainArgs),
    /// Run the method grid, the repeated-bad-signal study, or the bound sweep.
    Experiment(ExperimentArgs),
    /// Run the two-example fixture and compare against its known optimum.
    Fixture(FixtureArgs),
    /// Run every command listed in a run file, one per line.
    Batch(BatchArgs),
}

#[derive(Args)]
struct BatchArgs {
    /// Run file: one `train`, `experiment` or `fixture` command per line,
    /// arguments separated by whitespace, `#` starts a comment.
    file: PathBuf,
    /// Continue past commands that exit nonzero.
    #[arg(long)]
    keep_going: bool,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset CSV; defaults to the file named in the manifest.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Manifest describing the label column, classes and weak-signal features.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Constant step size (per-schedule base value).
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, value_enum, default_value_t = Schedule::Constant)]
    schedule: Schedule,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Rule::Lagrangian)]
    rule: Rule,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Constant,
    InvSqrt,
    Harmonic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Lagrangian,
    SlackDriven,
}

impl SolverArgs {
    fn config(&self, base: SolverConfig) -> SolverConfig {
        SolverConfig {
            step: match self.schedule {
                Schedule::Constant => StepSchedule::Constant(self.step),
                Schedule::InvSqrt => StepSchedule::InverseSqrt(self.step),
                Schedule::Harmonic => StepSchedule::Harmonic(self.step),
            },
            rho: self.rho,
            max_iters: self.max_iters,
            tol: self.tol,
            multiplier_rule: match self.rule {
                Rule::Lagrangian => MultiplierRule::Lagrangian,
                Rule::SlackDriven => MultiplierRule::SlackDriven,
            },
            ..base
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Train on the built-in two-example fixture instead of a dataset.
    #[arg(long, conflicts_with_all = ["data", "manifest"])]
    fixture: bool,
    /// `true` (measured errors) or `fixed:<value>`.
    #[arg(long, default_value = "true")]
    bounds: BoundMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of weak signals to use (default: all configured).
    #[arg(long)]
    signals: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Grid,
    Dependent,
    BoundSweep,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    study: Study,
    #[command(flatten)]
    data: DataArgs,
    /// Use the built-in synthetic surrogate (one good, one bad signal feature).
    #[arg(long, conflicts_with_all = ["data", "manifest"])]
    synthetic: bool,
    /// Number of random splits (seeds 0..splits).
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, default_value = "true")]
    bounds: BoundMode,
    /// Methods for the grid, e.g. ALL-3,GE-3,AVG-3 (default: all variants).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    #[arg(long)]
    stratified: bool,
    /// Good signal for the dependent study: `ws<k>` or a feature name.
    #[arg(long, default_value = "ws1")]
    good: String,
    #[arg(long, default_value = "ws2")]
    bad: String,
    #[arg(long, default_value_t = 6)]
    max_copies: usize,
    /// Bound values for the sweep as start:stop:step.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    values: String,
    /// Worker threads over splits (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct FixtureArgs {
    /// Append this many noisy copies of the second signal.
    #[arg(long, default_value_t = 0)]
    extra_signals: usize,
    /// Drop every constraint.
    #[arg(long)]
    no_constraints: bool,
    /// Override the shared error bound.
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
}

/// Failure with the exit code to report.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Load { .. } => EXIT_USAGE,
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            _ => EXIT_FAILURE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = Result<u8, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// The manifest named by `--manifest`, else `<data>.manifest` beside the data file.
fn manifest_path(args: &DataArgs) -> Result<PathBuf, Failure> {
    if let Some(m) = &args.manifest {
        return Ok(m.clone());
    }
    match &args.data {
        Some(d) if d.with_extension("manifest").exists() => Ok(d.with_extension("manifest")),
        Some(d) => Err(usage(format!(
            "no --manifest given and {} does not exist",
            d.with_extension("manifest").display()
        ))),
        None => Err(usage("--manifest is required (or use the built-in data options)")),
    }
}

fn load(args: &DataArgs) -> Result<LoadedDataset, Failure> {
    let manifest = Manifest::load(manifest_path(args)?)?;
    let path = match &args.data {
        Some(p) => p.clone(),
        None => manifest.data_path()?,
    };
    Ok(load_dataset(path, &manifest)?)
}

fn synthetic() -> Result<LoadedDataset, Failure> {
    let data = experiment::synthetic::dependent_surrogate(1000, 0)?;
    Ok(LoadedDataset {
        name: "synthetic".into(),
        data,
        ws_features: vec![experiment::synthetic::SURROGATE_GOOD, experiment::synthetic::SURROGATE_BAD, 2],
        positive: "1".into(),
        negative: "0".into(),
        class_counts: vec![],
    })
}

/// Resolves `ws<k>` against the dataset's signal features, or a feature name.
fn signal_feature(ds: &LoadedDataset, spec: &str) -> Result<usize, Failure> {
    if let Some(k) = spec.strip_prefix("ws").and_then(|k| k.parse::<usize>().ok()) {
        return ds
            .ws_features
            .get(k.wrapping_sub(1))
            .copied()
            .ok_or_else(|| usage(format!("{spec}: only {} weak-signal features configured", ds.ws_features.len())));
    }
    ds.data
        .feature_index(spec)
        .ok_or_else(|| usage(format!("unknown feature '{spec}'")))
}

fn create(dir: &Path, name: &str) -> Result<File, Failure> {
    fs::create_dir_all(dir)?;
    Ok(File::create(dir.join(name))?)
}

fn append_record(dir: &Path, record: &serde_json::Value) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let mut f = OpenOptions::new().create(true).append(true).open(dir.join("runs.jsonl"))?;
    writeln!(f, "{record}")?;
    Ok(())
}

fn status_code(status: &TrainStatus) -> u8 {
    match status {
        TrainStatus::Converged { .. } => 0,
        TrainStatus::MaxIterations => EXIT_NOT_CONVERGED,
        TrainStatus::Infeasible { .. } => EXIT_INFEASIBLE,
    }
}

fn cmd_train(args: &TrainArgs, results: &Path) -> CmdResult {
    if args.fixture {
        let bound = match args.bounds {
            BoundMode::Fixed(v) => Some(v),
            BoundMode::True => None,
        };
        let options = FixtureOptions {
            bound,
            seed: args.seed,
            solver: SolverConfig {
                max_iters: args.solver.max_iters,
                ..SolverConfig::direct()
            },
            ..Default::default()
        };
        let report = fixture::run(&options)?;
        append_record(
            results,
            &json!({
                "command": "train",
                "dataset": "fixture",
                "bounds": args.bounds.to_string(),
                "config": options.solver,
                "predictions": report.predictions,
                "final_primal_value": report.primal_value,
                "status": report.status,
                "converged": matches!(report.status, TrainStatus::Converged { .. }),
            }),
        )?;
        println!("predictions {:?}", report.predictions);
        if let TrainStatus::Infeasible { reason, .. } = &report.status {
            eprintln!("infeasible bounds: {reason}");
        }
        return Ok(status_code(&report.status));
    }

    let ds = load(&args.data)?;
    let k = args.signals.unwrap_or(ds.ws_features.len());
    if k == 0 || k > ds.ws_features.len() {
        return Err(usage(format!("--signals must be in 1..={}", ds.ws_features.len())));
    }
    let config = args.solver.config(SolverConfig::linear());
    config.validate()?;
    let ctx = SplitContext::new(
        &ds.data,
        &ds.ws_features[..k],
        &SplitSpec::new(args.seed),
        args.bounds,
        &FitConfig::default(),
    )?;
    let learner_view = ctx.split.train.unlabeled();
    let init = SigmoidLinearModel::zeros_standardized(&learner_view);
    let outcome = train(&learner_view, &ctx.train_signals, init, &config)?;

    let stem = format!("{}-seed{}", ds.name, args.seed);
    fs::create_dir_all(results)?;
    outcome.model.save(results.join(format!("model-{stem}.txt")))?;
    outcome.trace.write_csv(create(results, &format!("trace-{stem}.csv"))?)?;

    let p = outcome.model.predict(&learner_view)?;
    let primal = if outcome.infeasible() {
        None
    } else {
        primal_value(&p, &ctx.train_signals).ok()
    };
    let test_accuracy = ctx.score(&outcome.model)?;
    let train_accuracy = accuracy(&p, ctx.split.train.labels()?)?;
    append_record(
        results,
        &json!({
            "command": "train",
            "dataset": ds.name,
            "seed": args.seed,
            "bounds": args.bounds.to_string(),
            "bound_values": ctx.train_signals.bounds(),
            "signals": ctx.train_signals.names(),
            "config": config,
            "status": outcome.status,
            "converged": outcome.converged(),
            "iterations": outcome.trace.len(),
            "final_primal_value": primal,
            "train_accuracy": train_accuracy,
            "test_accuracy": test_accuracy,
        }),
    )?;
    println!(
        "{}: {} iterations, status {:?}, primal {}, test accuracy {:.4}",
        ds.name,
        outcome.trace.len(),
        outcome.status,
        primal.map_or("n/a".into(), |v| format!("{v:.4}")),
        test_accuracy
    );
    if let TrainStatus::Infeasible { reason, .. } = &outcome.status {
        eprintln!("infeasible bounds: {reason}");
    }
    Ok(status_code(&outcome.status))
}

fn cmd_experiment(args: &ExperimentArgs, results: &Path) -> CmdResult {
    let ds = if args.synthetic { synthetic()? } else { load(&args.data)? };
    let seeds: Vec<u64> = if args.splits == DEFAULT_SEEDS.len() {
        DEFAULT_SEEDS.to_vec()
    } else {
        (0..args.splits as u64).collect()
    };
    let solver = args.solver.config(SolverConfig::linear());
    solver.validate()?;
    match args.study {
        Study::Grid => {
            let methods = if args.methods.is_empty() {
                Method::standard(ds.ws_features.len().min(3))
            } else {
                args.methods.clone()
            };
            let cfg = GridConfig {
                bounds: args.bounds,
                methods,
                seeds,
                stratified: args.stratified,
                solver,
                fit: FitConfig::default(),
                jobs: args.jobs,
            };
            let records = run_grid(&ds.name, &ds.data, &ds.ws_features, &cfg)?;
            let summary = summarize(&records)?;
            write_results_csv(&records, create(results, &format!("grid-{}.csv", ds.name))?)?;
            write_summary_csv(&summary, create(results, &format!("summary-{}.csv", ds.name))?)?;
            let table = format_table(&summary);
            create(results, &format!("table-{}.txt", ds.name))?.write_all(table.as_bytes())?;
            print!("{table}");
            append_record(
                results,
                &json!({"command": "experiment", "study": "grid", "dataset": ds.name, "config": cfg}),
            )?;
            Ok(0)
        }
        Study::Dependent => {
            let cfg = DependentConfig {
                good: signal_feature(&ds, &args.good)?,
                bad: signal_feature(&ds, &args.bad)?,
                max_copies: args.max_copies,
                bounds: args.bounds,
                seeds,
                solver,
                fit: FitConfig::default(),
                jobs: args.jobs,
            };
            let records = dependent_error_study(&ds.name, &ds.data, &cfg)?;
            let curve = dependent_curve(&records);
            experiment::report::write_csv(&records, create(results, &format!("dependent-{}.csv", ds.name))?)?;
            experiment::report::write_csv(&curve, create(results, &format!("dependent-curve-{}.csv", ds.name))?)?;
            println!("{:<6} {:>6} {:>9}", "method", "copies", "accuracy");
            for p in &curve {
                println!("{:<6} {:>6} {:>9.4}", p.method, p.copies, p.mean_accuracy);
            }
            append_record(
                results,
                &json!({"command": "experiment", "study": "dependent", "dataset": ds.name, "config": cfg}),
            )?;
            Ok(0)
        }
        Study::BoundSweep => {
            let cfg = SweepConfig {
                features: ds.ws_features.clone(),
                values: parse_range(&args.values)?,
                seeds,
                solver,
                fit: FitConfig::default(),
                jobs: args.jobs,
            };
            let records = bound_sweep(&ds.name, &ds.data, &cfg)?;
            let curve = sweep_curve(&records);
            experiment::report::write_csv(&records, create(results, &format!("bound-sweep-{}.csv", ds.name))?)?;
            experiment::report::write_csv(&curve, create(results, &format!("bound-sweep-curve-{}.csv", ds.name))?)?;
            println!("{:>6} {:>10} {:>7} {:>10} {:>13}", "bound", "error", "usable", "infeasible", "not_converged");
            for p in &curve {
                let err = p.mean_error.map_or("-".into(), |e| format!("{e:.4}"));
                println!(
                    "{:>6.2} {:>10} {:>7} {:>10} {:>13}",
                    p.bound, err, p.usable, p.infeasible, p.not_converged
                );
            }
            append_record(
                results,
                &json!({"command": "experiment", "study": "bound-sweep", "dataset": ds.name, "config": cfg}),
            )?;
            Ok(0)
        }
    }
}

fn cmd_fixture(args: &FixtureArgs, results: &Path) -> CmdResult {
    let options = FixtureOptions {
        extra_signals: args.extra_signals,
        no_constraints: args.no_constraints,
        bound: args.bound,
        seed: args.seed,
        solver: SolverConfig {
            step: StepSchedule::Constant(args.step),
            rho: args.rho,
            max_iters: args.max_iters,
            ..SolverConfig::direct()
        },
        ..Default::default()
    };
    let r = fixture::run(&options)?;
    println!("learned p          {:.4?}", r.predictions);
    println!("iterate labels     {:.4?}", r.iterate_labels);
    println!("adversarial labels {:.4?}", r.adversarial_labels);
    println!("primal value       {:.4}", r.primal_value);
    println!("slacks             {:.4?}", r.slacks);
    println!("status             {:?} after {} iterations", r.status, r.iterations);
    append_record(results, &json!({"command": "fixture", "report": r}))?;

    if let TrainStatus::Infeasible { reason, .. } = &r.status {
        eprintln!("infeasible bounds: {reason}");
        return Ok(EXIT_INFEASIBLE);
    }
    if args.no_constraints || args.bound.is_some() {
        return Ok(0);
    }
    let checks = [
        ("predictions", r.predictions_match(&TARGET_PREDICTIONS, TOLERANCE)),
        ("adversarial labels", r.labels_match(&TARGET_LABELS, TOLERANCE)),
        ("active constraints", r.constraints_active(ACTIVE_TOLERANCE)),
    ];
    for (name, ok) in checks {
        println!("{:<19}{}", name, if ok { "PASS" } else { "FAIL" });
    }
    Ok(if checks.iter().all(|c| c.1) { 0 } else { EXIT_FAILURE })
}

fn cmd_batch(args: &BatchArgs, results: &Path) -> CmdResult {
    let text = fs::read_to_string(&args.file)
        .map_err(|e| usage(format!("{}: {e}", args.file.display())))?;
    let mut worst = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |m: String| usage(format!("{}:{}: {m}", args.file.display(), i + 1));
        let cli = Cli::try_parse_from(std::iter::once("advlabel").chain(line.split_whitespace()))
            .map_err(|e| at(e.to_string().lines().next().unwrap_or_default().to_string()))?;
        if matches!(cli.command, Command::Batch(_)) {
            return Err(at("run files cannot nest".into()));
        }
        println!("# {line}");
        let dir = cli.results.clone().unwrap_or_else(|| results.to_path_buf());
        let code = match dispatch(&cli.command, &dir) {
            Ok(c) => c,
            Err(f) => {
                eprintln!("error: {}", f.message);
                f.code
            }
        };
        if code != 0 {
            if !args.keep_going {
                return Ok(code);
            }
            worst = worst.max(code);
        }
    }
    Ok(worst)
}

fn dispatch(command: &Command, results: &Path) -> CmdResult {
    match command {
        Command::Train(a) => cmd_train(a, results),
        Command::Experiment(a) => cmd_experiment(a, results),
        Command::Fixture(a) => cmd_fixture(a, results),
        Command::Batch(a) => cmd_batch(a, results),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let results = cli.results.clone().unwrap_or_else(|| PathBuf::from("results"));
    let result = dispatch(&cli.command, &results);
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
