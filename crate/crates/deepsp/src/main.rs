use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use deepsp::config::{read_config, to_args};
use deepsp::dimacs::{emit_dimacs, emit_solution, parse_dimacs, parse_solution, DimacsOptions};
use deepsp::harness::{
    build_dataset, sweep, train_with_validation, worker_pool, DatasetSpec, RunFilter, RunReport, SweepSpec,
};
use deepsp::model_file::{load_model, save_model};
use deepsp::output::{config_hash, write_rows, CURVE_SCHEMA, RUNS_SCHEMA, SWEEP_SCHEMA, TRACE_SCHEMA};
use deepsp::BUILD_ID;
use deepsp_core::formula::generate_random_ksat;
use deepsp_core::pipeline::{assignment_agreement, finish, FeatureScaling};
use deepsp_core::sid::sid_solve;
use deepsp_core::walksat::maxwalksat;
use deepsp_core::{
    CnfFormula, DeepSpConfig, FactorGraph, SidConfig, SpParams, SurveyState, TrainConfig, WalkSatConfig,
};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "deepsp",
    version = BUILD_ID,
    about = "Survey Propagation, SID, MaxWalkSat and the DeepSP one-shot assigner",
    args_override_self = true
)]
struct Cli {
    /// Base random seed
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweep/train/eval; DEEPSP_THREADS caps it [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output: CNF file (gen), model file (train), directory (sweep), report file (others)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for the subcommand's flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random k-SAT instance in DIMACS format
    Gen(GenArgs),
    /// Run Survey Propagation and report convergence statistics
    Sp(SpCmd),
    /// Survey-inspired decimation
    Sid(SidCmd),
    /// MaxWalkSat local search
    Walksat(WalkCmd),
    /// Build a SID-labelled dataset and train the classifier
    Train(TrainCmd),
    /// One-shot DeepSP assignment with a trained model
    Deepsp(DeepSpCmd),
    /// Ensemble sweep over (n, alpha); writes runs.csv and sweep.csv
    Sweep(SweepCmd),
    /// Classifier accuracy on freshly solved validation instances
    Eval(EvalCmd),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 4.2)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// DIMACS CNF file
    #[arg(long)]
    cnf: PathBuf,
    /// Accept clauses that repeat a variable
    #[arg(long)]
    lenient: bool,
}

#[derive(Args, Debug, Clone, Copy)]
struct SpOpts {
    /// Maximum number of SP sweeps
    #[arg(long, default_value_t = 1024)]
    tmax: usize,
    /// Convergence threshold on the largest survey change
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
}

impl SpOpts {
    fn params(self) -> SpParams {
        SpParams {
            t_max: self.tmax,
            epsilon: self.eps,
        }
    }
}

#[derive(Args, Debug)]
struct SpCmd {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    sp: SpOpts,
    /// Write a per-sweep CSV trace (sweep, max_delta, frac_unconverged)
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SidCmd {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    sp: SpOpts,
    /// Fraction of the remaining variables fixed per round
    #[arg(long, default_value_t = 0.005)]
    fraction: f64,
    /// Surveys below this count as the trivial fixed point [default: --eps]
    #[arg(long)]
    trivial: Option<f64>,
    /// MaxWalkSat flips on the residual formula
    #[arg(long, default_value_t = 10_000_000)]
    cutoff: u64,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    /// Write the assignment as a `v 1 -2 ... 0` line
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WalkCmd {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 100_000)]
    cutoff: u64,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    restarts: u32,
    /// Write the best assignment as a `v 1 -2 ... 0` line
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Scaling {
    #[default]
    Raw,
    MeanDegree,
}

impl From<Scaling> for FeatureScaling {
    fn from(s: Scaling) -> Self {
        match s {
            Scaling::Raw => FeatureScaling::Raw,
            Scaling::MeanDegree => FeatureScaling::MeanDegree,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Preset {
    Desk,
    Full,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FilterArg {
    ConvergedOnly,
    NonconvergedOnly,
    All,
}

impl From<FilterArg> for RunFilter {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::ConvergedOnly => RunFilter::ConvergedOnly,
            FilterArg::NonconvergedOnly => RunFilter::NonconvergedOnly,
            FilterArg::All => RunFilter::All,
        }
    }
}

#[derive(Args, Debug)]
struct TrainCmd {
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    /// Variables per instance [default: from preset]
    #[arg(long)]
    n: Option<usize>,
    /// [default: from preset]
    #[arg(long)]
    train_instances: Option<usize>,
    /// [default: from preset]
    #[arg(long)]
    val_instances: Option<usize>,
    #[arg(long, default_value_t = 4.2)]
    alpha_train: f64,
    #[arg(long, default_value_t = 4.23)]
    alpha_val: f64,
    /// Training steps per epoch [default: one pass over the data]
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 20)]
    batch: usize,
    #[arg(long, value_enum, default_value_t = Scaling::Raw)]
    scaling: Scaling,
    /// Validation interval in steps
    #[arg(long, default_value_t = 25)]
    eval_every: usize,
    /// Training-curve CSV [default: training_curve.csv beside the model]
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DeepSpCmd {
    #[command(flatten)]
    input: Input,
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    sp: SpOpts,
    /// A survey counts as 1 when it is at least 1 - tol
    #[arg(long, default_value_t = 1e-9)]
    eta_one_tol: f64,
    /// Must match the scaling used in training
    #[arg(long, value_enum, default_value_t = Scaling::Raw)]
    scaling: Scaling,
    /// Reference assignment (`v ... 0` line) for the agreement column
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write the assignment as a `v 1 -2 ... 0` line
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepCmd {
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    /// Comma-separated sizes [default: from preset]
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Comma-separated ascending clause densities [default: from preset]
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Instances per grid point [default: from preset]
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, value_enum, default_value_t = FilterArg::All)]
    filter: FilterArg,
    #[command(flatten)]
    sp: SpOpts,
    /// Also run DeepSP with this model
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    eta_one_tol: f64,
    #[arg(long, value_enum, default_value_t = Scaling::Raw)]
    scaling: Scaling,
    /// Append to existing CSVs (schemas must match)
    #[arg(long)]
    append: bool,
}

#[derive(Args, Debug)]
struct EvalCmd {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 4.23)]
    alpha: f64,
    #[arg(long, default_value_t = 10)]
    instances: usize,
    #[arg(long, value_enum, default_value_t = Scaling::Raw)]
    scaling: Scaling,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse(argv: &[String]) -> Result<Cli, Failure> {
    Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = e.print();
                Failure::Usage(String::new())
            }
            _ => Failure::Usage(
                e.render()
                    .to_string()
                    .trim_start_matches("error: ")
                    .trim_end()
                    .to_string(),
            ),
        }
    })
}

fn run(argv: Vec<String>) -> Outcome {
    let mut cli = match parse(&argv) {
        Ok(c) => c,
        // help and version are not errors
        Err(Failure::Usage(msg)) if msg.is_empty() => return Ok(()),
        Err(e) => return Err(e),
    };
    if let Some(path) = cli.config.clone() {
        let entries = read_config(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let merged = splice_config(&argv, &to_args(&entries));
        cli = parse(&merged)?;
    }
    match &cli.cmd {
        Command::Gen(a) => cmd_gen(&cli, a),
        Command::Sp(a) => cmd_sp(&cli, a),
        Command::Sid(a) => cmd_sid(&cli, a),
        Command::Walksat(a) => cmd_walksat(&cli, a),
        Command::Train(a) => cmd_train(&cli, a),
        Command::Deepsp(a) => cmd_deepsp(&cli, a),
        Command::Sweep(a) => cmd_sweep(&cli, a),
        Command::Eval(a) => cmd_eval(&cli, a),
    }
}

/// Inserts config-file arguments right after the subcommand name, so that
/// flags given on the command line still win.
fn splice_config(argv: &[String], extra: &[String]) -> Vec<String> {
    const VALUE_FLAGS: [&str; 4] = ["--seed", "--threads", "--out", "--config"];
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].as_str();
        if VALUE_FLAGS.contains(&a) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            break;
        }
    }
    let at = (i + 1).min(argv.len());
    let mut out = argv[..at].to_vec();
    out.extend_from_slice(extra);
    out.extend_from_slice(&argv[at..]);
    out
}

/// Prints the effective configuration to stderr and returns its hash. The
/// hash covers only what determines the results: not the output location,
/// the thread count or the name of the file the settings came from.
fn announce(name: &str, cli: &Cli, cfg: serde_json::Value) -> String {
    let hashed = json!({ "command": name, "build": BUILD_ID, "seed": cli.seed, "settings": &cfg });
    let full = json!({
        "command": name,
        "build": BUILD_ID,
        "seed": cli.seed,
        "threads": cli.threads,
        "out": cli.out,
        "config_file": cli.config,
        "settings": cfg,
    });
    eprintln!("# config {full}");
    config_hash(&hashed.to_string())
}

fn emit(cli: &Cli, line: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(p) => fs::write(p, format!("{line}\n")).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{line}"),
    }
    Ok(())
}

fn read_cnf(input: &Input) -> Result<CnfFormula, Failure> {
    if !input.cnf.is_file() {
        return Err(Failure::Usage(format!("CNF file {} not found", input.cnf.display())));
    }
    let text = fs::read_to_string(&input.cnf).with_context(|| format!("reading {}", input.cnf.display()))?;
    let opts = if input.lenient {
        DimacsOptions::lenient()
    } else {
        DimacsOptions::default()
    };
    parse_dimacs(&text, opts)
        .with_context(|| format!("parsing {}", input.cnf.display()))
        .map_err(Failure::Runtime)
}

fn require_file(p: &Path, what: &str) -> Result<(), Failure> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{what} {} not found", p.display())))
    }
}

fn check_sp(sp: SpOpts) -> Result<(), Failure> {
    sp.params().validate().map_err(|e| Failure::Usage(e.to_string()))
}

fn write_solution(path: &Option<PathBuf>, a: &deepsp_core::Assignment) -> Result<(), Failure> {
    if let Some(p) = path {
        fs::write(p, emit_solution(a)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> Outcome {
    announce("gen", cli, json!({ "n": a.n, "alpha": a.alpha, "k": a.k }));
    let f = generate_random_ksat(a.n, a.k, a.alpha, cli.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let text = emit_dimacs(&f);
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    sweep: usize,
    max_delta: f64,
    frac_unconverged: f64,
}

fn report_for(f: &CnfFormula, seed: u64, out: &deepsp_core::SpRunOutcome) -> RunReport {
    RunReport {
        instance: 0,
        n: f.num_vars(),
        alpha: f.alpha(),
        seed,
        converged: out.converged,
        t_star: out.t_star,
        frac_unconverged_messages: out.frac_unconverged_messages,
        instance_eps: out.instance_eps,
        contradiction: out.contradiction,
        one_minus_rho: None,
        omega: None,
        agreement: None,
    }
}

fn cmd_sp(cli: &Cli, a: &SpCmd) -> Outcome {
    check_sp(a.sp)?;
    let hash = announce(
        "sp",
        cli,
        json!({ "cnf": a.input.cnf, "tmax": a.sp.tmax, "eps": a.sp.eps, "trace": a.trace }),
    );
    let f = read_cnf(&a.input)?;
    let g = FactorGraph::new(&f);
    let mut state = SurveyState::random(&g, a.sp.params(), cli.seed);
    let mut rows = Vec::new();
    let out = state.run_traced(&g, |t| {
        rows.push(TraceRow {
            sweep: t.sweep,
            max_delta: t.max_delta,
            frac_unconverged: t.frac_unconverged,
        })
    });
    if let Some(p) = &a.trace {
        write_rows(p, TRACE_SCHEMA, &hash, &rows, false).context("writing trace")?;
    }
    emit(cli, &serde_json::to_string(&report_for(&f, cli.seed, &out)).unwrap())
}

fn cmd_sid(cli: &Cli, a: &SidCmd) -> Outcome {
    check_sp(a.sp)?;
    let cfg = SidConfig {
        sp: a.sp.params(),
        decimation_fraction: a.fraction,
        trivial_threshold: a.trivial.unwrap_or(a.sp.eps),
        walksat: WalkSatConfig {
            cutoff: a.cutoff,
            noise: a.noise,
            ..WalkSatConfig::default()
        },
        seed: cli.seed,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    announce(
        "sid",
        cli,
        json!({
            "cnf": a.input.cnf, "tmax": a.sp.tmax, "eps": a.sp.eps, "fraction": a.fraction,
            "trivial": cfg.trivial_threshold, "cutoff": a.cutoff, "noise": a.noise,
        }),
    );
    let f = read_cnf(&a.input)?;
    let out = sid_solve(&f, &cfg).map_err(anyhow::Error::from)?;
    if let Some(asg) = &out.assignment {
        write_solution(&a.solution, asg)?;
    }
    let line = json!({
        "status": out.status.as_str(),
        "unsat": out.unsat,
        "one_minus_rho": out.unsat.map(|u| u as f64 / f.num_clauses() as f64),
        "fixed_by_decimation": out.fixed_by_decimation,
        "fixed_by_walksat": out.fixed_by_walksat,
        "rounds": out.rounds,
        "total_sweeps": out.total_sweeps,
    });
    emit(cli, &line.to_string())
}

fn cmd_walksat(cli: &Cli, a: &WalkCmd) -> Outcome {
    if !(0.0..=1.0).contains(&a.noise) || a.cutoff == 0 || a.restarts == 0 {
        return Err(Failure::Usage(
            "need 0 <= noise <= 1, cutoff >= 1, restarts >= 1".into(),
        ));
    }
    announce(
        "walksat",
        cli,
        json!({ "cnf": a.input.cnf, "cutoff": a.cutoff, "noise": a.noise, "restarts": a.restarts }),
    );
    let f = read_cnf(&a.input)?;
    let cfg = WalkSatConfig {
        cutoff: a.cutoff,
        noise: a.noise,
        seed: cli.seed,
        restarts: a.restarts,
    };
    let res = maxwalksat(&f, &cfg);
    write_solution(&a.solution, &res.best_assignment)?;
    let line = json!({
        "best_unsat": res.best_unsat,
        "one_minus_rho": res.best_unsat as f64 / f.num_clauses() as f64,
        "flips_used": res.flips_used,
    });
    emit(cli, &line.to_string())
}

fn cmd_train(cli: &Cli, a: &TrainCmd) -> Outcome {
    let mut spec = match a.preset {
        Preset::Desk => DatasetSpec::desk(),
        Preset::Full => DatasetSpec::full(),
    };
    spec.n = a.n.unwrap_or(spec.n);
    spec.num_train_instances = a.train_instances.unwrap_or(spec.num_train_instances);
    spec.num_val_instances = a.val_instances.unwrap_or(spec.num_val_instances);
    spec.alpha_train = a.alpha_train;
    spec.alpha_val = a.alpha_val;
    spec.seed = cli.seed;
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let cfg = TrainConfig {
        batch_size: a.batch,
        learning_rate: a.lr,
        epochs: a.epochs,
        steps_per_epoch: a.steps,
        seed: cli.seed,
        ..TrainConfig::default()
    };
    if a.batch == 0 || a.lr.is_nan() || a.lr <= 0.0 {
        return Err(Failure::Usage("batch must be >= 1 and lr > 0".into()));
    }
    let model_path = cli.out.clone().unwrap_or_else(|| PathBuf::from("model.txt"));
    let curve_path = a
        .curve
        .clone()
        .unwrap_or_else(|| model_path.with_file_name("training_curve.csv"));
    let hash = announce(
        "train",
        cli,
        json!({
            "preset": a.preset, "n": spec.n, "train_instances": spec.num_train_instances,
            "val_instances": spec.num_val_instances, "alpha_train": spec.alpha_train,
            "alpha_val": spec.alpha_val, "steps": a.steps, "epochs": a.epochs, "lr": a.lr,
            "batch": a.batch, "scaling": a.scaling, "eval_every": a.eval_every,
            "dims": cfg.layer_dims, "curve": curve_path,
        }),
    );
    let pool = worker_pool(cli.threads).map_err(anyhow::Error::from)?;
    let ds = build_dataset(&spec, &pool).map_err(anyhow::Error::from)?;
    let (outcome, curve) =
        train_with_validation(&ds, &cfg, a.scaling.into(), a.eval_every).map_err(anyhow::Error::from)?;
    save_model(&outcome.model, &model_path).with_context(|| format!("writing {}", model_path.display()))?;
    write_rows(&curve_path, CURVE_SCHEMA, &hash, &curve, false).context("writing training curve")?;
    let last = curve.last().expect("curve has a final point");
    let line = json!({
        "model": model_path,
        "samples": ds.train.iter().map(|i| i.features.len()).sum::<usize>(),
        "attempts": ds.attempts,
        "failures": ds.failures,
        "steps": outcome.losses.len(),
        "val_accuracy": last.val_accuracy,
        "val_hamming": last.val_hamming,
    });
    println!("{line}");
    Ok(())
}

fn cmd_deepsp(cli: &Cli, a: &DeepSpCmd) -> Outcome {
    check_sp(a.sp)?;
    require_file(&a.model, "model file")?;
    if let Some(r) = &a.reference {
        require_file(r, "reference file")?;
    }
    announce(
        "deepsp",
        cli,
        json!({
            "cnf": a.input.cnf, "model": a.model, "tmax": a.sp.tmax, "eps": a.sp.eps,
            "eta_one_tol": a.eta_one_tol, "scaling": a.scaling, "reference": a.reference,
        }),
    );
    let f = read_cnf(&a.input)?;
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let cfg = DeepSpConfig {
        sp: a.sp.params(),
        eta_one_tol: a.eta_one_tol,
        seed: cli.seed,
        scaling: a.scaling.into(),
    };
    let g = FactorGraph::new(&f);
    let mut state = SurveyState::random(&g, cfg.sp, cfg.seed);
    let out = state.run(&g);
    let res = finish(&f, &g, &state, out, &model, &cfg).map_err(anyhow::Error::from)?;
    let mut report = report_for(&f, cli.seed, &out);
    report.one_minus_rho = Some(res.one_minus_rho);
    report.omega = Some(res.omega);
    if let Some(r) = &a.reference {
        let text = fs::read_to_string(r).with_context(|| format!("reading {}", r.display()))?;
        let reference = parse_solution(&text, f.num_vars()).context("parsing reference")?;
        report.agreement = Some(assignment_agreement(&reference, &res.assignment).map_err(anyhow::Error::from)?);
    }
    write_solution(&a.solution, &res.assignment)?;
    emit(cli, &serde_json::to_string(&report).unwrap())
}

fn cmd_sweep(cli: &Cli, a: &SweepCmd) -> Outcome {
    check_sp(a.sp)?;
    if let Some(m) = &a.model {
        require_file(m, "model file")?;
    }
    let mut spec = match a.preset {
        Preset::Desk => SweepSpec::desk(),
        Preset::Full => SweepSpec::full(),
    };
    if let Some(ns) = &a.n {
        spec.ns = ns.clone();
    }
    if let Some(al) = &a.alphas {
        spec.alphas = al.clone();
    }
    spec.instances = a.instances.unwrap_or(spec.instances);
    spec.filter = a.filter.into();
    spec.sp = a.sp.params();
    spec.seed = cli.seed;
    spec.deepsp.eta_one_tol = a.eta_one_tol;
    spec.deepsp.scaling = a.scaling.into();
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let hash = announce(
        "sweep",
        cli,
        json!({
            "preset": a.preset, "n": spec.ns, "alphas": spec.alphas, "instances": spec.instances,
            "filter": spec.filter, "tmax": spec.sp.t_max, "eps": spec.sp.epsilon, "model": a.model,
            "eta_one_tol": a.eta_one_tol, "scaling": a.scaling, "append": a.append,
        }),
    );
    let model = match &a.model {
        Some(p) => Some(load_model(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let pool = worker_pool(cli.threads).map_err(anyhow::Error::from)?;
    let res = sweep(&spec, model.as_ref(), &pool).map_err(anyhow::Error::from)?;
    write_rows(&dir.join("runs.csv"), RUNS_SCHEMA, &hash, &res.runs, a.append).context("writing runs.csv")?;
    write_rows(&dir.join("sweep.csv"), SWEEP_SCHEMA, &hash, &res.points, a.append).context("writing sweep.csv")?;
    for p in &res.points {
        println!("{}", serde_json::to_string(p).unwrap());
    }
    Ok(())
}

fn cmd_eval(cli: &Cli, a: &EvalCmd) -> Outcome {
    require_file(&a.model, "model file")?;
    let spec = DatasetSpec {
        n: a.n,
        alpha_val: a.alpha,
        num_val_instances: a.instances,
        seed: cli.seed,
        ..DatasetSpec::desk()
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    announce(
        "eval",
        cli,
        json!({ "model": a.model, "n": a.n, "alpha": a.alpha, "instances": a.instances, "scaling": a.scaling }),
    );
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let pool = worker_pool(cli.threads).map_err(anyhow::Error::from)?;
    let val = deepsp::harness::solve_validation(&spec, &pool).map_err(anyhow::Error::from)?;
    let acc = deepsp::harness::accuracy_eval(&model, &val, a.scaling.into()).map_err(anyhow::Error::from)?;
    emit(cli, &serde_json::to_string(&acc).unwrap())
}
