//! Command-line front end: fit learning curves from a points file, then
//! predict, find saturation, compute required sizes, evaluate held-out MAE,
//! generate synthetic datasets, and emit plot-ready tables.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use samplesize::analysis::{
    find_saturation, l1_at_reference, mae, predict_curve, required_size, RequiredSize, SizeGrid,
};
use samplesize::curves::{CurveModel, ModelKind};
use samplesize::dataio::{
    default_schedule, parse_points, read_fit_report, write_fit_report, write_points, CurveDataset,
    FitReport, PointFormat, ReportConfig, ReportDataset, SplitSchedule,
};
use samplesize::fit::{fit, EnsembleWeighting, FitConfig, OptimizerKind, Weighting};
use samplesize::synth::{generate, Noise, SynthSpec};

const SEED_ENV_VAR: &str = "SAMPLESIZE_SEED";

#[derive(Parser)]
#[command(
    name = "samplesize",
    version,
    about = "Learning-curve extrapolation and sample-size planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a curve family to the low-resource training prefix of a points file
    Fit(FitArgs),
    /// Tabulate a fitted curve's predictions over a size grid
    Predict(PredictArgs),
    /// Locate the saturation point of a fitted curve under a threshold alpha
    Saturate(SaturateArgs),
    /// Smallest size predicted to reach a target accuracy
    RequiredSize(RequiredSizeArgs),
    /// Mean absolute error of a fitted curve against held-out points
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset from a known generator curve
    Synth(SynthArgs),
    /// Emit a TSV with observed and per-model predicted accuracies
    Plot(PlotArgs),
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: samplesize::ModelError| e.to_string())
}

#[derive(Args)]
struct InputArgs {
    /// Points file (CSV or JSONL)
    #[arg(long)]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted
    #[arg(long, value_parser = PointFormat::from_str_arg)]
    format: Option<PointFormat>,
    /// Full training-set size; overrides whatever the file declares
    #[arg(long)]
    total: Option<u64>,
    /// Dataset name override
    #[arg(long)]
    name: Option<String>,
}

trait PointFormatArg {
    fn from_str_arg(s: &str) -> Result<PointFormat, String>;
}

impl PointFormatArg for PointFormat {
    fn from_str_arg(s: &str) -> Result<PointFormat, String> {
        s.parse()
    }
}

impl InputArgs {
    fn load(&self) -> Result<CurveDataset> {
        let text = std::fs::read_to_string(&self.input)
            .with_context(|| format!("reading {}", self.input.display()))?;
        let format = self.format.unwrap_or_else(|| infer_format(&self.input));
        parse_points(&text, format, self.name.as_deref(), self.total)
            .with_context(|| format!("parsing {}", self.input.display()))
    }
}

fn infer_format(path: &Path) -> PointFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") | Some("json") => PointFormat::Jsonl,
        _ => PointFormat::Csv,
    }
}

#[derive(Args)]
struct FitTuningArgs {
    /// Optimizer: nls (Levenberg-Marquardt) or gd (Adam)
    #[arg(long, default_value = "nls", value_parser = OptimizerKind::from_str_arg)]
    optimizer: OptimizerKind,
    /// Data weighting: none or size (proportional to training-set size)
    #[arg(long, default_value = "none", value_parser = Weighting::from_str_arg)]
    weighting: Weighting,
    /// Ensemble blend: inverse-rss or uniform
    #[arg(long, default_value = "inverse-rss", value_parser = EnsembleWeighting::from_str_arg)]
    ensemble_weights: EnsembleWeighting,
    /// Optimizer iterations (defaults: 500 for nls, 200 for gd)
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-5)]
    learning_rate: f64,
    /// Relative residual-change stopping tolerance
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Random restarts per fit
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Restart-perturbation seed; falls back to $SAMPLESIZE_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Largest train-role fraction fed to the fitter
    #[arg(long, default_value_t = 0.10)]
    train_max_fraction: f64,
}

trait FromStrArg: Sized {
    fn from_str_arg(s: &str) -> Result<Self, String>;
}

impl FromStrArg for OptimizerKind {
    fn from_str_arg(s: &str) -> Result<Self, String> {
        s.parse()
    }
}

impl FromStrArg for Weighting {
    fn from_str_arg(s: &str) -> Result<Self, String> {
        s.parse()
    }
}

impl FromStrArg for EnsembleWeighting {
    fn from_str_arg(s: &str) -> Result<Self, String> {
        s.parse()
    }
}

impl FitTuningArgs {
    fn config(&self) -> Result<FitConfig> {
        let mut config = match self.optimizer {
            OptimizerKind::Nls => FitConfig::nls(),
            OptimizerKind::Gd => FitConfig::gd(),
        };
        if let Some(iters) = self.max_iterations {
            config.max_iterations = iters;
        }
        config.weighting = self.weighting;
        config.ensemble_weighting = self.ensemble_weights;
        config.learning_rate = self.learning_rate;
        config.convergence_tol = self.tol;
        config.restarts = self.restarts;
        config.rng_seed = resolve_seed(self.seed)?;
        Ok(config)
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|e| anyhow!("bad {SEED_ENV_VAR} value '{text}': {e}")),
        Err(_) => Ok(0),
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Curve family: exp, inverse, pow4 or ensemble
    #[arg(long, default_value = "ensemble", value_parser = parse_kind)]
    model: ModelKind,
    #[command(flatten)]
    tuning: FitTuningArgs,
    /// Report path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Fit report produced by `fit`
    #[arg(long)]
    input: PathBuf,
    /// Grid step in percent of the full size
    #[arg(long, default_value_t = 1)]
    grid_step_percent: u32,
    /// Override the report's total size
    #[arg(long)]
    total: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SaturateArgs {
    /// Fit report produced by `fit`
    #[arg(long)]
    input: PathBuf,
    /// Per-step improvement threshold, in accuracy percentage points
    #[arg(long)]
    alpha: f64,
    /// Reference accuracy (e.g. the recorded full-data performance)
    #[arg(long)]
    reference: Option<f64>,
    #[arg(long, default_value_t = 1)]
    grid_step_percent: u32,
    #[arg(long)]
    total: Option<u64>,
    /// Write the report back with the saturation block filled in
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RequiredSizeArgs {
    /// Fit report produced by `fit`
    #[arg(long)]
    input: PathBuf,
    /// Target accuracy on the [0, 1] scale
    #[arg(long)]
    target: f64,
    #[arg(long, default_value_t = 1)]
    grid_step_percent: u32,
    #[arg(long)]
    total: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Fit report produced by `fit`
    #[arg(long)]
    input: PathBuf,
    /// Held-out points file
    #[arg(long)]
    points: PathBuf,
    #[arg(long, value_parser = PointFormat::from_str_arg)]
    format: Option<PointFormat>,
    #[arg(long)]
    total: Option<u64>,
    /// Points at or above this fraction count as test data when the file
    /// carries no explicit test role
    #[arg(long, default_value_t = 0.55)]
    test_min_fraction: f64,
    /// Write the report back with the evaluation block filled in
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator family: exp, inverse, pow4 or ensemble
    #[arg(long, value_parser = parse_kind)]
    model: ModelKind,
    /// Generator parameters, comma-separated, in family order
    #[arg(long, value_delimiter = ',', required = true)]
    params: Vec<f64>,
    /// Full training-set size
    #[arg(long)]
    total: u64,
    /// Gaussian noise scale; 0 = noiseless
    #[arg(long, default_value_t = 0.0)]
    sigma0: f64,
    /// Shrink noise with size: sigma_i = sigma0 / sqrt(count_i)
    #[arg(long)]
    size_decay: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    name: Option<String>,
    /// Output format (default csv)
    #[arg(long, default_value = "csv", value_parser = PointFormat::from_str_arg)]
    format: PointFormat,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Train fractions, comma-separated (default 0.01..0.10 step 0.01)
    #[arg(long, value_delimiter = ',')]
    train_fractions: Option<Vec<f64>>,
    /// Test fractions, comma-separated (default 0.55..1.00 step 0.05)
    #[arg(long, value_delimiter = ',')]
    test_fractions: Option<Vec<f64>>,
    /// Gap fractions, comma-separated (default 0.15..0.50 step 0.05)
    #[arg(long, value_delimiter = ',')]
    gap_fractions: Option<Vec<f64>>,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<SplitSchedule> {
        let base = default_schedule();
        Ok(SplitSchedule::new(
            self.train_fractions.clone().unwrap_or(base.train_fractions),
            self.test_fractions.clone().unwrap_or(base.test_fractions),
            self.gap_fractions.clone().unwrap_or(base.gap_fractions),
        )?)
    }
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Families to fit and tabulate, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "exp,inverse,pow4,ensemble", value_parser = parse_kind)]
    models: Vec<ModelKind>,
    #[command(flatten)]
    tuning: FitTuningArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => cmd_fit(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Saturate(args) => cmd_saturate(args),
        Command::RequiredSize(args) => cmd_required_size(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_report(path: &Path) -> Result<FitReport> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    read_fit_report(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let dataset = args.input.load()?;
    let config = args.tuning.config()?;
    let train = dataset.train_prefix(args.tuning.train_max_fraction);
    if train.is_empty() {
        bail!(
            "no train-role points at fractions <= {} in {}",
            args.tuning.train_max_fraction,
            args.input.input.display()
        );
    }
    let result = fit(args.model, &train, &config)?;
    let report = FitReport::from_fit(
        ReportDataset {
            name: dataset.name().to_string(),
            total_size: dataset.total_size(),
        },
        ReportConfig::new(args.model, &config, args.tuning.train_max_fraction),
        default_schedule(),
        &result,
    );
    emit(args.out.as_ref(), &write_fit_report(&report))
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let report = load_report(&args.input)?;
    let total = args.total.unwrap_or(report.dataset.total_size);
    let grid = SizeGrid::uniform_with_step(total, args.grid_step_percent)?;
    let rows = predict_curve(&report.model, &grid)?;
    let mut table = String::from("fraction\tcount\tpredicted\tclamped\n");
    for row in rows {
        table.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            row.fraction, row.count, row.accuracy, row.clamped
        ));
    }
    emit(args.out.as_ref(), &table)
}

fn cmd_saturate(args: SaturateArgs) -> Result<()> {
    let report = load_report(&args.input)?;
    let total = args.total.unwrap_or(report.dataset.total_size);
    let grid = SizeGrid::uniform_with_step(total, args.grid_step_percent)?;
    let mut saturation = find_saturation(&report.model, &grid, args.alpha)?;
    if let Some(reference) = args.reference {
        saturation = l1_at_reference(saturation, reference);
    }

    if saturation.saturated {
        println!(
            "saturation size: {} of {} ({}%)",
            saturation.saturation_count,
            total,
            saturation.saturation_fraction * 100.0
        );
    } else {
        println!(
            "not saturated within the grid; last point {} of {} ({}%)",
            saturation.saturation_count,
            total,
            saturation.saturation_fraction * 100.0
        );
    }
    println!(
        "predicted accuracy at saturation: {:.4}",
        saturation.predicted_accuracy_at_saturation
    );
    if let (Some(reference), Some(l1)) = (saturation.reference_accuracy, saturation.l1_distance) {
        println!("l1 distance to reference {reference:.4}: {l1:.2} percentage points");
    }

    if args.out.is_some() {
        let updated = report.with_saturation(saturation);
        emit(args.out.as_ref(), &write_fit_report(&updated))?;
    }
    Ok(())
}

fn cmd_required_size(args: RequiredSizeArgs) -> Result<()> {
    let report = load_report(&args.input)?;
    let total = args.total.unwrap_or(report.dataset.total_size);
    let grid = SizeGrid::uniform_with_step(total, args.grid_step_percent)?;
    match required_size(&report.model, args.target, &grid)? {
        RequiredSize::Reached {
            fraction,
            count,
            predicted_accuracy,
        } => println!(
            "required size: {} of {} ({}%), predicted accuracy {:.4}",
            count,
            total,
            fraction * 100.0,
            predicted_accuracy
        ),
        RequiredSize::Unreachable { asymptote } => match asymptote {
            Some(limit) => println!(
                "target {} unreachable within the grid; asymptote {:.4}",
                args.target, limit
            ),
            None => println!(
                "target {} unreachable within the grid; curve diverges",
                args.target
            ),
        },
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let report = load_report(&args.input)?;
    let text = std::fs::read_to_string(&args.points)
        .with_context(|| format!("reading {}", args.points.display()))?;
    let format = args.format.unwrap_or_else(|| infer_format(&args.points));
    let dataset = parse_points(&text, format, None, args.total)
        .with_context(|| format!("parsing {}", args.points.display()))?;

    let mut test_points = dataset.with_role(samplesize::dataio::Role::Test);
    if test_points.is_empty() {
        test_points = dataset
            .points()
            .iter()
            .filter(|p| p.fraction >= args.test_min_fraction - 1e-12)
            .cloned()
            .collect();
    }
    if test_points.is_empty() {
        bail!(
            "no test points: none carry the test role and none lie at fractions >= {}",
            args.test_min_fraction
        );
    }

    let train_fractions: Vec<f64> = report
        .schedule
        .train_fractions
        .iter()
        .copied()
        .filter(|f| *f <= report.config.train_max_fraction + 1e-12)
        .collect();
    let evaluation = mae(&report.model, &test_points)?.with_train_fractions(train_fractions);
    println!(
        "mae: {} over {} test points",
        evaluation.mae,
        evaluation.per_point.len()
    );

    if args.out.is_some() {
        let updated = report.with_evaluation(evaluation);
        emit(args.out.as_ref(), &write_fit_report(&updated))?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let generator = CurveModel::new(args.model, args.params.clone())?;
    let noise = if args.sigma0 > 0.0 {
        Noise::Gaussian {
            sigma0: args.sigma0,
            size_decay: args.size_decay,
        }
    } else {
        Noise::None
    };
    let spec = SynthSpec {
        generator,
        total_size: args.total,
        schedule: args.schedule.schedule()?,
        noise,
        rng_seed: resolve_seed(args.seed)?,
    };
    let mut dataset = generate(&spec)?;
    if let Some(name) = args.name {
        dataset.set_name(name);
    }
    emit(args.out.as_ref(), &write_points(&dataset, args.format))
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let dataset = args.input.load()?;
    let config = args.tuning.config()?;
    let train = dataset.train_prefix(args.tuning.train_max_fraction);
    if train.is_empty() {
        bail!(
            "no train-role points at fractions <= {}",
            args.tuning.train_max_fraction
        );
    }

    let mut fitted = Vec::new();
    for &kind in &args.models {
        let result = fit(kind, &train, &config)
            .with_context(|| format!("fitting {kind}"))?;
        fitted.push((kind, result.model));
    }

    let schedule = args.schedule.schedule()?;
    let all = schedule.all_fractions();
    let grid = SizeGrid::new(
        dataset.total_size(),
        all.iter().map(|(f, _)| *f).collect(),
    )?;
    let mut columns = Vec::new();
    for (kind, model) in &fitted {
        let rows = predict_curve(model, &grid)
            .with_context(|| format!("predicting with {kind}"))?;
        columns.push(rows);
    }

    let mut table = String::from("fraction\tcount");
    table.push_str("\tobserved");
    for (kind, _) in &fitted {
        table.push_str(&format!("\t{kind}"));
    }
    table.push_str("\trole\n");
    for (i, (fraction, role)) in all.iter().enumerate() {
        let count = grid.count_at(i);
        let observed = dataset
            .points()
            .iter()
            .find(|p| (p.fraction - fraction).abs() < 1e-9)
            .map(|p| p.accuracy.to_string())
            .unwrap_or_default();
        table.push_str(&format!("{fraction}\t{count}\t{observed}"));
        for rows in &columns {
            table.push_str(&format!("\t{}", rows[i].accuracy));
        }
        table.push_str(&format!("\t{role}\n"));
    }
    emit(args.out.as_ref(), &table)
}
