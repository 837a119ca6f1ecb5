use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use borda_impute::confidence::{confidence_report, significance_heatmap, Sidedness};
use borda_impute::evaluation::{agreement_analysis, robustness_curve};
use borda_impute::io::{
    read_dataset, write_agreement_csv, write_confidence_csv, write_heatmap_csv, write_json, write_long_csv,
    write_ranking_csv, write_robustness_csv, DatasetDocument, LabeledDataset, RankingDocument,
};
use borda_impute::synthetic::{corrupt_missing, generate_gumbel, scale_task, GumbelConfig};
use borda_impute::{
    aggregate, borda_from_matrix, instance_accumulation, task_accumulation, Dataset, Error, Level, Method,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Rank systems benchmarked on several tasks when some evaluations are missing.
#[derive(Debug, Parser)]
#[command(name = "borda-impute", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Aggregate per-task scores into one ranking.
    Aggregate(AggregateArgs),
    /// Pairwise Hoeffding intervals and a significance heatmap.
    Confidence(ConfidenceArgs),
    /// Sample a Gumbel benchmark as long CSV.
    Synth(SynthArgs),
    /// Remove a share of (system, task) pairs or task scores.
    Corrupt(CorruptArgs),
    /// Multiply one task's scores by a positive factor.
    Scale(ScaleArgs),
    /// Kendall tau of each method against itself on corrupted data.
    Robustness(ExperimentArgs),
    /// Pairwise agreement between methods on corrupted data.
    Agreement(ExperimentArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Base seed; defaults to $RANK_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LevelArg {
    Task,
    Instance,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Task => Level::Task,
            LevelArg::Instance => Level::Instance,
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|_| format!("unknown method {s:?} (expected sigma-l, sigma-2l or mean)"))
}

#[derive(Debug, Args)]
struct AggregateArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, value_enum, default_value = "task")]
    level: LevelArg,
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated tasks whose metric is lower-is-better.
    #[arg(long, value_delimiter = ',')]
    negate_metrics: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ConfidenceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "task")]
    level: LevelArg,
    /// Failure probability per pair.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Use ln(2/delta) instead of ln(1/delta).
    #[arg(long)]
    strict_two_sided: bool,
    /// Also write the heatmap CSV here.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    negate_metrics: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    systems: usize,
    #[arg(long)]
    tasks: usize,
    #[arg(long)]
    instances: usize,
    #[arg(long)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CorruptArgs {
    #[arg(long)]
    eta: f64,
    #[arg(long, value_enum, default_value = "task")]
    level: LevelArg,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    /// Task name, or its zero-based index when no task has that name.
    #[arg(long)]
    task: String,
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "task")]
    level: LevelArg,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long, conflicts_with = "synth_config", required_unless_present = "synth_config")]
    input: Option<PathBuf>,
    /// JSON Gumbel configuration: systems, tasks, instances, phi[, beta, seed].
    #[arg(long)]
    synth_config: Option<PathBuf>,
    /// Level for `--input`; synthetic data is always instance level.
    #[arg(long, value_enum, default_value = "task")]
    level: LevelArg,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "sigma-l,mean")]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', required = true)]
    etas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[command(flatten)]
    common: Common,
}

type Result<T> = borda_impute::Result<T>;

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("RANK_SEED") {
        Ok(v) => {
            v.trim().parse().map_err(|_| Error::Validation(format!("RANK_SEED is not an unsigned integer: {v:?}")))
        }
        Err(_) => Ok(0),
    }
}

fn emit(common: &Common, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    match &common.output {
        Some(path) => fs::write(path, buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn emit_dataset(common: &Common, data: &LabeledDataset) -> Result<()> {
    emit(common, |out| match common.format.unwrap_or(Format::Csv) {
        Format::Csv => write_long_csv(out, data),
        Format::Json => write_json(out, &DatasetDocument::new(data)),
    })
}

fn load(input: &Path, level: LevelArg, negate: &[String]) -> Result<LabeledDataset> {
    let mut data = read_dataset(input, level.into())?;
    data.negate_tasks(negate)?;
    Ok(data)
}

fn run_aggregate(args: AggregateArgs) -> Result<()> {
    let data = load(&args.input, args.level, &args.negate_metrics)?;
    let agg = aggregate::<f64>(args.method, &data.data)?;
    emit(&args.common, |out| match args.common.format.unwrap_or(Format::Json) {
        Format::Json => write_json(out, &RankingDocument::new(&agg, data.level(), &data.systems)),
        Format::Csv => write_ranking_csv(out, &agg, &data.systems),
    })
}

#[derive(Serialize)]
struct ConfidenceDocument<'a> {
    report: &'a borda_impute::ConfidenceReport,
    system_names: &'a [String],
    heatmap_order: Vec<usize>,
    heatmap: Vec<Vec<f64>>,
}

fn run_confidence(args: ConfidenceArgs) -> Result<()> {
    let data = load(&args.input, args.level, &args.negate_metrics)?;
    let acc = match &data.data {
        Dataset::Task(table) => task_accumulation::<f64>(table)?,
        Dataset::Instance(tensor) => instance_accumulation::<f64>(tensor)?,
    };
    let sides = if args.strict_two_sided { Sidedness::TwoSided } else { Sidedness::OneSided };
    let report = confidence_report(&acc, args.delta, sides)?;
    let order = borda_from_matrix(&acc);
    let heatmap = significance_heatmap(&report, &order)?;
    let ids = order.ordering_indices();
    if let Some(path) = &args.heatmap {
        write_heatmap_csv(File::create(path)?, &heatmap, &ids, &data.systems)?;
    }
    emit(&args.common, |out| match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => write_confidence_csv(out, &report),
        Format::Json => write_json(
            out,
            &ConfidenceDocument { report: &report, system_names: &data.systems, heatmap_order: ids, heatmap },
        ),
    })
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let cfg = GumbelConfig {
        systems: args.systems,
        tasks: args.tasks,
        instances: args.instances,
        phi: args.phi,
        beta: args.beta,
        seed: resolve_seed(args.common.seed)?,
    };
    let tensor = generate_gumbel(&cfg)?;
    emit_dataset(&args.common, &LabeledDataset::with_default_labels(Dataset::Instance(tensor)))
}

fn run_corrupt(args: CorruptArgs) -> Result<()> {
    let mut data = load(&args.input, args.level, &[])?;
    data.data = corrupt_missing(&data.data, args.eta, resolve_seed(args.common.seed)?)?;
    emit_dataset(&args.common, &data)
}

fn run_scale(args: ScaleArgs) -> Result<()> {
    let mut data = load(&args.input, args.level, &[])?;
    let task = match data.tasks.iter().position(|t| *t == args.task) {
        Some(t) => t,
        None => args.task.parse().map_err(|_| Error::Validation(format!("unknown task {:?}", args.task)))?,
    };
    data.data = scale_task(&data.data, task, args.lambda)?;
    emit_dataset(&args.common, &data)
}

fn experiment_data(args: &ExperimentArgs) -> Result<Dataset> {
    match (&args.input, &args.synth_config) {
        (Some(path), _) => Ok(read_dataset(path, args.level.into())?.data),
        (None, Some(path)) => {
            let cfg: GumbelConfig = serde_json::from_reader(BufReader::new(File::open(path)?))?;
            Ok(Dataset::Instance(generate_gumbel(&cfg)?))
        }
        (None, None) => Err(Error::Validation("one of --input or --synth-config is required".into())),
    }
}

fn run_robustness(args: ExperimentArgs) -> Result<()> {
    let data = experiment_data(&args)?;
    let curve = robustness_curve(&data, &args.methods, &args.etas, args.repeats, resolve_seed(args.common.seed)?)?;
    emit(&args.common, |out| match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => write_robustness_csv(out, &curve),
        Format::Json => write_json(out, &curve),
    })
}

fn run_agreement(args: ExperimentArgs) -> Result<()> {
    let data = experiment_data(&args)?;
    let agreement =
        agreement_analysis(&data, &args.methods, &args.etas, args.repeats, resolve_seed(args.common.seed)?)?;
    emit(&args.common, |out| match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => write_agreement_csv(out, &agreement),
        Format::Json => write_json(out, &agreement),
    })
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Invariant(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Aggregate(a) => run_aggregate(a),
        Command::Confidence(a) => run_confidence(a),
        Command::Synth(a) => run_synth(a),
        Command::Corrupt(a) => run_corrupt(a),
        Command::Scale(a) => run_scale(a),
        Command::Robustness(a) => run_robustness(a),
        Command::Agreement(a) => run_agreement(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
