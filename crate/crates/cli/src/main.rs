//! `rexkit` command line: extract rules from tabular data, train and prune
//! the small feedforward network on its own, evaluate saved rulesets, export
//! the embedded fixture datasets, and reproduce the four reference benchmarks
//! in one batch.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
//! Every run echoes its effective configuration as one JSON line on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rexkit::dataset::{
    builtin_fixture, dataset_to_csv, infer_schema, load_breast, load_csv, load_iris, normalize,
    CsvOptions, Dataset, Fixture,
};
use rexkit::network::{self, TrainConfig};
use rexkit::pipeline::{
    benchmark_bands, benchmark_profile, encode_inputs, evaluate, report_render, run, Benchmark,
    Mode, PipelineConfig, ReportFormat, RunOutcome,
};
use rexkit::rex::{render_ruleset, ruleset_from_json, SearchMode};
use rexkit::{Error, Result};

/// The binary works at one concrete precision; the library stays generic.
type Num = f64;

#[derive(Parser)]
#[command(name = "rexkit", version, about = "Rule extraction for tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract a ruleset from a dataset, directly or through a trained network
    Extract(ExtractArgs),
    /// Train and prune the network without extracting rules
    Train(TrainArgs),
    /// Evaluate a saved ruleset JSON against a dataset
    Eval(EvalArgs),
    /// Run the four reference benchmarks and check them against their bands
    Reproduce(ReproduceArgs),
    /// Write an embedded fixture dataset as CSV
    ExportFixture(ExportFixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    Reann,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchArg {
    Greedy,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

impl From<ModeArg> for Mode {
    fn from(arg: ModeArg) -> Mode {
        match arg {
            ModeArg::Direct => Mode::Direct,
            ModeArg::Reann => Mode::Reann,
        }
    }
}

impl From<SearchArg> for SearchMode {
    fn from(arg: SearchArg) -> SearchMode {
        match arg {
            SearchArg::Greedy => SearchMode::Greedy,
            SearchArg::Exhaustive => SearchMode::Exhaustive,
        }
    }
}

impl From<FormatArg> for ReportFormat {
    fn from(arg: FormatArg) -> ReportFormat {
        match arg {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

/// Dataset selection shared by extract, train, and eval.
#[derive(Args)]
struct DataFlags {
    /// Dataset to use: fixture:golf, fixture:season, iris:PATH, breast:PATH,
    /// csv:PATH, or a bare CSV path
    #[arg(long)]
    data: String,
    /// Generic CSV only: treat the first row as a header
    #[arg(long)]
    csv_header: bool,
    /// Generic CSV only: class column index; default is the last field
    #[arg(long)]
    class_column: Option<usize>,
    /// Generic CSV only: comma-separated column indexes to drop
    #[arg(long, value_delimiter = ',')]
    ignore_columns: Vec<usize>,
}

impl DataFlags {
    fn load(&self) -> Result<Dataset<Num>> {
        if let Some(name) = self.data.strip_prefix("fixture:") {
            return Ok(builtin_fixture(Fixture::parse(name)?));
        }
        if let Some(path) = self.data.strip_prefix("iris:") {
            return load_iris(Path::new(path));
        }
        if let Some(path) = self.data.strip_prefix("breast:") {
            return load_breast(Path::new(path));
        }
        let path = Path::new(self.data.strip_prefix("csv:").unwrap_or(&self.data));
        let options = CsvOptions {
            has_header: self.csv_header,
            class_column: self.class_column,
            ignore_columns: self.ignore_columns.clone(),
        };
        let schema = infer_schema::<Num>(path, &options)?;
        load_csv(path, &schema, &options)
    }
}

/// Training overrides shared by extract and train.
#[derive(Args)]
struct TrainFlags {
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    target_mse: Option<f64>,
    #[arg(long)]
    max_hidden: Option<usize>,
    /// Allowed training-accuracy drop before a pruned connection is reverted
    #[arg(long)]
    prune_slack: Option<f64>,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut TrainConfig<Num>) {
        if let Some(x) = self.learning_rate {
            cfg.learning_rate = x;
        }
        if let Some(x) = self.momentum {
            cfg.momentum = x;
        }
        if let Some(x) = self.max_epochs {
            cfg.max_epochs = x;
        }
        if let Some(x) = self.target_mse {
            cfg.target_mse = x;
        }
        if let Some(x) = self.max_hidden {
            cfg.max_hidden = x;
        }
        if let Some(x) = self.prune_slack {
            cfg.prune_accuracy_slack = x;
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    data: DataFlags,
    #[arg(long, value_enum, default_value_t = ModeArg::Direct)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = SearchArg::Exhaustive)]
    search: SearchArg,
    /// Longest conjunction the exhaustive search tries before falling back
    #[arg(long, default_value_t = 3)]
    max_len: usize,
    /// Rules covering fewer training patterns than this are dropped as noise
    #[arg(long, default_value_t = 1)]
    noise: usize,
    /// Fraction of patterns held out for a test-accuracy figure
    #[arg(long, default_value_t = 0.0)]
    test_fraction: f64,
    /// Seed for training and splitting; REXKIT_SEED is the fallback
    #[arg(long)]
    seed: Option<u64>,
    /// Report format for standard output
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Directory to write artifacts into
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataFlags,
    /// Seed for weight initialization; REXKIT_SEED is the fallback
    #[arg(long)]
    seed: Option<u64>,
    /// Directory to write network.json and train_report.json into
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Path to a ruleset JSON written by extract
    #[arg(long)]
    rules: PathBuf,
    #[command(flatten)]
    data: DataFlags,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Directory receiving one artifact subdirectory per benchmark
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Iris CSV path (sepal/petal measurements, species label last)
    #[arg(long, default_value = "data/iris.csv")]
    iris: PathBuf,
    /// Breast-cancer CSV path (id column, nine 1..10 attributes, 2/4 label)
    #[arg(long, default_value = "data/breast-cancer.csv")]
    breast: PathBuf,
    /// Seed applied to every benchmark; REXKIT_SEED is the fallback
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExportFixtureArgs {
    /// Which fixture: golf or season
    #[arg(long)]
    name: String,
    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Reproduce(args) => cmd_reproduce(args),
        Command::ExportFixture(args) => cmd_export_fixture(args),
    }
}

/// `--seed` wins, then REXKIT_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("REXKIT_SEED") {
        Ok(raw) => raw.trim().parse().map_err(|_| {
            Error::Config(format!("REXKIT_SEED must be an unsigned integer, got '{raw}'"))
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(err) => Err(Error::Config(format!("REXKIT_SEED: {err}"))),
    }
}

fn echo_config(value: serde_json::Value) {
    eprintln!("config: {value}");
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a run's artifacts plus report.json into `dir`.
fn write_outcome(dir: &Path, outcome: &RunOutcome<Num>) -> Result<()> {
    create_dir(dir)?;
    for (name, content) in &outcome.artifacts {
        write_file(&dir.join(name), content)?;
    }
    let report = serde_json::to_string_pretty(&outcome.report)? + "\n";
    write_file(&dir.join("report.json"), &report)
}

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let data = args.data.load()?;
    let seed = resolve_seed(args.seed)?;

    let mut cfg = PipelineConfig::<Num>::default();
    cfg.mode = args.mode.into();
    cfg.extract.search_mode = args.search.into();
    cfg.extract.exhaustive_max_len = args.max_len;
    cfg.extract.noise_min_coverage = args.noise;
    cfg.split.test_fraction = args.test_fraction;
    cfg.split.seed = seed;
    cfg.train.seed = seed;
    args.train.apply(&mut cfg.train);
    echo_config(serde_json::json!({
        "command": "extract",
        "data": args.data.data,
        "out": args.out,
        "pipeline": serde_json::to_value(&cfg)?,
    }));

    let outcome = run(&data, &cfg)?;
    print!(
        "{}",
        render_ruleset(&outcome.ruleset, &data.schema, &data.classes)
    );
    println!();
    print!("{}", report_render(&outcome.report, args.format.into()));
    if let Some(agreement) = outcome.discretization_agreement {
        println!("discretization agreement: {agreement:.4}");
    }
    if let Some(dir) = &args.out {
        write_outcome(dir, &outcome)?;
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let data = args.data.load()?;
    if data.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    if data.classes.len() < 2 {
        return Err(Error::Config(
            "training needs at least two classes".into(),
        ));
    }
    let seed = resolve_seed(args.seed)?;
    let mut cfg = TrainConfig::<Num>::default();
    cfg.seed = seed;
    args.train.apply(&mut cfg);
    echo_config(serde_json::json!({
        "command": "train",
        "data": args.data.data,
        "out": args.out,
        "train": serde_json::to_value(&cfg)?,
    }));

    let (normal, _) = normalize(&data);
    let inputs = encode_inputs(&normal);
    let labels: Vec<usize> = data.patterns.iter().map(|p| p.label).collect();
    let mut net = network::init_network::<Num>(inputs[0].len(), data.classes.len(), seed);
    let mut report = network::train(&mut net, &inputs, &labels, &cfg)?;
    let (net, pruned) = network::prune(&net, &inputs, &labels, &cfg)?;
    report.connections_pruned = pruned;
    report.inputs_removed = (0..net.input_count)
        .filter(|&i| (0..net.hidden_count).all(|h| !net.mask_ih[h][i]))
        .count();
    report.train_accuracy = network::accuracy(&net, &inputs, &labels);

    println!("hidden nodes: {}", net.hidden_count);
    println!("epochs: {}", report.epochs_run);
    println!("final mse: {:.6}", report.final_mse);
    println!("connections pruned: {}", report.connections_pruned);
    println!("inputs removed: {}", report.inputs_removed);
    println!("train accuracy: {:.4}", report.train_accuracy);

    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let net_doc = serde_json::to_string_pretty(&net)? + "\n";
        write_file(&dir.join("network.json"), &net_doc)?;
        let report_doc = serde_json::to_string_pretty(&report)? + "\n";
        write_file(&dir.join("train_report.json"), &report_doc)?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let data = args.data.load()?;
    let raw = std::fs::read_to_string(&args.rules).map_err(|source| Error::Io {
        path: args.rules.display().to_string(),
        source,
    })?;
    let doc: serde_json::Value = serde_json::from_str(&raw)?;
    let ruleset = ruleset_from_json::<Num>(&doc, &data.schema, &data.classes)?;
    echo_config(serde_json::json!({
        "command": "eval",
        "rules": args.rules,
        "data": args.data.data,
    }));
    let report = evaluate(&ruleset, &data, None);
    print!("{}", report_render(&report, args.format.into()));
    Ok(())
}

/// Display label for the combined benchmark table.
fn benchmark_label(benchmark: Benchmark) -> &'static str {
    match benchmark {
        Benchmark::Golf => "Golf Playing",
        Benchmark::Season => "Season",
        Benchmark::Iris => "Iris",
        Benchmark::Breast => "Breast Cancer",
    }
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    echo_config(serde_json::json!({
        "command": "reproduce",
        "out": args.out,
        "iris": args.iris,
        "breast": args.breast,
        "seed": seed,
    }));
    create_dir(&args.out)?;

    // Same row order as the reference table.
    let order = [
        Benchmark::Breast,
        Benchmark::Iris,
        Benchmark::Season,
        Benchmark::Golf,
    ];
    let mut table = vec![format!(
        "{:<13}  {:>5}  {:>9}  {}",
        "Data Set", "Rules", "Accuracy", "Check"
    )];
    let mut csv_rows = vec![
        "dataset,rules_excl_default,rules_incl_default,avg_conditions,train_accuracy,\
         test_accuracy,fidelity_to_network,inconsistency_rate"
            .to_string(),
    ];
    let mut failures = 0usize;

    for benchmark in order {
        let name = benchmark.name();
        let label = benchmark_label(benchmark);
        let loaded = match benchmark {
            Benchmark::Iris => load_iris::<Num>(&args.iris),
            Benchmark::Breast => load_breast::<Num>(&args.breast),
            Benchmark::Golf => Ok(builtin_fixture(Fixture::Golf)),
            Benchmark::Season => Ok(builtin_fixture(Fixture::Season)),
        };
        let outcome = loaded.and_then(|data| {
            let mut cfg = benchmark_profile::<Num>(benchmark);
            cfg.train.seed = seed;
            cfg.split.seed = seed;
            run(&data, &cfg)
        });
        match outcome {
            Ok(outcome) => {
                write_outcome(&args.out.join(name), &outcome)?;
                let report = &outcome.report;
                let violations = benchmark_bands(benchmark).violations(report);
                for violation in &violations {
                    eprintln!("band violation ({name}): {violation}");
                }
                let check = if violations.is_empty() {
                    "pass"
                } else {
                    failures += 1;
                    "FAIL"
                };
                table.push(format!(
                    "{:<13}  {:>5}  {:>9}  {}",
                    label,
                    report.rule_count_incl_default,
                    format!("{:.2} %", report.train_accuracy * 100.0),
                    check
                ));
                let row = report_render(report, ReportFormat::Csv);
                let row = row.lines().nth(1).unwrap_or_default();
                csv_rows.push(format!("{name},{row}"));
            }
            Err(err) => {
                eprintln!("error ({name}): {err}");
                failures += 1;
                table.push(format!("{label:<13}  {:>5}  {:>9}  error", "-", "-"));
                csv_rows.push(format!("{name},,,,,,,"));
            }
        }
    }

    let table = table.join("\n") + "\n";
    print!("{table}");
    write_file(&args.out.join("summary.txt"), &table)?;
    write_file(&args.out.join("summary.csv"), &(csv_rows.join("\n") + "\n"))?;

    if failures > 0 {
        return Err(Error::Data(format!(
            "{failures} of {} benchmarks failed",
            order.len()
        )));
    }
    Ok(())
}

fn cmd_export_fixture(args: ExportFixtureArgs) -> Result<()> {
    let data: Dataset<Num> = builtin_fixture(Fixture::parse(&args.name)?);
    echo_config(serde_json::json!({
        "command": "export-fixture",
        "name": args.name,
        "out": args.out,
    }));
    let csv = dataset_to_csv(&data);
    match &args.out {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
