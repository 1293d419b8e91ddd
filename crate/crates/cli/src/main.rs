//! `fewshot` command-line interface.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use fewshot_core::embedding_store::{load_dataset, save_dataset, synth_fixture};
use fewshot_core::error::ErrorKind;
use fewshot_core::eval::{evaluate, paired_ttest, Method, MetricsReport};
use fewshot_core::fsutil::write_atomic;
use fewshot_core::numkit::HeadKind;
use fewshot_core::snn::{build_pairs, train_soe, write_pairs, Aggregator};

use config::{ConfigError, ExperimentArgs, ExperimentConfig, KeyValues, TrainKnobs};

#[derive(Parser)]
#[command(name = "fewshot", version, about = "Few-shot text classification with Siamese networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run M few-shot episodes and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Dump the labelled pair set of a training file as JSON Lines.
    Pairs {
        #[arg(long)]
        train: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a second-order Siamese network on a file and save the model.
    TrainSoe {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// Paired t-test over the averaged (P, R, F) of two reports.
    Ttest { a: PathBuf, b: PathBuf },
    /// Write a synthetic Gaussian embedding fixture.
    Synth {
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 8)]
        per_class: usize,
        #[arg(long, default_value_t = 8)]
        dimension: usize,
        #[arg(long, default_value_t = 4.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretty-print a metrics report.
    Report {
        path: PathBuf,
        /// Re-emit the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct EvaluateArgs {
    /// `key=value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m_runs: Option<usize>,
    #[arg(long)]
    aggregator: Option<Aggregator>,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long)]
    model_tag: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    knobs: KnobArgs,
}

#[derive(Args)]
struct KnobArgs {
    #[arg(long)]
    head: Option<HeadKind>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Feed the pooled vector to the encoder even when tokens are present.
    #[arg(long)]
    prefer_pooled: bool,
}

impl From<KnobArgs> for TrainKnobs {
    fn from(a: KnobArgs) -> Self {
        Self {
            head: a.head,
            hidden: a.hidden,
            epochs: a.epochs,
            lr: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            weight_decay: a.weight_decay,
            batch_size: a.batch_size,
            prefer_pooled: a.prefer_pooled.then_some(true),
        }
    }
}

enum Failure {
    Config(String),
    Engine(fewshot_core::Error),
    Output(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<fewshot_core::Error> for Failure {
    fn from(e: fewshot_core::Error) -> Self {
        Failure::Engine(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Output(_) => 3,
            Failure::Engine(e) => match e.kind() {
                ErrorKind::Usage => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
                ErrorKind::Degenerate => 5,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config error: {m}"),
            Failure::Output(m) => m.clone(),
            Failure::Engine(e) => match e.kind() {
                ErrorKind::Usage => format!("config error: {e}"),
                ErrorKind::Data => format!("data error: {e}"),
                ErrorKind::Numeric => format!("numeric error: {e}"),
                ErrorKind::Degenerate => format!("degenerate input: {e}"),
            },
        }
    }
}

fn load_file_config(path: Option<&Path>) -> Result<KeyValues, Failure> {
    Ok(match path {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    })
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let file = load_file_config(args.config.as_deref())?;
    let raw = ExperimentArgs {
        train: args.train,
        test: args.test,
        method: args.method,
        k: args.k,
        m_runs: args.m_runs,
        aggregator: args.aggregator,
        seed_base: args.seed_base,
        model_tag: args.model_tag,
        out: args.out,
        verbose: args.verbose.then_some(true),
        knobs: args.knobs.into(),
    };
    let cfg = ExperimentConfig::resolve(raw, &file)?;
    let train = load_dataset(&cfg.train)?;
    let test = load_dataset(&cfg.test)?;
    let mut report = evaluate(&train, &test, cfg.method, cfg.k, cfg.m_runs, &cfg.eval)?;
    report.timestamp = Some(unix_now());
    report.save(&cfg.out)?;
    let a = report.averaged;
    println!(
        "{} k={} runs={}: P={:.4} R={:.4} F={:.4} -> {}",
        cfg.method,
        cfg.k,
        cfg.m_runs,
        a.precision,
        a.recall,
        a.fscore,
        cfg.out.display()
    );
    Ok(())
}

fn run_pairs(train: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let data = load_dataset(train)?;
    let pairs = build_pairs(&data);
    let mut buf = Vec::new();
    write_pairs(&data, &pairs, &mut buf)?;
    match out {
        Some(p) => write_atomic(p, &buf)?,
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| Failure::Output(format!("cannot write stdout: {e}")))?,
    }
    Ok(())
}

fn run_train_soe(
    train: &Path,
    out: &Path,
    seed: u64,
    config: Option<&Path>,
    knobs: KnobArgs,
) -> Result<(), Failure> {
    let file = load_file_config(config)?;
    let soe = TrainKnobs::from(knobs).merged(&file)?.soe()?;
    let data = load_dataset(train)?;
    let model = train_soe(&data, &soe, seed)?;
    model.save(out)?;
    println!(
        "trained on {} pairs: loss {:.6} -> {:.6} -> {}",
        model.training.pairs,
        model.training.initial_loss,
        model.training.final_loss,
        out.display()
    );
    Ok(())
}

fn run_ttest(a: &Path, b: &Path) -> Result<(), Failure> {
    let ra = MetricsReport::load(a)?;
    let rb = MetricsReport::load(b)?;
    let result = paired_ttest(&ra.averaged, &rb.averaged)?;
    let json = serde_json::json!({ "t": result.t, "p": result.p, "d": result.d });
    println!("{json}");
    Ok(())
}

fn run_synth(
    classes: usize,
    per_class: usize,
    dimension: usize,
    separation: f64,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let data = synth_fixture(classes, per_class, dimension, separation, seed)?;
    save_dataset(&data, out)?;
    Ok(())
}

fn run_report(path: &Path, json: bool) -> Result<(), Failure> {
    let report = MetricsReport::load(path)?;
    if json {
        println!("{}", report.to_json_pretty()?);
        return Ok(());
    }
    let c = &report.config;
    println!("{} ({})", report.format, report.engine_version);
    if let Some(ts) = report.timestamp {
        println!("timestamp   {ts}");
    }
    println!("method      {}", c.method);
    if !c.model_tag.is_empty() {
        println!("model tag   {}", c.model_tag);
    }
    if let Some(agg) = c.aggregator {
        println!("aggregator  {agg}");
    }
    println!("k           {}", c.k);
    println!("runs        {}", c.m_runs);
    println!("records     train {} / test {}", c.train_records, c.test_records);
    println!();
    println!("{:>20}  {:>9}  {:>9}  {:>9}", "seed", "precision", "recall", "f-score");
    for run in &report.per_run {
        let m = run.metrics;
        println!(
            "{:>20}  {:>9.4}  {:>9.4}  {:>9.4}",
            run.seed, m.precision, m.recall, m.fscore
        );
    }
    let a = report.averaged;
    println!(
        "{:>20}  {:>9.4}  {:>9.4}  {:>9.4}",
        "average", a.precision, a.recall, a.fscore
    );
    for note in &report.notes {
        println!("note: {note}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate(args) => run_evaluate(args),
        Command::Pairs { train, out } => run_pairs(&train, out.as_deref()),
        Command::TrainSoe {
            train,
            out,
            seed,
            config,
            knobs,
        } => run_train_soe(&train, &out, seed, config.as_deref(), knobs),
        Command::Ttest { a, b } => run_ttest(&a, &b),
        Command::Synth {
            classes,
            per_class,
            dimension,
            separation,
            seed,
            out,
        } => run_synth(classes, per_class, dimension, separation, seed, &out),
        Command::Report { path, json } => run_report(&path, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fewshot: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
