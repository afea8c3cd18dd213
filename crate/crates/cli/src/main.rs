//! `styleforge`: batch style-transfer experiments.
//!
//! Exit codes: 0 success, 1 runtime or backend failure, 2 usage or
//! configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use styleforge::backends::{BackendConfig, BackendSet};
use styleforge::datasets::{self, load_corpus, load_lines, DatasetSpec};
use styleforge::harness::{self, ExperimentConfig};
use styleforge::masking::MaskingConfig;
use styleforge::metrics::{BleuTokenizer, EvalOptions};
use styleforge::strategies::{IclWording, Method, StrategyConfig};
use styleforge::{Corpus, Error, TransferDirection};

#[derive(Parser)]
#[command(name = "styleforge", version, about = "Unsupervised text style transfer experiments")]
struct Cli {
    /// Backend configuration JSON, or `toyvolt` for the bundled mocks.
    #[arg(long, global = true, env = "STYLEFORGE_BACKENDS")]
    backends: Option<String>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Sentences processed concurrently.
    #[arg(long, global = true, default_value_t = 4)]
    parallelism: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer a test set; writes outputs.txt and manifest.json.
    Transfer(TransferArgs),
    /// Score hypotheses; writes report.json and table.md.
    Evaluate(EvaluateArgs),
    /// Synthesize mask and fill supervision; writes d1.jsonl and d2.jsonl.
    Distill(DistillArgs),
    /// Pick in-context demonstrations for one query; writes demos.json.
    DemoSelect(DemoSelectArgs),
    /// Evaluate prompt-then-am over a grid of α; writes sweep.csv.
    SweepAlpha(SweepArgs),
}

#[derive(Args)]
struct DatasetArgs {
    /// Built-in dataset name or a dataset spec JSON file.
    #[arg(long)]
    dataset: String,

    /// Directory holding the built-in dataset's files.
    #[arg(long)]
    data_root: Option<PathBuf>,

    /// `source:target`, e.g. `negative:positive`.
    #[arg(long)]
    direction: TransferDirection,
}

#[derive(Args)]
struct StrategyArgs {
    #[arg(long, default_value = "llm")]
    method: Method,

    /// Masking aggressiveness α in [0, 1]; masks tokens scoring above 1 − α.
    #[arg(long, conflicts_with = "tau")]
    alpha: Option<f64>,

    /// Direct masking threshold τ in [0, 1].
    #[arg(long)]
    tau: Option<f64>,

    /// Demonstrations per query for am-as-demo.
    #[arg(long, default_value_t = StrategyConfig::DEFAULT_K)]
    k: usize,

    /// Noun in the in-context instruction; `style` for politeness by default.
    #[arg(long, value_enum)]
    icl_wording: Option<Wording>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Wording {
    Sentiment,
    Style,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tokenizer {
    Engine,
    #[value(name = "13a")]
    Mteval13a,
}

#[derive(Args)]
struct TransferArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Hypotheses, one per line.
    #[arg(long)]
    hyp: PathBuf,
    /// Sources, one per line.
    #[arg(long)]
    src: PathBuf,
    /// References, one per line.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    direction: TransferDirection,
    /// Row label in table.md.
    #[arg(long, default_value = "run")]
    label: String,
    #[arg(long, value_enum, default_value_t = Tokenizer::Engine)]
    bleu_tokenizer: Tokenizer,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorpusArgs {
    /// Source-style corpus file; defaults to the dataset's training file.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_root: Option<PathBuf>,
    #[arg(long)]
    direction: TransferDirection,
}

#[derive(Args)]
struct DistillArgs {
    #[command(flatten)]
    source: CorpusArgs,
    /// Sentences to sample.
    #[arg(long, default_value_t = StrategyConfig::DEFAULT_SIGNAL_SAMPLES)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DemoSelectArgs {
    #[command(flatten)]
    source: CorpusArgs,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = StrategyConfig::DEFAULT_K)]
    k: usize,
    /// Direct masking threshold for transferring the demonstrations.
    #[arg(long, default_value_t = MaskingConfig::DEFAULT_TAU)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = Wording::Sentiment)]
    icl_wording: Wording,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Comma-separated α values, ascending.
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    grid: String,
    /// Add a masked_tokens column.
    #[arg(long)]
    emit_mask_counts: bool,
    #[arg(long, value_enum, default_value_t = Tokenizer::Engine)]
    bleu_tokenizer: Tokenizer,
    #[arg(long)]
    out: PathBuf,
}

type Result<T> = styleforge::Result<T>;

fn load_backends(arg: Option<&str>) -> Result<BackendSet> {
    match arg {
        None => Err(Error::Config("no backends: pass --backends or set STYLEFORGE_BACKENDS".into())),
        Some("toyvolt") => BackendSet::from_config(&BackendConfig::toyvolt(), Path::new(".")),
        Some(path) => BackendSet::from_file(Path::new(path)),
    }
}

fn load_dataset(name: &str, root: Option<&Path>) -> Result<DatasetSpec> {
    let path = Path::new(name);
    if name.ends_with(".json") || path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = root.map(Path::to_path_buf).unwrap_or_else(|| {
            path.parent().map(Path::to_path_buf).unwrap_or_default()
        });
        datasets::parse_dataset_spec(&text, &base)
    } else {
        datasets::builtin(name, root)
    }
}

fn source_corpus(args: &CorpusArgs) -> Result<Corpus> {
    let style = args.direction.source();
    match (&args.corpus, &args.dataset) {
        (Some(path), _) => load_corpus(path, style),
        (None, Some(name)) => {
            let spec = load_dataset(name, args.data_root.as_deref())?;
            spec.check_direction(&args.direction)?;
            spec.load_train(style)
        }
        (None, None) => Err(Error::Config("pass --corpus or --dataset".into())),
    }
}

fn wording(w: Wording) -> IclWording {
    match w {
        Wording::Sentiment => IclWording::Sentiment,
        Wording::Style => IclWording::Style,
    }
}

fn eval_options(t: Tokenizer) -> EvalOptions {
    EvalOptions {
        bleu_tokenizer: match t {
            Tokenizer::Engine => BleuTokenizer::Engine,
            Tokenizer::Mteval13a => BleuTokenizer::Mteval13a,
        },
    }
}

fn strategy(args: &StrategyArgs, dataset: &str) -> Result<StrategyConfig> {
    let mut cfg = StrategyConfig::for_dataset(args.method, dataset);
    if let Some(alpha) = args.alpha {
        cfg.masking = MaskingConfig::aggressiveness(alpha)?;
    }
    if let Some(tau) = args.tau {
        cfg.masking = MaskingConfig::direct(tau)?;
    }
    cfg.k = args.k;
    if let Some(w) = args.icl_wording {
        cfg.icl_wording = wording(w);
    }
    Ok(cfg)
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("grid value {s:?}: {e}"))))
        .collect()
}

fn experiment(cli: &Cli, data: &DatasetArgs, strategy: StrategyConfig, out: &Path) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        dataset: load_dataset(&data.dataset, data.data_root.as_deref())?,
        direction: data.direction.clone(),
        strategy,
        backends: load_backends(cli.backends.as_deref())?,
        parallelism: cli.parallelism,
        seed: cli.seed,
        out_dir: out.to_path_buf(),
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Transfer(args) => {
            let cfg = experiment(cli, &args.data, strategy(&args.strategy, &args.data.dataset)?, &args.out)?;
            let run = harness::cmd_transfer(&cfg)?;
            println!("{} sentences -> {}", run.outputs.len(), args.out.join(harness::OUTPUTS_FILE).display());
        }
        Command::Evaluate(args) => {
            let backends = load_backends(cli.backends.as_deref())?;
            let hyps = load_lines(&args.hyp)?;
            let sources = load_lines(&args.src)?;
            let refs = args.reference.as_deref().map(load_lines).transpose()?;
            let report = harness::cmd_evaluate(
                &hyps,
                &sources,
                refs.as_deref(),
                &args.direction,
                &backends,
                &eval_options(args.bleu_tokenizer),
                &args.label,
                &args.out,
            )?;
            print!("{}", styleforge::metrics::markdown_table([(args.label.as_str(), &report)]));
        }
        Command::Distill(args) => {
            let backends = load_backends(cli.backends.as_deref())?;
            let corpus = source_corpus(&args.source)?;
            let cfg = StrategyConfig::new(Method::LlmAsSignal);
            let (d1, _) =
                harness::cmd_distill(&corpus, &args.source.direction, args.n, cli.seed, &backends, &cfg, &args.out)?;
            println!("{} pairs -> {}", d1.len(), args.out.display());
        }
        Command::DemoSelect(args) => {
            let backends = load_backends(cli.backends.as_deref())?;
            let corpus = source_corpus(&args.source)?;
            let mut cfg = StrategyConfig::new(Method::AmAsDemo);
            cfg.k = args.k;
            cfg.masking = MaskingConfig::direct(args.tau)?;
            cfg.icl_wording = wording(args.icl_wording);
            let selection =
                harness::cmd_demo_select(&args.query, &corpus, &args.source.direction, &cfg, &backends, &args.out)?;
            println!("{}", selection.prompt);
        }
        Command::SweepAlpha(args) => {
            let grid = parse_grid(&args.grid)?;
            let cfg = experiment(cli, &args.data, StrategyConfig::for_dataset(Method::PromptThenAm, &args.data.dataset), &args.out)?;
            let rows = harness::cmd_sweep_alpha(&cfg, &grid, args.emit_mask_counts, &eval_options(args.bleu_tokenizer))?;
            print!("{}", harness::sweep_csv(&rows, args.emit_mask_counts));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            log::debug!("{e:?}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
