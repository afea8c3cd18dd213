//! Batch experiment commands behind the `styleforge` binary.
//!
//! Each command writes its artifacts into an output directory. With mock
//! backends and a fixed seed every artifact is byte-identical across runs,
//! except the `elapsed_secs` field of `manifest.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::align::{FillItem, SignalItem};
use crate::backends::BackendSet;
use crate::datasets::{load_test_set, DatasetSpec};
use crate::error::{Error, Result};
use crate::masking::{AlphaMode, MaskingConfig};
use crate::metrics::{evaluate_run, markdown_table, EvalOptions, MetricsReport};
use crate::strategies::{self, prompts, Demonstration, Engine, Method, StrategyConfig};
use crate::text::{Corpus, TokenSeq, TransferDirection};

pub const OUTPUTS_FILE: &str = "outputs.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.md";
pub const D1_FILE: &str = "d1.jsonl";
pub const D2_FILE: &str = "d2.jsonl";
pub const DEMOS_FILE: &str = "demos.json";
pub const SWEEP_FILE: &str = "sweep.csv";

pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub direction: TransferDirection,
    pub strategy: StrategyConfig,
    pub backends: BackendSet,
    pub parallelism: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        self.dataset.check_direction(&self.direction)?;
        self.strategy.validate()
    }

    /// Source-style training corpus, loaded only for methods that use one.
    fn train_corpus(&self) -> Result<Option<Corpus>> {
        match self.strategy.method {
            Method::AmAsDemo | Method::LlmAsSignal => self.dataset.load_train(self.direction.source()).map(Some),
            _ => Ok(None),
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn lines<T: ToString>(items: &[T]) -> String {
    items.iter().map(|i| format!("{}\n", i.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskingManifest {
    pub mode: AlphaMode,
    /// The configured value: α in aggressiveness mode, τ in direct mode.
    pub value: f64,
    /// Threshold actually applied to scaled scores.
    pub tau: f64,
}

impl From<&MaskingConfig> for MaskingManifest {
    fn from(m: &MaskingConfig) -> Self {
        MaskingManifest {
            mode: m.alpha_mode,
            value: m.tau,
            tau: m.effective_threshold(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub dataset: String,
    pub direction: TransferDirection,
    pub method: Method,
    pub masking: MaskingManifest,
    pub k: usize,
    pub backends: std::collections::BTreeMap<&'static str, String>,
    pub seed: u64,
    pub parallelism: usize,
    pub sentences: usize,
    pub masked_tokens: Option<usize>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRun {
    pub sources: Corpus,
    pub refs: Option<Corpus>,
    pub outputs: Vec<TokenSeq>,
    pub masked_tokens: Option<usize>,
}

/// Transfers the dataset's test sources in memory.
pub fn run_transfer(config: &ExperimentConfig) -> Result<TransferRun> {
    config.validate()?;
    let (sources, refs) = load_test_set(&config.dataset, &config.direction)?;
    let train = config.train_corpus()?;
    let engine = Engine::new(
        config.backends.clone(),
        config.strategy.clone(),
        train.as_ref(),
        &config.direction,
        config.seed,
    )?;
    let outcomes = engine.transfer_batch(&sources.sentences, &config.direction, config.parallelism)?;
    let masked_tokens = outcomes
        .iter()
        .map(|o| o.masked_tokens)
        .sum::<Option<usize>>();
    Ok(TransferRun {
        sources,
        refs,
        outputs: outcomes.into_iter().map(|o| o.output).collect(),
        masked_tokens,
    })
}

/// Writes `outputs.txt` (one line per source, in order) and `manifest.json`.
pub fn cmd_transfer(config: &ExperimentConfig) -> Result<TransferRun> {
    let started = Instant::now();
    let run = run_transfer(config)?;
    create_dir(&config.out_dir)?;
    write(&config.out_dir.join(OUTPUTS_FILE), lines(&run.outputs))?;
    let manifest = Manifest {
        command: "transfer",
        dataset: config.dataset.name.clone(),
        direction: config.direction.clone(),
        method: config.strategy.method,
        masking: (&config.strategy.masking).into(),
        k: config.strategy.k,
        backends: config.backends.kinds().clone(),
        seed: config.seed,
        parallelism: config.parallelism,
        sentences: run.outputs.len(),
        masked_tokens: run.masked_tokens,
        elapsed_secs: started.elapsed().as_secs_f64(),
    };
    write(&config.out_dir.join(MANIFEST_FILE), to_json(&manifest))?;
    Ok(run)
}

/// Scores hypotheses; writes `report.json` and a one-row `table.md`.
#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    hyps: &[TokenSeq],
    sources: &[TokenSeq],
    refs: Option<&[TokenSeq]>,
    direction: &TransferDirection,
    backends: &BackendSet,
    options: &EvalOptions,
    label: &str,
    out_dir: &Path,
) -> Result<MetricsReport> {
    if let Some(refs) = refs {
        if refs.len() != sources.len() {
            return Err(Error::RefLengthMismatch {
                sources: sources.len(),
                refs: refs.len(),
            });
        }
    }
    let report = evaluate_run(hyps, sources, refs, direction, backends, options)?;
    create_dir(out_dir)?;
    write(&out_dir.join(REPORT_FILE), to_json(&report))?;
    write(&out_dir.join(TABLE_FILE), markdown_table([(label, &report)]))?;
    Ok(report)
}

/// Synthesizes mask supervision (`d1.jsonl`) and fill supervision
/// (`d2.jsonl`) from `n` sampled sentences.
#[allow(clippy::too_many_arguments)]
pub fn cmd_distill(
    corpus: &Corpus,
    direction: &TransferDirection,
    n: usize,
    seed: u64,
    backends: &BackendSet,
    strategy: &StrategyConfig,
    out_dir: &Path,
) -> Result<(Vec<SignalItem>, Vec<FillItem>)> {
    let (d1, d2) = strategies::synthesize_signal_dataset(corpus, direction, n, backends, &strategy.gen, seed)?;
    create_dir(out_dir)?;
    write(&out_dir.join(D1_FILE), lines(&d1.iter().map(SignalItem::to_json_line).collect::<Vec<_>>()))?;
    write(&out_dir.join(D2_FILE), lines(&d2.iter().map(FillItem::to_json_line).collect::<Vec<_>>()))?;
    Ok((d1, d2))
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSelection {
    pub query: String,
    pub demonstrations: Vec<Demonstration>,
    pub prompt: String,
}

/// Selects demonstrations for one query and writes them, with the
/// resulting prompt, to `demos.json`.
pub fn cmd_demo_select(
    query: &str,
    corpus: &Corpus,
    direction: &TransferDirection,
    strategy: &StrategyConfig,
    backends: &BackendSet,
    out_dir: &Path,
) -> Result<DemoSelection> {
    let demonstrations =
        strategies::select_demonstrations(query, corpus, strategy.k, direction, &strategy.masking, backends)?;
    let prompt = prompts::icl(&demonstrations, query, direction, strategy.icl_wording)?;
    let selection = DemoSelection {
        query: query.to_string(),
        demonstrations,
        prompt,
    };
    create_dir(out_dir)?;
    write(&out_dir.join(DEMOS_FILE), to_json(&selection))?;
    Ok(selection)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub report: MetricsReport,
    pub masked_tokens: usize,
}

pub const SWEEP_HEADER: &str = "alpha,acc,r_sbleu,s_sbleu,ppl,mean";

pub fn sweep_csv(rows: &[SweepRow], emit_mask_counts: bool) -> String {
    let mut out = String::from(SWEEP_HEADER);
    if emit_mask_counts {
        out.push_str(",masked_tokens");
    }
    out.push('\n');
    for row in rows {
        let r = &row.report;
        let r_sbleu = r.r_sbleu.map(|v| v.to_string()).unwrap_or_default();
        write!(out, "{},{},{},{},{},{}", row.alpha, r.acc, r_sbleu, r.s_sbleu, r.ppl, r.mean).expect("string write");
        if emit_mask_counts {
            write!(out, ",{}", row.masked_tokens).expect("string write");
        }
        out.push('\n');
    }
    out
}

/// Evaluates `prompt-then-am` at every α of `grid` (aggressiveness mode)
/// and writes `sweep.csv`. The LLM rewrites are computed once and shared by
/// all grid points.
pub fn cmd_sweep_alpha(
    config: &ExperimentConfig,
    grid: &[f64],
    emit_mask_counts: bool,
    options: &EvalOptions,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("the α grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Config(format!("α = {bad} is outside [0, 1]")));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("the α grid must be sorted ascending".into()));
    }
    if config.strategy.method != Method::PromptThenAm {
        return Err(Error::Config(format!(
            "sweep-alpha needs method prompt-then-am, not {}",
            config.strategy.method
        )));
    }
    config.validate()?;
    let (sources, refs) = load_test_set(&config.dataset, &config.direction)?;
    let mut llm_cfg = config.strategy.clone();
    llm_cfg.method = Method::Llm;
    let llm = Engine::new(config.backends.clone(), llm_cfg, None, &config.direction, config.seed)?;
    let rewrites: Vec<TokenSeq> = llm
        .transfer_batch(&sources.sentences, &config.direction, config.parallelism)?
        .into_iter()
        .map(|o| o.output)
        .collect();
    let mut rows = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let mut cfg = config.strategy.clone();
        cfg.method = Method::Am;
        cfg.masking = MaskingConfig::aggressiveness(alpha)?;
        let am = Engine::new(config.backends.clone(), cfg, None, &config.direction, config.seed)?;
        let outcomes = am.transfer_batch(&rewrites, &config.direction, config.parallelism)?;
        let masked_tokens = outcomes.iter().filter_map(|o| o.masked_tokens).sum();
        let outputs: Vec<TokenSeq> = outcomes.into_iter().map(|o| o.output).collect();
        let report = evaluate_run(
            &outputs,
            &sources.sentences,
            refs.as_ref().map(|r| r.sentences.as_slice()),
            &config.direction,
            &config.backends,
            options,
        )?;
        log::info!("alpha {alpha}: mean {:.1}, {masked_tokens} masked tokens", report.mean);
        rows.push(SweepRow {
            alpha,
            report,
            masked_tokens,
        });
    }
    create_dir(&config.out_dir)?;
    write(&config.out_dir.join(SWEEP_FILE), sweep_csv(&rows, emit_mask_counts))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::builtin;
    use crate::metrics::MetricsReport;

    #[test]
    fn csv_layout() {
        let rows = [
            SweepRow {
                alpha: 0.0,
                report: MetricsReport::from_parts(50.0, None, 80.0, 10.0).unwrap(),
                masked_tokens: 0,
            },
            SweepRow {
                alpha: 0.5,
                report: MetricsReport::from_parts(100.0, Some(60.5), 70.25, 12.0).unwrap(),
                masked_tokens: 3,
            },
        ];
        let csv = sweep_csv(&rows, true);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "alpha,acc,r_sbleu,s_sbleu,ppl,mean,masked_tokens");
        assert!(lines[1].starts_with("0,50,,80,10,"));
        assert!(lines[1].ends_with(",0"));
        assert!(lines[2].starts_with("0.5,100,60.5,70.25,12,"));
        assert!(!sweep_csv(&rows, false).contains("masked"));
    }

    fn config(method: Method, out_dir: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            dataset: builtin("toyvolt", None).unwrap(),
            direction: "negative:positive".parse().unwrap(),
            strategy: StrategyConfig::new(method),
            backends: BackendSet::from_config(&crate::backends::BackendConfig::toyvolt(), Path::new(".")).unwrap(),
            parallelism: 2,
            seed: 0,
            out_dir,
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(Method::PromptThenAm, dir.path().to_path_buf());
        let opts = EvalOptions::default();
        assert!(cmd_sweep_alpha(&cfg, &[], false, &opts).unwrap_err().is_config());
        assert!(cmd_sweep_alpha(&cfg, &[0.5, 0.2], false, &opts).unwrap_err().is_config());
        assert!(cmd_sweep_alpha(&cfg, &[1.5], false, &opts).unwrap_err().is_config());
        let llm = config(Method::Llm, dir.path().to_path_buf());
        assert!(cmd_sweep_alpha(&llm, &[0.0], false, &opts).unwrap_err().is_config());
    }

    #[test]
    fn manifest_records_masking() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(Method::PromptThenAm, dir.path().to_path_buf());
        let run = cmd_transfer(&cfg).unwrap();
        assert_eq!(run.outputs.len(), run.sources.len());
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(manifest["masking"]["mode"], "aggressiveness");
        assert_eq!(manifest["masking"]["tau"], 0.5);
        assert_eq!(manifest["k"], 4);
        assert_eq!(manifest["backends"]["generator"], "antonym");
        assert_eq!(manifest["method"], "prompt-then-am");
    }
}
