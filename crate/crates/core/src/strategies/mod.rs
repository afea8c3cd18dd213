//! The six transfer methods and the data they synthesize.
//!
//! | method           | pipeline                                                     |
//! |------------------|--------------------------------------------------------------|
//! | `am`             | classify → mask → fill                                       |
//! | `llm`            | rewrite prompt → generate                                    |
//! | `prompt-then-am` | `llm`, then `am` on its output (aggressiveness α)            |
//! | `am-then-prompt` | `am`, then a refine prompt                                   |
//! | `llm-as-signal`  | `am` with a mask predictor trained on LLM-derived masks      |
//! | `am-as-demo`     | in-context prompt with `am`-transferred nearest neighbours   |

pub mod prompts;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use prompts::{Demonstration, IclWording};

use crate::align::{build_signal_pair, FillItem, SignalItem};
use crate::backends::mock::train_mock_mask_predictor;
use crate::backends::{BackendSet, GenerationParams, ScoreKind};
use crate::error::{Error, Result};
use crate::masking::{am_transfer, am_transfer_traced, MaskLabels, MaskingConfig};
use crate::text::{tokenize, Corpus, TokenSeq, TransferDirection};

/// A source sentence and its target-style counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPair {
    pub source: TokenSeq,
    pub target: TokenSeq,
    pub labels: Option<MaskLabels>,
    pub direction: TransferDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Am,
    Llm,
    PromptThenAm,
    AmThenPrompt,
    LlmAsSignal,
    AmAsDemo,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Am,
        Method::Llm,
        Method::PromptThenAm,
        Method::AmThenPrompt,
        Method::LlmAsSignal,
        Method::AmAsDemo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Am => "am",
            Method::Llm => "llm",
            Method::PromptThenAm => "prompt-then-am",
            Method::AmThenPrompt => "am-then-prompt",
            Method::LlmAsSignal => "llm-as-signal",
            Method::AmAsDemo => "am-as-demo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub method: Method,
    pub masking: MaskingConfig,
    /// Number of in-context demonstrations.
    pub k: usize,
    pub gen: GenerationParams,
    pub icl_wording: IclWording,
    /// Sentences sampled to train the mask predictor for `llm-as-signal`.
    pub signal_samples: usize,
}

impl StrategyConfig {
    pub const DEFAULT_K: usize = 4;
    pub const DEFAULT_ALPHA: f64 = 0.5;
    pub const DEFAULT_SIGNAL_SAMPLES: usize = 500;

    /// Defaults for a method: aggressiveness α = 0.5 for `prompt-then-am`,
    /// direct τ = 0.5 otherwise.
    pub fn new(method: Method) -> Self {
        let masking = match method {
            Method::PromptThenAm => MaskingConfig::aggressiveness(Self::DEFAULT_ALPHA).expect("in range"),
            _ => MaskingConfig::default(),
        };
        StrategyConfig {
            method,
            masking,
            k: Self::DEFAULT_K,
            gen: GenerationParams::default(),
            icl_wording: IclWording::default(),
            signal_samples: Self::DEFAULT_SIGNAL_SAMPLES,
        }
    }

    /// [`StrategyConfig::new`] with per-dataset defaults: politeness masks
    /// at τ = 0.35 and words in-context prompts with "style".
    pub fn for_dataset(method: Method, dataset: &str) -> Self {
        let mut cfg = Self::new(method);
        if dataset == "politeness" {
            if method != Method::PromptThenAm {
                cfg.masking = MaskingConfig::direct(MaskingConfig::POLITENESS_TAU).expect("in range");
            }
            cfg.icl_wording = IclWording::Style;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::AmAsDemo && self.k == 0 {
            return Err(Error::Config("k must be at least 1 for am-as-demo".into()));
        }
        if !(0.0..=1.0).contains(&self.masking.tau) {
            return Err(Error::Config(format!("masking threshold {} is outside [0, 1]", self.masking.tau)));
        }
        Ok(())
    }
}

fn generate_one(prompt: String, backends: &BackendSet, gen: &GenerationParams) -> Result<String> {
    Ok(backends.generate(&[prompt], gen)?.pop().expect("one completion per prompt"))
}

fn completion_to_tokens(raw: &str) -> Result<TokenSeq> {
    let text = prompts::strip_completion(raw);
    if text.is_empty() {
        return Err(Error::EmptyCompletion { index: 0 });
    }
    Ok(tokenize(text))
}

/// Zero-shot rewrite through the generator.
pub fn llm_transfer(
    text: &TokenSeq,
    direction: &TransferDirection,
    backends: &BackendSet,
    gen: &GenerationParams,
) -> Result<TokenSeq> {
    let raw = generate_one(prompts::rewrite(&text.to_string(), direction.target()), backends, gen)?;
    completion_to_tokens(&raw)
}

/// Rewrite with the LLM, then re-mask and fill its output. `masking` is
/// normally in aggressiveness mode, where α = 0 returns the LLM output
/// untouched.
pub fn prompt_then_am(
    text: &TokenSeq,
    direction: &TransferDirection,
    masking: &MaskingConfig,
    backends: &BackendSet,
    gen: &GenerationParams,
) -> Result<TokenSeq> {
    let intermediate = llm_transfer(text, direction, backends, gen)?;
    am_transfer(&intermediate, direction, masking, backends)
}

/// Masking transfer, then an LLM refinement pass.
pub fn am_then_prompt(
    text: &TokenSeq,
    direction: &TransferDirection,
    masking: &MaskingConfig,
    backends: &BackendSet,
    gen: &GenerationParams,
) -> Result<TokenSeq> {
    let intermediate = am_transfer(text, direction, masking, backends)?;
    let raw = generate_one(prompts::refine(&intermediate.to_string()), backends, gen)?;
    completion_to_tokens(&raw)
}

/// Samples `n` sentences without replacement (seeded), rewrites each with
/// the LLM and aligns the pair. Returns mask supervision and fill
/// supervision, both in corpus order.
pub fn synthesize_signal_dataset(
    corpus: &Corpus,
    direction: &TransferDirection,
    n: usize,
    backends: &BackendSet,
    gen: &GenerationParams,
    seed: u64,
) -> Result<(Vec<SignalItem>, Vec<FillItem>)> {
    if n > corpus.len() {
        return Err(Error::NTooLarge {
            requested: n,
            available: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, corpus.len(), n).into_vec();
    picked.sort_unstable();
    let pairs = picked
        .par_iter()
        .map(|&i| {
            let src = &corpus.sentences[i];
            let out = llm_transfer(src, direction, backends, gen)?;
            Ok(build_signal_pair(src, &out, direction))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().unzip())
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Embeddings of a demonstration corpus, computed once.
#[derive(Debug, Clone)]
pub struct DemoIndex {
    corpus: Corpus,
    vectors: Vec<Vec<f64>>,
}

impl DemoIndex {
    pub fn build(corpus: Corpus, backends: &BackendSet) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyInput("demonstration corpus"));
        }
        let texts: Vec<String> = corpus.sentences.iter().map(|s| s.to_string()).collect();
        let vectors = backends.embed(&texts)?;
        Ok(DemoIndex { corpus, vectors })
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    /// Indices and cosine similarities of the `k` nearest sentences,
    /// descending; ties keep corpus order.
    pub fn nearest(&self, query: &str, k: usize, backends: &BackendSet) -> Result<Vec<(usize, f64)>> {
        if k > self.len() {
            return Err(Error::KTooLarge { k, available: self.len() });
        }
        let q = backends.embed(&[query.to_string()])?.pop().expect("one vector");
        let mut scored: Vec<(usize, f64)> = self.vectors.iter().map(|v| cosine(&q, v)).enumerate().collect();
        // stable sort keeps corpus order among equal similarities
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        scored.truncate(k);
        Ok(scored)
    }

    /// The `k` most similar corpus sentences, each paired with its masking
    /// transfer.
    pub fn select(
        &self,
        query: &str,
        k: usize,
        direction: &TransferDirection,
        masking: &MaskingConfig,
        backends: &BackendSet,
    ) -> Result<Vec<Demonstration>> {
        self.nearest(query, k, backends)?
            .into_iter()
            .map(|(i, similarity)| {
                let src = &self.corpus.sentences[i];
                let out = am_transfer(src, direction, masking, backends)?;
                Ok(Demonstration {
                    source_text: src.to_string(),
                    transferred_text: out.to_string(),
                    similarity,
                })
            })
            .collect()
    }
}

pub fn select_demonstrations(
    query: &str,
    corpus: &Corpus,
    k: usize,
    direction: &TransferDirection,
    masking: &MaskingConfig,
    backends: &BackendSet,
) -> Result<Vec<Demonstration>> {
    if k > corpus.len() {
        return Err(Error::KTooLarge {
            k,
            available: corpus.len(),
        });
    }
    DemoIndex::build(corpus.clone(), backends)?.select(query, k, direction, masking, backends)
}

pub fn build_icl_prompt(
    demos: &[Demonstration],
    query: &str,
    direction: &TransferDirection,
    wording: IclWording,
) -> Result<String> {
    prompts::icl(demos, query, direction, wording)
}

pub fn am_as_demo_transfer(
    text: &TokenSeq,
    direction: &TransferDirection,
    cfg: &StrategyConfig,
    index: &DemoIndex,
    backends: &BackendSet,
) -> Result<TokenSeq> {
    let query = text.to_string();
    let demos = index.select(&query, cfg.k, direction, &cfg.masking, backends)?;
    let prompt = build_icl_prompt(&demos, &query, direction, cfg.icl_wording)?;
    let raw = generate_one(prompt, backends, &cfg.gen)?;
    Ok(tokenize(&prompts::extract_icl_completion(&raw, direction)?))
}

/// Output of one transfer, with the number of tokens the final masking
/// pass re-predicted (for methods that end in one).
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    pub output: TokenSeq,
    pub masked_tokens: Option<usize>,
}

/// A configured method, ready to transfer sentences.
pub struct Engine {
    backends: BackendSet,
    config: StrategyConfig,
    demo_index: Option<DemoIndex>,
}

impl Engine {
    /// Prepares `config.method`. `train` is the source-style training
    /// corpus: `am-as-demo` draws demonstrations from it and `llm-as-signal`
    /// synthesizes mask supervision from it unless the configured classifier
    /// already reports mask probabilities.
    pub fn new(backends: BackendSet, config: StrategyConfig, train: Option<&Corpus>, direction: &TransferDirection, seed: u64) -> Result<Self> {
        config.validate()?;
        let needs_corpus = |what: &str| Error::Config(format!("{} needs a training corpus for {what}", config.method));
        let mut backends = backends;
        let mut demo_index = None;
        match config.method {
            Method::AmAsDemo => {
                let corpus = train.ok_or_else(|| needs_corpus("demonstrations"))?;
                if config.k > corpus.len() {
                    return Err(Error::KTooLarge {
                        k: config.k,
                        available: corpus.len(),
                    });
                }
                demo_index = Some(DemoIndex::build(corpus.clone(), &backends)?);
            }
            Method::LlmAsSignal if backends.classifier_score_kind() != ScoreKind::MaskProbability => {
                let corpus = train.ok_or_else(|| needs_corpus("mask supervision"))?;
                let n = config.signal_samples.min(corpus.len());
                let (d1, _) = synthesize_signal_dataset(corpus, direction, n, &backends, &config.gen, seed)?;
                let predictor = train_mock_mask_predictor(&d1)?;
                log::info!(
                    "trained mask predictor on {} sentences ({} word types)",
                    d1.len(),
                    predictor.vocabulary_size()
                );
                backends = backends.with_classifier(Arc::new(predictor), "mask-predictor");
            }
            _ => {}
        }
        Ok(Engine {
            backends,
            config,
            demo_index,
        })
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.config
    }

    pub fn backends(&self) -> &BackendSet {
        &self.backends
    }

    pub fn transfer(&self, text: &TokenSeq, direction: &TransferDirection) -> Result<TransferOutcome> {
        let cfg = &self.config;
        let b = &self.backends;
        let plain = |output| TransferOutcome {
            output,
            masked_tokens: None,
        };
        let masked = |o: crate::masking::AmOutcome| TransferOutcome {
            masked_tokens: Some(o.masked_tokens()),
            output: o.output,
        };
        Ok(match cfg.method {
            Method::Am | Method::LlmAsSignal => masked(am_transfer_traced(text, direction, &cfg.masking, b)?),
            Method::Llm => plain(llm_transfer(text, direction, b, &cfg.gen)?),
            Method::PromptThenAm => {
                let intermediate = llm_transfer(text, direction, b, &cfg.gen)?;
                masked(am_transfer_traced(&intermediate, direction, &cfg.masking, b)?)
            }
            Method::AmThenPrompt => plain(am_then_prompt(text, direction, &cfg.masking, b, &cfg.gen)?),
            Method::AmAsDemo => {
                let index = self.demo_index.as_ref().expect("built in new");
                plain(am_as_demo_transfer(text, direction, cfg, index, b)?)
            }
        })
    }

    /// Transfers every sentence with at most `parallelism` in flight.
    /// Output order matches input order; the first failure aborts the batch.
    pub fn transfer_batch(
        &self,
        texts: &[TokenSeq],
        direction: &TransferDirection,
        parallelism: usize,
    ) -> Result<Vec<TransferOutcome>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| texts.par_iter().map(|t| self.transfer(t, direction)).collect())
    }
}
