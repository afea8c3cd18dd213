//! The five model capabilities the engine depends on.
//!
//! Each role (classify, fill, generate, embed, perplexity) is a trait with
//! an HTTP implementation and deterministic in-process mocks. [`BackendSet`]
//! bundles one implementation per role and checks every response against
//! the protocol contract before handing it to the engine.

mod config;
pub mod http;
pub mod mock;
pub mod protocol;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use config::{parse_backend_config, BackendConfig, EndpointConfig};

use crate::error::{Error, Result};
use crate::masking::{MaskedText, SLOT};
use crate::text::{StyleLabel, TokenSeq};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub token: String,
    pub score: f64,
}

/// Sentence-level style probabilities plus one non-negative score per token.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyResult {
    pub probs: BTreeMap<StyleLabel, f64>,
    pub token_scores: Vec<TokenScore>,
}

impl ClassifyResult {
    pub fn prob(&self, style: &StyleLabel) -> f64 {
        self.probs.get(style).copied().unwrap_or(0.0)
    }
}

/// How a classifier's token scores are to be read by the masking step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    /// Unnormalized attention; max-normalized per sentence before thresholding.
    #[default]
    Attention,
    /// Per-token mask probabilities from a supervised mask predictor, used as is.
    MaskProbability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.0,
            max_tokens: 128,
        }
    }
}

pub trait Classifier: Send + Sync {
    fn classify(&self, texts: &[TokenSeq], styles: (&StyleLabel, &StyleLabel)) -> Result<Vec<ClassifyResult>>;

    fn score_kind(&self) -> ScoreKind {
        ScoreKind::Attention
    }
}

pub trait Filler: Send + Sync {
    fn fill(&self, items: &[(MaskedText, StyleLabel)]) -> Result<Vec<TokenSeq>>;
}

pub trait Generator: Send + Sync {
    fn generate(&self, prompts: &[String], params: &GenerationParams) -> Result<Vec<String>>;
}

pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;
}

pub trait PerplexityScorer: Send + Sync {
    fn perplexity(&self, texts: &[String]) -> Result<Vec<f64>>;
}

/// One implementation per role, plus the descriptors they were built from.
#[derive(Clone)]
pub struct BackendSet {
    classifier: Arc<dyn Classifier>,
    filler: Arc<dyn Filler>,
    generator: Arc<dyn Generator>,
    embedder: Arc<dyn Embedder>,
    ppl_scorer: Arc<dyn PerplexityScorer>,
    kinds: BTreeMap<&'static str, String>,
    embed_dim: Arc<OnceLock<usize>>,
}

impl fmt::Debug for BackendSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackendSet").field("kinds", &self.kinds).finish()
    }
}

const PROB_TOLERANCE: f64 = 1e-6;

impl BackendSet {
    pub fn new(
        classifier: Arc<dyn Classifier>,
        filler: Arc<dyn Filler>,
        generator: Arc<dyn Generator>,
        embedder: Arc<dyn Embedder>,
        ppl_scorer: Arc<dyn PerplexityScorer>,
    ) -> Self {
        let kinds = ["classifier", "filler", "generator", "embedder", "ppl_scorer"]
            .into_iter()
            .map(|role| (role, "custom".to_string()))
            .collect();
        BackendSet {
            classifier,
            filler,
            generator,
            embedder,
            ppl_scorer,
            kinds,
            embed_dim: Arc::new(OnceLock::new()),
        }
    }

    /// Resolves every role of a parsed config. Relative paths in mock
    /// parameters are resolved against `base_dir`.
    pub fn from_config(config: &BackendConfig, base_dir: &std::path::Path) -> Result<Self> {
        config::resolve(config, base_dir)
    }

    /// Reads and resolves a JSON backend config file.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = parse_backend_config(&text)?;
        let base = path.parent().unwrap_or_else(|| std::path::Path::new("."));
        Self::from_config(&config, base)
    }

    /// Same set with the classifier replaced.
    pub fn with_classifier(&self, classifier: Arc<dyn Classifier>, kind: impl Into<String>) -> Self {
        let mut out = self.clone();
        out.classifier = classifier;
        out.kinds.insert("classifier", kind.into());
        out
    }

    pub fn with_filler(&self, filler: Arc<dyn Filler>, kind: impl Into<String>) -> Self {
        let mut out = self.clone();
        out.filler = filler;
        out.kinds.insert("filler", kind.into());
        out
    }

    pub fn with_generator(&self, generator: Arc<dyn Generator>, kind: impl Into<String>) -> Self {
        let mut out = self.clone();
        out.generator = generator;
        out.kinds.insert("generator", kind.into());
        out
    }

    pub(crate) fn set_kinds(&mut self, kinds: BTreeMap<&'static str, String>) {
        self.kinds = kinds;
    }

    /// Role name to backend kind (`http` or a mock name).
    pub fn kinds(&self) -> &BTreeMap<&'static str, String> {
        &self.kinds
    }

    pub fn classifier_score_kind(&self) -> ScoreKind {
        self.classifier.score_kind()
    }

    pub fn classify(&self, texts: &[TokenSeq], styles: (&StyleLabel, &StyleLabel)) -> Result<Vec<ClassifyResult>> {
        if texts.is_empty() {
            return Err(Error::EmptyInput("classify texts"));
        }
        if styles.0 == styles.1 {
            return Err(Error::InvalidDirection(format!("classify styles are both {}", styles.0)));
        }
        let results = self.classifier.classify(texts, styles)?;
        check_count("classifier", texts.len(), results.len())?;
        for (index, (text, result)) in texts.iter().zip(&results).enumerate() {
            if result.token_scores.len() != text.len() {
                return Err(Error::LengthMismatch {
                    index,
                    expected: text.len(),
                    got: result.token_scores.len(),
                });
            }
            let malformed = |reason: String| Error::MalformedResponse {
                backend: "classifier",
                index: Some(index),
                reason,
            };
            if result.probs.len() != 2 || !result.probs.contains_key(styles.0) || !result.probs.contains_key(styles.1) {
                return Err(malformed(format!(
                    "probabilities must cover exactly {} and {}",
                    styles.0, styles.1
                )));
            }
            if result.probs.values().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(malformed("probability outside [0, 1]".into()));
            }
            let total: f64 = result.probs.values().sum();
            if (total - 1.0).abs() > PROB_TOLERANCE {
                return Err(malformed(format!("probabilities sum to {total}")));
            }
            if let Some(bad) = result.token_scores.iter().find(|s| !s.score.is_finite() || s.score < 0.0) {
                return Err(malformed(format!("token {:?} has invalid score {}", bad.token, bad.score)));
            }
        }
        Ok(results)
    }

    pub fn fill(&self, items: &[(MaskedText, StyleLabel)]) -> Result<Vec<TokenSeq>> {
        if items.is_empty() {
            return Ok(Vec::new());
        }
        let results = self.filler.fill(items)?;
        check_count("filler", items.len(), results.len())?;
        if let Some(index) = results.iter().position(|r| r.tokens().iter().any(|t| t == SLOT)) {
            return Err(Error::SlotLeftUnfilled { index });
        }
        Ok(results)
    }

    pub fn generate(&self, prompts: &[String], params: &GenerationParams) -> Result<Vec<String>> {
        if prompts.is_empty() {
            return Err(Error::EmptyInput("generate prompts"));
        }
        let results = self.generator.generate(prompts, params)?;
        check_count("generator", prompts.len(), results.len())?;
        if let Some(index) = results.iter().position(|r| r.trim().is_empty()) {
            return Err(Error::EmptyCompletion { index });
        }
        Ok(results)
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        if texts.is_empty() {
            return Err(Error::EmptyInput("embed texts"));
        }
        let results = self.embedder.embed(texts)?;
        check_count("embedder", texts.len(), results.len())?;
        let expected = *self.embed_dim.get_or_init(|| results[0].len());
        for (index, v) in results.iter().enumerate() {
            if v.len() != expected {
                return Err(Error::DimensionDrift {
                    index,
                    expected,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(results)
    }

    pub fn perplexity(&self, texts: &[String]) -> Result<Vec<f64>> {
        if texts.is_empty() {
            return Err(Error::EmptyInput("perplexity texts"));
        }
        let results = self.ppl_scorer.perplexity(texts)?;
        check_count("ppl_scorer", texts.len(), results.len())?;
        for (index, &ppl) in results.iter().enumerate() {
            if !ppl.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if ppl < 1.0 {
                return Err(Error::MalformedResponse {
                    backend: "ppl_scorer",
                    index: Some(index),
                    reason: format!("perplexity {ppl} is below 1"),
                });
            }
        }
        Ok(results)
    }
}

fn check_count(backend: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::MalformedResponse {
            backend,
            index: None,
            reason: format!("expected {expected} results, got {got}"),
        });
    }
    Ok(())
}
