//! Deterministic in-process backends.
//!
//! These reproduce the semantics of each model role with closed-form
//! behaviour so every pipeline can be checked by hand:
//!
//! - [`LexiconClassifier`]: sentence probability `σ(Σ weights)` for the
//!   lexicon's pole style, token score `|weight|`.
//! - [`TemplateFiller`]: every slot becomes the strongest lexicon word of the
//!   target style.
//! - [`AntonymGenerator`]: rewrites the text embedded in a prompt through a
//!   fixed substitution table.
//! - [`HashEmbedder`]: L2-normalized feature hashing of lowercased tokens.
//! - [`UnigramScorer`]: add-one smoothed unigram perplexity.
//! - [`MaskPredictor`]: count-based per-token mask probabilities learned from
//!   mask supervision.

use std::collections::{BTreeMap, HashMap};

use super::{ClassifyResult, Classifier, Embedder, Filler, GenerationParams, Generator, PerplexityScorer, ScoreKind, TokenScore};
use crate::align::SignalItem;
use crate::error::{Error, Result};
use crate::masking::{MaskedText, Segment};
use crate::strategies::prompts;
use crate::text::{join_tokens, tokenize, StyleLabel, TokenSeq};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Signed word weights; positive weights push toward `pole`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub pole: StyleLabel,
    pub weights: BTreeMap<String, f64>,
}

impl Lexicon {
    pub fn new<I, S>(pole: StyleLabel, weights: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Lexicon {
            pole,
            weights: weights.into_iter().map(|(w, v)| (w.into().to_lowercase(), v)).collect(),
        }
    }

    /// `{awful: -2, wonderful: +2, good: +1}` with pole `positive`.
    pub fn demo() -> Self {
        Lexicon::new(
            StyleLabel::new("positive").expect("valid label"),
            [("awful", -2.0), ("wonderful", 2.0), ("good", 1.0)],
        )
    }

    pub fn weight(&self, word: &str) -> f64 {
        self.weights.get(&word.to_lowercase()).copied().unwrap_or(0.0)
    }

    /// Strongest word toward `style`; ties go to the alphabetically first word.
    pub fn strongest_for(&self, style: &StyleLabel) -> Option<&str> {
        let sign = if *style == self.pole { 1.0 } else { -1.0 };
        // BTreeMap iterates alphabetically; strict > keeps the first of equals
        let mut best: Option<(&str, f64)> = None;
        for (word, &w) in &self.weights {
            let v = sign * w;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((word, v));
            }
        }
        best.map(|(w, _)| w)
    }
}

pub struct LexiconClassifier {
    lexicon: Lexicon,
}

impl LexiconClassifier {
    pub fn new(lexicon: Lexicon) -> Self {
        LexiconClassifier { lexicon }
    }
}

impl Classifier for LexiconClassifier {
    fn classify(&self, texts: &[TokenSeq], styles: (&StyleLabel, &StyleLabel)) -> Result<Vec<ClassifyResult>> {
        let pole = &self.lexicon.pole;
        let other = if styles.0 == pole {
            styles.1
        } else if styles.1 == pole {
            styles.0
        } else {
            return Err(Error::Config(format!(
                "lexicon classifier with pole {pole} cannot score styles {} / {}",
                styles.0, styles.1
            )));
        };
        Ok(texts
            .iter()
            .map(|text| {
                let weights: Vec<f64> = text.tokens().iter().map(|t| self.lexicon.weight(t)).collect();
                let p = sigmoid(weights.iter().sum());
                ClassifyResult {
                    probs: BTreeMap::from([(pole.clone(), p), (other.clone(), 1.0 - p)]),
                    token_scores: text
                        .tokens()
                        .iter()
                        .zip(&weights)
                        .map(|(t, w)| TokenScore {
                            token: t.clone(),
                            score: w.abs(),
                        })
                        .collect(),
                }
            })
            .collect())
    }
}

pub struct TemplateFiller {
    lexicon: Lexicon,
}

impl TemplateFiller {
    pub fn new(lexicon: Lexicon) -> Self {
        TemplateFiller { lexicon }
    }
}

impl Filler for TemplateFiller {
    fn fill(&self, items: &[(MaskedText, StyleLabel)]) -> Result<Vec<TokenSeq>> {
        items
            .iter()
            .map(|(masked, target)| {
                let word = self
                    .lexicon
                    .strongest_for(target)
                    .ok_or_else(|| Error::Config("template filler has an empty lexicon".into()))?;
                Ok(TokenSeq::from_tokens(masked.segments().iter().map(|s| match s {
                    Segment::Token(t) => t.clone(),
                    Segment::Slot => word.to_string(),
                })))
            })
            .collect()
    }
}

/// Token-level phrase substitution with greedy longest match, compared
/// case-insensitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubstitutionTable {
    entries: Vec<(Vec<String>, Vec<String>)>,
}

impl SubstitutionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: &str, to: &str) {
        let from: Vec<String> = tokenize(&from.to_lowercase()).tokens().to_vec();
        let to: Vec<String> = tokenize(to).tokens().to_vec();
        if from.is_empty() {
            return;
        }
        self.entries.retain(|(f, _)| *f != from);
        self.entries.push((from, to));
        // longest first so greedy matching prefers phrases
        self.entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    }

    pub fn insert_pair(&mut self, a: &str, b: &str) {
        self.insert(a, b);
        self.insert(b, a);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn apply_tokens(&self, tokens: &[String]) -> Vec<String> {
        let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let hit = self
                .entries
                .iter()
                .find(|(from, _)| lower[i..].starts_with(from));
            match hit {
                Some((from, to)) => {
                    let capitalize = tokens[i].chars().next().is_some_and(char::is_uppercase);
                    for (k, t) in to.iter().enumerate() {
                        if k == 0 && capitalize {
                            let mut c = t.chars();
                            let first = c.next().map(|f| f.to_uppercase().collect::<String>()).unwrap_or_default();
                            out.push(first + c.as_str());
                        } else {
                            out.push(t.clone());
                        }
                    }
                    i += from.len();
                }
                None => {
                    out.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        out
    }

    pub fn apply(&self, text: &str) -> String {
        join_tokens(&self.apply_tokens(tokenize(text).tokens()))
    }
}

/// Rewrites the text embedded in a prompt. Rewrite and in-context prompts go
/// through `table`; refine prompts through `refine` (identity when empty).
/// Any other prompt is rewritten whole through `table`.
#[derive(Debug, Clone, Default)]
pub struct AntonymGenerator {
    pub table: SubstitutionTable,
    pub refine: SubstitutionTable,
    /// Return the prompt followed by the completion, as some completion
    /// endpoints do.
    pub echo: bool,
}

impl AntonymGenerator {
    /// `{awful <-> wonderful, bad <-> good, no -> plenty of}`.
    pub fn demo() -> Self {
        let mut table = SubstitutionTable::new();
        table.insert_pair("awful", "wonderful");
        table.insert_pair("bad", "good");
        table.insert("no", "plenty of");
        AntonymGenerator {
            table,
            ..Default::default()
        }
    }

    fn complete(&self, prompt: &str) -> String {
        if let Some(rest) = prompt.strip_prefix(prompts::REWRITE_PREFIX) {
            if let Some((_, text)) = rest.split_once(prompts::REWRITE_INFIX) {
                return self.table.apply(text);
            }
        }
        if let Some(text) = prompt.strip_prefix(prompts::REFINE_PREFIX) {
            return self.refine.apply(text);
        }
        if let Some(query) = prompts::icl_query(prompt) {
            return self.table.apply(query);
        }
        self.table.apply(prompt)
    }
}

impl Generator for AntonymGenerator {
    fn generate(&self, prompts: &[String], _params: &GenerationParams) -> Result<Vec<String>> {
        Ok(prompts
            .iter()
            .map(|p| {
                let completion = self.complete(p);
                if self.echo {
                    format!("{p} {completion}")
                } else {
                    completion
                }
            })
            .collect())
    }
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub const DEFAULT_DIM: usize = 64;

    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(HashEmbedder { dim })
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.to_lowercase().as_bytes()) % self.dim as u64) as usize
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for token in tokenize(text).tokens() {
            v[self.bucket(token)] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: Self::DEFAULT_DIM }
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Add-one smoothed unigram model over the lowercased tokens of a fitting
/// corpus: `p(w) = (count(w) + 1) / (N + V)`, with `V` the fitted vocabulary
/// size. Unseen words get count 0.
#[derive(Debug, Clone)]
pub struct UnigramScorer {
    counts: HashMap<String, u64>,
    total: u64,
}

impl UnigramScorer {
    pub fn fit<'a>(sentences: impl IntoIterator<Item = &'a TokenSeq>) -> Self {
        let mut counts = HashMap::new();
        let mut total = 0;
        for s in sentences {
            for t in s.tokens() {
                *counts.entry(t.to_lowercase()).or_insert(0) += 1;
                total += 1;
            }
        }
        UnigramScorer { counts, total }
    }

    pub fn fit_text(text: &str) -> Self {
        let seqs: Vec<TokenSeq> = text.lines().map(tokenize).collect();
        Self::fit(&seqs)
    }

    pub fn prob(&self, word: &str) -> f64 {
        let c = self.counts.get(&word.to_lowercase()).copied().unwrap_or(0);
        (c + 1) as f64 / (self.total + self.counts.len() as u64) as f64
    }

    /// `exp(-(1/n) Σ ln p(w_i))`; an empty text scores 1.
    pub fn perplexity_of(&self, text: &str) -> f64 {
        let seq = tokenize(text);
        if seq.is_empty() {
            return 1.0;
        }
        let log_sum: f64 = seq.tokens().iter().map(|t| self.prob(t).ln()).sum();
        (-log_sum / seq.len() as f64).exp()
    }
}

impl PerplexityScorer for UnigramScorer {
    fn perplexity(&self, texts: &[String]) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::Config("unigram scorer was fitted on an empty corpus".into()));
        }
        Ok(texts.iter().map(|t| self.perplexity_of(t)).collect())
    }
}

/// Count-based mask predictor: the probability that word `w` is masked is
/// `(masked(w) + λ) / (seen(w) + 2λ)` with `λ = 1`.
#[derive(Debug, Clone, Default)]
pub struct MaskPredictor {
    counts: HashMap<String, (u64, u64)>,
}

impl MaskPredictor {
    pub const SMOOTHING: f64 = 1.0;

    pub fn score(&self, word: &str) -> f64 {
        let (masked, seen) = self.counts.get(&word.to_lowercase()).copied().unwrap_or((0, 0));
        (masked as f64 + Self::SMOOTHING) / (seen as f64 + 2.0 * Self::SMOOTHING)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }
}

/// Fits a [`MaskPredictor`] on mask supervision.
pub fn train_mock_mask_predictor(data: &[SignalItem]) -> Result<MaskPredictor> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut predictor = MaskPredictor::default();
    for (index, item) in data.iter().enumerate() {
        if item.labels.len() != item.source.len() {
            return Err(Error::LabelLengthMismatch {
                index,
                labels: item.labels.len(),
                tokens: item.source.len(),
            });
        }
        for (token, &masked) in item.source.tokens().iter().zip(item.labels.as_slice()) {
            let entry = predictor.counts.entry(token.to_lowercase()).or_insert((0, 0));
            entry.0 += u64::from(masked);
            entry.1 += 1;
        }
    }
    Ok(predictor)
}

/// Reports a neutral 0.5/0.5 sentence probability; the token scores are the
/// mask probabilities.
impl Classifier for MaskPredictor {
    fn classify(&self, texts: &[TokenSeq], styles: (&StyleLabel, &StyleLabel)) -> Result<Vec<ClassifyResult>> {
        Ok(texts
            .iter()
            .map(|text| ClassifyResult {
                probs: BTreeMap::from([(styles.0.clone(), 0.5), (styles.1.clone(), 0.5)]),
                token_scores: text
                    .tokens()
                    .iter()
                    .map(|t| TokenScore {
                        token: t.clone(),
                        score: self.score(t),
                    })
                    .collect(),
            })
            .collect())
    }

    fn score_kind(&self) -> ScoreKind {
        ScoreKind::MaskProbability
    }
}
