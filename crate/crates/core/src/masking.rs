//! Mask prediction and slot rendering for attention-masking transfer.
//!
//! A classifier assigns each token a non-negative score. Scores are
//! max-normalized per sentence, thresholded into [`MaskLabels`], collapsed
//! into a [`MaskedText`] with one `[SLOT]` per contiguous masked run, and the
//! filler rewrites the slots in the target style.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::backends::{BackendSet, ScoreKind};
use crate::error::{Error, Result};
use crate::text::{join_tokens, tokenize, TokenSeq, TransferDirection};

/// Wire-visible placeholder for a masked span.
pub const SLOT: &str = "[SLOT]";

/// Per-token binary mask; `true` marks a stylistic token to be re-predicted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MaskLabels(Vec<bool>);

impl MaskLabels {
    pub fn new(labels: Vec<bool>) -> Self {
        MaskLabels(labels)
    }

    pub fn zeros(len: usize) -> Self {
        MaskLabels(vec![false; len])
    }

    /// Parses a `0`/`1` vector.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Parse(format!("mask label must be 0 or 1, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(MaskLabels)
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&b| u8::from(b)).collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_masked(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Segment {
    Token(String),
    Slot,
}

/// A sentence with masked runs collapsed into slots. Never holds two
/// adjacent slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskedText {
    segments: Vec<Segment>,
}

impl MaskedText {
    /// Builds from segments, merging adjacent slots.
    pub fn from_segments(segments: impl IntoIterator<Item = Segment>) -> Self {
        let mut out: Vec<Segment> = Vec::new();
        for seg in segments {
            if seg == Segment::Slot && out.last() == Some(&Segment::Slot) {
                continue;
            }
            out.push(seg);
        }
        MaskedText { segments: out }
    }

    /// Parses a rendered masked string; every `[SLOT]` token becomes a slot.
    pub fn parse(rendered: &str) -> Self {
        let seq = tokenize(rendered);
        MaskedText::from_segments(seq.tokens().iter().map(|t| {
            if t == SLOT {
                Segment::Slot
            } else {
                Segment::Token(t.clone())
            }
        }))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn slot_count(&self) -> usize {
        self.segments.iter().filter(|s| **s == Segment::Slot).count()
    }

    /// The unmasked tokens, in order.
    pub fn kept_tokens(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Token(t) => Some(t.as_str()),
            Segment::Slot => None,
        })
    }

    pub fn rendered(&self) -> String {
        let parts: Vec<&str> = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Token(t) => t.as_str(),
                Segment::Slot => SLOT,
            })
            .collect();
        join_tokens(&parts)
    }

    /// Replaces each slot, in order, with the corresponding token run.
    pub fn fill_with<S: AsRef<str>>(&self, fills: &[Vec<S>]) -> Result<TokenSeq> {
        if fills.len() != self.slot_count() {
            return Err(Error::LengthMismatch {
                index: 0,
                expected: self.slot_count(),
                got: fills.len(),
            });
        }
        let mut fills = fills.iter();
        let mut tokens = Vec::new();
        for seg in &self.segments {
            match seg {
                Segment::Token(t) => tokens.push(t.clone()),
                Segment::Slot => {
                    let run = fills.next().expect("slot count checked");
                    tokens.extend(run.iter().map(|t| t.as_ref().to_string()));
                }
            }
        }
        Ok(TokenSeq::from_tokens(tokens))
    }
}

impl fmt::Display for MaskedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rendered())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    /// Mask when the scaled score exceeds the configured value.
    Direct,
    /// The configured value is an edit aggressiveness α; the threshold is 1 − α.
    Aggressiveness,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingConfig {
    pub tau: f64,
    pub alpha_mode: AlphaMode,
}

impl MaskingConfig {
    /// Threshold used for the yelp and amazon datasets.
    pub const DEFAULT_TAU: f64 = 0.5;
    /// Threshold used for the politeness dataset.
    pub const POLITENESS_TAU: f64 = 0.35;

    pub fn direct(tau: f64) -> Result<Self> {
        Self::checked(tau, AlphaMode::Direct)
    }

    pub fn aggressiveness(alpha: f64) -> Result<Self> {
        Self::checked(alpha, AlphaMode::Aggressiveness)
    }

    fn checked(tau: f64, alpha_mode: AlphaMode) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Config(format!("masking threshold {tau} is outside [0, 1]")));
        }
        Ok(MaskingConfig { tau, alpha_mode })
    }

    pub fn effective_threshold(&self) -> f64 {
        match self.alpha_mode {
            AlphaMode::Direct => self.tau,
            AlphaMode::Aggressiveness => 1.0 - self.tau,
        }
    }
}

impl Default for MaskingConfig {
    fn default() -> Self {
        MaskingConfig {
            tau: Self::DEFAULT_TAU,
            alpha_mode: AlphaMode::Direct,
        }
    }
}

/// Per-sentence max normalization. All-zero input stays all-zero.
pub fn scale_scores(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|&r| r / max).collect()
}

pub fn predict_mask(seq: &TokenSeq, scaled: &[f64], cfg: &MaskingConfig) -> Result<MaskLabels> {
    if scaled.len() != seq.len() {
        return Err(Error::LengthMismatch {
            index: 0,
            expected: seq.len(),
            got: scaled.len(),
        });
    }
    if let Some((position, &value)) = scaled
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::ScoreOutOfRange { position, value });
    }
    let tau = cfg.effective_threshold();
    Ok(MaskLabels(scaled.iter().map(|&s| s > tau).collect()))
}

pub fn apply_mask(seq: &TokenSeq, labels: &MaskLabels) -> Result<MaskedText> {
    if labels.len() != seq.len() {
        return Err(Error::LengthMismatch {
            index: 0,
            expected: seq.len(),
            got: labels.len(),
        });
    }
    Ok(MaskedText::from_segments(
        seq.tokens().iter().zip(labels.as_slice()).map(|(t, &masked)| {
            if masked {
                Segment::Slot
            } else {
                Segment::Token(t.clone())
            }
        }),
    ))
}

/// Result of one attention-masking pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AmOutcome {
    pub output: TokenSeq,
    pub labels: MaskLabels,
}

impl AmOutcome {
    pub fn masked_tokens(&self) -> usize {
        self.labels.count_masked()
    }
}

/// Mask scores for one sentence as the masking step consumes them: scaled
/// attention, or the predictor's own mask probabilities.
pub fn mask_scores(text: &TokenSeq, direction: &TransferDirection, backends: &BackendSet) -> Result<Vec<f64>> {
    let result = backends
        .classify(std::slice::from_ref(text), (direction.source(), direction.target()))?
        .pop()
        .expect("one result per input");
    let raw: Vec<f64> = result.token_scores.iter().map(|s| s.score).collect();
    Ok(match backends.classifier_score_kind() {
        ScoreKind::Attention => scale_scores(&raw),
        ScoreKind::MaskProbability => raw,
    })
}

pub fn am_transfer_traced(
    text: &TokenSeq,
    direction: &TransferDirection,
    cfg: &MaskingConfig,
    backends: &BackendSet,
) -> Result<AmOutcome> {
    if text.is_empty() {
        return Ok(AmOutcome {
            output: text.clone(),
            labels: MaskLabels::zeros(0),
        });
    }
    let scores = mask_scores(text, direction, backends)?;
    let labels = predict_mask(text, &scores, cfg)?;
    if labels.count_masked() == 0 {
        return Ok(AmOutcome {
            output: text.clone(),
            labels,
        });
    }
    let masked = apply_mask(text, &labels)?;
    let output = backends
        .fill(&[(masked, direction.target().clone())])?
        .pop()
        .expect("one result per input");
    Ok(AmOutcome { output, labels })
}

/// Classify, mask, and fill in the target style. Returns the input
/// unchanged, without calling the filler, when nothing is masked.
pub fn am_transfer(
    text: &TokenSeq,
    direction: &TransferDirection,
    cfg: &MaskingConfig,
    backends: &BackendSet,
) -> Result<TokenSeq> {
    am_transfer_traced(text, direction, cfg, backends).map(|o| o.output)
}
