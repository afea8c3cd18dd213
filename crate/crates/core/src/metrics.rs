//! Evaluation metrics: style accuracy, corpus BLEU against sources and
//! references, perplexity, and the composite Mean.
//!
//! The composite is the arithmetic mean of ACC, s-sBLEU and the scaled
//! perplexity `100·e^(−0.015·PPL)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::backends::BackendSet;
use crate::error::{Error, Result};
use crate::masking::MaskLabels;
use crate::text::{StyleLabel, TokenSeq, TransferDirection};

/// Decay rate of the perplexity scaling.
pub const PPL_DECAY: f64 = 0.015;
/// Target-style probability above which an output counts as transferred.
pub const ACC_THRESHOLD: f64 = 0.5;
const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub r_sbleu: Option<f64>,
    pub s_sbleu: f64,
    pub ppl: f64,
    pub scaled_ppl: f64,
    pub mean: f64,
}

impl MetricsReport {
    /// Builds a report from the three inputs of the composite, deriving
    /// `scaled_ppl` and `mean`.
    pub fn from_parts(acc: f64, r_sbleu: Option<f64>, s_sbleu: f64, ppl: f64) -> Result<Self> {
        Ok(MetricsReport {
            acc,
            r_sbleu,
            s_sbleu,
            ppl,
            scaled_ppl: scaled_ppl(ppl),
            mean: compose_mean(acc, s_sbleu, ppl)?,
        })
    }
}

pub fn scaled_ppl(ppl: f64) -> f64 {
    100.0 * (-PPL_DECAY * ppl).exp()
}

pub fn compose_mean(acc: f64, s_sbleu: f64, ppl: f64) -> Result<f64> {
    for (name, v) in [("acc", acc), ("s_sbleu", s_sbleu), ("ppl", ppl)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput(name));
        }
    }
    Ok((acc + s_sbleu + scaled_ppl(ppl)) / 3.0)
}

/// How BLEU splits sentences into words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BleuTokenizer {
    /// The engine's own tokens.
    #[default]
    Engine,
    /// Re-tokenize the detokenized text with mteval-v13a rules.
    Mteval13a,
}

/// mteval-v13a tokenization (the default of common external scorers).
pub fn tokenize_13a(line: &str) -> Vec<String> {
    let mut s = line.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if s.contains('&') {
        s = s
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let chars: Vec<char> = s.chars().collect();
    let is_symbol = |c: char| {
        ('{'..='~').contains(&c) || ('['..='`').contains(&c) || ('!'..='&').contains(&c) || ('('..='+').contains(&c) || (':'..='@').contains(&c) || c == '/'
    };
    let digit_at = |i: Option<usize>| i.and_then(|i| chars.get(i)).is_some_and(char::is_ascii_digit);
    let mut out = String::with_capacity(s.len() * 2);
    for (i, &c) in chars.iter().enumerate() {
        let split = if is_symbol(c) {
            true
        } else if c == '.' || c == ',' {
            !digit_at(i.checked_sub(1)) || !digit_at(Some(i + 1))
        } else {
            c == '-' && digit_at(i.checked_sub(1))
        };
        if split {
            out.push(' ');
            out.push(c);
            out.push(' ');
        } else {
            out.push(c);
        }
    }
    out.split_whitespace().map(str::to_string).collect()
}

fn words(seq: &TokenSeq, tokenizer: BleuTokenizer) -> Vec<String> {
    match tokenizer {
        BleuTokenizer::Engine => seq.lowercase_tokens(),
        BleuTokenizer::Mteval13a => tokenize_13a(&seq.to_string().to_lowercase()),
    }
}

fn ngram_counts(words: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if words.len() >= n {
        for gram in words.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Pooled n-gram statistics of a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches.contains(&0) {
            return 0.0;
        }
        let log_precision: f64 = self
            .matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| (m as f64 / t as f64).ln())
            .sum::<f64>()
            / MAX_ORDER as f64;
        let (c, r) = (self.hyp_len as f64, self.ref_len as f64);
        let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        100.0 * brevity * log_precision.exp()
    }
}

pub fn bleu_stats(hyps: &[TokenSeq], refs: &[TokenSeq], tokenizer: BleuTokenizer) -> Result<BleuStats> {
    if hyps.len() != refs.len() {
        return Err(Error::MisalignedInputs(format!(
            "{} hypotheses vs {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if hyps.is_empty() {
        return Err(Error::EmptyInput("BLEU corpus"));
    }
    let mut stats = BleuStats::default();
    for (hyp, reference) in hyps.iter().zip(refs) {
        let (h, r) = (words(hyp, tokenizer), words(reference, tokenizer));
        stats.hyp_len += h.len();
        stats.ref_len += r.len();
        for n in 1..=MAX_ORDER {
            let ref_counts = ngram_counts(&r, n);
            for (gram, count) in ngram_counts(&h, n) {
                stats.matches[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
                stats.totals[n - 1] += count;
            }
        }
    }
    Ok(stats)
}

/// Corpus-level BLEU-4 in [0, 100], lowercased, unsmoothed.
pub fn corpus_bleu(hyps: &[TokenSeq], refs: &[TokenSeq]) -> Result<f64> {
    corpus_bleu_with(hyps, refs, BleuTokenizer::Engine)
}

pub fn corpus_bleu_with(hyps: &[TokenSeq], refs: &[TokenSeq], tokenizer: BleuTokenizer) -> Result<f64> {
    Ok(bleu_stats(hyps, refs, tokenizer)?.score())
}

/// Percentage of outputs whose target-style probability exceeds 0.5.
pub fn style_accuracy(outputs: &[TokenSeq], direction: &TransferDirection, backends: &BackendSet) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::EmptyInput("style accuracy outputs"));
    }
    let target: &StyleLabel = direction.target();
    let results = backends.classify(outputs, (direction.source(), target))?;
    let hits = results.iter().filter(|r| r.prob(target) > ACC_THRESHOLD).count();
    Ok(100.0 * hits as f64 / outputs.len() as f64)
}

/// Order-independent sum: adds values smallest first.
fn stable_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub bleu_tokenizer: BleuTokenizer,
}

pub fn evaluate_run(
    hyps: &[TokenSeq],
    sources: &[TokenSeq],
    refs: Option<&[TokenSeq]>,
    direction: &TransferDirection,
    backends: &BackendSet,
    options: &EvalOptions,
) -> Result<MetricsReport> {
    if hyps.len() != sources.len() {
        return Err(Error::MisalignedInputs(format!(
            "{} hypotheses vs {} sources",
            hyps.len(),
            sources.len()
        )));
    }
    let acc = style_accuracy(hyps, direction, backends)?;
    let s_sbleu = corpus_bleu_with(hyps, sources, options.bleu_tokenizer)?;
    let r_sbleu = refs
        .map(|r| corpus_bleu_with(hyps, r, options.bleu_tokenizer))
        .transpose()?;
    let texts: Vec<String> = hyps.iter().map(|h| h.to_string()).collect();
    let ppls = backends.perplexity(&texts)?;
    let ppl = stable_sum(&ppls) / ppls.len() as f64;
    MetricsReport::from_parts(acc, r_sbleu, s_sbleu, ppl)
}

pub const MARKDOWN_HEADER: &str = "| Method | ACC | r-sBLEU | s-sBLEU | PPL | Mean |\n|---|---|---|---|---|---|\n";

/// Renders a table in the column order ACC, r-sBLEU, s-sBLEU, PPL, Mean.
/// A missing r-sBLEU is shown as `−`.
pub fn markdown_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MetricsReport)>) -> String {
    let mut out = String::from(MARKDOWN_HEADER);
    for (label, r) in rows {
        let r_sbleu = r.r_sbleu.map_or_else(|| "\u{2212}".to_string(), |v| format!("{v:.1}"));
        out.push_str(&format!(
            "| {label} | {:.0} | {r_sbleu} | {:.1} | {:.0} | {:.1} |\n",
            r.acc, r.s_sbleu, r.ppl, r.mean
        ));
    }
    out
}

/// Token-level F1 of predicted mask labels against reference labels. Two
/// label sets with no positive tokens at all score 1.
pub fn mask_f1(predicted: &[MaskLabels], gold: &[MaskLabels]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::MisalignedInputs(format!(
            "{} predictions vs {} references",
            predicted.len(),
            gold.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (index, (p, g)) in predicted.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(Error::LengthMismatch {
                index,
                expected: g.len(),
                got: p.len(),
            });
        }
        for (&a, &b) in p.as_slice().iter().zip(g.as_slice()) {
            match (a, b) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    if tp + fp + fn_ == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}
