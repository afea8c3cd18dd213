//! Minimal edit alignment between a sentence and its rewrite, and the
//! conversion of that alignment into mask supervision.
//!
//! Alignment is token-level Levenshtein with unit costs. Among optimal
//! scripts the walk prefers, at every step, Keep, then Replace, then
//! Delete, then Insert, which makes scripts unique and puts replacements
//! as far left as possible. Token equality is case-insensitive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::{apply_mask, MaskLabels, MaskedText};
use crate::text::{tokenize, StyleLabel, TokenSeq, TransferDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditOp {
    Keep { src: usize, tgt: usize },
    Replace { src: usize, tgt: usize },
    Delete { src: usize },
    Insert { tgt: usize },
}

impl EditOp {
    pub fn cost(&self) -> usize {
        match self {
            EditOp::Keep { .. } => 0,
            _ => 1,
        }
    }

    fn src(&self) -> Option<usize> {
        match *self {
            EditOp::Keep { src, .. } | EditOp::Replace { src, .. } | EditOp::Delete { src } => Some(src),
            EditOp::Insert { .. } => None,
        }
    }

    fn tgt(&self) -> Option<usize> {
        match *self {
            EditOp::Keep { tgt, .. } | EditOp::Replace { tgt, .. } | EditOp::Insert { tgt } => Some(tgt),
            EditOp::Delete { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn cost(&self) -> usize {
        self.ops.iter().map(EditOp::cost).sum()
    }

    /// Applies the script to `src`, taking replacement and inserted tokens
    /// from `tgt`.
    pub fn replay(&self, src: &TokenSeq, tgt: &TokenSeq) -> Result<TokenSeq> {
        check_coverage(self, src.len())?;
        let mut out = Vec::with_capacity(tgt.len());
        for op in &self.ops {
            match *op {
                EditOp::Keep { src: i, .. } => out.push(src.tokens()[i].clone()),
                EditOp::Replace { tgt: j, .. } | EditOp::Insert { tgt: j } => {
                    let token = tgt
                        .tokens()
                        .get(j)
                        .ok_or_else(|| Error::CoverageMismatch(format!("target index {j} out of range")))?;
                    out.push(token.clone());
                }
                EditOp::Delete { .. } => {}
            }
        }
        Ok(TokenSeq::from_tokens(out))
    }
}

pub fn min_edit_script(src: &TokenSeq, tgt: &TokenSeq) -> EditScript {
    let a: Vec<String> = src.lowercase_tokens();
    let b: Vec<String> = tgt.lowercase_tokens();
    let (n, m) = (a.len(), b.len());
    // suffix[i][j]: distance between a[i..] and b[j..]
    let mut suffix = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            suffix[i][j] = if i == n {
                m - j
            } else if j == m {
                n - i
            } else {
                let diag = suffix[i + 1][j + 1] + usize::from(a[i] != b[j]);
                diag.min(suffix[i + 1][j] + 1).min(suffix[i][j + 1] + 1)
            };
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = suffix[i][j];
        if i < n && j < m && a[i] == b[j] && suffix[i + 1][j + 1] == here {
            ops.push(EditOp::Keep { src: i, tgt: j });
            i += 1;
            j += 1;
        } else if i < n && j < m && suffix[i + 1][j + 1] + 1 == here {
            ops.push(EditOp::Replace { src: i, tgt: j });
            i += 1;
            j += 1;
        } else if i < n && suffix[i + 1][j] + 1 == here {
            ops.push(EditOp::Delete { src: i });
            i += 1;
        } else {
            ops.push(EditOp::Insert { tgt: j });
            j += 1;
        }
    }
    EditScript { ops }
}

fn check_coverage(script: &EditScript, src_len: usize) -> Result<()> {
    let mut next_src = 0;
    let mut next_tgt = 0;
    for op in &script.ops {
        if let Some(i) = op.src() {
            if i != next_src {
                return Err(Error::CoverageMismatch(format!("expected source index {next_src}, found {i}")));
            }
            next_src += 1;
        }
        if let Some(j) = op.tgt() {
            if j != next_tgt {
                return Err(Error::CoverageMismatch(format!("expected target index {next_tgt}, found {j}")));
            }
            next_tgt += 1;
        }
    }
    if next_src != src_len {
        return Err(Error::CoverageMismatch(format!(
            "script covers {next_src} source tokens, sequence has {src_len}"
        )));
    }
    Ok(())
}

/// For every op, the source token that absorbs it: its own source index,
/// or for inserts the preceding source token (the following one when the
/// insert comes before any source token). `None` only when `src` is empty.
fn owners(script: &EditScript, src_len: usize) -> Vec<Option<usize>> {
    let mut last_src: Option<usize> = None;
    script
        .ops
        .iter()
        .map(|op| match op.src() {
            Some(i) => {
                last_src = Some(i);
                Some(i)
            }
            None => last_src.or(if src_len > 0 { Some(0) } else { None }),
        })
        .collect()
}

/// Marks every source token that is replaced or deleted, plus the token
/// each insertion attaches to.
pub fn edits_to_mask(src: &TokenSeq, script: &EditScript) -> Result<MaskLabels> {
    check_coverage(script, src.len())?;
    let mut labels = vec![false; src.len()];
    for (op, owner) in script.ops.iter().zip(owners(script, src.len())) {
        if op.cost() > 0 {
            if let Some(i) = owner {
                labels[i] = true;
            }
        }
    }
    Ok(MaskLabels::new(labels))
}

/// Target tokens that each slot of `apply_mask(src, edits_to_mask(..))`
/// must expand to for the fill to reproduce `tgt`.
pub fn slot_fills(src: &TokenSeq, tgt: &TokenSeq, script: &EditScript) -> Result<Vec<Vec<String>>> {
    let labels = edits_to_mask(src, script)?;
    let owner = owners(script, src.len());
    let mut owned: Vec<Vec<String>> = vec![Vec::new(); src.len()];
    for (op, owner) in script.ops.iter().zip(owner) {
        if let (Some(j), Some(i)) = (op.tgt(), owner) {
            owned[i].push(tgt.tokens()[j].clone());
        }
    }
    let mut fills = Vec::new();
    let mut in_run = false;
    for (i, &masked) in labels.as_slice().iter().enumerate() {
        if masked {
            if !in_run {
                fills.push(Vec::new());
                in_run = true;
            }
            fills.last_mut().expect("run started").append(&mut owned[i]);
        } else {
            in_run = false;
        }
    }
    Ok(fills)
}

/// Mask-predictor supervision: a source sentence and its mask labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalItem {
    pub source: TokenSeq,
    pub labels: MaskLabels,
    pub direction: TransferDirection,
}

/// Filler supervision: a masked source and the rewrite it should become.
#[derive(Debug, Clone, PartialEq)]
pub struct FillItem {
    pub masked: MaskedText,
    pub target: TokenSeq,
    pub target_style: StyleLabel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalLine {
    source: String,
    labels: Vec<u8>,
    direction: TransferDirection,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FillLine {
    masked: String,
    target: String,
    target_style: StyleLabel,
}

fn parse_lines<T>(text: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| parse(l).map_err(|e| Error::Parse(format!("line {}: {e}", n + 1))))
        .collect()
}

impl SignalItem {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&SignalLine {
            source: self.source.to_string(),
            labels: self.labels.to_bits(),
            direction: self.direction.clone(),
        })
        .expect("serializable")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let raw: SignalLine = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        let source = tokenize(&raw.source);
        let labels = MaskLabels::from_bits(&raw.labels)?;
        if labels.len() != source.len() {
            return Err(Error::LabelLengthMismatch {
                index: 0,
                labels: labels.len(),
                tokens: source.len(),
            });
        }
        Ok(SignalItem {
            source,
            labels,
            direction: raw.direction,
        })
    }

    pub fn read_jsonl(text: &str) -> Result<Vec<Self>> {
        parse_lines(text, Self::from_json_line)
    }
}

impl FillItem {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&FillLine {
            masked: self.masked.rendered(),
            target: self.target.to_string(),
            target_style: self.target_style.clone(),
        })
        .expect("serializable")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let raw: FillLine = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(FillItem {
            masked: MaskedText::parse(&raw.masked),
            target: tokenize(&raw.target),
            target_style: raw.target_style,
        })
    }

    pub fn read_jsonl(text: &str) -> Result<Vec<Self>> {
        parse_lines(text, Self::from_json_line)
    }
}

/// Aligns a source sentence with its LLM rewrite and derives both
/// supervision items: mask labels for the predictor, and the masked source
/// paired with the rewrite for the filler.
pub fn build_signal_pair(
    src: &TokenSeq,
    llm_out: &TokenSeq,
    direction: &TransferDirection,
) -> (SignalItem, FillItem) {
    let script = min_edit_script(src, llm_out);
    let labels = edits_to_mask(src, &script).expect("script covers its own source");
    let masked = apply_mask(src, &labels).expect("labels align with source");
    (
        SignalItem {
            source: src.clone(),
            labels,
            direction: direction.clone(),
        },
        FillItem {
            masked,
            target: llm_out.clone(),
            target_style: direction.target().clone(),
        },
    )
}
