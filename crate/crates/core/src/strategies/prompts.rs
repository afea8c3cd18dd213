//! Instruction templates. These strings are reproduced byte for byte.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{StyleLabel, TransferDirection};

pub const REWRITE_PREFIX: &str = "Rewrite the following text in a ";
pub const REWRITE_INFIX: &str = " manner: ";
pub const REFINE_PREFIX: &str = "Refine the following text without changing its semantic: ";
pub const ICL_INSTRUCTION: &str = "Please rewrite the following text into a ";

/// `Rewrite the following text in a {target} manner: {text}`
pub fn rewrite(text: &str, target: &StyleLabel) -> String {
    format!("{REWRITE_PREFIX}{target}{REWRITE_INFIX}{text}")
}

/// `Refine the following text without changing its semantic: {text}`
pub fn refine(text: &str) -> String {
    format!("{REFINE_PREFIX}{text}")
}

/// An in-context example: a corpus sentence and its masking transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub source_text: String,
    pub transferred_text: String,
    pub similarity: f64,
}

/// Noun used in the in-context instruction ("into a positive sentiment").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IclWording {
    #[default]
    Sentiment,
    Style,
}

impl IclWording {
    pub fn as_str(&self) -> &'static str {
        match self {
            IclWording::Sentiment => "sentiment",
            IclWording::Style => "style",
        }
    }
}

fn marker(style: &StyleLabel) -> String {
    format!("\"{style} Text\":")
}

pub fn icl(demos: &[Demonstration], query: &str, direction: &TransferDirection, wording: IclWording) -> Result<String> {
    if demos.is_empty() {
        return Err(Error::EmptyDemos);
    }
    let (sx, sy) = (marker(direction.source()), marker(direction.target()));
    let mut out = String::new();
    for d in demos {
        out.push_str(&format!("{sx} {}. {sy} {}. ", d.source_text, d.transferred_text));
    }
    out.push_str(&format!(
        "{ICL_INSTRUCTION}{} {}. {sx} {query}. {sy}",
        direction.target(),
        wording.as_str()
    ));
    Ok(out)
}

/// The query sentence of an in-context prompt built by [`icl`].
pub fn icl_query(prompt: &str) -> Option<&str> {
    let tail = &prompt[prompt.rfind(ICL_INSTRUCTION)? + ICL_INSTRUCTION.len()..];
    let start = tail.find(" Text\": ")? + " Text\": ".len();
    let end = tail.rfind(". \"")?;
    (start <= end).then(|| &tail[start..end])
}

const QUOTES: &[char] = &['"', '\'', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];

/// Trims whitespace and surrounding quote characters.
pub fn strip_completion(raw: &str) -> &str {
    let mut s = raw.trim();
    loop {
        let next = s.trim_matches(QUOTES).trim();
        if next == s {
            return s;
        }
        s = next;
    }
}

/// Completion of an in-context prompt: the text after the last target
/// marker when the backend echoes the prompt, else the whole completion,
/// with whitespace and quotes stripped.
pub fn extract_icl_completion(raw: &str, direction: &TransferDirection) -> Result<String> {
    let m = marker(direction.target());
    let tail = match raw.rfind(&m) {
        Some(pos) => &raw[pos + m.len()..],
        None => raw,
    };
    let text = strip_completion(tail);
    if text.is_empty() {
        return Err(Error::ExtractionFailure);
    }
    Ok(text.to_string())
}
