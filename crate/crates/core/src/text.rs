//! Word-level tokenization and the shared style vocabulary.
//!
//! Tokens are whitespace-delimited words with leading and trailing ASCII
//! punctuation split off into single-character tokens. This is also the
//! masking granularity: one mask label per token.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters split off the edges of a word.
pub const PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '\'', '"', '(', ')'];

fn is_punct(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

fn is_punct_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punct)
}

/// A style name such as `positive` or `impolite`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StyleLabel(String);

impl StyleLabel {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        let valid = !name.is_empty()
            && name
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_');
        if valid {
            Ok(StyleLabel(name))
        } else {
            Err(Error::InvalidStyle(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for StyleLabel {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        StyleLabel::new(value)
    }
}

impl From<StyleLabel> for String {
    fn from(value: StyleLabel) -> Self {
        value.0
    }
}

impl FromStr for StyleLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StyleLabel::new(s)
    }
}

impl fmt::Display for StyleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Source and target style of a transfer task.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TransferDirection {
    source: StyleLabel,
    target: StyleLabel,
}

impl TransferDirection {
    pub fn new(source: StyleLabel, target: StyleLabel) -> Result<Self> {
        if source == target {
            return Err(Error::InvalidDirection(format!(
                "source and target are both {source}"
            )));
        }
        Ok(TransferDirection { source, target })
    }

    pub fn source(&self) -> &StyleLabel {
        &self.source
    }

    pub fn target(&self) -> &StyleLabel {
        &self.target
    }

    pub fn reversed(&self) -> Self {
        TransferDirection {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }
}

/// Accepts both the CLI form `negative:positive` and the dataset form
/// `negative->positive`.
impl FromStr for TransferDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (src, tgt) = s
            .split_once("->")
            .or_else(|| s.split_once(':'))
            .ok_or_else(|| Error::InvalidDirection(format!("{s:?} is not of the form source:target")))?;
        let parse = |part: &str| {
            StyleLabel::new(part.trim()).map_err(|_| Error::InvalidDirection(format!("bad style {part:?} in {s:?}")))
        };
        TransferDirection::new(parse(src)?, parse(tgt)?)
    }
}

impl TryFrom<String> for TransferDirection {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<TransferDirection> for String {
    fn from(value: TransferDirection) -> Self {
        value.to_string()
    }
}

impl fmt::Display for TransferDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source, self.target)
    }
}

/// A tokenized sentence together with the text it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    tokens: Vec<String>,
    raw: String,
}

impl TokenSeq {
    /// Builds a sequence from already-split tokens; `raw` becomes their
    /// detokenized form.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t: &String| !t.is_empty())
            .collect();
        let raw = join_tokens(&tokens);
        TokenSeq { tokens, raw }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lowercase_tokens(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.to_lowercase()).collect()
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&detokenize(self))
    }
}

pub fn tokenize(text: &str) -> TokenSeq {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let start = word.find(|c: char| !is_punct(c));
        let Some(start) = start else {
            // all punctuation
            tokens.extend(word.chars().map(String::from));
            continue;
        };
        let end = word
            .rfind(|c: char| !is_punct(c))
            .map(|i| i + word[i..].chars().next().map_or(1, char::len_utf8))
            .unwrap_or(word.len());
        tokens.extend(word[..start].chars().map(String::from));
        tokens.push(word[start..end].to_string());
        tokens.extend(word[end..].chars().map(String::from));
    }
    TokenSeq {
        tokens,
        raw: text.to_string(),
    }
}

pub fn detokenize(seq: &TokenSeq) -> String {
    join_tokens(&seq.tokens)
}

/// Joins tokens with single spaces, dropping the space before any
/// punctuation-only token.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, token) in tokens.iter().enumerate() {
        let token = token.as_ref();
        if i > 0 && !is_punct_token(token) {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Sentences of one style, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub style: StyleLabel,
    pub sentences: Vec<TokenSeq>,
    pub origin: PathBuf,
}

impl Corpus {
    /// Parses one sentence per line. Lines are trimmed (which also strips a
    /// trailing `\r`) and blank lines are skipped.
    pub fn from_text(text: &str, style: StyleLabel, origin: impl Into<PathBuf>) -> Self {
        let sentences = text
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty())
            .map(tokenize)
            .collect();
        Corpus {
            style,
            sentences,
            origin: origin.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}
