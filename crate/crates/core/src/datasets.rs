//! Corpus files and test sets.
//!
//! Corpora are plain UTF-8, one sentence per line, LF or CRLF. A dataset is
//! described by a [`DatasetSpec`] whose paths are relative to a data root.
//! Built-in specs mirror the upstream file layouts:
//!
//! | name                         | train / test                          | refs                       |
//! |------------------------------|---------------------------------------|----------------------------|
//! | `yelp`, `amazon`, `toyvolt`  | `sentiment.{train,test}.{0,1}`        | `reference.{0,1}`, column 1 |
//! | `yelp-clean`, `amazon-clean` | `sentiment.train.*`, `test.clean.*`   | `reference.clean.*`, col. 1 |
//! | `politeness`                 | `politeness.{train,test}.{0,1}`       | none                       |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{Corpus, StyleLabel, TokenSeq, TransferDirection};
use crate::toyvolt;

/// Sources per direction in the cleaned 500-sentence test sets.
pub const CLEAN_TEST_SIZE: usize = 250;

pub const BUILTIN: [&str; 6] = ["yelp", "amazon", "politeness", "yelp-clean", "amazon-clean", "toyvolt"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFiles {
    pub src: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refs: Option<PathBuf>,
    /// Tab-separated column holding the reference; the whole line when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refs_column: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub style0: StyleLabel,
    pub style1: StyleLabel,
    /// Directory the relative paths below are resolved against.
    #[serde(default)]
    pub root: PathBuf,
    pub train_files: BTreeMap<StyleLabel, PathBuf>,
    #[serde(default)]
    pub dev_files: BTreeMap<StyleLabel, PathBuf>,
    pub test_files: BTreeMap<TransferDirection, TestFiles>,
}

fn label(s: &str) -> StyleLabel {
    StyleLabel::new(s).expect("valid built-in label")
}

fn pairwise(
    name: &str,
    styles: [&str; 2],
    root: PathBuf,
    train: impl Fn(usize) -> String,
    dev: Option<&dyn Fn(usize) -> String>,
    test: impl Fn(usize) -> TestFiles,
) -> DatasetSpec {
    let [s0, s1] = styles.map(label);
    let mut spec = DatasetSpec {
        name: name.to_string(),
        style0: s0.clone(),
        style1: s1.clone(),
        root,
        train_files: BTreeMap::new(),
        dev_files: BTreeMap::new(),
        test_files: BTreeMap::new(),
    };
    for (i, (src, tgt)) in [(&s0, &s1), (&s1, &s0)].into_iter().enumerate() {
        spec.train_files.insert(src.clone(), PathBuf::from(train(i)));
        if let Some(dev) = dev {
            spec.dev_files.insert(src.clone(), PathBuf::from(dev(i)));
        }
        let dir = TransferDirection::new(src.clone(), tgt.clone()).expect("distinct styles");
        spec.test_files.insert(dir, test(i));
    }
    spec
}

/// A built-in dataset layout rooted at `root`. `toyvolt` defaults to the
/// bundled files when `root` is `None`.
pub fn builtin(name: &str, root: Option<&Path>) -> Result<DatasetSpec> {
    let root_or = |what: &str| {
        root.map(Path::to_path_buf)
            .ok_or_else(|| Error::Config(format!("dataset {what} needs a data root")))
    };
    let sentiment = ["negative", "positive"];
    let referenced = |src: String, refs: String| TestFiles {
        src: src.into(),
        refs: Some(refs.into()),
        refs_column: Some(1),
    };
    let train = |i: usize| format!("sentiment.train.{i}");
    let dev = |i: usize| format!("sentiment.dev.{i}");
    Ok(match name {
        "yelp" | "amazon" => pairwise(name, sentiment, root_or(name)?, train, Some(&dev), |i| {
            referenced(format!("sentiment.test.{i}"), format!("reference.{i}"))
        }),
        "toyvolt" => {
            let root = root.map_or_else(toyvolt::data_dir, Path::to_path_buf);
            pairwise(name, sentiment, root, train, Some(&dev), |i| {
                referenced(format!("sentiment.test.{i}"), format!("reference.{i}"))
            })
        }
        "yelp-clean" | "amazon-clean" => pairwise(name, sentiment, root_or(name)?, train, Some(&dev), |i| {
            referenced(format!("test.clean.{i}"), format!("reference.clean.{i}"))
        }),
        "politeness" => pairwise(
            name,
            ["impolite", "polite"],
            root_or(name)?,
            |i| format!("politeness.train.{i}"),
            Some(&|i| format!("politeness.dev.{i}")),
            |i| TestFiles {
                src: format!("politeness.test.{i}").into(),
                refs: None,
                refs_column: None,
            },
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown dataset {other:?} (built-ins: {})",
                BUILTIN.join(", ")
            )))
        }
    })
}

/// Parses a JSON spec; relative paths and an empty `root` resolve against
/// `base`.
pub fn parse_dataset_spec(text: &str, base: &Path) -> Result<DatasetSpec> {
    let mut spec: DatasetSpec =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("dataset spec: {e}")))?;
    spec.root = base.join(&spec.root);
    spec.validate()?;
    Ok(spec)
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.style0 == self.style1 {
            return Err(Error::Config(format!("dataset {} has identical styles", self.name)));
        }
        let known = |s: &StyleLabel| *s == self.style0 || *s == self.style1;
        for style in self.train_files.keys().chain(self.dev_files.keys()) {
            if !known(style) {
                return Err(Error::InvalidStyle(style.to_string()));
            }
        }
        for dir in self.test_files.keys() {
            if !known(dir.source()) || !known(dir.target()) {
                return Err(Error::InvalidDirection(dir.to_string()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.root.join(path)
    }

    pub fn is_clean_test_set(&self) -> bool {
        self.name.ends_with("-clean")
    }

    pub fn check_direction(&self, direction: &TransferDirection) -> Result<()> {
        let known = |s: &StyleLabel| *s == self.style0 || *s == self.style1;
        if known(direction.source()) && known(direction.target()) {
            Ok(())
        } else {
            Err(Error::InvalidDirection(format!("{direction} for dataset {}", self.name)))
        }
    }

    pub fn load_train(&self, style: &StyleLabel) -> Result<Corpus> {
        let path = self
            .train_files
            .get(style)
            .ok_or_else(|| Error::Config(format!("dataset {} has no training file for {style}", self.name)))?;
        load_corpus(&self.resolve(path), style)
    }

    pub fn load_dev(&self, style: &StyleLabel) -> Result<Corpus> {
        let path = self
            .dev_files
            .get(style)
            .ok_or_else(|| Error::Config(format!("dataset {} has no dev file for {style}", self.name)))?;
        load_corpus(&self.resolve(path), style)
    }
}

fn read_file(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(text)
}

pub fn load_corpus(path: &Path, style: &StyleLabel) -> Result<Corpus> {
    Ok(Corpus::from_text(&read_file(path)?, style.clone(), path))
}

fn load_refs(path: &Path, column: Option<usize>, style: &StyleLabel) -> Result<Corpus> {
    let Some(column) = column else {
        return load_corpus(path, style);
    };
    let text = read_file(path)?;
    let mut selected = String::with_capacity(text.len());
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let field = line.trim_end_matches('\r').split('\t').nth(column).ok_or_else(|| {
            Error::Parse(format!("{}:{}: no tab-separated column {column}", path.display(), n + 1))
        })?;
        selected.push_str(field);
        selected.push('\n');
    }
    Ok(Corpus::from_text(&selected, style.clone(), path))
}

/// Sources for `direction` and, when the dataset has them, index-aligned
/// references.
pub fn load_test_set(spec: &DatasetSpec, direction: &TransferDirection) -> Result<(Corpus, Option<Corpus>)> {
    let files = spec
        .test_files
        .get(direction)
        .ok_or_else(|| Error::InvalidDirection(format!("{direction} for dataset {}", spec.name)))?;
    let sources = load_corpus(&spec.resolve(&files.src), direction.source())?;
    if spec.is_clean_test_set() && sources.len() != CLEAN_TEST_SIZE {
        log::warn!(
            "{} {direction}: expected {CLEAN_TEST_SIZE} test sentences, found {}",
            spec.name,
            sources.len()
        );
    }
    let refs = files
        .refs
        .as_ref()
        .map(|path| load_refs(&spec.resolve(path), files.refs_column, direction.target()))
        .transpose()?;
    if let Some(refs) = &refs {
        if refs.len() != sources.len() {
            return Err(Error::RefLengthMismatch {
                sources: sources.len(),
                refs: refs.len(),
            });
        }
    }
    Ok((sources, refs))
}

/// Reads hypothesis or source lines for evaluation.
pub fn load_lines(path: &Path) -> Result<Vec<TokenSeq>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(crate::text::tokenize)
        .collect())
}
