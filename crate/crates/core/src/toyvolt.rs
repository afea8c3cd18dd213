//! toyvolt: a small synthetic sentiment corpus with a planted lexicon.
//!
//! Every sentence is a neutral template carrying exactly one sentiment
//! adjective drawn from a fixed list of antonym pairs. The matching mock
//! backends (lexicon classifier, antonym generator) therefore know the
//! stylistic words exactly, which makes end-to-end runs checkable by hand.
//!
//! The files under `data/toyvolt` follow the Yelp layout
//! (`sentiment.{train,dev,test}.{0,1}`, tab-separated `reference.{0,1}`) and
//! are produced by [`generate`] with [`SEED`]; run the `gen_toyvolt` example
//! to rewrite them.

use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backends::mock::{AntonymGenerator, Lexicon, SubstitutionTable};
use crate::text::{Corpus, StyleLabel};

pub const SEED: u64 = 20_231_015;
pub const TRAIN_PER_STYLE: usize = 1000;
pub const DEV_PER_STYLE: usize = 200;
pub const TEST_PER_STYLE: usize = 250;

/// Style 0 is negative, style 1 positive, as in the Yelp files.
pub const STYLES: [&str; 2] = ["negative", "positive"];

/// `(positive, negative, weight)`.
pub const ANTONYMS: [(&str, &str, f64); 10] = [
    ("wonderful", "awful", 3.0),
    ("great", "terrible", 2.0),
    ("good", "bad", 2.0),
    ("friendly", "rude", 2.0),
    ("delicious", "bland", 2.0),
    ("fresh", "stale", 2.0),
    ("helpful", "useless", 2.0),
    ("clean", "dirty", 2.0),
    ("pleasant", "unpleasant", 2.0),
    ("cheap", "overpriced", 2.0),
];

const SUBJECTS: [&str; 12] = [
    "the food", "the service", "our waiter", "the room", "the pizza", "the staff",
    "the coffee", "the manager", "the menu", "the patio", "the bread", "the bill",
];
const PLACES: [&str; 6] = ["restaurant", "cafe", "hotel", "diner", "bakery", "bistro"];
const TIMES: [&str; 6] = ["week", "month", "friday", "saturday", "sunday", "summer"];
const RELATIONS: [&str; 6] = ["wife", "husband", "friend", "sister", "brother", "mom"];

/// `{s}` subject, `{p}` place, `{t}` time, `{r}` relation, `{w}` style word.
const TEMPLATES: [&str; 8] = [
    "{s} at this {p} was {w} when we visited last {t} .",
    "i thought {s} was {w} , and my {r} agreed with me .",
    "honestly , {s} here is always {w} no matter what time you come .",
    "we came for dinner on {t} and {s} was {w} as usual .",
    "after waiting a few minutes , we found {s} to be {w} .",
    "my {r} and i both said {s} was {w} at this {p} .",
    "{s} was {w} and we stayed at the {p} until closing .",
    "last {t} i told everyone that {s} at the {p} was {w} .",
];

pub fn style(index: usize) -> StyleLabel {
    StyleLabel::new(STYLES[index]).expect("valid label")
}

/// The planted lexicon, pole `positive`.
pub fn lexicon() -> Lexicon {
    Lexicon::new(
        style(1),
        ANTONYMS.iter().flat_map(|&(pos, neg, w)| [(pos, w), (neg, -w)]),
    )
}

/// Swaps each planted word for its antonym; refine prompts pass through.
pub fn generator() -> AntonymGenerator {
    let mut table = SubstitutionTable::new();
    for (pos, neg, _) in ANTONYMS {
        table.insert_pair(pos, neg);
    }
    AntonymGenerator {
        table,
        ..Default::default()
    }
}

/// One sentence in both polarities: `(negative, positive)`.
fn sentence_pair(rng: &mut ChaCha8Rng) -> (String, String) {
    let template = TEMPLATES.choose(rng).expect("non-empty");
    let filled = template
        .replace("{s}", SUBJECTS.choose(rng).expect("non-empty"))
        .replace("{p}", PLACES.choose(rng).expect("non-empty"))
        .replace("{t}", TIMES.choose(rng).expect("non-empty"))
        .replace("{r}", RELATIONS.choose(rng).expect("non-empty"));
    let (pos, neg, _) = ANTONYMS[rng.random_range(0..ANTONYMS.len())];
    (filled.replace("{w}", neg), filled.replace("{w}", pos))
}

/// Generated dataset, one line per sentence. Index 0 holds the negative
/// side, index 1 the positive side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyvoltData {
    pub train: [Vec<String>; 2],
    pub dev: [Vec<String>; 2],
    pub test: [Vec<String>; 2],
    /// Antonym-swapped counterpart of each test sentence.
    pub reference: [Vec<String>; 2],
}

pub fn generate(seed: u64) -> ToyvoltData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = |n: usize, side: usize| -> Vec<(String, String)> {
        (0..n)
            .map(|_| {
                let (neg, pos) = sentence_pair(&mut rng);
                if side == 0 {
                    (neg, pos)
                } else {
                    (pos, neg)
                }
            })
            .collect()
    };
    let firsts = |v: Vec<(String, String)>| v.into_iter().map(|p| p.0).collect::<Vec<_>>();
    let train = [firsts(split(TRAIN_PER_STYLE, 0)), firsts(split(TRAIN_PER_STYLE, 1))];
    let dev = [firsts(split(DEV_PER_STYLE, 0)), firsts(split(DEV_PER_STYLE, 1))];
    let test0 = split(TEST_PER_STYLE, 0);
    let test1 = split(TEST_PER_STYLE, 1);
    let (test_0, ref_0): (Vec<_>, Vec<_>) = test0.into_iter().unzip();
    let (test_1, ref_1): (Vec<_>, Vec<_>) = test1.into_iter().unzip();
    ToyvoltData {
        train,
        dev,
        test: [test_0, test_1],
        reference: [ref_0, ref_1],
    }
}

impl ToyvoltData {
    /// File name and contents of every file in the Yelp layout.
    pub fn files(&self) -> Vec<(String, String)> {
        let lines = |v: &[String]| v.iter().map(|l| format!("{l}\n")).collect::<String>();
        let mut files = Vec::new();
        for i in 0..2 {
            files.push((format!("sentiment.train.{i}"), lines(&self.train[i])));
            files.push((format!("sentiment.dev.{i}"), lines(&self.dev[i])));
            files.push((format!("sentiment.test.{i}"), lines(&self.test[i])));
            let refs = self.test[i]
                .iter()
                .zip(&self.reference[i])
                .map(|(s, r)| format!("{s}\t{r}\n"))
                .collect();
            files.push((format!("reference.{i}"), refs));
        }
        files
    }
}

/// Directory holding the checked-in files.
pub fn data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toyvolt"))
}

const TRAIN_0: &str = include_str!("../data/toyvolt/sentiment.train.0");
const TRAIN_1: &str = include_str!("../data/toyvolt/sentiment.train.1");

/// The bundled training corpora, negative then positive.
pub fn train_corpora() -> [Corpus; 2] {
    [
        Corpus::from_text(TRAIN_0, style(0), data_dir().join("sentiment.train.0")),
        Corpus::from_text(TRAIN_1, style(1), data_dir().join("sentiment.train.1")),
    ]
}
