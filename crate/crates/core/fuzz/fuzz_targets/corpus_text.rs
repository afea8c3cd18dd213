#![no_main]

use libfuzzer_sys::fuzz_target;
use styleforge::{Corpus, StyleLabel};

fuzz_target!(|text: &str| {
    let corpus = Corpus::from_text(text, StyleLabel::new("positive").unwrap(), "fuzz");
    assert!(corpus.len() <= text.lines().count());
});
