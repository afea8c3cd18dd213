#![no_main]

use libfuzzer_sys::fuzz_target;
use styleforge::metrics::tokenize_13a;
use styleforge::tokenize;

fuzz_target!(|text: &str| {
    let toks = tokenize(text);
    for t in toks.tokens() {
        assert!(!t.is_empty() && !t.contains(char::is_whitespace));
    }
    for t in tokenize_13a(text) {
        assert!(!t.is_empty() && !t.contains(char::is_whitespace));
    }
});
