#![no_main]

use libfuzzer_sys::fuzz_target;
use styleforge::strategies::prompts::{extract_icl_completion, icl_query, strip_completion};
use styleforge::TransferDirection;

fuzz_target!(|text: &str| {
    let direction: TransferDirection = "negative:positive".parse().unwrap();
    let _ = strip_completion(text);
    let _ = icl_query(text);
    let _ = extract_icl_completion(text, &direction);
});
