#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use styleforge::datasets::parse_dataset_spec;

fuzz_target!(|text: &str| {
    let _ = parse_dataset_spec(text, Path::new("/data"));
});
