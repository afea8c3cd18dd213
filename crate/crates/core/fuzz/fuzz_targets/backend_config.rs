#![no_main]

use libfuzzer_sys::fuzz_target;
use styleforge::backends::parse_backend_config;

fuzz_target!(|text: &str| {
    let _ = parse_backend_config(text);
});
