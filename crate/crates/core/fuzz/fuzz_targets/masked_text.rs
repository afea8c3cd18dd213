#![no_main]

use libfuzzer_sys::fuzz_target;
use styleforge::masking::MaskedText;

fuzz_target!(|text: &str| {
    let once = MaskedText::parse(text).rendered();
    assert_eq!(MaskedText::parse(&once).rendered(), once);
});
