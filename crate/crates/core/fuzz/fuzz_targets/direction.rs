#![no_main]

use libfuzzer_sys::fuzz_target;
use styleforge::strategies::Method;
use styleforge::{StyleLabel, TransferDirection};

fuzz_target!(|text: &str| {
    if let Ok(d) = text.parse::<TransferDirection>() {
        assert_eq!(d.to_string().parse::<TransferDirection>().unwrap(), d);
    }
    if let Ok(s) = text.parse::<StyleLabel>() {
        assert_eq!(s.to_string().parse::<StyleLabel>().unwrap(), s);
    }
    let _ = text.parse::<Method>();
});
