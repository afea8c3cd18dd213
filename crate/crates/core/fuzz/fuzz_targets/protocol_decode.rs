#![no_main]

use libfuzzer_sys::fuzz_target;
use styleforge::backends::protocol::*;

fuzz_target!(|data: &[u8]| {
    let Some((&which, rest)) = data.split_first() else { return };
    let Ok(body) = std::str::from_utf8(rest) else { return };
    match which % 5 {
        0 => {
            let _ = decode_classify_response(body);
        }
        1 => {
            let _ = decode_fill_response(body);
        }
        2 => {
            let _ = decode_generate_response(body);
        }
        3 => {
            let _ = decode_embed_response(body);
        }
        _ => {
            let _ = decode_perplexity_response(body);
        }
    }
});
