#![no_main]

use libfuzzer_sys::fuzz_target;
use styleforge::align::{FillItem, SignalItem};

fuzz_target!(|text: &str| {
    if let Ok(items) = SignalItem::read_jsonl(text) {
        for item in &items {
            let again = SignalItem::from_json_line(&item.to_json_line()).unwrap();
            assert_eq!(again.to_json_line(), item.to_json_line());
        }
    }
    if let Ok(items) = FillItem::read_jsonl(text) {
        for item in &items {
            let again = FillItem::from_json_line(&item.to_json_line()).unwrap();
            assert_eq!(again.to_json_line(), item.to_json_line());
        }
    }
});
