#![no_main]

use libfuzzer_sys::fuzz_target;
use traitsim::io::{log_to_jsonl, parse_content, parse_log};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(log) = parse_log(s) {
            assert_eq!(parse_log(&log_to_jsonl(&log)).expect("rendered log parses"), log);
        }
        let _ = parse_content(s);
    }
});
