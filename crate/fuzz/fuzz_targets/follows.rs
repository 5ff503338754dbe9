#![no_main]

use libfuzzer_sys::fuzz_target;
use traitsim::grounding::parse_follows;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(edges) = parse_follows(s) {
            assert!(edges.iter().all(|(a, b)| !a.is_empty() && !b.is_empty()));
        }
    }
});
