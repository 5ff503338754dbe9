#![no_main]

use libfuzzer_sys::fuzz_target;
use traitsim::grounding::{build_engagement_graph, parse_records};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = parse_records(s) {
            let _ = build_engagement_graph(&r);
        }
    }
});
