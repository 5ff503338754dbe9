#![no_main]

use libfuzzer_sys::fuzz_target;
use traitsim::engine::{init_population, Configuration};
use traitsim::io::parse_personas;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = parse_personas(s) {
            let _ = init_population(&p, Configuration::FullModel);
        }
    }
});
