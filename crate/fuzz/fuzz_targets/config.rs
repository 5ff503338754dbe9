#![no_main]

use libfuzzer_sys::fuzz_target;
use traitsim::SimulationConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = SimulationConfig::from_toml(s) {
            let _ = c.validate();
        }
    }
});
