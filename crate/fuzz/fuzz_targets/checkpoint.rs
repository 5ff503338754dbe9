#![no_main]

use libfuzzer_sys::fuzz_target;
use traitsim::io::world_from_texts;

// Input is the five checkpoint files joined by NUL bytes:
// state, agents, content, log, memory.
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let parts: Vec<&str> = s.splitn(5, '\0').collect();
        if let [state, agents, content, log, memory] = parts[..] {
            let _ = world_from_texts(state, agents, content, log, memory);
        }
    }
});
