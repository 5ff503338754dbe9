//! Counter-style RNG streams. Every (seed, agent, iteration) triple gets an
//! independent ChaCha stream, so the order in which agents are processed
//! never changes what any of them draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::AgentId;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Stream for one agent in one iteration. `purpose` separates independent
/// uses (feed shuffling vs. decision sampling) within the same step.
pub fn agent_stream(master_seed: u64, agent: &AgentId, iteration: u32, purpose: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ fnv1a(agent.as_str().as_bytes()).rotate_left(17);
    state ^= u64::from(iteration).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    state ^= purpose.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Plain seeded stream for batch analytics (k-means restarts, fixtures).
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
