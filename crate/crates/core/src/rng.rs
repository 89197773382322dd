//! Counter-based random stream derivation.
//!
//! Every unit of work (a Monte Carlo cell, a simulated run) gets its own
//! ChaCha stream keyed by the experiment seed and a domain tag, with the work
//! index selecting the stream. Results are therefore independent of the order
//! in which work units are scheduled and of the number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tag for Monte Carlo transition cells.
pub const DOMAIN_TRANSITIONS: u64 = 0x6d63_7472_616e_7331;
/// Domain tag for simulated EA runs.
pub const DOMAIN_RUNS: u64 = 0x6561_5f72_756e_7331;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Returns the stream `index` of the generator keyed by `(seed, domain)`.
pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut state = seed ^ domain.rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Stream for the Monte Carlo cell at fitness offset `level` and grid index `rate_index`.
pub fn cell_stream(seed: u64, level: usize, rate_index: usize) -> StreamRng {
    stream(
        seed,
        DOMAIN_TRANSITIONS,
        ((level as u64) << 32) | rate_index as u64,
    )
}

pub fn run_stream(seed: u64, run_id: usize) -> StreamRng {
    stream(seed, DOMAIN_RUNS, run_id as u64)
}
