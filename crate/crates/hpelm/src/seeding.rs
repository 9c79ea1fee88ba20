//! Deterministic sub-seed derivation.
//!
//! Everything random in this crate is keyed off a user seed through this
//! mixer: per-neuron weight substreams, RBF width scales, split shuffles,
//! grid row seeds. Deriving independent substreams (instead of pulling from
//! one shared stream) is what makes nested layer instantiation and parallel
//! grid execution reproducible.

/// SplitMix64 finalizer step.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix an ordered tuple of words into one 64-bit sub-seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut state = 0x243F_6A88_85A3_08D3; // pi fraction, fixed starting point
    for &p in parts {
        state = splitmix64(state ^ splitmix64(p));
    }
    state
}
