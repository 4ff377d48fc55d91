//! Deterministic derivation of independent seeds from a master seed.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `master`. Depends only on its arguments,
/// so parallel and serial consumers see the same values.
pub fn derive(master: u64, stream: u64) -> u64 {
    mix(mix(master) ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Named sub-streams used by the pipeline.
pub mod stream {
    pub const SPLIT: u64 = 0x5011;
    pub const AUTOENCODER: u64 = 0xae;
    pub const FOREST: u64 = 0xf0;
}
