// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seed derivation.
//!
//! All randomness flows from one root seed. A stage (or any sub-stream) gets
//! its own seed as `splitmix64(root ^ fnv1a64(name))`, so each stage can be
//! re-run in isolation and yields the same stream as inside a full pipeline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a hash of a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the named stage under `root`.
pub fn derive_seed(root: u64, stage: &str) -> u64 {
    splitmix64(root ^ fnv1a64(stage.as_bytes()))
}

/// Seed for the `index`-th item of a stream.
pub fn derive_indexed(root: u64, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Deterministic RNG for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
