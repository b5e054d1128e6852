//! Deterministic random streams.
//!
//! A run owns one root seed. Every consumer (wind, per-agent walks, initial
//! placement, tie-breaks) draws from its own named stream derived from that
//! root, so adding a consumer never shifts the numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string. Stable across platforms and runs.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Folds a sequence of words into one seed. Order matters.
pub fn combine(words: &[u64]) -> u64 {
    words.iter().fold(0x5EED_u64, |acc, w| mix64(acc ^ mix64(*w)))
}

/// Seed for the stream called `label` under `root`.
pub fn stream_seed(root: u64, label: &str) -> u64 {
    combine(&[root, fnv1a(label.as_bytes())])
}

pub fn stream(root: u64, label: &str) -> Stream {
    Stream::seed_from_u64(stream_seed(root, label))
}

/// Indexed variant, e.g. one stream per agent.
pub fn indexed_stream(root: u64, label: &str, index: u64) -> Stream {
    Stream::seed_from_u64(combine(&[root, fnv1a(label.as_bytes()), index]))
}
