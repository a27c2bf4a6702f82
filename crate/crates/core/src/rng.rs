//! Seedable, splittable random streams.
//!
//! Every (master seed, task index) pair maps to its own ChaCha8 stream, so the
//! output of a sweep does not depend on how tasks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream for task `task` under `master`.
pub fn stream(master: u64, task: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(task);
    rng
}

/// Two-level derivation, for tasks nested inside tasks (e.g. restart `r` of sweep point `p`).
pub fn substream(master: u64, outer: u64, inner: u64) -> StreamRng {
    // splitmix-style mixing keeps (outer, inner) pairs apart from plain task indices
    let mut z = master ^ outer.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    stream(z, inner)
}

/// A fresh master seed for task `task`, for APIs that take a seed rather than a stream.
pub fn derive_seed(master: u64, task: u64) -> u64 {
    use rand::Rng;
    stream(master, task).random()
}
