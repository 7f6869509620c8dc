//! Seeded, splittable randomness.
//!
//! Every consumer derives its own ChaCha stream from `(seed, stream id)`, so
//! independent draws never share state and results do not depend on the
//! order in which parallel work finishes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream-id namespaces. The low 40 bits carry an index within the namespace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    StageEdges = 1,
    StageWaste = 2,
    StatSample = 3,
    Generator = 4,
    Trial = 5,
    Simplify = 6,
    Pipeline = 7,
    Greedy = 8,
    Independence = 9,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) | (index & ((1 << 40) - 1)));
    rng
}

/// Mixes `index` into `seed`; used to give trials and pipeline stages
/// unrelated root seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Calls `f(i)` for each `i < n` independently with probability `p`, by
/// jumping geometric gaps between successes.
pub fn for_each_bernoulli<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R, mut f: impl FnMut(usize)) {
    if n == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..n).for_each(f);
        return;
    }
    let log_q = (-p).ln_1p();
    let mut i = 0usize;
    loop {
        let u: f64 = rng.gen();
        let gap = ((1.0 - u).ln() / log_q).floor();
        if gap >= (n - i) as f64 {
            return;
        }
        i += gap as usize;
        f(i);
        i += 1;
        if i >= n {
            return;
        }
    }
}
