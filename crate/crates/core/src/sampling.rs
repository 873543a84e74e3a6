use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name recorded alongside samples drawn by [`shuffled_prefix`].
pub(crate) const ALGORITHM: &str = "chacha8-fisher-yates";

/// Uniform integer in `0..bound` by rejection on the top of the u64 range.
fn below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// Shuffles the first `n` positions of `items` with a forward Fisher-Yates
/// pass seeded from `seed`; the prefix is a uniform sample without
/// replacement in shuffled order.
pub(crate) fn shuffled_prefix<T>(items: &mut [T], n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = items.len();
    for i in 0..n.min(len) {
        let j = i + below(&mut rng, (len - i) as u64) as usize;
        items.swap(i, j);
    }
}
