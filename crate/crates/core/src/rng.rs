//! Seeded substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by a
//! `(seed, stream)` pair, so rows, trials and restarts can be generated in any
//! order (or in parallel) without changing the result.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Stream tags keep the purposes of derived seeds apart.
pub mod tag {
    pub const TRIAL: u64 = 0x7472_6961_6c00_0001;
    pub const RESTART: u64 = 0x7265_7374_6172_7402;
    pub const SUBSET: u64 = 0x7375_6273_6574_0003;
    pub const CODEBOOK: u64 = 0x636f_6465_626b_0004;
    pub const TENSOR: u64 = 0x7465_6e73_6f72_0005;
    pub const DECODE: u64 = 0x6465_636f_6465_0006;
    pub const MEASURE: u64 = 0x6d65_6173_7572_0007;
}

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A fresh 64-bit seed for item `index` of purpose `tag` under `seed`.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.rotate_left(17));
    rng.set_stream(index);
    rng.next_u64()
}
