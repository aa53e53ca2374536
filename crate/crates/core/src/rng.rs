//! Seedable, splittable random streams.
//!
//! Every consumer derives its own ChaCha8 stream from a master seed and a
//! path of indices (SNR point, shard, iteration, ...). Streams for distinct
//! paths are independent, and a stream depends only on its path, never on
//! how work was scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stream for `master_seed` at the given index path.
pub fn derive(master_seed: u64, path: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let stream = path
        .iter()
        .fold(0x5EED_u64, |acc, &i| splitmix(acc ^ splitmix(i.wrapping_add(1))));
    rng.set_stream(stream);
    rng
}
