use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Handle on one reproducible random stream.
///
/// The generator is ChaCha8 keyed by `seed` with its 64-bit stream counter set to
/// `stream_id`, so scenario `k` draws the same numbers no matter how many other
/// scenarios run or in which order threads pick them up. Nested components
/// (per-firm, per-parameter) get their own key through [`RngStream::child`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn master(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// Sibling stream sharing this key.
    pub fn stream(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    /// Independent stream keyed by `(self, tag)`.
    pub fn child(&self, tag: u64) -> Self {
        let key = splitmix64(splitmix64(self.seed ^ 0x243f_6a88_85a3_08d3) ^ self.stream_id);
        Self::new(key, tag)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
