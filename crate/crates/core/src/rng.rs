//! Counter-based random streams.
//!
//! A [`StreamFactory`] holds a 256-bit ChaCha key derived from a master seed
//! and a path of domain tags. Stream `i` of a factory is the ChaCha8
//! generator with that key and stream id `i`, so the numbers a trial sees
//! depend only on `(master seed, tags, trial index)` and never on which
//! worker ran the trial or in what order.
//!
//! Key derivation: the 32-byte key is four consecutive SplitMix64 outputs of
//! a state initialised from the parent material; `child(tag)` reseeds the
//! SplitMix64 state with `parent_word[0] ^ rotl(tag * GOLDEN, 17)` mixed
//! through all four parent words.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    key: [u64; 4],
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let key = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        Self { key }
    }

    /// Independent factory for a sub-campaign (replica, level, ...).
    pub fn child(&self, tag: u64) -> Self {
        let mut state = self.key[0] ^ tag.wrapping_mul(GOLDEN).rotate_left(17);
        for w in &self.key[1..] {
            state = splitmix64(&mut state) ^ w;
        }
        let key = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        Self { key }
    }

    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip(self.key.iter()) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(id);
        rng
    }
}
