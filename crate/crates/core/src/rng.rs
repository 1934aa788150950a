//! Reproducible Gaussian streams.
//!
//! A stream is addressed by `(seed, stream_id)`. The underlying generator is
//! ChaCha8 with the seed expanded into the 256-bit key and `stream_id` used as
//! the ChaCha stream (nonce), so the draw at position `step` is a pure function
//! of `(seed, stream_id, step)`. Monte Carlo drivers give every path its own
//! substream, which makes results independent of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaussianStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl GaussianStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child stream number `index`. Children of distinct parents or with
    /// distinct indices land on distinct ChaCha streams with overwhelming
    /// probability.
    pub fn substream(&self, index: u64) -> Self {
        let mut s = self.stream_id ^ index.rotate_left(32);
        let a = splitmix64(&mut s);
        let b = splitmix64(&mut s) ^ index;
        Self {
            seed: self.seed,
            stream_id: a ^ b.rotate_left(17),
        }
    }

    pub fn source(&self) -> GaussianSource {
        let mut state = self.seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        GaussianSource { rng, zero: false }
    }
}

/// Sequential reader over a [`GaussianStream`].
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
    zero: bool,
}

impl GaussianSource {
    /// A source that always returns zero. Used to check the deterministic
    /// skeleton of constructions driven by Gaussian noise.
    pub fn zeros() -> Self {
        Self {
            rng: ChaCha8Rng::from_seed([0; 32]),
            zero: true,
        }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.rng.sample(StandardNormal)
        }
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.rng.random::<f64>()
        }
    }
}
