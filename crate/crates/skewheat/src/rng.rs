//! Deterministic seed derivation for parallel Monte Carlo.
//!
//! One master seed (CLI `--seed`) fans out into independent ChaCha8 streams
//! through a two-level tree: a textual domain label picks the 256-bit key via
//! splitmix over `master ^ fnv1a(label)`, and the per-sample index selects the
//! ChaCha stream. Workers never share generator state, and the stream assigned
//! to `(label, index)` does not depend on how samples are scheduled, so
//! reductions over indexed results are reproducible for any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root of the seed-derivation tree.
#[derive(Debug, Clone, Copy)]
pub struct SeedTree {
    master: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        SeedTree { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Independent generator for `(label, index)`.
    pub fn stream(&self, label: &str, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut s = splitmix(self.master ^ fnv1a(label));
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&s.to_le_bytes());
            s = splitmix(s);
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    /// Sub-tree for nested derivations (e.g. one tree per experiment seed).
    pub fn child(&self, label: &str, index: u64) -> SeedTree {
        SeedTree {
            master: splitmix(splitmix(self.master ^ fnv1a(label)) ^ index),
        }
    }
}
