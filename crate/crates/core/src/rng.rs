//! Counter-based random streams.
//!
//! Every draw is addressed by `(master seed, domain, stream id, step)`: the
//! seed and domain select a ChaCha8 key, the stream id selects the ChaCha
//! stream and the step selects the word position. A particle's Brownian
//! increments therefore never depend on how particles are scheduled across
//! threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words consumed per Brownian step (four `u64` draws).
const WORDS_PER_STEP: u128 = 8;

/// Independent key families derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Initial conditions.
    Init,
    /// Brownian increments of ensemble particles or noise realisations.
    Noise,
    /// Tangent-vector initialisation for Lyapunov runs.
    Tangent,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Init => 0x696e_6974,
            Domain::Noise => 0x6e6f_6973,
            Domain::Tangent => 0x7461_6e67,
        }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Factory of keyed streams for one `(seed, domain)` pair.
#[derive(Debug, Clone)]
pub struct StreamFactory {
    key: [u8; 32],
}

impl StreamFactory {
    pub fn new(master_seed: u64, domain: Domain) -> Self {
        let mut state = master_seed ^ domain.tag().rotate_left(32);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key }
    }

    /// Generator positioned at the start of stream `id`.
    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(id);
        rng
    }

    /// Brownian increment source for stream `id`, positioned at `step`.
    pub fn brownian(&self, id: u64, step: u64) -> BrownianStream {
        let mut rng = self.stream(id);
        rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        BrownianStream { rng }
    }
}

/// Sequential source of 3-d standard normal triples, one per step.
///
/// Each triple consumes exactly [`WORDS_PER_STEP`] words so that step `k`
/// always reads the same block range regardless of where reading started.
#[derive(Debug, Clone)]
pub struct BrownianStream {
    rng: ChaCha8Rng,
}

#[inline]
fn open_unit(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl BrownianStream {
    /// Three independent N(0, 1) variates via two Box-Muller pairs.
    #[inline]
    pub fn next_normals(&mut self) -> [f64; 3] {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        let c = self.rng.next_u64();
        let d = self.rng.next_u64();
        let tau = std::f64::consts::TAU;
        let r1 = (-2.0 * open_unit(a).ln()).sqrt();
        let (s1, c1) = (tau * open_unit(b)).sin_cos();
        let r2 = (-2.0 * open_unit(c).ln()).sqrt();
        let c2 = (tau * open_unit(d)).cos();
        [r1 * c1, r1 * s1, r2 * c2]
    }

    /// Brownian increments with variance `dt` each.
    #[inline]
    pub fn next_increments(&mut self, dt: f64) -> [f64; 3] {
        let s = dt.sqrt();
        let z = self.next_normals();
        [z[0] * s, z[1] * s, z[2] * s]
    }
}
