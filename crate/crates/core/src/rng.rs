//! Reproducible, purpose-separated random streams.
//!
//! Every draw in a simulation comes from a [`RandomStream`] identified by a
//! [`StreamKey`]. The key's master seed and replication id pick a ChaCha
//! seed; the purpose tag picks the ChaCha stream number, so streams for
//! different purposes never overlap and do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type RandomStream = ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Purpose {
    TrainData,
    EvalData,
    SplitPermutation,
    /// Independent same-size sample used for the fresh-data estimation term.
    FreshData,
    /// Large sample standing in for unlimited training data.
    LimitData,
}

impl Purpose {
    fn stream_id(self) -> u64 {
        match self {
            Purpose::TrainData => 1,
            Purpose::EvalData => 2,
            Purpose::SplitPermutation => 3,
            Purpose::FreshData => 4,
            Purpose::LimitData => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub replication_id: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(master_seed: u64, replication_id: u64, purpose: Purpose) -> Self {
        Self {
            master_seed,
            replication_id,
            purpose,
        }
    }
}

pub fn make_stream(key: StreamKey) -> RandomStream {
    let mut state = key.master_seed ^ 0x6a09_e667_f3bc_c908;
    let mut seed = [0u8; 32];
    let a = splitmix64(&mut state);
    state ^= key.replication_id.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for chunk in seed.chunks_exact_mut(8) {
        let word = splitmix64(&mut state) ^ a;
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(seed);
    rng.set_stream(key.purpose.stream_id());
    rng
}

/// Mixes a master seed with a label into a derived seed. Used to give each
/// simulation cell its own family of streams.
pub fn derive_seed(master_seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then one splitmix round with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut state = master_seed ^ h;
    splitmix64(&mut state)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
