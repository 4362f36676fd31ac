use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies one random stream: a flow at a hop within a replication.
/// Hop 0 is the through traffic; cross traffic at hop `h` uses `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replication: u64,
    pub hop: u64,
    pub flow: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8 keyed by the seed, with the stream number derived from the rest
/// of the key. Streams do not depend on the order in which they are drawn.
pub fn stream(key: StreamKey) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key.seed);
    let id = splitmix(splitmix(splitmix(key.replication) ^ key.hop) ^ key.flow);
    rng.set_stream(id);
    rng
}
