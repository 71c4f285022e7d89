//! Seed derivation for reproducible, scheduling-independent random streams.
//!
//! Every random draw in the simulator comes from a ChaCha stream keyed by
//! `(master seed, purpose tag, a, b)`, typically `(user, trial)`. Two runs with
//! the same master seed therefore see identical draws no matter how trials are
//! distributed over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::C64;

/// Purpose tags keep unrelated streams apart even for equal indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    IntraClassCodes = 1,
    SpatialAngles = 2,
    ChannelPaths = 3,
    PilotNoise = 4,
    BaselineCodes = 5,
    DataSymbols = 6,
    ReceiverNoise = 7,
    Fdma = 8,
    Test = 99,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: Stream, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ stream as u64);
    h = splitmix64(h ^ a);
    splitmix64(h ^ b.rotate_left(17))
}

pub fn stream_rng(master: u64, stream: Stream, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, a, b))
}

/// Standard circularly-symmetric complex Gaussian, `E|z|² = 1`.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
