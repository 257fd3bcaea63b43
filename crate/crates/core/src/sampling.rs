//! Reproducible, per-trial random streams and the samplers that drive a trial.
//!
//! Every stream is a ChaCha8 generator. The 256-bit key is the SplitMix64
//! expansion of the master seed (four consecutive outputs, little-endian);
//! the 64-bit ChaCha stream id is `(trial_index << 8) | purpose_tag`. Both
//! steps are injective, so distinct `(seed, trial, tag)` triples never share
//! a keystream as long as `trial_index < 2^56`.

use rand::distr::{Bernoulli as BernoulliDist, Distribution};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Geometric, Poisson};

use crate::error::{check_range, Error, Result};

/// Purpose tags keep independent random decisions of one trial on separate
/// streams, so e.g. acceptance draws stay aligned across parameter values.
pub mod tags {
    pub const HERALD: u8 = 1;
    pub const ACCEPT: u8 = 2;
}

pub const MAX_TRIAL_INDEX: u64 = (1 << 56) - 1;

/// One step of SplitMix64.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and an index (used for sweep points).
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut i = index;
    let mut s = seed ^ splitmix64(&mut i);
    splitmix64(&mut s)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut state = master_seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Stream for one random purpose of one trial.
///
/// # Panics
/// If `trial_index` exceeds [`MAX_TRIAL_INDEX`].
pub fn derive_stream(master_seed: u64, trial_index: u64, purpose_tag: u8) -> RngStream {
    assert!(trial_index <= MAX_TRIAL_INDEX, "trial index out of range");
    RngStream::new(master_seed, (trial_index << 8) | u64::from(purpose_tag))
}

/// Bernoulli(p) prepared once; compares a 64-bit draw against a threshold.
#[derive(Clone, Copy, Debug)]
pub struct BernoulliSampler {
    p: f64,
    dist: BernoulliDist,
}

impl BernoulliSampler {
    pub fn new(p: f64) -> Result<Self> {
        check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        let dist = BernoulliDist::new(p).map_err(|_| Error::Domain {
            what: "p",
            value: p,
            range: "[0, 1]",
        })?;
        Ok(Self { p, dist })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> bool {
        self.dist.sample(rng)
    }

    /// Successes among `n` independent draws, one draw per trial in order.
    pub fn thin(&self, rng: &mut RngStream, n: u64) -> u64 {
        (0..n).filter(|_| self.sample(rng)).count() as u64
    }
}

/// Means below this use sequential-search inversion; above it the
/// transformed-rejection sampler from `rand_distr`.
pub const POISSON_INVERSION_LIMIT: f64 = 12.0;

/// Poisson(mean) prepared once.
#[derive(Clone, Debug)]
pub enum PoissonSampler {
    Zero,
    Inversion { mean: f64, p0: f64 },
    Rejection(Poisson<f64>),
}

impl PoissonSampler {
    pub fn new(mean: f64) -> Result<Self> {
        check_range("mean", mean, 0.0, f64::MAX, "[0, inf)")?;
        Ok(if mean == 0.0 {
            Self::Zero
        } else if mean < POISSON_INVERSION_LIMIT {
            Self::Inversion {
                mean,
                p0: (-mean).exp(),
            }
        } else {
            Self::Rejection(Poisson::new(mean).map_err(|_| Error::Domain {
                what: "mean",
                value: mean,
                range: "[0, 1.8e19)",
            })?)
        })
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        match *self {
            Self::Zero => 0,
            Self::Inversion { mean, p0 } => {
                let u = rng.uniform();
                let mut k = 0u64;
                let mut p = p0;
                let mut cdf = p0;
                while u >= cdf {
                    k += 1;
                    p *= mean / k as f64;
                    if p < f64::MIN_POSITIVE {
                        break;
                    }
                    cdf += p;
                }
                k
            }
            Self::Rejection(ref dist) => dist.sample(rng) as u64,
        }
    }
}

/// Number of failures before the first success of Bernoulli(p) trials.
#[derive(Clone, Copy, Debug)]
pub struct GeometricSampler(Geometric);

impl GeometricSampler {
    pub fn new(p: f64) -> Result<Self> {
        check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        Geometric::new(p).map(Self).map_err(|_| Error::Domain {
            what: "p",
            value: p,
            range: "[0, 1]",
        })
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        self.0.sample(rng)
    }
}

pub fn bernoulli(rng: &mut RngStream, p: f64) -> Result<bool> {
    Ok(BernoulliSampler::new(p)?.sample(rng))
}

pub fn poisson(rng: &mut RngStream, mean: f64) -> Result<u64> {
    Ok(PoissonSampler::new(mean)?.sample(rng))
}

/// `n` Bernoulli(p) draws in sequence, counting successes.
pub fn binomial_thin(rng: &mut RngStream, n: u64, p: f64) -> Result<u64> {
    Ok(BernoulliSampler::new(p)?.thin(rng, n))
}
