//! The discrete randomization scheme.
//!
//! Each coordinate of a point on the grid `{0, 1/K, ..., 1}^d` is kept with
//! probability `alpha` and otherwise replaced by one of the `K` other grid
//! values, each with probability `beta = (1 - alpha) / K`.
//!
//! Grid points are handled as integer levels `0..=K`.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseParams {
    d: usize,
    k: u32,
    alpha_pct: u32,
}

impl NoiseParams {
    pub fn new(d: usize, k: u32, alpha_pct: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("dimension d must be positive".into()));
        }
        if k == 0 {
            return Err(Error::InvalidParams("grid resolution K must be positive".into()));
        }
        if !(1..=99).contains(&alpha_pct) {
            return Err(Error::InvalidParams(format!(
                "alpha_pct must lie in [1, 99], got {alpha_pct}"
            )));
        }
        Ok(Self { d, k, alpha_pct })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Grid resolution; the alphabet has `K + 1` symbols.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn alpha_pct(&self) -> u32 {
        self.alpha_pct
    }

    pub fn alpha(&self) -> Rational {
        Rational::new(BigInt::from(self.alpha_pct), BigInt::from(100u32))
    }

    pub fn beta(&self) -> Rational {
        Rational::new(
            BigInt::from(100 - self.alpha_pct),
            BigInt::from(100u64 * u64::from(self.k)),
        )
    }

    /// `alpha` scaled by `100 K`: an integer.
    pub fn alpha_scaled(&self) -> u64 {
        u64::from(self.alpha_pct) * u64::from(self.k)
    }

    /// `beta` scaled by `100 K`: an integer.
    pub fn beta_scaled(&self) -> u64 {
        u64::from(100 - self.alpha_pct)
    }

    /// The common denominator `100 K` of the scaled probabilities.
    pub fn scale(&self) -> u64 {
        100 * u64::from(self.k)
    }

    /// Draws one sample of the randomized point. Deterministic in `seed`.
    pub fn sample(&self, x: &[u32], seed: u64) -> Result<Vec<u32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(x, &mut rng)
    }

    /// Like [`sample`](Self::sample) but drawing from a caller-owned RNG, so
    /// many samples can share one stream.
    pub fn sample_with<R: Rng + ?Sized>(&self, x: &[u32], rng: &mut R) -> Result<Vec<u32>> {
        self.check_point(x)?;
        Ok(x.iter()
            .map(|&level| {
                if rng.gen_range(0..100) < self.alpha_pct {
                    level
                } else {
                    let other = rng.gen_range(0..self.k);
                    if other >= level {
                        other + 1
                    } else {
                        other
                    }
                }
            })
            .collect())
    }

    /// Number of coordinates where `x` and `z` differ. The likelihood of `z`
    /// under the randomization of `x` is `alpha^(d-u) beta^u` for this `u`.
    pub fn log_likelihood_tuple(&self, x: &[u32], z: &[u32]) -> Result<usize> {
        self.check_point(x)?;
        self.check_point(z)?;
        Ok(hamming(x, z))
    }

    /// Exact probability that the randomization of `x` lands on `z`.
    pub fn likelihood(&self, x: &[u32], z: &[u32]) -> Result<Rational> {
        let u = self.log_likelihood_tuple(x, z)?;
        Ok(num_traits::pow(self.alpha(), self.d - u) * num_traits::pow(self.beta(), u))
    }

    pub fn check_point(&self, x: &[u32]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        if let Some((i, &v)) = x.iter().enumerate().find(|(_, &v)| v > self.k) {
            return Err(Error::InputDomain(format!(
                "coordinate {i} has level {v}, above K = {}",
                self.k
            )));
        }
        Ok(())
    }

    /// Converts real coordinates in `[0, 1]` to grid levels, rejecting
    /// anything that is not within `1e-9` of a multiple of `1/K`.
    pub fn to_levels(&self, x: &[f64]) -> Result<Vec<u32>> {
        let k = f64::from(self.k);
        let levels = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let scaled = v * k;
                let level = scaled.round();
                if !(0.0..=k).contains(&level) || (scaled - level).abs() > 1e-9 {
                    Err(Error::InputDomain(format!("coordinate {i} = {v} is off the grid")))
                } else {
                    Ok(level as u32)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.check_point(&levels)?;
        Ok(levels)
    }
}

pub(crate) fn hamming(x: &[u32], z: &[u32]) -> usize {
    x.iter().zip(z).filter(|(a, b)| a != b).count()
}
