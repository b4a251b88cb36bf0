use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};

/// Horizon sampler for `Geometric(1 - gamma)` on `{0, 1, 2, ...}`.
#[derive(Clone, Copy, Debug)]
pub struct HorizonSampler {
    dist: Geometric,
}

impl HorizonSampler {
    pub fn new(discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::arg(format!("discount must lie in [0, 1), got {discount}")));
        }
        let dist = Geometric::new(1.0 - discount).map_err(|e| Error::arg(e.to_string()))?;
        Ok(Self { dist })
    }

    /// Start offset `h` with `P(h = k) = (1 - gamma) gamma^k`, `k >= 0`.
    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng) as usize
    }

    /// Window length `h' >= 1` with `P(h' = k) = (1 - gamma) gamma^(k-1)`.
    pub fn window<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        1 + self.dist.sample(rng) as usize
    }
}

/// Number of failures before the first success with success probability `1 - gamma`.
pub fn sample_geometric<R: Rng + ?Sized>(rng: &mut R, discount: f64) -> Result<u64> {
    Ok(HorizonSampler::new(discount)?.start(rng) as u64)
}
