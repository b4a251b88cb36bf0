//! Ball-constrained least squares by stochastic projected gradient descent
//! with weighted iterate averaging.
//!
//! With `w^0 = 0`, step `k = 0..K-1` draws a sample uniformly with
//! replacement and sets `w^{k+1} = P(w^k - lambda_k * 2 (<phi, w^k> - R) phi)`,
//! `lambda_k = 2 / (2 + k)`. The output is `sum_{k=0}^{K} beta_k w^k` with
//! `beta_k` proportional to `1 / lambda_k`.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressionConfig {
    /// Radius `W` of the weight ball.
    pub weight_bound: f64,
    /// Number of gradient steps; `None` uses the sample count.
    pub inner_steps: Option<usize>,
}

impl RegressionConfig {
    pub fn new(weight_bound: f64) -> Result<Self> {
        let config = Self { weight_bound, inner_steps: None };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight_bound > 0.0 && self.weight_bound.is_finite()) {
            return Err(Error::arg(format!("weight bound must be positive, got {}", self.weight_bound)));
        }
        Ok(())
    }
}

/// `sqrt(d) / (1 - gamma)`.
pub fn default_weight_bound(dim: usize, discount: f64) -> f64 {
    (dim as f64).sqrt() / (1.0 - discount)
}

pub fn project_ball(w: &mut [f64], radius: f64) {
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > radius {
        let scale = radius / norm;
        w.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Mean squared residual `(1/n) sum (<phi, w> - R)^2`.
pub fn mean_squared_loss(features: &[Vec<f64>], targets: &[f64], w: &[f64]) -> f64 {
    let n = features.len().max(1) as f64;
    features
        .iter()
        .zip(targets)
        .map(|(phi, r)| {
            let pred: f64 = phi.iter().zip(w).map(|(a, b)| a * b).sum();
            (pred - r).powi(2)
        })
        .sum::<f64>()
        / n
}

/// Fits `w` with `|w| <= W` to `(features[k], targets[k])` pairs.
pub fn spgd_regress<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    targets: &[f64],
    config: &RegressionConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    config.validate()?;
    if features.is_empty() {
        return Err(Error::EmptySamples);
    }
    if features.len() != targets.len() {
        return Err(Error::dim(format!("{} feature rows but {} targets", features.len(), targets.len())));
    }
    let d = features[0].len();
    if let Some(bad) = features.iter().position(|phi| phi.len() != d) {
        return Err(Error::dim(format!("feature row {bad} has length {}, expected {d}", features[bad].len())));
    }
    let steps = config.inner_steps.unwrap_or(features.len());

    let mut w = vec![0.0; d];
    // running weighted sum of iterates; weight of w^k is (2 + k) / 2
    let mut acc = vec![0.0; d];
    let mut total_weight = 1.0;
    for k in 0..steps {
        let idx = rng.random_range(0..features.len());
        let phi = &features[idx];
        let residual: f64 = phi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - targets[idx];
        let lambda = 2.0 / (2.0 + k as f64);
        for (wj, pj) in w.iter_mut().zip(phi) {
            *wj -= lambda * 2.0 * residual * pj;
        }
        project_ball(&mut w, config.weight_bound);
        let beta = (3.0 + k as f64) / 2.0;
        for (aj, wj) in acc.iter_mut().zip(&w) {
            *aj += beta * wj;
        }
        total_weight += beta;
    }
    acc.iter_mut().for_each(|x| *x /= total_weight);
    // convex combination of ball points; guard rounding
    project_ball(&mut acc, config.weight_bound);
    Ok(acc)
}
