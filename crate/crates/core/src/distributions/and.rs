//! Asymmetric normal distribution.
//!
//! Density `c(σ², τ) · exp(−w_τ(y, η)(y − η)² / (2σ²))`. Each side of `η` is a
//! half-Gaussian with variance `σ²/(1−τ)` (left) or `σ²/τ` (right), which gives
//! the normalizing constant
//!
//! ```text
//! 1/c = ½ √(2πσ²) · (1/√(1−τ) + 1/√τ)
//! ```
//!
//! At τ = ½ this is a Gaussian with variance 2σ².

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::asymmetry::{asymmetric_weight, Asymmetry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndParams {
    pub location: f64,
    pub scale2: f64,
    pub asym: Asymmetry,
}

impl AndParams {
    pub fn new(location: f64, scale2: f64, asym: Asymmetry) -> Result<Self> {
        if !(scale2 > 0.0 && scale2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale2 must be positive and finite, got {scale2}"
            )));
        }
        if !location.is_finite() {
            return Err(Error::InvalidParameter("location must be finite".into()));
        }
        Ok(Self {
            location,
            scale2,
            asym,
        })
    }

    /// Standard deviations of the left and right half-Gaussians.
    fn half_scales(&self) -> (f64, f64) {
        let tau = self.asym.tau();
        ((self.scale2 / (1.0 - tau)).sqrt(), (self.scale2 / tau).sqrt())
    }
}

/// `log c(σ², τ)`.
pub fn and_log_normalizer(scale2: f64, asym: Asymmetry) -> f64 {
    let tau = asym.tau();
    let z = 0.5 * (2.0 * PI * scale2).sqrt() * (1.0 / (1.0 - tau).sqrt() + 1.0 / tau.sqrt());
    -z.ln()
}

pub fn and_log_density(y: f64, p: &AndParams) -> f64 {
    let r = y - p.location;
    and_log_normalizer(p.scale2, p.asym) - asymmetric_weight(y, p.location, p.asym) * r * r / (2.0 * p.scale2)
}

/// Probability mass at or below the location: `√τ / (√τ + √(1−τ))`.
pub fn and_left_mass(asym: Asymmetry) -> f64 {
    let tau = asym.tau();
    tau.sqrt() / (tau.sqrt() + (1.0 - tau).sqrt())
}

/// Exact mean and variance of the normalized density.
pub fn and_moments(p: &AndParams) -> (f64, f64) {
    let left = and_left_mass(p.asym);
    let right = 1.0 - left;
    let (s_left, s_right) = p.half_scales();
    // E|Z| = √(2/π), E Z² = 1 for the standard half-normal.
    let half_mean = (2.0 / PI).sqrt();
    let shift = half_mean * (right * s_right - left * s_left);
    let second = left * s_left * s_left + right * s_right * s_right;
    (p.location + shift, second - shift * shift)
}

/// I.i.d. draws as a two-component half-Gaussian mixture.
pub fn and_sample<R: Rng + ?Sized>(p: &AndParams, n: usize, rng: &mut R) -> Vec<f64> {
    let left = and_left_mass(p.asym);
    let (s_left, s_right) = p.half_scales();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let z: f64 = StandardNormal.sample(rng);
            if u < left {
                p.location - s_left * z.abs()
            } else {
                p.location + s_right * z.abs()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau(t: f64) -> Asymmetry {
        Asymmetry::new(t).unwrap()
    }

    #[test]
    fn symmetric_case_is_gaussian_with_double_variance() {
        let p = AndParams::new(1.5, 0.7, tau(0.5)).unwrap();
        for y in [-2.0, 0.0, 1.5, 3.3] {
            let var = 2.0 * 0.7;
            let gauss = -0.5 * (2.0 * PI * var).ln() - (y - 1.5f64).powi(2) / (2.0 * var);
            assert!((and_log_density(y, &p) - gauss).abs() < 1e-13);
        }
        let (m, v) = and_moments(&AndParams::new(3.0, 1.0, tau(0.5)).unwrap());
        assert!((m - 3.0).abs() < 1e-15);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn continuous_at_location() {
        let p = AndParams::new(0.0, 2.0, tau(0.1)).unwrap();
        let c = and_log_normalizer(2.0, p.asym);
        assert_eq!(and_log_density(0.0, &p), c);
        assert!((and_log_density(1e-12, &p) - c).abs() < 1e-20);
    }

    #[test]
    fn rejects_nonpositive_scale() {
        assert!(AndParams::new(0.0, 0.0, tau(0.3)).is_err());
        assert!(AndParams::new(0.0, -1.0, tau(0.3)).is_err());
    }

    #[test]
    fn upper_tail_heavier_above_half() {
        let (m, _) = and_moments(&AndParams::new(0.0, 1.0, tau(0.9)).unwrap());
        assert!(m < 0.0, "τ > ½ puts more weight on the right residuals, shrinking that side");
    }
}
