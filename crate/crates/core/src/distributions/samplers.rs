use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// One draw from IG(shape, rate): the reciprocal of a Gamma(shape, rate) draw.
///
/// For shapes below one the gamma draw is formed in log space as
/// `G(shape + 1) · U^{1/shape}`, which would otherwise underflow. Draws
/// beyond the largest finite double are clamped to `f64::MAX`.
pub fn inverse_gamma_sample<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse gamma needs positive shape and rate, got ({shape}, {rate})"
        )));
    }
    let log_gamma_draw = if shape < 1.0 {
        let boosted = Gamma::new(shape + 1.0, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let g: f64 = boosted.sample(rng);
        let u: f64 = rng.random::<f64>();
        // u in [0, 1); u = 0 maps to log G = −inf, i.e. an unbounded IG draw.
        g.ln() + u.ln() / shape - rate.ln()
    } else {
        let gamma = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let g: f64 = gamma.sample(rng);
        g.ln() - rate.ln()
    };
    let v = (-log_gamma_draw).exp();
    Ok(if v.is_finite() { v.max(f64::MIN_POSITIVE) } else { f64::MAX })
}

/// Gaussian in canonical form: precision `Q` and linear term `b`, so the
/// mean is `Q⁻¹b` and the covariance `scale² · Q⁻¹`.
///
/// One Cholesky factorization serves the mean, draws, and log-densities.
#[derive(Debug, Clone)]
pub struct CanonicalGaussian {
    chol: Cholesky<f64, Dyn>,
    mean: DVector<f64>,
    half_log_det: f64,
}

impl CanonicalGaussian {
    pub fn new(precision: DMatrix<f64>, linear: &DVector<f64>) -> Result<Self> {
        if precision.nrows() != precision.ncols() {
            return Err(Error::DimensionMismatch {
                context: "precision matrix".into(),
                expected: precision.nrows(),
                actual: precision.ncols(),
            });
        }
        if linear.len() != precision.nrows() {
            return Err(Error::DimensionMismatch {
                context: "canonical linear term".into(),
                expected: precision.nrows(),
                actual: linear.len(),
            });
        }
        let chol = Cholesky::new(precision)
            .ok_or_else(|| Error::NotPositiveDefinite("precision factorization failed".into()))?;
        let mean = chol.solve(linear);
        let half_log_det = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        if !mean.iter().all(|v| v.is_finite()) {
            return Err(Error::NotPositiveDefinite("precision is numerically singular".into()));
        }
        Ok(Self {
            chol,
            mean,
            half_log_det,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `mean + scale · L⁻ᵀ z` with `z` standard normal.
    pub fn draw<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> DVector<f64> {
        let n = self.dim();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let mut x = z;
        self.chol
            .l_dirty()
            .tr_solve_lower_triangular_mut(&mut x);
        x *= scale;
        x + &self.mean
    }

    /// `(x − m)ᵀ Q (x − m)`.
    pub fn mahalanobis2(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.mean;
        // ‖Lᵀ d‖² with lower-triangular L
        let l = self.chol.l_dirty();
        let n = d.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut s = 0.0;
            for k in i..n {
                s += l[(k, i)] * d[k];
            }
            total += s * s;
        }
        total
    }

    /// Log-density of `N(Q⁻¹b, scale²·Q⁻¹)` at `x`.
    pub fn log_density(&self, x: &DVector<f64>, scale: f64) -> f64 {
        let k = self.dim() as f64;
        let s2 = scale * scale;
        -0.5 * k * (2.0 * PI * s2).ln() + self.half_log_det - self.mahalanobis2(x) / (2.0 * s2)
    }
}

/// A single draw from the Gaussian with precision `Q` and mean `Q⁻¹b`.
pub fn gaussian_draw_from_precision<R: Rng + ?Sized>(
    precision: DMatrix<f64>,
    linear: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(CanonicalGaussian::new(precision, linear)?.draw(1.0, rng))
}
