use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// B-spline basis on an equidistant knot grid extended `degree` knot
/// spacings beyond each end of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    pub degree: usize,
    pub inner_knots: usize,
    pub difference_order: usize,
    pub domain: (f64, f64),
}

impl SplineSpec {
    pub fn new(degree: usize, inner_knots: usize, difference_order: usize, domain: (f64, f64)) -> Result<Self> {
        let spec = Self {
            degree,
            inner_knots,
            difference_order,
            domain,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Cubic basis, 20 inner knots, second-order differences.
    pub fn cubic_default(domain: (f64, f64)) -> Result<Self> {
        Self::new(3, 20, 2, domain)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lo.is_finite() && hi.is_finite()) || !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "degenerate spline domain [{lo}, {hi}]"
            )));
        }
        if self.inner_knots < 1 {
            return Err(Error::InvalidParameter("spline needs at least one inner knot".into()));
        }
        if self.difference_order < 1 {
            return Err(Error::InvalidParameter("difference order must be at least 1".into()));
        }
        if self.difference_order >= self.basis_size() {
            return Err(Error::InvalidParameter(format!(
                "difference order {} needs more than {} basis functions",
                self.difference_order,
                self.basis_size()
            )));
        }
        Ok(())
    }

    pub fn basis_size(&self) -> usize {
        self.inner_knots + self.degree + 1
    }

    fn spacing(&self) -> f64 {
        (self.domain.1 - self.domain.0) / (self.inner_knots + 1) as f64
    }

    /// Full knot vector, `inner_knots + 2 + 2·degree` entries.
    pub fn knots(&self) -> Vec<f64> {
        let h = self.spacing();
        let count = self.inner_knots + 2 + 2 * self.degree;
        (0..count)
            .map(|i| self.domain.0 + (i as f64 - self.degree as f64) * h)
            .collect()
    }

    /// Regular grid of `len` points spanning the domain.
    pub fn grid(&self, len: usize) -> Vec<f64> {
        linspace(self.domain.0, self.domain.1, len)
    }
}

pub fn linspace(lo: f64, hi: f64, len: usize) -> Vec<f64> {
    match len {
        0 => vec![],
        1 => vec![lo],
        _ => (0..len)
            .map(|i| {
                if i == len - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (len - 1) as f64
                }
            })
            .collect(),
    }
}

/// Nonzero basis values at `x`: returns the first basis index and the
/// `degree + 1` values starting there.
fn nonzero_basis(x: f64, spec: &SplineSpec, knots: &[f64]) -> (usize, Vec<f64>) {
    let p = spec.degree;
    let h = spec.spacing();
    // Span index s with knots[s] <= x < knots[s+1], restricted to the domain
    // intervals so that x = max falls into the last closed interval.
    let rel = ((x - spec.domain.0) / h).floor();
    let interval = (rel.max(0.0) as usize).min(spec.inner_knots);
    let s = interval + p;
    let mut n = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[s + 1 - j];
        right[j] = knots[s + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    (s - p, n)
}

/// Design matrix with row `i` holding every basis function evaluated at `x[i]`.
pub fn bspline_design(x: &[f64], spec: &SplineSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let (lo, hi) = spec.domain;
    let knots = spec.knots();
    let k = spec.basis_size();
    let mut design = DMatrix::zeros(x.len(), k);
    for (i, &xi) in x.iter().enumerate() {
        if !(xi >= lo && xi <= hi) {
            return Err(Error::OutsideDomain { value: xi, min: lo, max: hi });
        }
        let (first, values) = nonzero_basis(xi, spec, &knots);
        for (offset, v) in values.into_iter().enumerate() {
            design[(i, first + offset)] = v;
        }
    }
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knot_count_and_basis_size() {
        let s = SplineSpec::new(3, 20, 2, (0.0, 3.0)).unwrap();
        assert_eq!(s.basis_size(), 24);
        assert_eq!(s.knots().len(), 28);
        assert!((s.knots()[3] - 0.0).abs() < 1e-15);
        assert!((s.knots()[24] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degree_zero_is_indicator() {
        let s = SplineSpec::new(0, 1, 1, (0.0, 1.0)).unwrap();
        let d = bspline_design(&[0.1, 0.49, 0.5, 0.9, 1.0], &s).unwrap();
        let want = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(d, want);
    }

    #[test]
    fn partition_of_unity_at_ends() {
        let s = SplineSpec::new(3, 5, 2, (-1.0, 2.0)).unwrap();
        let d = bspline_design(&[-1.0, 2.0, 0.4], &s).unwrap();
        for i in 0..3 {
            assert!((d.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_outside_and_degenerate() {
        let s = SplineSpec::new(3, 5, 2, (0.0, 1.0)).unwrap();
        assert!(matches!(bspline_design(&[1.5], &s), Err(Error::OutsideDomain { .. })));
        assert!(SplineSpec::new(3, 5, 2, (1.0, 1.0)).is_err());
        assert!(SplineSpec::new(3, 0, 2, (0.0, 1.0)).is_err());
    }

    #[test]
    fn linear_basis_reproduces_hat_functions() {
        let s = SplineSpec::new(1, 1, 1, (0.0, 2.0)).unwrap();
        let d = bspline_design(&[0.5], &s).unwrap();
        // Knots -1, 0, 1, 2, 3: hats centered at 0, 1, 2.
        assert!((d[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((d[(0, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(d[(0, 2)], 0.0);
    }
}
