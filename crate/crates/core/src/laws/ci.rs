use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::backfit::{expand_lambdas, LawsFit};
use crate::distributions::Asymmetry;
use crate::error::{Error, Result};
use crate::intervals::{check_level, Band};
use crate::terms::ModelTerm;

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Sandwich covariance of the stacked coefficient vector
/// `(intercept, β_1, …, β_J)` and the resulting normal-theory bands.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichIntervals {
    pub covariance: DMatrix<f64>,
    pub coefficients: DVector<f64>,
    /// `(offset, width)` of each term's block; the intercept occupies column 0.
    pub blocks: Vec<(usize, usize)>,
    pub level: f64,
    pub z: f64,
    /// Pointwise bands of each term's fitted values at the observations.
    pub term_bands: Vec<Band>,
}

impl SandwichIntervals {
    /// Band for `rows · θ` where `rows` spans the full stacked coefficient vector.
    pub fn linear_band(&self, rows: &DMatrix<f64>) -> Result<Band> {
        if rows.ncols() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                context: "columns of stacked design".into(),
                expected: self.coefficients.len(),
                actual: rows.ncols(),
            });
        }
        let estimate = rows * &self.coefficients;
        let projected = rows * &self.covariance;
        Ok(self.assemble(estimate.as_slice(), |i| projected.row(i).dot(&rows.row(i))))
    }

    /// Band for `design · β_j` of term `j` (0-based, excluding the intercept).
    pub fn term_band(&self, j: usize, design: &DMatrix<f64>) -> Result<Band> {
        let (offset, width) = *self
            .blocks
            .get(j + 1)
            .ok_or_else(|| Error::InvalidParameter(format!("no term with index {j}")))?;
        if design.ncols() != width {
            return Err(Error::DimensionMismatch {
                context: "columns of term design".into(),
                expected: width,
                actual: design.ncols(),
            });
        }
        let coef = self.coefficients.rows(offset, width);
        let cov = self.covariance.view((offset, offset), (width, width));
        let estimate = design * coef;
        let projected = design * cov;
        Ok(self.assemble(estimate.as_slice(), |i| projected.row(i).dot(&design.row(i))))
    }

    /// Band for the full predictor given one design per term at new points.
    pub fn predictor_band(&self, designs: &[DMatrix<f64>]) -> Result<Band> {
        let rows = designs.first().map(|d| d.nrows()).unwrap_or(1);
        let mut stacked = DMatrix::zeros(rows, self.coefficients.len());
        stacked.column_mut(0).fill(1.0);
        if designs.len() + 1 != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                context: "term designs".into(),
                expected: self.blocks.len() - 1,
                actual: designs.len(),
            });
        }
        for (d, &(offset, width)) in designs.iter().zip(&self.blocks[1..]) {
            if d.ncols() != width || d.nrows() != rows {
                return Err(Error::DimensionMismatch {
                    context: "term design shape".into(),
                    expected: width,
                    actual: d.ncols(),
                });
            }
            stacked.view_mut((0, offset), (rows, width)).copy_from(d);
        }
        self.linear_band(&stacked)
    }

    pub fn intercept_interval(&self) -> (f64, f64, f64) {
        let est = self.coefficients[0];
        let half = self.z * self.covariance[(0, 0)].max(0.0).sqrt();
        (est, est - half, est + half)
    }

    fn assemble(&self, estimate: &[f64], variance: impl Fn(usize) -> f64) -> Band {
        let mut band = Band { estimate: estimate.to_vec(), lower: Vec::new(), upper: Vec::new() };
        for (i, e) in estimate.iter().enumerate() {
            let half = self.z * variance(i).max(0.0).sqrt();
            band.lower.push(e - half);
            band.upper.push(e + half);
        }
        band
    }
}

/// Sandwich covariance `H⁻¹ XᵀWŜWX H⁻¹` with `X = [1, B_1, …, B_J]`,
/// `H = XᵀWX + blockdiag(0, λ_1K_1, …)` and `Ŝ = diag(r²)`, evaluated at the
/// converged fit.
pub fn asymptotic_ci(
    fit: &LawsFit,
    y: &[f64],
    terms: &[ModelTerm],
    asym: Asymmetry,
    level: f64,
) -> Result<SandwichIntervals> {
    check_level(level)?;
    if !fit.converged {
        return Err(Error::InvalidParameter("asymptotic intervals need a converged fit".into()));
    }
    let lambdas = expand_lambdas(terms, &fit.lambdas)?;
    let n = y.len();
    let mut blocks = vec![(0usize, 1usize)];
    let mut total = 1;
    for t in terms {
        blocks.push((total, t.width()));
        total += t.width();
    }
    let mut x = DMatrix::zeros(n, total);
    x.column_mut(0).fill(1.0);
    for (t, &(offset, width)) in terms.iter().zip(&blocks[1..]) {
        x.view_mut((0, offset), (n, width)).copy_from(t.design());
    }
    let w = crate::distributions::weights(y, &fit.fitted, asym);
    let mut xw = x.clone();
    let mut xs = x.clone();
    for i in 0..n {
        let r = y[i] - fit.fitted[i];
        xw.row_mut(i).scale_mut(w[i]);
        xs.row_mut(i).scale_mut(w[i] * r.abs());
    }
    let mut h = x.transpose() * &xw;
    for ((t, &(offset, width)), l) in terms.iter().zip(&blocks[1..]).zip(&lambdas) {
        if *l > 0.0 {
            let mut view = h.view_mut((offset, offset), (width, width));
            view += t.penalty() * *l;
        }
    }
    let meat = xs.transpose() * &xs;
    let chol = nalgebra::linalg::Cholesky::new(h.clone())
        .ok_or_else(|| Error::SingularSystem("joint sandwich bread (centre smooth terms)".into()))?;
    let h_inv = chol.inverse();
    let cov = &h_inv * meat * &h_inv;
    let covariance = 0.5 * (&cov + cov.transpose());
    let mut coefficients = DVector::zeros(total);
    coefficients[0] = fit.intercept;
    for (c, &(offset, width)) in fit.coefficients.iter().zip(&blocks[1..]) {
        coefficients.rows_mut(offset, width).copy_from(c);
    }
    let z = normal_quantile(0.5 + 0.5 * level);
    let mut out = SandwichIntervals { covariance, coefficients, blocks, level, z, term_bands: Vec::new() };
    out.term_bands = terms
        .iter()
        .enumerate()
        .map(|(j, t)| out.term_band(j, t.design()))
        .collect::<Result<_>>()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{iwls_backfit, LawsConfig};
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn quantile_matches_table() {
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!(normal_quantile(0.5).abs() < 1e-12);
    }

    #[test]
    fn bands_are_symmetric() {
        let mut rng = stream(8);
        let x: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v + rng.sample::<f64, _>(StandardNormal)).collect();
        let term = ModelTerm::linear("x", DMatrix::from_column_slice(100, 1, &x), vec!["x".into()]).unwrap();
        let terms = vec![term];
        let asym = Asymmetry::new(0.7).unwrap();
        let fit = iwls_backfit(&y, &terms, asym, &[], &LawsConfig::default()).unwrap();
        let ci = asymptotic_ci(&fit, &y, &terms, asym, 0.95).unwrap();
        let b = &ci.term_bands[0];
        for i in 0..b.len() {
            assert!(((b.upper[i] - b.estimate[i]) - (b.estimate[i] - b.lower[i])).abs() < 1e-12);
        }
        let grid = DMatrix::from_column_slice(3, 1, &[0.0, 0.5, 1.0]);
        let p = ci.predictor_band(&[grid]).unwrap();
        assert!((p.estimate[0] - fit.intercept).abs() < 1e-12);
    }
}
