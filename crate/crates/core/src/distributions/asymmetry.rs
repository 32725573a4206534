use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymmetry level τ of an expectile, restricted to the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Asymmetry(f64);

impl Asymmetry {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Self(tau))
        } else {
            Err(Error::InvalidParameter(format!(
                "asymmetry must lie in (0, 1), got {tau}"
            )))
        }
    }

    pub fn tau(self) -> f64 {
        self.0
    }

    pub fn is_symmetric(self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for Asymmetry {
    type Error = Error;
    fn try_from(tau: f64) -> Result<Self> {
        Self::new(tau)
    }
}

impl From<Asymmetry> for f64 {
    fn from(a: Asymmetry) -> f64 {
        a.0
    }
}

/// `1 - τ` on or below the predictor, `τ` strictly above it.
#[inline]
pub fn asymmetric_weight(y: f64, eta: f64, asym: Asymmetry) -> f64 {
    if y <= eta {
        1.0 - asym.0
    } else {
        asym.0
    }
}

/// Asymmetrically weighted squared residuals `Σ w_τ(y_i, η_i)(y_i − η_i)²`.
pub fn asymmetric_loss(y: &[f64], eta: &[f64], asym: Asymmetry) -> f64 {
    y.iter()
        .zip(eta)
        .map(|(&yi, &ei)| asymmetric_weight(yi, ei, asym) * (yi - ei) * (yi - ei))
        .sum()
}

pub fn weights(y: &[f64], eta: &[f64], asym: Asymmetry) -> Vec<f64> {
    y.iter()
        .zip(eta)
        .map(|(&yi, &ei)| asymmetric_weight(yi, ei, asym))
        .collect()
}

/// Sample τ-expectile of `y`: the minimizer of the empirical asymmetric loss,
/// computed exactly by scanning the sorted sample for the piece whose weighted
/// mean is self-consistent.
pub fn sample_expectile(y: &[f64], asym: Asymmetry) -> f64 {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let tau = asym.0;
    let total: f64 = sorted.iter().sum();
    let mut below_sum = 0.0;
    // Candidate with k observations at or below e: e = ((1-τ)S_lo + τ S_hi) / ((1-τ)k + τ(n-k))
    for k in 0..=n {
        if k > 0 {
            below_sum += sorted[k - 1];
        }
        let above_sum = total - below_sum;
        let denom = (1.0 - tau) * k as f64 + tau * (n - k) as f64;
        let e = ((1.0 - tau) * below_sum + tau * above_sum) / denom;
        let lo_ok = k == 0 || sorted[k - 1] <= e;
        let hi_ok = k == n || sorted[k] > e;
        if lo_ok && hi_ok {
            return e;
        }
    }
    // Rounding can make every piece miss by an ulp; fall back to the nearest consistent piece.
    crate::roots::golden_section(
        |e| {
            sorted
                .iter()
                .map(|&v| asymmetric_weight(v, e, asym) * (v - e) * (v - e))
                .sum()
        },
        sorted[0],
        sorted[n - 1],
        1e-12 * (1.0 + sorted[n - 1].abs()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(Asymmetry::new(0.0).is_err());
        assert!(Asymmetry::new(1.0).is_err());
        assert!(Asymmetry::new(-0.1).is_err());
        assert!(Asymmetry::new(f64::NAN).is_err());
        assert!(Asymmetry::new(0.3).is_ok());
    }

    #[test]
    fn weight_branches() {
        let a = Asymmetry::new(0.2).unwrap();
        assert_eq!(asymmetric_weight(1.0, 0.0, a), 0.2);
        assert_eq!(asymmetric_weight(0.0, 0.0, a), 0.8);
        assert_eq!(asymmetric_weight(-1.0, 0.0, a), 0.8);
        let h = Asymmetry::new(0.5).unwrap();
        for (y, e) in [(3.0, -1.0), (-2.0, 5.0), (0.0, 0.0)] {
            assert_eq!(asymmetric_weight(y, e, h), 0.5);
        }
    }

    #[test]
    fn serde_validates() {
        let ok: Asymmetry = serde_json::from_str("0.9").unwrap();
        assert_eq!(ok.tau(), 0.9);
        assert!(serde_json::from_str::<Asymmetry>("1.5").is_err());
    }

    #[test]
    fn sample_expectile_median_case_is_mean() {
        let y = [1.0, 2.0, 4.0, 9.0];
        let e = sample_expectile(&y, Asymmetry::new(0.5).unwrap());
        assert!((e - 4.0).abs() < 1e-14);
    }

    #[test]
    fn sample_expectile_minimizes_loss() {
        let y = [0.3, -1.2, 2.5, 0.9, 4.1, -0.4];
        let a = Asymmetry::new(0.8).unwrap();
        let e = sample_expectile(&y, a);
        let loss = |c: f64| asymmetric_loss(&y, &vec![c; y.len()], a);
        assert!(loss(e) <= loss(e + 1e-6));
        assert!(loss(e) <= loss(e - 1e-6));
    }
}
