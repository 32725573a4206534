use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::distributions::{true_expectile, Asymmetry, UnivariateLaw};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    M1,
    M2,
    M3,
}

impl ModelKind {
    /// Signal without error.
    pub fn signal(self, x1: f64, z: f64) -> f64 {
        match self {
            ModelKind::M1 => 2.0 * x1 + 5.0 * (-0.5 * z * z).exp(),
            ModelKind::M2 => 2.0 * x1 + 5.0 * (2.0 * z).sin(),
            ModelKind::M3 => (2.0 * (4.0 * z - 2.0)).sin() + 2.0 * (-256.0 * (z - 0.5) * (z - 0.5)).exp(),
        }
    }

    /// Support of the continuous covariate.
    pub fn domain(self) -> (f64, f64) {
        match self {
            ModelKind::M1 | ModelKind::M2 => (0.0, 3.0),
            ModelKind::M3 => (0.0, 1.0),
        }
    }

    pub fn has_binary_covariate(self) -> bool {
        !matches!(self, ModelKind::M3)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::M1 => "m1",
            ModelKind::M2 => "m2",
            ModelKind::M3 => "m3",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(ModelKind::M1),
            "m2" => Ok(ModelKind::M2),
            "m3" => Ok(ModelKind::M3),
            other => Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

/// Error distributions as `scale(z) · ε` with a fixed base law for `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorLaw {
    /// `N(0, 0.5 z²)`.
    NormalHeteroscedastic,
    /// Exponential with mean `z`.
    ExponentialHeteroscedastic,
    /// Student t with 2 degrees of freedom.
    T2,
    /// `N(0, (0.2 + |z − 0.5|)²)`.
    M3Normal,
    /// Exponential with mean `0.2 + |z − 0.5|`.
    M3Exponential,
}

impl ErrorLaw {
    pub fn scale(self, z: f64) -> f64 {
        match self {
            ErrorLaw::NormalHeteroscedastic => 0.5f64.sqrt() * z,
            ErrorLaw::ExponentialHeteroscedastic => z,
            ErrorLaw::T2 => 1.0,
            ErrorLaw::M3Normal | ErrorLaw::M3Exponential => 0.2 + (z - 0.5).abs(),
        }
    }

    pub fn base_law(self) -> Result<UnivariateLaw> {
        match self {
            ErrorLaw::NormalHeteroscedastic | ErrorLaw::M3Normal => UnivariateLaw::normal(0.0, 1.0),
            ErrorLaw::ExponentialHeteroscedastic | ErrorLaw::M3Exponential => UnivariateLaw::exponential(1.0),
            ErrorLaw::T2 => UnivariateLaw::student_t(2.0),
        }
    }

    fn draw_base<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ErrorLaw::NormalHeteroscedastic | ErrorLaw::M3Normal => rng.sample(StandardNormal),
            ErrorLaw::ExponentialHeteroscedastic | ErrorLaw::M3Exponential => rng.sample(Exp1),
            ErrorLaw::T2 => rng.sample(StudentT::new(2.0).expect("valid degrees of freedom")),
        }
    }
}

impl fmt::Display for ErrorLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorLaw::NormalHeteroscedastic => "normal-heteroscedastic",
            ErrorLaw::ExponentialHeteroscedastic => "exponential-heteroscedastic",
            ErrorLaw::T2 => "t2",
            ErrorLaw::M3Normal => "m3-normal",
            ErrorLaw::M3Exponential => "m3-exponential",
        })
    }
}

impl FromStr for ErrorLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal-heteroscedastic" | "a" => Ok(ErrorLaw::NormalHeteroscedastic),
            "exponential-heteroscedastic" | "b" => Ok(ErrorLaw::ExponentialHeteroscedastic),
            "t2" | "c" => Ok(ErrorLaw::T2),
            "m3-normal" => Ok(ErrorLaw::M3Normal),
            "m3-exponential" => Ok(ErrorLaw::M3Exponential),
            other => Err(Error::InvalidParameter(format!("unknown error law `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub model: ModelKind,
    pub error: ErrorLaw,
    pub n: usize,
    pub replications: usize,
    pub tau_list: Vec<Asymmetry>,
    pub base_seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter("sample size must be at least 2".into()));
        }
        if self.tau_list.is_empty() {
            return Err(Error::InvalidParameter("tau list is empty".into()));
        }
        if self.tau_list.windows(2).any(|w| w[0].tau() >= w[1].tau()) {
            return Err(Error::InvalidParameter("tau list must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn replication_seed(&self, replication: usize) -> u64 {
        derive_seed(self.base_seed, &[replication as u64])
    }
}

/// Expectiles of the base error law for each level of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseExpectiles {
    pub error: ErrorLaw,
    pub values: Vec<f64>,
}

impl BaseExpectiles {
    pub fn new(error: ErrorLaw, tau_list: &[Asymmetry]) -> Result<Self> {
        let law = error.base_law()?;
        let values = tau_list.iter().map(|&a| true_expectile(&law, a)).collect::<Result<_>>()?;
        Ok(Self { error, values })
    }

    /// True τ-expectile of `signal + scale(z)·ε`, using `e_τ(cε) = c·e_τ(ε)` for `c ≥ 0`.
    pub fn truth(&self, model: ModelKind, tau_index: usize, x1: f64, z: f64) -> f64 {
        model.signal(x1, z) + self.error.scale(z) * self.values[tau_index]
    }
}

/// One simulated replication with its true expectile curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub y: Vec<f64>,
    /// Binary covariate (models with a linear effect only).
    pub x1: Option<Vec<f64>>,
    pub z: Vec<f64>,
    pub signal: Vec<f64>,
    /// True expectile at every observation, one vector per level.
    pub truth: Vec<Vec<f64>>,
}

pub(crate) fn generate_with(spec: &ScenarioSpec, replication: usize, base: &BaseExpectiles) -> Dataset {
    let mut rng = stream(spec.replication_seed(replication));
    let (lo, hi) = spec.model.domain();
    let mut x1 = spec.model.has_binary_covariate().then(|| Vec::with_capacity(spec.n));
    let mut z = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    let mut signal = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let b = match x1.as_mut() {
            Some(v) => {
                let b = if rng.random::<bool>() { 1.0 } else { 0.0 };
                v.push(b);
                b
            }
            None => 0.0,
        };
        let zi = lo + (hi - lo) * rng.random::<f64>();
        let eps = spec.error.draw_base(&mut rng);
        let s = spec.model.signal(b, zi);
        signal.push(s);
        y.push(s + spec.error.scale(zi) * eps);
        z.push(zi);
    }
    let truth = (0..spec.tau_list.len())
        .map(|t| {
            (0..spec.n)
                .map(|i| base.truth(spec.model, t, x1.as_ref().map_or(0.0, |v| v[i]), z[i]))
                .collect()
        })
        .collect();
    Dataset { y, x1, z, signal, truth }
}

/// Simulate replication `replication` of a scenario.
pub fn generate_scenario(spec: &ScenarioSpec, replication: usize) -> Result<Dataset> {
    spec.validate()?;
    let base = BaseExpectiles::new(spec.error, &spec.tau_list)?;
    Ok(generate_with(spec, replication, &base))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(model: ModelKind, error: ErrorLaw, taus: &[f64]) -> ScenarioSpec {
        ScenarioSpec {
            model,
            error,
            n: 50,
            replications: 1,
            tau_list: taus.iter().map(|&t| Asymmetry::new(t).unwrap()).collect(),
            base_seed: 11,
        }
    }

    #[test]
    fn signals_at_reference_points() {
        assert!((ModelKind::M1.signal(1.0, 0.0) - 7.0).abs() < 1e-15);
        assert!((ModelKind::M3.signal(0.0, 0.5) - 2.0).abs() < 1e-15);
        assert!((ModelKind::M2.signal(0.0, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn exponential_shift_is_mean_at_half() {
        let taus = [Asymmetry::new(0.5).unwrap()];
        let base = BaseExpectiles::new(ErrorLaw::ExponentialHeteroscedastic, &taus).unwrap();
        let shift = base.truth(ModelKind::M1, 0, 0.0, 2.0) - ModelKind::M1.signal(0.0, 2.0);
        assert!((shift - 2.0).abs() < 1e-8);
    }

    #[test]
    fn t2_median_level_has_no_shift() {
        let taus = [Asymmetry::new(0.5).unwrap()];
        let base = BaseExpectiles::new(ErrorLaw::T2, &taus).unwrap();
        assert!(base.values[0].abs() < 1e-12);
    }

    #[test]
    fn replications_are_reproducible_and_distinct() {
        let s = spec(ModelKind::M2, ErrorLaw::T2, &[0.2, 0.8]);
        let a = generate_scenario(&s, 0).unwrap();
        assert_eq!(a, generate_scenario(&s, 0).unwrap());
        assert_ne!(a.y, generate_scenario(&s, 1).unwrap().y);
        assert_eq!(a.truth.len(), 2);
        assert!(a.z.iter().all(|z| (0.0..=3.0).contains(z)));
    }

    #[test]
    fn rejects_unsorted_levels() {
        let s = spec(ModelKind::M1, ErrorLaw::T2, &[0.8, 0.2]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn zero_covariate_gives_zero_error() {
        assert_eq!(ErrorLaw::NormalHeteroscedastic.scale(0.0), 0.0);
        assert_eq!(ErrorLaw::ExponentialHeteroscedastic.scale(0.0), 0.0);
    }
}
