use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `IG(shape, scale)` with density proportional to `x^{-shape-1} exp(-scale/x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl Default for InverseGammaPrior {
    fn default() -> Self {
        Self { shape: 0.001, scale: 0.001 }
    }
}

impl InverseGammaPrior {
    pub fn validate(&self) -> Result<()> {
        if self.shape > 0.0 && self.scale > 0.0 && self.shape.is_finite() && self.scale.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "inverse gamma hyperparameters must be positive, got ({}, {})",
                self.shape, self.scale
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitPolicy {
    /// Near-unpenalized least-squares fit at τ = 0.5.
    LeastSquares,
    /// All coefficients zero, intercept at the response mean.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateOrder {
    Declaration,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub sigma2_prior: InverseGammaPrior,
    /// One prior per model term; empty means the default for every term.
    pub delta2_priors: Vec<InverseGammaPrior>,
    pub seed: u64,
    pub init: InitPolicy,
    pub order: UpdateOrder,
    /// Keep the log acceptance ratio of every MH step.
    pub record_log_ratios: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 35_000,
            burn_in: 5_000,
            thinning: 30,
            sigma2_prior: InverseGammaPrior::default(),
            delta2_priors: Vec::new(),
            seed: 1,
            init: InitPolicy::LeastSquares,
            order: UpdateOrder::Declaration,
            record_log_ratios: false,
        }
    }
}

impl ChainConfig {
    pub fn retained(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thinning.max(1)
    }

    pub fn is_retained(&self, iteration: usize) -> bool {
        iteration > self.burn_in && (iteration - self.burn_in) % self.thinning == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be at least 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        self.sigma2_prior.validate()?;
        for p in &self.delta2_priors {
            p.validate()?;
        }
        if self.retained() < 100 {
            log::warn!("only {} draws will be retained; at least 100 are recommended", self.retained());
        }
        Ok(())
    }

    pub fn delta2_prior(&self, term: usize) -> InverseGammaPrior {
        match self.delta2_priors.len() {
            0 => InverseGammaPrior::default(),
            1 => self.delta2_priors[0],
            _ => self.delta2_priors.get(term).copied().unwrap_or_default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_keeps_thousand_draws() {
        let c = ChainConfig::default();
        assert_eq!(c.retained(), 1000);
        assert_eq!((1..=c.iterations).filter(|&t| c.is_retained(t)).count(), 1000);
    }

    #[test]
    fn invalid_schedules() {
        assert!(ChainConfig { burn_in: 10, iterations: 10, ..Default::default() }.validate().is_err());
        assert!(ChainConfig { thinning: 0, ..Default::default() }.validate().is_err());
        let bad_prior = InverseGammaPrior { shape: -1.0, scale: 1.0 };
        assert!(ChainConfig { sigma2_prior: bad_prior, ..Default::default() }.validate().is_err());
    }
}
