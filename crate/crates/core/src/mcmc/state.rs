use nalgebra::DVector;
use serde::Serialize;

use crate::distributions::{weights, Asymmetry};
use crate::error::{Error, Result};
use crate::terms::ModelTerm;

/// Current values of all blocks. Block 0 is the intercept; block `j + 1`
/// belongs to model term `j`.
#[derive(Debug, Clone, Serialize)]
pub struct ChainState {
    pub coefficients: Vec<DVector<f64>>,
    pub sigma2: f64,
    /// Smoothing variance per block (held at 1 for unpenalized blocks).
    pub delta2: Vec<f64>,
    pub eta: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ChainState {
    pub fn new(
        blocks: &[ModelTerm],
        coefficients: Vec<DVector<f64>>,
        sigma2: f64,
        y: &[f64],
        asym: Asymmetry,
    ) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
        }
        let mut state = Self {
            delta2: vec![1.0; blocks.len()],
            coefficients,
            sigma2,
            eta: Vec::new(),
            weights: Vec::new(),
        };
        state.refresh(blocks, y, asym)?;
        Ok(state)
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[0][0]
    }

    /// `λ_j = σ² / δ_j²`, or 0 for unpenalized blocks.
    pub fn lambda(&self, block: &ModelTerm, j: usize) -> f64 {
        if block.is_penalized() {
            self.sigma2 / self.delta2[j]
        } else {
            0.0
        }
    }

    fn predictor(&self, blocks: &[ModelTerm], n: usize) -> Result<Vec<f64>> {
        if blocks.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                context: "state blocks".into(),
                expected: blocks.len(),
                actual: self.coefficients.len(),
            });
        }
        let mut eta = DVector::zeros(n);
        for (b, c) in blocks.iter().zip(&self.coefficients) {
            eta += b.apply(c);
        }
        Ok(eta.iter().cloned().collect())
    }

    /// Recompute `η` and the weights from the coefficients.
    pub fn refresh(&mut self, blocks: &[ModelTerm], y: &[f64], asym: Asymmetry) -> Result<()> {
        self.eta = self.predictor(blocks, y.len())?;
        self.weights = weights(y, &self.eta, asym);
        Ok(())
    }

    /// Largest absolute gap between the cached and a freshly computed predictor.
    pub fn predictor_drift(&self, blocks: &[ModelTerm], n: usize) -> Result<f64> {
        let fresh = self.predictor(blocks, n)?;
        Ok(fresh.iter().zip(&self.eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}
