use nalgebra::DVector;
use rand::Rng;

use super::config::InverseGammaPrior;
use super::state::ChainState;
use crate::distributions::{inverse_gamma_sample, weights, Asymmetry, CanonicalGaussian};
use crate::error::{Error, Result};
use crate::terms::ModelTerm;

/// Draw `σ²` from `IG(a₀ + n/2, b₀ + ½ Σ w_τ(y_i, η_i)(y_i − η_i)²)`.
pub fn gibbs_sigma2<R: Rng + ?Sized>(
    state: &ChainState,
    y: &[f64],
    asym: Asymmetry,
    prior: InverseGammaPrior,
    rng: &mut R,
) -> Result<f64> {
    let _ = asym;
    let rss: f64 = y
        .iter()
        .zip(&state.eta)
        .zip(&state.weights)
        .map(|((yi, ei), wi)| wi * (yi - ei) * (yi - ei))
        .sum();
    inverse_gamma_sample(prior.shape + 0.5 * y.len() as f64, prior.scale + 0.5 * rss, rng)
}

/// Draw `δ_j²` from `IG(a_j + rank(K_j)/2, b_j + ½ β_jᵀ K_j β_j)`.
pub fn gibbs_delta2<R: Rng + ?Sized>(
    coefficients: &DVector<f64>,
    term: &ModelTerm,
    prior: InverseGammaPrior,
    rng: &mut R,
) -> Result<f64> {
    let quad = term.penalty_quadratic(coefficients).max(0.0);
    inverse_gamma_sample(prior.shape + 0.5 * term.penalty_rank() as f64, prior.scale + 0.5 * quad, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOutcome {
    pub accepted: bool,
    /// `None` when the proposal could not be formed.
    pub log_ratio: Option<f64>,
    pub proposal_failed: bool,
    /// A diagonal ridge was needed to factorize the proposal precision.
    pub ridged: bool,
}

/// Gaussian IWLS proposal `N(P⁻¹Bᵀ W r, σ² P⁻¹)` with `P = BᵀWB + λK`.
fn iwls_proposal(term: &ModelTerm, w: &[f64], partial: &[f64], lambda: f64) -> Result<(CanonicalGaussian, bool)> {
    let mut precision = term.weighted_gram(w);
    if lambda > 0.0 {
        precision += term.penalty() * lambda;
    }
    let linear = term.weighted_cross(w, partial);
    match CanonicalGaussian::new(precision.clone(), &linear) {
        Ok(g) => Ok((g, false)),
        Err(_) => {
            let ridge = 1e-10 * precision.diagonal().amax().max(1.0);
            for i in 0..precision.nrows() {
                precision[(i, i)] += ridge;
            }
            log::debug!("proposal precision of `{}` needed a {ridge:e} ridge", term.name());
            CanonicalGaussian::new(precision, &linear).map(|g| (g, true))
        }
    }
}

/// Log of the block's full conditional up to a constant.
fn log_target(y: &[f64], eta: &[f64], asym: Asymmetry, sigma2: f64, term: &ModelTerm, coef: &DVector<f64>, delta2: f64) -> f64 {
    let loss = crate::distributions::asymmetric_loss(y, eta, asym);
    let prior = if term.is_penalized() {
        term.penalty_quadratic(coef) / (2.0 * delta2)
    } else {
        0.0
    };
    -loss / (2.0 * sigma2) - prior
}

/// One Metropolis-Hastings step for block `j` with a state-dependent IWLS
/// proposal evaluated in both directions. `blocks[0]` is the intercept.
pub fn mh_update_beta<R: Rng + ?Sized>(
    state: &mut ChainState,
    blocks: &[ModelTerm],
    j: usize,
    y: &[f64],
    asym: Asymmetry,
    rng: &mut R,
) -> Result<MhOutcome> {
    let term = blocks
        .get(j)
        .ok_or_else(|| Error::InvalidParameter(format!("no block with index {j}")))?;
    let lambda = state.lambda(term, j);
    if !lambda.is_finite() {
        return Err(Error::Numerical(format!("smoothing parameter of `{}` is not finite", term.name())));
    }
    let sigma = state.sigma2.sqrt();
    let current = state.coefficients[j].clone();
    let own = term.apply(&current);
    let rest: Vec<f64> = state.eta.iter().zip(own.iter()).map(|(e, o)| e - o).collect();
    let partial: Vec<f64> = y.iter().zip(&rest).map(|(a, b)| a - b).collect();

    let failed = MhOutcome { accepted: false, log_ratio: None, proposal_failed: true, ridged: false };
    let (forward, ridged_fwd) = match iwls_proposal(term, &state.weights, &partial, lambda) {
        Ok(p) => p,
        Err(_) => return Ok(failed),
    };
    let proposal = forward.draw(sigma, rng);
    let fresh = term.apply(&proposal);
    let eta_new: Vec<f64> = rest.iter().zip(fresh.iter()).map(|(r, f)| r + f).collect();
    let w_new = weights(y, &eta_new, asym);
    let (reverse, ridged_rev) = match iwls_proposal(term, &w_new, &partial, lambda) {
        Ok(p) => p,
        Err(_) => return Ok(MhOutcome { ridged: ridged_fwd, ..failed }),
    };
    let delta2 = state.delta2[j];
    let target_new = log_target(y, &eta_new, asym, state.sigma2, term, &proposal, delta2);
    let target_old = log_target(y, &state.eta, asym, state.sigma2, term, &current, delta2);
    let log_ratio = target_new - target_old + reverse.log_density(&current, sigma) - forward.log_density(&proposal, sigma);
    let accepted = if log_ratio >= 0.0 {
        true
    } else {
        rng.random::<f64>().ln() < log_ratio
    };
    if accepted {
        state.coefficients[j] = proposal;
        state.eta = eta_new;
        state.weights = w_new;
    }
    Ok(MhOutcome {
        accepted,
        log_ratio: Some(log_ratio),
        proposal_failed: false,
        ridged: ridged_fwd || ridged_rev,
    })
}
