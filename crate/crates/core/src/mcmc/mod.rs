//! Metropolis-Hastings within Gibbs sampling for Bayesian expectile
//! regression with IWLS proposals.

mod chain;
mod config;
mod state;
mod summary;
mod updates;

pub use chain::{run_chain, ChainOutput};
pub use config::{ChainConfig, InitPolicy, InverseGammaPrior, UpdateOrder};
pub use state::ChainState;
pub use summary::{posterior_summary, predictor_draws, term_curve_draws};
pub use updates::{gibbs_delta2, gibbs_sigma2, mh_update_beta, MhOutcome};
