//! Bayesian and frequentist geoadditive expectile regression.
//!
//! * [`distributions`]: asymmetric normal likelihood, weights, samplers and a
//!   true-expectile oracle.
//! * [`terms`]: linear, P-spline and Markov random field model terms.
//! * [`laws`]: least asymmetrically weighted squares by penalized backfitting.
//! * [`mcmc`]: Metropolis-Hastings within Gibbs with IWLS proposals.
//! * [`sim`]: simulation scenarios and evaluation metrics.
//! * [`cli`]: command-line front end.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod fit;
pub mod intervals;
pub mod laws;
pub mod linalg;
pub mod mcmc;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod sim;
pub mod terms;

pub use distributions::Asymmetry;
pub use error::{Error, Result};
