//! Least asymmetrically weighted squares: penalized IWLS backfitting,
//! cross-validated smoothing parameters and sandwich confidence bands.

mod backfit;
mod ci;
mod cv;

pub use backfit::{default_lambda_grid, iwls_backfit, penalized_objective, LawsConfig, LawsFit};
pub use ci::{asymptotic_ci, normal_quantile, SandwichIntervals};
pub use cv::{select_lambda_cv, CvCandidate, CvSelection};
