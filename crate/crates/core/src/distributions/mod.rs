//! Asymmetric normal distribution, asymmetric weights, auxiliary samplers,
//! and a quadrature-based oracle for true expectiles.

mod and;
mod asymmetry;
mod expectile;
mod law;
mod samplers;

pub use and::{and_left_mass, and_log_density, and_log_normalizer, and_moments, and_sample, AndParams};
pub use asymmetry::{asymmetric_loss, asymmetric_weight, sample_expectile, weights, Asymmetry};
pub use expectile::{expectile_residual, partial_moments, true_expectile, EXPECTILE_RESIDUAL_TOL};
pub use law::{law_from_parts, parse_law, UnivariateLaw};
pub use samplers::{gaussian_draw_from_precision, inverse_gamma_sample, CanonicalGaussian};
