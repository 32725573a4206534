//! Design matrices, penalties and identifiability constraints for linear,
//! P-spline and Markov random field terms.

mod bspline;
mod mrf;
mod penalty;
mod term;

pub use bspline::{bspline_design, linspace, SplineSpec};
pub use mrf::{mrf_design, mrf_precision, parse_adjacency, AdjacencyGraph};
pub use penalty::{difference_matrix, difference_penalty};
pub use term::{apply_centering, assemble_predictor, ExpectileModel, ModelTerm, TermBasis};
