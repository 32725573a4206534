use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::chain::ChainOutput;
use crate::error::{Error, Result};
use crate::fit::{CurveEstimate, Estimate, FitResult, Method};
use crate::intervals::{band_from_draws, batch_means_se, check_level, equal_tailed};
use crate::terms::{ModelTerm, TermBasis};

/// Draw-level values of `design · β_j` for model term `j`: draws × rows.
pub fn term_curve_draws(output: &ChainOutput, j: usize, design: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let draws = output
        .term_draws
        .get(j)
        .ok_or_else(|| Error::InvalidParameter(format!("no term with index {j}")))?;
    if design.ncols() != draws.ncols() {
        return Err(Error::DimensionMismatch {
            context: "columns of term design".into(),
            expected: draws.ncols(),
            actual: design.ncols(),
        });
    }
    Ok(draws * design.transpose())
}

/// Draw-level predictor `intercept + Σ_j design_j · β_j`: draws × rows.
pub fn predictor_draws(output: &ChainOutput, designs: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if designs.len() != output.term_draws.len() {
        return Err(Error::DimensionMismatch {
            context: "term designs".into(),
            expected: output.term_draws.len(),
            actual: designs.len(),
        });
    }
    let rows = designs.first().map(|d| d.nrows()).unwrap_or(1);
    let mut total = DMatrix::from_fn(output.retained(), rows, |i, _| output.intercept_draws[i]);
    for (j, d) in designs.iter().enumerate() {
        total += term_curve_draws(output, j, d)?;
    }
    Ok(total)
}

fn summarize(term: &str, parameter: &str, draws: &[f64], level: f64) -> Result<Estimate> {
    let (estimate, lower, upper) = equal_tailed(draws, level)?;
    Ok(Estimate {
        term: term.to_string(),
        parameter: parameter.to_string(),
        estimate,
        lower,
        upper,
        mcse: Some(batch_means_se(draws)),
    })
}

/// Posterior means and equal-tailed credible intervals. Spline terms are
/// summarized as curves on a `grid_len`-point grid over their domain, with
/// bands taken from draw-level fitted values.
pub fn posterior_summary(output: &ChainOutput, terms: &[ModelTerm], level: f64, grid_len: usize) -> Result<FitResult> {
    check_level(level)?;
    if output.retained() == 0 {
        return Err(Error::InvalidParameter("chain has no retained draws".into()));
    }
    if terms.len() != output.term_draws.len() {
        return Err(Error::DimensionMismatch {
            context: "terms of chain output".into(),
            expected: output.term_draws.len(),
            actual: terms.len(),
        });
    }
    let mut result = FitResult::new(Method::Bayes, output.tau, level);
    result
        .coefficients
        .push(summarize("(Intercept)", "(Intercept)", &output.intercept_draws, level)?);
    for (j, term) in terms.iter().enumerate() {
        match term.basis() {
            TermBasis::PSpline(spec) => {
                let z = spec.grid(grid_len);
                let design = term.spline_design_at(&z)?;
                let band = band_from_draws(&term_curve_draws(output, j, &design)?, level)?;
                result.curves.push(CurveEstimate { term: term.name().to_string(), z, band });
            }
            basis => {
                let raw = match term.transform() {
                    Some(t) => term_curve_draws(output, j, t)?,
                    None => output.term_draws[j].clone(),
                };
                let target = if matches!(basis, TermBasis::Mrf(_)) {
                    &mut result.regions
                } else {
                    &mut result.coefficients
                };
                for (k, label) in term.raw_labels().iter().enumerate() {
                    let col: Vec<f64> = raw.column(k).iter().cloned().collect();
                    target.push(summarize(term.name(), label, &col, level)?);
                }
            }
        }
        if term.is_penalized() {
            result
                .variances
                .push(summarize(term.name(), "delta2", &output.delta2_draws[j], level)?);
        }
    }
    result.variances.insert(0, summarize("(Error)", "sigma2", &output.sigma2_draws, level)?);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("acceptance.(Intercept)".to_string(), output.acceptance[0]);
    for (name, rate) in output.term_names.iter().zip(&output.acceptance[1..]) {
        diagnostics.insert(format!("acceptance.{name}"), *rate);
    }
    diagnostics.insert("proposal_failures".into(), output.proposal_failures as f64);
    diagnostics.insert("retained_draws".into(), output.retained() as f64);
    diagnostics.insert("runtime_secs".into(), output.runtime_secs);
    result.diagnostics = diagnostics;
    Ok(result)
}
