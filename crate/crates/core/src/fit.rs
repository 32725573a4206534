//! Estimator-independent fit summaries.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::{check_level, Band};
use crate::laws::{LawsFit, SandwichIntervals};
use crate::terms::{ModelTerm, TermBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bayes,
    Laws,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bayes => "bayes",
            Method::Laws => "laws",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bayes" => Ok(Method::Bayes),
            "laws" => Ok(Method::Laws),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}` (expected bayes or laws)"))),
        }
    }
}

/// Point estimate with interval for one scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub term: String,
    pub parameter: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Monte-Carlo standard error of the estimate, for sampling-based fits.
    pub mcse: Option<f64>,
}

impl Estimate {
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub term: String,
    pub z: Vec<f64>,
    pub band: Band,
}

/// Coefficients, curves and regional effects for one asymmetry level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub tau: f64,
    pub level: f64,
    /// Intercept and linear effects.
    pub coefficients: Vec<Estimate>,
    /// Smooth effects on an evaluation grid.
    pub curves: Vec<CurveEstimate>,
    /// Region effects of spatial terms.
    pub regions: Vec<Estimate>,
    /// Error and smoothing variances (Bayesian fits) or smoothing parameters.
    pub variances: Vec<Estimate>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl FitResult {
    pub fn new(method: Method, tau: f64, level: f64) -> Self {
        Self {
            method,
            tau,
            level,
            coefficients: Vec::new(),
            curves: Vec::new(),
            regions: Vec::new(),
            variances: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }
}

fn from_band(term: &str, labels: &[String], band: &Band) -> Vec<Estimate> {
    labels
        .iter()
        .enumerate()
        .map(|(k, label)| Estimate {
            term: term.to_string(),
            parameter: label.clone(),
            estimate: band.estimate[k],
            lower: band.lower[k],
            upper: band.upper[k],
            mcse: None,
        })
        .collect()
}

/// Summary of a LAWS fit with sandwich intervals, laid out like [`crate::mcmc::posterior_summary`].
pub fn laws_fit_result(
    fit: &LawsFit,
    ci: &SandwichIntervals,
    terms: &[ModelTerm],
    tau: f64,
    grid_len: usize,
) -> Result<FitResult> {
    check_level(ci.level)?;
    let mut result = FitResult::new(Method::Laws, tau, ci.level);
    let (est, lower, upper) = ci.intercept_interval();
    result.coefficients.push(Estimate {
        term: "(Intercept)".into(),
        parameter: "(Intercept)".into(),
        estimate: est,
        lower,
        upper,
        mcse: None,
    });
    let mut lambdas = fit.lambdas.iter();
    for (j, term) in terms.iter().enumerate() {
        match term.basis() {
            TermBasis::PSpline(spec) => {
                let z = spec.grid(grid_len);
                let band = ci.term_band(j, &term.spline_design_at(&z)?)?;
                result.curves.push(CurveEstimate { term: term.name().to_string(), z, band });
            }
            basis => {
                let band = match term.transform() {
                    Some(t) => ci.term_band(j, t)?,
                    None => ci.term_band(j, &nalgebra::DMatrix::identity(term.width(), term.width()))?,
                };
                let rows = from_band(term.name(), term.raw_labels(), &band);
                if matches!(basis, TermBasis::Mrf(_)) {
                    result.regions.extend(rows);
                } else {
                    result.coefficients.extend(rows);
                }
            }
        }
        if term.is_penalized() {
            let l = *lambdas.next().expect("one smoothing parameter per penalized term");
            result.variances.push(Estimate {
                term: term.name().to_string(),
                parameter: "lambda".into(),
                estimate: l,
                lower: l,
                upper: l,
                mcse: None,
            });
        }
    }
    result.diagnostics.insert("iterations".into(), fit.iterations as f64);
    result.diagnostics.insert("converged".into(), fit.converged as u8 as f64);
    result.diagnostics.insert("objective".into(), fit.objective);
    Ok(result)
}
