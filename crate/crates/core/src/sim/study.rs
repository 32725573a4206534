use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{coverage, interval_widths, mean_widths, rmse};
use super::scenario::{generate_with, BaseExpectiles, Dataset, ScenarioSpec};
use crate::distributions::Asymmetry;
use crate::error::{Error, Result};
use crate::fit::Method;
use crate::intervals::{band_from_draws, check_level, Band};
use crate::laws::{asymptotic_ci, iwls_backfit, select_lambda_cv, LawsConfig};
use crate::mcmc::{predictor_draws, run_chain, ChainConfig};
use crate::rng::derive_seed;
use crate::terms::{linspace, ModelTerm, SplineSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    /// RMSE of the fitted predictor at the observed covariates.
    Point,
    /// Pointwise interval bands on a regular covariate grid.
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorSettings {
    pub chain: ChainConfig,
    pub laws: LawsConfig,
    pub degree: usize,
    pub inner_knots: usize,
    pub difference_order: usize,
    pub level: f64,
    pub grid_len: usize,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            chain: ChainConfig::default(),
            laws: LawsConfig::default(),
            degree: 3,
            inner_knots: 20,
            difference_order: 2,
            level: 0.95,
            grid_len: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRecord {
    pub tau: f64,
    pub method: Method,
    pub replication: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub tau: f64,
    pub method: Method,
    pub grid_z: f64,
    pub coverage: f64,
    pub min_width: f64,
    pub max_width: f64,
    pub mean_width: f64,
    /// Replications that produced a band at this level.
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub replication: usize,
    pub tau: f64,
    pub method: Method,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub spec: ScenarioSpec,
    pub kind: StudyKind,
    pub methods: Vec<Method>,
    pub rmse: Vec<RmseRecord>,
    pub coverage: Vec<CoverageRecord>,
    pub failures: Vec<FailureRecord>,
    pub runtime_secs: f64,
}

impl StudyReport {
    pub fn coverage_for(&self, method: Method, tau: f64) -> Vec<&CoverageRecord> {
        self.coverage.iter().filter(|c| c.method == method && c.tau == tau).collect()
    }

    pub fn rmse_for(&self, method: Method, tau: f64) -> Vec<f64> {
        self.rmse.iter().filter(|r| r.method == method && r.tau == tau).map(|r| r.rmse).collect()
    }
}

fn build_terms(spec: &ScenarioSpec, data: &Dataset, settings: &EstimatorSettings) -> Result<(Vec<ModelTerm>, SplineSpec)> {
    let spline = SplineSpec::new(settings.degree, settings.inner_knots, settings.difference_order, spec.model.domain())?;
    let mut terms = Vec::new();
    if let Some(x1) = &data.x1 {
        terms.push(ModelTerm::linear("x1", DMatrix::from_column_slice(x1.len(), 1, x1), vec!["x1".into()])?);
    }
    terms.push(ModelTerm::pspline("z", &data.z, spline.clone())?.centered());
    Ok((terms, spline))
}

/// Per-term designs on the evaluation grid with the binary covariate at 0.
fn grid_designs(terms: &[ModelTerm], grid: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    terms
        .iter()
        .map(|t| match t.basis() {
            crate::terms::TermBasis::PSpline(_) => t.spline_design_at(grid),
            _ => Ok(DMatrix::zeros(grid.len(), t.width())),
        })
        .collect()
}

enum Outcome {
    Rmse(f64),
    Band(Band),
}

struct Cell {
    replication: usize,
    tau_index: usize,
    method: Method,
    outcome: std::result::Result<Outcome, String>,
}

#[allow(clippy::too_many_arguments)]
fn fit_one(
    spec: &ScenarioSpec,
    kind: StudyKind,
    settings: &EstimatorSettings,
    data: &Dataset,
    terms: &[ModelTerm],
    designs: &[DMatrix<f64>],
    replication: usize,
    tau_index: usize,
    method: Method,
) -> Result<Outcome> {
    let asym: Asymmetry = spec.tau_list[tau_index];
    let path = [replication as u64, tau_index as u64, method as u64];
    match method {
        Method::Laws => {
            let laws = LawsConfig { cv_seed: derive_seed(spec.base_seed ^ 0x5eed, &path), ..settings.laws.clone() };
            let cv = select_lambda_cv(&data.y, terms, asym, &laws)?;
            let fit = iwls_backfit(&data.y, terms, asym, &cv.lambdas, &laws)?;
            match kind {
                StudyKind::Point => Ok(Outcome::Rmse(rmse(&data.truth[tau_index], &fit.fitted)?)),
                StudyKind::Interval => {
                    let ci = asymptotic_ci(&fit, &data.y, terms, asym, settings.level)?;
                    Ok(Outcome::Band(ci.predictor_band(designs)?))
                }
            }
        }
        Method::Bayes => {
            let chain = ChainConfig { seed: derive_seed(spec.base_seed, &path), ..settings.chain.clone() };
            let out = run_chain(&data.y, terms, asym, &chain)?;
            match kind {
                StudyKind::Point => {
                    let m = out.retained() as f64;
                    let mut eta = vec![out.intercept_draws.iter().sum::<f64>() / m; data.y.len()];
                    for (t, draws) in terms.iter().zip(&out.term_draws) {
                        let mean = draws.row_mean().transpose();
                        for (e, v) in eta.iter_mut().zip(t.apply(&mean).iter()) {
                            *e += v;
                        }
                    }
                    Ok(Outcome::Rmse(rmse(&data.truth[tau_index], &eta)?))
                }
                StudyKind::Interval => {
                    Ok(Outcome::Band(band_from_draws(&predictor_draws(&out, designs)?, settings.level)?))
                }
            }
        }
    }
}

fn replicate(
    spec: &ScenarioSpec,
    kind: StudyKind,
    methods: &[Method],
    settings: &EstimatorSettings,
    base: &BaseExpectiles,
    grid: &[f64],
    replication: usize,
) -> Vec<Cell> {
    let data = generate_with(spec, replication, base);
    let prepared = build_terms(spec, &data, settings).and_then(|(terms, _)| {
        let designs = grid_designs(&terms, grid)?;
        Ok((terms, designs))
    });
    let mut cells = Vec::new();
    for tau_index in 0..spec.tau_list.len() {
        for &method in methods {
            let outcome = match &prepared {
                Ok((terms, designs)) => {
                    fit_one(spec, kind, settings, &data, terms, designs, replication, tau_index, method)
                        .map_err(|e| e.to_string())
                }
                Err(e) => Err(e.to_string()),
            };
            cells.push(Cell { replication, tau_index, method, outcome });
        }
    }
    cells
}

/// Run every replication of a scenario for the requested methods and
/// aggregate RMSE (point study) or coverage and widths (interval study).
/// Failed fits are recorded and skipped.
pub fn run_study(
    spec: &ScenarioSpec,
    methods: &[Method],
    kind: StudyKind,
    settings: &EstimatorSettings,
) -> Result<StudyReport> {
    spec.validate()?;
    check_level(settings.level)?;
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no estimation method requested".into()));
    }
    if kind == StudyKind::Interval && settings.grid_len < 2 {
        return Err(Error::InvalidParameter("evaluation grid needs at least 2 points".into()));
    }
    settings.chain.validate()?;
    settings.laws.validate()?;
    let started = Instant::now();
    let base = BaseExpectiles::new(spec.error, &spec.tau_list)?;
    let (lo, hi) = spec.model.domain();
    let grid = linspace(lo, hi, settings.grid_len);
    let cells: Vec<Cell> = (0..spec.replications)
        .into_par_iter()
        .flat_map_iter(|r| replicate(spec, kind, methods, settings, &base, &grid, r))
        .collect();

    let mut report = StudyReport {
        spec: spec.clone(),
        kind,
        methods: methods.to_vec(),
        rmse: Vec::new(),
        coverage: Vec::new(),
        failures: Vec::new(),
        runtime_secs: 0.0,
    };
    let mut bands: Vec<Vec<Vec<Band>>> = vec![vec![Vec::new(); methods.len()]; spec.tau_list.len()];
    for cell in cells {
        let tau = spec.tau_list[cell.tau_index].tau();
        match cell.outcome {
            Ok(Outcome::Rmse(v)) => report.rmse.push(RmseRecord {
                tau,
                method: cell.method,
                replication: cell.replication,
                rmse: v,
            }),
            Ok(Outcome::Band(b)) => {
                let m = methods.iter().position(|&m| m == cell.method).expect("method was requested");
                bands[cell.tau_index][m].push(b);
            }
            Err(message) => report.failures.push(FailureRecord {
                replication: cell.replication,
                tau,
                method: cell.method,
                message,
            }),
        }
    }
    if kind == StudyKind::Interval {
        for (t, per_method) in bands.iter().enumerate() {
            let truth: Vec<f64> = grid.iter().map(|&z| base.truth(spec.model, t, 0.0, z)).collect();
            for (&method, reps) in methods.iter().zip(per_method) {
                if reps.is_empty() {
                    continue;
                }
                let cov = coverage(reps, &truth)?;
                let (min, max) = interval_widths(reps)?;
                let mean = mean_widths(reps)?;
                for i in 0..grid.len() {
                    report.coverage.push(CoverageRecord {
                        tau: spec.tau_list[t].tau(),
                        method,
                        grid_z: grid[i],
                        coverage: cov[i],
                        min_width: min[i],
                        max_width: max[i],
                        mean_width: mean[i],
                        replications: reps.len(),
                    });
                }
            }
        }
    }
    if !report.failures.is_empty() {
        log::warn!("{} fits failed during the study", report.failures.len());
    }
    report.runtime_secs = started.elapsed().as_secs_f64();
    Ok(report)
}
