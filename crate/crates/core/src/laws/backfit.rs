use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{weights, Asymmetry};
use crate::error::{Error, Result};
use crate::terms::{assemble_predictor, ModelTerm};

/// Ten log-spaced smoothing parameters over `[1e-4, 1e4]`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 9.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LawsConfig {
    pub max_backfit_iterations: usize,
    /// Relative L2 change of the predictor that counts as converged.
    pub convergence_tolerance: f64,
    /// One grid per penalized term; an empty list uses [`default_lambda_grid`] for every term.
    pub lambda_grid: Vec<Vec<f64>>,
    pub cv_folds: usize,
    pub cv_seed: u64,
    /// Added to the diagonal of every block system.
    pub ridge: f64,
}

impl Default for LawsConfig {
    fn default() -> Self {
        Self {
            max_backfit_iterations: 200,
            convergence_tolerance: 1e-8,
            lambda_grid: Vec::new(),
            cv_folds: 5,
            cv_seed: 20_130_101,
            ridge: 0.0,
        }
    }
}

impl LawsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.convergence_tolerance > 0.0) {
            return Err(Error::InvalidParameter("convergence tolerance must be positive".into()));
        }
        if self.max_backfit_iterations == 0 {
            return Err(Error::InvalidParameter("max_backfit_iterations must be at least 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidParameter("cv_folds must be at least 2".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidParameter("ridge must be nonnegative".into()));
        }
        for grid in &self.lambda_grid {
            if grid.is_empty() {
                return Err(Error::InvalidParameter("lambda grids must be nonempty".into()));
            }
            if grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                return Err(Error::InvalidParameter("lambda grid values must be positive and finite".into()));
            }
        }
        Ok(())
    }

    /// Grids for `count` penalized terms.
    pub fn grids(&self, count: usize) -> Result<Vec<Vec<f64>>> {
        if self.lambda_grid.is_empty() {
            return Ok(vec![default_lambda_grid(); count]);
        }
        if self.lambda_grid.len() == 1 {
            return Ok(vec![self.lambda_grid[0].clone(); count]);
        }
        if self.lambda_grid.len() != count {
            return Err(Error::DimensionMismatch {
                context: "lambda grids (one per penalized term)".into(),
                expected: count,
                actual: self.lambda_grid.len(),
            });
        }
        Ok(self.lambda_grid.clone())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LawsFit {
    pub coefficients: Vec<DVector<f64>>,
    pub intercept: f64,
    /// Smoothing parameters of the penalized terms, in term order.
    pub lambdas: Vec<f64>,
    pub fitted: Vec<f64>,
    pub weights: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

/// Per-term smoothing parameters: the supplied values for penalized terms, 0 otherwise.
pub(crate) fn expand_lambdas(terms: &[ModelTerm], lambdas: &[f64]) -> Result<Vec<f64>> {
    let penalized = terms.iter().filter(|t| t.is_penalized()).count();
    if lambdas.len() != penalized {
        return Err(Error::DimensionMismatch {
            context: "smoothing parameters (one per penalized term)".into(),
            expected: penalized,
            actual: lambdas.len(),
        });
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter(format!("smoothing parameter {l} must be finite and nonnegative")));
    }
    let mut it = lambdas.iter();
    Ok(terms
        .iter()
        .map(|t| if t.is_penalized() { *it.next().unwrap() } else { 0.0 })
        .collect())
}

/// `Σ w_τ (y − η)² + Σ_j λ_j β_jᵀ K_j β_j`.
pub fn penalized_objective(
    y: &[f64],
    eta: &[f64],
    terms: &[ModelTerm],
    coefficients: &[DVector<f64>],
    lambdas_full: &[f64],
    asym: Asymmetry,
) -> f64 {
    let loss = crate::distributions::asymmetric_loss(y, eta, asym);
    let penalty: f64 = terms
        .iter()
        .zip(coefficients)
        .zip(lambdas_full)
        .map(|((t, c), l)| if *l > 0.0 { l * t.penalty_quadratic(c) } else { 0.0 })
        .sum();
    loss + penalty
}

fn check_inputs(y: &[f64], terms: &[ModelTerm]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::InvalidParameter("response is empty".into()));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("response contains non-finite value {v}")));
    }
    for t in terms {
        if t.nobs() != y.len() {
            return Err(Error::DimensionMismatch {
                context: format!("rows of term `{}`", t.name()),
                expected: y.len(),
                actual: t.nobs(),
            });
        }
    }
    Ok(())
}

/// Solve `(BᵀWB + λK + ridge·I) β = BᵀW r` for one term.
pub(crate) fn solve_block(
    term: &ModelTerm,
    w: &[f64],
    partial: &[f64],
    lambda: f64,
    ridge: f64,
) -> Result<DVector<f64>> {
    let mut lhs = term.weighted_gram(w);
    if lambda > 0.0 {
        lhs += term.penalty() * lambda;
    }
    if ridge > 0.0 {
        for i in 0..lhs.nrows() {
            lhs[(i, i)] += ridge;
        }
    }
    let rhs = term.weighted_cross(w, partial);
    let scale = lhs.diagonal().amax().max(f64::MIN_POSITIVE);
    let singular = || Error::SingularSystem(term.name().to_string());
    let chol = nalgebra::linalg::Cholesky::new(lhs).ok_or_else(singular)?;
    let l = chol.l_dirty();
    let min_pivot = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(singular());
    }
    Ok(chol.solve(&rhs))
}

fn weighted_intercept(y: &[f64], eta: &[f64], intercept: f64, asym: Asymmetry) -> f64 {
    let w = weights(y, eta, asym);
    let (num, den) = y
        .iter()
        .zip(eta)
        .zip(&w)
        .fold((0.0, 0.0), |(n, d), ((yi, ei), wi)| (n + wi * (yi - ei + intercept), d + wi));
    num / den
}

struct State {
    coefficients: Vec<DVector<f64>>,
    intercept: f64,
    eta: Vec<f64>,
}

/// Solve for term `j` jointly with the intercept. Returns `None` when the
/// augmented system is singular, e.g. for an uncentered term whose span
/// contains the constant.
fn solve_with_intercept(
    term: &ModelTerm,
    w: &[f64],
    partial: &[f64],
    lambda: f64,
    ridge: f64,
) -> Option<(f64, DVector<f64>)> {
    let p = term.width();
    let ones = vec![1.0; w.len()];
    let mut lhs = DMatrix::zeros(p + 1, p + 1);
    lhs[(0, 0)] = w.iter().sum::<f64>();
    let cross = term.weighted_cross(w, &ones);
    let mut gram = term.weighted_gram(w);
    if lambda > 0.0 {
        gram += term.penalty() * lambda;
    }
    for i in 0..p {
        gram[(i, i)] += ridge;
    }
    lhs.view_mut((1, 0), (p, 1)).copy_from(&cross);
    lhs.view_mut((0, 1), (1, p)).copy_from(&cross.transpose());
    lhs.view_mut((1, 1), (p, p)).copy_from(&gram);
    let mut rhs = DVector::zeros(p + 1);
    rhs[0] = w.iter().zip(partial).map(|(a, b)| a * b).sum();
    rhs.rows_mut(1, p).copy_from(&term.weighted_cross(w, partial));
    let scale = lhs.diagonal().amax().max(f64::MIN_POSITIVE);
    let chol = nalgebra::linalg::Cholesky::new(lhs)?;
    let l = chol.l_dirty();
    let min_pivot = (0..=p).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-11 * scale) {
        return None;
    }
    let sol = chol.solve(&rhs);
    Some((sol[0], sol.rows(1, p).into_owned()))
}

fn sweep(y: &[f64], terms: &[ModelTerm], asym: Asymmetry, lambdas: &[f64], ridge: f64, s: &mut State) -> Result<()> {
    for (j, term) in terms.iter().enumerate() {
        let w = weights(y, &s.eta, asym);
        let own = term.apply(&s.coefficients[j]);
        let partial: Vec<f64> = y
            .iter()
            .zip(&s.eta)
            .zip(own.iter())
            .map(|((yi, ei), oi)| yi - ei + oi + s.intercept)
            .collect();
        let (intercept, updated) = match solve_with_intercept(term, &w, &partial, lambdas[j], ridge) {
            Some(sol) => sol,
            None => {
                let centred: Vec<f64> = partial.iter().map(|r| r - s.intercept).collect();
                (s.intercept, solve_block(term, &w, &centred, lambdas[j], ridge)?)
            }
        };
        let fresh = term.apply(&updated);
        for ((e, o), f) in s.eta.iter_mut().zip(own.iter()).zip(fresh.iter()) {
            *e += f - o + intercept - s.intercept;
        }
        s.coefficients[j] = updated;
        s.intercept = intercept;
    }
    let refreshed = weighted_intercept(y, &s.eta, s.intercept, asym);
    for e in s.eta.iter_mut() {
        *e += refreshed - s.intercept;
    }
    s.intercept = refreshed;
    Ok(())
}

/// Observations whose weight differs between two predictors, ignoring
/// residuals at rounding level where the side is numerically arbitrary.
fn weight_flips(y: &[f64], before: &[f64], after: &[f64], asym: Asymmetry) -> usize {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    y.iter()
        .zip(before.iter().zip(after))
        .filter(|(yi, (b, a))| {
            let flipped = (**yi <= **b) != (**yi <= **a);
            flipped && (**yi - **a).abs() > 1e-9 * scale
        })
        .count()
        * usize::from(!asym.is_symmetric())
}

fn blend(old: &State, new: &State, terms: &[ModelTerm], step: f64) -> Result<State> {
    let coefficients: Vec<DVector<f64>> =
        old.coefficients.iter().zip(&new.coefficients).map(|(a, b)| a + (b - a) * step).collect();
    let intercept = old.intercept + step * (new.intercept - old.intercept);
    let eta = if terms.is_empty() {
        vec![intercept; old.eta.len()]
    } else {
        assemble_predictor(terms, &coefficients, intercept)?
    };
    Ok(State { coefficients, intercept, eta })
}

fn l2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Penalized IWLS backfitting for the τ-expectile predictor. The intercept
/// is handled internally and must not be among `terms`. `lambdas` holds one
/// value per penalized term.
pub fn iwls_backfit(
    y: &[f64],
    terms: &[ModelTerm],
    asym: Asymmetry,
    lambdas: &[f64],
    config: &LawsConfig,
) -> Result<LawsFit> {
    config.validate()?;
    check_inputs(y, terms)?;
    let lambdas_full = expand_lambdas(terms, lambdas)?;
    let n = y.len();
    let start = y.iter().sum::<f64>() / n as f64;
    let mut state = State {
        coefficients: terms.iter().map(|t| DVector::zeros(t.width())).collect(),
        intercept: start,
        eta: vec![start; n],
    };
    let mut objective = penalized_objective(y, &state.eta, terms, &state.coefficients, &lambdas_full, asym);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_backfit_iterations {
        iterations += 1;
        let mut next = State {
            coefficients: state.coefficients.clone(),
            intercept: state.intercept,
            eta: state.eta.clone(),
        };
        sweep(y, terms, asym, &lambdas_full, config.ridge, &mut next)?;
        let mut next_obj = penalized_objective(y, &next.eta, terms, &next.coefficients, &lambdas_full, asym);
        let slack = 1e-12 * objective.abs().max(1.0);
        if next_obj > objective + slack {
            let mut step = 1.0;
            for _ in 0..30 {
                step *= 0.5;
                let trial = blend(&state, &next, terms, step)?;
                let trial_obj = penalized_objective(y, &trial.eta, terms, &trial.coefficients, &lambdas_full, asym);
                if trial_obj <= objective + slack {
                    next = trial;
                    next_obj = trial_obj;
                    break;
                }
            }
            if next_obj > objective + slack {
                log::debug!("step-halving failed to reduce the objective at sweep {iterations}");
            }
        }
        let change = l2(next.eta.iter().zip(&state.eta).map(|(a, b)| a - b));
        let size = l2(state.eta.iter().cloned());
        let flips = weight_flips(y, &state.eta, &next.eta, asym);
        state = next;
        objective = next_obj;
        if flips == 0 && change <= config.convergence_tolerance * size.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("LAWS backfitting did not converge in {iterations} sweeps");
    }
    let w = weights(y, &state.eta, asym);
    Ok(LawsFit {
        coefficients: state.coefficients,
        intercept: state.intercept,
        lambdas: lambdas.to_vec(),
        fitted: state.eta,
        weights: w,
        converged,
        iterations,
        objective,
    })
}

impl LawsFit {
    /// Stationarity residual `‖B_jᵀW(y − η) − λ_j K_j β_j‖∞` per term.
    pub fn stationarity(&self, y: &[f64], terms: &[ModelTerm]) -> Result<Vec<f64>> {
        let lambdas = expand_lambdas(terms, &self.lambdas)?;
        let r: Vec<f64> = y.iter().zip(&self.fitted).map(|(a, b)| a - b).collect();
        Ok(terms
            .iter()
            .zip(&self.coefficients)
            .zip(lambdas)
            .map(|((t, c), l)| {
                let g = t.weighted_cross(&self.weights, &r) - t.penalty() * c * l;
                g.amax()
            })
            .collect())
    }

    /// Predictor at new data given designs aligned with the fitted terms.
    pub fn predict(&self, designs: &[DMatrix<f64>]) -> Result<Vec<f64>> {
        if designs.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                context: "prediction designs".into(),
                expected: self.coefficients.len(),
                actual: designs.len(),
            });
        }
        let rows = designs.first().map(|d| d.nrows()).unwrap_or(0);
        let mut eta = DVector::from_element(rows, self.intercept);
        for (d, c) in designs.iter().zip(&self.coefficients) {
            if d.ncols() != c.len() || d.nrows() != rows {
                return Err(Error::DimensionMismatch {
                    context: "prediction design columns".into(),
                    expected: c.len(),
                    actual: d.ncols(),
                });
            }
            eta += d * c;
        }
        Ok(eta.iter().cloned().collect())
    }
}
