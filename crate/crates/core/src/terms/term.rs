use nalgebra::{DMatrix, DVector};

use super::bspline::{bspline_design, SplineSpec};
use super::mrf::{mrf_design, mrf_precision, AdjacencyGraph};
use super::penalty::difference_penalty;
use crate::distributions::Asymmetry;
use crate::error::{Error, Result};
use crate::linalg::{
    check_psd, complement_basis, dense_weighted_cross, dense_weighted_gram, numerical_rank, SparseRows,
};

/// How a term's raw basis is generated, kept so fitted effects can be
/// evaluated away from the observed covariate values.
#[derive(Debug, Clone, PartialEq)]
pub enum TermBasis {
    Intercept,
    Linear,
    PSpline(SplineSpec),
    Mrf(AdjacencyGraph),
    Custom,
}

/// One additive predictor component: design, penalty (prior precision),
/// cached penalty rank and an optional sum-to-zero reparametrization.
#[derive(Debug, Clone)]
pub struct ModelTerm {
    name: String,
    basis: TermBasis,
    design: DMatrix<f64>,
    penalty: DMatrix<f64>,
    penalty_rank: usize,
    centered: bool,
    /// Raw coefficients = `transform · coefficients` (identity when absent).
    transform: Option<DMatrix<f64>>,
    raw_sparse: Option<SparseRows>,
    labels: Vec<String>,
}

impl ModelTerm {
    pub fn new(name: impl Into<String>, design: DMatrix<f64>, penalty: DMatrix<f64>) -> Result<Self> {
        let name = name.into();
        let labels = (0..design.ncols()).map(|j| format!("{name}[{j}]")).collect();
        Self::build(name, TermBasis::Custom, design, penalty, labels)
    }

    fn build(
        name: String,
        basis: TermBasis,
        design: DMatrix<f64>,
        penalty: DMatrix<f64>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if penalty.nrows() != design.ncols() || penalty.ncols() != design.ncols() {
            return Err(Error::DimensionMismatch {
                context: format!("penalty of term `{name}`"),
                expected: design.ncols(),
                actual: penalty.nrows(),
            });
        }
        check_psd(&penalty, &format!("penalty of term `{name}`"))?;
        let penalty_rank = numerical_rank(&penalty);
        let sparse = SparseRows::from_dense(&design);
        let raw_sparse = (sparse.density() < 0.5).then_some(sparse);
        Ok(Self {
            name,
            basis,
            design,
            penalty,
            penalty_rank,
            centered: false,
            transform: None,
            raw_sparse,
            labels,
        })
    }

    pub fn intercept(n: usize) -> Self {
        Self::build(
            "(Intercept)".into(),
            TermBasis::Intercept,
            DMatrix::from_element(n, 1, 1.0),
            DMatrix::zeros(1, 1),
            vec!["(Intercept)".into()],
        )
        .expect("intercept term is always valid")
    }

    /// Unpenalized linear effect with one coefficient per column.
    pub fn linear(name: impl Into<String>, x: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if labels.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                context: format!("labels of linear term `{name}`"),
                expected: x.ncols(),
                actual: labels.len(),
            });
        }
        let p = x.ncols();
        Self::build(name, TermBasis::Linear, x, DMatrix::zeros(p, p), labels)
    }

    /// P-spline: B-spline design with a difference penalty.
    pub fn pspline(name: impl Into<String>, x: &[f64], spec: SplineSpec) -> Result<Self> {
        let name = name.into();
        let design = bspline_design(x, &spec)?;
        let penalty = difference_penalty(spec.basis_size(), spec.difference_order)?;
        let labels = (0..spec.basis_size()).map(|j| format!("{name}[{j}]")).collect();
        Self::build(name, TermBasis::PSpline(spec), design, penalty, labels)
    }

    /// Markov random field: region incidence design with the graph Laplacian.
    pub fn mrf<S: AsRef<str>>(name: impl Into<String>, regions: &[S], graph: AdjacencyGraph) -> Result<Self> {
        let name = name.into();
        let design = mrf_design(regions, &graph)?;
        let penalty = mrf_precision(&graph);
        let labels = graph.labels().to_vec();
        Self::build(name, TermBasis::Mrf(graph), design, penalty, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn basis(&self) -> &TermBasis {
        &self.basis
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    pub fn penalty_rank(&self) -> usize {
        self.penalty_rank
    }

    pub fn is_penalized(&self) -> bool {
        self.penalty_rank > 0
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn nobs(&self) -> usize {
        self.design.nrows()
    }

    pub fn width(&self) -> usize {
        self.design.ncols()
    }

    /// Names of the raw (untransformed) coefficients.
    pub fn raw_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transform(&self) -> Option<&DMatrix<f64>> {
        self.transform.as_ref()
    }

    /// Map coefficients to the raw basis (spline coefficients, region effects, slopes).
    pub fn raw_coefficients(&self, coef: &DVector<f64>) -> DVector<f64> {
        match &self.transform {
            Some(t) => t * coef,
            None => coef.clone(),
        }
    }

    /// Raw-basis design at new covariate values for spline terms.
    pub fn raw_spline_design(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match &self.basis {
            TermBasis::PSpline(spec) => bspline_design(x, spec),
            _ => Err(Error::InvalidParameter(format!(
                "term `{}` is not a spline term",
                self.name
            ))),
        }
    }

    /// Design in the term's own parametrization at new spline covariate values.
    pub fn spline_design_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let raw = self.raw_spline_design(x)?;
        Ok(match &self.transform {
            Some(t) => raw * t,
            None => raw,
        })
    }

    /// `Bᵀ diag(w) B`.
    pub fn weighted_gram(&self, w: &[f64]) -> DMatrix<f64> {
        match (&self.raw_sparse, &self.transform) {
            (Some(s), Some(t)) => t.transpose() * s.weighted_gram(w) * t,
            (Some(s), None) => s.weighted_gram(w),
            _ => dense_weighted_gram(&self.design, w),
        }
    }

    /// `Bᵀ diag(w) r`.
    pub fn weighted_cross(&self, w: &[f64], r: &[f64]) -> DVector<f64> {
        match (&self.raw_sparse, &self.transform) {
            (Some(s), Some(t)) => t.transpose() * s.weighted_cross(w, r),
            (Some(s), None) => s.weighted_cross(w, r),
            _ => dense_weighted_cross(&self.design, w, r),
        }
    }

    /// Fitted values `B · coef`.
    pub fn apply(&self, coef: &DVector<f64>) -> DVector<f64> {
        match (&self.raw_sparse, &self.transform) {
            (Some(s), Some(t)) => s.mul_vec(&(t * coef)),
            (Some(s), None) => s.mul_vec(coef),
            _ => &self.design * coef,
        }
    }

    /// The same term restricted to a subset of observations, keeping its
    /// parametrization.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let design = self.design.select_rows(rows);
        Self {
            design,
            raw_sparse: self.raw_sparse.as_ref().map(|s| s.select_rows(rows)),
            ..self.clone()
        }
    }

    /// Quadratic form `coefᵀ K coef`.
    pub fn penalty_quadratic(&self, coef: &DVector<f64>) -> f64 {
        if self.penalty_rank == 0 {
            return 0.0;
        }
        coef.dot(&(&self.penalty * coef))
    }
}

/// Reparametrize so the term's fitted values sum to zero over the observed
/// design: `β = Z γ` with `Z` an orthonormal basis of the null space of `1ᵀB`.
/// Terms already satisfying the constraint are returned unchanged.
pub fn apply_centering(term: &ModelTerm) -> ModelTerm {
    let n = term.nobs();
    let constraint = DVector::from_iterator(term.width(), term.design.column_iter().map(|c| c.sum()));
    let scale = term.design.iter().fold(0.0f64, |m, v| m.max(v.abs())) * n as f64;
    let mut out = term.clone();
    out.centered = true;
    if constraint.norm() <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return out;
    }
    let z = match complement_basis(&constraint) {
        Some(z) => z,
        None => {
            // A single column with nonzero sum cannot be centered without
            // annihilating it.
            return out;
        }
    };
    out.design = &term.design * &z;
    let penalty = z.transpose() * &term.penalty * &z;
    // Restore exact symmetry lost to rounding.
    out.penalty = 0.5 * (&penalty + penalty.transpose());
    out.penalty_rank = numerical_rank(&out.penalty);
    out.transform = Some(match &term.transform {
        Some(t) => t * &z,
        None => z,
    });
    out
}

impl ModelTerm {
    pub fn centered(self) -> Self {
        apply_centering(&self)
    }
}

/// `η = intercept · 1 + Σ_j B_j β_j`.
pub fn assemble_predictor(terms: &[ModelTerm], coefficients: &[DVector<f64>], intercept: f64) -> Result<Vec<f64>> {
    if terms.len() != coefficients.len() {
        return Err(Error::DimensionMismatch {
            context: "coefficient blocks".into(),
            expected: terms.len(),
            actual: coefficients.len(),
        });
    }
    let n = terms.first().map(|t| t.nobs()).unwrap_or(0);
    let mut eta = DVector::from_element(n, intercept);
    for (t, c) in terms.iter().zip(coefficients) {
        if c.len() != t.width() {
            return Err(Error::DimensionMismatch {
                context: format!("coefficients of term `{}`", t.name()),
                expected: t.width(),
                actual: c.len(),
            });
        }
        if t.nobs() != n {
            return Err(Error::DimensionMismatch {
                context: format!("rows of term `{}`", t.name()),
                expected: n,
                actual: t.nobs(),
            });
        }
        eta += t.apply(c);
    }
    Ok(eta.iter().cloned().collect())
}

/// Response, ordered terms and asymmetry level.
#[derive(Debug, Clone)]
pub struct ExpectileModel {
    pub response: Vec<f64>,
    pub terms: Vec<ModelTerm>,
    pub asym: Asymmetry,
}

impl ExpectileModel {
    pub fn new(response: Vec<f64>, terms: Vec<ModelTerm>, asym: Asymmetry) -> Result<Self> {
        let n = response.len();
        for t in &terms {
            if t.nobs() != n {
                return Err(Error::DimensionMismatch {
                    context: format!("rows of term `{}`", t.name()),
                    expected: n,
                    actual: t.nobs(),
                });
            }
        }
        if let Some(bad) = response.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite response value {bad}")));
        }
        Ok(Self { response, terms, asym })
    }

    pub fn with_asymmetry(&self, asym: Asymmetry) -> Self {
        Self {
            asym,
            ..self.clone()
        }
    }

    pub fn penalized_count(&self) -> usize {
        self.terms.iter().filter(|t| t.is_penalized()).count()
    }
}
