use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Command, RunConfig, TermKind};
use super::data::{parse_data, Table};
use super::output::{fmt_f64, write_json, CsvTable, Manifest, RunRecord, MANIFEST_FILE};
use super::CliError;
use crate::distributions::{parse_law, true_expectile};
use crate::fit::{laws_fit_result, FitResult, Method};
use crate::laws::{asymptotic_ci, iwls_backfit, select_lambda_cv};
use crate::mcmc::{posterior_summary, run_chain, ChainConfig};
use crate::rng::derive_seed;
use crate::sim::{run_study, EstimatorSettings, ScenarioSpec, StudyKind, StudyReport};
use crate::terms::{parse_adjacency, ModelTerm, SplineSpec};
use crate::Asymmetry;

/// What a command produced; the caller writes the manifest.
#[derive(Debug)]
pub struct CommandOutcome {
    pub manifest: Manifest,
}

fn method_index(m: Method) -> u64 {
    match m {
        Method::Bayes => 0,
        Method::Laws => 1,
    }
}

/// Response and model terms for `fit`. Smooth and spatial terms are centered.
pub fn build_model(config: &RunConfig, table: &Table) -> Result<(Vec<f64>, Vec<ModelTerm>), CliError> {
    let data = config.data.as_ref().ok_or_else(|| CliError::usage("fit needs a [data] section"))?;
    let y = table.numeric(&data.response)?;
    if config.terms.is_empty() {
        log::info!("no terms configured; fitting an intercept-only model");
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut terms = Vec::new();
    for tc in &config.terms {
        if !seen.insert(tc.covariate.as_str()) {
            return Err(CliError::usage(format!("covariate `{}` appears in more than one term", tc.covariate)));
        }
        let term = match tc.kind {
            TermKind::Linear => {
                if table.is_numeric(&tc.covariate)? && !tc.categorical {
                    let x = table.numeric(&tc.covariate)?;
                    let design = nalgebra::DMatrix::from_column_slice(x.len(), 1, &x);
                    ModelTerm::linear(tc.covariate.clone(), design, vec![tc.covariate.clone()])
                } else {
                    let (design, labels, reference) = table.dummy(&tc.covariate)?;
                    log::info!("`{}` is dummy coded with reference level `{reference}`", tc.covariate);
                    ModelTerm::linear(tc.covariate.clone(), design, labels)
                }
            }
            TermKind::Pspline => {
                let x = table.numeric(&tc.covariate)?;
                let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let spec = SplineSpec::new(
                    tc.degree.unwrap_or(config.spline.degree),
                    tc.inner_knots.unwrap_or(config.spline.inner_knots),
                    tc.difference_order.unwrap_or(config.spline.difference_order),
                    (lo, hi),
                )
                .map_err(|e| CliError::usage(format!("term `{}`: {e}", tc.covariate)))?;
                ModelTerm::pspline(tc.covariate.clone(), &x, spec).map(ModelTerm::centered)
            }
            TermKind::Mrf => {
                let path = data
                    .adjacency
                    .as_ref()
                    .ok_or_else(|| CliError::usage(format!("term `{}` needs data.adjacency", tc.covariate)))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read adjacency {}: {e}", path.display())))?;
                let graph = parse_adjacency(&text).map_err(CliError::usage)?;
                let regions = table.text(&tc.covariate)?;
                ModelTerm::mrf(tc.covariate.clone(), regions, graph).map(ModelTerm::centered)
            }
        };
        terms.push(term.map_err(|e| CliError::usage(format!("term `{}`: {e}", tc.covariate)))?);
    }
    Ok((y, terms))
}

fn fit_one(
    config: &RunConfig,
    y: &[f64],
    terms: &[ModelTerm],
    asym: Asymmetry,
    method: Method,
    seed: u64,
) -> crate::Result<FitResult> {
    match method {
        Method::Bayes => {
            let chain = ChainConfig { seed, ..config.chain.clone() };
            let out = run_chain(y, terms, asym, &chain)?;
            posterior_summary(&out, terms, config.level, config.grid_len)
        }
        Method::Laws => {
            let laws = crate::laws::LawsConfig { cv_seed: seed, ..config.laws.clone() };
            let lambdas = if terms.iter().any(ModelTerm::is_penalized) {
                select_lambda_cv(y, terms, asym, &laws)?.lambdas
            } else {
                Vec::new()
            };
            let fit = iwls_backfit(y, terms, asym, &lambdas, &laws)?;
            let ci = asymptotic_ci(&fit, y, terms, asym, config.level)?;
            laws_fit_result(&fit, &ci, terms, asym.tau(), config.grid_len)
        }
    }
}

pub fn cmd_fit(config: &RunConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let data = config.data.as_ref().ok_or_else(|| CliError::usage("fit needs a [data] section"))?;
    let table = parse_data(&data.path)?;
    let (y, terms) = build_model(config, &table)?;
    config.chain.validate().map_err(CliError::usage)?;
    config.laws.validate().map_err(CliError::usage)?;
    let jobs: Vec<(usize, Asymmetry, Method)> = config
        .asymmetries()
        .into_iter()
        .enumerate()
        .flat_map(|(i, a)| config.methods.iter().map(move |&m| (i, a, m)))
        .collect();
    let results: Vec<(RunRecord, Option<FitResult>, Option<String>)> = jobs
        .par_iter()
        .map(|&(i, asym, method)| {
            let seed = derive_seed(config.seed, &[i as u64, method_index(method)]);
            let started = Instant::now();
            let outcome = fit_one(config, &y, &terms, asym, method, seed);
            let mut record = RunRecord {
                tau: asym.tau(),
                method: method.to_string(),
                seed,
                status: "ok".into(),
                runtime_secs: started.elapsed().as_secs_f64(),
                diagnostics: BTreeMap::new(),
            };
            match outcome {
                Ok(fit) => {
                    record.diagnostics = fit.diagnostics.clone();
                    (record, Some(fit), None)
                }
                Err(e) => {
                    record.status = format!("failed: {e}");
                    (record, None, Some(format!("tau {} {method}: {e}", asym.tau())))
                }
            }
        })
        .collect();

    let mut coefficients = CsvTable::new(
        "coefficients.csv",
        &["method", "tau", "term", "parameter", "estimate", "lower", "upper", "excludes_zero"],
    );
    let mut curves = CsvTable::new("curves.csv", &["method", "tau", "term", "z", "estimate", "lower", "upper"]);
    let mut spatial = CsvTable::new("spatial.csv", &["method", "tau", "term", "region", "estimate", "lower", "upper"]);
    let mut variances =
        CsvTable::new("variances.csv", &["method", "tau", "term", "parameter", "estimate", "lower", "upper"]);
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    let mut manifest = Manifest::new(Command::Fit, config.clone(), out_dir.to_path_buf());
    for (record, fit, failure) in results {
        manifest.runs.push(record);
        failures.extend(failure);
        let Some(fit) = fit else { continue };
        let (m, t) = (fit.method.to_string(), fmt_f64(fit.tau));
        for e in &fit.coefficients {
            coefficients.row([
                m.clone(),
                t.clone(),
                e.term.clone(),
                e.parameter.clone(),
                fmt_f64(e.estimate),
                fmt_f64(e.lower),
                fmt_f64(e.upper),
                e.excludes_zero().to_string(),
            ]);
        }
        for c in &fit.curves {
            for (k, z) in c.z.iter().enumerate() {
                curves.row([
                    m.clone(),
                    t.clone(),
                    c.term.clone(),
                    fmt_f64(*z),
                    fmt_f64(c.band.estimate[k]),
                    fmt_f64(c.band.lower[k]),
                    fmt_f64(c.band.upper[k]),
                ]);
            }
        }
        for e in &fit.regions {
            spatial.row([
                m.clone(),
                t.clone(),
                e.term.clone(),
                e.parameter.clone(),
                fmt_f64(e.estimate),
                fmt_f64(e.lower),
                fmt_f64(e.upper),
            ]);
        }
        for e in &fit.variances {
            variances.row([
                m.clone(),
                t.clone(),
                e.term.clone(),
                e.parameter.clone(),
                fmt_f64(e.estimate),
                fmt_f64(e.lower),
                fmt_f64(e.upper),
            ]);
        }
        fits.push(fit);
    }
    for table in [coefficients, curves, spatial, variances] {
        manifest.outputs.push(table.save(out_dir)?);
    }
    #[derive(Serialize)]
    struct FitSummary<'a> {
        description: &'static str,
        observations: usize,
        fits: &'a [FitResult],
        failures: &'a [String],
    }
    let summary = FitSummary {
        description: "Human-readable fit summary; the CSV tables hold the same numbers at full precision.",
        observations: y.len(),
        fits: &fits,
        failures: &failures,
    };
    manifest.outputs.push(write_json(out_dir, "summary.json", &summary)?);
    manifest.failures = failures.len();
    if !failures.is_empty() {
        return Err(CliError::estimation(failures.join("; ")).with_outcome(CommandOutcome { manifest }));
    }
    Ok(CommandOutcome { manifest })
}

fn study_inputs(config: &RunConfig) -> Result<(ScenarioSpec, EstimatorSettings), CliError> {
    let sc = config
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::usage("simulation commands need a [scenario] section"))?;
    let spec = ScenarioSpec {
        model: sc.model,
        error: sc.error,
        n: sc.n,
        replications: sc.replications,
        tau_list: config.asymmetries(),
        base_seed: config.seed,
    };
    spec.validate().map_err(CliError::usage)?;
    let settings = EstimatorSettings {
        chain: config.chain.clone(),
        laws: config.laws.clone(),
        degree: config.spline.degree,
        inner_knots: config.spline.inner_knots,
        difference_order: config.spline.difference_order,
        level: config.level,
        grid_len: config.grid_len,
    };
    settings.chain.validate().map_err(CliError::usage)?;
    settings.laws.validate().map_err(CliError::usage)?;
    Ok((spec, settings))
}

fn study_manifest(command: Command, config: &RunConfig, out_dir: &Path, report: &StudyReport) -> Manifest {
    let mut manifest = Manifest::new(command, config.clone(), out_dir.to_path_buf());
    manifest.failures = report.failures.len();
    manifest.runtime_secs = report.runtime_secs;
    manifest
}

fn finish_study(report: &StudyReport, mut manifest: Manifest, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    #[derive(Serialize)]
    struct Group {
        tau: f64,
        method: Method,
        median_rmse: Option<f64>,
        mean_coverage: Option<f64>,
        mean_width_ratio: Option<f64>,
    }
    let mut groups = Vec::new();
    for a in &report.spec.tau_list {
        for &m in &report.methods {
            let mut r = report.rmse_for(m, a.tau());
            r.sort_by(f64::total_cmp);
            let cov = report.coverage_for(m, a.tau());
            let widths: Vec<f64> = cov.iter().map(|c| c.mean_width).collect();
            let wmax = widths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let wmin = widths.iter().cloned().fold(f64::INFINITY, f64::min);
            groups.push(Group {
                tau: a.tau(),
                method: m,
                median_rmse: (!r.is_empty()).then(|| {
                    let k = r.len();
                    if k % 2 == 1 { r[k / 2] } else { 0.5 * (r[k / 2 - 1] + r[k / 2]) }
                }),
                mean_coverage: (!cov.is_empty())
                    .then(|| cov.iter().map(|c| c.coverage).sum::<f64>() / cov.len() as f64),
                mean_width_ratio: (!cov.is_empty()).then(|| wmax / wmin),
            });
        }
    }
    #[derive(Serialize)]
    struct StudySummary<'a> {
        description: &'static str,
        spec: &'a ScenarioSpec,
        groups: Vec<Group>,
        failures: &'a [crate::sim::FailureRecord],
    }
    let summary = StudySummary {
        description: "Human-readable study summary; the CSV tables hold per-cell values at full precision.",
        spec: &report.spec,
        groups,
        failures: &report.failures,
    };
    manifest.outputs.push(write_json(out_dir, "summary.json", &summary)?);
    if !report.failures.is_empty() {
        let msg = format!("{} of the requested fits failed", report.failures.len());
        return Err(CliError::estimation(msg).with_outcome(CommandOutcome { manifest }));
    }
    Ok(CommandOutcome { manifest })
}

pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let (spec, settings) = study_inputs(config)?;
    let report = run_study(&spec, &config.methods, StudyKind::Point, &settings).map_err(CliError::estimation)?;
    let mut table = CsvTable::new("rmse.csv", &["model", "error", "n", "tau", "method", "replication", "rmse"]);
    for r in &report.rmse {
        table.row([
            spec.model.to_string(),
            spec.error.to_string(),
            spec.n.to_string(),
            fmt_f64(r.tau),
            r.method.to_string(),
            r.replication.to_string(),
            fmt_f64(r.rmse),
        ]);
    }
    let mut manifest = study_manifest(Command::Simulate, config, out_dir, &report);
    manifest.outputs.push(table.save(out_dir)?);
    finish_study(&report, manifest, out_dir)
}

pub fn cmd_coverage_study(config: &RunConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let (spec, settings) = study_inputs(config)?;
    let report = run_study(&spec, &config.methods, StudyKind::Interval, &settings).map_err(CliError::estimation)?;
    let mut table = CsvTable::new("coverage.csv", &["tau", "grid_z", "coverage", "min_width", "max_width", "method"]);
    for c in &report.coverage {
        table.row([
            fmt_f64(c.tau),
            fmt_f64(c.grid_z),
            fmt_f64(c.coverage),
            fmt_f64(c.min_width),
            fmt_f64(c.max_width),
            c.method.to_string(),
        ]);
    }
    let mut manifest = study_manifest(Command::CoverageStudy, config, out_dir, &report);
    manifest.outputs.push(table.save(out_dir)?);
    finish_study(&report, manifest, out_dir)
}

pub fn cmd_true_expectiles(config: &RunConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let spec = config
        .law
        .as_deref()
        .ok_or_else(|| CliError::usage("true-expectiles needs `law`, e.g. law = \"normal(0,1)\""))?;
    let law = parse_law(spec).map_err(CliError::usage)?;
    let mut table = CsvTable::new("expectiles.csv", &["tau", "expectile"]);
    for a in config.asymmetries() {
        let e = true_expectile(&law, a).map_err(CliError::estimation)?;
        table.row([fmt_f64(a.tau()), fmt_f64(e)]);
    }
    let mut manifest = Manifest::new(Command::TrueExpectiles, config.clone(), out_dir.to_path_buf());
    manifest.outputs.push(table.save(out_dir)?);
    Ok(CommandOutcome { manifest })
}

/// Dispatch a command and always leave a manifest behind when outputs were written.
pub fn execute(command: Command, config: &RunConfig, out_dir: &Path) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let result = match command {
        Command::Fit => cmd_fit(config, out_dir),
        Command::Simulate => cmd_simulate(config, out_dir),
        Command::CoverageStudy => cmd_coverage_study(config, out_dir),
        Command::TrueExpectiles => cmd_true_expectiles(config, out_dir),
    };
    let finish = |mut manifest: Manifest| -> Result<Manifest, CliError> {
        if manifest.runtime_secs == 0.0 {
            manifest.runtime_secs = started.elapsed().as_secs_f64();
        }
        manifest.outputs.push(MANIFEST_FILE.to_string());
        write_json(out_dir, MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    };
    match result {
        Ok(outcome) => finish(outcome.manifest),
        Err(mut err) => {
            if let Some(outcome) = err.outcome.take() {
                finish(outcome.manifest)?;
            }
            Err(err)
        }
    }
}
