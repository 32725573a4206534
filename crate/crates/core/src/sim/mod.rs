//! Simulation scenarios, true expectile curves and evaluation metrics.

mod metrics;
mod scenario;
mod study;

pub use metrics::{coverage, interval_widths, mean_widths, rmse};
pub use scenario::{generate_scenario, BaseExpectiles, Dataset, ErrorLaw, ModelKind, ScenarioSpec};
pub use study::{
    run_study, CoverageRecord, EstimatorSettings, FailureRecord, RmseRecord, StudyKind, StudyReport,
};
