use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::fit::Method;
use crate::laws::LawsConfig;
use crate::mcmc::ChainConfig;
use crate::sim::{ErrorLaw, ModelKind};

pub const OUTPUT_ENV: &str = "GEOEXPECTILE_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fit,
    Simulate,
    CoverageStudy,
    TrueExpectiles,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Simulate => "simulate",
            Command::CoverageStudy => "coverage-study",
            Command::TrueExpectiles => "true-expectiles",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Linear,
    Pspline,
    Mrf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub covariate: String,
    #[serde(rename = "type")]
    pub kind: TermKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_knots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difference_order: Option<usize>,
    /// Treat a numeric column as categorical (linear terms only).
    #[serde(default)]
    pub categorical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub error: ErrorLaw,
    pub n: usize,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplineDefaults {
    pub degree: usize,
    pub inner_knots: usize,
    pub difference_order: usize,
}

impl Default for SplineDefaults {
    fn default() -> Self {
        Self { degree: 3, inner_knots: 20, difference_order: 2 }
    }
}

/// Everything a run needs; serialized verbatim into the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub tau: Vec<f64>,
    pub methods: Vec<Method>,
    pub level: f64,
    pub grid_len: usize,
    pub data: Option<DataConfig>,
    pub terms: Vec<TermConfig>,
    pub spline: SplineDefaults,
    pub chain: ChainConfig,
    pub laws: LawsConfig,
    pub scenario: Option<ScenarioConfig>,
    /// Law for `true-expectiles`, e.g. `normal(0,1)`.
    pub law: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output: None,
            tau: vec![0.5],
            methods: vec![Method::Bayes, Method::Laws],
            level: 0.95,
            grid_len: 100,
            data: None,
            terms: Vec::new(),
            spline: SplineDefaults::default(),
            chain: ChainConfig::default(),
            laws: LawsConfig::default(),
            scenario: None,
            law: None,
        }
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key was just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply `key.path=value` overrides to a parsed config document.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("override `{assignment}` is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::usage(format!("invalid override key `{key}`")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::usage(format!("override key `{key}` descends into a non-table value")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_scalar(raw.trim()));
    Ok(())
}

fn absolutize(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Parse a TOML document, apply overrides and resolve relative paths
    /// against `base_dir`.
    pub fn from_toml(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self, CliError> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::usage(format!("config: {}", e.message())))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let mut config: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::usage(format!("config: {}", e.message())))?;
        config.resolve_paths(base_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = std::path::absolute(&base).unwrap_or(base);
        Self::from_toml(&text, overrides, &base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(d) = self.data.as_mut() {
            d.path = absolutize(base, &d.path);
            if let Some(a) = d.adjacency.as_mut() {
                *a = absolutize(base, a);
            }
        }
        if let Some(o) = self.output.as_mut() {
            *o = absolutize(base, o);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.tau.is_empty() {
            return Err(CliError::usage("tau list is empty"));
        }
        for &t in &self.tau {
            crate::Asymmetry::new(t).map_err(CliError::usage)?;
        }
        if self.tau.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::usage("tau list must be strictly increasing"));
        }
        if self.methods.is_empty() {
            return Err(CliError::usage("no estimation method requested"));
        }
        crate::intervals::check_level(self.level).map_err(CliError::usage)?;
        if self.grid_len < 2 {
            return Err(CliError::usage("grid_len must be at least 2"));
        }
        Ok(())
    }

    /// Output directory: explicit flag, then config, then environment, then a default.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.clone())
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("geoexpectile-out"))
    }

    pub fn asymmetries(&self) -> Vec<crate::Asymmetry> {
        self.tau.iter().map(|&t| crate::Asymmetry::new(t).expect("validated")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_keys() {
        let text = "tau = [0.2, 0.8]\n[chain]\niterations = 100\n";
        let c = RunConfig::from_toml(
            text,
            &["chain.iterations=50".into(), "chain.burn_in=10".into(), "seed=9".into()],
            Path::new("/tmp"),
        )
        .unwrap();
        assert_eq!(c.chain.iterations, 50);
        assert_eq!(c.chain.burn_in, 10);
        assert_eq!(c.seed, 9);
        assert_eq!(c.tau, vec![0.2, 0.8]);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let err = RunConfig::from_toml("taus = [0.5]", &[], Path::new("/")).unwrap_err();
        assert_eq!(err.code, 2);
    }

    #[test]
    fn string_override_fallback() {
        let mut doc = toml::Table::new();
        apply_override(&mut doc, "law=normal(0,1)").unwrap();
        assert_eq!(doc["law"].as_str(), Some("normal(0,1)"));
    }

    #[test]
    fn relative_paths_resolved() {
        let c = RunConfig::from_toml("[data]\npath = \"d.csv\"\nresponse = \"y\"\n", &[], Path::new("/base")).unwrap();
        assert_eq!(c.data.unwrap().path, PathBuf::from("/base/d.csv"));
    }
}
