use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use super::and::{and_log_density, and_moments, AndParams};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

type LogDensityFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A univariate continuous law given by its log-density on a support interval.
#[derive(Clone)]
pub struct UnivariateLaw {
    name: String,
    log_density: Arc<LogDensityFn>,
    support: (f64, f64),
    mean: Option<f64>,
    scale_hint: Option<f64>,
}

impl fmt::Debug for UnivariateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnivariateLaw")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("mean", &self.mean)
            .finish()
    }
}

impl UnivariateLaw {
    pub fn new<F>(name: impl Into<String>, log_density: F, support: (f64, f64), mean: Option<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support.0 < support.1) {
            return Err(Error::InvalidParameter(format!(
                "empty support ({}, {})",
                support.0, support.1
            )));
        }
        Ok(Self {
            name: name.into(),
            log_density: Arc::new(log_density),
            support,
            mean,
            scale_hint: None,
        })
    }

    fn with_scale(mut self, scale: f64) -> Self {
        self.scale_hint = Some(scale);
        self
    }

    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "normal({mean}, {variance}) needs finite mean and positive variance"
            )));
        }
        let norm = -0.5 * (2.0 * PI * variance).ln();
        Ok(Self::new(
            format!("normal({mean},{variance})"),
            move |x| norm - (x - mean) * (x - mean) / (2.0 * variance),
            (f64::NEG_INFINITY, f64::INFINITY),
            Some(mean),
        )?
        .with_scale(variance.sqrt()))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponential rate must be positive, got {rate}")));
        }
        let log_rate = rate.ln();
        Ok(Self::new(
            format!("exponential({rate})"),
            move |x| log_rate - rate * x,
            (0.0, f64::INFINITY),
            Some(1.0 / rate),
        )?
        .with_scale(1.0 / rate))
    }

    /// Student t with `df` degrees of freedom; `df > 1` so the mean exists.
    pub fn student_t(df: f64) -> Result<Self> {
        if !(df > 1.0 && df.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t law needs df > 1 for a finite mean, got {df}"
            )));
        }
        let norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln();
        Ok(Self::new(
            format!("t({df})"),
            move |x| norm - 0.5 * (df + 1.0) * (x * x / df).ln_1p(),
            (f64::NEG_INFINITY, f64::INFINITY),
            Some(0.0),
        )?
        .with_scale(1.0))
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("uniform({a}, {b}) needs a < b")));
        }
        let log_d = -(b - a).ln();
        Ok(Self::new(format!("uniform({a},{b})"), move |_| log_d, (a, b), Some(0.5 * (a + b)))?
            .with_scale(b - a))
    }

    pub fn asymmetric_normal(p: AndParams) -> Result<Self> {
        let (mean, var) = and_moments(&p);
        Ok(Self::new(
            format!("and({},{},{})", p.location, p.scale2, p.asym.tau()),
            move |x| and_log_density(x, &p),
            (f64::NEG_INFINITY, f64::INFINITY),
            Some(mean),
        )?
        .with_scale(var.sqrt()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            f64::NEG_INFINITY
        } else {
            (self.log_density)(x)
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// Exact mean when known, otherwise computed by quadrature.
    pub fn mean(&self) -> Result<f64> {
        match self.mean {
            Some(m) => Ok(m),
            None => {
                let (lo, hi) = self.support;
                Ok(integrate(|x| x * self.density(x), lo, hi, &QuadOptions::default())?.value)
            }
        }
    }

    /// A spread measure used to size root-search brackets: the known scale of
    /// built-in laws, else the mean absolute deviation.
    pub fn scale_hint(&self) -> Result<f64> {
        if let Some(s) = self.scale_hint {
            return Ok(s);
        }
        let m = self.mean()?;
        let (lo, hi) = self.support;
        let mad = integrate(|x| (x - m).abs() * self.density(x), lo, hi, &QuadOptions::default())?.value;
        Ok(mad.max(f64::EPSILON))
    }
}

/// Parse a law spec such as `normal(0,1)`, `exponential(2)`, `t(2)`, `uniform(0,1)`.
pub fn parse_law(spec: &str) -> Result<UnivariateLaw> {
    let spec = spec.trim();
    let open = spec
        .find('(')
        .ok_or_else(|| Error::InvalidParameter(format!("law `{spec}` lacks a parameter list")))?;
    if !spec.ends_with(')') {
        return Err(Error::InvalidParameter(format!("law `{spec}` lacks a closing parenthesis")));
    }
    let name = spec[..open].trim().to_ascii_lowercase();
    let params: Vec<f64> = spec[open + 1..spec.len() - 1]
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad law parameter `{}`", s.trim())))
        })
        .collect::<Result<_>>()?;
    law_from_parts(&name, &params)
}

pub fn law_from_parts(name: &str, params: &[f64]) -> Result<UnivariateLaw> {
    let arity = |k: usize| {
        if params.len() == k {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "law `{name}` takes {k} parameter(s), got {}",
                params.len()
            )))
        }
    };
    match name {
        "normal" => {
            arity(2)?;
            UnivariateLaw::normal(params[0], params[1])
        }
        "exponential" => {
            arity(1)?;
            UnivariateLaw::exponential(params[0])
        }
        "t" => {
            arity(1)?;
            UnivariateLaw::student_t(params[0])
        }
        "uniform" => {
            arity(2)?;
            UnivariateLaw::uniform(params[0], params[1])
        }
        other => Err(Error::InvalidParameter(format!("unknown law `{other}`"))),
    }
}
