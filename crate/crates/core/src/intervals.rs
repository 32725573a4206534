//! Pointwise interval bands and order-statistic credible bounds.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point estimates with lower and upper bounds at a set of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub estimate: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Band {
    pub fn len(&self) -> usize {
        self.estimate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimate.is_empty()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }

    pub fn contains(&self, i: usize, value: f64) -> bool {
        self.lower[i] <= value && value <= self.upper[i]
    }
}

/// 1-based ranks of the equal-tailed bounds for `m` sorted draws:
/// `⌈(α/2)m⌉` and `⌊(1−α/2)m⌋`, clamped to `[1, m]`.
pub fn credible_ranks(m: usize, level: f64) -> (usize, usize) {
    let alpha = 1.0 - level;
    // Snap products that are integers up to rounding (0.025 · 1000 = 25.000000000000004).
    let snap = |x: f64| {
        let r = x.round();
        if (x - r).abs() < 1e-9 {
            r
        } else {
            x
        }
    };
    let lo = snap(0.5 * alpha * m as f64).ceil() as usize;
    let hi = snap((1.0 - 0.5 * alpha) * m as f64).floor() as usize;
    (lo.clamp(1, m), hi.clamp(1, m))
}

pub fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("interval level must lie in (0, 1), got {level}")))
    }
}

/// Equal-tailed interval and mean of a sample of draws.
pub fn equal_tailed(draws: &[f64], level: f64) -> Result<(f64, f64, f64)> {
    check_level(level)?;
    if draws.is_empty() {
        return Err(Error::InvalidParameter("no draws to summarize".into()));
    }
    let m = draws.len();
    let mean = draws.iter().sum::<f64>() / m as f64;
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = credible_ranks(m, level);
    Ok((mean, sorted[lo - 1], sorted[hi - 1]))
}

/// Column-wise credible band of a draws × points matrix.
pub fn band_from_draws(draws: &DMatrix<f64>, level: f64) -> Result<Band> {
    let mut band = Band {
        estimate: Vec::with_capacity(draws.ncols()),
        lower: Vec::with_capacity(draws.ncols()),
        upper: Vec::with_capacity(draws.ncols()),
    };
    for col in draws.column_iter() {
        let values: Vec<f64> = col.iter().cloned().collect();
        let (m, l, u) = equal_tailed(&values, level)?;
        band.estimate.push(m);
        band.lower.push(l);
        band.upper.push(u);
    }
    Ok(band)
}

/// Batch-means Monte-Carlo standard error of the mean of a chain.
pub fn batch_means_se(draws: &[f64]) -> f64 {
    let m = draws.len();
    if m < 4 {
        return f64::NAN;
    }
    let batches = ((m as f64).sqrt().floor() as usize).clamp(2, 50);
    let size = m / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| draws[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|v| (v - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}
