use crate::error::{Error, Result};
use crate::intervals::Band;

/// Euclidean norm of `f_true − f_hat` (not divided by the length).
pub fn rmse(f_true: &[f64], f_hat: &[f64]) -> Result<f64> {
    if f_true.len() != f_hat.len() {
        return Err(Error::DimensionMismatch {
            context: "rmse arguments".into(),
            expected: f_true.len(),
            actual: f_hat.len(),
        });
    }
    Ok(f_true.iter().zip(f_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

fn check_bands(bands: &[Band], points: usize) -> Result<()> {
    if bands.is_empty() {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    for b in bands {
        if b.len() != points || b.lower.len() != points || b.upper.len() != points {
            return Err(Error::DimensionMismatch {
                context: "band length".into(),
                expected: points,
                actual: b.len(),
            });
        }
    }
    Ok(())
}

/// Fraction of replications whose band contains the true value at each grid point.
pub fn coverage(bands: &[Band], f_true: &[f64]) -> Result<Vec<f64>> {
    check_bands(bands, f_true.len())?;
    let reps = bands.len() as f64;
    Ok((0..f_true.len())
        .map(|i| bands.iter().filter(|b| b.contains(i, f_true[i])).count() as f64 / reps)
        .collect())
}

/// Pointwise minimum and maximum band width over replications.
pub fn interval_widths(bands: &[Band]) -> Result<(Vec<f64>, Vec<f64>)> {
    let points = bands.first().map(|b| b.len()).unwrap_or(0);
    check_bands(bands, points)?;
    let mut min = vec![f64::INFINITY; points];
    let mut max = vec![f64::NEG_INFINITY; points];
    for b in bands {
        for (i, w) in b.widths().into_iter().enumerate() {
            min[i] = min[i].min(w);
            max[i] = max[i].max(w);
        }
    }
    Ok((min, max))
}

/// Pointwise mean band width over replications.
pub fn mean_widths(bands: &[Band]) -> Result<Vec<f64>> {
    let points = bands.first().map(|b| b.len()).unwrap_or(0);
    check_bands(bands, points)?;
    let mut sum = vec![0.0; points];
    for b in bands {
        for (s, w) in sum.iter_mut().zip(b.widths()) {
            *s += w;
        }
    }
    Ok(sum.into_iter().map(|s| s / bands.len() as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(lo: f64, hi: f64, n: usize) -> Band {
        Band { estimate: vec![0.5 * (lo + hi); n], lower: vec![lo; n], upper: vec![hi; n] }
    }

    #[test]
    fn pythagorean_rmse() {
        assert_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn infinite_and_degenerate_bands() {
        let truth = [1.0, 2.0];
        assert_eq!(coverage(&[band(f64::NEG_INFINITY, f64::INFINITY, 2)], &truth).unwrap(), vec![1.0, 1.0]);
        assert_eq!(coverage(&[band(0.0, 0.0, 2)], &truth).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn widths_extremes() {
        let bands = [band(0.0, 1.0, 1), band(0.0, 3.0, 1), band(1.0, 3.0, 1)];
        let (min, max) = interval_widths(&bands).unwrap();
        assert_eq!((min[0], max[0]), (1.0, 3.0));
        assert_eq!(mean_widths(&bands).unwrap(), vec![2.0]);
    }

    #[test]
    fn exact_fraction() {
        let bands: Vec<Band> = (0..1000).map(|k| if k < 950 { band(0.0, 2.0, 1) } else { band(5.0, 6.0, 1) }).collect();
        assert_eq!(coverage(&bands, &[1.0]).unwrap(), vec![0.95]);
    }
}
