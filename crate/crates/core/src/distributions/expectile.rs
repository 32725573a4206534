use super::asymmetry::Asymmetry;
use super::law::UnivariateLaw;
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::roots::brent;

/// Tolerance on the partial-moment residual at the returned root.
pub const EXPECTILE_RESIDUAL_TOL: f64 = 1e-10;

fn oracle_quad() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-13,
        max_subdivisions: 8000,
    }
}

/// Partial moments `(∫_{y≤e}(e−y)f dy, ∫_{y>e}(y−e)f dy)`.
pub fn partial_moments(law: &UnivariateLaw, e: f64) -> Result<(f64, f64)> {
    let (lo, hi) = law.support();
    let opts = oracle_quad();
    let lower = if e > lo {
        integrate(|y| (e - y) * law.density(y), lo, e.min(hi), &opts)?.value
    } else {
        0.0
    };
    let upper = if e < hi {
        integrate(|y| (y - e) * law.density(y), e.max(lo), hi, &opts)?.value
    } else {
        0.0
    };
    Ok((lower, upper))
}

/// `g(e) = (1−τ)·∫_{y≤e}(e−y)f − τ·∫_{y>e}(y−e)f`, increasing in `e`,
/// zero at the τ-expectile.
pub fn expectile_residual(law: &UnivariateLaw, asym: Asymmetry, e: f64) -> Result<f64> {
    let tau = asym.tau();
    let (lower, upper) = partial_moments(law, e)?;
    Ok((1.0 - tau) * lower - tau * upper)
}

/// τ-expectile of a law with finite first absolute moment.
pub fn true_expectile(law: &UnivariateLaw, asym: Asymmetry) -> Result<f64> {
    let mean = law.mean()?;
    if asym.is_symmetric() {
        return Ok(mean);
    }
    let scale = law.scale_hint()?;
    let mut half_width = 10.0 * scale;
    let g = |e: f64| expectile_residual(law, asym, e);
    // Expectiles lie on the same side of the mean as τ lies of ½.
    let (mut a, mut b) = if asym.tau() > 0.5 {
        (mean, mean + half_width)
    } else {
        (mean - half_width, mean)
    };
    let mut expansions = 0;
    loop {
        let ga = g(a)?;
        let gb = g(b)?;
        if ga <= 0.0 && gb >= 0.0 {
            break;
        }
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Numerical(format!(
                "could not bracket the {}-expectile of {}",
                asym.tau(),
                law.name()
            )));
        }
        half_width *= 2.0;
        if gb < 0.0 {
            b = mean + half_width;
        }
        if ga > 0.0 {
            a = mean - half_width;
        }
    }
    let x_tol = 1e-15 * (1.0 + mean.abs() + scale);
    let root = brent(g, a, b, x_tol, 0.1 * EXPECTILE_RESIDUAL_TOL, 500)?;
    let resid = expectile_residual(law, asym, root)?;
    if resid.abs() >= EXPECTILE_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "expectile residual {resid:e} above tolerance for {}",
            law.name()
        )));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau(t: f64) -> Asymmetry {
        Asymmetry::new(t).unwrap()
    }

    #[test]
    fn half_is_mean() {
        assert_eq!(true_expectile(&UnivariateLaw::normal(0.0, 1.0).unwrap(), tau(0.5)).unwrap(), 0.0);
        let u = UnivariateLaw::uniform(0.0, 1.0).unwrap();
        assert!((true_expectile(&u, tau(0.5)).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn uniform_closed_form() {
        // For U(0,1): (1−τ)e²/2 = τ(1−e)²/2  ⇒  e = √τ / (√τ + √(1−τ)).
        let u = UnivariateLaw::uniform(0.0, 1.0).unwrap();
        for t in [0.05f64, 0.3, 0.9] {
            let want = t.sqrt() / (t.sqrt() + (1.0 - t).sqrt());
            assert!((true_expectile(&u, tau(t)).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn residual_outside_finite_support() {
        let u = UnivariateLaw::uniform(0.0, 1.0).unwrap();
        let (lo, up) = partial_moments(&u, 2.0).unwrap();
        assert!((lo - 1.5).abs() < 1e-12);
        assert_eq!(up, 0.0);
        let (lo, up) = partial_moments(&u, -1.0).unwrap();
        assert_eq!(lo, 0.0);
        assert!((up - 1.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pairs_reflect() {
        let law = UnivariateLaw::student_t(2.0).unwrap();
        let lo = true_expectile(&law, tau(0.1)).unwrap();
        let hi = true_expectile(&law, tau(0.9)).unwrap();
        assert!((lo + hi).abs() < 1e-8);
    }
}
