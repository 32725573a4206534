use geoexpectile::distributions::{
    and_left_mass, and_log_density, and_moments, and_sample, asymmetric_weight, gaussian_draw_from_precision,
    inverse_gamma_sample, sample_expectile, true_expectile, AndParams, UnivariateLaw,
};
use geoexpectile::quad::{integrate, QuadOptions};
use geoexpectile::rng::stream;
use geoexpectile::Asymmetry;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma};

fn asym(t: f64) -> Asymmetry {
    Asymmetry::new(t).unwrap()
}

// Values computed offline with 40-digit arbitrary-precision quadrature and
// root finding, independently of this crate.
const NORMAL_EXPECTILES: [(f64, f64); 5] = [
    (0.02, -1.478_183_100_104_291_3),
    (0.1, -0.861_592_112_415_828_8),
    (0.5, 0.0),
    (0.9, 0.861_592_112_415_828_9),
    (0.98, 1.478_183_100_104_291),
];
const EXPONENTIAL_EXPECTILES: [(f64, f64); 3] = [
    (0.1, 0.410_216_179_498_207_14),
    (0.8, 1.603_545_739_535_836_1),
    (0.9, 2.040_112_582_235_692),
];
const T2_EXPECTILE_090: f64 = 1.885_618_083_164_127;
// (τ, σ², mean, variance, left mass) of the density with location 0.
const AND_MOMENTS: [(f64, f64, f64, f64, f64); 3] = [
    (0.9, 1.0, -1.682_088_348_013_440_3, 4.948_356_567_255_195, 0.75),
    (0.3, 1.0, 0.503_076_786_771_646_55, 2.326_639_606_156_353_5, 0.395_643_923_738_96),
    (0.02, 4.0, 9.671_821_432_247_25, 81.966_074_264_355_39, 0.125),
];

fn quad_moments(p: &AndParams) -> (f64, f64, f64) {
    let opts = QuadOptions::default();
    let dens = |y: f64| and_log_density(y, p).exp();
    let side = |f: &dyn Fn(f64) -> f64| {
        integrate(f, f64::NEG_INFINITY, p.location, &opts).unwrap().value
            + integrate(f, p.location, f64::INFINITY, &opts).unwrap().value
    };
    let mass = side(&dens);
    let m1 = side(&|y| y * dens(y));
    let m2 = side(&|y| (y - m1) * (y - m1) * dens(y));
    (mass, m1, m2)
}

#[test]
fn and_density_integrates_to_one_at_reference_point() {
    let p = AndParams::new(0.0, 1.0, asym(0.3)).unwrap();
    let (mass, _, _) = quad_moments(&p);
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
}

#[test]
fn and_density_integrates_to_one_at_extreme_asymmetries() {
    for t in [0.02, 0.05, 0.5, 0.95, 0.98] {
        let p = AndParams::new(-0.7, 2.5, asym(t)).unwrap();
        let (mass, _, _) = quad_moments(&p);
        assert!((mass - 1.0).abs() < 1e-6, "τ={t}: mass {mass}");
    }
}

#[test]
fn and_moments_match_frozen_high_precision_values() {
    for (t, s2, mean, var, left) in AND_MOMENTS {
        let p = AndParams::new(0.0, s2, asym(t)).unwrap();
        let (m, v) = and_moments(&p);
        assert!((m - mean).abs() < 1e-12, "τ={t}: mean {m} vs {mean}");
        assert!((v - var).abs() < 1e-11, "τ={t}: variance {v} vs {var}");
        assert!((and_left_mass(p.asym) - left).abs() < 1e-14);
    }
}

#[test]
fn symmetric_and_has_gaussian_moments() {
    let (m, _) = and_moments(&AndParams::new(3.0, 1.0, asym(0.5)).unwrap());
    assert_eq!(m, 3.0);
    let (_, v) = and_moments(&AndParams::new(0.0, 1.0, asym(0.5)).unwrap());
    assert!((v - 2.0).abs() < 1e-14);
}

#[test]
fn and_density_is_continuous_at_location() {
    let p = AndParams::new(1.2, 0.8, asym(0.85)).unwrap();
    let at = and_log_density(1.2, &p);
    let eps = 1e-9;
    assert!((and_log_density(1.2 - eps, &p) - at).abs() < 1e-12);
    assert!((and_log_density(1.2 + eps, &p) - at).abs() < 1e-12);
}

#[test]
fn and_law_has_its_location_as_expectile() {
    for t in [0.05, 0.3, 0.5, 0.9] {
        let p = AndParams::new(0.4, 1.7, asym(t)).unwrap();
        let law = UnivariateLaw::asymmetric_normal(p).unwrap();
        let e = true_expectile(&law, asym(t)).unwrap();
        assert!((e - 0.4).abs() < 1e-8, "τ={t}: {e}");
    }
}

#[test]
fn and_samples_match_mass_and_expectile() {
    let t = asym(0.8);
    let p = AndParams::new(1.0, 1.0, t).unwrap();
    let n = 1_000_000;
    let draws = and_sample(&p, n, &mut stream(11));
    let below = draws.iter().filter(|&&y| y <= 1.0).count() as f64 / n as f64;
    let left = and_left_mass(t);
    let se = (left * (1.0 - left) / n as f64).sqrt();
    assert!((below - left).abs() < 4.0 * se, "{below} vs {left}");

    let e = sample_expectile(&draws, t);
    // delta-method standard error of the sample expectile
    let w: Vec<f64> = draws.iter().map(|&y| asymmetric_weight(y, e, t)).collect();
    let mean_w = w.iter().sum::<f64>() / n as f64;
    let score2 = draws.iter().zip(&w).map(|(y, wi)| (wi * (y - e)).powi(2)).sum::<f64>() / n as f64;
    let se = (score2 / n as f64).sqrt() / mean_w;
    assert!((e - 1.0).abs() < 4.0 * se, "{e}, se {se}");
}

#[test]
fn symmetric_and_sample_mean_is_location() {
    let p = AndParams::new(-2.0, 0.5, asym(0.5)).unwrap();
    let n = 1_000_000;
    let draws = and_sample(&p, n, &mut stream(3));
    let mean = draws.iter().sum::<f64>() / n as f64;
    let se = (2.0 * 0.5 / n as f64).sqrt();
    assert!((mean + 2.0).abs() < 4.0 * se);
}

#[test]
fn true_expectiles_match_frozen_values() {
    let normal = UnivariateLaw::normal(0.0, 1.0).unwrap();
    for (t, v) in NORMAL_EXPECTILES {
        let e = true_expectile(&normal, asym(t)).unwrap();
        assert!((e - v).abs() < 1e-8, "normal τ={t}: {e} vs {v}");
    }
    let exponential = UnivariateLaw::exponential(1.0).unwrap();
    for (t, v) in EXPONENTIAL_EXPECTILES {
        let e = true_expectile(&exponential, asym(t)).unwrap();
        assert!((e - v).abs() < 1e-8, "exponential τ={t}: {e} vs {v}");
    }
    let t2 = UnivariateLaw::student_t(2.0).unwrap();
    let e = true_expectile(&t2, asym(0.9)).unwrap();
    assert!((e - T2_EXPECTILE_090).abs() < 1e-7, "t2: {e}");
    let uniform = UnivariateLaw::uniform(0.0, 1.0).unwrap();
    assert!((true_expectile(&uniform, asym(0.5)).unwrap() - 0.5).abs() < 1e-10);
}

#[test]
fn true_expectile_is_strictly_increasing_in_tau() {
    for law in [
        UnivariateLaw::normal(1.0, 4.0).unwrap(),
        UnivariateLaw::exponential(0.5).unwrap(),
        UnivariateLaw::student_t(3.0).unwrap(),
    ] {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..20 {
            let e = true_expectile(&law, asym(i as f64 / 20.0)).unwrap();
            assert!(e > prev, "{}: not increasing at τ={}", law.name(), i as f64 / 20.0);
            prev = e;
        }
    }
}

#[test]
fn inverse_gamma_draws_have_expected_mean_and_reciprocal_law() {
    let mut rng = stream(5);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| inverse_gamma_sample(3.0, 2.0, &mut rng).unwrap()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    // IG(3, 2) has variance 1, so the standard error is 1/√n.
    assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");

    // Kolmogorov-Smirnov test of the reciprocals against Gamma(3, rate 2) at the 1% level.
    let gamma = Gamma::new(3.0, 2.0).unwrap();
    let m = 100_000;
    let mut recip: Vec<f64> = draws[..m].iter().map(|d| 1.0 / d).collect();
    recip.sort_by(f64::total_cmp);
    let d = recip
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = gamma.cdf(x);
            (f - i as f64 / m as f64).abs().max(((i + 1) as f64 / m as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.628 / (m as f64).sqrt(), "KS distance {d}");
}

#[test]
fn inverse_gamma_stream_is_reproducible() {
    let a: Vec<f64> = {
        let mut r = stream(42);
        (0..10).map(|_| inverse_gamma_sample(2.0, 1.0, &mut r).unwrap()).collect()
    };
    let b: Vec<f64> = {
        let mut r = stream(42);
        (0..10).map(|_| inverse_gamma_sample(2.0, 1.0, &mut r).unwrap()).collect()
    };
    assert_eq!(a, b);
}

#[test]
fn precision_draws_match_direct_solve() {
    let mut rng = stream(9);
    let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.5 + if i == j { 1.0 } else { 0.0 });
    let q = &a * a.transpose() + DMatrix::identity(5, 5) * 0.5;
    let b = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0]);
    let mean = q.clone().lu().solve(&b).unwrap();
    let cov = q.clone().try_inverse().unwrap();
    let n = 100_000;
    let mut acc = DVector::zeros(5);
    for _ in 0..n {
        acc += gaussian_draw_from_precision(q.clone(), &b, &mut rng).unwrap();
    }
    acc /= n as f64;
    for i in 0..5 {
        let se = (cov[(i, i)] / n as f64).sqrt();
        assert!((acc[i] - mean[i]).abs() < 4.0 * se, "coordinate {i}: {} vs {}", acc[i], mean[i]);
    }
}

#[test]
fn one_dimensional_precision_draws() {
    let mut rng = stream(2);
    let q = DMatrix::from_element(1, 1, 4.0);
    let b = DVector::from_element(1, 8.0);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| gaussian_draw_from_precision(q.clone(), &b, &mut rng).unwrap()[0]).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 2.0).abs() < 4.0 * (0.25 / n as f64).sqrt());
    assert!((var - 0.25).abs() < 0.01);
}

#[test]
fn identity_precision_gives_standard_draws() {
    let mut rng = stream(4);
    let n = 100_000;
    let mut second = DMatrix::<f64>::zeros(3, 3);
    for _ in 0..n {
        let x = gaussian_draw_from_precision(DMatrix::identity(3, 3), &DVector::zeros(3), &mut rng).unwrap();
        second += &x * x.transpose();
    }
    second /= n as f64;
    let err = (second - DMatrix::<f64>::identity(3, 3)).amax();
    assert!(err < 0.02, "max covariance error {err}");
}

#[test]
fn non_positive_definite_precision_is_rejected() {
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(gaussian_draw_from_precision(q, &DVector::zeros(2), &mut stream(1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn and_mass_and_moments_agree_with_quadrature(t in 0.02f64..0.98, s2 in 0.1f64..5.0, loc in -3.0f64..3.0) {
        let p = AndParams::new(loc, s2, asym(t)).unwrap();
        let (mass, m1, var) = quad_moments(&p);
        let (mean, variance) = and_moments(&p);
        prop_assert!((mass - 1.0).abs() < 1e-6);
        prop_assert!((m1 - mean).abs() < 1e-8, "mean {} vs {}", m1, mean);
        prop_assert!((var - variance).abs() < 1e-8, "variance {} vs {}", var, variance);
    }

    #[test]
    fn weight_takes_one_of_two_values(y in -10.0f64..10.0, eta in -10.0f64..10.0, t in 0.01f64..0.99) {
        let w = asymmetric_weight(y, eta, asym(t));
        if y <= eta { prop_assert_eq!(w, 1.0 - t) } else { prop_assert_eq!(w, t) }
        prop_assert_eq!(asymmetric_weight(y, eta, asym(0.5)), 0.5);
    }
}
