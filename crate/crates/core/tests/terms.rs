use geoexpectile::terms::{
    apply_centering, assemble_predictor, bspline_design, difference_matrix, difference_penalty, mrf_design,
    mrf_precision, parse_adjacency, AdjacencyGraph, ModelTerm, SplineSpec,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-9 * top).count()
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn path_graph(s: usize) -> AdjacencyGraph {
    let labels: Vec<String> = (0..s).map(|i| format!("r{i}")).collect();
    let pairs: Vec<(String, String)> = (1..s).map(|i| (labels[i - 1].clone(), labels[i].clone())).collect();
    AdjacencyGraph::new(&labels, &pairs).unwrap()
}

#[test]
fn piecewise_constant_basis_is_two_bin_indicator() {
    let spec = SplineSpec::new(0, 1, 1, (0.0, 2.0)).unwrap();
    let b = bspline_design(&[0.0, 0.5, 1.5, 2.0], &spec).unwrap();
    assert_eq!(b.ncols(), 2);
    let expected = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
    assert_eq!(b, expected);
}

#[test]
fn design_rejects_points_outside_domain() {
    let spec = SplineSpec::cubic_default((0.0, 1.0)).unwrap();
    assert!(bspline_design(&[0.5, 1.2], &spec).is_err());
    assert!(SplineSpec::new(3, 5, 2, (1.0, 1.0)).is_err());
}

#[test]
fn first_order_penalty_on_three_coefficients() {
    let k = difference_penalty(3, 1).unwrap();
    let expected = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
    assert_eq!(k, expected);
    assert!(difference_penalty(2, 2).is_err());
}

#[test]
fn second_order_penalty_annihilates_linear_sequences() {
    let k = difference_penalty(12, 2).unwrap();
    let ones = DVector::from_element(12, 1.0);
    let ramp = DVector::from_fn(12, |i, _| (i + 1) as f64);
    assert!((&k * ones).amax() < 1e-12);
    assert!((&k * ramp).amax() < 1e-12);
    let square = DVector::from_fn(12, |i, _| (i * i) as f64);
    assert!((&k * square).amax() > 0.1);
}

#[test]
fn two_region_laplacian_and_path_rank() {
    let g = AdjacencyGraph::new(&["A", "B"], &[("A", "B")]).unwrap();
    assert_eq!(mrf_precision(&g), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    let k = mrf_precision(&path_graph(4));
    assert_eq!(rank(&k), 3);
}

#[test]
fn disconnected_graph_loses_one_rank_per_component() {
    let g = AdjacencyGraph::new(&["a", "b", "c", "d", "e"], &[("a", "b"), ("c", "d")]).unwrap();
    assert_eq!(g.connected_components(), 3);
    assert_eq!(rank(&mrf_precision(&g)), 2);
    let term = ModelTerm::mrf("s", &["a", "b", "c", "d", "e"], g).unwrap();
    assert_eq!(term.penalty_rank(), 2);
}

#[test]
fn region_incidence_matrix() {
    let g = AdjacencyGraph::new(&["A", "B"], &[("A", "B")]).unwrap();
    let d = mrf_design(&["A", "B", "A"], &g).unwrap();
    assert_eq!(d, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]));
    assert_eq!(d.row_sum().as_slice(), &[2.0, 1.0]);
    assert!(mrf_design(&["A", "C"], &g).is_err());
}

#[test]
fn adjacency_file_must_be_symmetric() {
    let g = parse_adjacency("a: b c\nb: a\nc: a\n").unwrap();
    assert_eq!(g.edge_count(), 2);
    assert!(parse_adjacency("a: b\nb:\n").is_err());
    assert!(parse_adjacency("a: a\n").is_err());
}

#[test]
fn centering_preserves_predictor_span() {
    let x: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin().abs() * 3.0).collect();
    let spec = SplineSpec::new(3, 6, 2, (0.0, 3.0)).unwrap();
    let raw = ModelTerm::pspline("f", &x, spec).unwrap();
    let centered = apply_centering(&raw);
    assert_eq!(centered.width(), raw.width() - 1);
    let one = DMatrix::from_element(60, 1, 1.0);
    let stacked_raw = hstack(&one, raw.design());
    let stacked_centered = hstack(&one, centered.design());
    let joint = hstack(&stacked_raw, &stacked_centered);
    let r = rank(&stacked_raw);
    assert_eq!(rank(&stacked_centered), r);
    assert_eq!(rank(&joint), r);
}

#[test]
fn centering_is_idempotent_in_fitted_values() {
    let regions = ["a", "b", "c", "a", "d", "c", "b", "a"];
    let term = ModelTerm::mrf("s", &regions, path_graph_abcd()).unwrap();
    let once = apply_centering(&term);
    let twice = apply_centering(&once);
    assert_eq!(once.width(), twice.width());
    let g = DVector::from_fn(once.width(), |i, _| (i as f64 + 1.0).ln() - 0.4);
    assert!((once.apply(&g) - twice.apply(&g)).amax() < 1e-12);
}

fn path_graph_abcd() -> AdjacencyGraph {
    AdjacencyGraph::new(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "d")]).unwrap()
}

#[test]
fn predictor_assembly() {
    let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0, -2.0, 1.0]);
    let lin = ModelTerm::linear("x", x.clone(), vec!["a".into(), "b".into()]).unwrap();
    let beta = DVector::from_vec(vec![0.3, -1.2]);
    let eta = assemble_predictor(&[lin.clone()], &[beta.clone()], 0.0).unwrap();
    let direct = &x * &beta;
    assert_eq!(eta, direct.as_slice());

    let constant = assemble_predictor(&[lin.clone()], &[DVector::zeros(2)], 2.5).unwrap();
    assert!(constant.iter().all(|&v| v == 2.5));
    assert!(assemble_predictor(&[lin], &[DVector::zeros(3)], 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spline_rows_partition_unity_with_local_support(
        degree in 0usize..5,
        inner in 1usize..25,
        order in 1usize..4,
        xs in prop::collection::vec(0.0f64..1.0, 1..40),
    ) {
        prop_assume!(inner + degree + 1 > order);
        let spec = SplineSpec::new(degree, inner, order, (-1.0, 2.0)).unwrap();
        let x: Vec<f64> = xs.iter().map(|u| -1.0 + 3.0 * u).collect();
        let b = bspline_design(&x, &spec).unwrap();
        prop_assert_eq!(b.ncols(), inner + degree + 1);
        for row in b.row_iter() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().filter(|v| **v != 0.0).count() <= degree + 1);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
        }
        let term = ModelTerm::pspline("f", &x, spec).unwrap();
        prop_assert_eq!(term.penalty_rank(), b.ncols() - order);
    }

    #[test]
    fn penalty_quadratic_form_is_sum_of_squared_differences(
        order in 1usize..4,
        beta in prop::collection::vec(-5.0f64..5.0, 5..15),
    ) {
        let k = beta.len();
        let pen = difference_penalty(k, order).unwrap();
        let b = DVector::from_vec(beta.clone());
        let quad = b.dot(&(&pen * &b));
        let mut diffs = beta.clone();
        for _ in 0..order {
            diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        }
        let direct: f64 = diffs.iter().map(|d| d * d).sum();
        prop_assert!((quad - direct).abs() < 1e-12 * direct.max(1.0) * 100.0);
        prop_assert_eq!(difference_matrix(k, order).unwrap().nrows(), k - order);
        let eig = pen.symmetric_eigen().eigenvalues;
        let top = eig.max();
        prop_assert!(eig.min() >= -1e-10 * top);
    }

    #[test]
    fn mrf_quadratic_form_is_sum_over_edges(
        edges in prop::collection::btree_set((0usize..7, 0usize..7), 1..15),
        beta in prop::collection::vec(-3.0f64..3.0, 7),
    ) {
        let labels: Vec<String> = (0..7).map(|i| i.to_string()).collect();
        let pairs: Vec<(String, String)> = edges
            .iter()
            .filter(|(a, b)| a < b)
            .map(|(a, b)| (labels[*a].clone(), labels[*b].clone()))
            .collect();
        let g = AdjacencyGraph::new(&labels, &pairs).unwrap();
        let k = mrf_precision(&g);
        let b = DVector::from_vec(beta.clone());
        let direct: f64 = g.edges().map(|(s, t)| (beta[s] - beta[t]).powi(2)).sum();
        prop_assert!((b.dot(&(&k * &b)) - direct).abs() < 1e-10);
        for i in 0..7 {
            prop_assert!(k.row(i).sum().abs() < 1e-15);
            let off: f64 = (0..7).filter(|&j| j != i).map(|j| k[(i, j)].abs()).sum();
            prop_assert!(k[(i, i)] >= off);
        }
        prop_assert_eq!(rank(&k), 7 - g.connected_components());
    }

    #[test]
    fn centered_terms_sum_to_zero(
        xs in prop::collection::vec(0.0f64..1.0, 30..80),
        seed in 0u64..1000,
    ) {
        let spec = SplineSpec::new(3, 8, 2, (0.0, 1.0)).unwrap();
        let term = ModelTerm::pspline("f", &xs, spec).unwrap().centered();
        let g = DVector::from_fn(term.width(), |i, _| ((i as u64 * 31 + seed) % 17) as f64 - 8.0);
        prop_assert!(term.apply(&g).sum().abs() < 1e-10 * g.amax().max(1.0) * xs.len() as f64);
    }

    #[test]
    fn assembly_is_additive(
        a in prop::collection::vec(-2.0f64..2.0, 2),
        b in prop::collection::vec(-2.0f64..2.0, 3),
        c in -3.0f64..3.0,
    ) {
        let x1 = DMatrix::from_fn(10, 2, |i, j| ((i + 1) * (j + 2)) as f64 / 7.0);
        let spec = SplineSpec::new(2, 1, 1, (0.0, 1.0)).unwrap();
        let z: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let t1 = ModelTerm::linear("x", x1, vec!["p".into(), "q".into()]).unwrap();
        let t2 = ModelTerm::pspline("f", &z, spec).unwrap().centered();
        let ca = DVector::from_vec(a);
        let cb = DVector::from_vec(b);
        let joint = assemble_predictor(&[t1.clone(), t2.clone()], &[ca.clone(), cb.clone()], c).unwrap();
        let first = assemble_predictor(&[t1], &[ca], c).unwrap();
        let second = assemble_predictor(&[t2], &[cb], 0.0).unwrap();
        for i in 0..10 {
            prop_assert!((joint[i] - first[i] - second[i]).abs() < 1e-12);
        }
    }
}
