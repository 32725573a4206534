use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::backfit::{iwls_backfit, LawsConfig};
use crate::distributions::{asymmetric_loss, Asymmetry};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::terms::ModelTerm;

/// One evaluated smoothing-parameter combination.
#[derive(Debug, Clone, Serialize)]
pub struct CvCandidate {
    pub lambdas: Vec<f64>,
    /// Mean held-out asymmetric squared loss, `None` if a fold fit failed.
    pub score: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvSelection {
    pub lambdas: Vec<f64>,
    pub score: f64,
    pub candidates: Vec<CvCandidate>,
}

/// Shuffle once with the configured seed, then cut into contiguous folds.
fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed));
    let k = folds.min(n).max(1);
    (0..k).map(|f| order[f * n / k..(f + 1) * n / k].to_vec()).collect()
}

struct Folds {
    train: Vec<(Vec<f64>, Vec<ModelTerm>)>,
    test: Vec<(Vec<f64>, Vec<ModelTerm>)>,
}

impl Folds {
    fn new(y: &[f64], terms: &[ModelTerm], config: &LawsConfig) -> Self {
        let n = y.len();
        let held = fold_assignment(n, config.cv_folds, config.cv_seed);
        let mut train = Vec::with_capacity(held.len());
        let mut test = Vec::with_capacity(held.len());
        for rows in &held {
            let mut mask = vec![false; n];
            rows.iter().for_each(|&i| mask[i] = true);
            let keep: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
            let pick = |idx: &[usize]| -> (Vec<f64>, Vec<ModelTerm>) {
                (idx.iter().map(|&i| y[i]).collect(), terms.iter().map(|t| t.select_rows(idx)).collect())
            };
            train.push(pick(&keep));
            test.push(pick(rows));
        }
        Self { train, test }
    }

    fn score(&self, asym: Asymmetry, lambdas: &[f64], config: &LawsConfig) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for ((ty, tt), (hy, ht)) in self.train.iter().zip(&self.test) {
            let fit = iwls_backfit(ty, tt, asym, lambdas, config)?;
            let mut eta = vec![fit.intercept; hy.len()];
            for (t, c) in ht.iter().zip(&fit.coefficients) {
                for (e, v) in eta.iter_mut().zip(t.apply(c).iter()) {
                    *e += v;
                }
            }
            total += asymmetric_loss(hy, &eta, asym);
            count += hy.len();
        }
        Ok(total / count as f64)
    }
}

fn evaluate(folds: &Folds, asym: Asymmetry, lambdas: Vec<f64>, config: &LawsConfig) -> CvCandidate {
    match folds.score(asym, &lambdas, config) {
        Ok(s) => CvCandidate { lambdas, score: Some(s), failure: None },
        Err(e) => CvCandidate { lambdas, score: None, failure: Some(e.to_string()) },
    }
}

fn cartesian(grids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    grids.iter().fold(vec![Vec::new()], |acc, grid| {
        acc.into_iter()
            .flat_map(|prefix| {
                grid.iter().map(move |&l| {
                    let mut next = prefix.clone();
                    next.push(l);
                    next
                })
            })
            .collect()
    })
}

fn better(a: &CvCandidate, best: Option<&CvCandidate>) -> bool {
    match (a.score, best.and_then(|b| b.score)) {
        (Some(s), Some(b)) => s < b,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Choose smoothing parameters by k-fold cross-validated asymmetric loss.
/// Full grid search for up to two penalized terms, coordinate descent beyond.
pub fn select_lambda_cv(y: &[f64], terms: &[ModelTerm], asym: Asymmetry, config: &LawsConfig) -> Result<CvSelection> {
    config.validate()?;
    let penalized = terms.iter().filter(|t| t.is_penalized()).count();
    let grids = config.grids(penalized)?;
    let folds = Folds::new(y, terms, config);
    let candidates: Vec<CvCandidate> = if penalized <= 2 {
        cartesian(&grids)
            .into_par_iter()
            .map(|l| evaluate(&folds, asym, l, config))
            .collect()
    } else {
        coordinate_descent(&folds, asym, &grids, config)
    };
    let mut best: Option<&CvCandidate> = None;
    for c in &candidates {
        if better(c, best) {
            best = Some(c);
        }
    }
    match best {
        Some(b) => Ok(CvSelection {
            lambdas: b.lambdas.clone(),
            score: b.score.unwrap(),
            candidates: candidates.clone(),
        }),
        None => Err(Error::AllCandidatesFailed(
            candidates
                .iter()
                .map(|c| format!("{:?}: {}", c.lambdas, c.failure.as_deref().unwrap_or("unknown")))
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}

fn coordinate_descent(folds: &Folds, asym: Asymmetry, grids: &[Vec<f64>], config: &LawsConfig) -> Vec<CvCandidate> {
    let mut cache: BTreeMap<Vec<usize>, CvCandidate> = BTreeMap::new();
    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = grids.iter().map(|g| g.len() / 2).collect();
    let lambdas_of = |idx: &[usize]| idx.iter().zip(grids).map(|(&i, g)| g[i]).collect::<Vec<f64>>();
    for _cycle in 0..10 {
        let start = current.clone();
        for j in 0..grids.len() {
            let trials: Vec<Vec<usize>> = (0..grids[j].len())
                .map(|k| {
                    let mut idx = current.clone();
                    idx[j] = k;
                    idx
                })
                .filter(|idx| !cache.contains_key(idx))
                .collect();
            let results: Vec<(Vec<usize>, CvCandidate)> = trials
                .into_par_iter()
                .map(|idx| {
                    let c = evaluate(folds, asym, lambdas_of(&idx), config);
                    (idx, c)
                })
                .collect();
            for (idx, c) in results {
                order.push(idx.clone());
                cache.insert(idx, c);
            }
            let mut best = current.clone();
            for k in 0..grids[j].len() {
                let mut idx = current.clone();
                idx[j] = k;
                if better(&cache[&idx], cache.get(&best)) {
                    best = idx;
                }
            }
            current = best;
        }
        if current == start {
            break;
        }
    }
    order.into_iter().map(|idx| cache[&idx].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::SplineSpec;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn folds_partition_indices() {
        let folds = fold_assignment(23, 5, 1);
        assert_eq!(folds.len(), 5);
        let mut all: Vec<usize> = folds.concat();
        all.sort();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn cartesian_product_size() {
        let c = cartesian(&[vec![1.0, 2.0], vec![3.0, 4.0, 5.0]]);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![1.0, 3.0]);
        assert_eq!(c[5], vec![2.0, 5.0]);
    }

    #[test]
    fn single_candidate_is_returned() {
        let mut rng = stream(2);
        let x: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let t = ModelTerm::pspline("f", &x, SplineSpec::new(3, 8, 2, (0.0, 1.0)).unwrap()).unwrap().centered();
        let cfg = LawsConfig { lambda_grid: vec![vec![3.5]], ..Default::default() };
        let sel = select_lambda_cv(&y, &[t], Asymmetry::new(0.3).unwrap(), &cfg).unwrap();
        assert_eq!(sel.lambdas, vec![3.5]);
        assert_eq!(sel.candidates.len(), 1);
    }

    #[test]
    fn coordinate_descent_for_three_terms() {
        let mut rng = stream(4);
        let n = 80;
        let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|i| (3.0 * xs[0][i]).sin() + 0.2 * rng.sample::<f64, _>(StandardNormal)).collect();
        let terms: Vec<ModelTerm> = xs
            .iter()
            .enumerate()
            .map(|(j, x)| {
                ModelTerm::pspline(format!("f{j}"), x, SplineSpec::new(3, 5, 2, (0.0, 1.0)).unwrap())
                    .unwrap()
                    .centered()
            })
            .collect();
        let cfg = LawsConfig { lambda_grid: vec![vec![0.01, 1.0, 100.0]], ..Default::default() };
        let sel = select_lambda_cv(&y, &terms, Asymmetry::new(0.5).unwrap(), &cfg).unwrap();
        assert_eq!(sel.lambdas.len(), 3);
        let min = sel.candidates.iter().filter_map(|c| c.score).fold(f64::INFINITY, f64::min);
        assert_eq!(sel.score, min);
    }
}
