//! Generalization metrics, K-fold cross-validation and grid search.

use crate::seed::derive_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("cross-validation needs at least 2 folds, got {0}")]
    Folds(usize),
    #[error("cannot split {requests} requests into {folds} folds")]
    TooFew { requests: usize, folds: usize },
    #[error("grid search has no cells to evaluate")]
    EmptyGrid,
    #[error("{0}")]
    Job(String),
}

/// Counts of predictions against known decisions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Confusion {
        let mut c = Confusion::default();
        for (predicted, actual) in pairs {
            match (predicted, actual) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    fn ratio(num: usize, den: usize) -> Option<f64> {
        (den > 0).then(|| num as f64 / den as f64)
    }

    pub fn tpr(&self) -> Option<f64> {
        Self::ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Option<f64> {
        Self::ratio(self.fp, self.fp + self.tn)
    }

    pub fn precision(&self) -> Option<f64> {
        Self::ratio(self.tp, self.tp + self.fp)
    }
}

/// Metrics of one policy on one test set. Ratios with a zero denominator
/// are absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub precision: Option<f64>,
    pub complexity: f64,
    /// Fraction of undecided user-permission pairs the policy grants.
    pub over_grant: Option<f64>,
}

impl Metrics {
    pub fn new(c: &Confusion, complexity: f64) -> Metrics {
        Metrics {
            tpr: c.tpr(),
            fpr: c.fpr(),
            precision: c.precision(),
            complexity,
            over_grant: None,
        }
    }

    /// Per-field mean over the values that are defined.
    pub fn mean(ms: &[Metrics]) -> Metrics {
        fn avg(name: &str, xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
            let (mut s, mut n, mut missing) = (0.0, 0usize, 0usize);
            for x in xs {
                match x {
                    Some(x) => {
                        s += x;
                        n += 1;
                    }
                    None => missing += 1,
                }
            }
            if missing > 0 && n > 0 {
                log::warn!("{name} undefined in {missing} folds; averaging the other {n}");
            }
            (n > 0).then(|| s / n as f64)
        }
        Metrics {
            tpr: avg("tpr", ms.iter().map(|m| m.tpr)),
            fpr: avg("fpr", ms.iter().map(|m| m.fpr)),
            precision: avg("precision", ms.iter().map(|m| m.precision)),
            complexity: avg("complexity", ms.iter().map(|m| Some(m.complexity))).unwrap_or(0.0),
            over_grant: avg("over_grant", ms.iter().map(|m| m.over_grant)),
        }
    }
}

/// A seeded partition of `0..n` into folds whose sizes differ by at most 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Indices outside fold `k`, ascending.
    pub fn training(&self, k: usize) -> Vec<usize> {
        let mut t: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        t.sort_unstable();
        t
    }
}

pub fn kfold(n: usize, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::Folds(k));
    }
    if n < k {
        return Err(EvalError::TooFew { requests: n, folds: k });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (i, x) in idx.into_iter().enumerate() {
        folds[i % k].push(x);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { seed, folds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub mean: Metrics,
    pub folds: Vec<Metrics>,
}

/// Runs `job(fold, training, test, seed)` for every fold in parallel and
/// averages the returned metrics. Fold seeds derive from `seed`.
pub fn crossval<E: std::fmt::Display + Send>(
    n: usize,
    k: usize,
    seed: u64,
    job: impl Fn(usize, &[usize], &[usize], u64) -> Result<Metrics, E> + Sync,
) -> Result<CrossvalReport, EvalError> {
    let plan = kfold(n, k, seed)?;
    let folds = (0..k)
        .into_par_iter()
        .map(|i| {
            job(i, &plan.training(i), &plan.folds[i], derive_seed(seed, i as u64))
                .map_err(|e| EvalError::Job(format!("fold {i}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CrossvalReport {
        mean: Metrics::mean(&folds),
        folds,
    })
}

pub type GridParams = BTreeMap<String, f64>;

/// Cartesian product of the candidate sets in name order, the last name
/// varying fastest. With a budget below the product size, a seeded sample
/// of `budget` cells is kept in grid order.
pub fn grid_cells(
    candidates: &BTreeMap<String, Vec<f64>>,
    budget: Option<usize>,
    seed: u64,
) -> Vec<GridParams> {
    let mut cells = vec![GridParams::new()];
    for (name, values) in candidates {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.insert(name.clone(), *v);
                    c
                })
            })
            .collect();
    }
    match budget {
        Some(b) if b < cells.len() => {
            let mut keep: Vec<usize> = (0..cells.len()).collect();
            keep.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            keep.truncate(b);
            keep.sort_unstable();
            keep.into_iter().map(|i| cells[i].clone()).collect()
        }
        _ => cells,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: GridParams,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub table: Vec<GridRow>,
    pub best: usize,
    /// False when no cell met the FPR cap and `best` is the lowest-FPR cell.
    pub meets_cap: bool,
}

impl GridOutcome {
    pub fn best_row(&self) -> &GridRow {
        &self.table[self.best]
    }
}

/// Index of the highest-TPR row with `FPR ≤ cap` (earliest on ties), or
/// else of the lowest-FPR row, flagged by `false`.
pub fn select(table: &[GridRow], fpr_cap: f64) -> Option<(usize, bool)> {
    let key = |o: Option<f64>, missing: f64| o.unwrap_or(missing);
    let feasible = table
        .iter()
        .enumerate()
        .filter(|(_, r)| r.metrics.fpr.is_some_and(|f| f <= fpr_cap))
        .fold(None::<(usize, f64)>, |best, (i, r)| {
            let t = key(r.metrics.tpr, -1.0);
            match best {
                Some((_, bt)) if bt >= t => best,
                _ => Some((i, t)),
            }
        });
    if let Some((i, _)) = feasible {
        return Some((i, true));
    }
    table
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, r)| {
            let f = key(r.metrics.fpr, f64::INFINITY);
            match best {
                Some((_, bf)) if bf <= f => best,
                _ => Some((i, f)),
            }
        })
        .map(|(i, _)| (i, false))
}

/// Evaluates every grid cell in parallel and selects by [`select`].
pub fn grid_search<E: std::fmt::Display + Send>(
    candidates: &BTreeMap<String, Vec<f64>>,
    budget: Option<usize>,
    fpr_cap: f64,
    seed: u64,
    eval: impl Fn(&GridParams) -> Result<Metrics, E> + Sync,
) -> Result<GridOutcome, EvalError> {
    let cells = grid_cells(candidates, budget, seed);
    let table = cells
        .into_par_iter()
        .map(|params| {
            let metrics = eval(&params).map_err(|e| EvalError::Job(format!("{params:?}: {e}")))?;
            Ok(GridRow { params, metrics })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let (best, meets_cap) = select(&table, fpr_cap).ok_or(EvalError::EmptyGrid)?;
    if !meets_cap {
        log::warn!("no grid cell reaches FPR <= {fpr_cap}; falling back to the lowest FPR");
    }
    Ok(GridOutcome {
        table,
        best,
        meets_cap,
    })
}

/// CSV with one column per parameter followed by the metrics.
pub fn grid_csv(outcome: &GridOutcome) -> Result<String, csv::Error> {
    let names: Vec<String> = outcome
        .table
        .first()
        .map(|r| r.params.keys().cloned().collect())
        .unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = names.clone();
    header.extend(["tpr", "fpr", "precision", "complexity", "over_grant", "selected"].map(String::from));
    w.write_record(&header)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for (i, r) in outcome.table.iter().enumerate() {
        let mut row: Vec<String> = names.iter().map(|n| r.params[n].to_string()).collect();
        row.extend([
            opt(r.metrics.tpr),
            opt(r.metrics.fpr),
            opt(r.metrics.precision),
            r.metrics.complexity.to_string(),
            opt(r.metrics.over_grant),
            (i == outcome.best).to_string(),
        ]);
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(tpr: f64, fpr: f64) -> GridRow {
        GridRow {
            params: GridParams::new(),
            metrics: Metrics {
                tpr: Some(tpr),
                fpr: Some(fpr),
                ..Metrics::default()
            },
        }
    }

    #[test]
    fn kfold_sizes() {
        let p = kfold(10, 5, 1).unwrap();
        assert!(p.folds.iter().all(|f| f.len() == 2));
        let mut all: Vec<usize> = p.folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(p, kfold(10, 5, 1).unwrap());
        assert_eq!(kfold(10, 1, 1), Err(EvalError::Folds(1)));
    }

    #[test]
    fn cap_rule() {
        assert_eq!(select(&[row(0.9, 0.06), row(0.8, 0.03)], 0.05), Some((1, true)));
        assert_eq!(select(&[row(0.9, 0.06), row(0.8, 0.07)], 0.05), Some((0, false)));
    }

    #[test]
    fn budget_subsamples() {
        let c = BTreeMap::from([("a".to_string(), vec![1.0, 2.0, 3.0]), ("b".to_string(), vec![0.0, 1.0])]);
        assert_eq!(grid_cells(&c, None, 0).len(), 6);
        let s = grid_cells(&c, Some(4), 3);
        assert_eq!(s.len(), 4);
        assert_eq!(s, grid_cells(&c, Some(4), 3));
    }
}
