//! Hold-out validation, predictive AUC, relative error and tuning-grid search.
//!
//! Held-out entries are set to zero in the training matrix and stay in the
//! likelihood; they are not masked as missing. The AUC "classifies" entries
//! with `A_ij > 0` against `A_ij = 0`, so it applies to weighted networks too.

use std::cmp::Ordering;
use std::fmt::Write as _;

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{fit, FitConfig, FitResult};
use crate::glm::{AdjacencyMatrix, CovariateTensor, Family};
use crate::rng;
use crate::scalar::Scalar;

/// Which entries a hold-out split samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HoldoutUniverse {
    /// Every observed node pair.
    #[default]
    Entries,
    /// Only observed pairs with `A_ij > 0`.
    Edges,
}

/// How equal scores between a zero and a positive entry count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Strict inequality: ties count 0.
    #[default]
    Strict,
    /// Ties count 1/2.
    Half,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit<F> {
    /// Input matrix with held-out entries set to zero.
    pub train: AdjacencyMatrix<F>,
    /// Held-out `(i, j)` pairs in row-major order.
    pub index_set: Vec<(usize, usize)>,
    pub seed: u64,
}

/// Zero out `round(fraction * #candidates)` entries drawn uniformly without
/// replacement.
pub fn holdout_split<F: Scalar>(
    a: &AdjacencyMatrix<F>,
    fraction: f64,
    universe: HoldoutUniverse,
    seed: u64,
) -> Result<HoldoutSplit<F>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "hold-out fraction must be in [0, 1), got {fraction}"
        )));
    }
    let n = a.n();
    let candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            a.is_observed(i, j)
                && match universe {
                    HoldoutUniverse::Entries => true,
                    HoldoutUniverse::Edges => a.values()[[i, j]] > F::zero(),
                }
        })
        .collect();
    let count = (fraction * candidates.len() as f64).round() as usize;
    let mut gen = rng::stream(seed, 0);
    let mut picked: Vec<usize> = sample(&mut gen, candidates.len(), count).into_vec();
    picked.sort_unstable();
    let index_set: Vec<(usize, usize)> = picked.into_iter().map(|k| candidates[k]).collect();
    Ok(HoldoutSplit {
        train: a.with_entries_set(&index_set, F::zero()),
        index_set,
        seed,
    })
}

/// Every `(i, j)` of an `n x n` matrix, row-major.
pub fn all_entries(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
}

/// Fraction of (zero, positive) pairs in `index_set` where the positive
/// entry has the larger score.
///
/// Sorts the scores once; groups of equal scores are resolved with
/// [`TieRule`].
pub fn predictive_auc<F: Scalar>(
    a_eval: ArrayView2<'_, F>,
    p_hat: ArrayView2<'_, F>,
    index_set: &[(usize, usize)],
    ties: TieRule,
) -> Result<f64> {
    if a_eval.dim() != p_hat.dim() {
        return Err(Error::DimensionMismatch {
            axis: "score matrix rows",
            expected: a_eval.nrows(),
            found: p_hat.nrows(),
        });
    }
    let mut scored: Vec<(F, bool)> = Vec::with_capacity(index_set.len());
    for &(i, j) in index_set {
        if i >= a_eval.nrows() || j >= a_eval.ncols() {
            return Err(Error::InvalidArgument(format!("index ({i}, {j}) out of range")));
        }
        let score = p_hat[[i, j]];
        if score.is_nan() {
            return Err(Error::NonFinite("score matrix"));
        }
        scored.push((score, a_eval[[i, j]] > F::zero()));
    }
    let positives = scored.iter().filter(|s| s.1).count();
    let zeros = scored.len() - positives;
    if positives == 0 || zeros == 0 {
        return Err(Error::AucUndefined { zeros, positives });
    }
    scored.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));

    // twice the numerator, so half-credit ties stay integral
    let mut doubled: u128 = 0;
    let mut zeros_below: u128 = 0;
    let mut start = 0;
    while start < scored.len() {
        let mut end = start;
        while end < scored.len() && scored[end].0 == scored[start].0 {
            end += 1;
        }
        let group_pos = scored[start..end].iter().filter(|s| s.1).count() as u128;
        let group_zero = (end - start) as u128 - group_pos;
        doubled += 2 * group_pos * zeros_below;
        if ties == TieRule::Half {
            doubled += group_pos * group_zero;
        }
        zeros_below += group_zero;
        start = end;
    }
    Ok(doubled as f64 / (2.0 * zeros as f64 * positives as f64))
}

/// `||P_hat - P||_F / ||P||_F`.
pub fn rmse<F: Scalar>(p_hat: ArrayView2<'_, F>, p_true: ArrayView2<'_, F>) -> Result<F> {
    if p_hat.dim() != p_true.dim() {
        return Err(Error::DimensionMismatch {
            axis: "mean matrix rows",
            expected: p_true.nrows(),
            found: p_hat.nrows(),
        });
    }
    let reference: F = p_true.iter().map(|&v| v * v).sum();
    if reference == F::zero() {
        return Err(Error::ZeroReference);
    }
    let diff: F = p_hat
        .iter()
        .zip(p_true.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok((diff / reference).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid<F> {
    /// Rank caps `s`.
    pub ranks: Vec<usize>,
    /// Nuclear-norm budgets `R`.
    pub budgets: Vec<F>,
    pub validation_fraction: f64,
    pub replicates: usize,
    pub universe: HoldoutUniverse,
    pub ties: TieRule,
}

impl<F: Scalar> TuningGrid<F> {
    pub fn new(ranks: Vec<usize>, budgets: Vec<F>) -> Self {
        Self {
            ranks,
            budgets,
            validation_fraction: 0.2,
            replicates: 1,
            universe: HoldoutUniverse::Entries,
            ties: TieRule::Strict,
        }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.ranks.is_empty() || self.budgets.is_empty() {
            return Err(Error::InvalidArgument("tuning grid must be non-empty".into()));
        }
        if let Some(&s) = self.ranks.iter().find(|&&s| s == 0 || s > n) {
            return Err(Error::InvalidArgument(format!("grid rank {s} outside 1..={n}")));
        }
        if self.budgets.iter().any(|&r| !(r >= F::zero()) || !r.is_finite()) {
            return Err(Error::InvalidArgument("grid budgets must be finite and >= 0".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction must be in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be >= 1".into()));
        }
        Ok(())
    }
}

/// One fitted grid cell on one hold-out replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow<F> {
    pub rank: usize,
    pub budget: F,
    pub replicate: usize,
    /// `None` when the fit failed or the hold-out set lacked zeros or positives.
    pub auc: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult<F> {
    pub best_rank: usize,
    pub best_budget: F,
    pub best_auc: f64,
    /// Rows ordered by `(s, R, replicate)` in grid order.
    pub table: Vec<GridRow<F>>,
    /// Fit on the full matrix at the selected cell.
    pub final_fit: FitResult<F>,
}

impl<F: Scalar> GridSearchResult<F> {
    /// Mean validation AUC per `(s, R)` cell over replicates with a defined AUC.
    pub fn cell_means(&self) -> Vec<(usize, F, Option<f64>)> {
        cell_means(&self.table)
    }

    /// Per-cell CSV with columns `s,R,replicate,auc,iterations,converged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,R,replicate,auc,iterations,converged\n");
        for row in &self.table {
            let auc = row.auc.map_or_else(|| "NA".to_string(), |v| v.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.rank, row.budget, row.replicate, auc, row.iterations, row.converged
            );
        }
        out
    }
}

fn cell_means<F: Scalar>(table: &[GridRow<F>]) -> Vec<(usize, F, Option<f64>)> {
    let mut cells: Vec<(usize, F, f64, usize)> = Vec::new();
    for row in table {
        let k = match cells
            .iter()
            .position(|c| c.0 == row.rank && c.1 == row.budget)
        {
            Some(k) => k,
            None => {
                cells.push((row.rank, row.budget, 0.0, 0));
                cells.len() - 1
            }
        };
        if let Some(auc) = row.auc {
            cells[k].2 += auc;
            cells[k].3 += 1;
        }
    }
    cells
        .into_iter()
        .map(|(s, r, sum, count)| (s, r, (count > 0).then(|| sum / count as f64)))
        .collect()
}

/// Select `(s, R)` by hold-out AUC, then refit on the full matrix.
///
/// Replicate `k` uses the same split for every cell. The best cell maximises
/// the mean AUC; ties go to the smaller `s`, then the smaller `R`.
pub fn grid_search<F: Scalar>(
    a: &AdjacencyMatrix<F>,
    x: &CovariateTensor<F>,
    family: Family,
    grid: &TuningGrid<F>,
    base: &FitConfig<F>,
    seed: u64,
) -> Result<GridSearchResult<F>> {
    grid.validate(a.n())?;
    let splits = (0..grid.replicates)
        .map(|k| {
            holdout_split(
                a,
                grid.validation_fraction,
                grid.universe,
                rng::derive_seed(seed, k as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, F, usize)> = grid
        .ranks
        .iter()
        .flat_map(|&s| {
            grid.budgets
                .iter()
                .flat_map(move |&r| (0..grid.replicates).map(move |k| (s, r, k)))
        })
        .collect();

    let table: Vec<GridRow<F>> = cells
        .par_iter()
        .map(|&(s, r, k)| {
            let split = &splits[k];
            let config = base.clone().with_budget(r).with_rank_cap(s);
            match fit(&split.train, x, family, &config) {
                Ok(res) => GridRow {
                    rank: s,
                    budget: r,
                    replicate: k,
                    auc: predictive_auc(a.values().view(), res.mean.view(), &split.index_set, grid.ties)
                        .ok(),
                    iterations: res.iterations,
                    converged: res.converged,
                },
                Err(_) => GridRow {
                    rank: s,
                    budget: r,
                    replicate: k,
                    auc: None,
                    iterations: 0,
                    converged: false,
                },
            }
        })
        .collect();

    let mut best: Option<(usize, F, f64)> = None;
    for (s, r, mean) in cell_means(&table) {
        let Some(auc) = mean else { continue };
        let better = match best {
            None => true,
            Some((bs, br, bauc)) => {
                auc > bauc || (auc == bauc && (s < bs || (s == bs && r < br)))
            }
        };
        if better {
            best = Some((s, r, auc));
        }
    }
    let (best_rank, best_budget, best_auc) = best.ok_or_else(|| {
        let split = &splits[0];
        let positives = split
            .index_set
            .iter()
            .filter(|&&(i, j)| a.values()[[i, j]] > F::zero())
            .count();
        Error::AucUndefined {
            zeros: split.index_set.len() - positives,
            positives,
        }
    })?;
    let config = base.clone().with_budget(best_budget).with_rank_cap(best_rank);
    let final_fit = fit(a, x, family, &config)?;
    Ok(GridSearchResult {
        best_rank,
        best_budget,
        best_auc,
        table,
        final_fit,
    })
}
