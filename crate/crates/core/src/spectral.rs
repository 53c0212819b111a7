//! SVD and projections onto the nuclear-norm ball.
//!
//! [`project_nuclear`] soft-thresholds the spectrum at the water-filling level
//! `c` for which the shrunk singular values sum to the budget `R`, which is
//! the Frobenius-nearest point of `{Theta : ||Theta||_* <= R}`.
//! [`project_nuclear_rank`] keeps only the top `s` triplets and computes `c`
//! from those `s` values, so the budget applies to the retained spectrum. The
//! alternative (computing `c` from all singular values, then truncating)
//! gives a smaller output norm and is not what this module does.
//!
//! When several singular values tie at the truncation boundary the kept
//! triplets are the first `s` in the decomposition's order; any choice gives
//! the same objective value but the output matrix is then not unique.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Sweep budget passed to the dense SVD backend.
pub const SVD_MAX_ITER: usize = 10_000;

/// Rank-capped projections use the truncated solver above this size.
pub const TRUNCATED_SVD_MIN_N: usize = 500;

/// Extra triplets computed by the truncated solver beyond the rank cap.
pub const TRUNCATED_OVERSAMPLE: usize = 5;

/// Singular values closer than this at the truncation boundary send the
/// truncated solver back to a full SVD.
pub const TIE_GAP: f64 = 1e-6;

const SUBSPACE_MAX_ITER: usize = 500;
const SUBSPACE_TOL: f64 = 1e-11;
const SUBSPACE_SEED: u64 = 0x5eed_57ec;

/// `M = U diag(sigma) V^T` with `sigma` non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors<F> {
    pub u: Array2<F>,
    pub sigma: Array1<F>,
    pub v: Array2<F>,
}

impl<F: Scalar> SvdFactors<F> {
    pub fn reconstruct(&self) -> Array2<F> {
        rebuild(&self.u, &self.sigma, &self.v, self.sigma.len())
    }

    pub fn nuclear_norm(&self) -> F {
        self.sigma.sum()
    }

    /// Number of singular values above `rel_tol * sigma_1`.
    pub fn rank(&self, rel_tol: F) -> usize {
        rank_of(&self.sigma, rel_tol)
    }
}

/// Which decomposition a rank-capped projection uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdStrategy {
    /// Full SVD, or the truncated solver when `n > TRUNCATED_SVD_MIN_N`.
    #[default]
    Auto,
    Full,
    Truncated,
}

/// Full SVD with singular values sorted non-increasing.
pub fn svd<F: Scalar>(m: ArrayView2<'_, F>) -> Result<SvdFactors<F>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVD input"));
    }
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(SvdFactors {
            u: Array2::zeros((rows, 0)),
            sigma: Array1::zeros(0),
            v: Array2::zeros((cols, 0)),
        });
    }
    let (u, sigma, v) = F::dense_svd(m, SVD_MAX_ITER).ok_or(Error::SvdNoConvergence {
        iterations: SVD_MAX_ITER,
    })?;
    Ok(sorted(u, sigma, v))
}

fn sorted<F: Scalar>(u: Array2<F>, sigma: Array1<F>, v: Array2<F>) -> SvdFactors<F> {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    // stable: equal values keep the backend's order
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).expect("finite singular values"));
    if order.iter().enumerate().all(|(i, &k)| i == k) {
        return SvdFactors { u, sigma, v };
    }
    SvdFactors {
        u: u.select(Axis(1), &order),
        sigma: order.iter().map(|&k| sigma[k]).collect(),
        v: v.select(Axis(1), &order),
    }
}

fn rank_of<F: Scalar>(sigma: &Array1<F>, rel_tol: F) -> usize {
    match sigma.first() {
        Some(&top) if top > F::zero() => sigma.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

fn rebuild<F: Scalar>(u: &Array2<F>, sigma: &Array1<F>, v: &Array2<F>, keep: usize) -> Array2<F> {
    let u = u.slice(s![.., ..keep]);
    let mut scaled = u.to_owned();
    for (mut col, &sv) in scaled.axis_iter_mut(Axis(1)).zip(sigma.iter()) {
        col.mapv_inplace(|x| x * sv);
    }
    scaled.dot(&v.slice(s![.., ..keep]).t())
}

/// Shrinkage level `c >= 0` with `sum_i (sigma_i - c)_+ = R`, or 0 when the
/// spectrum already fits in the budget.
///
/// Solved exactly on the piecewise-linear function: with `S_k` the sum of the
/// `k` largest values, `c = (S_rho - R) / rho` for the largest `rho` such that
/// `sigma_rho > (S_rho - R) / rho`. For `R = 0` the level is `sigma_1`.
pub fn soft_threshold_level<F: Scalar>(sigma: &[F], budget: F) -> Result<F> {
    if !(budget >= F::zero()) || !budget.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "nuclear-norm budget must be finite and non-negative, got {budget}"
        )));
    }
    for (i, w) in sigma.windows(2).enumerate() {
        if !(w[0] >= w[1]) {
            return Err(Error::UnsortedSingularValues { index: i + 1 });
        }
    }
    if sigma.last().is_some_and(|&v| v < F::zero()) {
        return Err(Error::InvalidArgument("negative singular value".into()));
    }
    let total: F = sigma.iter().copied().sum();
    if total <= budget {
        return Ok(F::zero());
    }
    if budget == F::zero() {
        return Ok(sigma[0]);
    }
    let mut prefix = F::zero();
    let mut level = F::zero();
    for (k, &sv) in sigma.iter().enumerate() {
        prefix += sv;
        let candidate = (prefix - budget) / F::of((k + 1) as f64);
        if sv > candidate {
            level = candidate;
        } else {
            break;
        }
    }
    Ok(level)
}

/// Euclidean projection onto `{Theta : ||Theta||_* <= R}`.
///
/// Inputs already inside the ball are returned unchanged (no SVD round trip).
pub fn project_nuclear<F: Scalar>(m: ArrayView2<'_, F>, budget: F) -> Result<Array2<F>> {
    check_budget(budget)?;
    if budget == F::zero() {
        return Ok(Array2::zeros(m.dim()));
    }
    let f = svd(m)?;
    if f.nuclear_norm() <= budget {
        return Ok(m.to_owned());
    }
    let level = soft_threshold_level(f.sigma.as_slice().expect("contiguous"), budget)?;
    Ok(shrink(&f, level, f.sigma.len()))
}

/// Projection onto `{||Theta||_* <= R, rank(Theta) <= s}` by truncated soft
/// thresholding.
pub fn project_nuclear_rank<F: Scalar>(
    m: ArrayView2<'_, F>,
    budget: F,
    rank_cap: usize,
) -> Result<Array2<F>> {
    project_nuclear_rank_with(m, budget, rank_cap, SvdStrategy::Auto)
}

pub fn project_nuclear_rank_with<F: Scalar>(
    m: ArrayView2<'_, F>,
    budget: F,
    rank_cap: usize,
    strategy: SvdStrategy,
) -> Result<Array2<F>> {
    check_budget(budget)?;
    let n = m.nrows().min(m.ncols());
    if rank_cap == 0 || rank_cap > n {
        return Err(Error::InvalidArgument(format!(
            "rank cap must be in 1..={n}, got {rank_cap}"
        )));
    }
    if budget == F::zero() {
        return Ok(Array2::zeros(m.dim()));
    }
    let use_truncated = match strategy {
        SvdStrategy::Full => false,
        SvdStrategy::Truncated => rank_cap < n,
        SvdStrategy::Auto => n > TRUNCATED_SVD_MIN_N && rank_cap < n,
    };
    let factors = if use_truncated {
        match truncated_svd(m, rank_cap)? {
            Some(f) => f,
            None => svd(m)?,
        }
    } else {
        svd(m)?
    };
    let keep = rank_cap.min(factors.sigma.len());
    let top = factors.sigma.slice(s![..keep]).to_vec();
    let top_sum: F = top.iter().copied().sum();
    if !use_truncated && top_sum <= budget {
        let tail = factors.sigma.get(keep).copied().unwrap_or(F::zero());
        let top1 = factors.sigma.first().copied().unwrap_or(F::zero());
        if tail <= F::epsilon() * F::of(n as f64) * top1 {
            return Ok(m.to_owned());
        }
    }
    let level = soft_threshold_level(&top, budget)?;
    Ok(shrink(&factors, level, keep))
}

fn check_budget<F: Scalar>(budget: F) -> Result<()> {
    if !(budget >= F::zero()) || !budget.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "nuclear-norm budget must be finite and non-negative, got {budget}"
        )));
    }
    Ok(())
}

fn shrink<F: Scalar>(f: &SvdFactors<F>, level: F, keep: usize) -> Array2<F> {
    let shrunk: Array1<F> = f
        .sigma
        .iter()
        .take(keep)
        .map(|&v| (v - level).max(F::zero()))
        .collect();
    let positive = shrunk.iter().take_while(|&&v| v > F::zero()).count();
    if positive == 0 {
        return Array2::zeros((f.u.nrows(), f.v.nrows()));
    }
    rebuild(&f.u, &shrunk, &f.v, positive)
}

/// Top `rank + TRUNCATED_OVERSAMPLE` singular triplets by block subspace
/// iteration, or `None` if the top `rank` triplets did not converge or the
/// spectrum ties at position `rank` (the caller then falls back to a full
/// SVD).
pub fn truncated_svd<F: Scalar>(m: ArrayView2<'_, F>, rank: usize) -> Result<Option<SvdFactors<F>>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVD input"));
    }
    let (rows, cols) = m.dim();
    let width = (rank + TRUNCATED_OVERSAMPLE).min(rows.min(cols));
    let mut gen = rng::stream(SUBSPACE_SEED, 0);
    let mut q = Array2::<F>::zeros((cols, width));
    q.mapv_inplace(|_| F::of(StandardNormal.sample(&mut gen)));
    orthonormalize(&mut q, &mut gen);

    let tol = F::of(SUBSPACE_TOL);
    for _ in 0..SUBSPACE_MAX_ITER {
        let mut left = m.dot(&q);
        orthonormalize(&mut left, &mut gen);
        // projected = Q_l^T M, stored transposed as M^T Q_l
        let projected_t = m.t().dot(&left);
        let small = svd(projected_t.t())?;
        let u = left.dot(&small.u);
        let factors = SvdFactors {
            u,
            sigma: small.sigma.clone(),
            v: small.v.clone(),
        };
        if converged(m, &factors, rank, tol) {
            let sig = &factors.sigma;
            if rank < sig.len() && (sig[rank - 1] - sig[rank]).abs() <= F::of(TIE_GAP) {
                return Ok(None);
            }
            return Ok(Some(factors));
        }
        q = projected_t;
        orthonormalize(&mut q, &mut gen);
    }
    Ok(None)
}

fn converged<F: Scalar>(m: ArrayView2<'_, F>, f: &SvdFactors<F>, rank: usize, tol: F) -> bool {
    let top = f.sigma.first().copied().unwrap_or(F::zero());
    if top == F::zero() {
        return true;
    }
    let mv = m.dot(&f.v.slice(s![.., ..rank]));
    let mtu = m.t().dot(&f.u.slice(s![.., ..rank]));
    (0..rank).all(|i| {
        let r1 = (&mv.column(i) - &(&f.u.column(i) * f.sigma[i]))
            .mapv(|x| x * x)
            .sum();
        let r2 = (&mtu.column(i) - &(&f.v.column(i) * f.sigma[i]))
            .mapv(|x| x * x)
            .sum();
        (r1 + r2).sqrt() <= tol * top
    })
}

/// Modified Gram-Schmidt with one reorthogonalization pass; collapsed columns
/// are replaced by fresh Gaussian directions.
fn orthonormalize<F: Scalar, R: rand::Rng>(q: &mut Array2<F>, gen: &mut R) {
    let cols = q.ncols();
    for j in 0..cols {
        let mut attempts = 0;
        loop {
            let norm_before = q.column(j).dot(&q.column(j)).sqrt();
            for _ in 0..2 {
                for i in 0..j {
                    let proj = q.column(i).dot(&q.column(j));
                    let qi = q.column(i).to_owned();
                    q.column_mut(j).scaled_add(-proj, &qi);
                }
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            if norm > F::of(1e-10) * norm_before.max(F::min_positive_value()) && norm > F::zero()
            {
                q.column_mut(j).mapv_inplace(|x| x / norm);
                break;
            }
            attempts += 1;
            assert!(attempts < 100, "cannot extend orthonormal basis");
            q.column_mut(j)
                .mapv_inplace(|_| F::of(StandardNormal.sample(gen)));
        }
    }
}
