//! Reference implementations used only by tests. None of them share code
//! with the library routines they check.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use netglm::{AdjacencyMatrix, CovariateTensor, Family};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn gen(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(g: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || g.random_range(lo..hi))
}

pub fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, &v| acc.max(v.abs()))
}

/// Projection of `v` onto `{w : ||w||_1 <= r}` by bisection on the
/// shrinkage level.
pub fn l1_ball_projection(v: &[f64], r: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= r {
        return v.to_vec();
    }
    let excess = |t: f64| v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>() - r;
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| x.signum() * (x.abs() - t).max(0.0)).collect()
}

/// Double loop over (zero, positive) pairs; ties count `tie_credit`.
pub fn brute_force_auc(labels: &[f64], scores: &[f64], tie_credit: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a0, s0) in labels.iter().zip(scores) {
        if *a0 != 0.0 {
            continue;
        }
        for (a1, s1) in labels.iter().zip(scores) {
            if *a1 > 0.0 {
                den += 1.0;
                if s1 > s0 {
                    num += 1.0;
                } else if s1 == s0 {
                    num += tie_credit;
                }
            }
        }
    }
    num / den
}

fn inverse_link(family: Family, eta: f64) -> f64 {
    match family {
        Family::BernoulliLogit => 1.0 / (1.0 + (-eta).exp()),
        Family::PoissonLog => eta.exp(),
    }
}

fn cumulant(family: Family, eta: f64) -> f64 {
    match family {
        Family::BernoulliLogit => (1.0 + eta.exp()).ln(),
        Family::PoissonLog => eta.exp(),
    }
}

/// Log-likelihood written directly from the definition.
pub fn loglik(a: &Array2<f64>, theta: &Array2<f64>, beta: &[f64], xs: &[Array2<f64>], family: Family) -> f64 {
    let n = a.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let eta = theta[[i, j]] + xs.iter().zip(beta).map(|(x, b)| b * x[[i, j]]).sum::<f64>();
            total += a[[i, j]] * eta - cumulant(family, eta);
        }
    }
    total
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let k = rhs.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            let pivot = m[col].clone();
            for (dst, src) in m[row].iter_mut().zip(&pivot).skip(col) {
                *dst -= f * src;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut out = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| m[row][c] * out[c]).sum();
        out[row] = (rhs[row] - s) / m[row][row];
    }
    out
}

/// Covariate-only GLM by iteratively reweighted least squares.
pub fn irls(a: &Array2<f64>, xs: &[Array2<f64>], family: Family) -> Vec<f64> {
    let m = xs.len();
    let mut beta = vec![0.0; m];
    for _ in 0..100 {
        let mut xtwx = vec![vec![0.0; m]; m];
        let mut xtwz = vec![0.0; m];
        for ((i, j), &y) in a.indexed_iter() {
            let eta: f64 = xs.iter().zip(&beta).map(|(x, b)| b * x[[i, j]]).sum();
            let mu = inverse_link(family, eta);
            let w = match family {
                Family::BernoulliLogit => mu * (1.0 - mu),
                Family::PoissonLog => mu,
            };
            let z = eta + (y - mu) / w;
            for p in 0..m {
                xtwz[p] += w * xs[p][[i, j]] * z;
                for q in 0..m {
                    xtwx[p][q] += w * xs[p][[i, j]] * xs[q][[i, j]];
                }
            }
        }
        let next = solve(xtwx, xtwz);
        let delta = next.iter().zip(&beta).fold(0.0f64, |d, (x, y)| d.max((x - y).abs()));
        beta = next;
        if delta < 1e-13 {
            break;
        }
    }
    beta
}

/// Response drawn from the family with `eta = sum_k beta_k X_k`.
pub fn glm_instance(
    g: &mut ChaCha8Rng,
    n: usize,
    beta: &[f64],
    family: Family,
) -> (AdjacencyMatrix<f64>, CovariateTensor<f64>, Vec<Array2<f64>>) {
    let xs: Vec<Array2<f64>> = beta.iter().map(|_| uniform_matrix(g, n, n, -1.0, 1.0)).collect();
    let a = Array2::from_shape_fn((n, n), |(i, j)| {
        let eta: f64 = xs.iter().zip(beta).map(|(x, b)| b * x[[i, j]]).sum();
        let mu = inverse_link(family, eta);
        match family {
            Family::BernoulliLogit => f64::from(g.random::<f64>() < mu),
            Family::PoissonLog => {
                // inversion sampling keeps this independent of the library sampler
                let (mut k, mut p, u) = (0.0, (-mu).exp(), g.random::<f64>());
                let mut cdf = p;
                while u > cdf {
                    k += 1.0;
                    p *= mu / k;
                    cdf += p;
                }
                k
            }
        }
    });
    let x = CovariateTensor::new(n, xs.clone()).unwrap();
    (AdjacencyMatrix::new(a).unwrap(), x, xs)
}

pub fn vec_of(a: &Array1<f64>) -> Vec<f64> {
    a.to_vec()
}
