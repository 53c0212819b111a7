//! Synthetic networks with mean structure
//! `L(P) = Z Z^T + alpha 1 1^T + beta_1 X_1 + beta_2 X_2`,
//! `Z ~ N(0, 1)^{n x (r-1)}`, `beta = (c, -c)`, and each `X_k = U V^T` from
//! the SVD of an independent standard Gaussian matrix (all singular values 1).
//!
//! Edges are drawn independently for every ordered pair `(i, j)`, so sampled
//! networks are directed even though `P` is symmetric.
//!
//! Random stream layout for a design seed: stream 1 draws `Z`, streams 2 and
//! 3 the two covariates. [`sample_network`] uses stream `i` of its own seed
//! for row `i`.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::glm::{mean_matrix, AdjacencyMatrix, CovariateTensor, Family, ModelParams};
use crate::rng;
use crate::scalar::Scalar;
use crate::spectral::svd;

const LATENT_STREAM: u64 = 1;
const COVARIATE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign<F> {
    pub n: usize,
    /// Rank of the effects matrix; `Z` has `rank - 1` columns.
    pub rank: usize,
    /// Intercept `alpha`.
    pub intercept: F,
    /// Covariate strength `c`, giving `beta = (c, -c)`.
    pub covariate_strength: F,
    pub family: Family,
    pub seed: u64,
}

impl<F: Scalar> SimDesign<F> {
    pub fn new(n: usize, rank: usize, intercept: F, covariate_strength: F, family: Family, seed: u64) -> Self {
        Self {
            n,
            rank,
            intercept,
            covariate_strength,
            family,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("n must be >= 2, got {}", self.n)));
        }
        if self.rank < 1 {
            return Err(Error::InvalidArgument("rank must be >= 1".into()));
        }
        if !self.intercept.is_finite() || !self.covariate_strength.is_finite() {
            return Err(Error::NonFinite("simulation design"));
        }
        Ok(())
    }
}

/// Parameters, covariates and mean matrix of a simulated network.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth<F> {
    pub params: ModelParams<F>,
    pub covariates: CovariateTensor<F>,
    pub mean: Array2<F>,
}

fn gaussian_matrix<F: Scalar>(rows: usize, cols: usize, seed: u64, stream: u64) -> Array2<F> {
    let mut gen = rng::stream(seed, stream);
    Array2::from_shape_simple_fn((rows, cols), || {
        F::of(StandardNormal.sample(&mut gen))
    })
}

fn orthonormal_from_stream<F: Scalar>(n: usize, seed: u64, stream: u64) -> Result<Array2<F>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be >= 2, got {n}")));
    }
    let g = gaussian_matrix::<F>(n, n, seed, stream);
    let f = svd(g.view())?;
    Ok(f.u.dot(&f.v.t()))
}

/// `U V^T` from the SVD of an `n x n` standard Gaussian matrix.
pub fn orthonormal_covariate<F: Scalar>(n: usize, seed: u64) -> Result<Array2<F>> {
    orthonormal_from_stream(n, seed, 0)
}

pub fn generate_truth<F: Scalar>(design: &SimDesign<F>) -> Result<Truth<F>> {
    design.validate()?;
    let n = design.n;
    let z = gaussian_matrix::<F>(n, design.rank - 1, design.seed, LATENT_STREAM);
    let mut theta = z.dot(&z.t());
    theta.mapv_inplace(|v| v + design.intercept);
    let covariates = CovariateTensor::new(
        n,
        vec![
            orthonormal_from_stream(n, design.seed, COVARIATE_STREAM)?,
            orthonormal_from_stream(n, design.seed, COVARIATE_STREAM + 1)?,
        ],
    )?;
    let c = design.covariate_strength;
    let params = ModelParams::new(theta, Array1::from(vec![c, -c]))?;
    let mean = mean_matrix(&params, &covariates, design.family)?;
    Ok(Truth {
        params,
        covariates,
        mean,
    })
}

/// Draw `A_ij` independently from the family with mean `P_ij`.
///
/// Bernoulli means may sit on the boundary `{0, 1}`; Poisson means must be
/// positive.
pub fn sample_network<F: Scalar>(p: &Array2<F>, family: Family, seed: u64) -> Result<AdjacencyMatrix<F>> {
    for ((i, j), &v) in p.indexed_iter() {
        let ok = match family {
            Family::BernoulliLogit => v >= F::zero() && v <= F::one(),
            Family::PoissonLog => v > F::zero() && v.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "mean entry ({i}, {j}) = {v} outside the {family} range"
            )));
        }
    }
    let (rows, cols) = p.dim();
    let mut a = Array2::<F>::zeros((rows, cols));
    for (i, (mut out, row)) in a.rows_mut().into_iter().zip(p.rows()).enumerate() {
        let mut gen = rng::stream(seed, i as u64);
        for (o, &mu) in out.iter_mut().zip(row.iter()) {
            *o = match family {
                Family::BernoulliLogit => {
                    let u: f64 = gen.random();
                    if u < mu.as_f64() {
                        F::one()
                    } else {
                        F::zero()
                    }
                }
                Family::PoissonLog => {
                    let dist = Poisson::new(mu.as_f64())
                        .map_err(|e| Error::InvalidArgument(format!("poisson mean {mu}: {e}")))?;
                    F::of(dist.sample(&mut gen))
                }
            };
        }
    }
    AdjacencyMatrix::new(a)
}
