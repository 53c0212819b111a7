//! Generalized linear models with low-rank effects for network data.
//!
//! An observed `n x n` adjacency matrix `A` (binary or count-weighted) is
//! modelled entrywise through an exponential family with canonical link,
//!
//! ```text
//! L(P) = Theta + sum_k beta_k X_k,     ||Theta||_* <= R,  rank(Theta) <= s
//! ```
//!
//! where `Theta` is a low-rank matrix of pairwise effects and `X_k` are edge
//! covariates. The estimator is computed by block projected gradient ascent
//! (see [`fit::fit`]), with the nuclear-norm ball projection implemented in
//! [`spectral`].
//!
//! Every numeric routine is generic over [`Scalar`], implemented for `f32` and
//! `f64`. The `*64` / `*32` aliases below name the common instantiations.
//!
//! ```no_run
//! use netglm::{fit, simulate, Family, FitConfig, SimDesign};
//!
//! let design = SimDesign::<f64>::new(100, 2, -2.0, 0.2, Family::BernoulliLogit, 7);
//! let truth = simulate::generate_truth(&design).unwrap();
//! let a = simulate::sample_network(&truth.mean, Family::BernoulliLogit, 8).unwrap();
//! let config = FitConfig::new(300.0).with_rank_cap(2);
//! let result = fit::fit(&a, &truth.covariates, Family::BernoulliLogit, &config).unwrap();
//! println!("{} iterations, loglik {}", result.iterations, result.objective_trace.last().unwrap());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0)` also rejects NaN

pub mod error;
pub mod evaluate;
pub mod fit;
pub mod glm;
pub mod ingest;
pub mod persist;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use evaluate::{HoldoutSplit, HoldoutUniverse, TieRule, TuningGrid};
pub use fit::{FitConfig, FitResult, Init, StepPolicy};
pub use glm::{AdjacencyMatrix, CovariateTensor, Family, ModelParams};
pub use scalar::Scalar;
pub use simulate::SimDesign;
pub use spectral::SvdFactors;

pub type AdjacencyMatrix64 = AdjacencyMatrix<f64>;
pub type CovariateTensor64 = CovariateTensor<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type FitConfig64 = FitConfig<f64>;
pub type FitResult64 = FitResult<f64>;
pub type SvdFactors64 = SvdFactors<f64>;
pub type SimDesign64 = SimDesign<f64>;

pub type AdjacencyMatrix32 = AdjacencyMatrix<f32>;
pub type CovariateTensor32 = CovariateTensor<f32>;
pub type ModelParams32 = ModelParams<f32>;
pub type FitConfig32 = FitConfig<f32>;
pub type FitResult32 = FitResult<f32>;
pub type SvdFactors32 = SvdFactors<f32>;
pub type SimDesign32 = SimDesign<f32>;
