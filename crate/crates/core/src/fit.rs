//! Projected gradient ascent for the nuclear-norm constrained likelihood.
//!
//! One iteration with step `gamma`:
//!
//! 1. `beta <- beta + (gamma / g) * tr(X_k^T (A - L^{-1}(Theta + X (x) beta)))`
//! 2. `Theta <- P(Theta + gamma * (A - L^{-1}(Theta + X (x) beta_new)))`
//!
//! where `P` is [`project_nuclear`] or, with a rank cap, [`project_nuclear_rank`].
//! The covariate block is scaled by `g = max(1, lambda)`, `lambda` a
//! Gershgorin bound on the largest eigenvalue of the covariate Gram matrix,
//! because the `beta` gradient is `K * lambda`-Lipschitz rather than
//! `K`-Lipschitz. With covariates of Frobenius norm at most one this is the
//! plain `gamma` step.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::glm::{
    log_likelihood_from_predictor, masked_residual, mean_from_predictor, AdjacencyMatrix,
    CovariateTensor, Family, ModelParams,
};
use crate::scalar::Scalar;
use crate::spectral::{project_nuclear, project_nuclear_rank};

pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Consecutive backtracking failures tolerated before giving up.
const DIVERGENCE_PATIENCE: usize = 10;
const DIVERGENCE_DROP: f64 = 1e-6;
const MAX_SHRINKS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy<F> {
    /// Constant step.
    Fixed(F),
    /// `gamma = 1 / K`, `K` recomputed at every iterate.
    Auto,
    /// Start from `1 / K`; each iteration tries `growth * gamma` and shrinks
    /// by `shrink` until the objective does not decrease.
    Backtracking { shrink: F, growth: F },
}

impl<F: Scalar> StepPolicy<F> {
    pub fn backtracking() -> Self {
        StepPolicy::Backtracking {
            shrink: F::of(0.5),
            growth: F::of(1.1),
        }
    }

    /// Auto for the logit link, backtracking for the log link.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::BernoulliLogit => StepPolicy::Auto,
            Family::PoissonLog => Self::backtracking(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init<F> {
    Zeros,
    Warm(ModelParams<F>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig<F> {
    /// Nuclear-norm budget `R`.
    pub budget: F,
    /// Rank cap `s`; `None` solves the pure nuclear-norm problem.
    pub rank_cap: Option<usize>,
    /// `None` picks [`StepPolicy::default_for`] the family.
    pub step: Option<StepPolicy<F>>,
    pub max_iter: usize,
    /// Relative objective change `|l_t - l_{t-1}| / (1 + |l_{t-1}|)` below
    /// which the iteration stops.
    pub tol: F,
    pub init: Init<F>,
}

impl<F: Scalar> FitConfig<F> {
    pub fn new(budget: F) -> Self {
        Self {
            budget,
            rank_cap: None,
            step: None,
            max_iter: DEFAULT_MAX_ITER,
            tol: F::of(DEFAULT_TOL),
            init: Init::Zeros,
        }
    }

    /// Settings used for the covariate-only GLM: `R = 0`, tight tolerance.
    pub fn baseline() -> Self {
        Self::new(F::zero()).with_tol(F::of(1e-12)).with_max_iter(2000)
    }

    pub fn with_rank_cap(mut self, s: usize) -> Self {
        self.rank_cap = Some(s);
        self
    }

    pub fn with_budget(mut self, budget: F) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_step(mut self, step: StepPolicy<F>) -> Self {
        self.step = Some(step);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: F) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_init(mut self, init: Init<F>) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.budget >= F::zero()) || !self.budget.is_finite() {
            return bad(format!("budget R must be finite and >= 0, got {}", self.budget));
        }
        if let Some(s) = self.rank_cap {
            if s == 0 || s > n {
                return bad(format!("rank cap s must be in 1..={n}, got {s}"));
            }
        }
        match self.step {
            Some(StepPolicy::Fixed(g)) if !(g > F::zero()) || !g.is_finite() => {
                return bad(format!("fixed step must be positive, got {g}"));
            }
            Some(StepPolicy::Backtracking { shrink, growth })
                if !(shrink > F::zero() && shrink < F::one()) || !(growth >= F::one()) =>
            {
                return bad(format!(
                    "backtracking needs 0 < shrink < 1 <= growth, got {shrink}, {growth}"
                ));
            }
            _ => {}
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.tol > F::zero()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if let Init::Warm(p) = &self.init {
            p.check_dims(n, m)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<F> {
    pub params: ModelParams<F>,
    /// Fitted mean `L^{-1}(Theta + X (x) beta)`.
    pub mean: Array2<F>,
    /// Log-likelihood after each iteration (the starting value is not included).
    pub objective_trace: Vec<F>,
    pub iterations: usize,
    pub converged: bool,
    /// Entries whose predictor hit the `exp` clamp, summed over accepted iterates.
    pub clamp_events: usize,
}

struct Iterate<F> {
    params: ModelParams<F>,
    eta: Array2<F>,
    mean: Array2<F>,
    loglik: F,
    clamps: usize,
}

struct Solver<'a, F: Scalar> {
    a: &'a AdjacencyMatrix<F>,
    x: &'a CovariateTensor<F>,
    family: Family,
    config: &'a FitConfig<F>,
    beta_scale: F,
}

impl<F: Scalar> Solver<'_, F> {
    fn evaluate(&self, params: ModelParams<F>) -> Result<Iterate<F>> {
        let eta = self.x.contract_into(&params.theta, &params.beta);
        let loglik = log_likelihood_from_predictor(self.a, eta.view(), self.family)?;
        let eval = mean_from_predictor(eta.view(), self.family);
        Ok(Iterate {
            params,
            eta,
            mean: eval.mean,
            loglik,
            clamps: eval.clamp_events,
        })
    }

    fn project(&self, theta: Array2<F>) -> Result<Array2<F>> {
        if self.config.budget == F::zero() {
            return Ok(Array2::zeros(theta.dim()));
        }
        match self.config.rank_cap {
            Some(s) => project_nuclear_rank(theta.view(), self.config.budget, s),
            None => project_nuclear(theta.view(), self.config.budget),
        }
    }

    fn step(&self, cur: &Iterate<F>, gamma: F) -> Result<Iterate<F>> {
        let beta = if self.x.m() > 0 {
            let residual = masked_residual(self.a, &cur.mean);
            let grad = self.x.inner_products(&residual);
            &cur.params.beta + &(grad * (gamma / self.beta_scale))
        } else {
            cur.params.beta.clone()
        };
        let theta = if self.config.budget == F::zero() {
            Array2::zeros(cur.params.theta.dim())
        } else {
            let mean_mid = if self.x.m() > 0 {
                let eta = self.x.contract_into(&cur.params.theta, &beta);
                if eta.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("linear predictor"));
                }
                mean_from_predictor(eta.view(), self.family).mean
            } else {
                cur.mean.clone()
            };
            let mut moved = masked_residual(self.a, &mean_mid);
            moved.mapv_inplace(|r| r * gamma);
            moved += &cur.params.theta;
            self.project(moved)?
        };
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient update"));
        }
        self.evaluate(ModelParams { theta, beta })
    }

    fn lipschitz(&self, cur: &Iterate<F>) -> F {
        match self.family {
            Family::BernoulliLogit => F::one(),
            Family::PoissonLog => {
                let theta_max = cur
                    .params
                    .theta
                    .iter()
                    .fold(F::zero(), |m, v| m.max(v.abs()));
                let cov_max = (&cur.eta - &cur.params.theta)
                    .iter()
                    .fold(F::neg_infinity(), |m, &v| m.max(v));
                self.family.lipschitz(theta_max, cov_max)
            }
        }
    }
}

/// Fit the low-rank effects model by projected gradient ascent.
pub fn fit<F: Scalar>(
    a: &AdjacencyMatrix<F>,
    x: &CovariateTensor<F>,
    family: Family,
    config: &FitConfig<F>,
) -> Result<FitResult<F>> {
    let n = a.n();
    if x.n() != n {
        return Err(Error::DimensionMismatch {
            axis: "covariate size",
            expected: n,
            found: x.n(),
        });
    }
    config.validate(n, x.m())?;
    a.validate_for(family)?;

    let solver = Solver {
        a,
        x,
        family,
        config,
        beta_scale: x.gram_bound(a.mask()).max(F::one()),
    };
    let start = match &config.init {
        Init::Zeros => ModelParams::zeros(n, x.m()),
        Init::Warm(p) => {
            // feasible warm starts are used verbatim so that a resumed run
            // reproduces the uninterrupted one
            let (nuclear, rank) = effects_summary(&p.theta)?;
            let slack = F::of(1e-8) * (F::one() + config.budget);
            let feasible = nuclear <= config.budget + slack
                && config.rank_cap.is_none_or(|s| rank <= s);
            let theta = if feasible {
                p.theta.clone()
            } else {
                solver.project(p.theta.clone())?
            };
            ModelParams::new(theta, p.beta.clone())?
        }
    };
    let mut cur = solver.evaluate(start)?;
    let policy = config.step.unwrap_or_else(|| StepPolicy::default_for(family));

    let mut trace = Vec::with_capacity(config.max_iter.min(4096));
    let mut clamp_events = 0;
    let mut converged = false;
    let mut gamma = F::one() / solver.lipschitz(&cur);
    let mut failures = 0;

    for _ in 0..config.max_iter {
        let next = match policy {
            StepPolicy::Fixed(g) => solver.step(&cur, g)?,
            StepPolicy::Auto => solver.step(&cur, F::one() / solver.lipschitz(&cur))?,
            StepPolicy::Backtracking { shrink, growth } => {
                gamma *= growth;
                let floor = cur.loglik - F::of(1e-12) * (F::one() + cur.loglik.abs());
                let mut candidate = solver.step(&cur, gamma);
                let mut shrinks = 0;
                loop {
                    let ok = matches!(&candidate, Ok(c) if c.loglik >= floor);
                    if ok || shrinks == MAX_SHRINKS {
                        break;
                    }
                    gamma *= shrink;
                    shrinks += 1;
                    candidate = solver.step(&cur, gamma);
                }
                let candidate = candidate?;
                if candidate.loglik < cur.loglik - F::of(DIVERGENCE_DROP) {
                    failures += 1;
                    if failures >= DIVERGENCE_PATIENCE {
                        trace.push(candidate.loglik);
                        return Err(Error::Diverged {
                            trace: trace.iter().map(|v: &F| v.as_f64()).collect(),
                        });
                    }
                } else {
                    failures = 0;
                }
                candidate
            }
        };
        let change = (next.loglik - cur.loglik).abs() / (F::one() + cur.loglik.abs());
        trace.push(next.loglik);
        clamp_events += next.clamps;
        cur = next;
        if change < config.tol {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        iterations: trace.len(),
        params: cur.params,
        mean: cur.mean,
        objective_trace: trace,
        converged,
        clamp_events,
    })
}

/// Covariate-only GLM (`Theta = 0`), the classical baseline.
pub fn fit_glm_baseline<F: Scalar>(
    a: &AdjacencyMatrix<F>,
    x: &CovariateTensor<F>,
    family: Family,
) -> Result<FitResult<F>> {
    fit(a, x, family, &FitConfig::baseline())
}

/// Nuclear norm and numerical rank (`sigma_i > 1e-8 sigma_1`) of a fitted
/// effects matrix.
pub fn effects_summary<F: Scalar>(theta: &Array2<F>) -> Result<(F, usize)> {
    let f = crate::spectral::svd(theta.view())?;
    Ok((f.nuclear_norm(), f.rank(F::of(1e-8))))
}
