//! Run configuration: a flat TOML file whose keys mirror the command-line
//! flags. Flags override file values; unset keys take the library defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use netglm::fit::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use netglm::ingest::AttrMethod;
use netglm::{Family, HoldoutUniverse, StepPolicy, TieRule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fit,
    GridSearch,
    Simulate,
    Evaluate,
    ConvertAttrs,
}

/// Every key is optional in the file and on the command line.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `bernoulli` or `poisson`.
    #[arg(long)]
    pub family: Option<String>,
    /// Number of nodes.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// Edge list `i<sep>j[<sep>weight]` with 0-based ids.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Dense `n x n` covariate CSV; repeat for several covariates.
    #[arg(long = "covariate")]
    #[serde(default)]
    pub covariates: Vec<PathBuf>,
    /// Node attribute file for `convert-attrs`.
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// `cocount-maxnorm` or `inner-product`.
    #[arg(long)]
    pub method: Option<String>,
    /// Directory with fitted parameters, read by `evaluate`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Dense true mean matrix; adds an RMSE row to the metrics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory. Not part of the recorded configuration.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,

    /// Nuclear-norm budget R.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Rank cap s.
    #[arg(long)]
    pub rank_cap: Option<usize>,
    /// `auto`, `backtracking` or a positive number.
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,

    /// Rank caps searched by `grid-search`.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub ranks: Vec<usize>,
    /// Budgets searched by `grid-search`.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub budgets: Vec<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// `entries` or `edges`.
    #[arg(long)]
    pub holdout: Option<String>,
    /// `strict` or `half`.
    #[arg(long)]
    pub ties: Option<String>,

    /// Rank r of the simulated effects matrix.
    #[arg(long)]
    pub latent_rank: Option<usize>,
    /// Simulated intercept alpha.
    #[arg(long, allow_hyphen_values = true)]
    pub intercept: Option<f64>,
    /// Simulated covariate strength c.
    #[arg(long, allow_hyphen_values = true)]
    pub strength: Option<f64>,

    /// Exclude self-loops from fitting and scoring.
    #[arg(long)]
    #[serde(default)]
    pub no_diagonal: bool,
    /// Mirror edge-list entries.
    #[arg(long)]
    #[serde(default)]
    pub symmetric: bool,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $(if $top.$field.is_some() { $base.$field = $top.$field; })*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// `self` with every value set in `top` replaced.
    pub fn overridden_by(mut self, top: RunConfig) -> Self {
        overlay!(self, top; family, n, seed, edges, attrs, method, params, truth, out,
            budget, rank_cap, step, max_iter, tol, replicates, validation_fraction,
            holdout, ties, latent_rank, intercept, strength);
        if !top.covariates.is_empty() {
            self.covariates = top.covariates;
        }
        if !top.ranks.is_empty() {
            self.ranks = top.ranks;
        }
        if !top.budgets.is_empty() {
            self.budgets = top.budgets;
        }
        self.no_diagonal |= top.no_diagonal;
        self.symmetric |= top.symmetric;
        self
    }

    /// Hex SHA-256 of the recorded configuration.
    pub fn hash(&self, command: Command) -> CliResult<String> {
        let body = serde_json::to_vec(&(command, self))?;
        Ok(Sha256::digest(&body).iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn require<'a, T>(value: &'a Option<T>, key: &str, command: Command) -> CliResult<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{key}` is required for {command:?}")))
    }

    pub fn family(&self) -> CliResult<Family> {
        let name = self.family.as_deref().unwrap_or("bernoulli");
        Ok(name.parse()?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn step(&self) -> CliResult<Option<StepPolicy<f64>>> {
        match self.step.as_deref() {
            None => Ok(None),
            Some("auto") => Ok(Some(StepPolicy::Auto)),
            Some("backtracking") => Ok(Some(StepPolicy::backtracking())),
            Some(v) => v
                .parse::<f64>()
                .map(|g| Some(StepPolicy::Fixed(g)))
                .map_err(|_| CliError::Config(format!("step must be auto, backtracking or a number, got `{v}`"))),
        }
    }

    /// Iteration limit and tolerance; `R = 0` defaults to the tight baseline
    /// settings.
    pub fn stopping(&self, budget: f64) -> (usize, f64) {
        let (iter, tol) = if budget == 0.0 {
            (2000, 1e-12)
        } else {
            (DEFAULT_MAX_ITER, DEFAULT_TOL)
        };
        (self.max_iter.unwrap_or(iter), self.tol.unwrap_or(tol))
    }

    pub fn holdout(&self) -> CliResult<HoldoutUniverse> {
        match self.holdout.as_deref() {
            None | Some("entries") => Ok(HoldoutUniverse::Entries),
            Some("edges") => Ok(HoldoutUniverse::Edges),
            Some(v) => Err(CliError::Config(format!("holdout must be entries or edges, got `{v}`"))),
        }
    }

    pub fn ties(&self) -> CliResult<TieRule> {
        match self.ties.as_deref() {
            None | Some("strict") => Ok(TieRule::Strict),
            Some("half") => Ok(TieRule::Half),
            Some(v) => Err(CliError::Config(format!("ties must be strict or half, got `{v}`"))),
        }
    }

    pub fn method(&self) -> CliResult<AttrMethod> {
        Ok(self.method.as_deref().unwrap_or("cocount-maxnorm").parse()?)
    }
}
