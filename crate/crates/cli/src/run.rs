//! Command execution and result export.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use netglm::evaluate::{all_entries, grid_search, predictive_auc, rmse};
use netglm::fit::{effects_summary, fit};
use netglm::glm::mean_matrix;
use netglm::ingest::{convert_node_attrs, load_dense_matrix, load_edge_list};
use netglm::persist::{load_params, matrix_to_csv, save_params, trace_to_csv, write_atomic, TRACE_FILE};
use netglm::simulate::{generate_truth, sample_network};
use netglm::{rng, AdjacencyMatrix, CovariateTensor, FitConfig, FitResult, SimDesign, TuningGrid};
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::CliResult;

pub const METRICS_FILE: &str = "metrics.csv";
pub const META_FILE: &str = "run_meta.json";
pub const GRID_FILE: &str = "grid.csv";
pub const EDGES_FILE: &str = "edges.tsv";
pub const TRUTH_MEAN_FILE: &str = "truth_mean.csv";
pub const COVARIATE_FILE: &str = "covariate.csv";

/// Tidy rows `setting, replicate, metric, value`.
#[derive(Default)]
struct Metrics {
    rows: Vec<(String, usize, &'static str, String)>,
}

impl Metrics {
    fn push(&mut self, setting: &str, replicate: usize, metric: &'static str, value: impl ToString) {
        self.rows.push((setting.to_string(), replicate, metric, value.to_string()));
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("setting,replicate,metric,value\n");
        for (s, r, m, v) in &self.rows {
            let _ = writeln!(out, "{s},{r},{m},{v}");
        }
        out
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: Command,
    version: &'static str,
    seed: u64,
    config_sha256: String,
    rng: &'static str,
    gaussian_sampler: &'static str,
    outputs: Vec<String>,
    config: &'a RunConfig,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&dir).map_err(|e| netglm::Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> CliResult<()> {
        write_atomic(&self.dir.join(name), body.as_bytes())?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn params(&mut self, sub: Option<&str>, params: &netglm::ModelParams<f64>) -> CliResult<()> {
        let dir = sub.map_or_else(|| self.dir.clone(), |s| self.dir.join(s));
        for path in save_params(&dir, params)? {
            let rel = path.strip_prefix(&self.dir).unwrap_or(&path);
            self.written.push(rel.display().to_string());
        }
        Ok(())
    }

    fn finish(mut self, command: Command, config: &RunConfig, metrics: &Metrics) -> CliResult<PathBuf> {
        self.write(METRICS_FILE, &metrics.to_csv())?;
        self.written.sort();
        let meta = RunMeta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed(),
            config_sha256: config.hash(command)?,
            rng: rng::GENERATOR,
            gaussian_sampler: rng::GAUSSIAN_SAMPLER,
            outputs: self.written.clone(),
            config,
        };
        let mut body = serde_json::to_string_pretty(&meta)?;
        body.push('\n');
        write_atomic(&self.dir.join(META_FILE), body.as_bytes())?;
        Ok(self.dir)
    }
}

fn network(config: &RunConfig, command: Command) -> CliResult<(AdjacencyMatrix<f64>, CovariateTensor<f64>)> {
    let n = *RunConfig::require(&config.n, "n", command)?;
    let path = RunConfig::require(&config.edges, "edges", command)?;
    let mut a = load_edge_list::<f64>(path, n, config.symmetric)?;
    if config.no_diagonal {
        a = a.without_diagonal();
    }
    a.validate_for(config.family()?)?;
    let xs = config
        .covariates
        .iter()
        .map(|p| load_dense_matrix::<f64>(p, n))
        .collect::<netglm::Result<Vec<_>>>()?;
    Ok((a, CovariateTensor::new(n, xs)?))
}

fn fit_config(config: &RunConfig, budget: f64) -> CliResult<FitConfig<f64>> {
    let (max_iter, tol) = config.stopping(budget);
    let mut fc = FitConfig::new(budget).with_max_iter(max_iter).with_tol(tol);
    if let Some(s) = config.rank_cap {
        fc = fc.with_rank_cap(s);
    }
    if let Some(step) = config.step()? {
        fc = fc.with_step(step);
    }
    Ok(fc)
}

fn fit_metrics(metrics: &mut Metrics, setting: &str, res: &FitResult<f64>) -> CliResult<()> {
    let (nuclear, rank) = effects_summary(&res.params.theta)?;
    if let Some(last) = res.objective_trace.last() {
        metrics.push(setting, 0, "loglik", last);
    }
    metrics.push(setting, 0, "iterations", res.iterations);
    metrics.push(setting, 0, "converged", u8::from(res.converged));
    metrics.push(setting, 0, "nuclear_norm", nuclear);
    metrics.push(setting, 0, "rank", rank);
    metrics.push(setting, 0, "clamp_events", res.clamp_events);
    for (k, b) in res.params.beta.iter().enumerate() {
        metrics.push(setting, 0, BETA_NAMES.get(k).copied().unwrap_or("beta_k"), b);
    }
    Ok(())
}

const BETA_NAMES: [&str; 8] = ["beta_1", "beta_2", "beta_3", "beta_4", "beta_5", "beta_6", "beta_7", "beta_8"];

fn truth_rmse(config: &RunConfig, p_hat: &Array2<f64>, metrics: &mut Metrics, setting: &str) -> CliResult<()> {
    if let Some(path) = &config.truth {
        let truth = load_dense_matrix::<f64>(path, p_hat.nrows())?;
        metrics.push(setting, 0, "rmse", rmse(p_hat.view(), truth.view())?);
    }
    Ok(())
}

/// Execute `command` and return the output directory.
pub fn run(command: Command, config: &RunConfig) -> CliResult<PathBuf> {
    match command {
        Command::Fit => run_fit(config),
        Command::GridSearch => run_grid(config),
        Command::Simulate => run_simulate(config),
        Command::Evaluate => run_evaluate(config),
        Command::ConvertAttrs => run_convert(config),
    }
}

fn run_fit(config: &RunConfig) -> CliResult<PathBuf> {
    let (a, x) = network(config, Command::Fit)?;
    let budget = *RunConfig::require(&config.budget, "budget", Command::Fit)?;
    let res = fit(&a, &x, config.family()?, &fit_config(config, budget)?)?;
    let mut out = Outputs::new(config.out_dir())?;
    let mut metrics = Metrics::default();
    fit_metrics(&mut metrics, "fit", &res)?;
    truth_rmse(config, &res.mean, &mut metrics, "fit")?;
    out.params(None, &res.params)?;
    out.write(TRACE_FILE, &trace_to_csv(&res.objective_trace))?;
    out.finish(Command::Fit, config, &metrics)
}

fn run_grid(config: &RunConfig) -> CliResult<PathBuf> {
    let (a, x) = network(config, Command::GridSearch)?;
    let mut grid = TuningGrid::new(config.ranks.clone(), config.budgets.clone())
        .with_replicates(config.replicates.unwrap_or(1));
    if let Some(f) = config.validation_fraction {
        grid.validation_fraction = f;
    }
    grid.universe = config.holdout()?;
    grid.ties = config.ties()?;
    // the budget is replaced per cell
    let base = fit_config(config, 1.0)?;
    let res = grid_search(&a, &x, config.family()?, &grid, &base, config.seed())?;

    let mut metrics = Metrics::default();
    for row in &res.table {
        let setting = format!("s={};R={}", row.rank, row.budget);
        let auc = row.auc.map_or_else(|| "NA".to_string(), |v| v.to_string());
        metrics.push(&setting, row.replicate, "auc", auc);
    }
    metrics.push("selected", 0, "s", res.best_rank);
    metrics.push("selected", 0, "R", res.best_budget);
    metrics.push("selected", 0, "auc", res.best_auc);
    fit_metrics(&mut metrics, "final_fit", &res.final_fit)?;
    truth_rmse(config, &res.final_fit.mean, &mut metrics, "final_fit")?;

    let mut out = Outputs::new(config.out_dir())?;
    out.write(GRID_FILE, &res.to_csv())?;
    out.params(None, &res.final_fit.params)?;
    out.write(TRACE_FILE, &trace_to_csv(&res.final_fit.objective_trace))?;
    out.finish(Command::GridSearch, config, &metrics)
}

fn edge_list(a: &Array2<f64>) -> String {
    let mut out = String::from("# i\tj\tweight\n");
    for ((i, j), &v) in a.indexed_iter() {
        if v != 0.0 {
            let _ = writeln!(out, "{i}\t{j}\t{v}");
        }
    }
    out
}

fn run_simulate(config: &RunConfig) -> CliResult<PathBuf> {
    let n = *RunConfig::require(&config.n, "n", Command::Simulate)?;
    let family = config.family()?;
    let design = SimDesign::new(
        n,
        config.latent_rank.unwrap_or(2),
        config.intercept.unwrap_or(0.0),
        config.strength.unwrap_or(0.0),
        family,
        config.seed(),
    );
    let truth = generate_truth(&design)?;
    let mut a = sample_network(&truth.mean, family, rng::derive_seed(config.seed(), 0))?.into_values();
    if config.no_diagonal {
        a.diag_mut().fill(0.0);
    }

    let mut out = Outputs::new(config.out_dir())?;
    out.write(EDGES_FILE, &edge_list(&a))?;
    for (k, x) in truth.covariates.matrices().iter().enumerate() {
        out.write(&format!("covariate_{}.csv", k + 1), &matrix_to_csv(x))?;
    }
    out.write(TRUTH_MEAN_FILE, &matrix_to_csv(&truth.mean))?;
    out.params(Some("truth"), &truth.params)?;

    let mut metrics = Metrics::default();
    let positive: Vec<f64> = a.iter().copied().filter(|&v| v > 0.0).collect();
    metrics.push("simulate", 0, "density", positive.len() as f64 / a.len() as f64);
    if !positive.is_empty() {
        metrics.push("simulate", 0, "mean_positive_weight", positive.iter().sum::<f64>() / positive.len() as f64);
    }
    metrics.push("simulate", 0, "theta_nuclear_norm", effects_summary(&truth.params.theta)?.0);
    out.finish(Command::Simulate, config, &metrics)
}

fn run_evaluate(config: &RunConfig) -> CliResult<PathBuf> {
    let (a, x) = network(config, Command::Evaluate)?;
    let dir = RunConfig::require(&config.params, "params", Command::Evaluate)?;
    let params = load_params::<f64>(dir, a.n())?;
    let p_hat = mean_matrix(&params, &x, config.family()?)?;
    let mut index = all_entries(a.n());
    if config.no_diagonal {
        index.retain(|(i, j)| i != j);
    }
    let mut metrics = Metrics::default();
    let auc = predictive_auc(a.values().view(), p_hat.view(), &index, config.ties()?)?;
    metrics.push("evaluate", 0, "auc", auc);
    truth_rmse(config, &p_hat, &mut metrics, "evaluate")?;
    let out = Outputs::new(config.out_dir())?;
    out.finish(Command::Evaluate, config, &metrics)
}

fn run_convert(config: &RunConfig) -> CliResult<PathBuf> {
    let n = *RunConfig::require(&config.n, "n", Command::ConvertAttrs)?;
    let path: &Path = RunConfig::require(&config.attrs, "attrs", Command::ConvertAttrs)?;
    let x = convert_node_attrs::<f64>(path, n, config.method()?)?;
    let mut out = Outputs::new(config.out_dir())?;
    out.write(COVARIATE_FILE, &matrix_to_csv(&x))?;
    let mut metrics = Metrics::default();
    metrics.push("convert-attrs", 0, "max", x.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)));
    metrics.push("convert-attrs", 0, "nonzero", x.iter().filter(|&&v| v != 0.0).count());
    out.finish(Command::ConvertAttrs, config, &metrics)
}
