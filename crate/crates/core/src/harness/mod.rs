//! Experiment orchestration behind the `igl` binary: benchmark setup,
//! multi-seed runs, horizon sweeps and regret-exponent fitting.

pub mod verify;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{make_classes, FunctionClasses};
use crate::env::{make_environment, EnvironmentDocument, EnvironmentSpec, GeneratorParams};
use crate::error::{Error, Result};
use crate::estimation::DecoderParams;
use crate::offpolicy::{run_offpolicy, tuned_explore_n, OffPolicyConfig};
use crate::onpolicy::{run_onpolicy, GammaSchedule, OnPolicyConfig};
use crate::run::{Algorithm, RunResult, RunSummary};

/// Leading constant applied to the exploration-length formula. The formula is
/// only defined up to constants; 1/4 keeps `2N <= T` from `T = 4000` upward
/// on the benchmark environment.
pub const DEFAULT_N_SCALE: f64 = 0.25;

/// Rounds averaged for the end-of-run reward figure.
pub const DEFAULT_REWARD_WINDOW: usize = 2000;

/// Generator settings of the standard benchmark (`M = 20, K = 5, s = 1`).
pub const BENCHMARK: GeneratorParams = GeneratorParams { contexts: 20, actions: 5, positives: 1, feedback_per_context: 4, seed: 0 };

fn default_generator() -> GeneratorParams {
    BENCHMARK
}
fn default_decoys() -> usize {
    3
}
fn default_algos() -> Vec<Algorithm> {
    vec![Algorithm::Off]
}
fn default_horizons() -> Vec<usize> {
    vec![20000]
}
fn default_n_scale() -> f64 {
    DEFAULT_N_SCALE
}
fn default_eta() -> f64 {
    0.5
}
fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}
fn default_window() -> usize {
    DEFAULT_REWARD_WINDOW
}

/// Parameters shared by `run` and `sweep`. Every field has a default, so a
/// config file only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_generator")]
    pub generator: GeneratorParams,
    #[serde(default = "default_decoys")]
    pub decoy_f: usize,
    #[serde(default = "default_decoys")]
    pub decoy_phi: usize,
    #[serde(default)]
    pub classes_seed: u64,
    #[serde(default)]
    pub env_path: Option<PathBuf>,
    #[serde(default)]
    pub classes_path: Option<PathBuf>,
    #[serde(default = "default_algos")]
    pub algos: Vec<Algorithm>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    /// Fixed exploration length; `None` uses the scaled formula.
    #[serde(default)]
    pub explore_n: Option<usize>,
    #[serde(default = "default_n_scale")]
    pub n_scale: f64,
    #[serde(default)]
    pub gamma: GammaSchedule,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_window")]
    pub reward_window: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds list is empty".into()));
        }
        if self.algos.is_empty() {
            return Err(Error::Config("no algorithm selected".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::Config("no horizon given".into()));
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("horizon grid must be strictly increasing".into()));
        }
        if !(self.n_scale > 0.0) {
            return Err(Error::Config("n_scale must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(Error::Config(format!("eta = {} must lie in (0, 1/2]", self.eta)));
        }
        Ok(())
    }

    /// Decoder parameters for `env`: explicit `beta`/`sigma` win, otherwise
    /// `sigma` defaults to the identifiability width and `beta = theta/alpha - sigma`.
    pub fn decoder(&self, env: &EnvironmentSpec) -> Result<DecoderParams> {
        match (self.beta, self.sigma) {
            (Some(beta), Some(sigma)) => DecoderParams::new(beta, sigma),
            (None, Some(sigma)) => DecoderParams::with_sigma(env.theta, env.alpha, sigma),
            (Some(beta), None) => DecoderParams::new(beta, DecoderParams::for_env(env)?.sigma),
            (None, None) => DecoderParams::for_env(env),
        }
    }
}

/// A loaded or generated environment together with its classes.
#[derive(Debug, Clone)]
pub struct Setup {
    pub env: EnvironmentSpec,
    pub classes: FunctionClasses,
    pub decoder: DecoderParams,
}

pub fn load_document(path: &Path) -> Result<EnvironmentDocument> {
    EnvironmentDocument::from_json(&fs::read_to_string(path)?)
}

/// Loads the environment (and classes, if the document or a separate file
/// holds them) or generates both from the config.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    let (env, mut classes_doc) = match &cfg.env_path {
        Some(p) => {
            let doc = load_document(p)?;
            (doc.environment, doc.classes)
        }
        None => (make_environment(cfg.generator)?, None),
    };
    if let Some(p) = &cfg.classes_path {
        let doc = load_document(p)?;
        classes_doc = Some(doc.classes.ok_or_else(|| Error::Config(format!("{} holds no classes", p.display())))?);
    }
    let decoder = cfg.decoder(&env)?;
    let classes = match classes_doc {
        Some(doc) => doc.into_classes()?,
        None => make_classes(&env, cfg.decoy_f, cfg.decoy_phi, decoder, cfg.classes_seed)?,
    };
    classes.check_realizable(&env, None)?;
    Ok(Setup { env, classes, decoder })
}

/// The benchmark environment with `|F| = |Phi| = 4` and default decoder.
pub fn benchmark_setup() -> Result<Setup> {
    prepare(&ExperimentConfig::default())
}

/// Exploration length for one run.
pub fn explore_n_for(cfg: &ExperimentConfig, setup: &Setup, horizon: usize) -> usize {
    cfg.explore_n.unwrap_or_else(|| {
        tuned_explore_n(horizon, setup.env.action_count, setup.decoder.sigma, setup.classes.h_list.len(), cfg.n_scale)
    })
}

pub fn run_one(setup: &Setup, cfg: &ExperimentConfig, algo: Algorithm, horizon: usize, seed: u64) -> Result<RunResult> {
    let explore_n = explore_n_for(cfg, setup, horizon);
    match algo {
        Algorithm::Off => {
            let c = OffPolicyConfig { horizon, explore_n, decoder: setup.decoder, seed };
            run_offpolicy(&setup.env, &setup.classes, &c)
        }
        Algorithm::On => {
            let c = OnPolicyConfig { horizon, explore_n, gamma: cfg.gamma, decoder: setup.decoder, eta: cfg.eta, seed };
            run_onpolicy(&setup.env, &setup.classes, &c)
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Precondition("slope fit needs matching x and y".into()));
    }
    if xs.len() < 3 {
        return Err(Error::Config(format!("slope fit needs at least 3 grid points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Outcome of `run`: one summary per `(algorithm, seed)`, sorted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub optimal_value: f64,
    pub runs: Vec<RunSummary>,
    pub median_final_regret: BTreeMap<String, f64>,
}

fn run_file_stem(algo: Algorithm, horizon: usize, seed: u64) -> String {
    format!("{}_T{}_seed{}", algo.name(), horizon, seed)
}

fn write_run_files(dir: &Path, run: &RunResult, window: usize) -> Result<()> {
    let stem = run_file_stem(run.algorithm, run.horizon, run.seed);
    run.write_regret_csv(fs::File::create(dir.join(format!("curve_{stem}.csv")))?)?;
    if run.algorithm == Algorithm::On {
        run.write_ledger_csv(fs::File::create(dir.join(format!("ledger_{stem}.csv")))?)?;
    }
    fs::write(dir.join(format!("run_{stem}.json")), serde_json::to_string_pretty(&run.summary(window))?)?;
    Ok(())
}

/// Runs every `(algorithm, seed)` at the single configured horizon and, when
/// `out` is set, writes curves, ledgers and summaries there.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    if cfg.horizons.len() != 1 {
        return Err(Error::Config("run takes exactly one horizon; use sweep for a grid".into()));
    }
    let horizon = cfg.horizons[0];
    let setup = prepare(cfg)?;
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        write_setup(dir, &setup)?;
    }
    let jobs: Vec<(Algorithm, u64)> = cfg.algos.iter().flat_map(|&a| cfg.seeds.iter().map(move |&s| (a, s))).collect();
    let mut runs = jobs
        .par_iter()
        .map(|&(algo, seed)| {
            let run = run_one(&setup, cfg, algo, horizon, seed)?;
            if let Some(dir) = &cfg.out {
                write_run_files(dir, &run, cfg.reward_window)?;
            }
            Ok(run.summary(cfg.reward_window))
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| (r.algorithm, r.seed));

    let mut median_final_regret = BTreeMap::new();
    for &algo in &cfg.algos {
        let finals: Vec<f64> = runs.iter().filter(|r| r.algorithm == algo).map(|r| r.final_regret).collect();
        median_final_regret.insert(algo.name().to_string(), median(&finals));
    }
    let report = RunReport { optimal_value: setup.env.exact_value(&setup.env.optimal_policy()), runs, median_final_regret };
    if let Some(dir) = &cfg.out {
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report)?)?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        w.write_record(["algo", "seed", "T", "N", "final_regret", "final_window_reward"])?;
        for r in &report.runs {
            w.write_record([
                r.algorithm.name().to_string(),
                r.seed.to_string(),
                r.horizon.to_string(),
                r.explore_n.to_string(),
                r.final_regret.to_string(),
                r.final_window_reward.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(report)
}

pub fn write_setup(dir: &Path, setup: &Setup) -> Result<()> {
    let mut doc = EnvironmentDocument::new(setup.env.clone());
    doc.classes = Some(setup.classes.to_document());
    fs::write(dir.join("env.json"), doc.to_json()?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub seed: u64,
    pub explore_n: usize,
    pub final_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSweep {
    pub algorithm: Algorithm,
    pub horizons: Vec<usize>,
    pub median_regret: Vec<f64>,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub algorithms: Vec<AlgorithmSweep>,
}

impl SweepSummary {
    /// Groups rows per algorithm, takes medians over seeds and fits the slope.
    pub fn from_rows(mut rows: Vec<SweepRow>) -> Result<Self> {
        rows.sort_by_key(|r| (r.algorithm, r.horizon, r.seed));
        let mut grouped: BTreeMap<Algorithm, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
        for r in &rows {
            grouped.entry(r.algorithm).or_default().entry(r.horizon).or_default().push(r.final_regret);
        }
        let mut algorithms = Vec::new();
        for (algorithm, per_t) in grouped {
            let horizons: Vec<usize> = per_t.keys().copied().collect();
            let median_regret: Vec<f64> = per_t.values().map(|v| median(v)).collect();
            let xs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
            let slope = fit_loglog_slope(&xs, &median_regret)?;
            algorithms.push(AlgorithmSweep { algorithm, horizons, median_regret, slope });
        }
        Ok(Self { rows, algorithms })
    }

    pub fn slope(&self, algo: Algorithm) -> Option<f64> {
        self.algorithms.iter().find(|a| a.algorithm == algo).map(|a| a.slope)
    }

    /// Per-algorithm table, one row per `(T, seed)`.
    pub fn write_table<W: std::io::Write>(&self, algo: Algorithm, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T", "seed", "N", "final_regret"])?;
        for r in self.rows.iter().filter(|r| r.algorithm == algo) {
            w.write_record([r.horizon.to_string(), r.seed.to_string(), r.explore_n.to_string(), r.final_regret.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_medians<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["algo", "T", "median_final_regret", "slope"])?;
        for a in &self.algorithms {
            for (t, m) in a.horizons.iter().zip(&a.median_regret) {
                w.write_record([a.algorithm.name().to_string(), t.to_string(), m.to_string(), a.slope.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs every `(algorithm, T, seed)` and fits regret exponents.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    if cfg.horizons.len() < 3 {
        return Err(Error::Config(format!("sweep needs at least 3 horizons, got {}", cfg.horizons.len())));
    }
    let setup = prepare(cfg)?;
    let jobs: Vec<(Algorithm, usize, u64)> = cfg
        .algos
        .iter()
        .flat_map(|&a| cfg.horizons.iter().flat_map(move |&t| cfg.seeds.iter().map(move |&s| (a, t, s))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(algorithm, horizon, seed)| {
            let run = run_one(&setup, cfg, algorithm, horizon, seed)?;
            Ok(SweepRow { algorithm, horizon, seed, explore_n: run.explore_n, final_regret: run.final_regret() })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = SweepSummary::from_rows(rows)?;
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        write_setup(dir, &setup)?;
        for &algo in &cfg.algos {
            summary.write_table(algo, fs::File::create(dir.join(format!("sweep_{}.csv", algo.name())))?)?;
        }
        summary.write_medians(fs::File::create(dir.join("sweep_medians.csv"))?)?;
        fs::write(dir.join("sweep_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(summary)
}
