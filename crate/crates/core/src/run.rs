//! Run logs, regret bookkeeping and their CSV / JSON forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::{DeterministicPolicy, EnvironmentSpec, InteractionRecord};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Off,
    On,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Off => "off",
            Algorithm::On => "on",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Algorithm::Off),
            "on" => Ok(Algorithm::On),
            other => Err(crate::error::Error::Config(format!("unknown algorithm {other:?}, expected off|on"))),
        }
    }
}

/// Which element of `H` the ERM step selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedHypothesis {
    pub h_index: usize,
    pub f_index: usize,
    pub phi_index: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleLedgerRow {
    pub round: usize,
    pub oracle_loss: f64,
    pub best_f_loss: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub explore_n: usize,
    pub seed: u64,
    pub optimal_value: f64,
    pub records: Vec<InteractionRecord>,
    /// Running sum of `f*(x_t, pi*(x_t)) - f*(x_t, a_t)`.
    pub cumulative_regret: Vec<f64>,
    /// `f*(x_t, a_t)` per round.
    pub expected_reward: Vec<f64>,
    /// Reward credited for reporting: `1/K` on uniform rounds, `f*(x_t, a_t)` otherwise.
    pub progressive_reward: Vec<f64>,
    pub chosen_policy: DeterministicPolicy,
    pub fitted_h: FittedHypothesis,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oracle_ledger: Vec<OracleLedgerRow>,
}

/// Everything in a [`RunResult`] except the per-round series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub explore_n: usize,
    pub seed: u64,
    pub optimal_value: f64,
    pub final_regret: f64,
    pub final_window_reward: f64,
    pub chosen_policy: DeterministicPolicy,
    pub fitted_h: FittedHypothesis,
}

impl RunResult {
    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    /// Mean of `f*(x_t, a_t)` over rounds `start..end` (0-based, clipped).
    pub fn mean_expected_reward(&self, start: usize, end: usize) -> f64 {
        let end = end.min(self.expected_reward.len());
        if start >= end {
            return f64::NAN;
        }
        self.expected_reward[start..end].iter().sum::<f64>() / (end - start) as f64
    }

    /// Mean expected reward over the last `window` rounds.
    pub fn tail_mean_reward(&self, window: usize) -> f64 {
        let n = self.expected_reward.len();
        self.mean_expected_reward(n.saturating_sub(window), n)
    }

    pub fn summary(&self, window: usize) -> RunSummary {
        RunSummary {
            algorithm: self.algorithm,
            horizon: self.horizon,
            explore_n: self.explore_n,
            seed: self.seed,
            optimal_value: self.optimal_value,
            final_regret: self.final_regret(),
            final_window_reward: self.tail_mean_reward(window),
            chosen_policy: self.chosen_policy.clone(),
            fitted_h: self.fitted_h,
        }
    }

    /// Columns: `round, cumulative_expected_regret, average_reward`.
    pub fn write_regret_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "cumulative_expected_regret", "average_reward"])?;
        let mut acc = 0.0;
        for (i, (reg, rew)) in self.cumulative_regret.iter().zip(&self.progressive_reward).enumerate() {
            acc += rew;
            w.write_record([(i + 1).to_string(), reg.to_string(), (acc / (i + 1) as f64).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns: `round, oracle_loss, best_f_loss, regret` (cumulative).
    pub fn write_ledger_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "oracle_loss", "best_f_loss", "regret"])?;
        for row in &self.oracle_ledger {
            w.write_record([row.round.to_string(), row.oracle_loss.to_string(), row.best_f_loss.to_string(), row.regret.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn regret_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_regret_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Accumulates the per-round series while a learner plays.
pub(crate) struct RunLog<'a> {
    env: &'a EnvironmentSpec,
    optimal: DeterministicPolicy,
    pub records: Vec<InteractionRecord>,
    pub cumulative_regret: Vec<f64>,
    pub expected_reward: Vec<f64>,
    pub progressive_reward: Vec<f64>,
    total: f64,
}

impl<'a> RunLog<'a> {
    pub fn new(env: &'a EnvironmentSpec, horizon: usize) -> Self {
        Self {
            env,
            optimal: env.optimal_policy(),
            records: Vec::with_capacity(horizon),
            cumulative_regret: Vec::with_capacity(horizon),
            expected_reward: Vec::with_capacity(horizon),
            progressive_reward: Vec::with_capacity(horizon),
            total: 0.0,
        }
    }

    pub fn push(&mut self, rec: InteractionRecord, uniform: bool) {
        let row = &self.env.reward_mean[rec.context];
        let reward = row[rec.action];
        let gap = row[self.optimal.action(rec.context)] - reward;
        self.total += gap;
        self.cumulative_regret.push(self.total);
        self.expected_reward.push(reward);
        self.progressive_reward.push(if uniform { 1.0 / self.env.action_count as f64 } else { reward });
        self.records.push(rec);
    }
}
