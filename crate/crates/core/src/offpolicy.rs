//! Explore-then-exploit learner.
//!
//! `2N` uniform rounds are split in half: the first half fits the
//! inverse-kinematics model, the second half scores the greedy policies of
//! `F` under the decoded reward. The winner is played for the rest of the
//! horizon.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{FunctionClasses, IkHypothesis};
use crate::env::{DeterministicPolicy, EnvironmentSpec, InteractionRecord};
use crate::error::{Error, Result};
use crate::estimation::{decode_reward, erm_fit, DecoderParams, UniformSample};
use crate::run::{Algorithm, RunLog, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffPolicyConfig {
    pub horizon: usize,
    /// Samples per exploration phase; `2 * explore_n` uniform rounds in total.
    pub explore_n: usize,
    pub decoder: DecoderParams,
    pub seed: u64,
}

impl OffPolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.explore_n == 0 {
            return Err(Error::Config("explore_n must be at least 1".into()));
        }
        if 2 * self.explore_n > self.horizon {
            return Err(Error::Config(format!("2N = {} exceeds the horizon T = {}", 2 * self.explore_n, self.horizon)));
        }
        Ok(())
    }
}

/// `scale * T^{2/3} K^{2/3} sigma^{-2/3} log^{1/3}(|H| T)`, floored, at least 1.
pub fn tuned_explore_n(horizon: usize, action_count: usize, sigma: f64, h_count: usize, scale: f64) -> usize {
    let t = horizon as f64;
    let k = action_count as f64;
    let n = scale * (t * k / sigma).powf(2.0 / 3.0) * ((h_count as f64) * t).ln().cbrt();
    (n.floor() as usize).max(1)
}

/// `V_hat(pi) = (K / n) sum_i pi(a_i | x_i) * r_hat(x_i, y_i, a_i)` for each
/// greedy policy of `classes`, in `f_list` order.
pub fn policy_values(data: &[InteractionRecord], h: &IkHypothesis, params: DecoderParams, classes: &FunctionClasses) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Precondition("policy selection needs at least one sample".into()));
    }
    let decoded: Vec<f64> = data.iter().map(|r| decode_reward(h, r.context, r.feedback, r.action, params)).collect();
    let scale = data[0].action_dist.len() as f64 / data.len() as f64;
    Ok(classes
        .policies()
        .iter()
        .map(|pi| scale * data.iter().zip(&decoded).map(|(r, &v)| pi.prob(r.context, r.action) * v).sum::<f64>())
        .collect())
}

/// Position in `f_list` of the first maximizer of [`policy_values`].
pub fn select_policy_index(data: &[InteractionRecord], h: &IkHypothesis, params: DecoderParams, classes: &FunctionClasses) -> Result<usize> {
    let values = policy_values(data, h, params, classes)?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn select_policy(data: &[InteractionRecord], h: &IkHypothesis, params: DecoderParams, classes: &FunctionClasses) -> Result<DeterministicPolicy> {
    let i = select_policy_index(data, h, params, classes)?;
    Ok(crate::classes::greedy_policy(&classes.f_list[i]))
}

pub fn run_offpolicy(env: &EnvironmentSpec, classes: &FunctionClasses, cfg: &OffPolicyConfig) -> Result<RunResult> {
    cfg.validate()?;
    classes.check_realizable(env, None)?;
    let k = env.action_count;
    let uniform = vec![1.0 / k as f64; k];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = RunLog::new(env, cfg.horizon);

    for t in 1..=2 * cfg.explore_n {
        let rec = env.sample_round(t, &uniform, &mut rng)?;
        log.push(rec, true);
    }
    let (fit_half, select_half) = log.records.split_at(cfg.explore_n);
    let data = UniformSample::new(fit_half.to_vec())?;
    let fit = erm_fit(&data, classes)?;
    let chosen = select_policy(select_half, fit.hypothesis, cfg.decoder, classes)?;
    let fitted_h = fit.identity();

    for t in 2 * cfg.explore_n + 1..=cfg.horizon {
        let x = env.sample_context(&mut rng);
        let rec = env.respond(t, x, &chosen.point_mass(x, k), &mut rng)?;
        log.push(rec, false);
    }

    Ok(RunResult {
        algorithm: Algorithm::Off,
        horizon: cfg.horizon,
        explore_n: cfg.explore_n,
        seed: cfg.seed,
        optimal_value: env.exact_value(&env.optimal_policy()),
        records: log.records,
        cumulative_regret: log.cumulative_regret,
        expected_reward: log.expected_reward,
        progressive_reward: log.progressive_reward,
        chosen_policy: chosen,
        fitted_h,
        oracle_ledger: Vec::new(),
    })
}
