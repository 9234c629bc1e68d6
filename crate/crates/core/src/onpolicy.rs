//! Inverse-gap-weighting learner.
//!
//! After `N` uniform warm-up rounds fit the inverse-kinematics model, every
//! round asks an exponentially weighted regression oracle over `F` for reward
//! scores, samples from the inverse-gap-weighted distribution, and feeds the
//! decoded reward back to the oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::FunctionClasses;
use crate::env::{argmax, DeterministicPolicy, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::estimation::{decode_reward, erm_fit, DecoderParams, UniformSample};
use crate::run::{Algorithm, OracleLedgerRow, RunLog, RunResult};

/// Slack on the runtime regret-bound check, for float accumulation only.
const LEDGER_SLACK: f64 = 1e-9;

/// Exponentially weighted average forecaster over a finite reward class,
/// with cumulative squared-loss ledgers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionOracleState {
    pub log_weights: Vec<f64>,
    pub eta: f64,
    pub cum_loss_oracle: f64,
    pub cum_loss_best: Vec<f64>,
}

impl RegressionOracleState {
    pub fn new(class_size: usize, eta: f64) -> Result<Self> {
        if class_size == 0 {
            return Err(Error::Config("oracle needs a nonempty class".into()));
        }
        if !(eta > 0.0 && eta <= 0.5) {
            return Err(Error::Config(format!("eta = {eta} must lie in (0, 1/2]")));
        }
        Ok(Self { log_weights: vec![0.0; class_size], eta, cum_loss_oracle: 0.0, cum_loss_best: vec![0.0; class_size] })
    }

    pub fn weights(&self) -> Vec<f64> {
        let mx = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|l| (l - mx).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    /// Mixture prediction `sum_f w_f f(x, .)`.
    pub fn predict(&self, classes: &FunctionClasses, x: usize) -> Vec<f64> {
        let w = self.weights();
        let k = classes.f_list[0].row(x).len();
        let mut out = vec![0.0; k];
        for (wf, f) in w.iter().zip(&classes.f_list) {
            for (o, v) in out.iter_mut().zip(f.row(x)) {
                *o += wf * v;
            }
        }
        for o in &mut out {
            *o = o.clamp(0.0, 1.0);
        }
        out
    }

    /// Charges the pre-update prediction and every class member, then
    /// reweights. Returns the oracle's loss on this round.
    pub fn update(&mut self, x: usize, a: usize, target: f64, classes: &FunctionClasses) -> Result<f64> {
        if !(0.0..=1.0).contains(&target) {
            return Err(Error::Domain(format!("oracle target {target} outside [0, 1]")));
        }
        if classes.f_list.len() != self.log_weights.len() {
            return Err(Error::Domain("oracle state and class sizes differ".into()));
        }
        let pred = self.predict(classes, x)[a];
        let loss = (pred - target).powi(2);
        self.cum_loss_oracle += loss;
        for (i, f) in classes.f_list.iter().enumerate() {
            let l = (f.value(x, a) - target).powi(2);
            self.log_weights[i] -= self.eta * l;
            self.cum_loss_best[i] += l;
        }
        let mx = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for l in &mut self.log_weights {
            *l -= mx;
        }
        if self.regret() > self.regret_bound() + LEDGER_SLACK {
            return Err(Error::Invariant(format!("oracle regret {} exceeds ln|F|/eta = {}", self.regret(), self.regret_bound())));
        }
        Ok(loss)
    }

    pub fn best_loss(&self) -> f64 {
        self.cum_loss_best.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn regret(&self) -> f64 {
        self.cum_loss_oracle - self.best_loss()
    }

    /// `ln |F| / eta`.
    pub fn regret_bound(&self) -> f64 {
        (self.log_weights.len() as f64).ln() / self.eta
    }
}

/// `p_a = 1 / (K + gamma (s_best - s_a))` off the greedy action, remainder on it.
pub fn igw_distribution(scores: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Domain("empty score vector".into()));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma = {gamma} must be positive and finite")));
    }
    let k = scores.len() as f64;
    let best = argmax(scores);
    let mut p: Vec<f64> = scores.iter().map(|s| 1.0 / (k + gamma * (scores[best] - s))).collect();
    p[best] = 0.0;
    let rest: f64 = p.iter().sum();
    p[best] = 1.0 - rest;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum GammaSchedule {
    Fixed(f64),
    /// `gamma_t = c * sqrt(K t)`.
    SqrtKt(f64),
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule::SqrtKt(1.0)
    }
}

impl GammaSchedule {
    pub fn at(&self, round: usize, action_count: usize) -> f64 {
        match *self {
            GammaSchedule::Fixed(g) => g,
            GammaSchedule::SqrtKt(c) => c * ((action_count * round) as f64).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            GammaSchedule::Fixed(g) => g,
            GammaSchedule::SqrtKt(c) => c,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Config(format!("gamma parameter {v} must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnPolicyConfig {
    pub horizon: usize,
    pub explore_n: usize,
    pub gamma: GammaSchedule,
    pub decoder: DecoderParams,
    pub eta: f64,
    pub seed: u64,
}

impl OnPolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.explore_n == 0 {
            return Err(Error::Config("explore_n must be at least 1".into()));
        }
        if self.explore_n >= self.horizon {
            return Err(Error::Config(format!("N = {} must be below the horizon T = {}", self.explore_n, self.horizon)));
        }
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(Error::Config(format!("eta = {} must lie in (0, 1/2]", self.eta)));
        }
        self.gamma.validate()
    }
}

pub fn run_onpolicy(env: &EnvironmentSpec, classes: &FunctionClasses, cfg: &OnPolicyConfig) -> Result<RunResult> {
    cfg.validate()?;
    let lower = env.underline_fstar(cfg.decoder.beta, cfg.decoder.sigma)?;
    classes.check_realizable(env, Some(&lower))?;
    let k = env.action_count;
    let uniform = vec![1.0 / k as f64; k];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = RunLog::new(env, cfg.horizon);

    for t in 1..=cfg.explore_n {
        let rec = env.sample_round(t, &uniform, &mut rng)?;
        log.push(rec, true);
    }
    let data = UniformSample::new(log.records.clone())?;
    let fit = erm_fit(&data, classes)?;
    let h = fit.hypothesis;

    let mut oracle = RegressionOracleState::new(classes.f_list.len(), cfg.eta)?;
    let mut ledger = Vec::with_capacity(cfg.horizon - cfg.explore_n);
    for t in cfg.explore_n + 1..=cfg.horizon {
        let x = env.sample_context(&mut rng);
        let scores = oracle.predict(classes, x);
        let p = igw_distribution(&scores, cfg.gamma.at(t, k))?;
        let rec = env.respond(t, x, &p, &mut rng)?;
        let target = decode_reward(h, x, rec.feedback, rec.action, cfg.decoder);
        oracle.update(x, rec.action, target, classes)?;
        ledger.push(OracleLedgerRow {
            round: t,
            oracle_loss: oracle.cum_loss_oracle,
            best_f_loss: oracle.best_loss(),
            regret: oracle.regret(),
        });
        log.push(rec, false);
    }

    let chosen = DeterministicPolicy::new((0..env.context_count).map(|x| argmax(&oracle.predict(classes, x))).collect());
    Ok(RunResult {
        algorithm: Algorithm::On,
        horizon: cfg.horizon,
        explore_n: cfg.explore_n,
        seed: cfg.seed,
        optimal_value: env.exact_value(&env.optimal_policy()),
        records: log.records,
        cumulative_regret: log.cumulative_regret,
        expected_reward: log.expected_reward,
        progressive_reward: log.progressive_reward,
        chosen_policy: chosen,
        fitted_h: fit.identity(),
        oracle_ledger: ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{make_classes, RewardFunction};

    // The oracle only reads `f_list`; all-0 / all-1 rows cannot build `H`.
    fn extreme_rewards() -> FunctionClasses {
        FunctionClasses {
            f_list: vec![RewardFunction::new(vec![vec![1.0, 1.0]]).unwrap(), RewardFunction::new(vec![vec![0.0, 0.0]]).unwrap()],
            phi_list: vec![],
            h_list: vec![],
        }
    }

    #[test]
    fn uniform_weights_predict_midpoint() {
        let classes = extreme_rewards();
        let oracle = RegressionOracleState::new(2, 0.5).unwrap();
        assert_eq!(oracle.predict(&classes, 0), vec![0.5, 0.5]);
    }

    #[test]
    fn singleton_class_predicts_its_row() {
        let classes = FunctionClasses {
            f_list: vec![RewardFunction::new(vec![vec![0.2, 0.9, 0.1]]).unwrap()],
            phi_list: vec![],
            h_list: vec![],
        };
        let oracle = RegressionOracleState::new(1, 0.5).unwrap();
        assert_eq!(oracle.predict(&classes, 0), vec![0.2, 0.9, 0.1]);
    }

    #[test]
    fn constant_targets_drive_prediction_up_monotonically() {
        let classes = extreme_rewards();
        let mut oracle = RegressionOracleState::new(2, 0.5).unwrap();
        let mut prev = oracle.predict(&classes, 0)[0];
        for _ in 0..100 {
            oracle.update(0, 0, 1.0, &classes).unwrap();
            let now = oracle.predict(&classes, 0)[0];
            // strictly increasing until it saturates in floating point
            assert!(now > prev || (now == prev && now > 1.0 - 1e-12));
            prev = now;
        }
        assert!(prev > 0.999);
    }

    #[test]
    fn agreeing_losses_leave_weights_unchanged() {
        let classes = FunctionClasses {
            f_list: vec![RewardFunction::new(vec![vec![0.3, 0.7]]).unwrap(), RewardFunction::new(vec![vec![0.3, 0.1]]).unwrap()],
            phi_list: vec![],
            h_list: vec![],
        };
        let mut oracle = RegressionOracleState::new(2, 0.5).unwrap();
        oracle.update(0, 0, 0.3, &classes).unwrap();
        assert_eq!(oracle.weights(), vec![0.5, 0.5]);
        assert!(matches!(oracle.update(0, 0, 1.5, &classes), Err(Error::Domain(_))));
        assert!(RegressionOracleState::new(2, 0.6).is_err());
    }

    #[test]
    fn alternating_targets_respect_the_ledger_bound() {
        let classes = FunctionClasses {
            f_list: (0..4).map(|i| RewardFunction::new(vec![vec![i as f64 / 3.0, 1.0 - i as f64 / 3.0]]).unwrap()).collect(),
            phi_list: vec![],
            h_list: vec![],
        };
        let mut oracle = RegressionOracleState::new(4, 0.5).unwrap();
        for t in 0..200 {
            oracle.update(0, t % 2, (t % 2) as f64, &classes).unwrap();
        }
        assert!(oracle.regret() <= 4f64.ln() / 0.5);
    }

    #[test]
    fn igw_examples() {
        let p = igw_distribution(&[0.9, 0.4, 0.4], 10.0).unwrap();
        for (got, want) in p.iter().zip([0.75, 0.125, 0.125]) {
            assert!((got - want).abs() < 1e-12);
        }
        let p = igw_distribution(&[0.8, 0.3], 10.0).unwrap();
        assert!((p[0] - 6.0 / 7.0).abs() < 1e-12 && (p[1] - 1.0 / 7.0).abs() < 1e-12);
        assert_eq!(igw_distribution(&[0.4; 4], 3.0).unwrap(), vec![0.25; 4]);
        let p = igw_distribution(&[0.1, 0.7, 0.2], 1e12).unwrap();
        assert!(p[1] > 1.0 - 1e-10);
        assert!(igw_distribution(&[0.1], 0.0).is_err());
    }

    #[test]
    fn env_a_onpolicy_learns() {
        let env = EnvironmentSpec::env_a();
        let params = DecoderParams::for_env(&env).unwrap();
        let classes = make_classes(&env, 0, 0, params, 0).unwrap();
        let cfg = OnPolicyConfig { horizon: 5000, explore_n: 500, gamma: GammaSchedule::SqrtKt(1.0), decoder: params, eta: 0.5, seed: 3 };
        let run = run_onpolicy(&env, &classes, &cfg).unwrap();
        assert!(run.tail_mean_reward(1000) >= 0.95);
        assert_eq!(run.oracle_ledger.len(), 4500);
        assert_eq!(run.chosen_policy.choice, vec![0]);
        let bad = OnPolicyConfig { explore_n: 5000, ..cfg };
        assert!(matches!(run_onpolicy(&env, &classes, &bad), Err(Error::Config(_))));
    }

    proptest::proptest! {
        #[test]
        fn igw_is_a_valid_greedy_heavy_distribution(scores in proptest::collection::vec(0.0..=1.0f64, 1..8), gamma in 1e-6..1e6f64) {
            let p = igw_distribution(&scores, gamma).unwrap();
            let best = argmax(&scores);
            proptest::prop_assert!(p.iter().all(|&v| v >= 0.0));
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            proptest::prop_assert!(p.iter().all(|&v| v <= p[best]));
            proptest::prop_assert!(p[best] >= 1.0 / scores.len() as f64);
        }

        #[test]
        fn oracle_regret_stays_within_bound(targets in proptest::collection::vec(0.0..=1.0f64, 1..300), rows in proptest::collection::vec(0.0..=1.0f64, 4)) {
            let classes = FunctionClasses {
                f_list: rows.iter().map(|&v| RewardFunction::new(vec![vec![v]]).unwrap()).collect(),
                phi_list: vec![],
                h_list: vec![],
            };
            let mut oracle = RegressionOracleState::new(4, 0.5).unwrap();
            for t in targets {
                oracle.update(0, 0, t, &classes).unwrap();
                proptest::prop_assert!(oracle.regret() <= oracle.regret_bound());
            }
        }
    }
}
