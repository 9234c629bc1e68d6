//! Finite reward class `F`, decoder class `Phi`, and the inverse-kinematics
//! class `H = { h(f, phi) }` built from their product.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{argmax, DeterministicPolicy, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::estimation::DecoderParams;

const DECOY_ATTEMPTS_PER_ITEM: usize = 1000;

/// Tabular `f: X x [K] -> [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardFunction {
    pub table: Vec<Vec<f64>>,
}

impl RewardFunction {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        if table.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Invariant("reward function entries must lie in [0, 1]".into()));
        }
        Ok(Self { table })
    }

    pub fn value(&self, x: usize, a: usize) -> f64 {
        self.table[x][a]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.table[x]
    }

    /// Identifiability filter: every row sums to at most `alpha` and peaks at
    /// `theta` or above.
    pub fn is_admissible(&self, alpha: f64, theta: f64) -> bool {
        self.table.iter().all(|row| {
            let s: f64 = row.iter().sum();
            let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            s <= alpha && mx >= theta
        })
    }

    fn key(&self) -> Vec<u64> {
        self.table.iter().flatten().map(|v| v.to_bits()).collect()
    }
}

/// Tabular `phi: X x Y -> {0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeedbackDecoder {
    pub table: Vec<Vec<u8>>,
}

impl FeedbackDecoder {
    pub fn new(table: Vec<Vec<u8>>) -> Result<Self> {
        if table.iter().flatten().any(|&v| v > 1) {
            return Err(Error::Invariant("decoder entries must be 0 or 1".into()));
        }
        Ok(Self { table })
    }

    pub fn value(&self, x: usize, y: usize) -> u8 {
        self.table[x][y]
    }
}

/// One element of `H`: a simplex vector over actions for every `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkHypothesis {
    pub f_index: usize,
    pub phi_index: usize,
    /// `table[x][y][a]`.
    pub table: Vec<Vec<Vec<f64>>>,
}

impl IkHypothesis {
    pub fn predict(&self, x: usize, y: usize) -> &[f64] {
        &self.table[x][y]
    }

    pub fn prob(&self, x: usize, y: usize, a: usize) -> f64 {
        self.table[x][y][a]
    }
}

/// Builds `h_a(x, y) = f(x,a) phi(x,y) / S(x) + (1 - f(x,a)) (1 - phi(x,y)) / (K - S(x))`
/// with `S(x) = sum_a f(x, a)`. Source indices are left at zero.
pub fn build_ik(f: &RewardFunction, phi: &FeedbackDecoder) -> Result<IkHypothesis> {
    if f.table.len() != phi.table.len() {
        return Err(Error::Construction("reward function and decoder disagree on context count".into()));
    }
    let mut table = Vec::with_capacity(f.table.len());
    for (x, (row, dec)) in f.table.iter().zip(&phi.table).enumerate() {
        let k = row.len() as f64;
        let s: f64 = row.iter().sum();
        if !(s > 0.0 && s < k) {
            return Err(Error::Construction(format!("context {x}: reward row sum {s} must lie strictly in (0, K)")));
        }
        let per_y = dec
            .iter()
            .map(|&p| {
                if p == 1 {
                    row.iter().map(|&v| v / s).collect()
                } else {
                    row.iter().map(|&v| (1.0 - v) / (k - s)).collect()
                }
            })
            .collect();
        table.push(per_y);
    }
    Ok(IkHypothesis { f_index: 0, phi_index: 0, table })
}

/// Greedy policy of `f`, lowest action index on ties.
pub fn greedy_policy(f: &RewardFunction) -> DeterministicPolicy {
    DeterministicPolicy::new(f.table.iter().map(|row| argmax(row)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionClasses {
    pub f_list: Vec<RewardFunction>,
    pub phi_list: Vec<FeedbackDecoder>,
    /// Product class, `f` outer and `phi` inner: index `i * |Phi| + j`.
    pub h_list: Vec<IkHypothesis>,
}

impl FunctionClasses {
    pub fn new(f_list: Vec<RewardFunction>, phi_list: Vec<FeedbackDecoder>) -> Result<Self> {
        if f_list.is_empty() || phi_list.is_empty() {
            return Err(Error::Construction("function classes must be nonempty".into()));
        }
        let mut h_list = Vec::with_capacity(f_list.len() * phi_list.len());
        for (i, f) in f_list.iter().enumerate() {
            for (j, phi) in phi_list.iter().enumerate() {
                let mut h = build_ik(f, phi)?;
                h.f_index = i;
                h.phi_index = j;
                h_list.push(h);
            }
        }
        Ok(Self { f_list, phi_list, h_list })
    }

    pub fn h_index(&self, f_index: usize, phi_index: usize) -> usize {
        f_index * self.phi_list.len() + phi_index
    }

    pub fn policies(&self) -> Vec<DeterministicPolicy> {
        self.f_list.iter().map(greedy_policy).collect()
    }

    /// Position of the environment's reward table in `f_list`.
    pub fn find_f(&self, f: &RewardFunction) -> Option<usize> {
        self.f_list.iter().position(|g| g == f)
    }

    pub fn find_phi(&self, phi: &FeedbackDecoder) -> Option<usize> {
        self.phi_list.iter().position(|p| p == phi)
    }

    /// Index in `h_list` of the hypothesis built from the true pair.
    pub fn true_h_index(&self, env: &EnvironmentSpec) -> Option<usize> {
        let fi = self.find_f(&env.true_reward())?;
        let pi = self.find_phi(&env.true_decoder())?;
        Some(self.h_index(fi, pi))
    }

    /// Checks shapes against `env` and that `f*`, `phi*` (and, when given,
    /// the lower-bound table) are members.
    pub fn check_realizable(&self, env: &EnvironmentSpec, lower: Option<&RewardFunction>) -> Result<()> {
        for f in &self.f_list {
            if f.table.len() != env.context_count || f.table.iter().any(|r| r.len() != env.action_count) {
                return Err(Error::Invariant("reward function shape does not match the environment".into()));
            }
        }
        for phi in &self.phi_list {
            if phi.table.len() != env.context_count || phi.table.iter().any(|r| r.len() != env.feedback_count) {
                return Err(Error::Invariant("decoder shape does not match the environment".into()));
            }
        }
        if self.find_f(&env.true_reward()).is_none() {
            return Err(Error::Invariant("reward class does not contain f*".into()));
        }
        if self.find_phi(&env.true_decoder()).is_none() {
            return Err(Error::Invariant("decoder class does not contain phi*".into()));
        }
        if let Some(lower) = lower {
            if self.find_f(lower).is_none() {
                return Err(Error::Invariant("reward class does not contain the lower-bound table".into()));
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> ClassesDocument {
        ClassesDocument { f_list: self.f_list.clone(), phi_list: self.phi_list.clone() }
    }
}

/// Serialized classes; `h_list` is rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassesDocument {
    pub f_list: Vec<RewardFunction>,
    pub phi_list: Vec<FeedbackDecoder>,
}

impl ClassesDocument {
    pub fn into_classes(self) -> Result<FunctionClasses> {
        let f_list = self.f_list.into_iter().map(|f| RewardFunction::new(f.table)).collect::<Result<_>>()?;
        let phi_list = self.phi_list.into_iter().map(|p| FeedbackDecoder::new(p.table)).collect::<Result<_>>()?;
        FunctionClasses::new(f_list, phi_list)
    }
}

/// Draws an admissible decoy row: `n` distinct actions carry `min(1, alpha/n)`.
fn decoy_row(k: usize, alpha: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let max_support = (alpha.floor() as usize).clamp(1, k);
    let n = rng.random_range(1..=max_support);
    let level = (alpha / n as f64).min(1.0);
    let mut actions: Vec<usize> = (0..k).collect();
    actions.shuffle(rng);
    let mut row = vec![0.0; k];
    for &a in &actions[..n] {
        row[a] = level;
    }
    row
}

/// Realizable finite classes for `env`: `F = {f*, lower-bound table} + decoys`
/// and `Phi = {phi*} + decoys`, deduplicated, truth first.
pub fn make_classes(env: &EnvironmentSpec, n_decoy_f: usize, n_decoy_phi: usize, params: DecoderParams, seed: u64) -> Result<FunctionClasses> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fstar = env.true_reward();
    let lower = env.underline_fstar(params.beta, params.sigma)?;

    let mut f_list = vec![fstar];
    let mut seen: HashSet<Vec<u64>> = f_list.iter().map(RewardFunction::key).collect();
    if seen.insert(lower.key()) {
        f_list.push(lower);
    }
    let mut attempts = 0;
    let mut added = 0;
    while added < n_decoy_f {
        attempts += 1;
        if attempts > DECOY_ATTEMPTS_PER_ITEM * n_decoy_f.max(1) {
            return Err(Error::Config(format!("could not draw {n_decoy_f} distinct admissible reward decoys")));
        }
        let table: Vec<Vec<f64>> = (0..env.context_count).map(|_| decoy_row(env.action_count, env.alpha, &mut rng)).collect();
        let f = RewardFunction { table };
        if !f.is_admissible(env.alpha, env.theta) {
            continue;
        }
        if seen.insert(f.key()) {
            f_list.push(f);
            added += 1;
        }
    }

    let phistar = env.true_decoder();
    let mut phi_seen: HashSet<FeedbackDecoder> = HashSet::from([phistar.clone()]);
    let mut phi_list = vec![phistar];
    attempts = 0;
    while phi_list.len() < 1 + n_decoy_phi {
        attempts += 1;
        if attempts > DECOY_ATTEMPTS_PER_ITEM * n_decoy_phi.max(1) {
            return Err(Error::Config(format!("could not draw {n_decoy_phi} distinct decoders")));
        }
        let table = (0..env.context_count)
            .map(|_| (0..env.feedback_count).map(|_| u8::from(rng.random::<bool>())).collect())
            .collect();
        let phi = FeedbackDecoder { table };
        if phi_seen.insert(phi.clone()) {
            phi_list.push(phi);
        }
    }
    FunctionClasses::new(f_list, phi_list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_environment, GeneratorParams};
    use crate::estimation::DecoderParams;

    fn env_a_params() -> DecoderParams {
        DecoderParams::new(0.75, 0.25).unwrap()
    }

    #[test]
    fn ik_of_env_a_truth() {
        let env = EnvironmentSpec::env_a();
        let h = build_ik(&env.true_reward(), &env.true_decoder()).unwrap();
        assert_eq!(h.predict(0, 0), &[1.0, 0.0, 0.0]);
        assert_eq!(h.predict(0, 1), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn ik_rejects_degenerate_rows() {
        let phi = FeedbackDecoder::new(vec![vec![1, 0]]).unwrap();
        let zero = RewardFunction::new(vec![vec![0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(build_ik(&zero, &phi), Err(Error::Construction(_))));
        let full = RewardFunction::new(vec![vec![1.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(build_ik(&full, &phi), Err(Error::Construction(_))));
    }

    #[test]
    fn greedy_tie_break_and_scale_invariance() {
        assert_eq!(greedy_policy(&EnvironmentSpec::env_a().true_reward()).choice, vec![0]);
        let flat = RewardFunction::new(vec![vec![0.2, 0.2, 0.2]]).unwrap();
        assert_eq!(greedy_policy(&flat).choice, vec![0]);
        let f = RewardFunction::new(vec![vec![0.1, 0.7, 0.3], vec![0.4, 0.4, 0.9]]).unwrap();
        let scaled = RewardFunction::new(f.table.iter().map(|r| r.iter().map(|v| v * 0.37).collect()).collect()).unwrap();
        assert_eq!(greedy_policy(&f), greedy_policy(&scaled));
    }

    #[test]
    fn env_a_classes_dedup_lower_bound() {
        let env = EnvironmentSpec::env_a();
        let classes = make_classes(&env, 1, 1, env_a_params(), 5).unwrap();
        assert_eq!(classes.f_list.len(), 2);
        assert_eq!(classes.phi_list.len(), 2);
        assert_eq!(classes.h_list.len(), classes.f_list.len() * classes.phi_list.len());
    }

    #[test]
    fn truth_only_classes() {
        let env = make_environment(GeneratorParams { contexts: 6, actions: 5, positives: 1, feedback_per_context: 3, seed: 2 }).unwrap();
        let params = DecoderParams::from_identifiability(env.theta, env.alpha, env.action_count).unwrap();
        let classes = make_classes(&env, 0, 0, params, 0).unwrap();
        assert_eq!(classes.f_list, vec![env.true_reward()]);
        assert_eq!(classes.phi_list, vec![env.true_decoder()]);
        assert_eq!(classes.true_h_index(&env), Some(0));
    }

    #[test]
    fn decoys_pass_admission_filter() {
        for seed in 0..10 {
            let env = make_environment(GeneratorParams { contexts: 7, actions: 6, positives: 2, feedback_per_context: 3, seed }).unwrap();
            let params = DecoderParams::from_identifiability(env.theta, env.alpha, env.action_count).unwrap();
            let classes = make_classes(&env, 5, 4, params, seed).unwrap();
            assert_eq!(classes.f_list.len(), 6);
            assert!(classes.f_list.iter().all(|f| f.is_admissible(env.alpha, env.theta)));
            classes.check_realizable(&env, Some(&env.underline_fstar(params.beta, params.sigma).unwrap())).unwrap();
        }
    }

    #[test]
    fn too_many_decoys_is_a_config_error() {
        // The fixture admits only three one-hot rows.
        let env = EnvironmentSpec::env_a();
        assert!(matches!(make_classes(&env, 3, 0, env_a_params(), 1), Err(Error::Config(_))));
    }

    #[test]
    fn document_round_trip() {
        let env = make_environment(GeneratorParams { contexts: 4, actions: 5, positives: 1, feedback_per_context: 3, seed: 8 }).unwrap();
        let params = DecoderParams::from_identifiability(env.theta, env.alpha, env.action_count).unwrap();
        let classes = make_classes(&env, 2, 2, params, 3).unwrap();
        let text = serde_json::to_string(&classes.to_document()).unwrap();
        let back: ClassesDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_classes().unwrap(), classes);
    }

    proptest::proptest! {
        #[test]
        fn ik_rows_are_distributions(seed in 0u64..500, positives in 1usize..3) {
            let env = make_environment(GeneratorParams { contexts: 4, actions: 5, positives, feedback_per_context: 3, seed }).unwrap();
            let h = build_ik(&env.true_reward(), &env.true_decoder()).unwrap();
            for x in 0..env.context_count {
                for y in 0..env.feedback_count {
                    let row = h.predict(x, y);
                    proptest::prop_assert!(row.iter().all(|&p| p >= 0.0));
                    proptest::prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
