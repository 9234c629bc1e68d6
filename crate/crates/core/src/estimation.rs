//! Inverse-kinematics ERM and the Lipschitz reward decoder.

use serde::{Deserialize, Serialize};

use crate::classes::{FunctionClasses, IkHypothesis};
use crate::env::{EnvironmentSpec, InteractionRecord};
use crate::error::{Error, Result};
use crate::run::FittedHypothesis;

/// Ramp width `(theta/alpha - 1/(K - alpha)) / 2`.
pub fn sigma_default(theta: f64, alpha: f64, action_count: usize) -> Result<f64> {
    let k = action_count as f64;
    let sigma = 0.5 * (theta / alpha - 1.0 / (k - alpha));
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Config(format!(
            "identifiability violated: theta = {theta}, alpha = {alpha}, K = {action_count} give sigma = {sigma}"
        )));
    }
    Ok(sigma)
}

/// `G(v, beta, sigma)`: 0 below `beta`, linear on `[beta, beta + sigma)`, 1 above.
pub fn lipschitz_clamp(v: f64, beta: f64, sigma: f64) -> f64 {
    if v < beta {
        0.0
    } else if v >= beta + sigma {
        1.0
    } else {
        ((v - beta) / sigma).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderParams {
    pub beta: f64,
    pub sigma: f64,
}

impl DecoderParams {
    pub fn new(beta: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() || !beta.is_finite() {
            return Err(Error::Config(format!("invalid decoder parameters beta = {beta}, sigma = {sigma}")));
        }
        Ok(Self { beta, sigma })
    }

    /// `beta = theta/alpha - sigma` with the given ramp width.
    pub fn with_sigma(theta: f64, alpha: f64, sigma: f64) -> Result<Self> {
        let threshold = theta / alpha;
        let mut beta = threshold - sigma;
        // keep beta + sigma <= theta/alpha under rounding so G(theta/alpha) = 1
        while beta + sigma > threshold {
            beta = beta.next_down();
        }
        Self::new(beta, sigma)
    }

    /// Parameters with `sigma = sigma_default(theta, alpha, K)`.
    pub fn from_identifiability(theta: f64, alpha: f64, action_count: usize) -> Result<Self> {
        Self::with_sigma(theta, alpha, sigma_default(theta, alpha, action_count)?)
    }

    pub fn for_env(env: &EnvironmentSpec) -> Result<Self> {
        Self::from_identifiability(env.theta, env.alpha, env.action_count)
    }
}

/// Rounds played under the uniform action distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSample {
    records: Vec<InteractionRecord>,
}

impl UniformSample {
    pub fn new(records: Vec<InteractionRecord>) -> Result<Self> {
        for rec in &records {
            let k = rec.action_dist.len() as f64;
            if rec.action_dist.iter().any(|&p| (p - 1.0 / k).abs() > 1e-12) {
                return Err(Error::Precondition(format!("round {} was not played uniformly", rec.round)));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Result of [`erm_fit`]: the minimizer and its summed squared loss.
#[derive(Debug, Clone, Copy)]
pub struct ErmFit<'a> {
    pub index: usize,
    pub hypothesis: &'a IkHypothesis,
    pub loss: f64,
}

impl ErmFit<'_> {
    pub fn identity(&self) -> FittedHypothesis {
        FittedHypothesis {
            h_index: self.index,
            f_index: self.hypothesis.f_index,
            phi_index: self.hypothesis.phi_index,
            loss: self.loss,
        }
    }
}

/// `sum_i || h(x_i, y_i) - e_{a_i} ||^2` for every hypothesis in `classes`.
pub fn erm_losses(data: &UniformSample, classes: &FunctionClasses) -> Result<Vec<f64>> {
    let first = classes.h_list.first().ok_or_else(|| Error::Precondition("empty hypothesis class".into()))?;
    let m = first.table.len();
    let ny = first.table.first().map_or(0, Vec::len);
    let k = first.table.first().and_then(|r| r.first()).map_or(0, Vec::len);
    let mut counts = vec![vec![vec![0u64; k]; ny]; m];
    for rec in data.records() {
        if rec.context >= m || rec.feedback >= ny || rec.action >= k {
            return Err(Error::Domain(format!("round {} does not fit the class shapes", rec.round)));
        }
        counts[rec.context][rec.feedback][rec.action] += 1;
    }
    Ok(classes
        .h_list
        .iter()
        .map(|h| {
            let mut loss = 0.0;
            for (x, per_y) in counts.iter().enumerate() {
                for (y, per_a) in per_y.iter().enumerate() {
                    let n: u64 = per_a.iter().sum();
                    if n == 0 {
                        continue;
                    }
                    let p = h.predict(x, y);
                    let sq: f64 = p.iter().map(|v| v * v).sum();
                    let cross: f64 = per_a.iter().zip(p).map(|(&c, &v)| c as f64 * v).sum();
                    loss += n as f64 * (sq + 1.0) - 2.0 * cross;
                }
            }
            loss
        })
        .collect())
}

/// Exhaustive squared-loss ERM over `classes.h_list`; ties go to the earlier entry.
pub fn erm_fit<'a>(data: &UniformSample, classes: &'a FunctionClasses) -> Result<ErmFit<'a>> {
    if data.is_empty() {
        return Err(Error::Precondition("ERM needs at least one sample".into()));
    }
    let losses = erm_losses(data, classes)?;
    let mut best = 0;
    for (i, &l) in losses.iter().enumerate().skip(1) {
        if l < losses[best] {
            best = i;
        }
    }
    Ok(ErmFit { index: best, hypothesis: &classes.h_list[best], loss: losses[best] })
}

/// `E_{x ~ D, a ~ Unif, y | x, a} || h(x, y) - e_a ||^2`, computed exactly.
pub fn population_risk(env: &EnvironmentSpec, h: &IkHypothesis) -> f64 {
    let k = env.action_count as f64;
    env.outcomes()
        .into_iter()
        .map(|o| {
            let p = h.predict(o.context, o.feedback);
            let sq: f64 = p.iter().enumerate().map(|(a, v)| if a == o.action { (v - 1.0).powi(2) } else { v * v }).sum();
            env.context_dist[o.context] * o.prob * sq / k
        })
        .sum()
}

/// `G(h_a(x, y), beta, sigma)`.
pub fn decode_reward(h: &IkHypothesis, x: usize, y: usize, a: usize, params: DecoderParams) -> f64 {
    lipschitz_clamp(h.prob(x, y, a), params.beta, params.sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{build_ik, make_classes};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigma_default_values() {
        assert_eq!(sigma_default(1.0, 1.0, 3).unwrap(), 0.25);
        assert!((sigma_default(1.0, 1.0, 10).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert!(matches!(sigma_default(1.0, 2.5, 5), Err(Error::Config(_))));
    }

    #[test]
    fn clamp_values() {
        assert_eq!(lipschitz_clamp(0.2, 0.5, 0.1), 0.0);
        assert_eq!(lipschitz_clamp(0.65, 0.5, 0.1), 1.0);
        assert!((lipschitz_clamp(0.55, 0.5, 0.1) - 0.5).abs() < 1e-12);
        assert_eq!(lipschitz_clamp(0.5, 0.5, 0.1), 0.0);
        assert_eq!(lipschitz_clamp(0.5 + 0.1, 0.5, 0.1), 1.0);
    }

    #[test]
    fn derived_params_keep_threshold_exact() {
        for k in 3..12 {
            for s in 1..=((k - 1) / 2) {
                let p = DecoderParams::from_identifiability(1.0, s as f64, k).unwrap();
                assert_eq!(lipschitz_clamp(1.0 / s as f64, p.beta, p.sigma), 1.0, "K={k} s={s}");
                assert!(p.beta >= 0.0 && p.beta + p.sigma <= 1.0);
            }
        }
    }

    #[test]
    fn decode_on_env_a() {
        let env = EnvironmentSpec::env_a();
        let h = build_ik(&env.true_reward(), &env.true_decoder()).unwrap();
        let p = DecoderParams::new(0.75, 0.25).unwrap();
        assert_eq!(decode_reward(&h, 0, 0, 0, p), 1.0);
        assert_eq!(decode_reward(&h, 0, 1, 1, p), 0.0);
    }

    fn uniform_rounds(env: &EnvironmentSpec, n: usize, seed: u64) -> UniformSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = vec![1.0 / env.action_count as f64; env.action_count];
        UniformSample::new((0..n).map(|t| env.sample_round(t + 1, &u, &mut rng).unwrap()).collect()).unwrap()
    }

    #[test]
    fn erm_matches_brute_force_and_finds_truth_on_env_a() {
        let env = EnvironmentSpec::env_a();
        let classes = make_classes(&env, 1, 1, DecoderParams::new(0.75, 0.25).unwrap(), 11).unwrap();
        let data = uniform_rounds(&env, 2000, 4);
        let fit = erm_fit(&data, &classes).unwrap();
        // direct summation over records
        let brute: Vec<f64> = classes
            .h_list
            .iter()
            .map(|h| {
                data.records()
                    .iter()
                    .map(|r| {
                        h.predict(r.context, r.feedback)
                            .iter()
                            .enumerate()
                            .map(|(a, v)| if a == r.action { (v - 1.0).powi(2) } else { v * v })
                            .sum::<f64>()
                    })
                    .sum()
            })
            .collect();
        let brute_best = (0..brute.len()).fold(0, |b, i| if brute[i] < brute[b] { i } else { b });
        assert_eq!(fit.index, brute_best);
        assert!((fit.loss - brute[brute_best]).abs() < 1e-6);
        assert_eq!(Some(fit.index), classes.true_h_index(&env));
    }

    #[test]
    fn erm_on_singleton_and_empty() {
        let env = EnvironmentSpec::env_a();
        let classes = make_classes(&env, 0, 0, DecoderParams::new(0.75, 0.25).unwrap(), 0).unwrap();
        let data = uniform_rounds(&env, 10, 1);
        assert_eq!(erm_fit(&data, &classes).unwrap().index, 0);
        let empty = UniformSample::new(Vec::new()).unwrap();
        assert!(matches!(erm_fit(&empty, &classes), Err(Error::Precondition(_))));
    }

    #[test]
    fn uniform_sample_rejects_other_policies() {
        let env = EnvironmentSpec::env_a();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = env.sample_round(1, &[1.0, 0.0, 0.0], &mut rng).unwrap();
        assert!(UniformSample::new(vec![rec]).is_err());
    }

    #[test]
    fn truth_minimizes_population_risk() {
        let env = crate::env::make_environment(crate::env::GeneratorParams {
            contexts: 5,
            actions: 5,
            positives: 2,
            feedback_per_context: 3,
            seed: 21,
        })
        .unwrap();
        let classes = make_classes(&env, 3, 3, DecoderParams::for_env(&env).unwrap(), 2).unwrap();
        let star = classes.true_h_index(&env).unwrap();
        let r_star = population_risk(&env, &classes.h_list[star]);
        for h in &classes.h_list {
            assert!(population_risk(&env, h) >= r_star - 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn clamp_is_monotone_and_lipschitz(beta in 0.0..1.0f64, sigma in 1e-3..1.0f64, u in 0.0..1.0f64, v in 0.0..1.0f64) {
            let (gu, gv) = (lipschitz_clamp(u, beta, sigma), lipschitz_clamp(v, beta, sigma));
            proptest::prop_assert!((0.0..=1.0).contains(&gu));
            if u <= v {
                proptest::prop_assert!(gu <= gv);
            }
            proptest::prop_assert!((gu - gv).abs() <= (u - v).abs() / sigma + 1e-12);
        }
    }
}
