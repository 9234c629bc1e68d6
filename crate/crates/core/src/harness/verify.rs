//! Exhaustive and Monte-Carlo checks of the decoding identities on a loaded
//! environment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{build_ik, FunctionClasses};
use crate::env::EnvironmentSpec;
use crate::error::Result;
use crate::estimation::{lipschitz_clamp, DecoderParams};

/// Cells with fewer conditional samples are skipped by the Monte-Carlo check.
pub const MC_MIN_CELL_COUNT: u64 = 100;
/// Allowed deviation in binomial standard errors.
pub const MC_STANDARD_ERRORS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest measured violation (0 for a clean exhaustive check).
    pub deviation: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn result(name: &str, passed: bool, deviation: f64, detail: String) -> CheckResult {
    CheckResult { name: name.to_string(), passed, deviation, detail }
}

/// Decoding feedback through the kernel supports recovers the reward.
pub fn check_decoder(env: &EnvironmentSpec) -> CheckResult {
    let outcomes = env.outcomes();
    let bad = outcomes.iter().filter(|o| env.decode(o.context, o.feedback) != Some(o.reward)).count();
    result("decoder_recovers_reward", bad == 0, bad as f64, format!("{bad} of {} outcomes misdecoded", outcomes.len()))
}

/// Largest entrywise gap between `h(f*, phi*)` and the exact posterior.
pub fn check_ik_posterior(env: &EnvironmentSpec, tol: f64) -> Result<CheckResult> {
    let h = build_ik(&env.true_reward(), &env.true_decoder())?;
    let mut dev: f64 = 0.0;
    let mut cells = 0;
    for x in 0..env.context_count {
        for y in 0..env.feedback_count {
            if !env.is_reachable(x, y) {
                continue;
            }
            cells += 1;
            for (p, q) in env.true_posterior(x, y)?.iter().zip(h.predict(x, y)) {
                dev = dev.max((p - q).abs());
            }
        }
    }
    Ok(result("ik_equals_posterior", dev <= tol, dev, format!("{cells} reachable (x, y) cells")))
}

/// Shared body of the two underestimator checks: `r >= est(h*_a)` on every
/// outcome and `r == est(h*_a)` when `a` is optimal.
fn underestimator_check(env: &EnvironmentSpec, name: &str, est: impl Fn(f64) -> f64) -> Result<CheckResult> {
    let star = env.optimal_policy();
    let mut over: f64 = 0.0;
    let mut miss: f64 = 0.0;
    let outcomes = env.outcomes();
    for o in &outcomes {
        let h = env.true_posterior(o.context, o.feedback)?[o.action];
        let r = o.reward as f64;
        let e = est(h);
        over = over.max(e - r);
        if o.action == star.action(o.context) {
            miss = miss.max((e - r).abs());
        }
    }
    let dev = over.max(0.0).max(miss);
    Ok(result(
        name,
        dev == 0.0,
        dev,
        format!("{} outcomes; max overestimate {over:.3e}, max gap at optimal action {miss:.3e}", outcomes.len()),
    ))
}

/// Thresholding `h*` at `theta / alpha`.
pub fn check_indicator_underestimator(env: &EnvironmentSpec) -> Result<CheckResult> {
    let threshold = env.theta / env.alpha;
    underestimator_check(env, "indicator_underestimates", |h| if h >= threshold { 1.0 } else { 0.0 })
}

/// The Lipschitz clamp of `h*` with the given parameters.
pub fn check_clamp_underestimator(env: &EnvironmentSpec, params: DecoderParams) -> Result<CheckResult> {
    underestimator_check(env, "clamp_underestimates", |h| lipschitz_clamp(h, params.beta, params.sigma))
}

/// Surrogate and true value coincide at the optimal policy.
pub fn check_surrogate_equivalence(env: &EnvironmentSpec, params: DecoderParams) -> Result<CheckResult> {
    let star = env.optimal_policy();
    let v = env.exact_value(&star);
    let s = env.exact_surrogate_value(&star, params.beta, params.sigma)?;
    let dev = (v - s).abs();
    Ok(result("surrogate_equals_value_at_optimum", dev == 0.0, dev, format!("V(pi*) = {v}, surrogate = {s}")))
}

/// Empirical action frequencies per `(x, y)` under uniform play against the
/// exact posterior, within [`MC_STANDARD_ERRORS`] binomial standard errors.
pub fn check_monte_carlo_posterior(env: &EnvironmentSpec, samples: usize, seed: u64) -> Result<CheckResult> {
    let k = env.action_count;
    let uniform = vec![1.0 / k as f64; k];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![vec![0u64; k]; env.feedback_count]; env.context_count];
    for t in 0..samples {
        let rec = env.sample_round(t + 1, &uniform, &mut rng)?;
        counts[rec.context][rec.feedback][rec.action] += 1;
    }
    let mut worst_abs: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    let mut cells = 0;
    let mut failures = 0;
    for (x, row) in counts.iter().enumerate() {
        for (y, cell) in row.iter().enumerate() {
            let n: u64 = cell.iter().sum();
            if n < MC_MIN_CELL_COUNT {
                continue;
            }
            let post = env.true_posterior(x, y)?;
            for a in 0..k {
                cells += 1;
                let p = post[a];
                let phat = cell[a] as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                let d = (phat - p).abs();
                worst_abs = worst_abs.max(d);
                if se > 0.0 {
                    worst_z = worst_z.max(d / se);
                }
                if d > MC_STANDARD_ERRORS * se {
                    failures += 1;
                }
            }
        }
    }
    Ok(result(
        "monte_carlo_posterior",
        failures == 0 && cells > 0,
        worst_abs,
        format!("{samples} rounds, {cells} (x, y, a) cells checked, {failures} outside {MC_STANDARD_ERRORS} SE (worst z = {worst_z:.2})"),
    ))
}

/// Class-level checks: product cardinality and realizability.
pub fn check_classes(env: &EnvironmentSpec, classes: &FunctionClasses, params: DecoderParams) -> Result<CheckResult> {
    let lower = env.underline_fstar(params.beta, params.sigma)?;
    let product = classes.h_list.len() == classes.f_list.len() * classes.phi_list.len();
    let realizable = classes.check_realizable(env, Some(&lower));
    let truth_matches = match classes.true_h_index(env) {
        Some(i) => check_ik_against(env, classes, i)?,
        None => false,
    };
    let passed = product && realizable.is_ok() && truth_matches;
    let detail = match realizable {
        Ok(()) => format!("|F| = {}, |Phi| = {}, |H| = {}", classes.f_list.len(), classes.phi_list.len(), classes.h_list.len()),
        Err(e) => e.to_string(),
    };
    Ok(result("classes_realizable", passed, if passed { 0.0 } else { 1.0 }, detail))
}

fn check_ik_against(env: &EnvironmentSpec, classes: &FunctionClasses, index: usize) -> Result<bool> {
    let h = &classes.h_list[index];
    for x in 0..env.context_count {
        for y in 0..env.feedback_count {
            if env.is_reachable(x, y) && env.true_posterior(x, y)?.iter().zip(h.predict(x, y)).any(|(p, q)| (p - q).abs() > 1e-12) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Every check on one environment, using the default decoder width.
pub fn cmd_verify(env: &EnvironmentSpec, classes: Option<&FunctionClasses>, mc_samples: usize, seed: u64) -> Result<VerificationReport> {
    env.validate()?;
    let params = DecoderParams::for_env(env)?;
    let mut checks = vec![
        check_decoder(env),
        check_ik_posterior(env, 1e-12)?,
        check_indicator_underestimator(env)?,
        check_clamp_underestimator(env, params)?,
        check_surrogate_equivalence(env, params)?,
        check_monte_carlo_posterior(env, mc_samples, seed)?,
    ];
    if let Some(c) = classes {
        checks.push(check_classes(env, c, params)?);
    }
    Ok(VerificationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_a_passes_everything() {
        let env = EnvironmentSpec::env_a();
        let classes = crate::classes::make_classes(&env, 1, 1, DecoderParams::for_env(&env).unwrap(), 0).unwrap();
        let report = cmd_verify(&env, Some(&classes), 20_000, 1).unwrap();
        assert!(report.passed(), "{report:?}");
        for c in &report.checks[..5] {
            assert_eq!(c.deviation, 0.0, "{}", c.name);
        }
    }

    #[test]
    fn mis_set_decoder_fails_clamp_check() {
        let env = EnvironmentSpec::env_a();
        // threshold below the no-reward posterior 0.5
        let loose = DecoderParams::new(0.3, 0.1).unwrap();
        assert!(!check_clamp_underestimator(&env, loose).unwrap().passed);
    }
}
