//! Python bindings for `igl-core`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;

use igl_core::env::{EnvironmentDocument, GeneratorParams};
use igl_core::harness::verify;
use igl_core::{DecoderParams, DeterministicPolicy, GammaSchedule, OffPolicyConfig, OnPolicyConfig};

fn to_py<T>(r: igl_core::Result<T>) -> PyResult<T> {
    r.map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "Environment", frozen)]
struct PyEnvironment {
    inner: igl_core::EnvironmentSpec,
}

#[pymethods]
impl PyEnvironment {
    /// Random binary-reward environment.
    #[staticmethod]
    #[pyo3(signature = (contexts, actions, positives, feedback, seed=0))]
    fn generate(contexts: usize, actions: usize, positives: usize, feedback: usize, seed: u64) -> PyResult<Self> {
        let params = GeneratorParams { contexts, actions, positives, feedback_per_context: feedback, seed };
        Ok(Self { inner: to_py(igl_core::make_environment(params))? })
    }

    #[staticmethod]
    fn env_a() -> Self {
        Self { inner: igl_core::EnvironmentSpec::env_a() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: to_py(EnvironmentDocument::from_json(text))?.environment })
    }

    fn to_json(&self) -> PyResult<String> {
        to_py(EnvironmentDocument::new(self.inner.clone()).to_json())
    }

    #[getter]
    fn context_count(&self) -> usize {
        self.inner.context_count
    }

    #[getter]
    fn action_count(&self) -> usize {
        self.inner.action_count
    }

    #[getter]
    fn feedback_count(&self) -> usize {
        self.inner.feedback_count
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn context_dist(&self) -> Vec<f64> {
        self.inner.context_dist.clone()
    }

    #[getter]
    fn reward_mean(&self) -> Vec<Vec<f64>> {
        self.inner.reward_mean.clone()
    }

    fn true_posterior(&self, x: usize, y: usize) -> PyResult<Vec<f64>> {
        to_py(self.inner.true_posterior(x, y))
    }

    fn optimal_policy(&self) -> Vec<usize> {
        self.inner.optimal_policy().choice
    }

    fn exact_value(&self, policy: Vec<usize>) -> PyResult<f64> {
        let policy = self.policy(policy)?;
        Ok(self.inner.exact_value(&policy))
    }

    fn exact_surrogate_value(&self, policy: Vec<usize>, beta: f64, sigma: f64) -> PyResult<f64> {
        let policy = self.policy(policy)?;
        to_py(self.inner.exact_surrogate_value(&policy, beta, sigma))
    }

    fn underline_fstar(&self, beta: f64, sigma: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_py(self.inner.underline_fstar(beta, sigma))?.table)
    }

    /// `n` uniform rounds as `(context, action, feedback, hidden_reward)` tuples.
    fn sample_uniform(&self, n: usize, seed: u64) -> PyResult<Vec<(usize, usize, usize, u8)>> {
        let k = self.inner.action_count;
        let u = vec![1.0 / k as f64; k];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (1..=n)
            .map(|t| {
                let r = to_py(self.inner.sample_round(t, &u, &mut rng))?;
                Ok((r.context, r.action, r.feedback, r.hidden_reward))
            })
            .collect()
    }

    /// Runs every verification check; returns `(name, passed, deviation, detail)` rows.
    #[pyo3(signature = (mc_samples=100_000, seed=0))]
    fn verify(&self, mc_samples: usize, seed: u64) -> PyResult<Vec<(String, bool, f64, String)>> {
        let report = to_py(verify::cmd_verify(&self.inner, None, mc_samples, seed))?;
        Ok(report.checks.into_iter().map(|c| (c.name, c.passed, c.deviation, c.detail)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Environment(contexts={}, actions={}, feedback={}, alpha={}, theta={})",
            self.inner.context_count, self.inner.action_count, self.inner.feedback_count, self.inner.alpha, self.inner.theta
        )
    }
}

impl PyEnvironment {
    fn policy(&self, choice: Vec<usize>) -> PyResult<DeterministicPolicy> {
        if choice.len() != self.inner.context_count || choice.iter().any(|&a| a >= self.inner.action_count) {
            return Err(PyValueError::new_err("policy must give one valid action per context"));
        }
        Ok(DeterministicPolicy::new(choice))
    }
}

#[pyclass(name = "FunctionClasses", frozen)]
struct PyFunctionClasses {
    inner: igl_core::FunctionClasses,
}

#[pymethods]
impl PyFunctionClasses {
    /// Realizable classes with decoys; `beta`/`sigma` default to the
    /// identifiability-derived decoder.
    #[staticmethod]
    #[pyo3(signature = (env, decoy_f=3, decoy_phi=3, seed=0, beta=None, sigma=None))]
    fn make(env: &PyEnvironment, decoy_f: usize, decoy_phi: usize, seed: u64, beta: Option<f64>, sigma: Option<f64>) -> PyResult<Self> {
        let params = decoder(&env.inner, beta, sigma)?;
        Ok(Self { inner: to_py(igl_core::make_classes(&env.inner, decoy_f, decoy_phi, params, seed))? })
    }

    #[getter]
    fn f_count(&self) -> usize {
        self.inner.f_list.len()
    }

    #[getter]
    fn phi_count(&self) -> usize {
        self.inner.phi_list.len()
    }

    #[getter]
    fn h_count(&self) -> usize {
        self.inner.h_list.len()
    }

    fn true_h_index(&self, env: &PyEnvironment) -> Option<usize> {
        self.inner.true_h_index(&env.inner)
    }

    /// `h_a(x, y)` for hypothesis `index`.
    fn ik_row(&self, index: usize, x: usize, y: usize) -> PyResult<Vec<f64>> {
        let h = self.inner.h_list.get(index).ok_or_else(|| PyValueError::new_err("hypothesis index out of range"))?;
        Ok(h.predict(x, y).to_vec())
    }

    /// ERM over `H` on `n` fresh uniform rounds; returns `(h_index, loss)`.
    fn erm_fit(&self, env: &PyEnvironment, n: usize, seed: u64) -> PyResult<(usize, f64)> {
        let k = env.inner.action_count;
        let u = vec![1.0 / k as f64; k];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let records = (1..=n).map(|t| env.inner.sample_round(t, &u, &mut rng)).collect::<igl_core::Result<Vec<_>>>();
        let data = to_py(igl_core::UniformSample::new(to_py(records)?))?;
        let fit = to_py(igl_core::erm_fit(&data, &self.inner))?;
        Ok((fit.index, fit.loss))
    }
}

fn decoder(env: &igl_core::EnvironmentSpec, beta: Option<f64>, sigma: Option<f64>) -> PyResult<DecoderParams> {
    to_py(match (beta, sigma) {
        (Some(b), Some(s)) => DecoderParams::new(b, s),
        (None, Some(s)) => DecoderParams::with_sigma(env.theta, env.alpha, s),
        (Some(b), None) => DecoderParams::for_env(env).and_then(|p| DecoderParams::new(b, p.sigma)),
        (None, None) => DecoderParams::for_env(env),
    })
}

#[pyclass(name = "RunResult", frozen)]
struct PyRunResult {
    inner: igl_core::RunResult,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm.name()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn explore_n(&self) -> usize {
        self.inner.explore_n
    }

    #[getter]
    fn final_regret(&self) -> f64 {
        self.inner.final_regret()
    }

    #[getter]
    fn optimal_value(&self) -> f64 {
        self.inner.optimal_value
    }

    #[getter]
    fn cumulative_regret(&self) -> Vec<f64> {
        self.inner.cumulative_regret.clone()
    }

    #[getter]
    fn chosen_policy(&self) -> Vec<usize> {
        self.inner.chosen_policy.choice.clone()
    }

    /// `(h_index, f_index, phi_index, loss)` of the fitted hypothesis.
    #[getter]
    fn fitted_h(&self) -> (usize, usize, usize, f64) {
        let f = self.inner.fitted_h;
        (f.h_index, f.f_index, f.phi_index, f.loss)
    }

    fn tail_mean_reward(&self, window: usize) -> f64 {
        self.inner.tail_mean_reward(window)
    }

    fn regret_csv(&self) -> PyResult<String> {
        to_py(self.inner.regret_csv_string())
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }
}

#[pyfunction]
#[pyo3(signature = (env, classes, horizon, explore_n, seed=0, beta=None, sigma=None))]
fn run_offpolicy(
    env: &PyEnvironment,
    classes: &PyFunctionClasses,
    horizon: usize,
    explore_n: usize,
    seed: u64,
    beta: Option<f64>,
    sigma: Option<f64>,
) -> PyResult<PyRunResult> {
    let cfg = OffPolicyConfig { horizon, explore_n, decoder: decoder(&env.inner, beta, sigma)?, seed };
    Ok(PyRunResult { inner: to_py(igl_core::run_offpolicy(&env.inner, &classes.inner, &cfg))? })
}

/// `gamma=None` uses `sqrt(K t)`; a number fixes it.
#[pyfunction]
#[pyo3(signature = (env, classes, horizon, explore_n, seed=0, gamma=None, eta=0.5, beta=None, sigma=None))]
#[allow(clippy::too_many_arguments)]
fn run_onpolicy(
    env: &PyEnvironment,
    classes: &PyFunctionClasses,
    horizon: usize,
    explore_n: usize,
    seed: u64,
    gamma: Option<f64>,
    eta: f64,
    beta: Option<f64>,
    sigma: Option<f64>,
) -> PyResult<PyRunResult> {
    let gamma = gamma.map_or(GammaSchedule::SqrtKt(1.0), GammaSchedule::Fixed);
    let cfg = OnPolicyConfig { horizon, explore_n, gamma, decoder: decoder(&env.inner, beta, sigma)?, eta, seed };
    Ok(PyRunResult { inner: to_py(igl_core::run_onpolicy(&env.inner, &classes.inner, &cfg))? })
}

#[pyfunction]
fn sigma_default(theta: f64, alpha: f64, action_count: usize) -> PyResult<f64> {
    to_py(igl_core::sigma_default(theta, alpha, action_count))
}

#[pyfunction]
fn lipschitz_clamp(v: f64, beta: f64, sigma: f64) -> f64 {
    igl_core::lipschitz_clamp(v, beta, sigma)
}

#[pyfunction]
fn igw_distribution(scores: Vec<f64>, gamma: f64) -> PyResult<Vec<f64>> {
    to_py(igl_core::igw_distribution(&scores, gamma))
}

#[pyfunction]
#[pyo3(signature = (horizon, action_count, sigma, h_count, scale=igl_core::harness::DEFAULT_N_SCALE))]
fn tuned_explore_n(horizon: usize, action_count: usize, sigma: f64, h_count: usize, scale: f64) -> usize {
    igl_core::tuned_explore_n(horizon, action_count, sigma, h_count, scale)
}

#[pymodule]
fn igl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyFunctionClasses>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run_offpolicy, m)?)?;
    m.add_function(wrap_pyfunction!(run_onpolicy, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_default, m)?)?;
    m.add_function(wrap_pyfunction!(lipschitz_clamp, m)?)?;
    m.add_function(wrap_pyfunction!(igw_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(tuned_explore_n, m)?)?;
    Ok(())
}
