//! Python bindings for the simulator and its training stack: enough to
//! configure a system, drive episodes slot by slot from Python, evaluate
//! the Lyapunov machinery, and run a small training job.

use irsmec::agents::AlgorithmKind;
use irsmec::cli::train_and_evaluate;
use irsmec::config::SystemConfig;
use irsmec::environment::{Action, Environment};
use irsmec::lyapunov;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

/// System configuration; build from defaults or a TOML string.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: SystemConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        Self {
            inner: SystemConfig::default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: SystemConfig::from_toml_str(text).map_err(to_py_err)?,
        })
    }

    fn to_toml(&self) -> PyResult<String> {
        toml::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.system.k
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.system.m
    }

    #[getter]
    fn slots_per_episode(&self) -> usize {
        self.inner.system.slots_per_episode
    }

    #[getter]
    fn episodes(&self) -> usize {
        self.inner.train.episodes
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(K={}, M={}, T={}, E={})",
            self.inner.system.k,
            self.inner.system.m,
            self.inner.system.slots_per_episode,
            self.inner.train.episodes
        )
    }
}

fn to_py_err<E: std::fmt::Display>(err: E) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// One simulated system instance driven slot by slot.
#[pyclass(name = "Env")]
struct PyEnv {
    env: Environment,
    rng: rand_chacha::ChaCha12Rng,
    seed: u64,
}

#[pymethods]
impl PyEnv {
    #[new]
    #[pyo3(signature = (config, seed = 0))]
    fn new(config: &PyConfig, seed: u64) -> PyResult<Self> {
        config.inner.validate().map_err(to_py_err)?;
        Ok(Self {
            env: Environment::new(config.inner.clone()),
            rng: irsmec::agents::stream(seed, irsmec::agents::stream_id::ENV),
            seed,
        })
    }

    fn reset(&mut self) {
        self.env.reset();
        self.rng = irsmec::agents::stream(self.seed, irsmec::agents::stream_id::ENV);
    }

    /// Centralized state vector (dimension 4K + 3).
    fn observe(&self) -> Vec<f64> {
        self.env.observe()
    }

    /// Per-device state vector [own queue, previous queue, x, y].
    fn observe_ed(&self, k: usize) -> PyResult<Vec<f64>> {
        if k >= self.env.cfg().system.k {
            return Err(PyValueError::new_err("device index out of range"));
        }
        Ok(self.env.observe_ed(k))
    }

    fn queues(&self) -> (Vec<f64>, f64) {
        (self.env.queues.local.clone(), self.env.queues.edge)
    }

    fn positions(&self) -> Vec<(f64, f64)> {
        self.env
            .mobility
            .position
            .iter()
            .map(|p| (p[0], p[1]))
            .collect()
    }

    fn running_ratio(&self) -> f64 {
        self.env.running_ratio()
    }

    /// Apply one slot's decisions and return the measured outcome.
    #[pyo3(signature = (offload, local, power, freq_local, freq_edge, theta))]
    fn step<'py>(
        &mut self,
        py: Python<'py>,
        offload: Vec<bool>,
        local: Vec<bool>,
        power: Vec<f64>,
        freq_local: Vec<f64>,
        freq_edge: f64,
        theta: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let action = Action::new(
            offload,
            local,
            power,
            freq_local,
            freq_edge,
            theta,
            self.env.cfg(),
        )
        .map_err(to_py_err)?;
        let queues_before = self.env.queues.clone();
        let outcome = self.env.step(&action, &mut self.rng);
        let cfg = self.env.cfg();
        let sample = Environment::drift_sample(
            &outcome,
            &queues_before,
            cfg.system.v_weight,
            cfg.train.reward_unit,
        );
        let reward = lyapunov::reward(&sample) / cfg.train.reward_scale;

        let dict = PyDict::new(py);
        dict.set_item("throughput", outcome.throughput)?;
        dict.set_item("energy", outcome.energy)?;
        dict.set_item("ratio", outcome.ratio)?;
        dict.set_item("reward", reward)?;
        dict.set_item("rates_offload", outcome.rates_offload.clone())?;
        dict.set_item("queue_in", outcome.queue_in.clone())?;
        dict.set_item("queue_out", outcome.queue_out.clone())?;
        dict.set_item("queues_local", self.env.queues.local.clone())?;
        dict.set_item("queue_edge", self.env.queues.edge)?;
        Ok(dict)
    }
}

/// `L(Q) = 1/2 sum Q_j^2`.
#[pyfunction]
fn lyapunov_value(q: Vec<f64>) -> f64 {
    lyapunov::lyapunov_value(&q)
}

/// One-slot Lyapunov drift between two queue vectors.
#[pyfunction]
fn lyapunov_drift(q_now: Vec<f64>, q_next: Vec<f64>) -> PyResult<f64> {
    if q_now.len() != q_next.len() {
        return Err(PyValueError::new_err("queue vectors must align"));
    }
    Ok(lyapunov::drift(&q_now, &q_next))
}

/// Fractional-transform verification over an enumerable grid of
/// (mean rate, mean energy) pairs.
#[pyfunction]
fn dinkelbach_check(grid: Vec<(f64, f64)>) -> PyResult<bool> {
    lyapunov::dinkelbach_check(&grid).map_err(to_py_err)
}

/// Drift-bound constant for the configured maxima.
#[pyfunction]
fn drift_bound_constant(config: &PyConfig) -> f64 {
    let cap = irsmec::agents::configured_rate_cap(&config.inner);
    lyapunov::bound_constant_b(&config.inner, cap)
}

/// Train one algorithm for the configured episode count and evaluate one
/// noise-free episode. Returns a summary dict.
#[pyfunction]
#[pyo3(signature = (config, algorithm = "lmiddpg", seed = 1))]
fn train_run<'py>(
    py: Python<'py>,
    config: &PyConfig,
    algorithm: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = AlgorithmKind::parse(algorithm).map_err(to_py_err)?;
    let (rows, eval) = train_and_evaluate(&config.inner, kind, seed).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("episodes", rows.len())?;
    dict.set_item(
        "sum_reward_per_episode",
        rows.iter().map(|r| r.sum_reward).collect::<Vec<f64>>(),
    )?;
    dict.set_item("final_ratio", eval.final_ratio)?;
    dict.set_item("mean_queue_local", eval.mean_queue_local)?;
    dict.set_item("mean_queue_edge", eval.mean_queue_edge)?;
    Ok(dict)
}

#[pymodule]
fn irsmec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyEnv>()?;
    m.add_function(wrap_pyfunction!(lyapunov_value, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_drift, m)?)?;
    m.add_function(wrap_pyfunction!(dinkelbach_check, m)?)?;
    m.add_function(wrap_pyfunction!(drift_bound_constant, m)?)?;
    m.add_function(wrap_pyfunction!(train_run, m)?)?;
    Ok(())
}
