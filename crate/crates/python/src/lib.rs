//! Python bindings: instances, the pricing policy, the pilots, the
//! refinement generator and the experiment harness.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use orbit_core::bco::{self, BcoParams};
use orbit_core::env::{self, ExperimentKind};
use orbit_core::hard_instance::{self, HardFamilyParams};
use orbit_core::harness::{self, ExperimentConfig as CoreConfig};
use orbit_core::orbit::{OrbitConfig, OrbitState};
use orbit_core::pilot::{PilotDecision, RidgeState};
use orbit_core::seed::{Purpose, SeedStream};
use orbit_core::{verify, OrbitError};

fn py_err(e: OrbitError) -> PyErr {
    if e.is_configuration() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// A pricing environment from one of the simulation designs.
#[pyclass(name = "Instance", module = "orbit_pricing")]
struct PyInstance {
    inner: env::Instance,
}

#[pymethods]
impl PyInstance {
    /// `kind` is "linear_iid", "anisotropic" or "sparse"; `seed` only drives
    /// the sparse support.
    #[new]
    #[pyo3(signature = (kind, d, seed = 0, epsilon = 1.0, s = 5))]
    fn new(kind: &str, d: usize, seed: u64, epsilon: f64, s: usize) -> PyResult<Self> {
        let kind = match kind {
            "linear_iid" => ExperimentKind::SphereIid,
            "anisotropic" => ExperimentKind::Anisotropic { epsilon },
            "sparse" => ExperimentKind::SparseCube { sparsity: s },
            other => return Err(PyValueError::new_err(format!("unknown design '{other}'"))),
        };
        let mut rng = SeedStream::new(seed, u64::MAX).rng(Purpose::Parameters);
        let inner = env::make_experiment_instance(kind, d, &mut rng).map_err(py_err)?;
        Ok(PyInstance { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn p_max(&self) -> f64 {
        self.inner.p_max
    }

    #[getter]
    fn index_interval(&self) -> (f64, f64) {
        self.inner.index_interval
    }

    #[getter]
    fn theta(&self) -> Option<Vec<f64>> {
        self.inner.utility.theta().map(<[f64]>::to_vec)
    }

    fn index(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim {
            return Err(PyValueError::new_err("context has the wrong dimension"));
        }
        Ok(self.inner.index(&x))
    }

    fn revenue(&self, u: f64, p: f64) -> f64 {
        self.inner.revenue(u, p)
    }

    fn oracle_price(&self, u: f64) -> PyResult<f64> {
        self.inner.oracle_price(u).map_err(py_err)
    }

    /// Survival probability `g(z)` of the valuation noise.
    fn tail(&self, z: f64) -> f64 {
        self.inner.tail.eval(z)
    }

    fn sample_contexts(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = SeedStream::new(seed, 0).rng(Purpose::Contexts);
        (0..n)
            .map(|_| self.inner.contexts.sample(&mut rng))
            .collect()
    }

    /// Key-value structure report (growth constants, concavity radius,
    /// oracle slope, CDF bracket).
    fn structure_report(&self) -> PyResult<String> {
        verify::structure_report(&self.inner)
            .map(|r| r.to_text())
            .map_err(py_err)
    }
}

/// The binned pricing policy. Call `propose` then `observe` each round.
#[pyclass(name = "OrbitPolicy", module = "orbit_pricing")]
struct PyOrbitPolicy {
    inner: OrbitState,
}

#[pymethods]
impl PyOrbitPolicy {
    #[new]
    #[pyo3(signature = (horizon, index_interval, p_max, seed = 0, beta = 2.0, bin_width = None, eta_grid = 0.04, m0 = 2.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        horizon: u64,
        index_interval: (f64, f64),
        p_max: f64,
        seed: u64,
        beta: f64,
        bin_width: Option<f64>,
        eta_grid: f64,
        m0: f64,
    ) -> PyResult<Self> {
        let mut cfg = OrbitConfig::for_horizon(beta, horizon);
        if let Some(h) = bin_width {
            cfg.target_h = h;
        }
        cfg.eta_grid = eta_grid;
        cfg.m0 = m0;
        let inner = OrbitState::new(cfg, index_interval, p_max, seed).map_err(py_err)?;
        Ok(PyOrbitPolicy { inner })
    }

    /// Returns `(bin, phase, price)` for the pilot value `u_tilde`.
    fn propose(&mut self, u_tilde: f64) -> PyResult<(usize, &'static str, f64)> {
        let p = self.inner.propose(u_tilde).map_err(py_err)?;
        Ok((p.bin, p.phase.as_str(), p.price))
    }

    fn observe(&mut self, purchase: bool) -> PyResult<()> {
        self.inner.observe(purchase).map_err(py_err)
    }

    #[getter]
    fn calls(&self) -> u64 {
        self.inner.calls()
    }

    #[getter]
    fn num_bins(&self) -> usize {
        self.inner.bins().len()
    }

    #[getter]
    fn m_coarse(&self) -> u64 {
        self.inner.m_coarse()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().points().to_vec()
    }

    /// Anchor price of every bin, `None` while the coarse phase runs.
    #[getter]
    fn anchors(&self) -> Vec<Option<f64>> {
        self.inner.bins().iter().map(|b| b.anchor()).collect()
    }
}

/// The adaptive ridge pilot.
#[pyclass(name = "RidgePilot", module = "orbit_pricing")]
struct PyRidgePilot {
    inner: RidgeState,
}

#[pymethods]
impl PyRidgePilot {
    #[new]
    fn new(d: usize, eta: f64, c_w: f64) -> PyResult<Self> {
        Ok(PyRidgePilot {
            inner: RidgeState::new(d, eta, c_w).map_err(py_err)?,
        })
    }

    /// `None` to explore, otherwise the projected index estimate.
    fn decide(&mut self, x: Vec<f64>, index_interval: (f64, f64)) -> PyResult<Option<f64>> {
        Ok(
            match self.inner.decide(&x, index_interval).map_err(py_err)? {
                PilotDecision::Explore => None,
                PilotDecision::Orbit(u) => Some(u),
            },
        )
    }

    fn update(&mut self, x: Vec<f64>, p_max: f64, purchase: bool) -> PyResult<()> {
        self.inner.update(&x, p_max, purchase).map_err(py_err)
    }

    fn uncertainty(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.uncertainty(&x).map_err(py_err)
    }

    #[getter]
    fn theta_hat(&self) -> Vec<f64> {
        self.inner.theta_hat().to_vec()
    }

    #[getter]
    fn n_explore(&self) -> u64 {
        self.inner.n_explore()
    }
}

/// Zeroth-order refinement generator on an l1 trust region.
#[pyclass(name = "RefinementGenerator", module = "orbit_pricing")]
struct PyRefinementGenerator {
    inner: bco::RefinementGenerator,
}

#[pymethods]
impl PyRefinementGenerator {
    #[new]
    #[pyo3(signature = (center, radius, p_max, seed = 0, delta_cap = 0.25, step_scale = 1.0))]
    fn new(
        center: Vec<f64>,
        radius: f64,
        p_max: f64,
        seed: u64,
        delta_cap: f64,
        step_scale: f64,
    ) -> PyResult<Self> {
        let params = BcoParams {
            delta_cap,
            step_scale,
            ..BcoParams::default()
        };
        let inner =
            bco::RefinementGenerator::new(center, radius, p_max, params, seed).map_err(py_err)?;
        Ok(PyRefinementGenerator { inner })
    }

    fn next_action(&mut self) -> Vec<f64> {
        self.inner.next_action()
    }

    /// Feeds the loss `-price * purchase` of the pending action.
    fn update_feedback(&mut self, loss: f64) -> PyResult<()> {
        self.inner.update_feedback(loss).map_err(py_err)
    }

    #[getter]
    fn epoch(&self) -> u32 {
        self.inner.epoch()
    }

    #[getter]
    fn iterate(&self) -> Vec<f64> {
        self.inner.raw_iterate()
    }
}

/// `(T, median, q25, q75, mean)` of final cumulative regret.
type SummaryRow = (u64, f64, f64, f64, f64);

/// A resolved experiment configuration.
#[pyclass(name = "ExperimentConfig", module = "orbit_pricing")]
struct PyExperimentConfig {
    inner: CoreConfig,
}

#[pymethods]
impl PyExperimentConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = CoreConfig::from_toml_str(text).map_err(py_err)?;
        inner.validate().map_err(py_err)?;
        Ok(PyExperimentConfig { inner })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let inner = CoreConfig::from_file(&path).map_err(py_err)?;
        inner.validate().map_err(py_err)?;
        Ok(PyExperimentConfig { inner })
    }

    #[getter]
    fn horizons(&self) -> Vec<u64> {
        self.inner.horizons.clone()
    }

    #[getter]
    fn repetitions(&self) -> usize {
        self.inner.repetitions
    }

    #[setter]
    fn set_repetitions(&mut self, reps: usize) -> PyResult<()> {
        if reps == 0 {
            return Err(PyValueError::new_err("repetitions must be positive"));
        }
        self.inner.repetitions = reps;
        Ok(())
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.master_seed
    }

    #[setter]
    fn set_master_seed(&mut self, seed: u64) {
        self.inner.master_seed = seed;
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Runs every horizon without writing files; returns
    /// `[(T, median, q25, q75, mean), ...]`.
    fn run(&self, py: Python<'_>) -> PyResult<Vec<SummaryRow>> {
        let summary = py.detach(|| harness::run(&self.inner)).map_err(py_err)?;
        Ok(summary
            .horizons
            .iter()
            .map(|h| (h.horizon, h.median, h.q25, h.q75, h.mean))
            .collect())
    }

    /// Runs and writes transcripts, `summary.csv` and `meta.txt` to `out`.
    fn emit(&self, py: Python<'_>, out: PathBuf) -> PyResult<()> {
        py.detach(|| harness::emit(&self.inner, &out))
            .map(|_| ())
            .map_err(py_err)
    }
}

/// Euclidean projection onto the l1 ball of the given radius.
#[pyfunction]
fn l1_project(v: Vec<f64>, radius: f64) -> Vec<f64> {
    bco::l1_project(&v, radius)
}

/// Least-squares slope of `ln(regret)` on `ln(T)`: `(slope, intercept, r2)`.
#[pyfunction]
fn fit_loglog_slope(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let fit = harness::fit_loglog_slope(&points).map_err(py_err)?;
    Ok((fit.slope, fit.intercept, fit.r_squared))
}

/// Checks of the lower-bound family for the given sign vectors; returns the
/// key-value report.
#[pyfunction]
#[pyo3(signature = (t_nominal, omegas, beta = 2.0, kappa = 0.05))]
fn hard_instance_report(
    t_nominal: f64,
    omegas: Vec<Vec<i8>>,
    beta: f64,
    kappa: f64,
) -> PyResult<String> {
    let mut params = HardFamilyParams::new(beta, t_nominal);
    params.kappa = kappa;
    let family = hard_instance::HardFamily::new(params).map_err(py_err)?;
    hard_instance::hard_instance_report(&family, &omegas)
        .map(|r| r.to_text())
        .map_err(py_err)
}

/// Number of grid contexts `M` of the lower-bound family.
#[pyfunction]
#[pyo3(signature = (t_nominal, beta = 2.0))]
fn hard_instance_size(t_nominal: f64, beta: f64) -> PyResult<usize> {
    hard_instance::HardFamily::new(HardFamilyParams::new(beta, t_nominal))
        .map(|f| f.m())
        .map_err(py_err)
}

#[pymodule]
fn orbit_pricing(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyOrbitPolicy>()?;
    m.add_class::<PyRidgePilot>()?;
    m.add_class::<PyRefinementGenerator>()?;
    m.add_class::<PyExperimentConfig>()?;
    m.add_function(wrap_pyfunction!(l1_project, m)?)?;
    m.add_function(wrap_pyfunction!(fit_loglog_slope, m)?)?;
    m.add_function(wrap_pyfunction!(hard_instance_report, m)?)?;
    m.add_function(wrap_pyfunction!(hard_instance_size, m)?)?;
    Ok(())
}
