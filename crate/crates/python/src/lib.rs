//! Python bindings: configs, one-trial simulation, estimation, sweeps and the
//! plane-coefficient helpers.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use isac6d::airlink::dump::{read_tensor, write_tensor};
use isac6d::airlink::erase_symbols;
use isac6d::harness::config::{config_to_string, parse_config};
use isac6d::harness::sweep::{errors, mix_seed, run_sweep, simulate_frame};
use isac6d::harness::{load_config, write_report, ConfigFile, SimConfig};
use isac6d::kinematics::plane_coeffs_forward;
use isac6d::motion::{estimate_6d, recover_velocities, Estimate6D};
use isac6d::{EchoTensor, Error, PlaneCoeffs, SphericalPoint, TargetState};

fn config_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A resolved simulation configuration.
#[pyclass(name = "Config", frozen)]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    /// Desk-scale baseline.
    #[staticmethod]
    fn desk() -> PyResult<Self> {
        Ok(PyConfig { inner: ConfigFile::desk_default().resolve().map_err(config_err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyConfig { inner: load_config(&path).map_err(config_err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyConfig { inner: parse_config(text).map_err(config_err)? })
    }

    /// Resolved configuration with every default written out.
    fn to_toml(&self) -> PyResult<String> {
        config_to_string(&self.inner).map_err(config_err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn snr_db(&self) -> Vec<f64> {
        self.inner.snr_db.clone()
    }

    #[getter]
    fn trials(&self) -> usize {
        self.inner.trials
    }

    /// Truth of the first target in report units:
    /// (r m, theta deg, phi deg, v_r m/s, omega_theta deg/s, omega_phi deg/s).
    fn truth(&self) -> (f64, f64, f64, f64, f64, f64) {
        let t = self.inner.targets[0];
        (
            t.position.r,
            t.position.theta.to_degrees(),
            t.position.phi.to_degrees(),
            t.v_r,
            t.omega_theta.to_degrees(),
            t.omega_phi.to_degrees(),
        )
    }

    fn __repr__(&self) -> String {
        let g = &self.inner.grid;
        format!(
            "Config(seed={}, hu={}x{}, ru={}x{}, N={}, M={})",
            self.inner.seed, self.inner.hu.nx, self.inner.hu.nz, self.inner.ru.nx, self.inner.ru.nz, g.n_symbols, g.m_subcarriers
        )
    }
}

/// Echo tensor indexed `(n_x, n_z, n, m)`.
#[pyclass(name = "EchoTensor", frozen)]
struct PyEchoTensor {
    inner: EchoTensor,
}

#[pymethods]
impl PyEchoTensor {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyEchoTensor { inner: read_tensor(&path).map_err(runtime_err)? })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        write_tensor(&self.inner, &path).map_err(runtime_err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize, usize) {
        self.inner.dims()
    }

    #[getter]
    fn stage(&self) -> &'static str {
        match self.inner.stage {
            isac6d::Stage::Raw => "raw",
            isac6d::Stage::Eec => "eec",
            isac6d::Stage::DtEec => "dt_eec",
        }
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn mean_power(&self) -> f64 {
        self.inner.mean_power()
    }

    fn __getitem__(&self, idx: (usize, usize, usize, usize)) -> PyResult<Complex64> {
        self.inner
            .data
            .get([idx.0, idx.1, idx.2, idx.3])
            .copied()
            .ok_or_else(|| PyIndexError::new_err(format!("index {idx:?} outside {:?}", self.inner.dims())))
    }

    /// All entries in row-major order, for `numpy.array(t.values()).reshape(t.shape)`.
    fn values(&self) -> Vec<Complex64> {
        self.inner.data.iter().copied().collect()
    }
}

fn estimate_dict<'py>(py: Python<'py>, e: &Estimate6D) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("r_m", e.r_hat)?;
    d.set_item("theta_deg", e.theta_hat.to_degrees())?;
    d.set_item("phi_deg", e.phi_hat.to_degrees())?;
    d.set_item("v_r_mps", e.v_r_hat)?;
    d.set_item("omega_theta_degps", e.omega_theta_hat.to_degrees())?;
    d.set_item("omega_phi_degps", e.omega_phi_hat.to_degrees())?;
    let g = &e.diagnostics;
    d.set_item("kappa_omega", g.kappa_omega)?;
    d.set_item("kappa_psi", g.kappa_psi)?;
    d.set_item("kappa_r", g.kappa_r)?;
    d.set_item("plane", (g.plane.a, g.plane.b, g.plane.c))?;
    d.set_item("residual_rms", g.residual_rms)?;
    d.set_item("mdl_orders", g.mdl_orders.to_vec())?;
    d.set_item("flags", g.flags.clone())?;
    Ok(d)
}

/// Synthesise one frame and return its symbol-erased tensor.
#[pyfunction]
#[pyo3(signature = (config, snr_db, trial=0))]
fn simulate(config: &PyConfig, snr_db: f64, trial: u64) -> PyResult<PyEchoTensor> {
    let seed = mix_seed(config.inner.seed, 0, trial);
    let frame = simulate_frame(&config.inner, snr_db, seed).map_err(runtime_err)?;
    let inner = erase_symbols(&frame.raw, &frame.symbols).map_err(runtime_err)?;
    Ok(PyEchoTensor { inner })
}

/// Run the 6D estimator on an erased (or already suppressed) tensor.
#[pyfunction]
fn estimate<'py>(py: Python<'py>, config: &PyConfig, tensor: &PyEchoTensor) -> PyResult<Bound<'py, PyDict>> {
    let e = estimate_6d(&tensor.inner, &config.inner.estimator(), None).map_err(runtime_err)?;
    estimate_dict(py, &e)
}

/// Simulate and estimate one trial; the dict also carries signed `errors`.
#[pyfunction]
#[pyo3(signature = (config, snr_db, trial=0))]
fn run_trial<'py>(py: Python<'py>, config: &PyConfig, snr_db: f64, trial: u64) -> PyResult<Bound<'py, PyDict>> {
    let seed = mix_seed(config.inner.seed, 0, trial);
    let e = isac6d::harness::run_trial(&config.inner, snr_db, seed).map_err(|f| PyRuntimeError::new_err(f.message))?;
    let d = estimate_dict(py, &e)?;
    d.set_item("errors", errors(&config.inner.targets[0], &e).to_vec())?;
    d.set_item("seed", seed)?;
    Ok(d)
}

/// Full RMSE sweep. Rows are dicts; `output`, if given, receives the CSV.
#[pyfunction]
#[pyo3(signature = (config, output=None))]
fn sweep<'py>(py: Python<'py>, config: &PyConfig, output: Option<PathBuf>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let report = py.detach(|| run_sweep(&config.inner));
    if let Some(path) = output {
        write_report(&report, &path).map_err(runtime_err)?;
    }
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("snr_db", r.snr_db)?;
            d.set_item("trials", r.trials)?;
            d.set_item("failures", r.failures)?;
            d.set_item("rmse", r.rmse.to_vec())?;
            Ok(d)
        })
        .collect()
}

/// Virtual-velocity plane (a, b, c) of a state given in report units.
#[pyfunction]
fn plane_coeffs(
    config: &PyConfig,
    theta_deg: f64,
    phi_deg: f64,
    v_r: f64,
    omega_theta_degps: f64,
    omega_phi_degps: f64,
) -> PyResult<(f64, f64, f64)> {
    let position = SphericalPoint::from_degrees(100.0, theta_deg, phi_deg).map_err(config_err)?;
    let st = TargetState {
        position,
        v_r,
        omega_theta: omega_theta_degps.to_radians(),
        omega_phi: omega_phi_degps.to_radians(),
        rcs: 1.0,
    };
    let p = plane_coeffs_forward(&st, &config.inner.hu, config.inner.ru.spacing_d);
    Ok((p.a, p.b, p.c))
}

/// Inverse of `plane_coeffs`: (v_r m/s, omega_theta deg/s, omega_phi deg/s).
#[pyfunction]
fn velocities(config: &PyConfig, plane: (f64, f64, f64), theta_deg: f64, phi_deg: f64) -> (f64, f64, f64) {
    let r = recover_velocities(
        PlaneCoeffs { a: plane.0, b: plane.1, c: plane.2 },
        theta_deg.to_radians(),
        phi_deg.to_radians(),
        &config.inner.hu,
        config.inner.ru.spacing_d,
    );
    (r.v_r, r.omega_theta.to_degrees(), r.omega_phi.to_degrees())
}

#[pymodule]
fn isac6d_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyEchoTensor>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(plane_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(velocities, m)?)?;
    m.add("SPEED_OF_LIGHT", isac6d::SPEED_OF_LIGHT)?;
    Ok(())
}
