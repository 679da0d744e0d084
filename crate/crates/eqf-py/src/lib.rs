//! Python bindings: the symmetry types, the filter driven step by step, and
//! the scenario runner, with plain tuples and lists at the boundary.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use eqf::config;
use eqf::error::{ConfigError, EqfError, RunError};
use eqf::filter::{
    state_error, EquivariantFilter, FilterConfig, FilterState, ObserverScheme, SystemModel,
};
use eqf::group::{
    lift as lift_rs, phi as phi_rs, psi as psi_rs, transport as transport_rs, AlgebraElement,
    BearingOutput, CircleAngle, ExtendedVelocity, GroupElement, PositiveScale, SystemState,
};
use eqf::selfcheck::run_selfcheck;
use eqf::sim::{run_experiment, RunRecord};
use eqf::slam2d::Slam2dModel;
use nalgebra::Vector2;

fn num_err(e: EqfError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cfg_err(e: ConfigError) -> PyErr {
    match e {
        ConfigError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn run_err(e: RunError) -> PyErr {
    match e {
        RunError::Config(c) => cfg_err(c),
        RunError::Numerical(n) => num_err(n),
    }
}

fn to_state(landmarks: Vec<(f64, f64)>) -> PyResult<SystemState> {
    SystemState::new(landmarks.iter().map(|&(x, y)| Vector2::new(x, y)).collect())
        .map_err(num_err)
}

fn to_velocity(components: Vec<(f64, f64)>) -> ExtendedVelocity {
    ExtendedVelocity::new(components.iter().map(|&(x, y)| Vector2::new(x, y)).collect())
}

fn pairs(points: &[Vector2<f64>]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.x, p.y)).collect()
}

fn scheme_from_str(name: &str) -> PyResult<ObserverScheme> {
    match name {
        "euler" => Ok(ObserverScheme::Euler),
        "exponential" => Ok(ObserverScheme::ExponentialScale),
        "geometric" => Ok(ObserverScheme::Geometric),
        other => Err(PyValueError::new_err(format!(
            "unknown integrator `{other}`; use euler, exponential or geometric"
        ))),
    }
}

/// Element of the symmetry group: one (angle, scale) pair per landmark.
#[pyclass(name = "GroupElement", frozen)]
#[derive(Clone)]
struct PyGroupElement {
    inner: GroupElement,
}

#[pymethods]
impl PyGroupElement {
    #[new]
    fn new(components: Vec<(f64, f64)>) -> PyResult<Self> {
        let parts = components
            .into_iter()
            .map(|(theta, a)| Ok((CircleAngle::new(theta), PositiveScale::new(a)?)))
            .collect::<Result<Vec<_>, EqfError>>()
            .map_err(num_err)?;
        Ok(PyGroupElement {
            inner: GroupElement::from_components(parts),
        })
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        PyGroupElement {
            inner: GroupElement::identity(n),
        }
    }

    fn compose(&self, other: &PyGroupElement) -> PyResult<Self> {
        Ok(PyGroupElement {
            inner: self.inner.compose(&other.inner).map_err(num_err)?,
        })
    }

    fn inverse(&self) -> Self {
        PyGroupElement {
            inner: self.inner.inverse(),
        }
    }

    fn components(&self) -> Vec<(f64, f64)> {
        self.inner
            .components()
            .iter()
            .map(|(theta, a)| (theta.radians(), a.value()))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("GroupElement({:?})", self.components())
    }
}

/// Landmark configuration on the punctured plane.
#[pyclass(name = "SystemState", frozen)]
#[derive(Clone)]
struct PySystemState {
    inner: SystemState,
}

#[pymethods]
impl PySystemState {
    #[new]
    fn new(landmarks: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(PySystemState {
            inner: to_state(landmarks)?,
        })
    }

    fn landmarks(&self) -> Vec<(f64, f64)> {
        pairs(self.inner.landmarks())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("SystemState({:?})", self.landmarks())
    }
}

/// Group action on states.
#[pyfunction]
fn phi(x: &PyGroupElement, state: &PySystemState) -> PyResult<PySystemState> {
    Ok(PySystemState {
        inner: phi_rs(&x.inner, &state.inner).map_err(num_err)?,
    })
}

/// Group action on velocities.
#[pyfunction]
fn psi(x: &PyGroupElement, velocities: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    let moved = psi_rs(&x.inner, &to_velocity(velocities)).map_err(num_err)?;
    Ok(pairs(moved.components()))
}

/// Equivariant lift onto the algebra: one (angular rate, scale rate) pair
/// per landmark.
#[pyfunction]
fn lift(state: &PySystemState, velocities: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    let lam = lift_rs(&state.inner, &to_velocity(velocities)).map_err(num_err)?;
    Ok((0..lam.len())
        .map(|i| (lam.angular_rate(i), lam.scale_rate(i)))
        .collect())
}

/// The group element carrying one state to another.
#[pyfunction]
fn transport(from: &PySystemState, to: &PySystemState) -> PyResult<PyGroupElement> {
    Ok(PyGroupElement {
        inner: transport_rs(&from.inner, &to.inner).map_err(num_err)?,
    })
}

/// The equivariant filter anchored at a fixed origin configuration, driven
/// one measurement interval at a time.
#[pyclass(name = "Filter")]
struct PyFilter {
    filter: EquivariantFilter<Slam2dModel>,
    state: FilterState,
}

#[pymethods]
impl PyFilter {
    #[new]
    #[pyo3(signature = (origin, process_noise=4e-4, measurement_noise=1e-4, initial_covariance=16.0, integrator="geometric"))]
    fn new(
        origin: Vec<(f64, f64)>,
        process_noise: f64,
        measurement_noise: f64,
        initial_covariance: f64,
        integrator: &str,
    ) -> PyResult<Self> {
        let origin = to_state(origin)?;
        let n = origin.len();
        let model = Slam2dModel::new(origin).map_err(num_err)?;
        let config = FilterConfig::isotropic(
            n,
            process_noise,
            measurement_noise,
            initial_covariance,
            scheme_from_str(integrator)?,
        );
        let filter = EquivariantFilter::new(model, config).map_err(num_err)?;
        let state = filter.initial_state();
        Ok(PyFilter { filter, state })
    }

    /// Advances the filter by one interval holding the given measurement.
    /// Bearings may be any nonzero vectors; they are normalized here.
    fn update(
        &mut self,
        velocity: (f64, f64),
        bearings: Vec<(f64, f64)>,
        dt: f64,
    ) -> PyResult<()> {
        let n = self.filter.model().landmark_count();
        let unit = bearings
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                let v = Vector2::new(x, y);
                let norm = v.norm();
                if norm <= 0.0 {
                    return Err(EqfError::NotUnitLength { index: i, norm });
                }
                Ok(v / norm)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(num_err)?;
        let measured = BearingOutput::new(unit).map_err(num_err)?;
        let vel = ExtendedVelocity::embed(Vector2::new(velocity.0, velocity.1), n);
        self.state = self
            .filter
            .filter_update(&self.state, &vel, &measured, dt)
            .map_err(num_err)?;
        Ok(())
    }

    /// Current landmark estimate.
    fn estimate(&self) -> PyResult<Vec<(f64, f64)>> {
        Ok(pairs(
            self.filter.estimate(&self.state).map_err(num_err)?.landmarks(),
        ))
    }

    /// Current Riccati blocks, row-major.
    fn covariance(&self) -> Vec<[[f64; 2]; 2]> {
        self.state
            .sigma
            .iter()
            .map(|m| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]])
            .collect()
    }

    /// Lyapunov value per landmark against a known truth.
    fn lyapunov(&self, truth: Vec<(f64, f64)>) -> PyResult<Vec<f64>> {
        let truth = to_state(truth)?;
        let error = state_error(&self.state.xhat, &truth).map_err(num_err)?;
        eqf::sim::lyapunov_values(&error, self.filter.model().origin(), &self.state.sigma)
            .map_err(num_err)
    }

    fn group_element(&self) -> PyGroupElement {
        PyGroupElement {
            inner: self.state.xhat.clone(),
        }
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    fn reset(&mut self) {
        self.state = self.filter.initial_state();
    }
}

/// Completed experiment: per-step traces addressed by landmark.
#[pyclass(name = "RunRecord", frozen)]
struct PyRunRecord {
    inner: RunRecord,
}

#[pymethods]
impl PyRunRecord {
    #[getter]
    fn landmark_count(&self) -> usize {
        self.inner.landmark_count()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.steps.iter().map(|s| s.t).collect()
    }

    fn lyapunov(&self, i: usize) -> Vec<f64> {
        self.inner.lyapunov_series(i)
    }

    fn lyapunov_total(&self) -> Vec<f64> {
        self.inner.lyapunov_total()
    }

    fn excitation(&self, i: usize) -> Vec<f64> {
        self.inner.excitation_series(i)
    }

    fn truth(&self, i: usize) -> Vec<(f64, f64)> {
        self.inner.steps.iter().map(|s| (s.truth[i].x, s.truth[i].y)).collect()
    }

    fn estimate(&self, i: usize) -> Vec<(f64, f64)> {
        self.inner
            .steps
            .iter()
            .map(|s| (s.estimate[i].x, s.estimate[i].y))
            .collect()
    }

    fn bearings(&self, i: usize) -> Vec<(f64, f64)> {
        self.inner
            .steps
            .iter()
            .map(|s| (s.bearings[i].x, s.bearings[i].y))
            .collect()
    }

    fn origin(&self) -> Vec<(f64, f64)> {
        pairs(self.inner.origin.landmarks())
    }

    fn config(&self) -> String {
        config::to_config_string(&self.inner.scenario)
    }

    fn csv(&self) -> String {
        eqf::export::csv_string(&self.inner)
    }

    fn chart_svg(&self) -> String {
        eqf::export::chart_svg(&self.inner)
    }
}

/// Runs a scenario given as configuration text.
#[pyfunction]
fn run_config_text(text: &str) -> PyResult<PyRunRecord> {
    let parsed = config::parse_config(text).map_err(cfg_err)?;
    Ok(PyRunRecord {
        inner: run_experiment(&parsed).map_err(run_err)?,
    })
}

/// Runs a scenario from a configuration file.
#[pyfunction]
fn run_config_file(path: PathBuf) -> PyResult<PyRunRecord> {
    let parsed = config::load_config(&path).map_err(cfg_err)?;
    Ok(PyRunRecord {
        inner: run_experiment(&parsed).map_err(run_err)?,
    })
}

/// The reference scenario as configuration text.
#[pyfunction]
fn default_config() -> String {
    config::to_config_string(&eqf::sim::ScenarioConfig::default())
}

/// Runs the invariant suite; returns (name, residual, tolerance, passed)
/// per property.
#[pyfunction]
fn selfcheck() -> Vec<(String, f64, f64, bool)> {
    run_selfcheck()
        .into_iter()
        .map(|r| (r.name.to_string(), r.residual, r.tolerance, r.passed()))
        .collect()
}

/// Zero algebra element, for completeness when composing updates by hand.
#[pyfunction]
fn zero_algebra(n: usize) -> Vec<(f64, f64)> {
    let z = AlgebraElement::zero(n);
    (0..n).map(|i| (z.angular_rate(i), z.scale_rate(i))).collect()
}

#[pymodule]
fn eqf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroupElement>()?;
    m.add_class::<PySystemState>()?;
    m.add_class::<PyFilter>()?;
    m.add_class::<PyRunRecord>()?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(transport, m)?)?;
    m.add_function(wrap_pyfunction!(run_config_text, m)?)?;
    m.add_function(wrap_pyfunction!(run_config_file, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(selfcheck, m)?)?;
    m.add_function(wrap_pyfunction!(zero_algebra, m)?)?;
    Ok(())
}
