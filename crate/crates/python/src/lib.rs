//! Python bindings: environments, presets and the CEM optimizer.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use distraxion::distraction::camera_range_from_scale as range_from_scale;
use distraxion::frame::{crop as crop_frame, CropOffset};
use distraxion::qtopt::{cem_maximize as cem, CemConfig};
use distraxion::rng::rng_from_seed;
use distraxion::{EnvConfig, Environment, Frame, Observation, ObservationMode, Preset, TaskName, TimeStep};

fn err(e: distraxion::Error) -> PyErr {
    match e {
        distraxion::Error::Config(_) | distraxion::Error::Shape(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = distraxion::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Distracted control environment. Pixel observations come back as `bytes`
/// in row-major RGB order, state observations as a list of floats.
#[pyclass(module = "distraxion_py")]
struct Env {
    inner: Environment,
}

#[pymethods]
impl Env {
    #[new]
    #[pyo3(signature = (task, preset = "none", dynamic = false, seed = 0, width = 100, height = 100, observation = "pixels"))]
    fn new(
        task: &str,
        preset: &str,
        dynamic: bool,
        seed: u64,
        width: usize,
        height: usize,
        observation: &str,
    ) -> PyResult<Self> {
        let mode = match observation {
            "pixels" => ObservationMode::Pixels,
            "state" => ObservationMode::State,
            other => return Err(PyValueError::new_err(format!("unknown observation mode '{other}'"))),
        };
        let config = EnvConfig::from_preset(parse(task)?, parse(preset)?, dynamic, seed)
            .with_render_size((width, height))
            .with_observation(mode);
        Ok(Env { inner: Environment::new(config, None).map_err(err)? })
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.spec().action_dim
    }

    #[getter]
    fn action_repeat(&self) -> usize {
        self.inner.spec().action_repeat
    }

    #[getter]
    fn episode_steps(&self) -> usize {
        self.inner.spec().episode_steps
    }

    /// `(width, height)` of pixel observations.
    #[getter]
    fn size(&self) -> (usize, usize) {
        self.inner.observation_size()
    }

    fn reset<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let ts = py.detach(|| self.inner.reset()).map_err(err)?;
        timestep_dict(py, &ts)
    }

    fn step<'py>(&mut self, py: Python<'py>, action: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let ts = py.detach(|| self.inner.step(&action)).map_err(err)?;
        timestep_dict(py, &ts)
    }

    /// Low-dimensional physics state, `None` before the first reset.
    fn physics_state(&self) -> Option<Vec<f64>> {
        self.inner.physics_observation()
    }

    fn __repr__(&self) -> String {
        let c = self.inner.config();
        format!("Env(task={}, difficulty={:?})", c.task, c.difficulty)
    }
}

fn timestep_dict<'py>(py: Python<'py>, ts: &TimeStep) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    match &ts.observation {
        Observation::Pixels(f) => {
            d.set_item("observation", PyBytes::new(py, f.data()))?;
            d.set_item("shape", (f.height(), f.width(), 3))?;
        }
        Observation::State(s) => {
            d.set_item("observation", s.clone())?;
            d.set_item("shape", (s.len(),))?;
        }
    }
    d.set_item("reward", ts.reward)?;
    d.set_item("discount", ts.discount)?;
    d.set_item("last", ts.last)?;
    Ok(d)
}

/// Distraction parameters of a named preset.
#[pyfunction]
fn preset_config<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyDict>> {
    let preset: Preset = parse(name)?;
    let c = preset.difficulty();
    let d = PyDict::new(py);
    d.set_item("beta_cam", c.beta_cam)?;
    d.set_item("beta_rgb", c.beta_rgb)?;
    d.set_item("beta_bg", c.beta_bg)?;
    d.set_item("num_videos", c.num_videos)?;
    d.set_item("camera_backwards", preset.camera_backwards())?;
    Ok(d)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    Preset::ALL.iter().map(|p| p.name()).collect()
}

#[pyfunction]
fn tasks() -> Vec<&'static str> {
    TaskName::ALL.iter().map(|t| t.as_str()).collect()
}

/// Camera pose ranges for scale `beta`: dict of phi_max, theta_max,
/// roll_max, r_min, r_max.
#[pyfunction]
fn camera_range_from_scale<'py>(py: Python<'py>, beta: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = range_from_scale(beta).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("phi_max", r.phi_max)?;
    d.set_item("theta_max", r.theta_max)?;
    d.set_item("roll_max", r.roll_max)?;
    d.set_item("r_min", r.r_min)?;
    d.set_item("r_max", r.r_max)?;
    Ok(d)
}

/// Maximizes `q(action: list[float]) -> float` over `[-1, 1]^action_dim`.
/// Returns `(action, score)`.
#[pyfunction]
#[pyo3(signature = (q, action_dim, population = 64, iterations = 2, elites = 6, seed = 0))]
fn cem_maximize(
    q: Bound<'_, PyAny>,
    action_dim: usize,
    population: usize,
    iterations: usize,
    elites: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, f64)> {
    let config = CemConfig { population, iterations, elites, ..CemConfig::default() };
    let mut failure = None;
    let result = cem(
        |a| match q.call1((a.to_vec(),)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        action_dim,
        &config,
        &mut rng_from_seed(seed),
    )
    .map_err(err)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((result.action, result.score))
}

/// Crops a row-major RGB buffer.
#[pyfunction]
fn crop<'py>(
    py: Python<'py>,
    data: &[u8],
    width: usize,
    height: usize,
    x: usize,
    y: usize,
    crop_width: usize,
    crop_height: usize,
) -> PyResult<Bound<'py, PyBytes>> {
    let frame = Frame::from_raw(width, height, data.to_vec()).map_err(err)?;
    let out = crop_frame(&frame, CropOffset { x, y }, (crop_width, crop_height)).map_err(err)?;
    Ok(PyBytes::new(py, out.data()))
}

#[pymodule]
fn distraxion_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Env>()?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(tasks, m)?)?;
    m.add_function(wrap_pyfunction!(camera_range_from_scale, m)?)?;
    m.add_function(wrap_pyfunction!(cem_maximize, m)?)?;
    m.add_function(wrap_pyfunction!(crop, m)?)?;
    Ok(())
}
