//! Python bindings: meshes, weights, the scalar stepper and the study harness.

use cnpi_core as core;
use cnpi_core::{
    EigenSource, Error, ExampleId, GammaRule, InitialData, OperatorBundle, ProblemSpec, SourceRule,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    if e.is_parameter_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Graded time mesh `t_n = (n k)^gamma`, `k = T^(1/gamma) / N`.
#[pyclass(name = "GradedMesh", module = "cnpi", frozen)]
struct PyGradedMesh {
    inner: core::GradedMesh,
}

#[pymethods]
impl PyGradedMesh {
    #[new]
    #[pyo3(signature = (n_steps, gamma, t_final = 1.0))]
    fn new(n_steps: usize, gamma: f64, t_final: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::GradedMesh::graded(n_steps, gamma, t_final).map_err(py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n_steps, t_final = 1.0))]
    fn uniform(n_steps: usize, t_final: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::GradedMesh::uniform(n_steps, t_final).map_err(py_err)?,
        })
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn steps(&self) -> Vec<f64> {
        self.inner.steps().to_vec()
    }

    fn t(&self, n: usize) -> f64 {
        self.inner.t(n)
    }

    fn step(&self, n: usize) -> PyResult<f64> {
        if n < 1 || n > self.inner.n_steps() {
            return Err(PyValueError::new_err(format!(
                "step index {n} outside 1..={}",
                self.inner.n_steps()
            )));
        }
        Ok(self.inner.step(n))
    }

    /// Grading constants and whether each hypothesis holds.
    fn validate_hypotheses<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.inner.validate_hypotheses();
        let d = PyDict::new(py);
        d.set_item("c_lower", r.c_gamma_lower)?;
        d.set_item("c_step", r.c_gamma_31)?;
        d.set_item("c_ratio", r.c_gamma_ratio)?;
        d.set_item("c_increment", r.c_gamma_311)?;
        d.set_item("step_bound", r.satisfied_step_bound)?;
        d.set_item("start_and_ratio", r.satisfied_start_and_ratio)?;
        d.set_item("increment", r.satisfied_increment)?;
        d.set_item("satisfied", r.all_satisfied())?;
        Ok(d)
    }

    fn __len__(&self) -> usize {
        self.inner.n_steps() + 1
    }

    fn __repr__(&self) -> String {
        format!(
            "GradedMesh(n_steps={}, gamma={}, t_final={})",
            self.inner.n_steps(),
            self.inner.gamma(),
            self.inner.t_final()
        )
    }
}

#[pyfunction]
fn gamma_function(x: f64) -> PyResult<f64> {
    core::gamma_function(x).map_err(py_err)
}

/// `exp(-kappa t) t^(alpha-1) / Gamma(alpha)`.
#[pyfunction]
fn tempered_kernel(alpha: f64, kappa: f64, t: f64) -> PyResult<f64> {
    core::tempered_kernel(alpha, kappa, t).map_err(py_err)
}

/// Product-integration weight `w_{np}`.
#[pyfunction]
fn pi_weight(mesh: &PyGradedMesh, alpha: f64, n: usize, p: usize) -> PyResult<f64> {
    core::pi_weight(&mesh.inner, alpha, n, p).map_err(py_err)
}

/// Weights `[w_{n1}, ..., w_{nn}]`.
#[pyfunction]
fn pi_weight_row(mesh: &PyGradedMesh, alpha: f64, n: usize) -> PyResult<Vec<f64>> {
    let row = core::pi_weight_row(&mesh.inner, alpha, n).map_err(py_err)?;
    Ok((1..=n).map(|p| row.get(p)).collect())
}

/// Discrete fractional integral at step `len(history)` of a piecewise-constant history.
#[pyfunction]
fn discrete_fractional_integral(
    mesh: &PyGradedMesh,
    alpha: f64,
    history: Vec<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    if history.is_empty() {
        return Err(PyValueError::new_err("history must not be empty"));
    }
    let row = core::pi_weight_row(&mesh.inner, alpha, history.len()).map_err(py_err)?;
    core::discrete_fractional_integral(&row, &mesh.inner, &history).map_err(py_err)
}

/// `I^alpha t^mu = Gamma(mu+1) / Gamma(mu+1+alpha) t^(mu+alpha)`.
#[pyfunction]
fn frac_int_power(alpha: f64, mu: f64, t: f64) -> PyResult<f64> {
    core::frac_int_power(alpha, mu, t).map_err(py_err)
}

#[pyfunction]
fn convergence_rate(errors: Vec<f64>) -> PyResult<Vec<f64>> {
    core::convergence_rate(&errors).map_err(py_err)
}

/// Homogeneous scalar problem `u' + a u + sum_j b_j (beta_j * u) = 0`; returns `u(t_n)`.
#[pyfunction]
#[pyo3(signature = (a, b, alphas, kappa, mesh, u0))]
fn solve_scalar(
    a: f64,
    b: Vec<f64>,
    alphas: Vec<f64>,
    kappa: f64,
    mesh: &PyGradedMesh,
    u0: f64,
) -> PyResult<Vec<f64>> {
    let kernel = core::KernelSpec::new(alphas, kappa).map_err(py_err)?;
    let bundle = OperatorBundle::scalar(a, b).map_err(py_err)?;
    let spec =
        ProblemSpec::homogeneous(kernel, bundle, mesh.inner.clone(), vec![u0]).map_err(py_err)?;
    let state = spec.run().map_err(py_err)?;
    Ok(state
        .to_physical(&mesh.inner, kappa)
        .into_iter()
        .map(|v| v[0])
        .collect())
}

#[pyclass(name = "ConvergenceReport", module = "cnpi", frozen)]
struct PyConvergenceReport {
    inner: core::ConvergenceReport,
}

#[pymethods]
impl PyConvergenceReport {
    #[getter]
    fn n_list(&self) -> Vec<usize> {
        self.inner.rows.iter().map(|r| r.n).collect()
    }

    #[getter]
    fn errors(&self) -> Vec<f64> {
        self.inner.errors()
    }

    #[getter]
    fn rates(&self) -> Vec<f64> {
        self.inner.rates()
    }

    #[getter]
    fn failure(&self) -> Option<String> {
        self.inner.failure.clone()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn to_table(&self) -> String {
        self.inner.to_table()
    }

    fn __repr__(&self) -> String {
        self.inner.to_table()
    }
}

/// Convergence study on one of the manufactured examples.
#[pyfunction]
#[pyo3(signature = (example, alphas, kappa, n_list, m, gamma = "optimal", source = "average", eigen = "continuum", timing = false))]
#[allow(clippy::too_many_arguments)]
fn run_study(
    py: Python<'_>,
    example: &str,
    alphas: [f64; 2],
    kappa: f64,
    n_list: Vec<usize>,
    m: usize,
    gamma: &str,
    source: &str,
    eigen: &str,
    timing: bool,
) -> PyResult<PyConvergenceReport> {
    let mut config = core::StudyConfig::new(
        parse::<ExampleId>(example)?,
        alphas,
        kappa,
        parse::<GammaRule>(gamma)?,
        n_list,
        m,
    );
    config.source_rule = parse::<SourceRule>(source)?;
    config.eigen_source = parse::<EigenSource>(eigen)?;
    config.timing = timing;
    let report = py.detach(|| core::run_study(&config)).map_err(py_err)?;
    Ok(PyConvergenceReport { inner: report })
}

#[pyclass(name = "StabilityReport", module = "cnpi", frozen)]
struct PyStabilityReport {
    inner: core::StabilityReport,
}

#[pymethods]
impl PyStabilityReport {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn norms(&self) -> Vec<f64> {
        self.inner.norms.clone()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies.clone()
    }

    #[getter]
    fn norm_bounded(&self) -> bool {
        self.inner.norm_bounded
    }

    #[getter]
    fn energy_bounded(&self) -> bool {
        self.inner.energy_bounded
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

/// Homogeneous run of an example reporting `|V^n|` and `E^n`.
#[pyfunction]
#[pyo3(signature = (example, alphas, kappa, steps, m, gamma = "optimal", initial = "profile"))]
#[allow(clippy::too_many_arguments)]
fn run_stability(
    py: Python<'_>,
    example: &str,
    alphas: [f64; 2],
    kappa: f64,
    steps: usize,
    m: usize,
    gamma: &str,
    initial: &str,
) -> PyResult<PyStabilityReport> {
    let mut config = core::StabilityConfig::new(
        parse::<ExampleId>(example)?,
        alphas,
        kappa,
        parse::<GammaRule>(gamma)?,
        steps,
        m,
    );
    config.initial = parse::<InitialData>(initial)?;
    let report = py
        .detach(|| core::run_stability_experiment(&config))
        .map_err(py_err)?;
    Ok(PyStabilityReport { inner: report })
}

#[pymodule]
fn cnpi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGradedMesh>()?;
    m.add_class::<PyConvergenceReport>()?;
    m.add_class::<PyStabilityReport>()?;
    m.add_function(wrap_pyfunction!(gamma_function, m)?)?;
    m.add_function(wrap_pyfunction!(tempered_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(pi_weight, m)?)?;
    m.add_function(wrap_pyfunction!(pi_weight_row, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_fractional_integral, m)?)?;
    m.add_function(wrap_pyfunction!(frac_int_power, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_rate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_scalar, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(run_stability, m)?)?;
    Ok(())
}
