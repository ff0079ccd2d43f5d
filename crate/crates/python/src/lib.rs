//! Python bindings for `rfsliding`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use core::asgs::{derive_asgs_params, run_rf_asgs, AsgsOptions, RfAsgsParams};
use core::harness::{checks, config::RunConfig, experiment};
use core::oracles::SmoothOracle;
use core::problems::{make_qp, make_tv, ImageSource, SetKind};
use core::reference::{solve_reference, RefOptions, SmoothedComposite};
use core::sgs::{derive_sgs_params, run_rf_sgs, RfSgsParams, RunOptions};
use core::smoothing::{choose_eta, smooth};
use core::{Error, RunTrace, Vector};
use rfsliding_core as core;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::BudgetExceeded { .. } | Error::NoConvergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn trace_dict<'py>(py: Python<'py>, trace: &RunTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let r = &trace.records;
    d.set_item("k", r.iter().map(|x| x.k).collect::<Vec<_>>())?;
    d.set_item("objective_gap", r.iter().map(|x| x.objective_gap).collect::<Vec<_>>())?;
    d.set_item("grad_map_norm", r.iter().map(|x| x.grad_map_norm).collect::<Vec<_>>())?;
    d.set_item("grad_f_count", r.iter().map(|x| x.grad_f_count).collect::<Vec<_>>())?;
    d.set_item(
        "subgrad_h_count",
        r.iter().map(|x| x.subgrad_h_count).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "elapsed_seconds",
        r.iter().map(|x| x.elapsed_seconds).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// RF-SGS schedule derived from `(L, mu, nu)`.
#[pyclass(name = "SgsParams", frozen)]
struct PySgsParams(RfSgsParams);

#[pymethods]
impl PySgsParams {
    #[new]
    #[pyo3(signature = (l, mu, nu = 1.0))]
    fn new(l: f64, mu: f64, nu: f64) -> PyResult<Self> {
        derive_sgs_params(l, mu, nu).map(Self).map_err(to_py)
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    /// Inner iteration count `T_k`.
    fn inner_count(&self, k: u64) -> PyResult<u64> {
        if !(1..=core::sgs::MAX_OUTER).contains(&k) {
            return Err(PyValueError::new_err(format!(
                "k must be in 1..={}",
                core::sgs::MAX_OUTER
            )));
        }
        Ok(self.0.inner_count(k))
    }

    fn theta(&self, k: u64, t: u64) -> f64 {
        self.0.theta(k, t)
    }

    fn rate_bound(&self, n: u64, a: f64) -> f64 {
        self.0.rate_bound(n, a)
    }

    fn __repr__(&self) -> String {
        format!(
            "SgsParams(c={:.6}, beta={:.6}, gamma={:.6})",
            self.0.c, self.0.beta, self.0.gamma
        )
    }
}

/// RF-ASGS schedule.
#[pyclass(name = "AsgsParams", frozen)]
struct PyAsgsParams(RfAsgsParams);

#[pymethods]
impl PyAsgsParams {
    #[new]
    #[pyo3(signature = (l, mu, l_eta, nu = 1.0, c = 1.5, b = 0.0))]
    fn new(l: f64, mu: f64, l_eta: f64, nu: f64, c: f64, b: f64) -> PyResult<Self> {
        derive_asgs_params(l, mu, nu, l_eta, c, b).map(Self).map_err(to_py)
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    #[getter]
    fn t(&self) -> u64 {
        self.0.t
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }

    fn __repr__(&self) -> String {
        format!(
            "AsgsParams(lambda={:.6}, gamma={:.6}, beta={:.6}, T={}, alpha={:.6})",
            self.0.lambda, self.0.gamma, self.0.beta, self.0.t, self.0.alpha
        )
    }
}

/// Euclidean projection onto the probability simplex.
#[pyfunction]
fn simplex_project(v: Vec<f64>) -> PyResult<Vec<f64>> {
    core::simplex_project(&Vector::from_vec(v))
        .map(|w| w.as_slice().to_vec())
        .map_err(to_py)
}

#[pyfunction]
fn compute_bound_n(a: f64, eps: f64, c: f64) -> PyResult<u64> {
    core::compute_bound_n(a, eps, c).map_err(to_py)
}

/// `(eta, L_eta)` for the TV problem on a `width x height` image.
#[pyfunction]
fn choose_eta_tv(eps: f64, width: usize, height: usize) -> PyResult<(f64, f64)> {
    let (_, spec, _) = make_tv(width, height, 1.0, 0.0, 0, ImageSource::Phantom).map_err(to_py)?;
    choose_eta(eps, &spec).map_err(to_py)
}

/// RF-SGS on a synthetic simplex QP. Returns the trace as a dict of columns.
#[pyfunction]
#[pyo3(signature = (n, iterations, sigma = 0.0, seed = 0, data_seed = 0, mu_f = 1.0, l_f = 100.0, rho = 0.1))]
#[allow(clippy::too_many_arguments)]
fn run_qp_sgs<'py>(
    py: Python<'py>,
    n: usize,
    iterations: u64,
    sigma: f64,
    seed: u64,
    data_seed: u64,
    mu_f: f64,
    l_f: f64,
    rho: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let (qp, exact) = make_qp(n, mu_f, l_f, rho, SetKind::Simplex, data_seed).map_err(to_py)?;
    let x0 = exact.set.center();
    let sol = solve_reference(&exact, &x0, &RefOptions::accelerated(1e-10)).map_err(to_py)?;
    let mut problem = qp.problem(sigma, seed).map_err(to_py)?;
    let params = derive_sgs_params(problem.lipschitz(), problem.mu(), 1.0).map_err(to_py)?;
    let opts = RunOptions {
        f_star: Some(sol.value),
        ..RunOptions::default()
    };
    let run = py
        .detach(|| run_rf_sgs(&mut problem, &x0, iterations, &params, &opts))
        .map_err(to_py)?;
    let d = trace_dict(py, &run.trace)?;
    d.set_item("x", run.x_bar.as_slice().to_vec())?;
    d.set_item("f_star", sol.value)?;
    Ok(d)
}

/// RF-ASGS on the smoothed TV denoising problem over the built-in phantom.
#[pyfunction]
#[pyo3(signature = (width, height, iterations, eta = 1e-3, tau = 1.0, sigma_noise = 0.05, data_seed = 0))]
#[allow(clippy::too_many_arguments)]
fn run_tv_asgs<'py>(
    py: Python<'py>,
    width: usize,
    height: usize,
    iterations: u64,
    eta: f64,
    tau: f64,
    sigma_noise: f64,
    data_seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (inst, spec, mut f) =
        make_tv(width, height, tau, sigma_noise, data_seed, ImageSource::Phantom).map_err(to_py)?;
    let mut h = smooth(spec, eta).map_err(to_py)?;
    let set = inst.set();
    let x0 = inst.g.clone();
    let run = py
        .detach(|| -> core::Result<_> {
            let sol = solve_reference(
                &SmoothedComposite {
                    f: &f,
                    h: &h,
                    set: &set,
                },
                &x0,
                &RefOptions::accelerated(1e-10),
            )?;
            let params = derive_asgs_params(f.lipschitz(), f.strong_convexity(), 1.0, h.l_eta(), 1.5, 0.0)?;
            let opts = AsgsOptions {
                f_star: Some(sol.value),
                ..AsgsOptions::default()
            };
            run_rf_asgs(&mut f, &mut h, &set, &x0, iterations, &params, &opts)
        })
        .map_err(to_py)?;
    let d = trace_dict(py, &run.trace)?;
    d.set_item("x", run.x_bar.as_slice().to_vec())?;
    d.set_item("noisy", inst.g.as_slice().to_vec())?;
    d.set_item("clean", inst.clean.as_slice().to_vec())?;
    Ok(d)
}

/// Runs a config file the same way as `rfsliding run`.
#[pyfunction]
fn run_config<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let cfg = RunConfig::from_file(&path).map_err(to_py)?;
    let out = py.detach(|| experiment::run(&cfg)).map_err(to_py)?;
    trace_dict(py, &out.trace)
}

/// The invariant suite as a list of `(name, passed, detail)`.
#[pyfunction]
fn check(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(checks::run_all)
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
fn rfsliding(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySgsParams>()?;
    m.add_class::<PyAsgsParams>()?;
    m.add_function(wrap_pyfunction!(simplex_project, m)?)?;
    m.add_function(wrap_pyfunction!(compute_bound_n, m)?)?;
    m.add_function(wrap_pyfunction!(choose_eta_tv, m)?)?;
    m.add_function(wrap_pyfunction!(run_qp_sgs, m)?)?;
    m.add_function(wrap_pyfunction!(run_tv_asgs, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    Ok(())
}
