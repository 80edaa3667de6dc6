//! Python bindings. Results come back as plain lists of floats so that the
//! module has no runtime dependency beyond the interpreter.

#![allow(clippy::too_many_arguments)]

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use revpath::cme::{self, LatticeDomain};
use revpath::crn::{parse_network, ReactionNetwork};
use revpath::gausslim;
use revpath::kinetics::{self, SsaOptions};
use revpath::ldp::{self, HamiltonianTrajectory, OpOptions, ShootOptions};
use revpath::reversal::{self, Anchors, PrehistoryField, PrehistoryMode};
use revpath::revsim;
use revpath::rng::ensemble;

create_exception!(pyrevpath, NumericalError, PyRuntimeError);

fn to_py(e: revpath::Error) -> PyErr {
    use revpath::Error as E;
    match e {
        E::Parse { .. }
        | E::InvalidNetwork(_)
        | E::IndexOutOfRange { .. }
        | E::InvalidArgument(_)
        | E::Unsupported(_)
        | E::ShapeMismatch(_) => PyValueError::new_err(e.to_string()),
        _ => NumericalError::new_err(e.to_string()),
    }
}

fn parse_mode(mode: &str) -> PyResult<PrehistoryMode> {
    match mode {
        "npp" => Ok(PrehistoryMode::Npp),
        "spp" => Ok(PrehistoryMode::Spp),
        other => Err(PyValueError::new_err(format!("mode must be 'npp' or 'spp', got {other:?}"))),
    }
}

/// Reversible mass-action network.
#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    inner: ReactionNetwork,
}

#[pymethods]
impl PyNetwork {
    /// Parses the line-oriented network format.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_network(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn monostable() -> Self {
        Self {
            inner: ReactionNetwork::monostable(),
        }
    }

    #[staticmethod]
    fn bistable() -> Self {
        Self {
            inner: ReactionNetwork::bistable(),
        }
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Self::new(&text)
    }

    #[getter]
    fn species(&self) -> Vec<String> {
        self.inner.species().to_vec()
    }

    #[getter]
    fn n_reactions(&self) -> usize {
        self.inner.reactions().len()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Deterministic drift `F(x)`.
    fn ode_field(&self, x: Vec<f64>) -> Vec<f64> {
        kinetics::ode_field(&self.inner, &x)
    }

    fn hamiltonian(&self, x: Vec<f64>, alpha: Vec<f64>) -> PyResult<f64> {
        ldp::hamiltonian(&self.inner, &x, &alpha).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(species={:?}, reactions={})",
            self.inner.species(),
            self.inner.reactions().len()
        )
    }
}

/// Truncated lattice `[x_l, x_r]` at volume `V`.
#[pyclass(name = "Domain", frozen)]
struct PyDomain {
    inner: LatticeDomain,
}

#[pymethods]
impl PyDomain {
    #[new]
    #[pyo3(signature = (x_l, x_r, volume, nu = 1))]
    fn new(x_l: f64, x_r: f64, volume: f64, nu: i64) -> PyResult<Self> {
        Ok(Self {
            inner: LatticeDomain::new(x_l, x_r, volume, nu).map_err(to_py)?,
        })
    }

    /// Domain wide enough that leaving it costs more than `target_action`.
    #[staticmethod]
    fn suggest(net: &PyNetwork, volume: f64, x_eq: f64, x0: f64, x_t: f64, target_action: f64) -> PyResult<Self> {
        Ok(Self {
            inner: cme::suggest_domain(&net.inner, volume, x_eq, x0, x_t, target_action).map_err(to_py)?,
        })
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    fn cells(&self) -> Vec<f64> {
        self.inner.cells()
    }

    fn nearest(&self, x: f64) -> PyResult<usize> {
        self.inner.nearest(x).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Domain([{}, {}], V={}, nx={})",
            self.inner.x_l, self.inner.x_r, self.inner.volume, self.inner.nx
        )
    }
}

/// Sampled path: `times` and one state vector per time.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    states: Vec<Vec<f64>>,
}

impl From<kinetics::Trajectory> for PyTrajectory {
    fn from(t: kinetics::Trajectory) -> Self {
        Self {
            times: t.times,
            states: t.states,
        }
    }
}

#[pymethods]
impl PyTrajectory {
    fn __len__(&self) -> usize {
        self.times.len()
    }
}

/// Solution of Hamilton's equations with its accumulated action.
#[pyclass(name = "HamiltonianPath", frozen)]
struct PyHamiltonianPath {
    inner: HamiltonianTrajectory,
}

#[pymethods]
impl PyHamiltonianPath {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        self.inner.x.clone()
    }

    #[getter]
    fn alpha(&self) -> Vec<Vec<f64>> {
        self.inner.alpha.clone()
    }

    #[getter]
    fn action(&self) -> Vec<f64> {
        self.inner.action.clone()
    }

    #[getter]
    fn alpha0(&self) -> Vec<f64> {
        self.inner.alpha[0].clone()
    }

    #[getter]
    fn total_action(&self) -> f64 {
        self.inner.total_action()
    }

    fn x_at(&self, t: f64) -> f64 {
        self.inner.x_at(t, 0)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Conditional law of the past given the terminal state.
#[pyclass(name = "Prehistory", frozen)]
struct PyPrehistory {
    inner: PrehistoryField,
}

#[pymethods]
impl PyPrehistory {
    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.as_str()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        (0..=self.inner.n_steps()).map(|m| self.inner.time(m)).collect()
    }

    #[getter]
    fn cells(&self) -> Vec<f64> {
        self.inner.dom.cells()
    }

    /// Interior masses, one row per time slice.
    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        let nx = self.inner.dom.nx;
        self.inner.values.iter().map(|s| s[..nx].to_vec()).collect()
    }

    #[getter]
    fn max_defect(&self) -> f64 {
        self.inner.max_defect()
    }

    /// Mass absorbed at the domain boundary by the final forward slice.
    #[getter]
    fn leakage(&self) -> f64 {
        self.inner.forward.absorbed(self.inner.forward.n_steps())
    }

    fn mean(&self, m: usize) -> PyResult<f64> {
        self.check(m)?;
        Ok(self.inner.mean(m))
    }

    fn variance(&self, m: usize) -> PyResult<f64> {
        self.check(m)?;
        Ok(self.inner.variance(m))
    }

    /// `(t, x_peak)` for every slice.
    fn peak_trajectory(&self) -> PyResult<Vec<(f64, f64)>> {
        reversal::peak_trajectory(&self.inner).map_err(to_py)
    }
}

impl PyPrehistory {
    fn check(&self, m: usize) -> PyResult<()> {
        if m > self.inner.n_steps() {
            return Err(PyValueError::new_err(format!(
                "slice {m} out of range (0..={})",
                self.inner.n_steps()
            )));
        }
        Ok(())
    }
}

#[pyfunction]
fn ode_solve(net: &PyNetwork, x0: Vec<f64>, t_end: f64, dt: f64) -> PyResult<PyTrajectory> {
    Ok(kinetics::ode_solve(&net.inner, &x0, t_end, dt).map_err(to_py)?.into())
}

#[pyfunction]
fn ssa_simulate(net: &PyNetwork, x0: Vec<f64>, volume: f64, t_end: f64, seed: u64) -> PyResult<PyTrajectory> {
    Ok(kinetics::ssa_simulate(&net.inner, &x0, volume, t_end, seed).map_err(to_py)?.into())
}

/// `count` SSA paths from independent streams of `seed`, run in parallel.
#[pyfunction]
fn ssa_ensemble(
    py: Python<'_>,
    net: &PyNetwork,
    x0: Vec<f64>,
    volume: f64,
    t_end: f64,
    seed: u64,
    count: usize,
) -> PyResult<Vec<PyTrajectory>> {
    let paths = py.detach(|| {
        ensemble(seed, count, |_, rng| {
            kinetics::ssa_simulate_with(&net.inner, &x0, volume, t_end, rng, &SsaOptions::default())
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
    });
    Ok(paths.map_err(to_py)?.into_iter().map(Into::into).collect())
}

#[pyfunction]
fn tau_leap_simulate(
    net: &PyNetwork,
    x0: Vec<f64>,
    volume: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> PyResult<PyTrajectory> {
    Ok(kinetics::tau_leap_simulate(&net.inner, &x0, volume, t_end, dt, seed)
        .map_err(to_py)?
        .into())
}

#[pyfunction]
fn cle_simulate(net: &PyNetwork, x0: Vec<f64>, volume: f64, t_end: f64, dt: f64, seed: u64) -> PyResult<PyTrajectory> {
    Ok(kinetics::cle_simulate(&net.inner, &x0, volume, t_end, dt, seed)
        .map_err(to_py)?
        .into())
}

#[pyfunction]
#[pyo3(signature = (net, x0, x_t, t_span, tol = 1e-8, with_variational = true))]
fn shoot_nop(
    py: Python<'_>,
    net: &PyNetwork,
    x0: f64,
    x_t: f64,
    t_span: f64,
    tol: f64,
    with_variational: bool,
) -> PyResult<PyHamiltonianPath> {
    let opts = ShootOptions {
        tol,
        with_variational,
        ..ShootOptions::default()
    };
    let inner = py
        .detach(|| ldp::shoot_nop_with(&net.inner, x0, x_t, t_span, &opts))
        .map_err(to_py)?;
    Ok(PyHamiltonianPath { inner })
}

#[pyfunction]
#[pyo3(signature = (net, x_t, x_eq, dt = 1e-4))]
fn op_path(net: &PyNetwork, x_t: f64, x_eq: f64, dt: f64) -> PyResult<PyHamiltonianPath> {
    let opts = OpOptions {
        dt,
        ..OpOptions::default()
    };
    Ok(PyHamiltonianPath {
        inner: ldp::op_path(&net.inner, x_t, x_eq, &opts).map_err(to_py)?,
    })
}

/// `(S, dS)` on an ascending grid, with `S(x_eq) = 0`.
#[pyfunction]
fn quasipotential(net: &PyNetwork, x_eq: f64, grid: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let q = ldp::quasipotential_1d(&net.inner, x_eq, &grid).map_err(to_py)?;
    Ok((q.s, q.ds))
}

#[pyfunction]
fn stationary_distribution(net: &PyNetwork, domain: &PyDomain) -> PyResult<Vec<f64>> {
    cme::stationary_distribution(&net.inner, &domain.inner).map_err(to_py)
}

#[pyfunction]
fn skellam_pmf(k: i64, mu1: f64, mu2: f64) -> f64 {
    cme::skellam_pmf(k, mu1, mu2)
}

/// Non-stationary (`x0` given) or stationary prehistory ending at `x_t`.
#[pyfunction]
#[pyo3(signature = (net, domain, mode, x_t, t_end, nt = 1000, x0 = None))]
fn prehistory(
    py: Python<'_>,
    net: &PyNetwork,
    domain: &PyDomain,
    mode: &str,
    x_t: f64,
    t_end: f64,
    nt: usize,
    x0: Option<f64>,
) -> PyResult<PyPrehistory> {
    let inner = match (parse_mode(mode)?, x0) {
        (PrehistoryMode::Npp, Some(x0)) => {
            py.detach(|| reversal::npp_compute(&net.inner, &domain.inner, x0, x_t, t_end, nt))
        }
        (PrehistoryMode::Npp, None) => return Err(PyValueError::new_err("mode 'npp' needs x0")),
        (PrehistoryMode::Spp, _) => py.detach(|| reversal::spp_compute(&net.inner, &domain.inner, x_t, t_end, nt)),
    }
    .map_err(to_py)?;
    Ok(PyPrehistory { inner })
}

/// Paths of the time-reversed process started at `x_t`, in reversed time.
#[pyfunction]
#[pyo3(signature = (net, domain, mode, x_t, t_end, seed, count, nt = 1000, x0 = None))]
fn sample_reversed(
    py: Python<'_>,
    net: &PyNetwork,
    domain: &PyDomain,
    mode: &str,
    x_t: f64,
    t_end: f64,
    seed: u64,
    count: usize,
    nt: usize,
    x0: Option<f64>,
) -> PyResult<Vec<PyTrajectory>> {
    let mode = parse_mode(mode)?;
    let anchors = Anchors { x0, x_t, t_end };
    let paths = py
        .detach(|| {
            let table = revsim::build_reversed_rates(mode, &net.inner, &domain.inner, &anchors, nt)?;
            revsim::sample_reversed_ensemble(&table, x_t, t_end, seed, count)
        })
        .map_err(to_py)?;
    Ok(paths.into_iter().map(Into::into).collect())
}

/// `(times, x, kappa)` for the stationary reversed process from `x_t`.
#[pyfunction]
#[pyo3(signature = (net, x_t, t_end, dt = 1e-3))]
fn spp_covariance(net: &PyNetwork, x_t: f64, t_end: f64, dt: f64) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (xs, cov) = gausslim::spp_covariance(&net.inner, x_t, t_end, dt).map_err(to_py)?;
    let kappa = cov.kappa_scalar();
    Ok((cov.times, xs, kappa))
}

/// `(times, kappa)` around a NOP shot with variational data.
#[pyfunction]
#[pyo3(signature = (net, nop, t_min = 1e-3))]
fn npp_covariance(net: &PyNetwork, nop: &PyHamiltonianPath, t_min: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let cov = gausslim::npp_covariance(&net.inner, &nop.inner, t_min).map_err(to_py)?;
    let kappa = cov.kappa_scalar();
    Ok((cov.times, kappa))
}

/// Curvature of the quasipotential at a stable equilibrium.
#[pyfunction]
fn riccati_equilibrium(net: &PyNetwork, x_eq: f64) -> PyResult<f64> {
    gausslim::riccati_equilibrium(&net.inner, x_eq).map_err(to_py)
}

#[pymodule]
fn pyrevpath(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyDomain>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyHamiltonianPath>()?;
    m.add_class::<PyPrehistory>()?;
    m.add_function(wrap_pyfunction!(ode_solve, m)?)?;
    m.add_function(wrap_pyfunction!(ssa_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(ssa_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(tau_leap_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(cle_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(shoot_nop, m)?)?;
    m.add_function(wrap_pyfunction!(op_path, m)?)?;
    m.add_function(wrap_pyfunction!(quasipotential, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(skellam_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(prehistory, m)?)?;
    m.add_function(wrap_pyfunction!(sample_reversed, m)?)?;
    m.add_function(wrap_pyfunction!(spp_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(npp_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(riccati_equilibrium, m)?)?;
    Ok(())
}
