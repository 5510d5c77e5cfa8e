//! Python bindings.
//!
//! Matrices cross the boundary as nested lists of Python numbers (complex or real);
//! states are either a vector (list) or a density matrix (list of lists).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qm::correlate::{self, Dependence};
use qm::linop::{CMatrix, C64};
use qm::models::fixtures;
use qm::models::quadrature::{self, PointerScale, Probe, QuadratureConfig, QuadratureModel};
use qm::models::{build_product_scheme, ProductCouplingSpec};
use qm::quantum::{Povm, State};
use qm::scheme::{self, Coupling, MeasurementScheme, ReadingScale};
use qm::transformer::{self, StateTransformer};
use qm::{QmError, Verdict};

type Matrix = Vec<Vec<C64>>;

fn err(e: QmError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Matrix) -> PyResult<CMatrix> {
    CMatrix::from_rows(rows).map_err(err)
}

fn from_matrix(m: &CMatrix) -> Matrix {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| m[(r, c)]).collect()).collect()
}

#[derive(FromPyObject)]
enum StateArg {
    Matrix(Matrix),
    Vector(Vec<C64>),
}

fn to_state(arg: StateArg) -> PyResult<State> {
    match arg {
        StateArg::Vector(v) => State::pure(&v).map_err(err),
        StateArg::Matrix(m) => State::new(to_matrix(&m)?).map_err(err),
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn dependence_str(d: &Dependence) -> &'static str {
    match d {
        Dependence::Independent => "independent",
        Dependence::Dependent => "dependent",
        Dependence::CompletelyDependent { .. } => "complete",
    }
}

/// A measurement scheme together with its reading scale.
#[pyclass(name = "Scheme", module = "qmlab")]
struct PyScheme {
    scheme: MeasurementScheme,
    scale: ReadingScale,
}

impl PyScheme {
    fn finest(scheme: MeasurementScheme) -> Self {
        let scale = ReadingScale::finest(&scheme);
        PyScheme { scheme, scale }
    }

    fn transformer(&self) -> PyResult<StateTransformer<'_>> {
        StateTransformer::new(&self.scheme, &self.scale).map_err(err)
    }
}

#[pymethods]
impl PyScheme {
    /// Scheme with a joint unitary; the pointer defaults to the computational basis.
    #[staticmethod]
    #[pyo3(signature = (dim_s, unitary, apparatus_state, pointer=None))]
    fn from_unitary(dim_s: usize, unitary: Matrix, apparatus_state: StateArg, pointer: Option<Vec<Matrix>>) -> PyResult<Self> {
        let ta = to_state(apparatus_state)?;
        let povm = pointer_povm(pointer, ta.dim())?;
        let coupling = Coupling::unitary(to_matrix(&unitary)?).map_err(err)?;
        let scheme = MeasurementScheme::new(dim_s, povm, None, ta, coupling).map_err(err)?;
        Ok(Self::finest(scheme))
    }

    /// Scheme with coupling `exp(iλ A⊗B)`.
    #[staticmethod]
    #[pyo3(signature = (a, b, lam, apparatus_state, pointer=None))]
    fn from_product(a: Matrix, b: Matrix, lam: f64, apparatus_state: StateArg, pointer: Option<Vec<Matrix>>) -> PyResult<Self> {
        let ta = to_state(apparatus_state)?;
        let povm = pointer_povm(pointer, ta.dim())?;
        let spec = ProductCouplingSpec::new(to_matrix(&a)?, to_matrix(&b)?, lam).map_err(err)?;
        Ok(Self::finest(build_product_scheme(spec, povm, ta).map_err(err)?.scheme))
    }

    #[staticmethod]
    fn cnot() -> PyResult<Self> {
        Ok(Self::finest(fixtures::build_cnot().map_err(err)?.scheme))
    }

    #[staticmethod]
    #[pyo3(signature = (theta=std::f64::consts::FRAC_PI_2))]
    fn controlled_rotation(theta: f64) -> PyResult<Self> {
        Ok(Self::finest(fixtures::build_controlled_rotation(theta).map_err(err)?.scheme))
    }

    #[getter]
    fn dim_s(&self) -> usize {
        self.scheme.dim_s()
    }

    #[getter]
    fn dim_a(&self) -> usize {
        self.scheme.dim_a()
    }

    /// Effects of the measured POVM, one per reading-scale cell.
    fn measured_povm(&self) -> PyResult<Vec<Matrix>> {
        let povm = scheme::measured_povm(&self.scheme, &self.scale).map_err(err)?;
        Ok(povm.effects().iter().map(|e| from_matrix(&e.matrix)).collect())
    }

    /// Outcome probabilities of the cells for an input state.
    fn weights(&self, state: StateArg) -> PyResult<Vec<f64>> {
        let t = to_state(state)?;
        Ok(scheme::SchemeRun::new(&self.scheme, &t, &self.scale).map_err(err)?.weights())
    }

    /// First-kind verdict over the given states plus seeded test states.
    #[pyo3(signature = (states=Vec::new(), tol=1e-10, seed=1))]
    fn first_kind(&self, states: Vec<StateArg>, tol: f64, seed: u64) -> PyResult<&'static str> {
        let st = self.transformer()?;
        let all = self.test_states(states, seed)?;
        Ok(verdict_str(transformer::check_first_kind(&st, &all, tol).map_err(err)?.verdict))
    }

    /// Repeatability verdict over the given states plus seeded test states.
    #[pyo3(signature = (states=Vec::new(), tol=1e-10, seed=1))]
    fn repeatable(&self, states: Vec<StateArg>, tol: f64, seed: u64) -> PyResult<&'static str> {
        let st = self.transformer()?;
        let all = self.test_states(states, seed)?;
        Ok(verdict_str(transformer::check_repeatable(&st, &all, tol).map_err(err)?.verdict))
    }

    /// `{"rho", "dependence"}` of the repeated-measurement correlation; `rho` is None when undefined.
    #[pyo3(signature = (state, tol=1e-10))]
    fn observable_correlation<'py>(&self, py: Python<'py>, state: StateArg, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let t = to_state(state)?;
        let oc = correlate::observable_correlation(&self.scheme, &t, &self.scale, tol).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("rho", oc.stats.rho)?;
        d.set_item("dependence", dependence_str(&oc.dependence))?;
        Ok(d)
    }

    fn value_correlation(&self, state: StateArg, cell: usize) -> PyResult<Option<f64>> {
        let t = to_state(state)?;
        Ok(correlate::value_correlation(&self.scheme, &t, &self.scale, cell).map_err(err)?.rho)
    }

    fn state_correlation(&self, state: StateArg, cell: usize) -> PyResult<Option<f64>> {
        let t = to_state(state)?;
        Ok(correlate::state_correlation(&self.scheme, &t, &self.scale, cell).map_err(err)?.rho)
    }

    fn __repr__(&self) -> String {
        format!("Scheme(dim_s={}, dim_a={}, cells={})", self.scheme.dim_s(), self.scheme.dim_a(), self.scale.len())
    }
}

impl PyScheme {
    fn test_states(&self, states: Vec<StateArg>, seed: u64) -> PyResult<Vec<State>> {
        let mut all = states.into_iter().map(to_state).collect::<PyResult<Vec<_>>>()?;
        all.extend(transformer::default_test_states(self.scheme.dim_s(), seed));
        Ok(all)
    }
}

fn pointer_povm(pointer: Option<Vec<Matrix>>, dim_a: usize) -> PyResult<Povm> {
    match pointer {
        None => Ok(Povm::computational(dim_a)),
        Some(ms) => Povm::from_matrices(ms.iter().map(to_matrix).collect::<PyResult<_>>()?).map_err(err),
    }
}

fn parse_probe(probe: &str) -> PyResult<Probe> {
    let bad = || PyValueError::new_err(format!("unknown probe \"{probe}\""));
    match probe.split_once(':') {
        None if probe == "vacuum" => Ok(Probe::Vacuum),
        Some(("squeezed", r)) => Ok(Probe::Squeezed(r.parse().map_err(|_| bad())?)),
        Some(("coherent", a)) => Ok(Probe::Coherent(a.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

/// The truncated quadrature model `exp(iλ a^q⊗b^q)` with a `b^p` pointer.
#[pyclass(name = "Quadrature", module = "qmlab")]
struct PyQuadrature {
    config: QuadratureConfig,
}

impl PyQuadrature {
    fn model(&self, alpha: f64) -> PyResult<(QuadratureModel, State)> {
        let signal = quadrature::coherent_state(self.config.n, alpha);
        let model = QuadratureModel::for_signal(&self.config, &signal).map_err(err)?;
        Ok((model, signal))
    }
}

fn pick_scale<'m>(model: &'m QuadratureModel, scale: &str) -> PyResult<&'m PointerScale> {
    match scale {
        "fine" => Ok(model.fine_scale()),
        "coarse" => Ok(model.coarse_scale()),
        other => Err(PyValueError::new_err(format!("scale must be \"fine\" or \"coarse\", not \"{other}\""))),
    }
}

#[pymethods]
impl PyQuadrature {
    #[new]
    #[pyo3(signature = (n, lam, probe="vacuum", bins=2, probe_dim=None))]
    fn new(n: usize, lam: f64, probe: &str, bins: usize, probe_dim: Option<usize>) -> PyResult<Self> {
        let mut config = QuadratureConfig::new(n, lam).with_probe(parse_probe(probe)?).with_bins(bins);
        if let Some(m) = probe_dim {
            config = config.with_probe_dim(m);
        }
        Ok(PyQuadrature { config })
    }

    /// `ρ_obs` for a real coherent signal of amplitude `alpha`.
    #[pyo3(signature = (alpha, scale="fine"))]
    fn observable_correlation(&self, alpha: f64, scale: &str) -> PyResult<Option<f64>> {
        let (model, signal) = self.model(alpha)?;
        let s = pick_scale(&model, scale)?;
        Ok(model.observable_correlation(&signal, s).map_err(err)?.rho)
    }

    /// `ρ_value` of a coarse cell.
    fn value_correlation(&self, alpha: f64, cell: usize) -> PyResult<Option<f64>> {
        let (model, signal) = self.model(alpha)?;
        Ok(model.value_correlation(&signal, model.coarse_scale(), cell).map_err(err)?.stats.rho)
    }

    /// `ρ_state` of a coarse cell.
    fn state_correlation(&self, alpha: f64, cell: usize) -> PyResult<Option<f64>> {
        let (model, signal) = self.model(alpha)?;
        Ok(model.state_correlation(&signal, model.coarse_scale(), cell).map_err(err)?.rho)
    }

    /// One dict per λ with the variance split and correlations.
    fn sweep<'py>(&self, py: Python<'py>, alpha: f64, lambdas: Vec<f64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let signal = quadrature::coherent_state(self.config.n, alpha);
        let rows = quadrature::quadrature_correlation_sweep(&self.config, &signal, &lambdas).map_err(err)?;
        rows.iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("lambda", r.lambda)?;
                d.set_item("var_aq", r.var_aq)?;
                d.set_item("var_bp_scaled", r.var_bp_scaled)?;
                d.set_item("var_E", r.var_e)?;
                d.set_item("rho_obs", r.rho_obs)?;
                d.set_item("rho_value_cell0", r.rho_value_cell0)?;
                d.set_item("truncation_defect", r.truncation_defect)?;
                d.set_item("probe_dim", r.probe_dim)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Quadrature(n={}, lam={}, bins={})", self.config.n, self.config.lambda, self.config.bins)
    }
}

/// Seeded property suites; maps theorem id to `(passed, failed, skipped)`.
#[pyfunction]
#[pyo3(signature = (seed=1, count=100))]
fn verify<'py>(py: Python<'py>, seed: u64, count: usize) -> PyResult<Bound<'py, PyDict>> {
    let opts = correlate::theorems::VerifyOptions { count, ..Default::default() };
    let report = correlate::theorems::verify_theorems(seed, &opts);
    let d = PyDict::new(py);
    for s in report.summaries() {
        d.set_item(s.theorem, (s.passed, s.failed, s.skipped))?;
    }
    Ok(d)
}

#[pymodule]
#[pyo3(name = "qmlab")]
fn qmlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScheme>()?;
    m.add_class::<PyQuadrature>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
