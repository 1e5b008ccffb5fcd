//! Python bindings for `hppsim-core`.
//!
//! Instances and gate lists are wrapped as classes; solver reports come back
//! as plain dicts shaped like the CLI report entries.

use std::time::Instant;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hppsim_core::causal::{self, CausalError, CausalReport};
use hppsim_core::formats::{InstanceDoc, SolverEntry};
use hppsim_core::hadamard::{self, HadamardError, SignMatrix};
use hppsim_core::hpp::{
    self, CompositionTree, GateAssignment, HppError, HppInstance, SynthOptions, Synthesis, TreePath,
};
use hppsim_core::qmat::{ComplexMatrix, QmatError, UnitaryGate};
use hppsim_core::switch::{self, StateVector, SwitchError};
use hppsim_core::TOLERANCE;

create_exception!(hppsim, HppSimError, PyValueError);
create_exception!(hppsim, PromiseViolatedError, HppSimError);
create_exception!(hppsim, UnsatisfiableError, HppSimError);
create_exception!(hppsim, NonDeterministicMeasurementError, HppSimError);

fn hpp_err(e: HppError) -> PyErr {
    match e {
        HppError::PromiseViolated(m) => PromiseViolatedError::new_err(m),
        other => HppSimError::new_err(other.to_string()),
    }
}

fn switch_err(e: SwitchError) -> PyErr {
    match e {
        SwitchError::Hpp(h) => hpp_err(h),
        SwitchError::ReadoutAmbiguous { .. } => NonDeterministicMeasurementError::new_err(e.to_string()),
        other => HppSimError::new_err(other.to_string()),
    }
}

fn causal_err(e: CausalError) -> PyErr {
    match e {
        CausalError::Hpp(h) => hpp_err(h),
        CausalError::Switch(s) => switch_err(s),
        CausalError::NonDeterministicMeasurement { .. } => NonDeterministicMeasurementError::new_err(e.to_string()),
        other => HppSimError::new_err(other.to_string()),
    }
}

fn other_err(e: impl std::fmt::Display) -> PyErr {
    HppSimError::new_err(e.to_string())
}

fn parse_tree(spec: &str) -> PyResult<CompositionTree> {
    spec.parse().map_err(hpp_err)
}

/// A Hadamard promise problem instance.
#[pyclass(name = "Instance", module = "hppsim", frozen)]
#[derive(Clone)]
struct PyInstance {
    inner: HppInstance,
}

#[pymethods]
impl PyInstance {
    /// Builds the instance of a composition tree such as `"pair(slot1:pair)"`.
    #[staticmethod]
    fn from_tree(spec: &str) -> PyResult<Self> {
        let inner = hpp::build_from_tree(&parse_tree(spec)?).map_err(hpp_err)?;
        Ok(Self { inner })
    }

    /// Builds an instance from explicit permutations and a `±1` sign matrix
    /// (`signs[y][x]`).
    #[new]
    #[pyo3(signature = (n, perms, signs, label_shape=None))]
    fn new(n: usize, perms: Vec<Vec<usize>>, signs: Vec<Vec<i64>>, label_shape: Option<Vec<usize>>) -> PyResult<Self> {
        let signs = SignMatrix::from_rows(signs).map_err(other_err)?;
        let perms = perms
            .into_iter()
            .map(hpp::Permutation::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(hpp_err)?;
        let shape = label_shape.unwrap_or_else(|| vec![perms.len()]);
        let inner = HppInstance::new(n, perms, signs, shape).map_err(hpp_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: InstanceDoc = serde_json::from_str(text).map_err(other_err)?;
        Ok(Self {
            inner: doc.to_instance().map_err(hpp_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&InstanceDoc::from_instance(&self.inner)).map_err(other_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn n_x(&self) -> usize {
        self.inner.n_x()
    }

    #[getter]
    fn perms(&self) -> Vec<Vec<usize>> {
        self.inner.perms().iter().map(|p| p.to_vec()).collect()
    }

    #[getter]
    fn signs(&self) -> Vec<Vec<i8>> {
        self.inner.signs().to_rows()
    }

    #[getter]
    fn label_shape(&self) -> Vec<usize> {
        self.inner.label_shape().to_vec()
    }

    #[getter]
    fn tree(&self) -> Option<String> {
        self.inner.tree().map(ToString::to_string)
    }

    fn sign(&self, x: usize, y: usize) -> PyResult<i8> {
        if x >= self.inner.n_x() || y >= self.inner.n_x() {
            return Err(HppSimError::new_err(format!("index out of range for n_x = {}", self.inner.n_x())));
        }
        Ok(self.inner.signs().entry(x, y))
    }

    fn decode_label(&self, y: usize) -> PyResult<Vec<usize>> {
        self.inner.decode_label(y).map_err(hpp_err)
    }

    fn encode_label(&self, labels: Vec<usize>) -> PyResult<usize> {
        self.inner.encode_label(&labels).map_err(hpp_err)
    }

    fn __repr__(&self) -> String {
        match self.inner.tree() {
            Some(t) => format!("Instance(tree='{t}', n={}, n_x={})", self.inner.n(), self.inner.n_x()),
            None => format!("Instance(n={}, n_x={})", self.inner.n(), self.inner.n_x()),
        }
    }
}

/// An ordered list of 2×2 unitaries `U_0 .. U_{n-1}`.
#[pyclass(name = "Gates", module = "hppsim", frozen)]
#[derive(Clone)]
struct PyGates {
    inner: GateAssignment,
}

#[pymethods]
impl PyGates {
    /// `matrices[g][row][col]` as Python complex numbers.
    #[new]
    fn new(matrices: Vec<Vec<Vec<Complex64>>>) -> PyResult<Self> {
        let gates = matrices
            .into_iter()
            .map(|rows| {
                let m = ComplexMatrix::from_rows(rows)?;
                UnitaryGate::new(m)
            })
            .collect::<Result<Vec<_>, QmatError>>()
            .map_err(other_err)?;
        Ok(Self {
            inner: GateAssignment::new(gates).map_err(hpp_err)?,
        })
    }

    fn to_list(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.inner.gates().iter().map(|g| g.matrix().to_rows()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Gates(n={})", self.inner.len())
    }
}

fn entry_dict<'py>(py: Python<'py>, entry: &SolverEntry) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("y", entry.y.clone())?;
    d.set_item("queries", entry.queries.clone())?;
    d.set_item("residual", entry.residual)?;
    d.set_item("bound", entry.bound)?;
    d.set_item("wall_ms", entry.wall_ms)?;
    Ok(d)
}

fn causal_dict<'py>(py: Python<'py>, r: &CausalReport, start: Instant) -> PyResult<Bound<'py, PyDict>> {
    let d = entry_dict(py, &SolverEntry::from_causal(r, start.elapsed().as_secs_f64() * 1e3))?;
    d.set_item("target_fidelity", r.target_fidelity)?;
    Ok(d)
}

/// Parses and normalizes a composition tree spec.
#[pyfunction]
fn normalize_tree(spec: &str) -> PyResult<String> {
    Ok(parse_tree(spec)?.to_string())
}

/// Gates satisfying label `y` on `tree`; raises `UnsatisfiableError` with
/// the blocking node path when no qubit gates exist.
#[pyfunction]
#[pyo3(signature = (tree, y, seed=None))]
fn synthesize(tree: &str, y: Vec<usize>, seed: Option<u64>) -> PyResult<PyGates> {
    match hpp::synthesize_gates(&parse_tree(tree)?, &y, SynthOptions { seed }).map_err(hpp_err)? {
        Synthesis::Gates(inner) => Ok(PyGates { inner }),
        Synthesis::Unsatisfiable { path, label } => Err(UnsatisfiableError::new_err(format!(
            "label {label:?} blocked at {}",
            TreePath(&path)
        ))),
    }
}

/// Tabulated gate rows for `pair`, `pair(slot1:pair)` and `triple`.
#[pyfunction]
fn reference_gates(tree: &str, y: Vec<usize>) -> PyResult<Option<PyGates>> {
    Ok(hpp::reference_gates(&parse_tree(tree)?, &y).map(|inner| PyGates { inner }))
}

#[pyfunction]
#[pyo3(signature = (instance, gates, tol=TOLERANCE))]
fn verify_promise(instance: &PyInstance, gates: &PyGates, tol: f64) -> PyResult<Vec<usize>> {
    hpp::verify_promise_with_tol(&instance.inner, &gates.inner, tol).map_err(hpp_err)
}

/// Runs the n-switch; `target` defaults to `|0>`.
#[pyfunction]
#[pyo3(signature = (instance, gates, target=None))]
fn switch_solve<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    gates: &PyGates,
    target: Option<Vec<Complex64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let target = target
        .map(|amps| StateVector::new(vec![amps.len()], amps))
        .transpose()
        .map_err(switch_err)?;
    let start = Instant::now();
    let r = switch::switch_solve(&instance.inner, &gates.inner, target.as_ref()).map_err(switch_err)?;
    let d = entry_dict(py, &SolverEntry::from_switch(&r, start.elapsed().as_secs_f64() * 1e3))?;
    d.set_item("final_target_fidelity", r.final_target_fidelity)?;
    d.set_item("factorization_defect", r.factorization_defect)?;
    Ok(d)
}

#[pyfunction]
fn solve_fig3<'py>(py: Python<'py>, gates: &PyGates) -> PyResult<Bound<'py, PyDict>> {
    let start = Instant::now();
    let r = causal::solve_fig3(&gates.inner).map_err(causal_err)?;
    causal_dict(py, &r, start)
}

#[pyfunction]
fn solve_fig4<'py>(py: Python<'py>, gates: &PyGates) -> PyResult<Bound<'py, PyDict>> {
    let start = Instant::now();
    let r = causal::solve_fig4(&gates.inner).map_err(causal_err)?;
    causal_dict(py, &r, start)
}

/// The n²-call simulation of every permutation.
#[pyfunction]
fn solve_sim_switch<'py>(py: Python<'py>, instance: &PyInstance, gates: &PyGates) -> PyResult<Bound<'py, PyDict>> {
    let start = Instant::now();
    let r = causal::solve_sim_switch(&instance.inner, &gates.inner).map_err(causal_err)?;
    causal_dict(py, &r, start)
}

#[pyfunction]
fn recursive_solve<'py>(py: Python<'py>, tree: &str, gates: &PyGates) -> PyResult<Bound<'py, PyDict>> {
    let tree = parse_tree(tree)?;
    let start = Instant::now();
    let r = causal::recursive_solve(&tree, &gates.inner).map_err(causal_err)?;
    causal_dict(py, &r, start)
}

#[pyfunction]
fn query_bound(tree: &str) -> PyResult<f64> {
    Ok(causal::query_bound(&parse_tree(tree)?))
}

/// `{"tree", "satisfiable": [labels], "unsatisfiable": [{"label", "path"}]}`.
#[pyfunction]
fn census<'py>(py: Python<'py>, tree: &str) -> PyResult<Bound<'py, PyDict>> {
    let c = hpp::census(&parse_tree(tree)?).map_err(hpp_err)?;
    let d = PyDict::new(py);
    d.set_item("tree", c.tree)?;
    d.set_item("satisfiable", c.satisfiable)?;
    let blocked = c
        .unsatisfiable
        .into_iter()
        .map(|u| {
            let e = PyDict::new(py);
            e.set_item("label", u.label)?;
            e.set_item("path", u.path)?;
            Ok(e)
        })
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("unsatisfiable", blocked)?;
    Ok(d)
}

fn sign_rows(rows: Vec<Vec<i64>>) -> PyResult<SignMatrix> {
    SignMatrix::from_rows(rows).map_err(|e: HadamardError| other_err(e))
}

/// Rows of the order-`2^k` Sylvester matrix.
#[pyfunction]
fn sylvester(k: u32) -> PyResult<Vec<Vec<i8>>> {
    Ok(hadamard::sylvester(k).map_err(other_err)?.to_rows())
}

/// Kronecker product of two `±1` matrices, `s(x1 + m x2, y1 + m y2) = s1 s2`.
#[pyfunction]
fn kron_sign(a: Vec<Vec<i64>>, b: Vec<Vec<i64>>) -> PyResult<Vec<Vec<i8>>> {
    Ok(hadamard::kron_sign(&sign_rows(a)?, &sign_rows(b)?).map_err(other_err)?.to_rows())
}

#[pyfunction]
fn is_hadamard(rows: Vec<Vec<i64>>) -> PyResult<bool> {
    Ok(sign_rows(rows)?.is_hadamard())
}

#[pymodule]
fn hppsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyInstance>()?;
    m.add_class::<PyGates>()?;
    m.add("HppSimError", py.get_type::<HppSimError>())?;
    m.add("PromiseViolatedError", py.get_type::<PromiseViolatedError>())?;
    m.add("UnsatisfiableError", py.get_type::<UnsatisfiableError>())?;
    m.add(
        "NonDeterministicMeasurementError",
        py.get_type::<NonDeterministicMeasurementError>(),
    )?;
    m.add_function(wrap_pyfunction!(normalize_tree, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(reference_gates, m)?)?;
    m.add_function(wrap_pyfunction!(verify_promise, m)?)?;
    m.add_function(wrap_pyfunction!(switch_solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_fig3, m)?)?;
    m.add_function(wrap_pyfunction!(solve_fig4, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sim_switch, m)?)?;
    m.add_function(wrap_pyfunction!(recursive_solve, m)?)?;
    m.add_function(wrap_pyfunction!(query_bound, m)?)?;
    m.add_function(wrap_pyfunction!(census, m)?)?;
    m.add_function(wrap_pyfunction!(sylvester, m)?)?;
    m.add_function(wrap_pyfunction!(kron_sign, m)?)?;
    m.add_function(wrap_pyfunction!(is_hadamard, m)?)?;
    Ok(())
}
