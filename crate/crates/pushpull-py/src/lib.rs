//! Python bindings: graph generation, weight matrices, certification,
//! series constants, and config-driven simulation runs.

use ndarray::Array2;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use pushpull::config::ExperimentConfig;
use pushpull::digraph::{self, common_roots, root_set, DirectedGraph};
use pushpull::mixing::{self, MixingPair};
use pushpull::rng::graph_stream;
use pushpull::series;

type Matrix = Vec<Vec<f64>>;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_matrix(rows: Matrix) -> PyResult<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(PyValueError::new_err("matrix must be nonempty"));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows have unequal lengths"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn from_matrix(m: &Array2<f64>) -> Matrix {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// A directed graph on nodes `0..n`; edge `(j, i)` means `j` sends to `i`.
#[pyclass(name = "Graph", from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: DirectedGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self {
            inner: DirectedGraph::new(n, edges).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, bidirectional = false))]
    fn ring(n: usize, bidirectional: bool) -> PyResult<Self> {
        Ok(Self {
            inner: digraph::gen_ring(n, bidirectional).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, p, seed, max_attempts = 1000))]
    fn erdos_renyi(n: usize, p: f64, seed: u64, max_attempts: usize) -> PyResult<Self> {
        let mut rng = graph_stream(seed);
        Ok(Self {
            inner: digraph::gen_erdos_renyi(n, p, &mut rng, max_attempts).map_err(err)?,
        })
    }

    #[staticmethod]
    fn multi_subring(n: usize, k: usize) -> PyResult<Self> {
        Ok(Self {
            inner: digraph::gen_multi_subring(n, k).map_err(err)?,
        })
    }

    #[staticmethod]
    fn spanning_tree_pair(n: usize, seed: u64) -> PyResult<(Self, Self)> {
        let mut rng = graph_stream(seed);
        let (pull, push) = digraph::gen_spanning_tree_pair(n, &mut rng).map_err(err)?;
        Ok((Self { inner: pull }, Self { inner: push }))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.node_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn reverse(&self) -> Self {
        Self {
            inner: self.inner.reverse(),
        }
    }

    fn root_set(&self) -> Vec<usize> {
        root_set(&self.inner).iter().collect()
    }

    fn is_strongly_connected(&self) -> bool {
        self.inner.is_strongly_connected()
    }

    fn common_roots(&self, push: &PyGraph) -> PyResult<Vec<usize>> {
        Ok(common_roots(&self.inner, &push.inner)
            .map_err(err)?
            .iter()
            .collect())
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Row-stochastic pull weights over the in-neighborhoods.
#[pyfunction]
fn pull_matrix(g: &PyGraph) -> Matrix {
    from_matrix(&mixing::pull_matrix(&g.inner))
}

/// Column-stochastic push weights over the out-neighborhoods.
#[pyfunction]
fn push_matrix(g: &PyGraph) -> Matrix {
    from_matrix(&mixing::push_matrix(&g.inner))
}

/// Symmetric doubly stochastic Metropolis weights of an undirected graph.
#[pyfunction]
fn metropolis_matrix(g: &PyGraph) -> PyResult<Matrix> {
    Ok(from_matrix(&mixing::doubly_stochastic(&g.inner).map_err(err)?))
}

/// 0/1 spanning-tree weights for a pull/push tree pair.
#[pyfunction]
fn tree01_matrices(pull: &PyGraph, push: &PyGraph) -> PyResult<(Matrix, Matrix)> {
    let pair = mixing::tree_01_matrices(&pull.inner, &push.inner).map_err(err)?;
    Ok((from_matrix(&pair.r), from_matrix(&pair.c)))
}

fn build_pair(r: Matrix, c: Matrix, spanning_tree: bool) -> PyResult<MixingPair> {
    let mut pair = MixingPair::new(to_matrix(r)?, to_matrix(c)?).map_err(err)?;
    pair.spanning_tree_mode = spanning_tree;
    Ok(pair)
}

/// Certify a weight-matrix pair; returns the root eigenvectors and decay
/// certificates.
#[pyfunction]
#[pyo3(signature = (r, c, spanning_tree = false, t_check = 400))]
fn certify<'py>(
    py: Python<'py>,
    r: Matrix,
    c: Matrix,
    spanning_tree: bool,
    t_check: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let pair = build_pair(r, c, spanning_tree)?;
    let cert = mixing::certify_pair(&pair, t_check).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("pi_r", cert.pi_r.pi.to_vec())?;
    out.set_item("pi_c", cert.pi_c.pi.to_vec())?;
    out.set_item("pi", cert.pi())?;
    out.set_item("m_r", cert.cert_r.m)?;
    out.set_item("alpha_r", cert.cert_r.alpha)?;
    out.set_item("m_c", cert.cert_c.m)?;
    out.set_item("alpha_c", cert.cert_c.alpha)?;
    out.set_item("common_roots", cert.common.iter().collect::<Vec<usize>>())?;
    Ok(out)
}

/// Run every structural check; each entry is `(name, passed, detail)`.
#[pyfunction]
#[pyo3(signature = (r, c, t_check = 400))]
fn validate<'py>(
    py: Python<'py>,
    r: Matrix,
    c: Matrix,
    t_check: usize,
) -> PyResult<Bound<'py, PyList>> {
    let pair = build_pair(r, c, false)?;
    let report = mixing::validate_pair_with(&pair, t_check);
    let list = PyList::empty(py);
    for check in report.checks {
        list.append((check.name, check.pass, check.detail))?;
    }
    Ok(list)
}

/// Series constants and speedup diagnostics of a certified pair.
#[pyfunction]
#[pyo3(signature = (r, c, spanning_tree = false, tol = 1e-10, t_check = 400))]
fn constants<'py>(
    py: Python<'py>,
    r: Matrix,
    c: Matrix,
    spanning_tree: bool,
    tol: f64,
    t_check: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let pair = build_pair(r, c, spanning_tree)?;
    let n = pair.n();
    let cert = mixing::certify_pair(&pair, t_check).map_err(err)?;
    let report = series::compute_constants(&cert, tol).map_err(err)?;
    let ratio = series::speedup_ratio(&report, n).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("pi", report.pi)?;
    out.set_item("lambda", report.lambda)?;
    out.set_item("lambda_min", report.lambda_min)?;
    out.set_item("m1", report.m1)?;
    out.set_item("m2", report.m2)?;
    out.set_item("m2_tilde", report.m2_tilde)?;
    for (name, v) in [
        ("n1", report.n1),
        ("n2", report.n2),
        ("n3", report.n3),
        ("n4", report.n4),
        ("n5", report.n5),
        ("n6", report.n6),
        ("n7", report.n7),
        ("n8", report.n8),
    ] {
        out.set_item(name, v)?;
    }
    out.set_item("truncation_t", report.truncation_t)?;
    out.set_item("tail_bound", report.tail_bound)?;
    out.set_item("speedup_ratio", ratio)?;
    Ok(out)
}

/// Parse a TOML experiment config, run every seed, and return the aggregate
/// metric columns plus the theory diagnostics.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(err)?;
    let outcome = pushpull::cli::execute_run(&cfg).map_err(err)?;
    let records = |f: fn(&pushpull::engine::TraceRecord) -> f64| -> Vec<f64> {
        let len = outcome.traces[0].records.len();
        let k = outcome.traces.len() as f64;
        (0..len)
            .map(|i| outcome.traces.iter().map(|t| f(&t.records[i])).sum::<f64>() / k)
            .collect()
    };
    let out = PyDict::new(py);
    out.set_item(
        "t",
        outcome.traces[0]
            .records
            .iter()
            .map(|r| r.t)
            .collect::<Vec<usize>>(),
    )?;
    out.set_item("gamma", records(|r| r.gamma))?;
    out.set_item("grad_norm_sq", records(|r| r.grad_norm_sq))?;
    out.set_item("consensus", records(|r| r.consensus))?;
    out.set_item("tracking", records(|r| r.tracking))?;
    out.set_item("invariant_residual", records(|r| r.invariant_residual))?;
    out.set_item(
        "max_invariant_rel",
        outcome
            .traces
            .iter()
            .map(|t| t.meta.max_invariant_rel)
            .fold(0.0f64, f64::max),
    )?;
    out.set_item(
        "max_recursion_rel",
        outcome
            .traces
            .iter()
            .map(|t| t.meta.max_recursion_rel)
            .fold(0.0f64, f64::max),
    )?;
    out.set_item("pi", outcome.sidecar.spectral.pi)?;
    out.set_item("theory_gamma", outcome.sidecar.theory.gamma)?;
    out.set_item("f_star", outcome.sidecar.f_star)?;
    out.set_item(
        "final_grad_norm_sq",
        outcome.sidecar.final_grad_norm_sq.clone(),
    )?;
    Ok(out)
}

/// The speedup ratio `max{M1, M̃2, M1·M̃2}/(n·π²)` of a certified pair.
#[pyfunction]
#[pyo3(signature = (r, c, spanning_tree = false, tol = 1e-10, t_check = 400))]
fn speedup_ratio(
    r: Matrix,
    c: Matrix,
    spanning_tree: bool,
    tol: f64,
    t_check: usize,
) -> PyResult<f64> {
    let pair = build_pair(r, c, spanning_tree)?;
    let n = pair.n();
    let cert = mixing::certify_pair(&pair, t_check).map_err(err)?;
    let report = series::compute_constants(&cert, tol).map_err(err)?;
    series::speedup_ratio(&report, n).map_err(err)
}

/// Evaluate the prescribed stepsize and the convergence-bound right-hand
/// side for explicit problem constants; returns `(gamma, bound)`.
#[pyfunction]
fn theory_bound(
    r: Matrix,
    c: Matrix,
    l_smooth: f64,
    sigma2: f64,
    delta_f: f64,
    f0: f64,
    t_horizon: usize,
) -> PyResult<(f64, f64)> {
    let pair = build_pair(r, c, false)?;
    let n = pair.n();
    let cert = mixing::certify_pair(&pair, 400).map_err(err)?;
    let report = series::compute_constants(&cert, 1e-10).map_err(err)?;
    let bundle =
        series::theory_bundle(&report, l_smooth, sigma2, delta_f, f0, t_horizon).map_err(err)?;
    let rhs = series::bound_rhs(&bundle, &report, n, t_horizon);
    Ok((bundle.gamma, rhs))
}

#[pymodule]
fn pushpull_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(pull_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(push_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(metropolis_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(tree01_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(speedup_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(theory_bound, m)?)?;
    Ok(())
}
