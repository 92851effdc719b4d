//! Weight matrices over the communication graphs and their certification.
//!
//! The pull matrix `R` is row-stochastic, the push matrix `C` is
//! column-stochastic. Certification checks the two structural requirements
//! the algorithm needs: a common root between the pull graph and the
//! reversed push graph, and exponential decay of `‖Aᵗ − 1πᵀ‖₂` for both
//! matrices.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::digraph::{common_roots, root_set, DirectedGraph, RootSet};
use crate::error::{Error, Result};
use crate::linalg::{linf, mat_pow, outer, spectral_norm};

/// Tolerance for stochasticity residuals.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Convergence tolerance (successive-iterate ℓ∞ difference) for the root
/// eigenvector power iteration; entries below it are clamped to zero.
pub const EIGEN_TOL: f64 = 1e-12;
/// Iteration cap for the root eigenvector power iteration.
pub const EIGEN_ITER_CAP: usize = 500_000;
/// Steps used in the decay-rate estimate `‖(A − 1πᵀ)^K‖^(1/K)`.
pub const DECAY_RATE_STEPS: usize = 64;
/// Default horizon for decay certification.
pub const DEFAULT_T_CHECK: usize = 400;

/// A pull/push weight-matrix pair.
#[derive(Debug, Clone)]
pub struct MixingPair {
    pub r: Array2<f64>,
    pub c: Array2<f64>,
    /// True when the pair is the 0/1 spanning-tree construction, which zeroes
    /// the `M2`-style constant in the speedup diagnostics.
    pub spanning_tree_mode: bool,
}

impl MixingPair {
    pub fn new(r: Array2<f64>, c: Array2<f64>) -> Result<Self> {
        if r.nrows() != r.ncols() || c.nrows() != c.ncols() || r.nrows() != c.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "pull {}x{} vs push {}x{}",
                r.nrows(),
                r.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self {
            r,
            c,
            spanning_tree_mode: false,
        })
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }
}

/// Which matrix a root eigenvector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssociatedMatrix {
    R,
    CTranspose,
}

/// Unit-ℓ₁ nonnegative left eigenvector for eigenvalue 1 with support
/// inside the root set.
#[derive(Debug, Clone)]
pub struct RootEigenvector {
    pub pi: Array1<f64>,
    pub associated_matrix: AssociatedMatrix,
}

/// Numerical witness that `‖Aᵗ − 1πᵀ‖₂ ≤ alphaᵗ` for `t` in `[m, checked_horizon]`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayCertificate {
    pub m: usize,
    pub alpha: f64,
    pub checked_horizon: usize,
}

/// Residual of row stochasticity, `‖R1 − 1‖∞`.
pub fn row_stochastic_residual(m: &Array2<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (m.row(i).sum() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Residual of column stochasticity, `‖Cᵀ1 − 1‖∞`.
pub fn column_stochastic_residual(m: &Array2<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| (m.column(j).sum() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Graph induced by the off-diagonal support of a weight matrix: edge
/// `(j, i)` iff `m[i][j] > 0`.
pub fn induced_graph(m: &Array2<f64>) -> Result<DirectedGraph> {
    let n = m.nrows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[[i, j]] > 0.0 {
                edges.push((j, i));
            }
        }
    }
    DirectedGraph::new(n, edges)
}

/// Row-stochastic pull matrix: `R[i][j] = 1 / (1 + in_degree(i))` on pull
/// edges and the diagonal.
pub fn pull_matrix(g: &DirectedGraph) -> Array2<f64> {
    let n = g.node_count();
    let mut r = Array2::zeros((n, n));
    for i in 0..n {
        let w = 1.0 / (1.0 + g.in_degree(i) as f64);
        r[[i, i]] = w;
        for j in g.in_neighbors(i) {
            r[[i, j]] = w;
        }
    }
    r
}

/// Column-stochastic push matrix: `C[i][j] = 1 / (1 + out_degree(j))` on
/// push edges and the diagonal.
pub fn push_matrix(g: &DirectedGraph) -> Array2<f64> {
    let n = g.node_count();
    let mut c = Array2::zeros((n, n));
    for j in 0..n {
        let w = 1.0 / (1.0 + g.out_degree(j) as f64);
        c[[j, j]] = w;
        for i in g.out_neighbors(j) {
            c[[i, j]] = w;
        }
    }
    c
}

/// Metropolis weights on an undirected graph: symmetric and doubly
/// stochastic, with the diagonal absorbing the remainder.
pub fn doubly_stochastic(g: &DirectedGraph) -> Result<Array2<f64>> {
    if !g.is_undirected() {
        return Err(Error::NotUndirected(
            "metropolis weights need a symmetric edge set".into(),
        ));
    }
    let n = g.node_count();
    let deg: Vec<usize> = (0..n).map(|i| g.in_degree(i)).collect();
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        let mut off = 0.0;
        for j in g.in_neighbors(i) {
            let v = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
            w[[i, j]] = v;
            off += v;
        }
        w[[i, i]] = 1.0 - off;
    }
    Ok(w)
}

/// 0/1 matrices for a spanning-tree pair: each node pulls its value from its
/// pull-parent and pushes its tracker mass to its push-parent; the root keeps
/// itself in both.
pub fn tree_01_matrices(g_pull: &DirectedGraph, g_push: &DirectedGraph) -> Result<MixingPair> {
    let n = g_pull.node_count();
    if g_push.node_count() != n {
        return Err(Error::DimensionMismatch(
            "tree pair graphs have different node counts".into(),
        ));
    }
    let pull_parent = tree_parents(g_pull, TreeOrientation::AwayFromRoot)?;
    let push_parent = tree_parents(g_push, TreeOrientation::TowardRoot)?;
    if pull_parent.root != push_parent.root {
        return Err(Error::Structure(format!(
            "trees have different roots: {} vs {}",
            pull_parent.root, push_parent.root
        )));
    }
    let mut r = Array2::zeros((n, n));
    let mut c = Array2::zeros((n, n));
    for (i, parent) in pull_parent.parent.iter().enumerate() {
        match parent {
            Some(p) => r[[i, *p]] = 1.0,
            None => r[[i, i]] = 1.0,
        }
    }
    for (i, parent) in push_parent.parent.iter().enumerate() {
        match parent {
            Some(p) => c[[*p, i]] = 1.0,
            None => c[[i, i]] = 1.0,
        }
    }
    Ok(MixingPair {
        r,
        c,
        spanning_tree_mode: true,
    })
}

enum TreeOrientation {
    /// Edges parent → child; the root has in-degree 0.
    AwayFromRoot,
    /// Edges child → parent; the root has out-degree 0.
    TowardRoot,
}

struct TreeParents {
    root: usize,
    parent: Vec<Option<usize>>,
}

#[allow(clippy::needless_range_loop)]
fn tree_parents(g: &DirectedGraph, orientation: TreeOrientation) -> Result<TreeParents> {
    let n = g.node_count();
    if g.edge_count() != n - 1 {
        return Err(Error::Structure(format!(
            "spanning tree on {n} nodes needs {} edges, found {}",
            n - 1,
            g.edge_count()
        )));
    }
    let mut parent = vec![None; n];
    let mut root = None;
    for i in 0..n {
        let links = match orientation {
            TreeOrientation::AwayFromRoot => g.in_neighbors(i),
            TreeOrientation::TowardRoot => g.out_neighbors(i),
        };
        match links.len() {
            0 => {
                if root.replace(i).is_some() {
                    return Err(Error::Structure("tree has more than one root".into()));
                }
            }
            1 => parent[i] = Some(links[0]),
            d => {
                return Err(Error::Structure(format!(
                    "node {i} has {d} parents; not a tree"
                )))
            }
        }
    }
    let root = root.ok_or_else(|| Error::Structure("tree has no root".into()))?;
    // Parent pointers must all lead to the root (no disjoint cycles).
    for start in 0..n {
        let mut node = start;
        let mut hops = 0;
        while let Some(p) = parent[node] {
            node = p;
            hops += 1;
            if hops > n {
                return Err(Error::Structure("parent pointers contain a cycle".into()));
            }
        }
        if node != root {
            return Err(Error::Structure("tree is not connected to the root".into()));
        }
    }
    Ok(TreeParents { root, parent })
}

/// The unique root eigenvector of a row-stochastic matrix, by power
/// iteration on `Aᵀ` with ℓ₁ renormalization.
///
/// Entries below `EIGEN_TOL` and entries outside the root set are clamped to
/// exact zero so the support condition is testable.
pub fn root_eigenvector(
    a: &Array2<f64>,
    roots: &RootSet,
    which: AssociatedMatrix,
) -> Result<RootEigenvector> {
    let n = a.nrows();
    if roots.is_empty() {
        return Err(Error::AssumptionViolated(
            "induced graph has no spanning tree (empty root set)".into(),
        ));
    }
    let mut x = Array1::from_elem(n, 1.0 / n as f64);
    let mut converged = false;
    for _ in 0..EIGEN_ITER_CAP {
        let mut y = a.t().dot(&x);
        let s = y.sum();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Numeric("eigenvector iteration lost mass".into()));
        }
        y.mapv_inplace(|v| v / s);
        let diff = linf(&(&y - &x));
        x = y;
        if diff < EIGEN_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "root eigenvector did not converge within {EIGEN_ITER_CAP} iterations"
        )));
    }
    for i in 0..n {
        if x[i] < EIGEN_TOL || !roots.contains(i) {
            x[i] = 0.0;
        }
    }
    let s = x.sum();
    if s <= 0.0 {
        return Err(Error::Numeric("eigenvector support collapsed".into()));
    }
    x.mapv_inplace(|v| v / s);
    Ok(RootEigenvector {
        pi: x,
        associated_matrix: which,
    })
}

/// Roundoff allowance in the decay scan: once `‖Aᵗ − 1πᵀ‖₂` reaches the
/// noise of the numerically computed `π`, the geometric bound cannot be
/// tracked any deeper.
pub const DECAY_NOISE_FLOOR: f64 = 1e-13;

/// Certify exponential decay of `‖Aᵗ − 1πᵀ‖₂`.
///
/// The rate is estimated as `‖(A − 1πᵀ)^K‖₂^(1/K)` with `K = 64`, a margin of
/// `0.05·(1 − ρ)` is added, and the smallest `m ≤ t_check` for which the
/// inequality holds on the whole tail `[m, t_check]` is located by scanning.
pub fn certify_decay(
    a: &Array2<f64>,
    pi: &RootEigenvector,
    t_check: usize,
) -> Result<DecayCertificate> {
    if t_check == 0 {
        return Err(Error::InvalidSize("t_check must be positive".into()));
    }
    let n = a.nrows();
    let ones = Array1::from_elem(n, 1.0);
    let dev = a - &outer(&ones, &pi.pi);
    let powered = mat_pow(&dev, DECAY_RATE_STEPS);
    let rho = spectral_norm(&powered).powf(1.0 / DECAY_RATE_STEPS as f64);
    let alpha = (rho + 0.05 * (1.0 - rho)).min(1.0 - 1e-9);

    // Scan ‖Aᵗ − 1πᵀ‖₂ for t = 1..=t_check; the smallest valid m is one past
    // the last failing t.
    let mut last_fail = 0usize;
    let mut cur = dev.clone();
    let mut bound = alpha;
    for t in 1..=t_check {
        if spectral_norm(&cur) > bound.max(DECAY_NOISE_FLOOR) {
            last_fail = t;
        }
        if t < t_check {
            cur = cur.dot(a);
            bound *= alpha;
        }
    }
    if last_fail >= t_check {
        return Err(Error::DecayUncertifiable {
            horizon: t_check,
            alpha,
        });
    }
    Ok(DecayCertificate {
        m: last_fail + 1,
        alpha,
        checked_horizon: t_check,
    })
}

/// A mixing pair together with the artifacts proving it satisfies the
/// standing assumptions. Produced by [`certify_pair`].
#[derive(Debug, Clone)]
pub struct Certified {
    pub pair: MixingPair,
    pub pi_r: RootEigenvector,
    pub pi_c: RootEigenvector,
    pub cert_r: DecayCertificate,
    pub cert_c: DecayCertificate,
    pub common: RootSet,
}

impl Certified {
    /// `π = π_Rᵀ π_C`, positive whenever certification succeeded.
    pub fn pi(&self) -> f64 {
        self.pi_r.pi.dot(&self.pi_c.pi)
    }

    pub fn n(&self) -> usize {
        self.pair.n()
    }
}

/// Run the full certification pipeline, failing on the first broken
/// requirement.
pub fn certify_pair(pair: &MixingPair, t_check: usize) -> Result<Certified> {
    let r_res = row_stochastic_residual(&pair.r);
    if r_res > STOCHASTIC_TOL {
        return Err(Error::AssumptionViolated(format!(
            "pull matrix row-sum residual {r_res:e}"
        )));
    }
    let c_res = column_stochastic_residual(&pair.c);
    if c_res > STOCHASTIC_TOL {
        return Err(Error::AssumptionViolated(format!(
            "push matrix column-sum residual {c_res:e}"
        )));
    }
    if pair.r.iter().chain(pair.c.iter()).any(|&v| v < 0.0) {
        return Err(Error::AssumptionViolated("negative weight entry".into()));
    }
    let g_r = induced_graph(&pair.r)?;
    let g_c = induced_graph(&pair.c)?;
    let common = common_roots(&g_r, &g_c)?;
    if common.is_empty() {
        return Err(Error::AssumptionViolated(
            "pull graph and reversed push graph share no root".into(),
        ));
    }
    let pi_r = root_eigenvector(&pair.r, &root_set(&g_r), AssociatedMatrix::R)?;
    let ct = pair.c.t().to_owned();
    let pi_c = root_eigenvector(&ct, &root_set(&g_c.reverse()), AssociatedMatrix::CTranspose)?;
    let cert_r = certify_decay(&pair.r, &pi_r, t_check)?;
    let cert_c = certify_decay(&ct, &pi_c, t_check)?;
    let cert = Certified {
        pair: pair.clone(),
        pi_r,
        pi_c,
        cert_r,
        cert_c,
        common,
    };
    if cert.pi() <= 0.0 {
        return Err(Error::AssumptionViolated(
            "root eigenvectors have no overlapping mass".into(),
        ));
    }
    Ok(cert)
}

/// One entry of a validation report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub value: serde_json::Value,
    pub detail: String,
}

/// Outcome of [`validate_pair`]: every requirement with its measured value.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Check stochasticity, the common-root requirement, both decay
/// certificates, and the eigenvector overlap. Failures become report
/// entries, never errors.
pub fn validate_pair(pair: &MixingPair) -> ValidationReport {
    validate_pair_with(pair, DEFAULT_T_CHECK)
}

pub fn validate_pair_with(pair: &MixingPair, t_check: usize) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, value: serde_json::Value, detail: String| {
        checks.push(CheckResult {
            name: name.to_string(),
            pass,
            value,
            detail,
        });
    };

    let r_res = row_stochastic_residual(&pair.r);
    push(
        "pull_row_stochastic",
        r_res <= STOCHASTIC_TOL,
        serde_json::json!(r_res),
        format!("‖R·1 − 1‖∞ = {r_res:.3e}"),
    );
    let c_res = column_stochastic_residual(&pair.c);
    push(
        "push_column_stochastic",
        c_res <= STOCHASTIC_TOL,
        serde_json::json!(c_res),
        format!("‖Cᵀ·1 − 1‖∞ = {c_res:.3e}"),
    );
    let min_entry = pair
        .r
        .iter()
        .chain(pair.c.iter())
        .fold(f64::INFINITY, |a, &b| a.min(b));
    push(
        "nonnegative",
        min_entry >= 0.0,
        serde_json::json!(min_entry),
        format!("smallest entry {min_entry:.3e}"),
    );

    let g_r = match induced_graph(&pair.r) {
        Ok(g) => g,
        Err(e) => {
            push("induced_graphs", false, serde_json::Value::Null, e.to_string());
            return ValidationReport { checks };
        }
    };
    let g_c = induced_graph(&pair.c).expect("push graph dimensions already checked");
    match common_roots(&g_r, &g_c) {
        Ok(common) => {
            let roots: Vec<usize> = common.iter().collect();
            push(
                "common_root",
                !common.is_empty(),
                serde_json::json!(roots),
                format!("|R_R ∩ R_Cᵀ| = {}", common.len()),
            );
        }
        Err(e) => push("common_root", false, serde_json::Value::Null, e.to_string()),
    }

    let pi_r = root_eigenvector(&pair.r, &root_set(&g_r), AssociatedMatrix::R);
    let ct = pair.c.t().to_owned();
    let pi_c = root_eigenvector(&ct, &root_set(&g_c.reverse()), AssociatedMatrix::CTranspose);
    match (&pi_r, &pi_c) {
        (Ok(pr), Ok(pc)) => {
            let res_r = linf(&(&pair.r.t().dot(&pr.pi) - &pr.pi));
            push(
                "pi_r_fixed_point",
                res_r <= 1e-10,
                serde_json::json!(res_r),
                format!("‖π_Rᵀ R − π_Rᵀ‖∞ = {res_r:.3e}"),
            );
            let res_c = linf(&(&pair.c.dot(&pc.pi) - &pc.pi));
            push(
                "pi_c_fixed_point",
                res_c <= 1e-10,
                serde_json::json!(res_c),
                format!("‖π_Cᵀ Cᵀ − π_Cᵀ‖∞ = {res_c:.3e}"),
            );
            let overlap = pr.pi.dot(&pc.pi);
            push(
                "pi_overlap_positive",
                overlap > 0.0,
                serde_json::json!(overlap),
                format!("π_Rᵀ π_C = {overlap:.6e}"),
            );
        }
        _ => {
            for (name, res) in [("pi_r_fixed_point", &pi_r), ("pi_c_fixed_point", &pi_c)] {
                if let Err(e) = res {
                    push(name, false, serde_json::Value::Null, e.to_string());
                }
            }
        }
    }

    if let Ok(pr) = &pi_r {
        match certify_decay(&pair.r, pr, t_check) {
            Ok(cert) => push(
                "decay_pull",
                true,
                serde_json::json!({"m": cert.m, "alpha": cert.alpha}),
                format!("m = {}, alpha = {:.6}", cert.m, cert.alpha),
            ),
            Err(e) => push("decay_pull", false, serde_json::Value::Null, e.to_string()),
        }
    }
    if let Ok(pc) = &pi_c {
        match certify_decay(&ct, pc, t_check) {
            Ok(cert) => push(
                "decay_push",
                true,
                serde_json::json!({"m": cert.m, "alpha": cert.alpha}),
                format!("m = {}, alpha = {:.6}", cert.m, cert.alpha),
            ),
            Err(e) => push("decay_push", false, serde_json::Value::Null, e.to_string()),
        }
    }

    ValidationReport { checks }
}
