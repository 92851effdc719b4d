//! Directed graphs, topology generators, and reachability.
//!
//! An edge `(j, i)` means node `j` can send information to node `i`. Graphs
//! never store self-loops; self-influence belongs to the weight matrices.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};

/// Default retry cap for regenerating random graphs.
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

/// A directed graph on nodes `0..n` with edge `(j, i)` meaning `j → i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    /// Build a graph, rejecting out-of-range indices and self-loops.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidSize("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (j, i) in edges {
            if j >= n || i >= n {
                return Err(Error::InvalidSize(format!(
                    "edge ({j}, {i}) out of range for n = {n}"
                )));
            }
            if j == i {
                return Err(Error::Structure(format!("self-loop at node {j}")));
            }
            set.insert((j, i));
        }
        Ok(Self { n, edges: set })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains_edge(&self, j: usize, i: usize) -> bool {
        self.edges.contains(&(j, i))
    }

    /// Nodes `j` with an edge `j → i`.
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, to)| to == i)
            .map(|&(from, _)| from)
            .collect()
    }

    /// Nodes `i` with an edge `j → i`.
    pub fn out_neighbors(&self, j: usize) -> Vec<usize> {
        self.edges
            .range((j, 0)..(j + 1, 0))
            .map(|&(_, to)| to)
            .collect()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(_, to)| to == i).count()
    }

    pub fn out_degree(&self, j: usize) -> usize {
        self.out_neighbors(j).len()
    }

    /// Graph with every edge direction flipped.
    pub fn reverse(&self) -> Self {
        Self {
            n: self.n,
            edges: self.edges.iter().map(|&(j, i)| (i, j)).collect(),
        }
    }

    /// Whether the edge set is symmetric (an undirected graph).
    pub fn is_undirected(&self) -> bool {
        self.edges.iter().all(|&(j, i)| self.edges.contains(&(i, j)))
    }

    /// Nodes reachable from `start` along directed edges (including `start`).
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let adjacency = self.adjacency();
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(j, i) in &self.edges {
            adj[j].push(i);
        }
        adj
    }

    pub fn is_strongly_connected(&self) -> bool {
        root_set(self).len() == self.n
    }

    /// Edge-list text format: first line `n`, then one `j i` pair per line.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for &(j, i) in &self.edges {
            out.push_str(&format!("{j} {i}\n"));
        }
        out
    }

    pub fn from_edge_list_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty edge list".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|_| Error::Parse {
            line: 1,
            message: format!("expected node count, got {first:?}"),
        })?;
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or(Error::Parse {
                    line: idx + 1,
                    message: "expected `j i` pair".into(),
                })?
                .parse()
                .map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("bad node index in {line:?}"),
                })
            };
            let j = parse(parts.next())?;
            let i = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("trailing tokens in {line:?}"),
                });
            }
            edges.push((j, i));
        }
        Self::new(n, edges)
    }
}

/// Set of nodes from which every node of the graph is reachable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RootSet {
    roots: BTreeSet<usize>,
}

impl RootSet {
    pub fn contains(&self, node: usize) -> bool {
        self.roots.contains(&node)
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.roots.iter().copied()
    }

    pub fn intersect(&self, other: &RootSet) -> RootSet {
        RootSet {
            roots: self.roots.intersection(&other.roots).copied().collect(),
        }
    }
}

impl FromIterator<usize> for RootSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        RootSet {
            roots: iter.into_iter().collect(),
        }
    }
}

/// All nodes from which the whole graph is reachable.
pub fn root_set(g: &DirectedGraph) -> RootSet {
    (0..g.node_count())
        .filter(|&s| g.reachable_from(s).iter().all(|&r| r))
        .collect()
}

/// Roots shared by the pull graph and the reversed push graph.
///
/// The pair of graphs supports the algorithm iff the result is nonempty.
pub fn common_roots(g_pull: &DirectedGraph, g_push: &DirectedGraph) -> Result<RootSet> {
    if g_pull.node_count() != g_push.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "pull graph has {} nodes, push graph has {}",
            g_pull.node_count(),
            g_push.node_count()
        )));
    }
    Ok(root_set(g_pull).intersect(&root_set(&g_push.reverse())))
}

/// Directed ring `i → (i+1) mod n`, optionally with both directions.
pub fn gen_ring(n: usize, bidirectional: bool) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(Error::InvalidSize("ring needs n >= 1".into()));
    }
    let mut edges = Vec::new();
    if n > 1 {
        for i in 0..n {
            let next = (i + 1) % n;
            edges.push((i, next));
            if bidirectional {
                edges.push((next, i));
            }
        }
    }
    DirectedGraph::new(n, edges)
}

/// Erdos-Renyi digraph: each ordered pair kept with probability `p`,
/// regenerated until strongly connected.
pub fn gen_erdos_renyi<R: Rng>(
    n: usize,
    p: f64,
    rng: &mut R,
    max_attempts: usize,
) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(Error::InvalidSize("graph needs n >= 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidSize(format!("probability {p} not in (0, 1]")));
    }
    for _ in 0..max_attempts {
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i != j && rng.random::<f64>() < p {
                    edges.push((j, i));
                }
            }
        }
        let g = DirectedGraph::new(n, edges)?;
        if g.is_strongly_connected() {
            return Ok(g);
        }
    }
    Err(Error::GenerationFailed {
        attempts: max_attempts,
    })
}

/// `k` directed sub-rings of near-equal size sharing hub node 0.
pub fn gen_multi_subring(n: usize, k: usize) -> Result<DirectedGraph> {
    if k == 0 {
        return Err(Error::InvalidSize("need at least one sub-ring".into()));
    }
    if n <= k {
        return Err(Error::InvalidSize(format!(
            "multi-sub-ring needs n >= k + 1 (got n = {n}, k = {k})"
        )));
    }
    let others = n - 1;
    let base = others / k;
    let extra = others % k;
    let mut edges = Vec::new();
    let mut next_node = 1;
    for ring in 0..k {
        let size = base + usize::from(ring < extra);
        let members: Vec<usize> = (next_node..next_node + size).collect();
        next_node += size;
        let mut prev = 0;
        for &m in &members {
            edges.push((prev, m));
            prev = m;
        }
        edges.push((prev, 0));
    }
    DirectedGraph::new(n, edges)
}

/// A random spanning-tree pair rooted at node 0.
///
/// The first graph points parent → child (children pull from parents). The
/// second is a tree toward the root: each non-root node has a single edge to
/// its parent, so the reversed second graph is again a spanning tree rooted
/// at 0.
pub fn gen_spanning_tree_pair<R: Rng>(
    n: usize,
    rng: &mut R,
) -> Result<(DirectedGraph, DirectedGraph)> {
    if n == 0 {
        return Err(Error::InvalidSize("tree needs n >= 1".into()));
    }
    let random_parents = |rng: &mut R| -> Vec<usize> {
        (1..n).map(|i| rng.random_range(0..i)).collect()
    };
    let pull_parents = random_parents(rng);
    let push_parents = random_parents(rng);
    let pull_edges: Vec<(usize, usize)> = pull_parents
        .iter()
        .enumerate()
        .map(|(idx, &parent)| (parent, idx + 1))
        .collect();
    let push_edges: Vec<(usize, usize)> = push_parents
        .iter()
        .enumerate()
        .map(|(idx, &parent)| (idx + 1, parent))
        .collect();
    Ok((
        DirectedGraph::new(n, pull_edges)?,
        DirectedGraph::new(n, push_edges)?,
    ))
}
