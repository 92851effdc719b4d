//! Experiment configuration: a single TOML file determines every output.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::digraph::{
    gen_erdos_renyi, gen_multi_subring, gen_ring, gen_spanning_tree_pair, DirectedGraph,
};
use crate::engine::StepsizeSchedule;
use crate::error::{Error, Result};
use crate::mixing::{doubly_stochastic, pull_matrix, push_matrix, tree_01_matrices, MixingPair};
use crate::problems::{gen_logistic, gen_quadratic_with_spectrum, Problem};
use crate::rng::{graph_stream, problem_stream};

/// Environment variable naming the root directory for run outputs.
pub const OUT_ROOT_ENV: &str = "PUSHPULL_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologyConfig,
    pub mixing: MixingConfig,
    pub problem: ProblemConfig,
    pub schedule: ScheduleConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    /// ring | er | msr | tree | file
    pub kind: String,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub bidirectional: bool,
    /// Edge probability for `er`.
    #[serde(default = "default_edge_prob")]
    pub p: f64,
    /// Sub-ring count for `msr`.
    #[serde(default = "default_subrings")]
    pub k: usize,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    /// Edge-list file for `file` topologies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Separate push-graph edge list; defaults to the `push_graph` transform
    /// of the pull graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub push_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    /// degree | metropolis | tree01
    pub scheme: String,
    /// reversed | same — how the push graph relates to the generated graph
    /// (`reversed` makes the reversed push graph coincide with the pull
    /// graph). Ignored for `tree` topologies, which carry their own pair.
    #[serde(default = "default_push_graph")]
    pub push_graph: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// quadratic | logistic
    pub kind: String,
    /// Decision-variable dimension.
    pub dim: usize,
    pub seed: u64,
    /// Samples per node (logistic).
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_reg")]
    pub reg: f64,
    #[serde(default = "default_sigma_h")]
    pub sigma_h: f64,
    /// Local-minimizer spread (quadratic).
    #[serde(default)]
    pub heterogeneity: f64,
    /// Gradient-noise level (quadratic).
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_l_max")]
    pub l_max: f64,
    /// Full-gradient descent iterations for the logistic reference minimum.
    #[serde(default = "default_fstar_iters")]
    pub f_star_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub gamma0: f64,
    #[serde(default = "default_decay_factor")]
    pub decay_factor: f64,
    #[serde(default)]
    pub decay_every: usize,
    #[serde(default)]
    pub rescale_by_npi: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_metrics_every")]
    pub metrics_every: usize,
    #[serde(default)]
    pub record_f: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_t_check")]
    pub t_check: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; relative paths resolve under `$PUSHPULL_OUT`.
    #[serde(default)]
    pub dir: Option<String>,
}

fn default_edge_prob() -> f64 {
    0.3
}
fn default_subrings() -> usize {
    2
}
fn default_max_attempts() -> usize {
    crate::digraph::DEFAULT_MAX_ATTEMPTS
}
fn default_push_graph() -> String {
    "reversed".into()
}
fn default_samples() -> usize {
    400
}
fn default_reg() -> f64 {
    0.01
}
fn default_sigma_h() -> f64 {
    0.2
}
fn default_mu() -> f64 {
    0.1
}
fn default_l_max() -> f64 {
    1.0
}
fn default_fstar_iters() -> usize {
    1000
}
fn default_decay_factor() -> f64 {
    1.0
}
fn default_batch() -> usize {
    1
}
fn default_metrics_every() -> usize {
    1
}
fn default_tol() -> f64 {
    crate::series::DEFAULT_TOL
}
fn default_t_check() -> usize {
    crate::mixing::DEFAULT_T_CHECK
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical serialization: defaults filled in, fields in declaration
    /// order, so `serialize(parse(file))` is a fixed point.
    pub fn to_canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Build the pull/push graph pair described by the topology section.
    pub fn build_graphs(&self) -> Result<(DirectedGraph, DirectedGraph)> {
        let t = &self.topology;
        let mut rng = graph_stream(t.seed);
        let single = match t.kind.as_str() {
            "ring" => gen_ring(t.n, t.bidirectional)?,
            "er" => gen_erdos_renyi(t.n, t.p, &mut rng, t.max_attempts)?,
            "msr" => gen_multi_subring(t.n, t.k)?,
            "tree" => {
                let (pull, push) = gen_spanning_tree_pair(t.n, &mut rng)?;
                return Ok((pull, push));
            }
            "file" => {
                let path = t.path.as_ref().ok_or_else(|| {
                    Error::Config("file topology needs topology.path".into())
                })?;
                let pull =
                    DirectedGraph::from_edge_list_str(&std::fs::read_to_string(path)?)?;
                if pull.node_count() != t.n {
                    return Err(Error::Config(format!(
                        "edge list has {} nodes, config says {}",
                        pull.node_count(),
                        t.n
                    )));
                }
                if let Some(pp) = &t.push_path {
                    let push =
                        DirectedGraph::from_edge_list_str(&std::fs::read_to_string(pp)?)?;
                    return Ok((pull, push));
                }
                pull
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown topology kind {other:?} (expected ring|er|msr|tree|file)"
                )))
            }
        };
        let push = match self.mixing.push_graph.as_str() {
            "reversed" => single.reverse(),
            "same" => single.clone(),
            other => {
                return Err(Error::Config(format!(
                    "unknown push_graph {other:?} (expected reversed|same)"
                )))
            }
        };
        Ok((single, push))
    }

    pub fn build_pair(&self) -> Result<MixingPair> {
        let (pull, push) = self.build_graphs()?;
        match self.mixing.scheme.as_str() {
            "degree" => MixingPair::new(pull_matrix(&pull), push_matrix(&push)),
            "metropolis" => {
                let w = doubly_stochastic(&pull)?;
                MixingPair::new(w.clone(), w)
            }
            "tree01" => {
                if self.topology.kind != "tree" {
                    return Err(Error::Config(
                        "tree01 weights need the tree topology".into(),
                    ));
                }
                tree_01_matrices(&pull, &push)
            }
            other => Err(Error::Config(format!(
                "unknown mixing scheme {other:?} (expected degree|metropolis|tree01)"
            ))),
        }
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let p = &self.problem;
        let n = self.topology.n;
        let mut rng = problem_stream(p.seed);
        match p.kind.as_str() {
            "quadratic" => gen_quadratic_with_spectrum(
                n,
                p.dim,
                p.heterogeneity,
                p.sigma,
                p.mu,
                p.l_max,
                &mut rng,
            ),
            "logistic" => gen_logistic(n, p.samples, p.dim, p.reg, p.sigma_h, &mut rng),
            other => Err(Error::Config(format!(
                "unknown problem kind {other:?} (expected quadratic|logistic)"
            ))),
        }
    }

    pub fn schedule(&self) -> StepsizeSchedule {
        StepsizeSchedule {
            gamma0: self.schedule.gamma0,
            decay_factor: self.schedule.decay_factor,
            decay_every: self.schedule.decay_every,
            rescale_by_npi: self.schedule.rescale_by_npi,
        }
    }

    /// Common start point: the origin.
    pub fn start_point(&self) -> Array1<f64> {
        Array1::zeros(self.problem.dim)
    }

    /// Resolve the output directory against `$PUSHPULL_OUT`.
    pub fn output_dir(&self, fallback_name: &str) -> std::path::PathBuf {
        let root = std::env::var(OUT_ROOT_ENV).unwrap_or_else(|_| "out".into());
        let root = std::path::PathBuf::from(root);
        match &self.output.dir {
            Some(d) => {
                let p = std::path::PathBuf::from(d);
                if p.is_absolute() {
                    p
                } else {
                    root.join(p)
                }
            }
            None => root.join(fallback_name),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[topology]
kind = "er"
n = 8
seed = 11
p = 0.4

[mixing]
scheme = "degree"

[problem]
kind = "quadratic"
dim = 4
seed = 3
sigma = 1.0

[schedule]
gamma0 = 0.02

[run]
t = 100
seeds = [1, 2, 3]
"#;

    #[test]
    fn parse_and_canonicalize_fixed_point() {
        let cfg = ExperimentConfig::from_toml_str(EXAMPLE).unwrap();
        let canonical = cfg.to_canonical_toml().unwrap();
        let cfg2 = ExperimentConfig::from_toml_str(&canonical).unwrap();
        assert_eq!(cfg, cfg2);
        let canonical2 = cfg2.to_canonical_toml().unwrap();
        assert_eq!(canonical, canonical2, "canonical form must be a fixed point");
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = EXAMPLE.replace("[run]", "[run]\nbogus_field = 1\n");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn builds_pipeline_pieces() {
        let cfg = ExperimentConfig::from_toml_str(EXAMPLE).unwrap();
        let (pull, push) = cfg.build_graphs().unwrap();
        assert_eq!(pull.node_count(), 8);
        assert_eq!(pull.reverse(), push);
        let pair = cfg.build_pair().unwrap();
        assert_eq!(pair.n(), 8);
        let problem = cfg.build_problem().unwrap();
        assert_eq!(problem.n, 8);
        assert_eq!(problem.p, 4);
    }

    #[test]
    fn tree_topology_builds_tree01() {
        let text = EXAMPLE
            .replace("kind = \"er\"", "kind = \"tree\"")
            .replace("scheme = \"degree\"", "scheme = \"tree01\"");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let pair = cfg.build_pair().unwrap();
        assert!(pair.spanning_tree_mode);
    }

    #[test]
    fn bad_scheme_reports_config_error() {
        let text = EXAMPLE.replace("scheme = \"degree\"", "scheme = \"nonsense\"");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(matches!(cfg.build_pair(), Err(Error::Config(_))));
    }
}
