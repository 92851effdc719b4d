//! Subcommand implementations behind the `pushpull` binary.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::digraph::{
    gen_erdos_renyi, gen_multi_subring, gen_ring, gen_spanning_tree_pair, DirectedGraph,
};
use crate::engine::{run_spp, RunOptions, Trace};
use crate::error::{Error, Result};
use crate::io::{aggregate_to_csv, fmt_g17, matrix_to_csv, trace_to_csv, write_atomic};
use crate::mixing::{
    certify_pair, validate_pair_with, Certified, MixingPair, ValidationReport,
};
use crate::problems::{FStarKind, Problem};
use crate::rng::graph_stream;
use crate::series::{compute_constants, speedup_ratio, theory_bundle, SpectralReport, TheoryBundle};

/// Overrides from command-line flags that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub metrics_every: Option<usize>,
    pub t: Option<usize>,
    pub t_check: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.run.seeds = vec![s];
        }
        if let Some(t) = self.tol {
            cfg.run.tol = t;
        }
        if let Some(m) = self.metrics_every {
            cfg.run.metrics_every = m;
        }
        if let Some(t) = self.t {
            cfg.run.t = t;
        }
        if let Some(tc) = self.t_check {
            cfg.run.t_check = tc;
        }
    }
}

/// `graph gen`: write the generated topology as an edge list. For `tree`
/// the pair goes to `<out>.pull` and `<out>.push`.
#[allow(clippy::too_many_arguments)]
pub fn cmd_graph_gen(
    topology: &str,
    n: usize,
    seed: u64,
    p: f64,
    k: usize,
    bidirectional: bool,
    max_attempts: usize,
    out: Option<&Path>,
) -> Result<String> {
    let mut rng = graph_stream(seed);
    let single: Option<DirectedGraph> = match topology {
        "ring" => Some(gen_ring(n, bidirectional)?),
        "er" => Some(gen_erdos_renyi(n, p, &mut rng, max_attempts)?),
        "msr" => Some(gen_multi_subring(n, k)?),
        "tree" => None,
        other => {
            return Err(Error::Config(format!(
                "unknown topology {other:?} (expected ring|er|msr|tree)"
            )))
        }
    };
    match single {
        Some(g) => {
            let text = g.to_edge_list_string();
            if let Some(path) = out {
                write_atomic(path, &text)?;
                Ok(format!("wrote {}", path.display()))
            } else {
                Ok(text)
            }
        }
        None => {
            let (pull, push) = gen_spanning_tree_pair(n, &mut rng)?;
            let path = out.ok_or_else(|| {
                Error::Config("tree generation writes two files; pass --out PREFIX".into())
            })?;
            let pull_path = path.with_extension("pull");
            let push_path = path.with_extension("push");
            write_atomic(&pull_path, &pull.to_edge_list_string())?;
            write_atomic(&push_path, &push.to_edge_list_string())?;
            Ok(format!(
                "wrote {} and {}",
                pull_path.display(),
                push_path.display()
            ))
        }
    }
}

/// `mixing`: build the weight matrices for a config and write them as CSV.
pub fn cmd_mixing(cfg: &ExperimentConfig, out_r: &Path, out_c: &Path) -> Result<String> {
    let pair = cfg.build_pair()?;
    write_atomic(out_r, &matrix_to_csv(&pair.r))?;
    write_atomic(out_c, &matrix_to_csv(&pair.c))?;
    Ok(format!(
        "wrote {} and {}",
        out_r.display(),
        out_c.display()
    ))
}

/// Table printed by `constants`.
#[derive(Debug, Serialize)]
pub struct ConstantsOutput {
    pub report: SpectralReport,
    pub speedup_ratio: f64,
}

/// `constants`: certify a pair from explicit matrices and print every
/// series constant plus the speedup ratio.
pub fn cmd_constants(
    r: Array2<f64>,
    c: Array2<f64>,
    spanning_tree: bool,
    tol: f64,
    t_check: usize,
) -> Result<ConstantsOutput> {
    let mut pair = MixingPair::new(r, c)?;
    pair.spanning_tree_mode = spanning_tree;
    let cert = certify_pair(&pair, t_check)?;
    let report = compute_constants(&cert, tol)?;
    let ratio = speedup_ratio(&report, pair.n())?;
    Ok(ConstantsOutput {
        report,
        speedup_ratio: ratio,
    })
}

pub fn render_constants_table(out: &ConstantsOutput) -> String {
    let r = &out.report;
    let mut s = String::new();
    let mut row = |name: &str, v: f64| s.push_str(&format!("{name},{}\n", fmt_g17(v)));
    row("pi", r.pi);
    if let Some(l) = r.lambda {
        row("lambda", l);
    }
    if let Some(l) = r.lambda_min {
        row("lambda_min", l);
    }
    row("m1", r.m1);
    row("m2", r.m2);
    row("m2_tilde", r.m2_tilde);
    row("n1", r.n1);
    row("n2", r.n2);
    row("n3", r.n3);
    row("n4", r.n4);
    row("n5", r.n5);
    row("n6", r.n6);
    row("n7", r.n7);
    row("n8", r.n8);
    row("tail_bound", r.tail_bound);
    s.push_str(&format!("truncation_t,{}\n", r.truncation_t));
    s.push_str(&format!("speedup_ratio,{}\n", fmt_g17(out.speedup_ratio)));
    s
}

/// `validate`: run the full check list; the exit code reflects the verdict.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<(ValidationReport, bool)> {
    let pair = cfg.build_pair()?;
    let report = validate_pair_with(&pair, cfg.run.t_check);
    let ok = report.passed();
    Ok((report, ok))
}

/// Sidecar metadata bundled with every run.
#[derive(Debug, Serialize)]
pub struct RunSidecar {
    pub version: String,
    pub config: ExperimentConfig,
    pub spectral: SpectralReport,
    pub theory: TheoryBundle,
    pub f_star: f64,
    pub f_star_kind: FStarKind,
    pub seeds: Vec<u64>,
    pub final_grad_norm_sq: Vec<f64>,
}

/// Everything `run` computes, kept in memory for tests and sweeps.
pub struct RunOutcome {
    pub cert: Certified,
    pub problem: Problem,
    pub traces: Vec<Trace>,
    pub sidecar: RunSidecar,
}

fn measured_sigma2(cfg: &ExperimentConfig, problem: &Problem) -> f64 {
    if problem.is_quadratic() {
        cfg.problem.sigma * cfg.problem.sigma
    } else {
        // Minibatch mean of `batch` per-sample gradients.
        problem.sigma2_hint / cfg.run.batch.max(1) as f64
    }
}

/// Execute a config in memory: certify, compute constants, run every seed.
pub fn execute_run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let pair = cfg.build_pair()?;
    let cert = certify_pair(&pair, cfg.run.t_check)?;
    let report = compute_constants(&cert, cfg.run.tol)?;
    let problem = cfg.build_problem()?;
    let x0 = cfg.start_point();

    let (f_star, f_star_kind) = problem.reference_minimum(cfg.problem.f_star_iters)?;
    let f0_point = problem.f_global(&x0)?;
    let delta_f = (f0_point - f_star).max(0.0);
    let f0 = {
        let mut acc = 0.0;
        for i in 0..problem.n {
            let g = problem.grad(i, &x0)?;
            acc += g.dot(&g);
        }
        acc / problem.n as f64
    };
    let theory = theory_bundle(
        &report,
        problem.l_smooth,
        measured_sigma2(cfg, &problem),
        delta_f,
        f0,
        cfg.run.t.max(1),
    )?;

    let reference = if problem.is_quadratic() {
        Some(problem.minimizer()?)
    } else {
        None
    };
    let opts = RunOptions {
        metrics_every: cfg.run.metrics_every,
        record_f: cfg.run.record_f,
        reference,
    };
    let schedule = cfg.schedule();
    let mut traces = Vec::new();
    for &seed in &cfg.run.seeds {
        let trace = run_spp(
            &problem,
            &cert,
            &schedule,
            &x0,
            cfg.run.t,
            cfg.run.batch,
            seed,
            &opts,
        )
        .map_err(|e| match e {
            Error::Divergence { iteration, which } => Error::Divergence {
                iteration,
                which: format!("{which} (seed {seed})"),
            },
            other => other,
        })?;
        traces.push(trace);
    }
    let final_grad: Vec<f64> = traces
        .iter()
        .map(|t| t.records.last().map(|r| r.grad_norm_sq).unwrap_or(f64::NAN))
        .collect();
    Ok(RunOutcome {
        cert,
        problem,
        traces,
        sidecar: RunSidecar {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            spectral: report,
            theory,
            f_star,
            f_star_kind,
            seeds: cfg.run.seeds.clone(),
            final_grad_norm_sq: final_grad,
        },
    })
}

/// `run`: execute and persist one CSV per seed, the aggregate CSV, the
/// canonical config copy, and the JSON sidecar.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let outcome = execute_run(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    write_atomic(
        &out_dir.join("config.toml"),
        &cfg.to_canonical_toml()?,
    )?;
    for trace in &outcome.traces {
        let name = format!("trace_seed{}.csv", trace.meta.seed);
        write_atomic(&out_dir.join(name), &trace_to_csv(trace))?;
    }
    write_atomic(
        &out_dir.join("aggregate.csv"),
        &aggregate_to_csv(&outcome.traces)?,
    )?;
    let sidecar = serde_json::to_string_pretty(&outcome.sidecar)
        .map_err(|e| Error::Config(format!("sidecar serialization: {e}")))?;
    write_atomic(&out_dir.join("run.json"), &sidecar)?;
    Ok(outcome)
}

/// One row of a sweep summary.
#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub status: String,
    pub time_avg_grad_norm_sq: f64,
    pub steady_state_mse: f64,
    pub final_grad_norm_sq: f64,
}

/// Patch one axis of a config.
pub fn apply_axis(cfg: &ExperimentConfig, axis: &str, value: &str) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match axis {
        "n" => {
            c.topology.n = value
                .parse()
                .map_err(|_| Error::Config(format!("bad n value {value:?}")))?;
        }
        "gamma" => {
            c.schedule.gamma0 = value
                .parse()
                .map_err(|_| Error::Config(format!("bad gamma value {value:?}")))?;
        }
        "topology" => {
            c.topology.kind = value.to_string();
        }
        other => {
            return Err(Error::Config(format!(
                "unknown sweep axis {other:?} (expected n|topology|gamma)"
            )))
        }
    }
    Ok(c)
}

/// Mean `‖x̂ − x*‖²` over the tail window of every seed, NaN when no
/// analytic minimizer exists.
pub fn steady_state_mse(outcome: &RunOutcome, window: usize) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for trace in &outcome.traces {
        if let Some(dist) = &trace.dist_to_reference {
            for &v in dist.iter().rev().take(window) {
                acc += v;
                count += 1;
            }
        }
    }
    if count == 0 {
        f64::NAN
    } else {
        acc / count as f64
    }
}

/// `sweep`: run the config once per axis value; failures become rows, not
/// aborts.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    axis: &str,
    values: &[String],
    out_dir: &Path,
) -> Result<Vec<SweepRow>> {
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    for value in values {
        let row = match apply_axis(cfg, axis, value) {
            Ok(cell_cfg) => {
                let cell_dir = out_dir.join(format!("{axis}_{value}"));
                match cmd_run(&cell_cfg, &cell_dir) {
                    Ok(outcome) => {
                        let time_avg = {
                            let mut acc = 0.0;
                            let mut count = 0usize;
                            for t in &outcome.traces {
                                for r in &t.records {
                                    acc += r.grad_norm_sq;
                                    count += 1;
                                }
                            }
                            acc / count.max(1) as f64
                        };
                        let window = (cell_cfg.run.t / 5).clamp(1, 2000);
                        let final_mean = outcome
                            .sidecar
                            .final_grad_norm_sq
                            .iter()
                            .sum::<f64>()
                            / outcome.sidecar.final_grad_norm_sq.len().max(1) as f64;
                        SweepRow {
                            axis: axis.to_string(),
                            value: value.clone(),
                            status: "ok".into(),
                            time_avg_grad_norm_sq: time_avg,
                            steady_state_mse: steady_state_mse(&outcome, window),
                            final_grad_norm_sq: final_mean,
                        }
                    }
                    Err(e) => SweepRow {
                        axis: axis.to_string(),
                        value: value.clone(),
                        status: format!("error: {e}"),
                        time_avg_grad_norm_sq: f64::NAN,
                        steady_state_mse: f64::NAN,
                        final_grad_norm_sq: f64::NAN,
                    },
                }
            }
            Err(e) => SweepRow {
                axis: axis.to_string(),
                value: value.clone(),
                status: format!("error: {e}"),
                time_avg_grad_norm_sq: f64::NAN,
                steady_state_mse: f64::NAN,
                final_grad_norm_sq: f64::NAN,
            },
        };
        rows.push(row);
    }
    let mut csv =
        String::from("axis,value,status,time_avg_grad_norm_sq,steady_state_mse,final_grad_norm_sq\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.axis,
            r.value,
            r.status.replace(',', ";"),
            fmt_g17(r.time_avg_grad_norm_sq),
            fmt_g17(r.steady_state_mse),
            fmt_g17(r.final_grad_norm_sq),
        ));
    }
    write_atomic(&out_dir.join("summary.csv"), &csv)?;
    Ok(rows)
}

/// Default output directory name for a config file path.
pub fn run_name(config_path: &Path) -> String {
    config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run")
        .to_string()
}

pub fn resolve_out_dir(cfg: &ExperimentConfig, config_path: &Path, explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => cfg.output_dir(&run_name(config_path)),
    }
}
