//! Simulation engine: the push-pull recursion, its gradient-tracking
//! special case, and a matched centralized baseline.
//!
//! The engine applies the compact matrix recursion
//!
//! ```text
//! X⁺ = R(X − γY)        Y⁺ = C(Y − G + G⁺)
//! ```
//!
//! directly; the per-node message-passing loop is an equivalent view. Two
//! runtime identities are tracked every iteration: tracker conservation
//! `1ᵀY = 1ᵀG` and the output recursion `x̂⁺ − x̂ = −γ·π_RᵀY`.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{fro_norm, linf};
use crate::mixing::{certify_pair, Certified, MixingPair, DEFAULT_T_CHECK};
use crate::problems::Problem;
use crate::rng::draw_stream;

/// Stepsize schedule `γ(t) = γ₀ · decay^⌊t/every⌋`, optionally rescaled by
/// `1/(n·π)` to offset the tracker's mass accumulation.
#[derive(Debug, Clone, Serialize)]
pub struct StepsizeSchedule {
    pub gamma0: f64,
    pub decay_factor: f64,
    /// Iterations between decays; 0 means constant.
    pub decay_every: usize,
    pub rescale_by_npi: bool,
}

impl StepsizeSchedule {
    pub fn constant(gamma0: f64) -> Self {
        Self {
            gamma0,
            decay_factor: 1.0,
            decay_every: 0,
            rescale_by_npi: false,
        }
    }

    pub fn gamma_at(&self, t: usize, n_pi: f64) -> f64 {
        let base = if self.rescale_by_npi {
            self.gamma0 / n_pi
        } else {
            self.gamma0
        };
        match self.decay_every {
            0 => base,
            every => base * self.decay_factor.powi((t / every) as i32),
        }
    }
}

/// Per-iteration metrics. `f_hat` is NaN when objective recording is off.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    pub gamma: f64,
    pub grad_norm_sq: f64,
    pub consensus: f64,
    pub tracking: f64,
    pub invariant_residual: f64,
    pub f_hat: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub seed: u64,
    pub t_max: usize,
    pub batch: usize,
    pub n: usize,
    pub p: usize,
    pub algorithm: String,
    /// Largest relative tracker-conservation residual seen.
    pub max_invariant_rel: f64,
    /// Largest relative output-recursion residual seen.
    pub max_recursion_rel: f64,
}

/// Full record of one simulation run.
#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Relative output-recursion residual per executed step.
    pub recursion_residuals: Vec<f64>,
    /// `‖x̂ − x_ref‖²` per recorded iteration when a reference point is set.
    pub dist_to_reference: Option<Vec<f64>>,
    pub hat_x_final: Array1<f64>,
    pub meta: RunMeta,
}

/// Knobs that do not affect the trajectory, only what gets recorded.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Record metrics every k-th iteration (the final state is always
    /// recorded). 1 records everything.
    pub metrics_every: usize,
    /// Evaluate `f(x̂)` per record (costs one global objective evaluation).
    pub record_f: bool,
    /// Optional reference point for distance tracking.
    pub reference: Option<Array1<f64>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            metrics_every: 1,
            record_f: false,
            reference: None,
        }
    }
}

/// `x̂ = π_Rᵀ X`, the algorithm's designated output point.
pub fn hat_x(x: &Array2<f64>, pi_r: &Array1<f64>) -> Array1<f64> {
    x.t().dot(pi_r)
}

/// Run the push-pull recursion for `t_max` steps from the common start
/// `x0`, recording metrics at every state `0..=t_max`.
#[allow(clippy::too_many_arguments)]
pub fn run_spp(
    problem: &Problem,
    cert: &Certified,
    schedule: &StepsizeSchedule,
    x0: &Array1<f64>,
    t_max: usize,
    batch: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trace> {
    let n = cert.n();
    let p = problem.p;
    if problem.n != n {
        return Err(Error::DimensionMismatch(format!(
            "problem has {} agents, mixing pair has {n}",
            problem.n
        )));
    }
    if x0.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "start point dimension {} vs problem dimension {p}",
            x0.len()
        )));
    }
    let r = &cert.pair.r;
    let c = &cert.pair.c;
    let pi_r = &cert.pi_r.pi;
    let pi_c = &cert.pi_c.pi;
    let n_pi = n as f64 * cert.pi();

    let mut x = Array2::<f64>::zeros((n, p));
    for mut row in x.rows_mut() {
        row.assign(x0);
    }
    let mut g = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let gi = problem.stoch_grad(i, x0, batch, &mut draw_stream(seed, i, 0))?;
        g.row_mut(i).assign(&gi);
    }
    let mut y = g.clone();

    let mut records = Vec::with_capacity(t_max + 1);
    let mut recursion_residuals = Vec::with_capacity(t_max);
    let mut dist = opts.reference.as_ref().map(|_| Vec::new());
    let mut max_invariant_rel = 0.0f64;
    let mut max_recursion_rel = 0.0f64;

    let mut hat = hat_x(&x, pi_r);
    for t in 0..=t_max {
        let record_this = t % opts.metrics_every.max(1) == 0 || t == t_max;
        let gamma = schedule.gamma_at(t, n_pi);
        let inv_residual = {
            let column_sums = &y.t().dot(&Array1::from_elem(n, 1.0))
                - &g.t().dot(&Array1::from_elem(n, 1.0));
            linf(&column_sums)
        };
        let inv_rel = inv_residual / fro_norm(&g).max(1.0);
        max_invariant_rel = max_invariant_rel.max(inv_rel);
        if record_this {
            let grad = problem.grad_global(&hat)?;
            let consensus = {
                let dev = &x - &outer_rows(&hat, n);
                // ‖Π_R X‖_F² with Π_R X = X − 1x̂ᵀ.
                fro_norm(&dev).powi(2)
            };
            let tracking = {
                let col = y.t().dot(&Array1::from_elem(n, 1.0));
                let dev = &y - &column_outer(pi_c, &col);
                fro_norm(&dev).powi(2)
            };
            let f_hat = if opts.record_f {
                problem.f_global(&hat)?
            } else {
                f64::NAN
            };
            records.push(TraceRecord {
                t,
                gamma,
                grad_norm_sq: grad.dot(&grad),
                consensus,
                tracking,
                invariant_residual: inv_residual,
                f_hat,
            });
            if let (Some(d), Some(reference)) = (dist.as_mut(), opts.reference.as_ref()) {
                let dv = &hat - reference;
                d.push(dv.dot(&dv));
            }
        }
        if t == t_max {
            break;
        }

        // X⁺ = R(X − γY); Y⁺ = C((Y − G) + G⁺). The Y-update order keeps
        // Y = G exact at n = 1.
        let pi_y = y.t().dot(pi_r);
        let x_next = r.dot(&(&x - &(gamma * &y)));
        let mut g_next = Array2::<f64>::zeros((n, p));
        for i in 0..n {
            let xi = x_next.row(i).to_owned();
            let gi = problem.stoch_grad(i, &xi, batch, &mut draw_stream(seed, i, t + 1))?;
            g_next.row_mut(i).assign(&gi);
        }
        let y_next = c.dot(&(&(&y - &g) + &g_next));

        for (name, m) in [("iterates", &x_next), ("trackers", &y_next)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    iteration: t + 1,
                    which: name.to_string(),
                });
            }
        }

        let hat_next = hat_x(&x_next, pi_r);
        let step = &hat_next - &hat;
        let predicted = -gamma * &pi_y;
        let resid = {
            let d = &step - &predicted;
            d.dot(&d).sqrt()
        };
        let scale = hat.dot(&hat).sqrt().max(hat_next.dot(&hat_next).sqrt()).max(1.0);
        let rec_rel = resid / scale;
        recursion_residuals.push(rec_rel);
        max_recursion_rel = max_recursion_rel.max(rec_rel);

        x = x_next;
        g = g_next;
        y = y_next;
        hat = hat_next;
    }

    Ok(Trace {
        records,
        recursion_residuals,
        dist_to_reference: dist,
        hat_x_final: hat,
        meta: RunMeta {
            seed,
            t_max,
            batch,
            n,
            p,
            algorithm: "push-pull".into(),
            max_invariant_rel,
            max_recursion_rel,
        },
    })
}

/// Gradient tracking with a doubly stochastic matrix: `R = C = W`.
#[allow(clippy::too_many_arguments)]
pub fn run_dsgt(
    problem: &Problem,
    w: &Array2<f64>,
    schedule: &StepsizeSchedule,
    x0: &Array1<f64>,
    t_max: usize,
    batch: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trace> {
    let row = crate::mixing::row_stochastic_residual(w);
    let col = crate::mixing::column_stochastic_residual(w);
    if row > crate::mixing::STOCHASTIC_TOL || col > crate::mixing::STOCHASTIC_TOL {
        return Err(Error::AssumptionViolated(format!(
            "matrix is not doubly stochastic (row residual {row:e}, column residual {col:e})"
        )));
    }
    let pair = MixingPair::new(w.clone(), w.clone())?;
    let cert = certify_pair(&pair, DEFAULT_T_CHECK)?;
    let mut trace = run_spp(problem, &cert, schedule, x0, t_max, batch, seed, opts)?;
    trace.meta.algorithm = "dsgt".into();
    Ok(trace)
}

/// Centralized SGD averaging the same per-(node, iteration) gradient draws
/// as the distributed runs, for paired comparisons.
#[allow(clippy::too_many_arguments)]
pub fn run_centralized_sgd(
    problem: &Problem,
    schedule: &StepsizeSchedule,
    x0: &Array1<f64>,
    t_max: usize,
    batch: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trace> {
    let n = problem.n;
    let p = problem.p;
    if x0.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "start point dimension {} vs problem dimension {p}",
            x0.len()
        )));
    }
    let mut x = x0.clone();
    let mut records = Vec::with_capacity(t_max + 1);
    let mut dist = opts.reference.as_ref().map(|_| Vec::new());
    for t in 0..=t_max {
        let record_this = t % opts.metrics_every.max(1) == 0 || t == t_max;
        let gamma = schedule.gamma_at(t, 1.0);
        if record_this {
            let grad = problem.grad_global(&x)?;
            let f_hat = if opts.record_f {
                problem.f_global(&x)?
            } else {
                f64::NAN
            };
            records.push(TraceRecord {
                t,
                gamma,
                grad_norm_sq: grad.dot(&grad),
                consensus: 0.0,
                tracking: 0.0,
                invariant_residual: 0.0,
                f_hat,
            });
            if let (Some(d), Some(reference)) = (dist.as_mut(), opts.reference.as_ref()) {
                let dv = &x - reference;
                d.push(dv.dot(&dv));
            }
        }
        if t == t_max {
            break;
        }
        // The iteration-t draw: the same stream a distributed run consumes
        // for its iteration-t gradients.
        let mut mean = Array1::<f64>::zeros(p);
        for i in 0..n {
            let gi = problem.stoch_grad(i, &x, batch, &mut draw_stream(seed, i, t))?;
            mean += &gi;
        }
        mean /= n as f64;
        x = &x - &(gamma * &mean);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration: t + 1,
                which: "iterates".into(),
            });
        }
    }
    Ok(Trace {
        records,
        recursion_residuals: Vec::new(),
        dist_to_reference: dist,
        hat_x_final: x,
        meta: RunMeta {
            seed,
            t_max,
            batch,
            n,
            p,
            algorithm: "centralized-sgd".into(),
            max_invariant_rel: 0.0,
            max_recursion_rel: 0.0,
        },
    })
}

fn outer_rows(row: &Array1<f64>, n: usize) -> Array2<f64> {
    let mut m = Array2::zeros((n, row.len()));
    for mut r in m.rows_mut() {
        r.assign(row);
    }
    m
}

fn column_outer(col: &Array1<f64>, row: &Array1<f64>) -> Array2<f64> {
    crate::linalg::outer(col, row)
}
