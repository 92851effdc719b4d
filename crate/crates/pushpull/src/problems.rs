//! Objective-function instances and gradient oracles.
//!
//! Two families: synthetic logistic regression with a nonconvex regularizer
//! (heterogeneity controlled by per-node parameter shifts), and quadratics
//! with analytic minimizer for quantitative speedup tests. Stochastic
//! gradients are unbiased with variance at most `σ²`.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve, spectral_norm};

/// One node's local objective.
#[derive(Debug, Clone)]
pub enum LocalObjective {
    Quadratic(QuadraticLocal),
    Logistic(LogisticLocal),
}

/// `f_i(x) = ½ xᵀA_i x − b_iᵀx` with SPD `A_i`; the stochastic oracle adds
/// isotropic Gaussian noise of total variance `σ²`.
#[derive(Debug, Clone)]
pub struct QuadraticLocal {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub noise_sigma: f64,
}

/// `f_i(x) = (1/J) Σ_j ln(1 + exp(−y_j h_jᵀx)) + reg·Σ_k x_k²/(1+x_k²)`.
#[derive(Debug, Clone)]
pub struct LogisticLocal {
    /// J×p feature matrix.
    pub features: Array2<f64>,
    /// Labels in {−1, +1}.
    pub labels: Array1<f64>,
    pub reg: f64,
}

/// A multi-agent problem instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub n: usize,
    pub p: usize,
    pub locals: Vec<LocalObjective>,
    /// Smoothness constant: analytic for quadratics, the standard
    /// `max_i ‖H_i‖₂²/(4J) + 2·reg` bound for logistic.
    pub l_smooth: f64,
    /// Nominal per-draw gradient-variance scale.
    pub sigma2_hint: f64,
}

/// Serializable description of where a problem's reference minimum comes
/// from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FStarKind {
    Analytic,
    ReferenceRun,
}

impl Problem {
    pub fn is_quadratic(&self) -> bool {
        matches!(self.locals.first(), Some(LocalObjective::Quadratic(_)))
    }

    /// Exact local gradient.
    pub fn grad(&self, i: usize, x: &Array1<f64>) -> Result<Array1<f64>> {
        self.check(i, x)?;
        Ok(match &self.locals[i] {
            LocalObjective::Quadratic(q) => q.a.dot(x) - &q.b,
            LocalObjective::Logistic(l) => l.data_grad_over(x, 0..l.features.nrows()),
        })
    }

    /// Stochastic local gradient driven by an explicit stream.
    ///
    /// Logistic: mean data gradient over `batch` indices sampled uniformly
    /// with replacement (all `J` samples enumerated once `batch ≥ J`), plus
    /// the full regularizer gradient. Quadratic: exact gradient plus
    /// `N(0, σ²/p · I)` noise; `batch` is ignored.
    pub fn stoch_grad(
        &self,
        i: usize,
        x: &Array1<f64>,
        batch: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Array1<f64>> {
        self.check(i, x)?;
        if batch == 0 {
            return Err(Error::InvalidSize("batch must be at least 1".into()));
        }
        Ok(match &self.locals[i] {
            LocalObjective::Quadratic(q) => {
                let mut g = q.a.dot(x) - &q.b;
                if q.noise_sigma > 0.0 {
                    let scale = q.noise_sigma / (self.p as f64).sqrt();
                    for v in g.iter_mut() {
                        *v += scale * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                g
            }
            LocalObjective::Logistic(l) => {
                let j_total = l.features.nrows();
                if batch >= j_total {
                    l.data_grad_over(x, 0..j_total)
                } else {
                    let picks: Vec<usize> =
                        (0..batch).map(|_| rng.random_range(0..j_total)).collect();
                    l.data_grad_over(x, picks.into_iter())
                }
            }
        })
    }

    /// Local objective value.
    pub fn f_local(&self, i: usize, x: &Array1<f64>) -> Result<f64> {
        self.check(i, x)?;
        Ok(match &self.locals[i] {
            LocalObjective::Quadratic(q) => 0.5 * x.dot(&q.a.dot(x)) - q.b.dot(x),
            LocalObjective::Logistic(l) => {
                let j = l.features.nrows() as f64;
                let mut data = 0.0;
                for (row, &y) in l.features.rows().into_iter().zip(l.labels.iter()) {
                    let margin = y * row.dot(x);
                    // ln(1 + e^{-m}) computed stably on both tails.
                    data += if margin > 0.0 {
                        (-margin).exp().ln_1p()
                    } else {
                        -margin + margin.exp().ln_1p()
                    };
                }
                let reg: f64 = x.iter().map(|&v| v * v / (1.0 + v * v)).sum();
                data / j + l.reg * reg
            }
        })
    }

    /// Global objective `f(x) = (1/n) Σ f_i(x)`.
    pub fn f_global(&self, x: &Array1<f64>) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.f_local(i, x)?;
        }
        Ok(s / self.n as f64)
    }

    /// Exact gradient of the global objective.
    pub fn grad_global(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        let mut g = Array1::zeros(self.p);
        for i in 0..self.n {
            g += &self.grad(i, x)?;
        }
        Ok(g / self.n as f64)
    }

    /// Analytic minimizer of the global quadratic objective.
    pub fn minimizer(&self) -> Result<Array1<f64>> {
        let mut a_sum = Array2::<f64>::zeros((self.p, self.p));
        let mut b_sum = Array1::<f64>::zeros(self.p);
        for local in &self.locals {
            match local {
                LocalObjective::Quadratic(q) => {
                    a_sum += &q.a;
                    b_sum += &q.b;
                }
                LocalObjective::Logistic(_) => {
                    return Err(Error::Structure(
                        "analytic minimizer exists only for quadratics".into(),
                    ))
                }
            }
        }
        solve(&a_sum, &b_sum)
    }

    /// Reference minimum and its provenance: analytic for quadratics; for
    /// logistic, the best value seen along a long full-gradient descent run.
    pub fn reference_minimum(&self, descent_iters: usize) -> Result<(f64, FStarKind)> {
        if self.is_quadratic() {
            let x = self.minimizer()?;
            return Ok((self.f_global(&x)?, FStarKind::Analytic));
        }
        let gamma = 1.0 / self.l_smooth;
        let mut x = Array1::zeros(self.p);
        let mut best = self.f_global(&x)?;
        for _ in 0..descent_iters {
            let g = self.grad_global(&x)?;
            x -= &(gamma * &g);
            best = best.min(self.f_global(&x)?);
        }
        Ok((best, FStarKind::ReferenceRun))
    }

    fn check(&self, i: usize, x: &Array1<f64>) -> Result<()> {
        if i >= self.n {
            return Err(Error::DimensionMismatch(format!(
                "node {i} out of range for n = {}",
                self.n
            )));
        }
        if x.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "point has dimension {}, problem has {}",
                x.len(),
                self.p
            )));
        }
        Ok(())
    }
}

impl LogisticLocal {
    /// Mean data gradient over the given sample indices plus the full
    /// regularizer gradient. Same accumulation order for exact and sampled
    /// paths so a full batch reproduces the exact gradient bit for bit.
    fn data_grad_over<I>(&self, x: &Array1<f64>, indices: I) -> Array1<f64>
    where
        I: Iterator<Item = usize>,
    {
        let p = x.len();
        let mut g = Array1::<f64>::zeros(p);
        let mut count = 0usize;
        for j in indices {
            let row = self.features.row(j);
            let y = self.labels[j];
            let margin = y * row.dot(x);
            // d/dx ln(1+e^{-m}) = −y·h·sigmoid(−m).
            let s = 1.0 / (1.0 + margin.exp());
            g.scaled_add(-y * s, &row);
            count += 1;
        }
        g /= count as f64;
        for k in 0..p {
            let xk = x[k];
            let d = 1.0 + xk * xk;
            g[k] += self.reg * 2.0 * xk / (d * d);
        }
        g
    }
}

/// Synthetic logistic regression with controlled heterogeneity.
///
/// A shared parameter is drawn once, each node perturbs it with
/// `N(0, σ_h² I)`, features are standard Gaussians, and labels are sampled
/// from the node's logistic model.
pub fn gen_logistic(
    n: usize,
    j_samples: usize,
    p: usize,
    reg: f64,
    sigma_h: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Problem> {
    if n == 0 || j_samples == 0 || p == 0 {
        return Err(Error::InvalidSize("logistic sizes must be ≥ 1".into()));
    }
    if sigma_h < 0.0 {
        return Err(Error::InvalidSize("σ_h must be nonnegative".into()));
    }
    let shared: Array1<f64> =
        Array1::from_shape_fn(p, |_| rng.sample::<f64, _>(StandardNormal));
    let mut locals = Vec::with_capacity(n);
    let mut l_data_max: f64 = 0.0;
    let mut hint: f64 = 0.0;
    for _ in 0..n {
        let local_param = &shared
            + &Array1::from_shape_fn(p, |_| sigma_h * rng.sample::<f64, _>(StandardNormal));
        let features =
            Array2::from_shape_fn((j_samples, p), |_| rng.sample::<f64, _>(StandardNormal));
        let mut labels = Array1::zeros(j_samples);
        for (row, label) in features.rows().into_iter().zip(labels.iter_mut()) {
            let logit = row.dot(&local_param);
            let prob_pos = 1.0 / (1.0 + (-logit).exp());
            *label = if rng.random::<f64>() < prob_pos { 1.0 } else { -1.0 };
        }
        let h_norm = spectral_norm(&features);
        l_data_max = l_data_max.max(h_norm * h_norm / (4.0 * j_samples as f64));

        let local = LogisticLocal {
            features,
            labels,
            reg,
        };
        // Per-sample gradient spread at the origin as a variance hint.
        let origin = Array1::zeros(p);
        let mean = local.data_grad_over(&origin, 0..j_samples);
        let mut var = 0.0;
        for (row, &y) in local.features.rows().into_iter().zip(local.labels.iter()) {
            let mut d = 0.0;
            for (k, &hk) in row.iter().enumerate() {
                let gk = -y * hk * 0.5;
                d += (gk - mean[k]) * (gk - mean[k]);
            }
            var += d;
        }
        hint = hint.max(var / j_samples as f64);
        locals.push(LocalObjective::Logistic(local));
    }
    Ok(Problem {
        n,
        p,
        locals,
        l_smooth: l_data_max + 2.0 * reg,
        sigma2_hint: hint,
    })
}

/// Random quadratics: SPD Hessians with eigenvalues in `[mu, l_max]`,
/// local minimizers spread around a common point by `heterogeneity`.
pub fn gen_quadratic(
    n: usize,
    p: usize,
    heterogeneity: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Problem> {
    gen_quadratic_with_spectrum(n, p, heterogeneity, sigma, 0.1, 1.0, rng)
}

pub fn gen_quadratic_with_spectrum(
    n: usize,
    p: usize,
    heterogeneity: f64,
    sigma: f64,
    mu: f64,
    l_max: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Problem> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidSize("quadratic sizes must be ≥ 1".into()));
    }
    if !(0.0 < mu && mu <= l_max) {
        return Err(Error::InvalidSize("need 0 < mu ≤ l_max".into()));
    }
    let x_star: Array1<f64> =
        Array1::from_shape_fn(p, |_| rng.sample::<f64, _>(StandardNormal));
    let mut locals = Vec::with_capacity(n);
    let mut l_actual: f64 = 0.0;
    for _ in 0..n {
        let q = random_orthogonal(p, rng);
        let eigs: Vec<f64> = (0..p)
            .map(|k| {
                if p == 1 {
                    l_max
                } else if k == 0 {
                    mu
                } else if k == p - 1 {
                    l_max
                } else {
                    mu + (l_max - mu) * rng.random::<f64>()
                }
            })
            .collect();
        l_actual = l_actual.max(eigs.iter().cloned().fold(0.0, f64::max));
        let mut a = Array2::<f64>::zeros((p, p));
        for (k, &e) in eigs.iter().enumerate() {
            let col = q.column(k);
            for r_i in 0..p {
                for c_i in 0..p {
                    a[[r_i, c_i]] += e * col[r_i] * col[c_i];
                }
            }
        }
        // Symmetrize away rounding.
        let a = (&a + &a.t()) * 0.5;
        let shift: Array1<f64> = Array1::from_shape_fn(p, |_| {
            heterogeneity * rng.sample::<f64, _>(StandardNormal)
        });
        let b = a.dot(&(&x_star + &shift));
        locals.push(LocalObjective::Quadratic(QuadraticLocal {
            a,
            b,
            noise_sigma: sigma,
        }));
    }
    Ok(Problem {
        n,
        p,
        locals,
        l_smooth: l_actual,
        sigma2_hint: sigma * sigma,
    })
}

#[derive(Debug, Serialize, serde::Deserialize)]
struct ProblemMeta {
    kind: String,
    n: usize,
    p: usize,
    l_smooth: f64,
    sigma2_hint: f64,
    reg: f64,
    noise_sigma: f64,
}

/// Persist a problem instance as `meta.json` plus per-node CSV matrices, so
/// a run can be replayed without the generator.
pub fn save_problem(problem: &Problem, dir: &std::path::Path) -> Result<()> {
    use crate::io::{matrix_to_csv, vector_to_csv, write_atomic};
    std::fs::create_dir_all(dir)?;
    let (kind, reg, noise_sigma) = match &problem.locals[0] {
        LocalObjective::Quadratic(q) => ("quadratic", 0.0, q.noise_sigma),
        LocalObjective::Logistic(l) => ("logistic", l.reg, 0.0),
    };
    let meta = ProblemMeta {
        kind: kind.into(),
        n: problem.n,
        p: problem.p,
        l_smooth: problem.l_smooth,
        sigma2_hint: problem.sigma2_hint,
        reg,
        noise_sigma,
    };
    let meta_text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Config(format!("problem metadata: {e}")))?;
    write_atomic(&dir.join("meta.json"), &meta_text)?;
    for (i, local) in problem.locals.iter().enumerate() {
        match local {
            LocalObjective::Quadratic(q) => {
                write_atomic(&dir.join(format!("a_{i}.csv")), &matrix_to_csv(&q.a))?;
                write_atomic(
                    &dir.join(format!("b_{i}.csv")),
                    &format!("{}\n", vector_to_csv(&q.b)),
                )?;
            }
            LocalObjective::Logistic(l) => {
                write_atomic(&dir.join(format!("h_{i}.csv")), &matrix_to_csv(&l.features))?;
                write_atomic(
                    &dir.join(format!("y_{i}.csv")),
                    &format!("{}\n", vector_to_csv(&l.labels)),
                )?;
            }
        }
    }
    Ok(())
}

/// Load a problem bundle written by [`save_problem`].
pub fn load_problem(dir: &std::path::Path) -> Result<Problem> {
    use crate::io::matrix_from_csv;
    let meta_text = std::fs::read_to_string(dir.join("meta.json"))?;
    let meta: ProblemMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Config(format!("problem metadata: {e}")))?;
    let read_vec = |name: String| -> Result<Array1<f64>> {
        let m = matrix_from_csv(&std::fs::read_to_string(dir.join(name))?)?;
        Ok(m.row(0).to_owned())
    };
    let mut locals = Vec::with_capacity(meta.n);
    for i in 0..meta.n {
        let local = match meta.kind.as_str() {
            "quadratic" => LocalObjective::Quadratic(QuadraticLocal {
                a: matrix_from_csv(&std::fs::read_to_string(dir.join(format!("a_{i}.csv")))?)?,
                b: read_vec(format!("b_{i}.csv"))?,
                noise_sigma: meta.noise_sigma,
            }),
            "logistic" => LocalObjective::Logistic(LogisticLocal {
                features: matrix_from_csv(&std::fs::read_to_string(
                    dir.join(format!("h_{i}.csv")),
                )?)?,
                labels: read_vec(format!("y_{i}.csv"))?,
                reg: meta.reg,
            }),
            other => return Err(Error::Config(format!("unknown problem kind {other:?}"))),
        };
        locals.push(local);
    }
    Ok(Problem {
        n: meta.n,
        p: meta.p,
        locals,
        l_smooth: meta.l_smooth,
        sigma2_hint: meta.sigma2_hint,
    })
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
fn random_orthogonal(p: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut m = Array2::from_shape_fn((p, p), |_| rng.sample::<f64, _>(StandardNormal));
    for k in 0..p {
        for prev in 0..k {
            let proj = m.column(k).dot(&m.column(prev));
            let prev_col = m.column(prev).to_owned();
            let mut col = m.column_mut(k);
            col.scaled_add(-proj, &prev_col);
        }
        let norm = m.column(k).dot(&m.column(k)).sqrt();
        if norm < 1e-12 {
            // Degenerate draw; fall back to a basis vector and restart the
            // orthogonalization of this column.
            let mut col = m.column_mut(k);
            col.fill(0.0);
            col[k % p] = 1.0;
        } else {
            let mut col = m.column_mut(k);
            col.mapv_inplace(|v| v / norm);
        }
    }
    m
}
