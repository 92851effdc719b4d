//! Spectral series constants and the derived stepsize/bound diagnostics.
//!
//! The constants `M1, M2, N1..N8` are infinite sums over powers of the
//! centered matrices `R̃ᵏ = Π_R Rᵏ` and `C̃ᵏ = Π_C Cᵏ`, where
//! `Π_R = I − 1π_Rᵀ` and `Π_C = I − π_C 1ᵀ`. They are evaluated by summing
//! terms with exact recurrences until the certified geometric (or `t·αᵗ`)
//! remainder falls below a tolerance.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{outer, spectral_norm};
use crate::mixing::Certified;

/// Hard cap on summed terms; rates extremely close to 1 are rejected rather
/// than ground through.
pub const TERM_CAP: usize = 100_000;
/// Default tail tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// The spectral constants of a certified mixing pair.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub pi_r: Vec<f64>,
    pub pi_c: Vec<f64>,
    /// `π = π_Rᵀ π_C`.
    pub pi: f64,
    /// `‖W − 11ᵀ/n‖₂` when the pair is a single doubly stochastic matrix.
    pub lambda: Option<f64>,
    /// Smallest eigenvalue of `W` when additionally symmetric.
    pub lambda_min: Option<f64>,
    pub m1: f64,
    pub m2: f64,
    /// Zero in spanning-tree mode, `m2` otherwise.
    pub m2_tilde: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub n5: f64,
    pub n6: f64,
    pub n7: f64,
    pub n8: f64,
    pub truncation_t: usize,
    pub tail_bound: f64,
}

impl SpectralReport {
    pub fn n(&self) -> usize {
        self.pi_r.len()
    }
}

/// Exact closed forms for a symmetric doubly stochastic matrix, plus the
/// upper bounds available for `N7`/`N8`. Serves as the oracle for
/// [`compute_constants`].
#[derive(Debug, Clone, Serialize)]
pub struct SymmetricClosedForm {
    pub lambda: f64,
    pub lambda_min: f64,
    pub m1: f64,
    pub m2: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub n5: f64,
    pub n6: f64,
    pub n7_bound: f64,
    pub n8_bound: f64,
}

/// Constants of the convergence guarantee plus the stepsize it prescribes.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryBundle {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub p5: f64,
    pub q: f64,
    pub c1: f64,
    pub l_smooth: f64,
    pub sigma2: f64,
    pub delta_f: f64,
    pub f0: f64,
    pub gamma: f64,
    pub t_horizon: usize,
}

// Closed-form tails of geometric and arithmetico-geometric series, each the
// exact value of the infinite remainder starting at `s`.

/// `Σ_{t≥s} xᵗ`.
pub fn geom_tail(x: f64, s: usize) -> f64 {
    debug_assert!((0.0..1.0).contains(&x));
    x.powi(s as i32) / (1.0 - x)
}

/// `Σ_{t≥s} t·xᵗ`.
pub fn linear_tail(x: f64, s: usize) -> f64 {
    debug_assert!((0.0..1.0).contains(&x));
    let y = 1.0 - x;
    x.powi(s as i32) * (s as f64 * y + x) / (y * y)
}

/// `Σ_{t≥s} t²·xᵗ`.
pub fn quadratic_tail(x: f64, s: usize) -> f64 {
    debug_assert!((0.0..1.0).contains(&x));
    let y = 1.0 - x;
    let sf = s as f64;
    x.powi(s as i32) * (sf * sf / y + 2.0 * sf * x / (y * y) + (x + x * x) / (y * y * y))
}

fn vec_norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Tail bounds for all ten series once `truncation` terms are in, derived
/// from the decay certificates.
struct TailState {
    pi_r_norm: f64,
    pi_c_norm: f64,
    alpha_r: f64,
    alpha_c: f64,
    alpha: f64,
    /// Prefix constants so `‖R̃ᵏ‖ ≤ k_r·α_rᵏ` holds for every k ≥ 1 (and
    /// `‖C̃ᵏ‖ ≤ k_c·α_cᵏ` for k ≥ 0), not only past the certified horizon.
    k_r: f64,
    k_c: f64,
}

impl TailState {
    fn bounds(&self, truncation: usize) -> [f64; 10] {
        let s = truncation + 1;
        let (ar, ac, a) = (self.alpha_r, self.alpha_c, self.alpha);
        let kk = self.k_r * self.k_c;
        let m1 = self.pi_r_norm.powi(2) * (1.0 + ac).powi(2) * geom_tail(ac * ac, s);
        let m2 = self.pi_r_norm * (1.0 + ac) * linear_tail(ac, s);
        let n1 = self.pi_r_norm * geom_tail(ac, s);
        let n2 = self.pi_r_norm.powi(2) * geom_tail(ac * ac, s);
        let n3 = self.pi_c_norm * geom_tail(ar, s);
        let n4 = self.pi_c_norm.powi(2) * geom_tail(ar * ar, s);
        let n5 = kk * linear_tail(a, s);
        let n6 = kk * kk * quadratic_tail(a * a, s);
        let n7 = kk
            * kk
            * (1.0 + a).powi(2)
            * (quadratic_tail(a * a, s) + 2.0 * linear_tail(a * a, s) + geom_tail(a * a, s));
        let n8 = kk * (1.0 + a) * (linear_tail(a, s) + geom_tail(a, s));
        [m1, m2, n1, n2, n3, n4, n5, n6, n7, n8]
    }
}

/// Sum the series constants for a certified pair until every remainder
/// bound is below `tol`.
pub fn compute_constants(cert: &Certified, tol: f64) -> Result<SpectralReport> {
    let n = cert.n();
    let r = &cert.pair.r;
    let c = &cert.pair.c;
    let pi_r = &cert.pi_r.pi;
    let pi_c = &cert.pi_c.pi;
    let pi = cert.pi();
    if pi <= 0.0 {
        return Err(Error::AssumptionViolated(
            "π_Rᵀ π_C must be positive".into(),
        ));
    }

    let ones = Array1::from_elem(n, 1.0);
    // Π_R = I − 1π_Rᵀ, Π_C = I − π_C 1ᵀ.
    let proj_r = &Array2::eye(n) - &outer(&ones, pi_r);
    let proj_c = &Array2::eye(n) - &outer(pi_c, &ones);
    // Right-multiplication by Π_C as a rank-one update.
    let apply_proj_c = |m: &Array2<f64>| -> Array2<f64> {
        let mv = m.dot(pi_c);
        m - &outer(&mv, &ones)
    };

    let alpha_r = cert.cert_r.alpha;
    let alpha_c = cert.cert_c.alpha;
    let m_start = cert.cert_r.m.max(cert.cert_c.m).max(1);

    // Prefix constants covering the uncertified head of the series.
    let mut k_r: f64 = 1.0;
    {
        let mut rt = proj_r.dot(r); // R̃¹
        for k in 1..=cert.cert_r.m {
            k_r = k_r.max(spectral_norm(&rt) / alpha_r.powi(k as i32));
            if k < cert.cert_r.m {
                rt = rt.dot(r);
            }
        }
    }
    let mut k_c: f64 = spectral_norm(&proj_c); // C̃⁰ = Π_C
    {
        let mut ct = proj_c.dot(c); // C̃¹
        for k in 1..=cert.cert_c.m {
            k_c = k_c.max(spectral_norm(&ct) / alpha_c.powi(k as i32));
            if k < cert.cert_c.m {
                ct = ct.dot(c);
            }
        }
    }
    let tails = TailState {
        pi_r_norm: vec_norm(pi_r),
        pi_c_norm: vec_norm(pi_c),
        alpha_r,
        alpha_c,
        alpha: alpha_r.max(alpha_c),
        k_r: k_r.max(1.0),
        k_c: k_c.max(1.0),
    };

    // Rolling state, all at index t (starting from t = 1):
    //   c_row = π_Rᵀ Cᵗ           w_col = Rᵗ π_C
    //   a_mat = R̃ᵗ               u_mat = Σ_{k=1..t} R̃ᵏ C̃^{t−k}
    //   v_mat = Σ_{k=1..t−1} R̃ᵏ C̃^{t−k} = u_mat − R̃ᵗ Π_C
    let mut c_row: Array1<f64> = c.t().dot(pi_r);
    let mut w_col: Array1<f64> = r.dot(pi_c);
    let mut a_mat: Array2<f64> = proj_r.dot(r);
    let mut u_mat: Array2<f64> = apply_proj_c(&a_mat);
    let mut v_mat: Array2<f64> = Array2::zeros((n, n));

    let mut m1 = c_row.dot(&c_row);
    let mut m2 = 0.0;
    let mut n1 = 0.0;
    // t = 0 term of N2: ‖π_Rᵀ Π_C‖² = ‖π_R − π·1‖².
    let mut n2 = {
        let d0 = pi_r - &(pi * &ones);
        d0.dot(&d0)
    };
    let (mut n3, mut n4, mut n5, mut n6, mut n7, mut n8) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);

    let mut truncation_t = 0usize;
    let mut tail_bound = f64::INFINITY;
    for t in 1..=TERM_CAP {
        // Advance the one-step-lookahead states first: D_t = V_{t+1} − V_t,
        // with V_{t+1} = U_t·C and U_{t+1} = U_t·C + R̃^{t+1}·Π_C.
        let c_next = c.t().dot(&c_row);
        let a_next = a_mat.dot(r);
        let v_next = u_mat.dot(c);
        let u_next = &v_next + &apply_proj_c(&a_next);

        // Squared terms accumulate the dot product directly so 0/1 matrices
        // stay in exact integer arithmetic.
        let diff_row = &c_next - &c_row;
        let dn2 = diff_row.dot(&diff_row);
        m1 += dn2;
        m2 += t as f64 * dn2.sqrt();

        let d_t = &c_row - &(pi * &ones);
        let dt2 = d_t.dot(&d_t);
        n1 += dt2.sqrt();
        n2 += dt2;

        let e_t = &w_col - &(pi_r.dot(&w_col) * &ones);
        let et2 = e_t.dot(&e_t);
        n3 += et2.sqrt();
        n4 += et2;

        let vn = spectral_norm(&v_mat);
        n5 += vn;
        let un = spectral_norm(&u_mat);
        n6 += un * un;

        let d_mat = &v_next - &v_mat;
        let dmn = spectral_norm(&d_mat);
        n7 += dmn * dmn;
        n8 += dmn;

        c_row = c_next;
        w_col = r.dot(&w_col);
        a_mat = a_next;
        u_mat = u_next;
        v_mat = v_next;

        if t >= m_start {
            let bounds = tails.bounds(t);
            let worst = bounds.iter().fold(0.0f64, |a, &b| a.max(b));
            if worst < tol {
                truncation_t = t;
                tail_bound = worst;
                break;
            }
        }
    }
    if truncation_t == 0 {
        let worst = tails.bounds(TERM_CAP).iter().fold(0.0f64, |a, &b| a.max(b));
        return Err(Error::TruncationFailure {
            terms: TERM_CAP,
            tail_bound: worst,
        });
    }

    // λ and λ_min apply only to the single doubly stochastic matrix case.
    let same = cert
        .pair
        .r
        .iter()
        .zip(cert.pair.c.iter())
        .all(|(a, b)| a == b);
    let doubly = same
        && crate::mixing::column_stochastic_residual(r) <= crate::mixing::STOCHASTIC_TOL
        && crate::mixing::row_stochastic_residual(r) <= crate::mixing::STOCHASTIC_TOL;
    let lambda = if doubly {
        let avg = Array2::from_elem((n, n), 1.0 / n as f64);
        Some(spectral_norm(&(r - &avg)))
    } else {
        None
    };
    let symmetric = doubly && (r - &r.t()).iter().all(|v| v.abs() <= 1e-12);
    let lambda_min = if symmetric {
        Some(1.0 - spectral_norm(&(&Array2::eye(n) - r)))
    } else {
        None
    };

    let m2_tilde = if cert.pair.spanning_tree_mode { 0.0 } else { m2 };
    Ok(SpectralReport {
        pi_r: pi_r.to_vec(),
        pi_c: pi_c.to_vec(),
        pi,
        lambda,
        lambda_min,
        m1,
        m2,
        m2_tilde,
        n1,
        n2,
        n3,
        n4,
        n5,
        n6,
        n7,
        n8,
        truncation_t,
        tail_bound,
    })
}

/// Exact constants for a symmetric doubly stochastic matrix.
pub fn closed_form_symmetric(w: &Array2<f64>) -> Result<SymmetricClosedForm> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::DimensionMismatch("matrix not square".into()));
    }
    let asym = (w - &w.t())
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    if asym > 1e-12 {
        return Err(Error::AssumptionViolated(format!(
            "matrix asymmetry {asym:e} exceeds 1e-12"
        )));
    }
    let row_res = crate::mixing::row_stochastic_residual(w);
    if row_res > crate::mixing::STOCHASTIC_TOL {
        return Err(Error::AssumptionViolated(format!(
            "row-sum residual {row_res:e}"
        )));
    }
    let avg = Array2::from_elem((n, n), 1.0 / n as f64);
    let lambda = spectral_norm(&(w - &avg));
    if lambda >= 1.0 {
        return Err(Error::AssumptionViolated(format!(
            "‖W − 11ᵀ/n‖₂ = {lambda} ≥ 1"
        )));
    }
    let lambda_min = 1.0 - spectral_norm(&(&Array2::eye(n) - w));
    let l2 = lambda * lambda;
    let c = 1.0 + lambda_min.min(0.0);
    Ok(SymmetricClosedForm {
        lambda,
        lambda_min,
        m1: 1.0 / n as f64,
        m2: 0.0,
        n1: 0.0,
        n2: 0.0,
        n3: 0.0,
        n4: 0.0,
        n5: l2 / (1.0 - lambda).powi(2),
        n6: (l2 + l2 * l2) / (1.0 - l2).powi(3),
        n7_bound: 10.0 / (c * (1.0 - lambda)),
        n8_bound: 10.0 / (c.sqrt() * (1.0 - lambda)),
    })
}

/// `max{M1, M̃2, M1·M̃2} / (n·π²)`; linear speedup needs this to stay
/// bounded in `n`, and it can never drop below 1/10.
pub fn speedup_ratio(report: &SpectralReport, n: usize) -> Result<f64> {
    if report.pi <= 0.0 {
        return Err(Error::AssumptionViolated(
            "π_Rᵀ π_C must be positive".into(),
        ));
    }
    let m = report
        .m1
        .max(report.m2_tilde)
        .max(report.m1 * report.m2_tilde);
    Ok(m / (n as f64 * report.pi * report.pi))
}

/// Assemble the constants of the convergence guarantee and the stepsize it
/// prescribes for horizon `t_horizon`.
pub fn theory_bundle(
    report: &SpectralReport,
    l_smooth: f64,
    sigma2: f64,
    delta_f: f64,
    f0: f64,
    t_horizon: usize,
) -> Result<TheoryBundle> {
    if l_smooth <= 0.0 || delta_f < 0.0 || sigma2 < 0.0 || f0 < 0.0 {
        return Err(Error::InvalidSize(
            "theory bundle needs L > 0 and nonnegative σ², Δf, F0".into(),
        ));
    }
    if t_horizon == 0 {
        return Err(Error::InvalidSize("horizon must be at least 1".into()));
    }
    let n = report.n() as f64;
    let pi = report.pi;
    let (n1, n3, n5, n8) = (report.n1, report.n3, report.n5, report.n8);
    let m2t = report.m2_tilde;

    let p1 = (n * n1 * n1)
        .max(n * n3 * n3)
        .max(n8 * n8)
        .max(n.sqrt() * n1 * n5)
        .max(n * pi * n5);
    let p2 = (n * n * pi * pi)
        .max(n * n1 * n1)
        .max(n * n1 * n1 * m2t)
        .max(n * n * pi * pi * m2t * m2t);
    let p3 = (n * n * pi * pi)
        .max(n1.powi(4) / (pi * pi))
        .max(n3.powi(4) / (pi * pi));
    let p4 = p2.max(p3).sqrt() * n5;
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let p5 = ratio(report.n2, pi)
        .max(ratio(report.n2, n * pi * pi))
        .max(ratio(report.n6, n5));
    let q = report.m1.max(m2t).max(report.m1 * m2t);
    let c1 = p1;

    // Stepsize: the minimum of the two horizon-driven candidates and the
    // structural cap 1/(500·√max{P1..P4}·L).
    let a = delta_f / (n * pi);
    let b = q * sigma2 * l_smooth / (n * pi);
    let c_coef = p2.max(p3).sqrt() * report.n4.max(report.n7) * sigma2 * l_smooth * l_smooth
        / (n * pi);
    let t1 = (t_horizon + 1) as f64;
    let cap = 1.0 / (500.0 * p1.max(p2).max(p3).max(p4).sqrt().max(f64::MIN_POSITIVE) * l_smooth);
    let mut gamma = cap;
    if b > 0.0 {
        gamma = gamma.min((a / (b * t1)).sqrt());
    }
    if c_coef > 0.0 {
        gamma = gamma.min((a / (c_coef * t1)).cbrt());
    }

    Ok(TheoryBundle {
        p1,
        p2,
        p3,
        p4,
        p5,
        q,
        c1,
        l_smooth,
        sigma2,
        delta_f,
        f0,
        gamma,
        t_horizon,
    })
}

/// Evaluate the five-term convergence bound at the bundle's stepsize.
///
/// The universal constant hidden by the guarantee is surfaced as
/// `C0 = 2·10⁶`, so the bound is conservative by construction. The quartic
/// stepsize term is evaluated at the actual `gamma`, which makes every
/// noise term vanish cleanly when `σ² = 0`.
pub fn bound_rhs(bundle: &TheoryBundle, report: &SpectralReport, n: usize, t_horizon: usize) -> f64 {
    const C0: f64 = 2e6;
    let nf = n as f64;
    let pi = report.pi;
    let t1 = (t_horizon + 1) as f64;
    let l = bundle.l_smooth;

    let a = bundle.delta_f / (nf * pi);
    let b = bundle.q * bundle.sigma2 * l / (nf * pi);
    let c_coef =
        bundle.p2.max(bundle.p3).sqrt() * report.n4.max(report.n7) * bundle.sigma2 * l * l
            / (nf * pi);
    let alpha = 500.0 * bundle.p1.max(bundle.p2).max(bundle.p3).max(bundle.p4).sqrt() * l;

    let term_sqrt = (a * b / t1).sqrt();
    let term_cbrt = c_coef.cbrt() * (a / t1).powf(2.0 / 3.0);
    let term_lin = alpha * a / t1;
    let term_quartic = bundle.p2.max(bundle.p3).sqrt() * report.m1 * report.n5 * report.n5
        * bundle.sigma2
        * l.powi(4)
        * bundle.gamma.powi(4)
        / (nf * pi);
    let term_f0 = 30.0 * bundle.p5 * bundle.f0 / (nf * pi * t1);

    C0 * (term_sqrt + term_cbrt + term_lin + term_quartic) + term_f0
}
