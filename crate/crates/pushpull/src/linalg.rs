//! Dense linear-algebra helpers used by the mixing and series modules.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rng::misc_stream;
use rand::Rng;

/// Iteration cap for power iterations.
pub const POWER_ITER_CAP: usize = 10_000;
/// Relative tolerance for power-iteration convergence.
pub const POWER_ITER_TOL: f64 = 1e-12;

/// Frobenius norm.
pub fn fro_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Max absolute entry of a vector.
pub fn linf(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Spectral norm `‖M‖₂` by power iteration on `MᵀM`.
///
/// The start vector comes from a fixed seeded stream so the result is
/// deterministic. Returns 0 for the zero matrix.
pub fn spectral_norm(m: &Array2<f64>) -> f64 {
    let cols = m.ncols();
    if cols == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let fro = fro_norm(m);
    if fro == 0.0 {
        return 0.0;
    }
    let mut rng = misc_stream(0x5eed, 0);
    let mut v = Array1::from_shape_fn(cols, |_| rng.random::<f64>() - 0.5);
    let nv = v.dot(&v).sqrt();
    if nv == 0.0 {
        v.fill(1.0 / (cols as f64).sqrt());
    } else {
        v.mapv_inplace(|x| x / nv);
    }

    let mut prev = 0.0f64;
    let mut prev_inc = f64::INFINITY;
    for _ in 0..POWER_ITER_CAP {
        let w = m.dot(&v);
        let u = m.t().dot(&w);
        // Rayleigh quotient of MᵀM at the unit vector v; the sequence is
        // nondecreasing, so its increments bound the remaining error via
        // the geometric-tail estimate inc·ρ/(1−ρ).
        let lam = v.dot(&u);
        let un = u.dot(&u).sqrt();
        if un == 0.0 {
            return 0.0;
        }
        v = u / un;
        let inc = lam - prev;
        let scale = lam.abs().max(f64::MIN_POSITIVE);
        let ratio = if prev_inc > 0.0 && prev_inc.is_finite() {
            (inc / prev_inc).clamp(0.0, 1.0 - 1e-6)
        } else {
            0.0
        };
        let remainder = inc.abs() * ratio / (1.0 - ratio);
        if inc.abs() + remainder <= POWER_ITER_TOL * scale {
            let corrected = lam + remainder;
            return corrected.max(0.0).sqrt();
        }
        prev = lam;
        prev_inc = inc;
    }
    prev.max(0.0).sqrt()
}

/// `M^k` by repeated squaring.
pub fn mat_pow(m: &Array2<f64>, k: usize) -> Array2<f64> {
    let n = m.nrows();
    let mut result = Array2::eye(n);
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = result.dot(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.dot(&base);
        }
    }
    result
}

/// Rank-one outer product `a bᵀ`.
pub fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut m = Array2::zeros((a.len(), b.len()));
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            m[[i, j]] = ai * bj;
        }
    }
    m
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve: {}x{} matrix with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m[[col, col]].abs();
        for row in col + 1..n {
            let v = m[[row, col]].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return Err(Error::Numeric("singular matrix in solve".into()));
        }
        if pivot != col {
            for j in 0..n {
                m.swap([col, j], [pivot, j]);
            }
            rhs.swap(col, pivot);
        }
        let d = m[[col, col]];
        for row in col + 1..n {
            let f = m[[row, col]] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[[row, j]] -= f * m[[col, j]];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for j in row + 1..n {
            s -= m[[row, j]] * x[j];
        }
        x[row] = s / m[[row, row]];
    }
    Ok(x)
}
