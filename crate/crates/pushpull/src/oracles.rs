//! Reference implementations used by the test suite as independent oracles.
//!
//! Nothing here is called from the library's computation paths: the point is
//! that spectral quantities and series sums can be cross-checked against
//! algorithms with no shared code (dense Jacobi eigendecomposition, linear
//! solves, naive term-by-term summation with explicit matrix powers).

use ndarray::{Array1, Array2};

use crate::linalg::solve;

/// All eigenvalues of a symmetric matrix by the cyclic Jacobi method.
pub fn jacobi_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "jacobi needs a square matrix");
    let mut a = m.clone();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Spectral norm via the eigenvalues of `MᵀM` (independent of the power
/// iteration in the library).
pub fn spectral_norm_dense(m: &Array2<f64>) -> f64 {
    let gram = m.t().dot(m);
    let eigs = jacobi_eigenvalues(&gram);
    eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Left eigenvector of a row-stochastic matrix for eigenvalue 1 by a dense
/// least-squares solve of the stacked system `[Aᵀ − I; 1ᵀ] π = [0; 1]`.
pub fn left_eigenvector_dense(a: &Array2<f64>) -> Array1<f64> {
    let n = a.nrows();
    // Normal equations of the (n+1) x n stacked system.
    let mut stacked = Array2::<f64>::zeros((n + 1, n));
    for i in 0..n {
        for j in 0..n {
            stacked[[i, j]] = a[[j, i]] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        stacked[[n, j]] = 1.0;
    }
    let mut rhs = Array1::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let gram = stacked.t().dot(&stacked);
    let b = stacked.t().dot(&rhs);
    let pi = solve(&gram, &b).expect("stacked eigen system is nonsingular");
    // Clean tiny negatives from the solve and renormalize.
    let cleaned = pi.mapv(|v| if v.abs() < 1e-12 { 0.0 } else { v });
    let s: f64 = cleaned.sum();
    cleaned / s
}

/// Brute-force series constants: explicit matrix powers and dense spectral
/// norms, summed term by term to a fixed horizon.
pub struct BruteForceSeries {
    pub m1: f64,
    pub m2: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub n5: f64,
    pub n6: f64,
    pub n7: f64,
    pub n8: f64,
}

pub fn brute_force_series(
    r: &Array2<f64>,
    c: &Array2<f64>,
    pi_r: &Array1<f64>,
    pi_c: &Array1<f64>,
    horizon: usize,
) -> BruteForceSeries {
    let n = r.nrows();
    let ones = Array1::from_elem(n, 1.0);
    let proj_r = &Array2::eye(n) - &crate::linalg::outer(&ones, pi_r);
    let proj_c = &Array2::eye(n) - &crate::linalg::outer(pi_c, &ones);

    // Powers R^0..R^horizon+1, C^0..C^horizon+1 computed naively.
    let mut r_pows = vec![Array2::<f64>::eye(n)];
    let mut c_pows = vec![Array2::<f64>::eye(n)];
    for t in 0..=horizon {
        r_pows.push(r_pows[t].dot(r));
        c_pows.push(c_pows[t].dot(c));
    }
    let r_tilde = |k: usize| proj_r.dot(&r_pows[k]);
    let c_tilde = |k: usize| proj_c.dot(&c_pows[k]);
    let vec2 = |v: &Array1<f64>| v.dot(v);

    let pi_rc = |t: usize| -> Array1<f64> { c_pows[t].t().dot(pi_r) };

    let mut out = BruteForceSeries {
        m1: vec2(&pi_rc(1)),
        m2: 0.0,
        n1: 0.0,
        n2: vec2(&c_tilde(0).t().dot(pi_r)),
        n3: 0.0,
        n4: 0.0,
        n5: 0.0,
        n6: 0.0,
        n7: 0.0,
        n8: 0.0,
    };
    for t in 1..=horizon {
        let diff = &pi_rc(t + 1) - &pi_rc(t);
        out.m1 += vec2(&diff);
        out.m2 += t as f64 * vec2(&diff).sqrt();

        let d = c_tilde(t).t().dot(pi_r);
        out.n1 += vec2(&d).sqrt();
        out.n2 += vec2(&d);

        let e = r_tilde(t).dot(pi_c);
        out.n3 += vec2(&e).sqrt();
        out.n4 += vec2(&e);

        let mut v_t = Array2::<f64>::zeros((n, n));
        for k in 1..t {
            v_t += &r_tilde(k).dot(&c_tilde(t - k));
        }
        out.n5 += spectral_norm_dense(&v_t);

        let mut u_t = Array2::<f64>::zeros((n, n));
        for k in 1..=t {
            u_t += &r_tilde(k).dot(&c_tilde(t - k));
        }
        let un = spectral_norm_dense(&u_t);
        out.n6 += un * un;

        let mut d_t = Array2::<f64>::zeros((n, n));
        for k in 1..=t {
            d_t += &r_tilde(k).dot(&c_tilde(t - k + 1));
        }
        for k in 1..t {
            d_t -= &r_tilde(k).dot(&c_tilde(t - k));
        }
        let dn = spectral_norm_dense(&d_t);
        out.n7 += dn * dn;
        out.n8 += dn;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn jacobi_diagonal_matrix() {
        let m = array![[3.0, 0.0], [0.0, -1.0]];
        let eigs = jacobi_eigenvalues(&m);
        assert!((eigs[0] + 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_known_two_by_two() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let eigs = jacobi_eigenvalues(&m);
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dense_norm_agrees_with_power_iteration() {
        let m = array![
            [0.2, 0.5, 0.1],
            [0.0, 0.3, 0.9],
            [0.4, 0.0, 0.2]
        ];
        let a = spectral_norm_dense(&m);
        let b = crate::linalg::spectral_norm(&m);
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn dense_left_eigenvector_uniform_for_doubly_stochastic() {
        let g = crate::digraph::gen_ring(4, true).unwrap();
        let w = crate::mixing::doubly_stochastic(&g).unwrap();
        let pi = left_eigenvector_dense(&w);
        for &v in pi.iter() {
            assert!((v - 0.25).abs() < 1e-10);
        }
    }
}
