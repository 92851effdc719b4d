//! Cross-checks of the series constants against independent dense oracles:
//! naive term-by-term summation with explicit matrix powers, Jacobi
//! eigendecomposition, and a dense left-eigenvector solve.

use ndarray::Array2;
use pushpull::digraph::{gen_erdos_renyi, gen_multi_subring, root_set, DirectedGraph};
use pushpull::mixing::{certify_pair, pull_matrix, push_matrix, MixingPair};
use pushpull::oracles::{brute_force_series, jacobi_eigenvalues, left_eigenvector_dense};
use pushpull::rng::graph_stream;
use pushpull::series::compute_constants;

fn degree_pair(g: &DirectedGraph) -> MixingPair {
    MixingPair::new(pull_matrix(g), push_matrix(&g.reverse())).unwrap()
}

#[test]
fn constants_match_brute_force_on_er_pair() {
    let g = gen_erdos_renyi(6, 0.5, &mut graph_stream(2), 1000).unwrap();
    let pair = degree_pair(&g);
    let cert = certify_pair(&pair, 200).unwrap();
    let report = compute_constants(&cert, 1e-10).unwrap();
    let brute = brute_force_series(&pair.r, &pair.c, &cert.pi_r.pi, &cert.pi_c.pi, 150);

    let tol_vec = 1e-7;
    assert!((report.m1 - brute.m1).abs() < tol_vec, "m1 {} vs {}", report.m1, brute.m1);
    assert!((report.m2 - brute.m2).abs() < tol_vec, "m2 {} vs {}", report.m2, brute.m2);
    assert!((report.n1 - brute.n1).abs() < tol_vec);
    assert!((report.n2 - brute.n2).abs() < tol_vec);
    assert!((report.n3 - brute.n3).abs() < tol_vec);
    assert!((report.n4 - brute.n4).abs() < tol_vec);
    let tol_mat = 1e-6;
    assert!((report.n5 - brute.n5).abs() < tol_mat, "n5 {} vs {}", report.n5, brute.n5);
    assert!((report.n6 - brute.n6).abs() < tol_mat, "n6 {} vs {}", report.n6, brute.n6);
    assert!((report.n7 - brute.n7).abs() < tol_mat, "n7 {} vs {}", report.n7, brute.n7);
    assert!((report.n8 - brute.n8).abs() < tol_mat, "n8 {} vs {}", report.n8, brute.n8);
}

#[test]
fn constants_match_brute_force_on_msr_pair() {
    let g = gen_multi_subring(7, 2).unwrap();
    let pair = degree_pair(&g);
    let cert = certify_pair(&pair, 300).unwrap();
    let report = compute_constants(&cert, 1e-10).unwrap();
    let brute = brute_force_series(&pair.r, &pair.c, &cert.pi_r.pi, &cert.pi_c.pi, 250);
    for (name, a, b) in [
        ("m1", report.m1, brute.m1),
        ("m2", report.m2, brute.m2),
        ("n5", report.n5, brute.n5),
        ("n6", report.n6, brute.n6),
        ("n7", report.n7, brute.n7),
        ("n8", report.n8, brute.n8),
    ] {
        assert!((a - b).abs() < 1e-5, "{name}: {a} vs {b}");
    }
}

#[test]
fn root_eigenvector_matches_dense_solve_on_er() {
    let g = gen_erdos_renyi(8, 0.35, &mut graph_stream(5), 1000).unwrap();
    let r = pull_matrix(&g);
    let pi = pushpull::mixing::root_eigenvector(
        &r,
        &root_set(&g),
        pushpull::mixing::AssociatedMatrix::R,
    )
    .unwrap();
    let dense = left_eigenvector_dense(&r);
    for (a, b) in pi.pi.iter().zip(dense.iter()) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    // Strong connectivity puts mass everywhere.
    assert!(pi.pi.iter().all(|&v| v > 0.0));
    assert!((pi.pi.sum() - 1.0).abs() < 1e-12);
}

/// Random doubly stochastic (not symmetric) matrices as convex mixtures of
/// permutations, anchored by enough identity and full-averaging mass to keep
/// the spectral gap healthy.
fn birkhoff_mix(n: usize, seed: u64) -> Array2<f64> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut rng = graph_stream(seed);
    let mut w = Array2::<f64>::zeros((n, n));
    let mut weights = vec![0.2, 0.1]; // identity, full averaging
    let mut remaining = 0.7;
    let k = 3 + (seed as usize % 3);
    for i in 0..k {
        let share = if i + 1 == k {
            remaining
        } else {
            remaining * rng.random_range(0.2..0.6)
        };
        weights.push(share);
        remaining -= share;
    }
    for i in 0..n {
        w[[i, i]] += weights[0];
    }
    w += &Array2::from_elem((n, n), weights[1] / n as f64);
    for &share in &weights[2..] {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for (i, &j) in perm.iter().enumerate() {
            w[[i, j]] += share;
        }
    }
    w
}

#[test]
fn nonsymmetric_doubly_stochastic_respects_closed_form_bounds() {
    for seed in 0..6u64 {
        let n = 4 + 2 * (seed as usize % 3);
        let w = birkhoff_mix(n, seed);
        assert!(pushpull::mixing::row_stochastic_residual(&w) < 1e-12);
        assert!(pushpull::mixing::column_stochastic_residual(&w) < 1e-12);
        let pair = MixingPair::new(w.clone(), w.clone()).unwrap();
        let cert = match certify_pair(&pair, 300) {
            Ok(c) => c,
            Err(e) => panic!("certification failed for seed {seed}: {e}"),
        };
        let report = compute_constants(&cert, 1e-10).unwrap();
        let lambda = report.lambda.expect("doubly stochastic pair has lambda");
        assert!(lambda < 1.0);
        let tol = 1e-8f64.max(report.tail_bound);
        let l2 = lambda * lambda;
        assert!(
            report.n5 <= l2 / (1.0 - lambda).powi(2) + tol,
            "seed {seed}: n5 {} vs {}",
            report.n5,
            l2 / (1.0 - lambda).powi(2)
        );
        assert!(
            report.n6 <= (l2 + l2 * l2) / (1.0 - l2).powi(3) + tol,
            "seed {seed}: n6 bound"
        );
        assert!(
            report.n7 <= 8.0 / (1.0 - l2).powi(3) + tol,
            "seed {seed}: n7 {} vs {}",
            report.n7,
            8.0 / (1.0 - l2).powi(3)
        );
        assert!(
            report.n8 <= 8.0 / (1.0 - lambda).powi(2) + tol,
            "seed {seed}: n8 bound"
        );
        // Doubly stochastic mixing always sits at the speedup boundary.
        let ratio = pushpull::series::speedup_ratio(&report, n).unwrap();
        assert!((ratio - 1.0).abs() < 1e-9, "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn jacobi_agrees_with_power_iteration_lambda() {
    let g = pushpull::digraph::gen_ring(6, true).unwrap();
    let w = pushpull::mixing::doubly_stochastic(&g).unwrap();
    let n = 6;
    let avg = Array2::from_elem((n, n), 1.0 / n as f64);
    let lambda_power = pushpull::linalg::spectral_norm(&(&w - &avg));
    let eigs = jacobi_eigenvalues(&w);
    // Largest modulus among the non-unit eigenvalues.
    let lambda_dense = eigs
        .iter()
        .map(|&e| e.abs())
        .filter(|&e| (e - 1.0).abs() > 1e-9)
        .fold(0.0f64, f64::max);
    assert!(
        (lambda_power - lambda_dense).abs() < 1e-10,
        "{lambda_power} vs {lambda_dense}"
    );
    // And the smallest eigenvalue matches the library's deflation route.
    let lambda_min_power = 1.0 - pushpull::linalg::spectral_norm(&(&Array2::eye(n) - &w));
    assert!((eigs[0] - lambda_min_power).abs() < 1e-10);
}
