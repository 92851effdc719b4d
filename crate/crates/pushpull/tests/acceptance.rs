//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values once its assertions hold.

use ndarray::{Array1, Array2};
use pushpull::digraph::{
    gen_erdos_renyi, gen_multi_subring, gen_ring, gen_spanning_tree_pair, root_set, DirectedGraph,
};
use pushpull::engine::{
    run_centralized_sgd, run_spp, RunOptions, StepsizeSchedule, Trace,
};
use pushpull::error::Error;
use pushpull::io::trace_to_csv;
use pushpull::mixing::{
    certify_decay, certify_pair, doubly_stochastic, pull_matrix, push_matrix, root_eigenvector,
    tree_01_matrices, AssociatedMatrix, Certified, MixingPair,
};
use pushpull::problems::gen_quadratic_with_spectrum;
use pushpull::rng::{graph_stream, misc_stream, problem_stream};
use pushpull::series::{
    bound_rhs, closed_form_symmetric, compute_constants, speedup_ratio, theory_bundle,
};
use rand::Rng;

fn degree_pair(g: &DirectedGraph) -> MixingPair {
    MixingPair::new(pull_matrix(g), push_matrix(&g.reverse())).unwrap()
}

/// Random connected undirected graph: ring backbone plus random chords.
fn random_connected_undirected(n: usize, seed: u64) -> DirectedGraph {
    let mut rng = graph_stream(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        if i != j {
            edges.push((i, j));
            edges.push((j, i));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.25 {
                edges.push((i, j));
                edges.push((j, i));
            }
        }
    }
    DirectedGraph::new(n, edges).unwrap()
}

/// Symmetric doubly stochastic test matrix: Metropolis weights blended with
/// the identity.
fn random_symmetric_doubly_stochastic(n: usize, seed: u64, blend: f64) -> Array2<f64> {
    let g = random_connected_undirected(n, seed);
    let w = doubly_stochastic(&g).unwrap();
    let eye = Array2::<f64>::eye(n);
    &(blend * &eye) + &((1.0 - blend) * &w)
}

#[test]
fn criterion_1_closed_form_oracle_equivalence() {
    let cases: [(usize, f64); 10] = [
        (4, 0.0),
        (4, 0.2),
        (4, 0.35),
        (8, 0.0),
        (8, 0.2),
        (8, 0.35),
        (16, 0.0),
        (16, 0.2),
        (16, 0.35),
        (8, 0.1),
    ];
    let mut worst: f64 = 0.0;
    for (idx, &(n, blend)) in cases.iter().enumerate() {
        let w = random_symmetric_doubly_stochastic(n, 40 + idx as u64, blend);
        let cf = closed_form_symmetric(&w).unwrap();
        let pair = MixingPair::new(w.clone(), w).unwrap();
        let cert = certify_pair(&pair, 300).unwrap();
        let rep = compute_constants(&cert, 1e-10).unwrap();
        let tol = 1e-8f64.max(rep.tail_bound);
        for (name, got, want) in [
            ("m1", rep.m1, cf.m1),
            ("m2", rep.m2, cf.m2),
            ("n1", rep.n1, cf.n1),
            ("n2", rep.n2, cf.n2),
            ("n3", rep.n3, cf.n3),
            ("n4", rep.n4, cf.n4),
            ("n5", rep.n5, cf.n5),
            ("n6", rep.n6, cf.n6),
        ] {
            let err = (got - want).abs();
            worst = worst.max(err);
            assert!(
                err <= tol,
                "case {idx} (n={n}, blend={blend}): {name} = {got}, closed form {want}, tol {tol}"
            );
        }
        assert!(
            rep.n7 <= cf.n7_bound + tol,
            "case {idx}: n7 {} above bound {}",
            rep.n7,
            cf.n7_bound
        );
        assert!(
            rep.n8 <= cf.n8_bound + tol,
            "case {idx}: n8 {} above bound {}",
            rep.n8,
            cf.n8_bound
        );
    }
    println!(
        "acceptance criterion 1 (closed-form oracle equivalence, 10 matrices): PASS (worst |err| = {worst:.3e})"
    );
}

#[test]
fn criterion_2_speedup_ratio_identities() {
    // Doubly stochastic pull matrix → ratio 1 within 1e-10.
    let mut checked = 0;
    for n in [4usize, 8, 16] {
        let g = gen_ring(n, true).unwrap();
        let w = doubly_stochastic(&g).unwrap();
        // R = C = W.
        let pair = MixingPair::new(w.clone(), w.clone()).unwrap();
        let cert = certify_pair(&pair, 300).unwrap();
        let rep = compute_constants(&cert, 1e-10).unwrap();
        let ratio = speedup_ratio(&rep, n).unwrap();
        assert!((ratio - 1.0).abs() <= 1e-10, "dsgt n={n}: ratio {ratio}");
        checked += 1;

        // Doubly stochastic R with an unrelated push matrix.
        let push = gen_erdos_renyi(n, 0.5, &mut graph_stream(60 + n as u64), 1000).unwrap();
        let pair = MixingPair::new(w.clone(), push_matrix(&push)).unwrap();
        let cert = certify_pair(&pair, 300).unwrap();
        let rep = compute_constants(&cert, 1e-10).unwrap();
        let ratio = speedup_ratio(&rep, n).unwrap();
        assert!(
            (ratio - 1.0).abs() <= 1e-10,
            "doubly stochastic R only, n={n}: ratio {ratio}"
        );
        checked += 1;
    }

    // 0/1 spanning-tree pairs → exactly 1.
    for (n, seed) in [(1usize, 0u64), (5, 1), (9, 2), (16, 3)] {
        let (pull, push) = gen_spanning_tree_pair(n, &mut graph_stream(seed)).unwrap();
        let pair = tree_01_matrices(&pull, &push).unwrap();
        let cert = certify_pair(&pair, 200).unwrap();
        let rep = compute_constants(&cert, 1e-10).unwrap();
        let ratio = speedup_ratio(&rep, n).unwrap();
        assert_eq!(ratio, 1.0, "tree pair n={n}: ratio {ratio}");
        checked += 1;
    }

    // 50 random certified pairs stay above the 1/10 floor.
    let mut min_ratio = f64::INFINITY;
    let mut count = 0;
    for i in 0..25u64 {
        let n = 4 + (i as usize * 7) % 13; // 4..=16
        let g = gen_erdos_renyi(n, 0.45, &mut graph_stream(100 + i), 1000).unwrap();
        let pair = degree_pair(&g);
        let cert = certify_pair(&pair, 300).unwrap();
        let rep = compute_constants(&cert, 1e-8).unwrap();
        let ratio = speedup_ratio(&rep, n).unwrap();
        assert!(ratio >= 0.1 - 1e-10, "er config {i} (n={n}): ratio {ratio}");
        min_ratio = min_ratio.min(ratio);
        count += 1;
    }
    for i in 0..25usize {
        let n = 5 + (i * 5) % 12; // 5..=16
        let k = 1 + i % 3;
        let k = if n > 10 && k == 1 { 2 } else { k };
        let g = gen_multi_subring(n, k).unwrap();
        let pair = degree_pair(&g);
        let cert = certify_pair(&pair, 400).unwrap();
        let rep = compute_constants(&cert, 1e-8).unwrap();
        let ratio = speedup_ratio(&rep, n).unwrap();
        assert!(
            ratio >= 0.1 - 1e-10,
            "msr config {i} (n={n}, k={k}): ratio {ratio}"
        );
        min_ratio = min_ratio.min(ratio);
        count += 1;
    }
    assert_eq!(count, 50);
    println!(
        "acceptance criterion 2 (speedup-ratio identities, {checked} exact + {count} certified pairs): PASS (min ratio {min_ratio:.4})"
    );
}

#[test]
fn criterion_3_runtime_identities() {
    let mut worst_inv: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    for run in 0..20u64 {
        let n = 2 + (run as usize * 5) % 15; // 2..=16
        let cert = match run % 4 {
            0 => {
                let g = gen_erdos_renyi(n, 0.5, &mut graph_stream(200 + run), 1000).unwrap();
                certify_pair(&degree_pair(&g), 200).unwrap()
            }
            1 => {
                let g = gen_multi_subring(n.max(3), 2).unwrap();
                certify_pair(&degree_pair(&g), 300).unwrap()
            }
            2 => {
                let g = gen_ring(n, true).unwrap();
                let w = doubly_stochastic(&g).unwrap();
                certify_pair(&MixingPair::new(w.clone(), w).unwrap(), 300).unwrap()
            }
            _ => {
                let (pull, push) =
                    gen_spanning_tree_pair(n, &mut graph_stream(300 + run)).unwrap();
                certify_pair(&tree_01_matrices(&pull, &push).unwrap(), 200).unwrap()
            }
        };
        let n = cert.n();
        let mut prng = problem_stream(400 + run);
        let problem =
            gen_quadratic_with_spectrum(n, 4, 0.6, 1.0, 0.1, 1.0, &mut prng).unwrap();
        let schedule = StepsizeSchedule {
            gamma0: 0.1,
            decay_factor: 1.0,
            decay_every: 0,
            rescale_by_npi: true,
        };
        let trace = run_spp(
            &problem,
            &cert,
            &schedule,
            &Array1::zeros(4),
            500,
            1,
            run,
            &RunOptions::default(),
        )
        .unwrap();
        worst_inv = worst_inv.max(trace.meta.max_invariant_rel);
        worst_rec = worst_rec.max(trace.meta.max_recursion_rel);
        assert!(
            trace.meta.max_invariant_rel <= 1e-8,
            "run {run}: tracker conservation {} above 1e-8",
            trace.meta.max_invariant_rel
        );
        assert!(
            trace.meta.max_recursion_rel <= 1e-10,
            "run {run}: output recursion {} above 1e-10",
            trace.meta.max_recursion_rel
        );
    }
    println!(
        "acceptance criterion 3 (runtime identities on 20 runs, T=500): PASS (max conservation {worst_inv:.2e}, max recursion {worst_rec:.2e})"
    );
}

#[test]
fn criterion_4_reduction_tests() {
    // Single node: trajectories and serialized traces are bitwise equal.
    let mut prng = problem_stream(500);
    let problem = gen_quadratic_with_spectrum(1, 6, 0.0, 0.7, 0.1, 1.0, &mut prng).unwrap();
    let pair = MixingPair::new(Array2::eye(1), Array2::eye(1)).unwrap();
    let cert = certify_pair(&pair, 20).unwrap();
    let schedule = StepsizeSchedule::constant(0.12);
    let x0 = Array1::from_elem(6, 0.4);
    let opts = RunOptions {
        record_f: true,
        ..RunOptions::default()
    };
    let spp = run_spp(&problem, &cert, &schedule, &x0, 400, 1, 99, &opts).unwrap();
    let sgd = run_centralized_sgd(&problem, &schedule, &x0, 400, 1, 99, &opts).unwrap();
    assert_eq!(trace_to_csv(&spp), trace_to_csv(&sgd), "CSV traces differ");
    for (a, b) in spp.hat_x_final.iter().zip(sgd.hat_x_final.iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    // Noise-free heterogeneous quadratic over a certified random pair
    // reaches numerical stationarity.
    let g = gen_erdos_renyi(8, 0.4, &mut graph_stream(501), 1000).unwrap();
    let cert = certify_pair(&degree_pair(&g), 300).unwrap();
    let mut prng = problem_stream(502);
    let problem = gen_quadratic_with_spectrum(8, 6, 1.0, 0.0, 0.1, 1.0, &mut prng).unwrap();
    let schedule = StepsizeSchedule {
        gamma0: 0.5 / problem.l_smooth,
        decay_factor: 1.0,
        decay_every: 0,
        rescale_by_npi: true,
    };
    let trace = run_spp(
        &problem,
        &cert,
        &schedule,
        &Array1::zeros(6),
        5000,
        1,
        0,
        &RunOptions::default(),
    )
    .unwrap();
    let final_grad = trace.records.last().unwrap().grad_norm_sq;
    assert!(
        final_grad < 1e-16,
        "noise-free run: final grad_norm_sq {final_grad}"
    );
    println!(
        "acceptance criterion 4 (reduction tests): PASS (final grad_norm_sq {final_grad:.2e})"
    );
}

/// Shared setup for criteria 5 and 6: ring gradient tracking on a quadratic
/// with unit noise, returning per-config traces plus problem data.
struct SpeedupCell {
    n: usize,
    cert: Certified,
    problem: pushpull::problems::Problem,
    traces: Vec<Trace>,
}

fn speedup_cells() -> Vec<SpeedupCell> {
    const T: usize = 10_000;
    const GAMMA: f64 = 0.01;
    let mut cells = Vec::new();
    for n in [4usize, 16] {
        let g = gen_ring(n, true).unwrap();
        let w = doubly_stochastic(&g).unwrap();
        let cert = certify_pair(&MixingPair::new(w.clone(), w).unwrap(), 300).unwrap();
        let mut prng = problem_stream(600 + n as u64);
        let problem =
            gen_quadratic_with_spectrum(n, 8, 0.0, 1.0, 0.1, 1.0, &mut prng).unwrap();
        let x_star = problem.minimizer().unwrap();
        let opts = RunOptions {
            reference: Some(x_star),
            ..RunOptions::default()
        };
        let schedule = StepsizeSchedule::constant(GAMMA);
        let traces: Vec<Trace> = (1..=5u64)
            .map(|seed| {
                run_spp(
                    &problem,
                    &cert,
                    &schedule,
                    &Array1::zeros(8),
                    T,
                    1,
                    seed,
                    &opts,
                )
                .unwrap()
            })
            .collect();
        cells.push(SpeedupCell {
            n,
            cert,
            problem,
            traces,
        });
    }
    cells
}

fn steady_state_mse(cell: &SpeedupCell, window: usize) -> f64 {
    let mut acc = 0.0;
    let mut count = 0;
    for trace in &cell.traces {
        let dist = trace.dist_to_reference.as_ref().unwrap();
        for &v in dist.iter().rev().take(window) {
            acc += v;
            count += 1;
        }
    }
    acc / count as f64
}

#[test]
fn criterion_5_linear_speedup_at_desk_scale() {
    let cells = speedup_cells();
    let mse4 = steady_state_mse(&cells[0], 2000);
    let mse16 = steady_state_mse(&cells[1], 2000);
    let ratio = mse4 / mse16;
    // Quadrupling the agents must cut the steady-state error by about 4x.
    assert!(
        (8.0 / 3.0..=6.0).contains(&ratio),
        "MSE ratio {ratio} (mse4 {mse4:.3e}, mse16 {mse16:.3e}) outside [8/3, 6]"
    );
    println!(
        "acceptance criterion 5 (linear speedup, n=4 vs n=16): PASS (MSE ratio {ratio:.3} vs predicted 4)"
    );
}

#[test]
fn criterion_6_convergence_bound_sanity() {
    let cells = speedup_cells();
    for cell in &cells {
        let report = compute_constants(&cell.cert, 1e-10).unwrap();
        let x0 = Array1::zeros(8);
        let x_star = cell.problem.minimizer().unwrap();
        let delta_f =
            cell.problem.f_global(&x0).unwrap() - cell.problem.f_global(&x_star).unwrap();
        let f0 = {
            let mut acc = 0.0;
            for i in 0..cell.n {
                let g = cell.problem.grad(i, &x0).unwrap();
                acc += g.dot(&g);
            }
            acc / cell.n as f64
        };
        let t_max = cell.traces[0].meta.t_max;
        let bundle = theory_bundle(
            &report,
            cell.problem.l_smooth,
            1.0,
            delta_f.max(0.0),
            f0,
            t_max,
        )
        .unwrap();
        let rhs = bound_rhs(&bundle, &report, cell.n, t_max);
        let mut measured = 0.0;
        let mut count = 0usize;
        for trace in &cell.traces {
            for r in &trace.records {
                measured += r.grad_norm_sq;
                count += 1;
            }
        }
        measured /= count as f64;
        assert!(
            measured <= rhs,
            "n={}: time-averaged grad_norm_sq {measured:.3e} exceeds bound {rhs:.3e}",
            cell.n
        );
        println!(
            "acceptance criterion 6 (bound sanity, n={}): PASS (measured {measured:.3e} ≤ bound {rhs:.3e})",
            cell.n
        );
    }
}

#[test]
fn criterion_7_paper_experiment_shape() {
    let n = 20;
    let g = gen_erdos_renyi(n, 0.3, &mut graph_stream(700), 1000).unwrap();
    let cert = certify_pair(&degree_pair(&g), 300).unwrap();
    let mut prng = problem_stream(701);
    let problem = pushpull::problems::gen_logistic(n, 400, 400, 0.01, 0.2, &mut prng).unwrap();
    let schedule = StepsizeSchedule {
        gamma0: 0.1,
        decay_factor: 0.8,
        decay_every: 300,
        rescale_by_npi: true,
    };
    let t_max = 1500;
    // Start inside the regularizer's convex region so the whole horizon
    // stays in the decaying transient; batch 64 keeps the sampled-gradient
    // noise below the descent trend.
    let x0 = Array1::from_elem(400, 0.75);
    let traces: Vec<Trace> = [1u64, 2, 3]
        .iter()
        .map(|&seed| {
            run_spp(
                &problem,
                &cert,
                &schedule,
                &x0,
                t_max,
                64,
                seed,
                &RunOptions::default(),
            )
            .unwrap()
        })
        .collect();
    // Aggregate over seeds, then smooth with a sliding window of 50.
    let len = traces[0].records.len();
    let aggregate: Vec<f64> = (0..len)
        .map(|i| traces.iter().map(|t| t.records[i].grad_norm_sq).sum::<f64>() / 3.0)
        .collect();
    let window = 50;
    let smoothed: Vec<f64> = (0..=len - window)
        .map(|k| aggregate[k..k + window].iter().sum::<f64>() / window as f64)
        .collect();
    for k in 1..smoothed.len() {
        assert!(
            smoothed[k] <= smoothed[k - 1],
            "smoothed trace rises at index {k}: {} -> {}",
            smoothed[k - 1],
            smoothed[k]
        );
    }
    let drop = smoothed.first().unwrap() / smoothed.last().unwrap();
    assert!(
        drop >= 100.0,
        "gradient-norm trace fell only {drop:.1}x over {t_max} iterations"
    );
    println!(
        "acceptance criterion 7 (logistic experiment shape): PASS (monotone after smoothing, drop {drop:.0}x)"
    );
}

#[test]
fn criterion_8_assumption_machinery() {
    // 20 random row-stochastic matrices with positive diagonals over graphs
    // that contain spanning trees: all certifiable.
    let mut certified = 0;
    for i in 0..20u64 {
        let n = 3 + (i as usize * 3) % 12;
        let mut rng = misc_stream(800 + i, 1);
        // Random tree from node 0 plus extra random edges.
        let mut edges = Vec::new();
        for v in 1..n {
            let parent = rng.random_range(0..v);
            edges.push((parent, v));
        }
        for j in 0..n {
            for v in 0..n {
                if j != v && rng.random::<f64>() < 0.2 {
                    edges.push((j, v));
                }
            }
        }
        let g = DirectedGraph::new(n, edges).unwrap();
        let mut w = Array2::<f64>::zeros((n, n));
        for i_node in 0..n {
            w[[i_node, i_node]] = 0.2 + rng.random::<f64>();
            for j_node in g.in_neighbors(i_node) {
                w[[i_node, j_node]] = 0.1 + rng.random::<f64>();
            }
            let s = w.row(i_node).sum();
            for j_node in 0..n {
                w[[i_node, j_node]] /= s;
            }
        }
        let roots = root_set(&g);
        assert!(!roots.is_empty(), "construction guarantees a spanning tree");
        let pi = root_eigenvector(&w, &roots, AssociatedMatrix::R).unwrap();
        let cert = certify_decay(&w, &pi, 400).unwrap();
        assert!(cert.alpha < 1.0);
        assert!(cert.m >= 1 && cert.m <= 400);
        certified += 1;
    }

    // λ = 1 cases are rejected: the identity (no spanning tree in the
    // induced graph) and a periodic permutation (no decay).
    let eye = Array2::<f64>::eye(4);
    let eye_roots = root_set(&pushpull::mixing::induced_graph(&eye).unwrap());
    assert!(matches!(
        root_eigenvector(&eye, &eye_roots, AssociatedMatrix::R),
        Err(Error::AssumptionViolated(_))
    ));
    let mut perm = Array2::<f64>::zeros((4, 4));
    for i in 0..4 {
        perm[[(i + 1) % 4, i]] = 1.0;
    }
    let perm_graph = pushpull::mixing::induced_graph(&perm).unwrap();
    let pi = root_eigenvector(&perm, &root_set(&perm_graph), AssociatedMatrix::R).unwrap();
    assert!(matches!(
        certify_decay(&perm, &pi, 100),
        Err(Error::DecayUncertifiable { .. })
    ));
    println!(
        "acceptance criterion 8 (assumption machinery): PASS ({certified} certified, identity and permutation rejected)"
    );
}
