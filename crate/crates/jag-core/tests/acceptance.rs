//! Acceptance suite: every release criterion as one test, each printing a
//! pass line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Tolerances are pinned here, in code.

use jag_core::affiliation::{Affiliation, CommunityId};
use jag_core::generator::{
    coattendance_prob_exact, planted_chain, sample_agm_graph, sample_jag_graph,
    simulate_event_process, ProcessConfig,
};
use jag_core::graph::NodeId;
use jag_core::inference::{detect_communities, propose_move, McmcConfig};
use jag_core::metrics::{f1_score, omega_index_exact, overlapping_nmi, Cover};
use jag_core::models::{agm_edge_prob, fit_alpha, log_likelihood_delta, AgmParams, GridSpec,
    ModelParams};
use jag_core::testutil::{log_likelihood_naive, random_affiliation, rel_close};
use jag_core::validate::{
    binning_experiment, isolated_density_experiment, sample_uniform_pairs, IsolatedConfig,
};

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criterion 1: Exact permutation enumeration of the event process equals the Jaccard
/// ratio, as rationals, on 200 random affiliations (<= 8 communities,
/// <= 12 nodes), for every node pair. Zero tolerance.
#[test]
fn acceptance_01_coattendance_oracle_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..200 {
        let n = rng.random_range(2..=12);
        let c = rng.random_range(1..=8);
        let a = random_affiliation(n, c, 0.35, &mut rng);
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                let (inter, union) = a.jaccard_counts(NodeId(u), NodeId(v)).unwrap();
                let expected = if union == 0 {
                    Ratio::from_integer(0)
                } else {
                    Ratio::new(inter as u64, union as u64)
                };
                let exact = coattendance_prob_exact(&a, NodeId(u), NodeId(v)).unwrap();
                assert_eq!(
                    exact, expected,
                    "pair ({u}, {v}) with counts ({inter}, {union})"
                );
            }
        }
    }
    println!("[PASS] criterion 1: permutation oracle equals the Jaccard ratio exactly on 200 random affiliations");
}

/// Criterion 2: Event-process convergence: 20 pairs with distinct Jaccard values,
/// 50,000 rounds at meet probability 1; co-attendance frequency within 3
/// binomial sigma of J.
#[test]
fn acceptance_02_event_process_convergence() {
    // Pair i occupies nodes (2i, 2i+1); node A holds one community, node B
    // holds the same plus i+1 others, giving J = 1/(i+2), all distinct.
    let pair_count = 20usize;
    let mut lists: Vec<Vec<u32>> = Vec::new();
    let mut next_comm = 0u32;
    let mut expected_j = Vec::new();
    for i in 0..pair_count {
        let union = i + 2;
        let base = next_comm;
        next_comm += union as u32;
        lists.push(vec![base]);
        lists.push((base..base + union as u32).collect());
        expected_j.push(1.0 / union as f64);
    }
    let mut a = Affiliation::new(2 * pair_count, next_comm as usize);
    for (u, comms) in lists.iter().enumerate() {
        for &c in comms {
            a.add_membership(NodeId(u as u32), CommunityId(c)).unwrap();
        }
    }

    let rounds = 50_000u64;
    let cfg = ProcessConfig::new(rounds, 1.0f64, 208).unwrap();
    let (_, counts) = simulate_event_process(&a, &cfg).unwrap();
    for (i, &j) in expected_j.iter().enumerate() {
        let (u, v) = (NodeId(2 * i as u32), NodeId(2 * i as u32 + 1));
        let freq = counts.get(u, v) as f64 / rounds as f64;
        let sigma = (j * (1.0 - j) / rounds as f64).sqrt();
        assert!(
            (freq - j).abs() <= 3.0 * sigma,
            "pair {i}: frequency {freq} outside 3 sigma of J = {j}"
        );
    }
    println!("[PASS] criterion 2: co-attendance frequency within 3 sigma of J for 20 distinct Jaccard values over 50000 rounds");
}

/// Criterion 3: Linearity recovery: a 2,010-node, 20-community generated graph at
/// alpha = 0.5; one million uniform pairs in 10 bins give a fitted slope in
/// [0.45, 0.55] and every bin with >= 1,000 pairs sits within 3 sigma of
/// alpha * mean-J.
#[test]
fn acceptance_03_linearity_recovery() {
    let alpha = 0.5;
    let eps = 1e-8;
    let a = planted_chain(20, 110, 10).unwrap();
    assert!(a.node_count() >= 2000 && a.community_count() >= 20);
    let params = ModelParams::new(alpha, eps).unwrap();
    let g = sample_jag_graph(&a, &params, 303);

    let mut rng = ChaCha8Rng::seed_from_u64(304);
    let pairs = sample_uniform_pairs(a.node_count(), 1_000_000, &mut rng).unwrap();
    let report = binning_experiment::<f64>(&g, &a, &pairs, 10, 30).unwrap();

    assert!(
        (0.45..=0.55).contains(&report.fitted_slope),
        "fitted slope {} outside [0.45, 0.55]",
        report.fitted_slope
    );
    for (i, bin) in report.bins.iter().enumerate() {
        if bin.pair_count < 1000 {
            continue;
        }
        let expected = eps + (1.0 - eps) * alpha * bin.mean_jaccard;
        let sigma = (expected * (1.0 - expected) / bin.pair_count as f64).sqrt();
        assert!(
            (bin.p_edge - expected).abs() <= 3.0 * sigma,
            "bin {i}: p_edge {} outside 3 sigma of {expected}",
            bin.p_edge
        );
    }
    println!(
        "[PASS] criterion 3: fitted slope {:.4} in [0.45, 0.55]; populated bins within 3 sigma of alpha * J",
        report.fitted_slope
    );
}

/// Criterion 4: Isolated-community density estimates alpha: five isolated communities
/// of size 40 at alpha in {0.26, 0.41, 0.71}; per-alpha mean density within
/// 0.03 of alpha, standard deviation at most 0.03.
#[test]
fn acceptance_04_isolated_density_equals_alpha() {
    for (i, &alpha) in [0.26, 0.41, 0.71].iter().enumerate() {
        let a = planted_chain(5, 40, 0).unwrap();
        let params = ModelParams::new(alpha, 1e-8).unwrap();
        let g = sample_jag_graph(&a, &params, 404 + i as u64);
        let report = isolated_density_experiment::<f64>(
            &g,
            &a,
            &IsolatedConfig {
                min_size: 5,
                max_count: 5,
                seed: 405,
                comparison_alpha: Some(alpha),
            },
        )
        .unwrap();
        assert_eq!(report.communities.len(), 5);
        assert!(
            (report.mean - alpha).abs() <= 0.03,
            "alpha {alpha}: mean density {} strays past 0.03",
            report.mean
        );
        assert!(
            report.std <= 0.03,
            "alpha {alpha}: density std {} above 0.03",
            report.std
        );
        println!(
            "[PASS] criterion 4 (alpha = {alpha}): density {:.3} +/- {:.3}",
            report.mean, report.std
        );
    }
}

/// Criterion 5: Incremental likelihood deltas match a naive O(n^2) recomputation
/// within 1e-9 relative, over 100 random instances and random moves of all
/// kinds.
#[test]
fn acceptance_05_incremental_delta_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..100 {
        let n = rng.random_range(4..=60);
        let c = rng.random_range(1..=8);
        let a = random_affiliation(n, c, 0.25, &mut rng);
        let g = jag_core::testutil::random_graph(n, 0.15, &mut rng);
        let params = ModelParams::new(rng.random_range(0.05..1.0), 1e-8).unwrap();
        for _ in 0..5 {
            let Ok(mv) = propose_move(&a, &mut rng) else {
                break;
            };
            let delta: f64 = log_likelihood_delta(&g, &a, &params, &mv).unwrap();
            let before: f64 = log_likelihood_naive(&g, &a, &params);
            let mut mutated = a.clone();
            mv.apply(&mut mutated).unwrap();
            let after: f64 = log_likelihood_naive(&g, &mutated, &params);
            assert!(
                rel_close(delta, after - before, 1e-9),
                "incremental {delta} vs naive {}",
                after - before
            );
        }
    }
    println!("[PASS] criterion 5: incremental deltas match naive recomputation within 1e-9 relative on 100 instances");
}

/// Criterion 6: Grid fit recovers the generating alpha within 0.05 on planted
/// assignments with true alpha in {0.2, 0.5, 0.8} and >= 100 nodes per
/// community.
#[test]
fn acceptance_06_alpha_grid_fit() {
    for (i, &alpha) in [0.2, 0.5, 0.8].iter().enumerate() {
        let a = planted_chain(3, 120, 20).unwrap();
        let params = ModelParams::new(alpha, 1e-8).unwrap();
        let g = sample_jag_graph(&a, &params, 606 + i as u64);
        let (alpha_hat, _): (f64, f64) =
            fit_alpha(&g, &a, &GridSpec::with_step(0.01), 1e-8).unwrap();
        assert!(
            (alpha_hat - alpha).abs() <= 0.05,
            "true alpha {alpha}, fitted {alpha_hat}"
        );
        println!("[PASS] criterion 6 (alpha = {alpha}): fitted {alpha_hat:.3}");
    }
}

/// Criterion 7: Detection recovery: 3 communities of 30 with pairwise overlap 5 at
/// alpha = 0.8; |C| = 3, 5 restarts, default patience. Best-match F1 against
/// the planted cover averages >= 0.85 over 10 seeds and the best-likelihood
/// trace is monotone in every run.
#[test]
fn acceptance_07_detection_recovery() {
    let planted = planted_chain(3, 30, 5).unwrap();
    let truth = planted.to_cover();
    let params = ModelParams::new(0.8, 1e-8).unwrap();

    let mut f1_sum = 0.0;
    let seeds = 10u64;
    for seed in 0..seeds {
        let g = sample_jag_graph(&planted, &params, 700 + seed);
        let mut cfg = McmcConfig::<f64>::new(3);
        cfg.restarts = 5;
        cfg.seed = seed;
        let result = detect_communities(&g, &cfg).unwrap();

        let mut best = f64::NEG_INFINITY;
        for entry in &result.trace {
            let running = best.max(entry.log_likelihood);
            assert!(running >= best, "best-likelihood trace decreased");
            best = running;
        }

        let f1: f64 = f1_score(&truth, &result.best_affiliation.to_cover()).unwrap();
        f1_sum += f1;
    }
    let mean_f1 = f1_sum / seeds as f64;
    assert!(
        mean_f1 >= 0.85,
        "mean best-match F1 {mean_f1} below 0.85 over {seeds} seeds"
    );
    println!("[PASS] criterion 7: mean best-match F1 {mean_f1:.3} >= 0.85 over 10 seeds; traces monotone");
}

/// Criterion 8: Metric golden values: identical covers score 1.0 on all three metrics,
/// omega on the worked 4-node example is exactly -1/5, and the F1 hand
/// example is 0.75 within 1e-12.
#[test]
fn acceptance_08_metric_golden_values() {
    let cover = Cover::new(vec![vec![0, 1, 2], vec![2, 3, 4], vec![5]]).unwrap();
    let f1_same: f64 = f1_score(&cover, &cover).unwrap();
    let nmi_same: f64 = overlapping_nmi(&cover, &cover).unwrap();
    let omega_same = omega_index_exact(&cover, &cover, None).unwrap();
    assert_eq!(f1_same, 1.0);
    assert!((nmi_same - 1.0).abs() < 1e-12);
    assert_eq!(omega_same, Ratio::from_integer(1));

    let truth = Cover::new(vec![vec![1, 2], vec![3], vec![4]]).unwrap();
    let detected = Cover::new(vec![vec![3, 4], vec![1], vec![2]]).unwrap();
    let omega = omega_index_exact(&truth, &detected, None).unwrap();
    assert_eq!(omega, Ratio::new(-1, 5));
    assert_eq!(omega.to_f64().unwrap(), -0.2);

    let t = Cover::new(vec![vec![1, 2, 3, 4]]).unwrap();
    let d = Cover::new(vec![vec![1, 2, 3, 5]]).unwrap();
    let f1: f64 = f1_score(&t, &d).unwrap();
    assert!((f1 - 0.75).abs() <= 1e-12);
    println!("[PASS] criterion 8: metric golden values (identity 1.0, omega -1/5 exact, F1 0.75)");
}

/// Criterion 10: Coin-flip model evaluator: two shared communities at p = 0.5 give
/// probability 0.75 exactly, and the sampled edge frequency over 100,000
/// trials is within 3 sigma.
#[test]
fn acceptance_10_agm_evaluator() {
    let mut a = Affiliation::new(2, 2);
    for u in 0..2 {
        for c in 0..2 {
            a.add_membership(NodeId(u), CommunityId(c)).unwrap();
        }
    }
    let params = AgmParams::uniform(2, 0.5f64).unwrap();
    let p = agm_edge_prob(&a, &params, NodeId(0), NodeId(1), 0.0).unwrap();
    assert_eq!(p, 0.75);

    let trials = 100_000u64;
    let mut edges = 0u64;
    for seed in 0..trials {
        let g = sample_agm_graph(&a, &params, 0.0, seed).unwrap();
        if g.has_edge(NodeId(0), NodeId(1)) {
            edges += 1;
        }
    }
    let freq = edges as f64 / trials as f64;
    let sigma = (0.75 * 0.25 / trials as f64).sqrt();
    assert!(
        (freq - 0.75).abs() <= 3.0 * sigma,
        "sampled frequency {freq} outside 3 sigma of 0.75"
    );
    println!("[PASS] criterion 10: coin-flip evaluator 0.75 exact; sampled frequency {freq:.4} within 3 sigma");
}
