use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};
use proptest::prelude::*;

use usparse::backbone::{build_backbone, default_alpha_prime, BackboneGraph};
use usparse::gdb::{apply_update, binom_sum, cut_step, degree_step, gdb_run, GdbParams, RuleKind, SparsifierState};
use usparse::graph::{edge_entropy, generate_synthetic, ProbSampler};

/// Pascal-triangle row sums, independent of the crate's binomial helper.
fn pascal_sum(n: i64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::from(0);
    }
    let n = n as usize;
    let mut row = vec![BigInt::from(1)];
    for _ in 0..n {
        let mut next = vec![BigInt::from(1); row.len() + 1];
        for i in 1..row.len() {
            next[i] = &row[i - 1] + &row[i];
        }
        row = next;
    }
    row.iter().take((k as usize).min(n) + 1).sum()
}

fn exact_cut_step(du: f64, dv: f64, big: f64, n: i64, k: i64) -> f64 {
    let r = |x: f64| BigRational::from_f64(x).unwrap();
    let int = |x: BigInt| BigRational::from_integer(x);
    let num = int(pascal_sum(n - 3, k - 1)) * (r(du) + r(dv)) + int(pascal_sum(n - 4, k - 2) * 4) * r(big);
    let den = int(pascal_sum(n - 2, k - 1) * 2);
    (num / den).to_f64().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn binom_sum_matches_pascal(n in 0u64..40, k in -2i64..45) {
        prop_assert_eq!(BigInt::from(binom_sum(n, k)), pascal_sum(n as i64, k));
    }

    #[test]
    fn cut_step_matches_exact_rational(
        du in -3.0f64..3.0, dv in -3.0f64..3.0, big in -20.0f64..20.0,
        n in 4usize..60, k in 1usize..4,
    ) {
        let got = cut_step(du, dv, big, n, k).unwrap();
        let want = exact_cut_step(du, dv, big, n as i64, k as i64);
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{} vs {}", got, want);
    }

    #[test]
    fn k1_cut_step_equals_degree_step(
        du in -5.0f64..5.0, dv in -5.0f64..5.0, big in -50.0f64..50.0, n in 2usize..500,
    ) {
        prop_assert_eq!(cut_step(du, dv, big, n, 1).unwrap(), degree_step(du, dv, 1.0, 1.0));
    }

    #[test]
    fn update_stays_in_unit_interval(p in 0.0f64..=1.0, stp in -2.0f64..2.0, h in 0.0f64..=1.0) {
        let q = apply_update(p, stp, h);
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn zero_h_blocks_entropy_increase(p in 0.0f64..=1.0, stp in -2.0f64..2.0) {
        let c = (p + stp).clamp(0.0, 1.0);
        let q = apply_update(p, stp, 0.0);
        if edge_entropy(c) > edge_entropy(p) {
            prop_assert_eq!(q, p);
        } else {
            prop_assert_eq!(q, c);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sweeps_never_raise_d1(seed in 0u64..10_000, h in 0.0f64..=1.0, alpha in 0.25f64..0.6) {
        // 131 edges, so the connectivity floor is 29/131 < 0.25
        let g = generate_synthetic(30, 0.3, ProbSampler::Uniform { low: 0.0, high: 1.0 }, seed).unwrap();
        let bb = build_backbone(&g, alpha, default_alpha_prime(&g, alpha), seed).unwrap();
        for rule in [RuleKind::DegreeAbsolute, RuleKind::CutK(1)] {
            let out = gdb_run(&g, &bb, &GdbParams { h, rule, max_sweeps: 20, ..GdbParams::default() }).unwrap();
            for w in out.d1_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", out.d1_trace);
            }
        }
    }

    #[test]
    fn cut_k1_runs_like_degree_rule(seed in 0u64..10_000, h in 0.0f64..=1.0) {
        let g = generate_synthetic(25, 0.3, ProbSampler::Beta { alpha: 2.0, beta: 3.0 }, seed).unwrap();
        let bb = build_backbone(&g, 0.4, default_alpha_prime(&g, 0.4), seed).unwrap();
        let a = gdb_run(&g, &bb, &GdbParams { h, rule: RuleKind::DegreeAbsolute, ..GdbParams::default() }).unwrap();
        let b = gdb_run(&g, &bb, &GdbParams { h, rule: RuleKind::CutK(1), ..GdbParams::default() }).unwrap();
        prop_assert_eq!(a.graph, b.graph);
        prop_assert_eq!(a.d1_trace, b.d1_trace);
    }

    #[test]
    fn output_edges_equal_backbone(seed in 0u64..10_000, k in 1usize..6) {
        let g = generate_synthetic(20, 0.4, ProbSampler::Uniform { low: 0.0, high: 1.0 }, seed).unwrap();
        let bb = build_backbone(&g, 0.3, default_alpha_prime(&g, 0.3), seed).unwrap();
        let out = gdb_run(&g, &bb, &GdbParams { rule: RuleKind::CutK(k), ..GdbParams::default() }).unwrap();
        let pairs: Vec<_> = out.graph.edges().iter().map(|e| (e.u, e.v)).collect();
        let want: Vec<_> = bb.edges().iter().map(|&id| (g.edge(id).u, g.edge(id).v)).collect();
        prop_assert_eq!(pairs, want);
        prop_assert!(out.graph.edges().iter().all(|e| (0.0..=1.0).contains(&e.p)));
    }

    #[test]
    fn incremental_state_tracks_recomputation(seed in 0u64..10_000, updates in proptest::collection::vec((0usize..1000, 0.0f64..=1.0), 1..200)) {
        let g = generate_synthetic(15, 0.5, ProbSampler::Uniform { low: 0.0, high: 1.0 }, seed).unwrap();
        let bb = BackboneGraph::full(&g);
        let mut s = SparsifierState::new(&g, &bb).unwrap();
        for (i, p) in updates {
            s.set_prob(i % g.edge_count(), p);
        }
        let (disc, gap) = s.from_scratch();
        for (a, b) in disc.iter().zip(s.vertex_disc()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!((gap - s.mass_gap()).abs() < 1e-9);
    }
}
