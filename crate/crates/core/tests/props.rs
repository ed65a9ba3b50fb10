//! Randomized invariants over seeded generated instances.

mod common;

use cnl_mcp::cuts::{make_oa_cuts, make_sc_cuts, Aggregation, CutPool};
use cnl_mcp::drivers::{greedy_solve, objective_of_open};
use cnl_mcp::gen::{generate, GenConfig};
use cnl_mcp::io::{from_file, to_file};
use cnl_mcp::master::evaluate_pool;
use cnl_mcp::reform::lift;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Choice probabilities form a distribution over the available
    /// facilities (open candidates plus competitors).
    #[test]
    fn probabilities_form_a_distribution(seed in 0u64..10_000) {
        let inst = common::random_sharing(seed);
        let x = common::random_feasible(&inst, seed ^ 0xabcd);
        for t in 0..inst.num_types() {
            let mut sum = 0.0;
            for i in 0..inst.num_facilities() {
                if i < inst.m() && !x[i] {
                    prop_assert!(inst.choice_probability(t, i, &x).is_err());
                    continue;
                }
                let p = inst.choice_probability(t, i, &x).unwrap();
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
                sum += p;
            }
            prop_assert!((sum - 1.0).abs() <= 1e-9, "sum {sum}");
        }
    }

    /// F is bounded by total demand and monotone in the open set.
    #[test]
    fn objective_is_bounded_and_monotone(seed in 0u64..10_000) {
        let inst = common::random_sharing(seed);
        let x = common::random_feasible(&inst, seed ^ 0x1234);
        let open: Vec<usize> = (0..inst.m()).filter(|&i| x[i]).collect();
        let f = objective_of_open(&inst, &open);
        prop_assert!(f >= -1e-12 && f <= inst.total_demand() + 1e-12);
        for i in 0..inst.m() {
            if !x[i] {
                let mut bigger = open.clone();
                bigger.push(i);
                bigger.sort_unstable();
                prop_assert!(objective_of_open(&inst, &bigger) >= f - 1e-12);
            }
        }
    }

    /// The lifted point reproduces the objective: sum_t phi_t = F(x).
    #[test]
    fn lift_identity_holds(seed in 0u64..10_000) {
        let inst = common::random_sharing(seed);
        let x = common::random_feasible(&inst, seed ^ 0x77);
        let open: Vec<usize> = (0..inst.m()).filter(|&i| x[i]).collect();
        let p = lift(&inst, &x).unwrap();
        let f = objective_of_open(&inst, &open);
        prop_assert!((p.total_phi() - f).abs() <= 1e-9 * inst.total_demand().max(1.0));
        for t in 0..inst.num_types() {
            prop_assert!(p.phi[t] >= -1e-12 && p.phi[t] <= inst.q(t) + 1e-12);
        }
    }

    /// Any anchored pool upper-bounds F at any feasible point, under every
    /// aggregation level.
    #[test]
    fn master_relaxation_upper_bounds_objective(seed in 0u64..10_000) {
        let inst = common::random_sharing(seed);
        let anchor = common::random_feasible(&inst, seed ^ 0xbeef);
        let probe = common::random_feasible(&inst, seed ^ 0xf00d);
        for agg in [Aggregation::PerType, Aggregation::Grouped(2), Aggregation::Single] {
            let mut pool = CutPool::new(&inst, agg);
            let p = lift(&inst, &anchor).unwrap();
            pool.add_oa_cuts(make_oa_cuts(&inst, &p).unwrap());
            pool.add_sc_cuts(make_sc_cuts(&inst, &anchor));
            let open: Vec<usize> = (0..inst.m()).filter(|&i| probe[i]).collect();
            let f = objective_of_open(&inst, &open);
            let (v, point) = evaluate_pool(&inst, &pool, &probe);
            prop_assert!(v >= f - 1e-8, "{v} below {f} under {agg:?}");
            prop_assert!((point.total_phi() - v).abs() <= 1e-9);
        }
    }

    /// Exchange passes never hurt the greedy construction.
    #[test]
    fn exchange_only_improves_greedy(seed in 0u64..10_000) {
        let inst = common::random_sharing(seed);
        let plain = greedy_solve(&inst, false).unwrap();
        let improved = greedy_solve(&inst, true).unwrap();
        prop_assert!(improved.lb >= plain.lb - 1e-12);
    }

    /// Generated instances survive a file round trip unchanged.
    #[test]
    fn instance_file_round_trip_is_lossless(seed in 0u64..10_000) {
        let inst = common::random_sharing(seed);
        let file = to_file(&inst, serde_json::json!({}));
        let text = serde_json::to_string(&file).unwrap();
        let back = from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(format!("{:?}", back.data()), format!("{:?}", inst.data()));
    }

    /// Generation is a pure function of its config.
    #[test]
    fn generation_is_deterministic(seed in 0u64..10_000) {
        let cfg = GenConfig { seed, ..Default::default() };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        prop_assert_eq!(format!("{:?}", a.data()), format!("{:?}", b.data()));
    }

    /// Membership degrees stay normalized per facility and type.
    #[test]
    fn memberships_are_normalized(seed in 0u64..10_000) {
        let inst = common::random_sharing(seed);
        for t in 0..inst.num_types() {
            for i in 0..inst.num_facilities() {
                let s: f64 = (0..inst.num_nests()).map(|n| inst.alpha(t, i, n)).sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
            }
            for n in 0..inst.num_nests() {
                let sig = inst.sigma(t, n);
                prop_assert!(sig > 0.0 && sig <= 1.0);
            }
        }
    }
}
