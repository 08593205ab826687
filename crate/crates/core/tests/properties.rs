mod common;

use common::*;
use mbp_core::analysis::{
    blocking_pairs, enumerate_envyfree, is_envyfree, is_pareto_efficient, pareto_improvable_students,
};
use mbp_core::conditions::{
    check_ergin_acyclicity, check_gmbp, check_mbp_everywhere, check_sequential_mbp, simplify,
    simplify_in_order,
};
use mbp_core::harness::{evaluate_market, MetricFlags};
use mbp_core::market::{
    market_from_json, market_to_json, ordinal_from_cardinal, restrict_priorities,
    validate_market, AcceptabilityRule, Assignment, CardinalMatrices, Market,
};
use mbp_core::mechanisms::{ia_truthful, school_da, student_da, ttc, Mechanism};
use mbp_core::simgen::{build_market, draw, CardinalParams};
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn simplify_is_idempotent(seed in any::<u64>()) {
        let market = random_market(&mut rng(seed), 12, 5, 3);
        let once = simplify(&market);
        let twice = simplify(&once.market);
        prop_assert_eq!(&twice.market, &once.market);
        prop_assert_eq!(twice.rounds, 0);
    }

    #[test]
    fn simplified_market_satisfies_both_clauses(seed in any::<u64>()) {
        let market = random_market(&mut rng(seed), 12, 5, 3);
        let s = simplify(&market);
        prop_assert!(validate_market(&s.market).is_ok());
        for i in 0..market.n() {
            let short = &s.market.preferences[i];
            prop_assert_eq!(&market.preferences[i][..short.len()], &short[..]);
            match s.safe_school[i] {
                Some(safe) => {
                    prop_assert_eq!(short.last(), Some(&safe));
                    let pos = s.market.priorities[safe].iter().position(|&j| j == i).unwrap();
                    prop_assert!(pos < s.market.capacities[safe] as usize);
                    // nothing earlier on the list is safe
                    for &t in &short[..short.len() - 1] {
                        let p = s.market.priorities[t].iter().position(|&j| j == i).unwrap();
                        prop_assert!(p >= s.market.capacities[t] as usize);
                    }
                }
                None => prop_assert_eq!(short, &market.preferences[i]),
            }
        }
    }

    #[test]
    fn restrict_is_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let market = random_market(&mut r, 10, 5, 2);
        let raw: Vec<Vec<usize>> = (0..market.m()).map(|_| shuffled(&mut r, market.n())).collect();
        let once = restrict_priorities(&raw, &market.preferences);
        prop_assert_eq!(restrict_priorities(&once, &market.preferences), once.clone());
        prop_assert!(Market::new(market.capacities.clone(), market.preferences.clone(), once).is_ok());
    }

    #[test]
    fn simplification_scan_order_is_irrelevant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let market = random_market(&mut r, 12, 5, 3);
        let order = shuffled(&mut r, market.n());
        prop_assert_eq!(simplify_in_order(&market, &order), simplify(&market).market);
    }

    #[test]
    fn greedy_outcome_does_not_depend_on_scan_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let market = random_market(&mut r, 12, 5, 3);
        let expected = check_sequential_mbp(&market).is_some();
        for _ in 0..20 {
            let order = shuffled(&mut r, market.n());
            prop_assert_eq!(greedy_sequential_in_order(&market, &order), expected);
        }
    }

    #[test]
    fn certificates_replay(seed in any::<u64>()) {
        let market = mixed_market(&mut rng(seed), seed as usize);
        if let Some(cert) = check_sequential_mbp(&market) {
            prop_assert_eq!(cert.verify(&market), Ok(()));
            let mut counts = vec![0u32; market.m()];
            for &(_, a) in &cert.steps {
                if let Assignment::School(s) = a {
                    counts[s] += 1;
                }
            }
            prop_assert!(counts.iter().zip(&market.capacities).all(|(c, q)| c <= q));
        }
        if let Some((s, cert)) = check_gmbp(&market) {
            prop_assert_eq!(cert.verify(&s.market), Ok(()));
        }
    }

    #[test]
    fn per_market_implications(seed in any::<u64>()) {
        let market = mixed_market(&mut rng(seed), seed as usize);
        let e = evaluate_market(&market, MetricFlags::default());
        prop_assert_eq!(e.check_implications(), Ok(()));
        if e.seq_mbp == Some(true) {
            prop_assert_eq!(e.gmbp, Some(true));
        }
        if e.gmbp == Some(true) {
            prop_assert_eq!(e.da_efficient, Some(true));
            prop_assert_eq!(student_da(&market), school_da(&market));
        }
    }

    #[test]
    fn sequential_mbp_forces_ttc_with_unit_seats(seed in any::<u64>()) {
        let market = random_market(&mut rng(seed), 20, 8, 1);
        if check_sequential_mbp(&market).is_some() {
            let da = student_da(&market);
            prop_assert_eq!(&ttc(&market), &da);
            prop_assert_eq!(&school_da(&market), &da);
        }
    }

    #[test]
    fn mechanisms_are_feasible_and_individually_rational(seed in any::<u64>()) {
        let market = mixed_market(&mut rng(seed), seed as usize);
        for mech in Mechanism::ALL {
            let a = mech.run(&market);
            prop_assert_eq!(a.len(), market.n());
            prop_assert!(a.is_feasible(&market), "{} infeasible", mech.name());
            prop_assert!(a.is_individually_rational(&market), "{} not IR", mech.name());
            prop_assert_eq!(mech.run(&market), a);
        }
    }

    #[test]
    fn deferred_acceptance_is_unblocked(seed in any::<u64>()) {
        let market = mixed_market(&mut rng(seed), seed as usize);
        for a in [student_da(&market), school_da(&market)] {
            prop_assert!(blocking_pairs(&market, &a).is_empty());
            prop_assert!(is_envyfree(&market, &a));
        }
    }

    #[test]
    fn ttc_is_efficient(seed in any::<u64>()) {
        let market = mixed_market(&mut rng(seed), seed as usize);
        let t = ttc(&market);
        prop_assert!(is_pareto_efficient(&market, &t));
        prop_assert!(pareto_improvable_students(&market, &t).is_empty());
    }

    #[test]
    fn student_da_weakly_dominates_school_da(seed in any::<u64>()) {
        let market = mixed_market(&mut rng(seed), seed as usize);
        let (a, b) = (student_da(&market), school_da(&market));
        for i in 0..market.n() {
            prop_assert!(rank(&market, i, a.get(i)) <= rank(&market, i, b.get(i)));
        }
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let market = mixed_market(&mut rng(seed), seed as usize);
        prop_assert_eq!(market_from_json(&market_to_json(&market)).unwrap(), market);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn tiny_oracles_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let market = tiny_market(&mut r);
        let set = brute_envyfree_set(&market);
        prop_assert_eq!(&enumerate_envyfree(&market).unwrap(), &set);
        prop_assert_eq!(&enumerate_envyfree(&simplify(&market).market).unwrap(), &set);
        prop_assert!(set.contains(&student_da(&market)));
        prop_assert!(set.contains(&school_da(&market)));
        prop_assert_eq!(check_sequential_mbp(&market).is_some(), brute_sequential_mbp(&market));
        if check_gmbp(&market).is_some() {
            prop_assert_eq!(set.len(), 1);
        }
        let mu = random_feasible_allocation(&mut r, &market);
        prop_assert_eq!(is_pareto_efficient(&market, &mu), brute_pareto_efficient(&market, &mu));
        prop_assert_eq!(pareto_improvable_students(&market, &mu), brute_improvable(&market, &mu));
        prop_assert_eq!(is_envyfree(&market, &mu), brute_envyfree(&market, &mu));
    }

    #[test]
    fn mbp_everywhere_implies_sequential_with_unit_seats(seed in any::<u64>()) {
        let market = random_market(&mut rng(seed), 8, 4, 1);
        if check_mbp_everywhere(&market).unwrap() {
            prop_assert!(check_sequential_mbp(&market).is_some());
        }
    }

    #[test]
    fn shared_match_quality_satisfies_mbp_everywhere(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = CardinalParams {
            lambda: 1.0,
            delta: 1.0,
            alpha: 1.0,
            beta: 1.0,
            n: r.gen_range(1..=12),
            m: r.gen_range(1..=8),
            q: r.gen_range(1..=3),
        };
        let market = build_market(&p, &draw(&p, r.gen())).unwrap();
        prop_assert!(check_mbp_everywhere(&market).unwrap());
    }

    #[test]
    fn common_student_quality_priorities_are_acyclic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = CardinalParams {
            lambda: r.gen(),
            delta: r.gen(),
            alpha: 1.0,
            beta: 0.0,
            n: r.gen_range(3..=40),
            m: r.gen_range(2..=6),
            q: r.gen_range(1..=4),
        };
        let market = build_market(&p, &draw(&p, r.gen())).unwrap();
        prop_assert!(check_ergin_acyclicity(&market).unwrap());
    }

    #[test]
    fn ordinal_conversion_preserves_strict_orders(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (n, m) = (r.gen_range(1..=15), r.gen_range(1..=6));
        // coarse values so that ties occur
        let u: Vec<f64> = (0..n * m).map(|_| f64::from(r.gen_range(0..5u8)) / 4.0).collect();
        let pi: Vec<f64> = (0..n * m).map(|_| f64::from(r.gen_range(0..5u8)) / 4.0).collect();
        let c = CardinalMatrices::new(n, m, u.clone(), pi.clone()).unwrap();
        let market = ordinal_from_cardinal(&c, AcceptabilityRule::All, vec![1; m]).unwrap();
        prop_assert!(validate_market(&market).is_ok());
        for i in 0..n {
            for w in market.preferences[i].windows(2) {
                let (a, b) = (u[i * m + w[0]], u[i * m + w[1]]);
                prop_assert!(a > b || (a == b && w[0] < w[1]));
            }
        }
        for s in 0..m {
            for w in market.priorities[s].windows(2) {
                let (a, b) = (pi[w[0] * m + s], pi[w[1] * m + s]);
                prop_assert!(a > b || (a == b && w[0] < w[1]));
            }
        }
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>()) {
        let p = CardinalParams { lambda: 0.5, delta: 0.3, alpha: 0.9, beta: 0.6, n: 40, m: 5, q: 8 };
        let a = build_market(&p, &draw(&p, seed)).unwrap();
        let b = build_market(&p, &draw(&p, seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(ia_truthful(&a), ia_truthful(&b));
    }
}

#[test]
fn mbp_everywhere_with_full_capacities_does_not_imply_sequential() {
    // every submarket has a pair within the original two seats of s1, but
    // once i6 takes one of them only i2 fits, and i2 is behind i5 at s3
    let market = Market::new(
        vec![2, 2, 1],
        vec![vec![1], vec![2, 1, 0], vec![], vec![0, 1, 2], vec![0, 2, 1], vec![0, 1, 2]],
        vec![vec![5, 1, 3, 4], vec![0, 4, 1, 5, 3], vec![4, 1, 3, 5]],
    )
    .unwrap();
    assert!(check_mbp_everywhere(&market).unwrap());
    assert!(check_sequential_mbp(&market).is_none());
    assert!(!brute_sequential_mbp(&market));
}
