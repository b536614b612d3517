use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use polmine_core::evaluation::kfold;
use polmine_core::expectation::{expect_formula, FactorDistribution};
use polmine_core::io::{load_log, write_log, Context, Request};
use polmine_core::languages::starbac::{Instant, PeriodicExpression};
use polmine_core::logic::{
    enumerate_random_facts, evaluate, Binding, Formula, Interpretation, StructureBuilder, Term, Value,
};
use polmine_core::miner::softmax_update;
use polmine_core::seed::derive_seed;
use proptest::prelude::*;
use std::collections::BTreeSet;

proptest! {
    #[test]
    fn softmax_is_a_distribution_ordered_by_loss(
        e in prop::collection::vec(-50.0..50.0f64, 1..8),
        beta in 0.0..20.0f64,
        shift in -100.0..100.0f64,
    ) {
        let p = softmax_update(&e, beta);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        for i in 0..e.len() {
            for j in 0..e.len() {
                if e[i] < e[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
        let moved: Vec<f64> = e.iter().map(|x| x + shift).collect();
        for (a, b) in p.iter().zip(softmax_update(&moved, beta)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn folds_partition_the_requests(n in 2usize..200, k in 2usize..10, seed: u64) {
        prop_assume!(n >= k);
        let plan = kfold(n, k, seed).unwrap();
        prop_assert_eq!(&plan, &kfold(n, k, seed).unwrap());
        let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for (i, fold) in plan.folds.iter().enumerate() {
            let train = plan.training(i);
            prop_assert_eq!(train.len() + fold.len(), n);
            prop_assert!(fold.iter().all(|x| train.binary_search(x).is_err()));
        }
    }

    #[test]
    fn derived_seeds_are_distinct(master: u64) {
        let seeds: BTreeSet<u64> = (0..64).map(|i| derive_seed(master, i)).collect();
        prop_assert_eq!(seeds.len(), 64);
        prop_assert_eq!(derive_seed(master, 3), derive_seed(master, 3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalizing_keeps_the_satisfying_instants(
        months in prop::collection::btree_set(1u32..=12, 0..4),
        days in prop::collection::btree_set(1u32..=31, 0..6),
        hours in prop::collection::btree_set(1u32..=24, 0..4),
        window in 1u32..=10,
    ) {
        let e = PeriodicExpression::new(months, days, hours, window);
        let n = e.normalized();
        prop_assert_eq!(n.window, 1);
        for t in Instant::all() {
            prop_assert_eq!(e.satisfied_by(t), n.satisfied_by(t), "{}", t.name());
        }
    }
}

fn rational(x: u32, denom: u32) -> BigRational {
    BigRational::new(BigInt::from(x), BigInt::from(denom))
}

/// Exact `P(φ)` over three Bernoulli facts whose probabilities are
/// multiples of 1/16, compared against the floating-point engine.
#[test]
fn expectation_matches_exact_rationals() {
    let mut b = StructureBuilder::new();
    b.sort("S", vec![Value::sym("a"), Value::sym("b"), Value::sym("c")]).unwrap();
    b.flexible_relation("F", &["S"]).unwrap();
    let s = b.build().unwrap();
    let f = |x: &str| Formula::rel("F", vec![Term::val(Value::sym(x))]);
    let formulas = [
        Formula::or(vec![f("a"), Formula::and(vec![f("b"), Formula::not(f("c"))])]),
        Formula::xor(vec![Formula::and(vec![f("a"), f("b")]), Formula::and(vec![Formula::not(f("a")), f("c")])]),
        Formula::implies(f("a"), Formula::and(vec![f("b"), f("c")])),
    ];
    for (k, formula) in formulas.iter().enumerate() {
        let facts = enumerate_random_facts(formula, &s).unwrap();
        assert_eq!(facts.len(), 3);
        for trial in 0..20u32 {
            let ones: Vec<u32> = (0..3).map(|i| (trial * 7 + i * 5 + k as u32) % 17).collect();
            let q = FactorDistribution::from_pmfs(
                ones.iter()
                    .map(|&x| vec![1.0 - x as f64 / 16.0, x as f64 / 16.0])
                    .collect(),
            );
            let mut exact = BigRational::zero();
            for state in 0..8u32 {
                let values: Vec<u32> = (0..3).map(|i| state >> (2 - i) & 1).collect();
                let interp = Interpretation::new(values.clone());
                if !evaluate(formula, &s, &facts, &interp, &Binding::new()).unwrap() {
                    continue;
                }
                let mut p = BigRational::one();
                for (v, x) in values.iter().zip(&ones) {
                    let one = rational(*x, 16);
                    p *= if *v == 1 { one } else { BigRational::one() - one };
                }
                exact += p;
            }
            let fast = expect_formula(&q, &s, &facts, formula, &Binding::new(), None).unwrap();
            assert!((fast - exact.to_f64().unwrap()).abs() < 1e-12, "formula {k} trial {trial}");
        }
    }
}

#[test]
fn logs_round_trip_through_a_file() {
    let entries = vec![
        Request { user: "u1".into(), permission: "o2".into(), allowed: true, context: None },
        Request { user: "u2".into(), permission: "o1".into(), allowed: false, context: None },
    ];
    let with_context: Vec<Request> = entries
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, mut r)| {
            r.context = Some(Context {
                instant: Instant::new(3, 14 + i as u32, 9),
                user_pos: (0.1 * i as f64, 7.25),
                perm_pos: (1.0 / 3.0, 2.0),
            });
            r
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    for log in [entries, with_context] {
        let path = dir.path().join("log.csv");
        write_log(std::fs::File::create(&path).unwrap(), &log).unwrap();
        assert_eq!(load_log(&path).unwrap(), log);
    }
}
