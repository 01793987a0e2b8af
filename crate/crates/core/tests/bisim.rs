mod common;

use acpk::bisim::{bisimilar, check_axiom_schema, completed_traces, partition, trace_equivalent, End, GenConfig};
use acpk::rewrite::{find_axiom, Axiom};
use common::{lts, lts_from_bits, naive_bisimilar, random_lts};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3_000))]

    #[test]
    fn agrees_with_naive_fixpoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_lts(&mut rng, 4), random_lts(&mut rng, 4));
        prop_assert_eq!(bisimilar(&a, &b).equivalent, naive_bisimilar(&a, &b));
    }

    #[test]
    fn is_an_equivalence(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_lts(&mut rng, 3), random_lts(&mut rng, 3), random_lts(&mut rng, 3));
        prop_assert!(bisimilar(&a, &a).equivalent);
        prop_assert_eq!(bisimilar(&a, &b).equivalent, bisimilar(&b, &a).equivalent);
        if bisimilar(&a, &b).equivalent && bisimilar(&b, &c).equivalent {
            prop_assert!(bisimilar(&a, &c).equivalent);
        }
    }

    #[test]
    fn bisimilar_systems_are_trace_equivalent(seed in any::<u64>(), depth in 0..6usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_lts(&mut rng, 3), random_lts(&mut rng, 3));
        if bisimilar(&a, &b).equivalent {
            prop_assert!(trace_equivalent(&a, &b, depth));
        }
    }

    #[test]
    fn partition_covers_the_union(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_lts(&mut rng, 4), random_lts(&mut rng, 4));
        let p = partition(&a, &b);
        let mut all: Vec<usize> = p.blocks.iter().flatten().copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..a.states + b.states).collect::<Vec<_>>());
    }
}

#[test]
fn examples() {
    assert!(bisimilar(&lts("a+b"), &lts("b+a")).equivalent);
    assert!(bisimilar(&lts("1"), &lts("1")).equivalent);
    let r = bisimilar(&lts("a;(b+c)"), &lts("a;b + a;c"));
    assert!(!r.equivalent && !r.bounded_only);
    let e = r.evidence.unwrap();
    assert_eq!(e.trace, ["a"]);
    assert!(e.to_string().starts_with("after a: "), "{e}");
    assert!(trace_equivalent(&lts("a;(b+c)"), &lts("a;b + a;c"), 4));
    assert!(!trace_equivalent(&lts("a"), &lts("b"), 4));
}

#[test]
fn success_payloads_are_observable() {
    assert!(!bisimilar(&lts("1^1"), &lts("1^2")).equivalent);
    assert!(bisimilar(&lts("a^true"), &lts("a^true")).equivalent);
}

#[test]
fn truncation_is_only_bisimilar_to_truncation() {
    let mut a = lts_from_bits(2, 0b100, 0, 0);
    let b = a.clone();
    a.truncated.insert(1);
    let r = bisimilar(&a, &b);
    assert!(!r.equivalent && r.bounded_only);
}

#[test]
fn completed_traces_are_tagged() {
    let got = completed_traces(&lts("a;b + a;0"), 4);
    assert!(got.contains(&(vec!["a".into(), "b".into()], End::Success(None))));
    assert!(got.contains(&(vec!["a".into()], End::Deadlock)));
    assert!(lts("a;0").outcomes.is_empty());
    let raised = completed_traces(&lts("a;raise"), 4);
    assert_eq!(raised, [(vec!["a".to_string()], End::Failure(None))].into());
}

#[test]
fn schema_checks() {
    let cfg = GenConfig::default();
    let a3 = check_axiom_schema(&find_axiom("A3").unwrap(), 1000, &cfg, 1);
    assert!(a3.passed(), "{}", a3.to_text());
    let wrong = check_axiom_schema(&Axiom::new("swap", "x;y", "y;x"), 200, &cfg, 1);
    assert!(!wrong.passed());
    assert!(!wrong.failures[0].evidence.is_empty());
    let tm = check_axiom_schema(&Axiom::new("TM", "1 o*o 1", "1"), 10, &cfg, 1);
    assert!(tm.passed());
    let json: serde_json::Value = serde_json::from_str(&wrong.to_json()).unwrap();
    assert_eq!(json["axiom"], "swap");
    assert!(json["failures"][0]["lhs"].is_string());
}

#[test]
fn schema_reports_are_reproducible() {
    let cfg = GenConfig::default();
    let ax = Axiom::new("swap", "x;y", "y;x");
    assert_eq!(check_axiom_schema(&ax, 50, &cfg, 9), check_axiom_schema(&ax, 50, &cfg, 9));
}
