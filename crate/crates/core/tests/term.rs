mod common;

use std::collections::BTreeSet;

use acpk::term::{
    free_vars, is_identifier, unguarded_definitions, validate_env, ActionLabel, CommunicationFunction, Diagnostic,
    ProcessEnv, Term, Value,
};
use common::t;
use proptest::prelude::*;

fn brute_force_violations(g: &CommunicationFunction, names: &[&str]) -> BTreeSet<BTreeSet<String>> {
    let mut by_multiset: std::collections::BTreeMap<Vec<&str>, BTreeSet<String>> = Default::default();
    for &x in names {
        for &y in names {
            for &z in names {
                let mut key = vec![x, y, z];
                key.sort();
                let entry = by_multiset.entry(key).or_default();
                if let Some(r) = g.get(x, y).and_then(|xy| g.get(xy, z)) {
                    entry.insert(r.to_string());
                }
                if let Some(r) = g.get(y, z).and_then(|yz| g.get(x, yz)) {
                    entry.insert(r.to_string());
                }
            }
        }
    }
    by_multiset
        .into_iter()
        .filter(|(_, r)| r.len() > 1)
        .map(|(k, _)| k.into_iter().map(String::from).collect())
        .collect()
}

proptest! {
    #[test]
    fn associativity_check_matches_brute_force(entries in prop::collection::vec((0..4usize, 0..4usize, 0..4usize), 0..6)) {
        let names = ["a", "b", "c", "d"];
        let mut g = CommunicationFunction::new();
        for (x, y, z) in entries {
            g.define(names[x], names[y], names[z]);
        }
        let ours: BTreeSet<BTreeSet<String>> = g
            .associativity_violations()
            .into_iter()
            .map(|v| v.actions.iter().cloned().collect())
            .collect();
        let used: Vec<&str> = g.actions().into_iter().collect();
        prop_assert_eq!(ours, brute_force_violations(&g, &used));
    }

    #[test]
    fn communication_is_commutative(x in 0..3usize, y in 0..3usize) {
        let names = ["a", "b", "c"];
        let g = CommunicationFunction::from_entries([(names[x], names[y], "d")]);
        prop_assert_eq!(g.get(names[x], names[y]), g.get(names[y], names[x]));
    }
}

#[test]
fn three_party_synchronisation_reduces_in_any_order() {
    let g = CommunicationFunction::from_entries([("a", "b", "d"), ("d", "c", "e")]);
    assert_eq!(g.reduce(&["a", "b", "c"]).as_deref(), Some("e"));
    assert_eq!(g.reduce(&["c", "a", "b"]).as_deref(), Some("e"));
    assert_eq!(g.reduce(&["a", "c"]), None);
    assert!(g.associativity_violations().is_empty());
}

#[test]
fn label_identity_ignores_payloads() {
    let plain = ActionLabel::new("a");
    let valued = ActionLabel::with_yield("a", Value::Int(3));
    assert_eq!(plain, valued);
    assert_eq!(valued.to_string(), "a^3");
    assert_eq!(ActionLabel::raising("a", "E").to_string(), "a!E");
}

#[test]
fn identifiers() {
    assert!(is_identifier("searchSequence"));
    assert!(is_identifier("x_1"));
    assert!(!is_identifier("_x1"));
    assert!(!is_identifier("1x"));
    assert!(!is_identifier(""));
}

#[test]
fn diagnostics_for_bad_environments() {
    let mut env = ProcessEnv::new();
    env.define("X", Term::alt(Term::var("X"), Term::atom("a")));
    env.define("Y", Term::seq(Term::atom("a"), Term::var("Z")));
    let d = validate_env(&env);
    assert!(d.contains(&Diagnostic::Unguarded { name: "X".into() }));
    assert!(d.iter().any(|d| matches!(d, Diagnostic::UndefinedName { name, .. } if name == "Z")));
    assert_eq!(unguarded_definitions(&env), BTreeSet::from(["X".to_string()]));
}

#[test]
fn guarded_mutual_recursion_is_accepted() {
    let mut env = ProcessEnv::new();
    env.define("X", Term::seq(Term::atom("a"), Term::var("Y")));
    env.define("Y", Term::alt(Term::var("X"), Term::atom("b")));
    assert!(validate_env(&env).is_empty());
}

#[test]
fn structure_helpers() {
    let x = t("a;(b + c)");
    assert_eq!(x.size(), 5);
    assert_eq!(x.subterm(&[1, 0]), Some(&Term::atom("b")));
    assert!(free_vars(&x).is_empty());
    assert_eq!(free_vars(&Term::seq(Term::atom("a"), Term::var("X"))), BTreeSet::from(["X".to_string()]));
}
