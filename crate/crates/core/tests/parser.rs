mod common;

use std::collections::BTreeSet;

use acpk::parser::{parse, parse_bindings, parse_gamma, parse_term, render, render_source};
use acpk::term::{ActionLabel, Binder, OpTag, Predicate, Term, Value, ValueTag};
use proptest::prelude::*;

const BINARY: [OpTag; 20] = [
    OpTag::Alt,
    OpTag::Seq,
    OpTag::Par,
    OpTag::AndPar,
    OpTag::OrPar1,
    OpTag::OrPar2,
    OpTag::LeftMerge,
    OpTag::RightMerge,
    OpTag::CommMerge,
    OpTag::TermMerge,
    OpTag::Disrupt,
    OpTag::Interrupt,
    OpTag::MultiInterrupt,
    OpTag::MandInterrupts,
    OpTag::LeftInterrupt,
    OpTag::DisambAlt,
    OpTag::DisambSeq1,
    OpTag::DisambSeq2,
    OpTag::DisambSeqX,
    OpTag::DisambDisrupt,
];

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<bool>().prop_map(Value::Bool),
        (-50i64..50).prop_map(Value::Int),
        "[a-z \"\\\\]{0,4}".prop_map(Value::Str),
    ]
}

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "send", "recv", "x1"]).prop_map(String::from)
}

fn predicate() -> impl Strategy<Value = Predicate> {
    (
        prop_oneof![
            any::<bool>().prop_map(Predicate::constant),
            prop::sample::select(vec!["p", "q"]).prop_map(Predicate::named)
        ],
        any::<bool>(),
    )
        .prop_map(|(p, neg)| if neg { p.negate() } else { p })
}

fn leaf() -> impl Strategy<Value = Term> {
    prop_oneof![
        Just(Term::Zero),
        Just(Term::one()),
        value().prop_map(|v| Term::One(Some(v))),
        name().prop_map(|n| Term::atom(&n)),
        (name(), value()).prop_map(|(n, v)| Term::Atom(ActionLabel::with_yield(n, v))),
        (name(), prop::sample::select(vec!["E", "IOError"])).prop_map(|(n, e)| Term::Atom(ActionLabel::raising(n, e))),
        Just(Term::Ellipsis),
        Just(Term::EllipsisOpt),
        Just(Term::OptBreak),
        Just(Term::Break),
        predicate().prop_map(Term::While),
        predicate().prop_map(Term::Guard),
        Just(Term::Raise(None)),
        Just(Term::Raise(Some("E".into()))),
        Just(Term::var("X")),
    ]
}

fn binder() -> impl Strategy<Value = Binder> {
    (
        prop::sample::select(vec!["v", "b"]),
        prop::sample::select(vec![ValueTag::Bool, ValueTag::Int, ValueTag::Str, ValueTag::Exc]),
    )
        .prop_map(|(n, tag)| Binder::new(n, tag))
}

fn term() -> impl Strategy<Value = Term> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            6 => (prop::sample::select(BINARY.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(tag, x, y)| Term::from_parts(tag, vec![x, y])),
            1 => inner.clone().prop_map(Term::negation),
            1 => (inner.clone(), inner.clone(), inner.clone()).prop_map(|(x, y, z)| Term::do_then_else(x, y, z)),
            1 => (inner.clone(), binder(), inner.clone(), 0..3usize).prop_map(|(x, b, y, k)| {
                let (x, y) = (Box::new(x), Box::new(y));
                match k {
                    0 => Term::Flow(x, b, y),
                    1 => Term::ExcFlow(x, b, y),
                    _ => Term::StreamFlow(x, b, y),
                }
            }),
            1 => inner.prop_map(|x| Term::Resume(Box::new(x))),
        ]
    })
}

fn vars() -> BTreeSet<String> {
    BTreeSet::from(["X".to_string()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn render_then_parse_is_identity(t in term()) {
        let text = render(&t);
        let back = parse_term(&text, &vars()).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(render(&back), text.clone());
        prop_assert_eq!(back, t, "{}", text);
    }
}

proptest! {
    #[test]
    fn source_files_round_trip(t in term()) {
        let mut env = acpk::term::ProcessEnv::new();
        env.define("X", Term::seq(Term::atom("a"), Term::var("X")));
        let src = render_source(&env, Some(&t));
        let spec = parse(&src).map_err(|e| TestCaseError::fail(format!("{src}: {e}")))?;
        prop_assert_eq!(spec.env.defs, env.defs);
        prop_assert_eq!(spec.main.unwrap(), t);
    }
}

#[test]
fn precedence_of_sequence_over_choice() {
    let t = parse_term("a;b + b", &BTreeSet::new()).unwrap();
    assert_eq!(t, Term::alt(Term::seq(Term::atom("a"), Term::atom("b")), Term::atom("b")));
}

#[test]
fn juxtaposition_in_files_only() {
    assert!(parse_term("a b", &BTreeSet::new()).is_err());
    let spec = parse("main = a b\n").unwrap();
    assert_eq!(spec.main.unwrap(), Term::seq(Term::atom("a"), Term::atom("b")));
}

#[test]
fn errors_carry_positions() {
    let e = parse("main = a;\n").unwrap_err();
    assert_eq!(e.line, 2);
    assert!(!e.expected.is_empty());
    assert!(parse("").is_err());
    assert!(parse("main = a\nmain = b\n").is_err());
}

#[test]
fn tables() {
    let g = parse_gamma("send recv -> msg\n# comment\n\n").unwrap();
    assert_eq!(g.get("recv", "send"), Some("msg"));
    assert!(parse_gamma("send -> msg").is_err());
    let b = parse_bindings("p = true\nq = false\n").unwrap();
    assert_eq!(b.get("p"), Some(&true));
    assert_eq!(b.get("q"), Some(&false));
    assert!(parse_bindings("p = maybe").is_err());
}
