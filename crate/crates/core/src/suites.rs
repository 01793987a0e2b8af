//! Packaged verification runs: the axiom tables, the left-interrupt
//! inconsistency and the factoring of ambiguous grammars.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bisim::{bisimilar, check_axiom_schema, trace_equivalent, GenConfig, SchemaReport};
use crate::parser::{parse, render};
use crate::rewrite::{
    apply_axiom, bpa_axioms, canonical, disambiguate, find_axiom, left_merge_axioms, merge_axioms, negation_axiom,
    Axiom, Position, RewriteError, RewriteTrace, TraceStep,
};
use crate::semantics::{derive, run, RunError, RunResult, StepBudget};
use crate::term::{ProcessEnv, Term};

/// Axioms sampled by the `axioms` suite: the basic process algebra with 0
/// and 1, the left merge, the merge decomposition and its auxiliaries, and
/// negation.
pub fn suite_axioms() -> Vec<Axiom> {
    let mut v = bpa_axioms();
    v.extend(left_merge_axioms());
    v.extend(merge_axioms());
    v.push(negation_axiom());
    v
}

pub fn axiom_suite(samples: usize, seed: u64) -> Vec<SchemaReport> {
    let cfg = GenConfig::default();
    suite_axioms().iter().map(|ax| check_axiom_schema(ax, samples, &cfg, seed)).collect()
}

pub fn axiom_suite_text(reports: &[SchemaReport]) -> String {
    reports.iter().map(SchemaReport::to_text).collect()
}

/// One equational derivation: the rewrite steps and the equation reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub steps: Vec<String>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintReport {
    /// Through the left-interrupt laws.
    pub via_left_interrupt: Derivation,
    /// Through the split into left interrupt and interrupting prefix.
    pub via_split: Derivation,
    pub bisimilar: bool,
    pub evidence: Option<String>,
}

impl LintReport {
    /// The two derived right-hand sides differ, so the axioms cannot hold together.
    pub fn passed(&self) -> bool {
        !self.bisimilar
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, d) in [("left-interrupt laws", &self.via_left_interrupt), ("interrupt split", &self.via_split)] {
            s += &format!("{name}:\n");
            for st in &d.steps {
                s += &format!("  {st}\n");
            }
            s += &format!("  => {} = {}\n", d.lhs, d.rhs);
        }
        s += &format!(
            "{} and {} are {}\n",
            self.via_left_interrupt.rhs,
            self.via_split.rhs,
            if self.bisimilar { "bisimilar" } else { "not bisimilar" }
        );
        if let Some(e) = &self.evidence {
            s += &format!("evidence: {e}\n");
        }
        s
    }
}

fn term(src: &str) -> Term {
    parse(&format!("main = {src}\n")).expect("suite term parses").main.expect("main")
}

fn step(trace: &mut RewriteTrace, t: &Term, name: &str, pos: &[usize]) -> Result<Term, RewriteError> {
    let ax = match name {
        "A9~" => find_axiom("A9").expect("A9").reversed(),
        n => find_axiom(n).unwrap_or_else(|| panic!("unknown axiom {n}")),
    };
    let out = apply_axiom(t, &ax, pos)?;
    trace.steps.push(TraceStep {
        rule: ax.name.clone(),
        position: Position(pos.to_vec()),
        before: t.subterm(pos).expect("matched").clone(),
        after: out.subterm(pos).expect("matched").clone(),
    });
    Ok(out)
}

/// Derives two values for `1 %/ a` and compares them.
///
/// From `b <%/ a`, the first law gives `b` and, after writing `b` as `b;1`,
/// the second gives `b;(1 %/ a)`; cancelling the common prefix yields
/// `1 %/ a = 1`. Splitting `1 %/ a` instead gives `1 <%/ a + a`.
pub fn lint_suite() -> Result<LintReport, RewriteError> {
    let start = term("b <%/ a");
    let mut t1 = RewriteTrace::default();
    let short = step(&mut t1, &start, "LINT1", &[])?;
    let padded = step(&mut t1, &start, "A9~", &[0])?;
    let long = step(&mut t1, &padded, "LINT2", &[])?;
    let mut lines: Vec<String> = t1.steps.iter().map(|s| s.to_string()).collect();
    let unit = step(&mut t1, &short, "A9~", &[])?;
    lines.push(t1.steps.last().expect("step").to_string());
    let (Term::Seq(p1, k1), Term::Seq(p2, k2)) = (&long, &unit) else { unreachable!("both sides are prefixed by b") };
    assert_eq!(p1, p2);
    lines.push(format!(
        "cancel {} : {} = {} => {} = {}",
        render(p1),
        render(&long),
        render(&unit),
        render(k1),
        render(k2)
    ));
    let first = Derivation { steps: lines, lhs: render(k1), rhs: render(k2) };

    let target = term("1 %/ a");
    let mut t2 = RewriteTrace::default();
    let split = step(&mut t2, &target, "INT+RINT", &[])?;
    let tidy = step(&mut t2, &split, "A9", &[1])?;
    let second = Derivation {
        steps: t2.steps.iter().map(|s| s.to_string()).collect(),
        lhs: render(&target),
        rhs: render(&tidy),
    };

    let env = ProcessEnv::new();
    let none = BTreeMap::new();
    let budget = StepBudget::default();
    let a = derive(k2, &env, &none, budget)?;
    let b = derive(&tidy, &env, &none, budget)?;
    let r = bisimilar(&a, &b);
    Ok(LintReport {
        via_left_interrupt: first,
        via_split: second,
        bisimilar: r.equivalent,
        evidence: r.evidence.map(|e| e.to_string()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisambigCase {
    pub disambiguating: String,
    pub ambiguous: String,
    pub expected: String,
    pub factored: String,
    pub script: Vec<String>,
    pub term_level: bool,
    pub traces_ambiguous: bool,
    pub traces_disambiguating: bool,
    pub ambiguous_run: String,
    pub factored_run: String,
    pub ambiguity_reported: bool,
    pub factored_deterministic: bool,
}

impl DisambigCase {
    pub fn passed(&self) -> bool {
        self.term_level
            && self.traces_ambiguous
            && self.traces_disambiguating
            && self.ambiguity_reported
            && self.factored_deterministic
    }
}

/// The three ambiguous grammars, their disambiguating spellings and their
/// factored forms, with a script that is ambiguous on the first.
pub const DISAMBIG_CASES: [(&str, &str, &str, &[&str]); 3] = [
    ("a b a c |+| a d", "a b a c + a d", "a (b a c + d)", &["a", "d"]),
    ("(a b + 1) |;| a d", "(a b + 1) a d", "a (b a d + d)", &["a", "d"]),
    ("a b |/| a c", "a b / a c", "a (b + c + a c)", &["a", "c"]),
];

pub const DISAMBIG_DEPTH: usize = 6;

pub fn disambig_suite() -> Result<Vec<DisambigCase>, RewriteError> {
    let env = ProcessEnv::new();
    let none = BTreeMap::new();
    let budget = StepBudget::depth(DISAMBIG_DEPTH + 1);
    let mut out = Vec::new();
    for (dis, amb, expected, script) in DISAMBIG_CASES {
        let (d, a, e) = (term(dis), term(amb), term(expected));
        let factored = disambiguate(&d, &env, 16)?;
        let term_level =
            canonical(&factored) == canonical(&e) && render(&canonical(&factored)) == render(&canonical(&e));
        let le = derive(&e, &env, &none, budget)?;
        let traces_ambiguous = trace_equivalent(&derive(&a, &env, &none, budget)?, &le, DISAMBIG_DEPTH);
        let traces_disambiguating = trace_equivalent(&derive(&d, &env, &none, budget)?, &le, DISAMBIG_DEPTH);
        let show = |r: &Result<RunResult, RunError>| match r {
            Ok(v) => v.to_string(),
            Err(e) => e.to_string(),
        };
        let ra = run(&a, &env, script, &none);
        let rf = run(&factored, &env, script, &none);
        out.push(DisambigCase {
            disambiguating: dis.to_string(),
            ambiguous: amb.to_string(),
            expected: expected.to_string(),
            factored: render(&factored),
            script: script.iter().map(|s| s.to_string()).collect(),
            term_level,
            traces_ambiguous,
            traces_disambiguating,
            ambiguous_run: show(&ra),
            factored_run: show(&rf),
            ambiguity_reported: matches!(ra, Err(RunError::AmbiguousTransition { .. })),
            factored_deterministic: rf.is_ok(),
        });
    }
    Ok(out)
}

pub fn disambig_suite_text(cases: &[DisambigCase]) -> String {
    let mut s = String::new();
    for c in cases {
        s += &format!(
            "{}: {}\n  factored   {}\n  expected   {}\n  term-level {}  traces(ambiguous) {}  traces(disambiguating) {}\n  run {:?} on `{}`: {}\n  run {:?} on factored: {}\n",
            if c.passed() { "PASS" } else { "FAIL" },
            c.disambiguating,
            c.factored,
            c.expected,
            c.term_level,
            c.traces_ambiguous,
            c.traces_disambiguating,
            c.script,
            c.ambiguous,
            c.ambiguous_run,
            c.script,
            c.factored_run,
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::interrupt_axioms;

    #[test]
    fn lint_route_conclusions() {
        let r = lint_suite().unwrap();
        assert_eq!(r.via_left_interrupt.lhs, "1 %/ a");
        assert_eq!(r.via_left_interrupt.rhs, "1");
        assert_eq!(r.via_split.rhs, "1 <%/ a + a");
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn disambiguation_cases_pass() {
        for c in disambig_suite().unwrap() {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn interrupt_axioms_are_not_in_the_sampled_suite() {
        let names: Vec<String> = suite_axioms().into_iter().map(|a| a.name).collect();
        for ax in interrupt_axioms() {
            assert!(!names.contains(&ax.name));
        }
        assert_eq!(names.len(), 13 + 10 + 1);
    }
}
