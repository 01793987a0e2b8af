//! Axiom-directed rewriting: the axiom catalogue and single-step application,
//! head normalisation, iteration expansion, negation elimination and
//! disambiguation factoring.

mod disambig;
mod iteration;
mod normalize;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub(crate) use disambig::factor_node;
pub use disambig::{canonical, disambiguate};
pub use iteration::expand_iteration;
pub use normalize::{normalize, NormalForm, DEFAULT_FUEL};

use crate::parser::{parse_term, render};
use crate::semantics::SemanticsError;
use crate::term::{OpTag, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("rewrite fuel exhausted after {0} steps")]
    FuelExhausted(usize),
    #[error("iteration operand `{0}` must be expanded first")]
    UnexpandedIterationOperand(String),
    #[error("unresolved process name `{0}`")]
    UnresolvedVar(String),
    #[error("`{operand}` is not supported under `{operator}`")]
    IterationUnderUnsupportedOperator { operand: String, operator: String },
    #[error("loop `{0}` is not guarded by an action")]
    UnguardedLoop(String),
    #[error("disambiguation did not finish within depth {0}")]
    DepthExceeded(usize),
    #[error("axiom {axiom} does not match at {position}")]
    NoMatch { axiom: String, position: String },
    #[error("no normal form for failed term `{0}`")]
    NoNormalForm(String),
    #[error(transparent)]
    Semantics(SemanticsError),
}

impl From<SemanticsError> for RewriteError {
    fn from(e: SemanticsError) -> Self {
        match e {
            SemanticsError::UnresolvedVar(v) => RewriteError::UnresolvedVar(v),
            SemanticsError::UnexpandedIterationOperand(o) => RewriteError::UnexpandedIterationOperand(o),
            e => RewriteError::Semantics(e),
        }
    }
}

/// Left- or right-hand side of an axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    /// Matches any term.
    Var(String),
    /// Matches a single atomic action.
    Action(String),
    Zero,
    One,
    Op(OpTag, Vec<Pattern>),
}

impl Pattern {
    /// Reads a pattern written in the term syntax: `x`, `y`, `z` (and any
    /// other name listed in `vars`) are term variables, other identifiers are
    /// action variables.
    pub fn parse(text: &str) -> Pattern {
        let vars: BTreeSet<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let t = parse_term(text, &vars).unwrap_or_else(|e| panic!("bad pattern `{text}`: {e}"));
        Pattern::from_term(&t)
    }

    fn from_term(t: &Term) -> Pattern {
        match t {
            Term::Var(v) => Pattern::Var(v.clone()),
            Term::Atom(l) => Pattern::Action(l.name.clone()),
            Term::Zero => Pattern::Zero,
            Term::One(None) => Pattern::One,
            t => {
                let (tag, kids) = t.parts().unwrap_or_else(|| panic!("unsupported pattern node {t:?}"));
                Pattern::Op(tag, kids.into_iter().map(Pattern::from_term).collect())
            }
        }
    }

    fn to_term(&self) -> Term {
        match self {
            Pattern::Var(v) => Term::Var(v.clone()),
            Pattern::Action(a) => Term::atom(a),
            Pattern::Zero => Term::Zero,
            Pattern::One => Term::one(),
            Pattern::Op(tag, kids) => Term::from_parts(*tag, kids.iter().map(Pattern::to_term).collect()),
        }
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Pattern::Var(v) | Pattern::Action(v) => {
                out.insert(v);
            }
            Pattern::Op(_, kids) => kids.iter().for_each(|k| k.collect_vars(out)),
            _ => {}
        }
    }

    /// Term variables and action variables, separately.
    pub fn var_kinds(&self) -> (BTreeSet<&str>, BTreeSet<&str>) {
        let mut terms = BTreeSet::new();
        let mut actions = BTreeSet::new();
        self.walk_kinds(&mut terms, &mut actions);
        (terms, actions)
    }

    fn walk_kinds<'a>(&'a self, terms: &mut BTreeSet<&'a str>, actions: &mut BTreeSet<&'a str>) {
        match self {
            Pattern::Var(v) => {
                terms.insert(v);
            }
            Pattern::Action(a) => {
                actions.insert(a);
            }
            Pattern::Op(_, kids) => kids.iter().for_each(|k| k.walk_kinds(terms, actions)),
            _ => {}
        }
    }

    fn matches(&self, t: &Term, subst: &mut BTreeMap<String, Term>) -> bool {
        match (self, t) {
            (Pattern::Var(v), t) => match subst.get(v) {
                Some(bound) => bound == t && render(bound) == render(t),
                None => {
                    subst.insert(v.clone(), t.clone());
                    true
                }
            },
            (Pattern::Action(a), Term::Atom(_)) => match subst.get(a) {
                Some(bound) => render(bound) == render(t),
                None => {
                    subst.insert(a.clone(), t.clone());
                    true
                }
            },
            (Pattern::Zero, Term::Zero) | (Pattern::One, Term::One(None)) => true,
            (Pattern::Op(tag, kids), t) => match t.parts() {
                Some((ttag, tkids)) if ttag == *tag => kids.iter().zip(tkids).all(|(p, k)| p.matches(k, subst)),
                _ => false,
            },
            _ => false,
        }
    }

    /// Instantiates the pattern. Panics on an unbound variable.
    pub fn instantiate(&self, subst: &BTreeMap<String, Term>) -> Term {
        match self {
            Pattern::Var(v) | Pattern::Action(v) => {
                subst.get(v).unwrap_or_else(|| panic!("unbound pattern variable {v}")).clone()
            }
            Pattern::Zero => Term::Zero,
            Pattern::One => Term::one(),
            Pattern::Op(tag, kids) => Term::from_parts(*tag, kids.iter().map(|k| k.instantiate(subst)).collect()),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(&self.to_term()))
    }
}

/// A named equation used as a left-to-right rewrite rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axiom {
    pub name: String,
    pub lhs: Pattern,
    pub rhs: Pattern,
}

impl Axiom {
    pub fn new(name: &str, lhs: &str, rhs: &str) -> Axiom {
        let ax = Axiom { name: name.to_string(), lhs: Pattern::parse(lhs), rhs: Pattern::parse(rhs) };
        assert!(ax.rhs.vars().is_subset(&ax.lhs.vars()), "{name}: rhs variables must occur on the lhs");
        ax
    }

    /// The same equation read right to left. Only meaningful when the rhs
    /// binds every variable of the lhs.
    pub fn reversed(&self) -> Axiom {
        Axiom { name: format!("{}~", self.name), lhs: self.rhs.clone(), rhs: self.lhs.clone() }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} = {}", self.name, self.lhs, self.rhs)
    }
}

/// The basic process algebra with 0 and 1, in the order they are usually listed.
pub fn bpa_axioms() -> Vec<Axiom> {
    vec![
        Axiom::new("A1", "x + y", "y + x"),
        Axiom::new("A2", "(x + y) + z", "x + (y + z)"),
        Axiom::new("A3", "x + x", "x"),
        Axiom::new("A4", "(x + y);z", "x;z + y;z"),
        Axiom::new("A5", "(x;y);z", "x;(y;z)"),
        Axiom::new("A6", "0 + x", "x"),
        Axiom::new("A7", "0;x", "0"),
        Axiom::new("A8", "1;x", "x"),
        Axiom::new("A9", "x;1", "x"),
    ]
}

/// Left-merge axioms. `a` ranges over atomic actions.
pub fn left_merge_axioms() -> Vec<Axiom> {
    vec![
        Axiom::new("LM1", "(x + y) <* z", "x <* z + y <* z"),
        Axiom::new("LM2", "a;x <* y", "a;(x & y)"),
        Axiom::new("LM3", "1 <* x", "0"),
        Axiom::new("LM4", "0 <* x", "0"),
    ]
}

/// Decomposition of `&` into auxiliaries, plus the auxiliaries' own laws.
pub fn merge_axioms() -> Vec<Axiom> {
    vec![
        Axiom::new("M", "x & y", "x o*o y + x <* y + y <* x + x |*| y"),
        Axiom::new("M'", "x & y", "x o*o y + x <* y + x *> y + x |*| y"),
        Axiom::new("RM", "x *> y", "y <* x"),
        Axiom::new("TM1", "1 o*o 1", "1"),
        Axiom::new("TM2", "a;x o*o y", "0"),
        Axiom::new("TM3", "0 o*o x", "0"),
        Axiom::new("TM4", "(x + y) o*o z", "x o*o z + y o*o z"),
        Axiom::new("CM1", "(x + y) |*| z", "x |*| z + y |*| z"),
        Axiom::new("CM2", "1 |*| x", "0"),
        Axiom::new("CM3", "0 |*| x", "0"),
    ]
}

pub fn negation_axiom() -> Axiom {
    Axiom::new("NEG", "-x", "do x then 0 else 1")
}

/// Left-interrupt laws of the optional-interrupt axiomatisation, plus the
/// equation splitting an interrupt into its left and right parts.
pub fn interrupt_axioms() -> Vec<Axiom> {
    vec![
        Axiom::new("LINT1", "a <%/ y", "a"),
        Axiom::new("LINT2", "a;x <%/ y", "a;(x %/ y)"),
        Axiom::new("INT+RINT", "x %/ y", "x <%/ y + y;x"),
    ]
}

pub fn find_axiom(name: &str) -> Option<Axiom> {
    bpa_axioms()
        .into_iter()
        .chain(left_merge_axioms())
        .chain(merge_axioms())
        .chain(interrupt_axioms())
        .chain([negation_axiom()])
        .find(|a| a.name == name)
}

/// A position in a term: child indices from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Position(pub Vec<usize>);

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

/// Rewrites the subterm at `pos` with `ax`.
pub fn apply_axiom(t: &Term, ax: &Axiom, pos: &[usize]) -> Result<Term, RewriteError> {
    let no_match = || RewriteError::NoMatch { axiom: ax.name.clone(), position: Position(pos.to_vec()).to_string() };
    let sub = t.subterm(pos).ok_or_else(no_match)?;
    let mut subst = BTreeMap::new();
    if !ax.lhs.matches(sub, &mut subst) {
        return Err(no_match());
    }
    let mut out = t.clone();
    *out.subterm_mut(pos).expect("position checked") = ax.rhs.instantiate(&subst);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: String,
    pub position: Position,
    pub before: Term,
    pub after: Term,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}: {} => {}", self.rule, self.position, render(&self.before), render(&self.after))
    }
}

/// Ordered record of rewrite steps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteTrace {
    pub steps: Vec<TraceStep>,
}

impl RewriteTrace {
    /// Re-applies every step to `input`, checking that each `before` is what
    /// the position holds at that point.
    pub fn replay(&self, input: &Term) -> Result<Term, String> {
        let mut cur = input.clone();
        for (i, s) in self.steps.iter().enumerate() {
            let slot = cur
                .subterm_mut(&s.position.0)
                .ok_or_else(|| format!("step {i} ({}): no subterm at {}", s.rule, s.position))?;
            if *slot != s.before || render(slot) != render(&s.before) {
                return Err(format!(
                    "step {i} ({}): expected `{}` at {}, found `{}`",
                    s.rule,
                    render(&s.before),
                    s.position,
                    render(slot)
                ));
            }
            *slot = s.after.clone();
        }
        Ok(cur)
    }

    pub fn to_text(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }
}

/// Replaces every negation `-x` by `do x then 0 else 1`.
pub fn eliminate_negation(t: &Term) -> Term {
    match t {
        Term::Neg(x) => Term::do_then_else(eliminate_negation(x), Term::Zero, Term::one()),
        t => t.map_children(|c| Ok::<_, ()>(eliminate_negation(c))).unwrap(),
    }
}
