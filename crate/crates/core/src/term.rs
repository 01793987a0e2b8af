//! Abstract syntax of process expressions, result values, outcomes and
//! recursive-definition environments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// A datum produced by an action or flowing through a dataflow arrow.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Value {
    pub fn tag(&self) -> ValueTag {
        match self {
            Value::Bool(_) => ValueTag::Bool,
            Value::Int(_) => ValueTag::Int,
            Value::Str(_) => ValueTag::Str,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// Declared type of a binder. `Exc` binds exception names, which travel as strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ValueTag {
    Bool,
    Int,
    Str,
    Exc,
}

impl ValueTag {
    pub fn parse(name: &str) -> Option<ValueTag> {
        match name {
            "Bool" | "Boolean" => Some(ValueTag::Bool),
            "Int" => Some(ValueTag::Int),
            "Str" | "String" => Some(ValueTag::Str),
            "Exc" | "Exception" => Some(ValueTag::Exc),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueTag::Bool => "Bool",
            ValueTag::Int => "Int",
            ValueTag::Str => "Str",
            ValueTag::Exc => "Exc",
        }
    }
}

impl fmt::Display for ValueTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Returns true if `s` matches `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An atomic action. Identity is the name alone; the yield and the raised
/// exception are payload.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionLabel {
    pub name: String,
    pub yield_value: Option<Value>,
    /// Executing the action terminates the enclosing context in failure.
    pub raises: Option<String>,
}

impl ActionLabel {
    pub fn new(name: impl Into<String>) -> Self {
        ActionLabel { name: name.into(), yield_value: None, raises: None }
    }

    pub fn with_yield(name: impl Into<String>, value: Value) -> Self {
        ActionLabel { name: name.into(), yield_value: Some(value), raises: None }
    }

    pub fn raising(name: impl Into<String>, exception: impl Into<String>) -> Self {
        ActionLabel { name: name.into(), yield_value: None, raises: Some(exception.into()) }
    }
}

impl PartialEq for ActionLabel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for ActionLabel {}

impl Hash for ActionLabel {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
    }
}

impl PartialOrd for ActionLabel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ActionLabel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name.cmp(&other.name)
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(v) = &self.yield_value {
            write!(f, "^{v}")?;
        }
        if let Some(e) = &self.raises {
            write!(f, "!{e}")?;
        }
        Ok(())
    }
}

/// How a process terminated.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Outcome {
    Success(Option<Value>),
    Failure(Option<String>),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Success(None) => f.write_str("Success"),
            Outcome::Success(Some(v)) => write!(f, "Success[{v}]"),
            Outcome::Failure(None) => f.write_str("Failure"),
            Outcome::Failure(Some(e)) => write!(f, "Failure[{e}]"),
        }
    }
}

/// Names and types the datum carried by a dataflow arrow.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Binder {
    pub name: String,
    pub tag: ValueTag,
}

impl Binder {
    pub fn new(name: impl Into<String>, tag: ValueTag) -> Self {
        Binder { name: name.into(), tag }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredicateAtom {
    Const(bool),
    Named(String),
}

/// Condition of `while(p)` and of the guards produced by loop expansion.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Predicate {
    pub negated: bool,
    pub atom: PredicateAtom,
}

impl Predicate {
    pub fn constant(b: bool) -> Self {
        Predicate { negated: false, atom: PredicateAtom::Const(b) }
    }

    pub fn named(name: impl Into<String>) -> Self {
        Predicate { negated: false, atom: PredicateAtom::Named(name.into()) }
    }

    pub fn negate(mut self) -> Self {
        self.negated = !self.negated;
        self
    }

    /// Evaluates against `bindings`; `None` if a named predicate is unbound.
    pub fn eval(&self, bindings: &BTreeMap<String, bool>) -> Option<bool> {
        let v = match &self.atom {
            PredicateAtom::Const(b) => *b,
            PredicateAtom::Named(n) => *bindings.get(n)?,
        };
        Some(v != self.negated)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        match &self.atom {
            PredicateAtom::Const(b) => write!(f, "{b}"),
            PredicateAtom::Named(n) => f.write_str(n),
        }
    }
}

/// Process expressions.
///
/// Besides the surface operators this includes a few run-time forms that the
/// operational semantics produces while executing (`Raise`, `Resume`) and the
/// guards produced by loop expansion (`Guard`). All of them have concrete
/// syntax so every term can be rendered and parsed back.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    /// Deadlock, `0` / `δ`.
    Zero,
    /// Successful termination, `1` / `ε`, optionally carrying the result value.
    One(Option<Value>),
    Atom(ActionLabel),
    Alt(Box<Term>, Box<Term>),
    Seq(Box<Term>, Box<Term>),
    Par(Box<Term>, Box<Term>),
    AndPar(Box<Term>, Box<Term>),
    OrPar1(Box<Term>, Box<Term>),
    OrPar2(Box<Term>, Box<Term>),
    LeftMerge(Box<Term>, Box<Term>),
    RightMerge(Box<Term>, Box<Term>),
    CommMerge(Box<Term>, Box<Term>),
    TermMerge(Box<Term>, Box<Term>),
    Disrupt(Box<Term>, Box<Term>),
    Interrupt(Box<Term>, Box<Term>),
    MultiInterrupt(Box<Term>, Box<Term>),
    MandInterrupts(Box<Term>, Box<Term>),
    /// Left interrupt: the left operand performs the first action, then the
    /// rest is interrupted by the right operand.
    LeftInterrupt(Box<Term>, Box<Term>),
    DoThenElse(Box<Term>, Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Flow(Box<Term>, Binder, Box<Term>),
    ExcFlow(Box<Term>, Binder, Box<Term>),
    StreamFlow(Box<Term>, Binder, Box<Term>),
    DisambAlt(Box<Term>, Box<Term>),
    DisambSeq1(Box<Term>, Box<Term>),
    DisambSeq2(Box<Term>, Box<Term>),
    DisambSeqX(Box<Term>, Box<Term>),
    DisambDisrupt(Box<Term>, Box<Term>),
    Ellipsis,
    EllipsisOpt,
    OptBreak,
    Break,
    While(Predicate),
    /// `if(p)`: behaves as `1` when `p` holds and as `0` otherwise.
    Guard(Predicate),
    /// Terminated in failure, optionally with an exception name.
    Raise(Option<String>),
    /// A `MandInterrupts` or `StreamFlow` node whose left operand has just
    /// been served by the right operand and must now resume.
    Resume(Box<Term>),
    Var(String),
}

/// Data-free constructor tags, used by pattern matching and generic traversal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpTag {
    Alt,
    Seq,
    Par,
    AndPar,
    OrPar1,
    OrPar2,
    LeftMerge,
    RightMerge,
    CommMerge,
    TermMerge,
    Disrupt,
    Interrupt,
    MultiInterrupt,
    MandInterrupts,
    LeftInterrupt,
    DoThenElse,
    Neg,
    DisambAlt,
    DisambSeq1,
    DisambSeq2,
    DisambSeqX,
    DisambDisrupt,
    Resume,
}

fn bx(t: Term) -> Box<Term> {
    Box::new(t)
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(ActionLabel::new(name))
    }

    pub fn one() -> Term {
        Term::One(None)
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn alt(x: Term, y: Term) -> Term {
        Term::Alt(bx(x), bx(y))
    }

    pub fn seq(x: Term, y: Term) -> Term {
        Term::Seq(bx(x), bx(y))
    }

    pub fn par(x: Term, y: Term) -> Term {
        Term::Par(bx(x), bx(y))
    }

    pub fn negation(x: Term) -> Term {
        Term::Neg(bx(x))
    }

    pub fn do_then_else(x: Term, y: Term, z: Term) -> Term {
        Term::DoThenElse(bx(x), bx(y), bx(z))
    }

    /// Builds a data-free node from its tag and children.
    ///
    /// Panics if the child count does not match the tag's arity.
    pub fn from_parts(tag: OpTag, mut children: Vec<Term>) -> Term {
        let arity = tag.arity();
        assert_eq!(children.len(), arity, "{tag:?} takes {arity} operands");
        if arity == 1 {
            let x = bx(children.pop().unwrap());
            return match tag {
                OpTag::Neg => Term::Neg(x),
                OpTag::Resume => Term::Resume(x),
                _ => unreachable!(),
            };
        }
        if arity == 3 {
            let z = bx(children.pop().unwrap());
            let y = bx(children.pop().unwrap());
            let x = bx(children.pop().unwrap());
            return Term::DoThenElse(x, y, z);
        }
        let y = bx(children.pop().unwrap());
        let x = bx(children.pop().unwrap());
        match tag {
            OpTag::Alt => Term::Alt(x, y),
            OpTag::Seq => Term::Seq(x, y),
            OpTag::Par => Term::Par(x, y),
            OpTag::AndPar => Term::AndPar(x, y),
            OpTag::OrPar1 => Term::OrPar1(x, y),
            OpTag::OrPar2 => Term::OrPar2(x, y),
            OpTag::LeftMerge => Term::LeftMerge(x, y),
            OpTag::RightMerge => Term::RightMerge(x, y),
            OpTag::CommMerge => Term::CommMerge(x, y),
            OpTag::TermMerge => Term::TermMerge(x, y),
            OpTag::Disrupt => Term::Disrupt(x, y),
            OpTag::Interrupt => Term::Interrupt(x, y),
            OpTag::MultiInterrupt => Term::MultiInterrupt(x, y),
            OpTag::MandInterrupts => Term::MandInterrupts(x, y),
            OpTag::LeftInterrupt => Term::LeftInterrupt(x, y),
            OpTag::DisambAlt => Term::DisambAlt(x, y),
            OpTag::DisambSeq1 => Term::DisambSeq1(x, y),
            OpTag::DisambSeq2 => Term::DisambSeq2(x, y),
            OpTag::DisambSeqX => Term::DisambSeqX(x, y),
            OpTag::DisambDisrupt => Term::DisambDisrupt(x, y),
            OpTag::DoThenElse | OpTag::Neg | OpTag::Resume => unreachable!(),
        }
    }

    /// Tag and operands of a data-free node; `None` for leaves and for the
    /// dataflow arrows, which carry a binder.
    pub fn parts(&self) -> Option<(OpTag, Vec<&Term>)> {
        use Term::*;
        let (tag, kids): (OpTag, Vec<&Term>) = match self {
            Alt(x, y) => (OpTag::Alt, vec![x, y]),
            Seq(x, y) => (OpTag::Seq, vec![x, y]),
            Par(x, y) => (OpTag::Par, vec![x, y]),
            AndPar(x, y) => (OpTag::AndPar, vec![x, y]),
            OrPar1(x, y) => (OpTag::OrPar1, vec![x, y]),
            OrPar2(x, y) => (OpTag::OrPar2, vec![x, y]),
            LeftMerge(x, y) => (OpTag::LeftMerge, vec![x, y]),
            RightMerge(x, y) => (OpTag::RightMerge, vec![x, y]),
            CommMerge(x, y) => (OpTag::CommMerge, vec![x, y]),
            TermMerge(x, y) => (OpTag::TermMerge, vec![x, y]),
            Disrupt(x, y) => (OpTag::Disrupt, vec![x, y]),
            Interrupt(x, y) => (OpTag::Interrupt, vec![x, y]),
            MultiInterrupt(x, y) => (OpTag::MultiInterrupt, vec![x, y]),
            MandInterrupts(x, y) => (OpTag::MandInterrupts, vec![x, y]),
            LeftInterrupt(x, y) => (OpTag::LeftInterrupt, vec![x, y]),
            DisambAlt(x, y) => (OpTag::DisambAlt, vec![x, y]),
            DisambSeq1(x, y) => (OpTag::DisambSeq1, vec![x, y]),
            DisambSeq2(x, y) => (OpTag::DisambSeq2, vec![x, y]),
            DisambSeqX(x, y) => (OpTag::DisambSeqX, vec![x, y]),
            DisambDisrupt(x, y) => (OpTag::DisambDisrupt, vec![x, y]),
            DoThenElse(x, y, z) => (OpTag::DoThenElse, vec![x, y, z]),
            Neg(x) => (OpTag::Neg, vec![x]),
            Resume(x) => (OpTag::Resume, vec![x]),
            _ => return None,
        };
        Some((tag, kids))
    }

    /// Direct subterms, in position order. Binders are not subterms.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Flow(x, _, y) | Term::ExcFlow(x, _, y) | Term::StreamFlow(x, _, y) => vec![x, y],
            t => t.parts().map(|(_, k)| k).unwrap_or_default(),
        }
    }

    /// Mutable access to the `index`-th direct subterm.
    pub fn child_mut(&mut self, index: usize) -> Option<&mut Term> {
        use Term::*;
        match self {
            Alt(x, y)
            | Seq(x, y)
            | Par(x, y)
            | AndPar(x, y)
            | OrPar1(x, y)
            | OrPar2(x, y)
            | LeftMerge(x, y)
            | RightMerge(x, y)
            | CommMerge(x, y)
            | TermMerge(x, y)
            | Disrupt(x, y)
            | Interrupt(x, y)
            | MultiInterrupt(x, y)
            | MandInterrupts(x, y)
            | LeftInterrupt(x, y)
            | DisambAlt(x, y)
            | DisambSeq1(x, y)
            | DisambSeq2(x, y)
            | DisambSeqX(x, y)
            | DisambDisrupt(x, y)
            | Flow(x, _, y)
            | ExcFlow(x, _, y)
            | StreamFlow(x, _, y) => match index {
                0 => Some(x),
                1 => Some(y),
                _ => None,
            },
            DoThenElse(x, y, z) => match index {
                0 => Some(x),
                1 => Some(y),
                2 => Some(z),
                _ => None,
            },
            Neg(x) | Resume(x) => (index == 0).then_some(&mut **x),
            _ => None,
        }
    }

    /// Rebuilds this node with each direct subterm replaced by `f(child)`.
    pub fn map_children<E>(&self, mut f: impl FnMut(&Term) -> Result<Term, E>) -> Result<Term, E> {
        Ok(match self {
            Term::Flow(x, b, y) => Term::Flow(bx(f(x)?), b.clone(), bx(f(y)?)),
            Term::ExcFlow(x, b, y) => Term::ExcFlow(bx(f(x)?), b.clone(), bx(f(y)?)),
            Term::StreamFlow(x, b, y) => Term::StreamFlow(bx(f(x)?), b.clone(), bx(f(y)?)),
            t => match t.parts() {
                Some((tag, kids)) => {
                    let kids = kids.into_iter().map(&mut f).collect::<Result<Vec<_>, E>>()?;
                    Term::from_parts(tag, kids)
                }
                None => t.clone(),
            },
        })
    }

    pub fn subterm(&self, path: &[usize]) -> Option<&Term> {
        let mut t = self;
        for &i in path {
            t = *t.children().get(i)?;
        }
        Some(t)
    }

    pub fn subterm_mut(&mut self, path: &[usize]) -> Option<&mut Term> {
        let mut t = self;
        for &i in path {
            t = t.child_mut(i)?;
        }
        Some(t)
    }

    /// Visits every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn any(&self, pred: &impl Fn(&Term) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn is_iteration_operand(&self) -> bool {
        matches!(self, Term::Ellipsis | Term::EllipsisOpt | Term::OptBreak | Term::Break | Term::While(_))
    }

    pub fn is_disambiguating(&self) -> bool {
        matches!(
            self,
            Term::DisambAlt(..)
                | Term::DisambSeq1(..)
                | Term::DisambSeq2(..)
                | Term::DisambSeqX(..)
                | Term::DisambDisrupt(..)
        )
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }
}

impl OpTag {
    pub fn arity(self) -> usize {
        match self {
            OpTag::Neg | OpTag::Resume => 1,
            OpTag::DoThenElse => 3,
            _ => 2,
        }
    }
}

/// The Var names occurring in `t`.
pub fn free_vars(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    t.walk(&mut |n| {
        if let Term::Var(name) = n {
            out.insert(name.clone());
        }
    });
    out
}

/// Partial, commutative map from pairs of action names to the action their
/// synchronisation produces.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationFunction {
    table: BTreeMap<(String, String), String>,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl CommunicationFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> Self {
        let mut g = Self::new();
        for (a, b, c) in entries {
            g.define(a, b, c);
        }
        g
    }

    /// Defines `a | b = c`, replacing any previous entry for the pair.
    pub fn define(&mut self, a: &str, b: &str, c: &str) {
        self.table.insert(key(a, b), c.to_string());
    }

    pub fn get(&self, a: &str, b: &str) -> Option<&str> {
        self.table.get(&key(a, b)).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.table.iter().map(|((a, b), c)| (a.as_str(), b.as_str(), c.as_str()))
    }

    /// Every action name mentioned by the table.
    pub fn actions(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for (a, b, c) in self.entries() {
            out.insert(a);
            out.insert(b);
            out.insert(c);
        }
        out
    }

    /// True if `name` can take part in a synchronisation.
    pub fn communicates(&self, name: &str) -> bool {
        self.table.keys().any(|(a, b)| a == name || b == name)
    }

    /// Combines a multiset of simultaneous actions into a single action, if
    /// some order of pairwise synchronisations defines one.
    pub fn reduce(&self, names: &[&str]) -> Option<String> {
        match names {
            [] => None,
            [one] => Some(one.to_string()),
            _ => {
                let mut sorted: Vec<&str> = names.to_vec();
                sorted.sort_unstable();
                self.reduce_sorted(sorted)
            }
        }
    }

    fn reduce_sorted(&self, names: Vec<&str>) -> Option<String> {
        if names.len() == 1 {
            return Some(names[0].to_string());
        }
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if let Some(c) = self.get(names[i], names[j]) {
                    let mut rest: Vec<&str> =
                        names.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, n)| *n).collect();
                    rest.push(c);
                    rest.sort_unstable();
                    if let Some(r) = self.reduce_sorted(rest) {
                        return Some(r);
                    }
                }
            }
        }
        None
    }

    /// Multisets `{a, b, c}` whose defined bracketings disagree.
    pub fn associativity_violations(&self) -> Vec<AssociativityViolation> {
        let names: Vec<&str> = self.actions().into_iter().collect();
        let mut out = Vec::new();
        for i in 0..names.len() {
            for j in i..names.len() {
                for k in j..names.len() {
                    let (a, b, c) = (names[i], names[j], names[k]);
                    let mut results = BTreeSet::new();
                    for (x, y, z) in [(a, b, c), (a, c, b), (b, c, a)] {
                        if let Some(r) = self.get(x, y).and_then(|xy| self.get(xy, z)) {
                            results.insert(r.to_string());
                        }
                    }
                    if results.len() > 1 {
                        out.push(AssociativityViolation {
                            actions: [a.to_string(), b.to_string(), c.to_string()],
                            results: results.into_iter().collect(),
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssociativityViolation {
    pub actions: [String; 3],
    pub results: Vec<String>,
}

/// Named recursive process definitions plus the communication function.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProcessEnv {
    pub defs: BTreeMap<String, Term>,
    pub gamma: CommunicationFunction,
}

impl ProcessEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_gamma(gamma: CommunicationFunction) -> Self {
        ProcessEnv { defs: BTreeMap::new(), gamma }
    }

    pub fn define(&mut self, name: impl Into<String>, body: Term) {
        self.defs.insert(name.into(), body);
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.defs.get(name)
    }

    /// A name not yet defined, starting from `base`.
    pub fn fresh_name(&self, base: &str) -> String {
        (0..).map(|i| format!("{base}{i}")).find(|n| !self.defs.contains_key(n)).expect("unbounded")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    UndefinedName { name: String, referenced_from: Option<String> },
    Unguarded { name: String },
    Associativity(AssociativityViolation),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UndefinedName { name, referenced_from: Some(from) } => {
                write!(f, "undefined name \"{name}\" referenced from \"{from}\"")
            }
            Diagnostic::UndefinedName { name, referenced_from: None } => {
                write!(f, "undefined name \"{name}\"")
            }
            Diagnostic::Unguarded { name } => write!(f, "unguarded recursion through \"{name}\""),
            Diagnostic::Associativity(v) => write!(
                f,
                "communication is not associative on {{{}, {}, {}}}: bracketings give {}",
                v.actions[0],
                v.actions[1],
                v.actions[2],
                v.results.join(", ")
            ),
        }
    }
}

/// True if every way of terminating `t` successfully performs an action first.
/// `Zero` and `Raise` never terminate successfully and so count as acting.
pub(crate) fn must_act(t: &Term, env: &ProcessEnv, visiting: &mut BTreeSet<String>) -> bool {
    use Term::*;
    match t {
        Zero | Atom(_) | Raise(_) => true,
        One(_) | Guard(_) | Ellipsis | EllipsisOpt | OptBreak | Break | While(_) => false,
        Alt(x, y) | OrPar1(x, y) | OrPar2(x, y) | DisambAlt(x, y) => {
            must_act(x, env, visiting) && must_act(y, env, visiting)
        }
        Seq(x, y)
        | Par(x, y)
        | AndPar(x, y)
        | TermMerge(x, y)
        | Interrupt(x, y)
        | DisambSeq1(x, y)
        | DisambSeq2(x, y)
        | DisambSeqX(x, y)
        | Flow(x, _, y)
        | StreamFlow(x, _, y)
        | MandInterrupts(x, y) => must_act(x, env, visiting) || must_act(y, env, visiting),
        LeftMerge(..) | RightMerge(..) | CommMerge(..) | LeftInterrupt(..) => true,
        Disrupt(x, _) | MultiInterrupt(x, _) | DisambDisrupt(x, _) | ExcFlow(x, _, _) | Neg(x) => {
            must_act(x, env, visiting)
        }
        Resume(_) => false,
        DoThenElse(x, y, z) => must_act(x, env, visiting) || (must_act(y, env, visiting) && must_act(z, env, visiting)),
        Var(n) => {
            if !visiting.insert(n.clone()) {
                return false;
            }
            let r = env.get(n).is_some_and(|d| must_act(d, env, visiting));
            visiting.remove(n);
            r
        }
    }
}

/// Var names occurring in `t` at positions not preceded by an action.
fn unguarded_refs(t: &Term, env: &ProcessEnv, out: &mut BTreeSet<String>) {
    use Term::*;
    match t {
        Var(n) => {
            out.insert(n.clone());
        }
        Seq(x, _) | Flow(x, _, _) | StreamFlow(x, _, _) | DisambSeq1(x, _) | DisambSeq2(x, _) | DisambSeqX(x, _) => {
            unguarded_refs(x, env, out);
            let y = &t.children()[1];
            if !must_act(x, env, &mut BTreeSet::new()) {
                unguarded_refs(y, env, out);
            }
        }
        DoThenElse(x, y, z) => {
            unguarded_refs(x, env, out);
            if !must_act(x, env, &mut BTreeSet::new()) {
                unguarded_refs(y, env, out);
            }
            unguarded_refs(z, env, out);
        }
        LeftMerge(x, _) | LeftInterrupt(x, _) => unguarded_refs(x, env, out),
        RightMerge(_, y) => unguarded_refs(y, env, out),
        _ => {
            for c in t.children() {
                unguarded_refs(c, env, out);
            }
        }
    }
}

/// Names of definitions that can reach themselves without performing an action.
pub fn unguarded_definitions(env: &ProcessEnv) -> BTreeSet<String> {
    let graph: BTreeMap<&str, BTreeSet<String>> = env
        .defs
        .iter()
        .map(|(n, body)| {
            let mut refs = BTreeSet::new();
            unguarded_refs(body, env, &mut refs);
            (n.as_str(), refs)
        })
        .collect();
    let mut out = BTreeSet::new();
    for start in graph.keys() {
        let mut stack: Vec<&str> = vec![start];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            for m in graph.get(n).into_iter().flatten() {
                if m == start {
                    out.insert(start.to_string());
                }
                if seen.insert(m.as_str()) {
                    stack.push(m.as_str());
                }
            }
        }
    }
    out
}

/// Checks every environment invariant; the result is empty iff all hold.
pub fn validate_env(env: &ProcessEnv) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (name, body) in &env.defs {
        for v in free_vars(body) {
            if !env.defs.contains_key(&v) {
                diags.push(Diagnostic::UndefinedName { name: v, referenced_from: Some(name.clone()) });
            }
        }
    }
    for name in unguarded_definitions(env) {
        diags.push(Diagnostic::Unguarded { name });
    }
    for v in env.gamma.associativity_violations() {
        diags.push(Diagnostic::Associativity(v));
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Term {
        Term::atom("a")
    }

    #[test]
    fn guarded_definition_is_valid() {
        let mut env = ProcessEnv::new();
        env.define("X", Term::alt(Term::seq(a(), Term::var("X")), Term::atom("b")));
        assert_eq!(validate_env(&env), vec![]);
    }

    #[test]
    fn unguarded_definition_is_reported() {
        let mut env = ProcessEnv::new();
        env.define("X", Term::alt(Term::var("X"), a()));
        assert_eq!(validate_env(&env), vec![Diagnostic::Unguarded { name: "X".into() }]);
    }

    #[test]
    fn mutual_recursion_through_a_guard_is_accepted() {
        let mut env = ProcessEnv::new();
        env.define("X", Term::alt(Term::var("Y"), a()));
        env.define("Y", Term::seq(Term::atom("b"), Term::var("X")));
        assert!(validate_env(&env).is_empty());
        env.define("Y", Term::seq(Term::one(), Term::var("X")));
        let d = validate_env(&env);
        assert_eq!(d.len(), 2, "{d:?}");
    }

    #[test]
    fn undefined_reference_is_reported() {
        let mut env = ProcessEnv::new();
        env.define("X", Term::seq(a(), Term::var("Z")));
        assert_eq!(
            validate_env(&env),
            vec![Diagnostic::UndefinedName { name: "Z".into(), referenced_from: Some("X".into()) }]
        );
    }

    #[test]
    fn associativity_violation_is_reported() {
        let gamma =
            CommunicationFunction::from_entries([("a", "b", "d"), ("d", "c", "e"), ("b", "c", "f"), ("a", "f", "g")]);
        let env = ProcessEnv::with_gamma(gamma);
        let d = validate_env(&env);
        assert_eq!(d.len(), 1);
        match &d[0] {
            Diagnostic::Associativity(v) => {
                assert_eq!(v.actions, ["a".to_string(), "b".into(), "c".into()]);
                assert_eq!(v.results, vec!["e".to_string(), "g".into()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn consistent_gamma_is_accepted() {
        let gamma =
            CommunicationFunction::from_entries([("a", "b", "d"), ("d", "c", "e"), ("b", "c", "f"), ("a", "f", "e")]);
        assert!(validate_env(&ProcessEnv::with_gamma(gamma)).is_empty());
    }

    #[test]
    fn gamma_is_commutative_and_reduces_multisets() {
        let g = CommunicationFunction::from_entries([("a", "b", "d"), ("d", "c", "e")]);
        assert_eq!(g.get("b", "a"), Some("d"));
        assert_eq!(g.reduce(&["c", "b", "a"]).as_deref(), Some("e"));
        assert_eq!(g.reduce(&["a", "c"]), None);
        assert_eq!(g.reduce(&["a"]).as_deref(), Some("a"));
    }

    #[test]
    fn free_vars_examples() {
        assert!(free_vars(&a()).is_empty());
        let s = free_vars(&Term::seq(a(), Term::var("X")));
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec!["X".to_string()]);
        let s = free_vars(&Term::alt(Term::var("X"), Term::var("X")));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn action_identity_ignores_yield() {
        assert_eq!(ActionLabel::with_yield("a", Value::Int(1)), ActionLabel::new("a"));
        assert_ne!(ActionLabel::new("a"), ActionLabel::new("b"));
    }

    #[test]
    fn identifier_rule() {
        assert!(is_identifier("a1_b"));
        assert!(!is_identifier("1a"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a-b"));
    }

    #[test]
    fn predicate_evaluation() {
        let mut b = BTreeMap::new();
        b.insert("p".to_string(), true);
        assert_eq!(Predicate::named("p").negate().eval(&b), Some(false));
        assert_eq!(Predicate::named("q").eval(&b), None);
        assert_eq!(Predicate::constant(false).eval(&b), Some(false));
    }
}
