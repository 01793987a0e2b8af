//! Structural operational semantics.
//!
//! [`Semantics::head`] computes, for one term, its outgoing steps, whether it
//! may terminate successfully (and with which value) and, for terms that can
//! neither act nor succeed, the exception they failed with. Composite rules
//! that depend on an operand *not* being able to do something (or-parallel
//! cut-off, and-parallel failure, do-then-else) query the operand heads first;
//! because recursion is action-guarded this bottom-up order is well founded.
//!
//! Steps carry the multiset of primitive actions that take part in them so
//! that synchronisation composes across nested parallel operators: `a & b & c`
//! with `a|b = d` and `d|c = e` performs `e` whichever way it is bracketed.

mod flow;
mod lts;
mod run;

use std::collections::BTreeMap;

use thiserror::Error;

pub use flow::{flow_value, substitute, FlowError, FlowKind};
pub use lts::{derive, encapsulate, Lts, LtsExport, StepBudget, Transition};
pub use run::{run, run_interactive, RunError, RunResult};

use crate::parser::render;
use crate::term::{ActionLabel, ProcessEnv, Term, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("unresolved process name `{0}`")]
    UnresolvedVar(String),
    #[error("iteration operand `{0}` must be expanded before execution")]
    UnexpandedIterationOperand(String),
    #[error("predicate `{0}` has no binding")]
    UnboundPredicate(String),
    #[error("recursion through `{0}` is not guarded by an action")]
    Unguarded(String),
    #[error("initial state cannot be expanded: {0}")]
    BudgetExceeded(String),
}

/// One outgoing step of a term.
#[derive(Debug, Clone)]
pub struct Step {
    /// Primitive actions taking part, sorted by name.
    pub parts: Vec<ActionLabel>,
    /// The observable action, if the parts combine into one.
    pub label: Option<ActionLabel>,
    pub target: Term,
}

impl Step {
    fn single(label: ActionLabel, target: Term) -> Step {
        Step { parts: vec![label.clone()], label: Some(label), target }
    }
}

/// Immediate behaviour of a term.
#[derive(Debug, Clone, Default)]
pub struct Head {
    pub steps: Vec<Step>,
    /// `Some(v)` if the term may terminate successfully, yielding `v`.
    pub success: Option<Option<Value>>,
    /// Exception of a failed term (meaningful only when [`Head::failed`]).
    pub exception: Option<Option<String>>,
}

impl Head {
    fn succeed(value: Option<Value>) -> Head {
        Head { success: Some(value), ..Head::default() }
    }

    fn raise(e: Option<String>) -> Head {
        Head { exception: Some(e), ..Head::default() }
    }

    /// Steps with an observable label.
    pub fn visible(&self) -> impl Iterator<Item = (&ActionLabel, &Term)> {
        self.steps.iter().filter_map(|s| s.label.as_ref().map(|l| (l, &s.target)))
    }

    pub fn can_act(&self) -> bool {
        self.steps.iter().any(|s| s.label.is_some())
    }

    /// Cannot act and cannot terminate successfully.
    pub fn failed(&self) -> bool {
        !self.can_act() && self.success.is_none()
    }

    /// Failure exception, if the term has failed.
    pub fn failure(&self) -> Option<Option<String>> {
        if self.failed() {
            self.exception.clone()
        } else {
            None
        }
    }

    fn failed_with(&self) -> Option<String> {
        self.exception.clone().flatten()
    }
}

fn min_success(a: Option<Option<Value>>, b: Option<Option<Value>>) -> Option<Option<Value>> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn min_exception(a: Option<Option<String>>, b: Option<Option<String>>) -> Option<Option<String>> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// `x;y` with `1;y = y`, `0;y = 0` and failure propagation applied eagerly,
/// keeping derived state spaces small.
pub fn seq(x: Term, y: Term) -> Term {
    match x {
        Term::One(_) => y,
        Term::Zero => Term::Zero,
        Term::Raise(e) => Term::Raise(e),
        x => Term::seq(x, y),
    }
}

fn disrupt(x: Term, y: Term) -> Term {
    match x {
        Term::One(_) | Term::Zero | Term::Raise(_) => x,
        x => Term::Disrupt(Box::new(x), Box::new(y)),
    }
}

fn do_then_else(x: Term, y: Term, z: Term) -> Term {
    match x {
        Term::One(_) => y,
        Term::Zero | Term::Raise(_) => z,
        x => Term::do_then_else(x, y, z),
    }
}

/// The term `a·cont`, spelled `a` when nothing remains.
pub fn prefix(label: &ActionLabel, cont: Term) -> Term {
    match (&cont, &label.yield_value, &label.raises) {
        (Term::One(v), y, None) if v == y => Term::Atom(label.clone()),
        (Term::Raise(e), _, Some(r)) if e.as_ref() == Some(r) => Term::Atom(label.clone()),
        _ => Term::seq(Term::Atom(label.clone()), cont),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ParKind {
    And,
    AndCut,
    Or,
    OrCut,
}

impl ParKind {
    fn build(self, x: Term, y: Term) -> Term {
        let (x, y) = (Box::new(x), Box::new(y));
        match self {
            ParKind::And => Term::Par(x, y),
            ParKind::AndCut => Term::AndPar(x, y),
            ParKind::Or => Term::OrPar1(x, y),
            ParKind::OrCut => Term::OrPar2(x, y),
        }
    }
}

const MAX_UNFOLD: usize = 512;

/// Evaluation context: definitions, communication function and predicate
/// bindings.
pub struct Semantics<'a> {
    pub env: &'a ProcessEnv,
    pub bindings: &'a BTreeMap<String, bool>,
}

impl<'a> Semantics<'a> {
    pub fn new(env: &'a ProcessEnv, bindings: &'a BTreeMap<String, bool>) -> Self {
        Semantics { env, bindings }
    }

    pub fn head(&self, t: &Term) -> Result<Head, SemanticsError> {
        self.head_at(t, 0)
    }

    fn label_of(&self, parts: &[ActionLabel]) -> Option<ActionLabel> {
        match parts {
            [one] => Some(one.clone()),
            _ => {
                let names: Vec<&str> = parts.iter().map(|l| l.name.as_str()).collect();
                self.env.gamma.reduce(&names).map(ActionLabel::new)
            }
        }
    }

    fn communicates(&self, s: &Step) -> bool {
        s.parts.iter().all(|l| self.env.gamma.communicates(&l.name))
    }

    /// Joint steps of two concurrent operands.
    fn sync(&self, hx: &Head, hy: &Head, mut build: impl FnMut(Term, Term) -> Term) -> Vec<Step> {
        let mut out = Vec::new();
        if self.env.gamma.is_empty() {
            return out;
        }
        for sx in hx.steps.iter().filter(|s| self.communicates(s)) {
            for sy in hy.steps.iter().filter(|s| self.communicates(s)) {
                let mut parts = sx.parts.clone();
                parts.extend(sy.parts.iter().cloned());
                parts.sort();
                let label = self.label_of(&parts);
                out.push(Step { parts, label, target: build(sx.target.clone(), sy.target.clone()) });
            }
        }
        out
    }

    fn head_at(&self, t: &Term, depth: usize) -> Result<Head, SemanticsError> {
        use Term::*;
        let h = |t: &Term| self.head_at(t, depth);
        Ok(match t {
            Zero => Head::default(),
            One(v) => Head::succeed(v.clone()),
            Raise(e) => Head::raise(e.clone()),
            Atom(l) => {
                let target = match &l.raises {
                    Some(e) => Raise(Some(e.clone())),
                    None => One(l.yield_value.clone()),
                };
                Head { steps: vec![Step::single(l.clone(), target)], ..Head::default() }
            }
            Guard(p) => match p.eval(self.bindings) {
                Some(true) => Head::succeed(None),
                Some(false) => Head::default(),
                None => return Err(SemanticsError::UnboundPredicate(p.to_string())),
            },
            Ellipsis | EllipsisOpt | OptBreak | Break | While(_) => {
                return Err(SemanticsError::UnexpandedIterationOperand(render(t)))
            }
            Var(n) => {
                if depth >= MAX_UNFOLD {
                    return Err(SemanticsError::Unguarded(n.clone()));
                }
                let body = self.env.get(n).ok_or_else(|| SemanticsError::UnresolvedVar(n.clone()))?;
                self.head_at(body, depth + 1)?
            }
            Alt(x, y) => {
                let (hx, hy) = (h(x)?, h(y)?);
                let mut steps = hx.steps;
                steps.extend(hy.steps);
                Head {
                    steps,
                    success: min_success(hx.success, hy.success),
                    exception: min_exception(hx.exception, hy.exception),
                }
            }
            Seq(x, y) => {
                let hx = h(x)?;
                let mut steps: Vec<Step> = hx
                    .steps
                    .iter()
                    .map(|s| Step { target: seq(s.target.clone(), (**y).clone()), ..s.clone() })
                    .collect();
                let mut success = None;
                let mut exception = hx.failure();
                if hx.success.is_some() {
                    let hy = h(y)?;
                    steps.extend(hy.steps);
                    success = hy.success;
                    exception = min_exception(exception, hy.exception);
                }
                Head { steps, success, exception }
            }
            Par(x, y) => self.parallel(ParKind::And, x, y, depth)?,
            AndPar(x, y) => self.parallel(ParKind::AndCut, x, y, depth)?,
            OrPar1(x, y) => self.parallel(ParKind::Or, x, y, depth)?,
            OrPar2(x, y) => self.parallel(ParKind::OrCut, x, y, depth)?,
            LeftMerge(x, y) => {
                let hx = h(x)?;
                let steps = hx
                    .steps
                    .into_iter()
                    .map(|s| Step { target: Term::par(s.target.clone(), (**y).clone()), ..s })
                    .collect();
                Head { steps, ..Head::default() }
            }
            RightMerge(x, y) => {
                let hy = h(y)?;
                let steps = hy
                    .steps
                    .into_iter()
                    .map(|s| Step { target: Term::par((**x).clone(), s.target.clone()), ..s })
                    .collect();
                Head { steps, ..Head::default() }
            }
            CommMerge(x, y) => {
                let (hx, hy) = (h(x)?, h(y)?);
                Head { steps: self.sync(&hx, &hy, Term::par), ..Head::default() }
            }
            TermMerge(x, y) => {
                let (hx, hy) = (h(x)?, h(y)?);
                match (hx.success, hy.success) {
                    (Some(v), Some(w)) => Head::succeed(v.or(w)),
                    _ => Head::default(),
                }
            }
            Disrupt(x, y) => {
                let hx = h(x)?;
                let mut steps: Vec<Step> = hx
                    .steps
                    .iter()
                    .map(|s| Step { target: disrupt(s.target.clone(), (**y).clone()), ..s.clone() })
                    .collect();
                if hx.can_act() {
                    steps.extend(h(y)?.steps);
                }
                Head { steps, success: hx.success.clone(), exception: hx.failure() }
            }
            Interrupt(x, y) => {
                let (hx, hy) = (h(x)?, h(y)?);
                let mut steps: Vec<Step> = hx
                    .steps
                    .iter()
                    .map(|s| Step { target: Interrupt(Box::new(s.target.clone()), y.clone()), ..s.clone() })
                    .collect();
                steps.extend(
                    hy.steps.iter().map(|s| Step { target: seq(s.target.clone(), (**x).clone()), ..s.clone() }),
                );
                if hy.success.is_some() {
                    steps.extend(hx.steps.iter().cloned());
                }
                let success = match (&hx.success, &hy.success) {
                    (Some(v), Some(_)) => Some(v.clone()),
                    _ => None,
                };
                Head { steps, success, exception: min_exception(hx.failure(), hy.failure()) }
            }
            MultiInterrupt(x, y) => {
                let (hx, hy) = (h(x)?, h(y)?);
                let mut steps: Vec<Step> = hx
                    .steps
                    .iter()
                    .map(|s| Step { target: MultiInterrupt(Box::new(s.target.clone()), y.clone()), ..s.clone() })
                    .collect();
                steps.extend(hy.steps.iter().map(|s| Step { target: seq(s.target.clone(), t.clone()), ..s.clone() }));
                Head { steps, success: hx.success.clone(), exception: hx.failure() }
            }
            LeftInterrupt(x, y) => {
                let hx = h(x)?;
                let steps = hx
                    .steps
                    .into_iter()
                    .map(|s| Step { target: Interrupt(Box::new(s.target.clone()), y.clone()), ..s })
                    .collect();
                Head { steps, ..Head::default() }
            }
            MandInterrupts(x, _) | StreamFlow(x, _, _) => self.rearming(t, x, depth)?,
            Resume(node) => {
                let (x, rebuild) = rearming_parts(node);
                let hx = h(x)?;
                let steps: Vec<Step> =
                    hx.steps.iter().map(|s| Step { target: rebuild(s.target.clone()), ..s.clone() }).collect();
                let success = if hx.can_act() { None } else { Some(None) };
                Head { steps, success, exception: None }
            }
            DoThenElse(x, y, z) => {
                let hx = h(x)?;
                let mut steps: Vec<Step> = hx
                    .steps
                    .iter()
                    .map(|s| Step { target: do_then_else(s.target.clone(), (**y).clone(), (**z).clone()), ..s.clone() })
                    .collect();
                let mut success = None;
                let mut exception = None;
                if hx.success.is_some() {
                    let hy = h(y)?;
                    steps.extend(hy.steps);
                    success = hy.success;
                    exception = hy.exception;
                } else if hx.failed() {
                    return h(z);
                }
                Head { steps, success, exception }
            }
            Neg(x) => h(&Term::do_then_else((**x).clone(), Zero, One(None)))?,
            Flow(x, binder, y) => {
                let hx = h(x)?;
                let mut steps: Vec<Step> = hx
                    .steps
                    .iter()
                    .map(|s| Step { target: Flow(Box::new(s.target.clone()), binder.clone(), y.clone()), ..s.clone() })
                    .collect();
                let mut success = None;
                let mut exception = hx.failure();
                if let Some(v) = &hx.success {
                    let cont = match flow_value(&crate::term::Outcome::Success(v.clone()), binder, FlowKind::Value) {
                        Ok((name, value)) => substitute(y, &name, &value),
                        Err(e) => Raise(Some(e.exception_name().to_string())),
                    };
                    let hc = h(&cont)?;
                    steps.extend(hc.steps);
                    success = hc.success;
                    exception = min_exception(exception, hc.exception);
                }
                Head { steps, success, exception }
            }
            ExcFlow(x, binder, z) => {
                let hx = h(x)?;
                let steps: Vec<Step> = hx
                    .steps
                    .iter()
                    .map(|s| Step {
                        target: ExcFlow(Box::new(s.target.clone()), binder.clone(), z.clone()),
                        ..s.clone()
                    })
                    .collect();
                if let Some(Some(e)) = hx.failure() {
                    let out = crate::term::Outcome::Failure(Some(e));
                    let cont = match flow_value(&out, binder, FlowKind::Exception) {
                        Ok((name, value)) => substitute(z, &name, &value),
                        Err(err) => Raise(Some(err.exception_name().to_string())),
                    };
                    return h(&cont);
                }
                Head { steps, success: hx.success.clone(), exception: hx.failure() }
            }
            DisambAlt(..) | DisambSeq1(..) | DisambSeq2(..) | DisambSeqX(..) | DisambDisrupt(..) => {
                let factored = crate::rewrite::factor_node(self, t)?;
                h(&factored)?
            }
        })
    }

    fn parallel(&self, kind: ParKind, x: &Term, y: &Term, depth: usize) -> Result<Head, SemanticsError> {
        let hx = self.head_at(x, depth)?;
        let hy = self.head_at(y, depth)?;
        if kind == ParKind::OrCut {
            if let Some(v) = min_success(hx.success.clone(), hy.success.clone()) {
                let v = match (&hx.success, &hy.success) {
                    (Some(Some(a)), _) => Some(a.clone()),
                    (_, Some(Some(b))) => Some(b.clone()),
                    _ => v,
                };
                return Ok(Head::succeed(v));
            }
        }
        if kind == ParKind::AndCut && (hx.failed() || hy.failed()) {
            let e = if hx.failed() { hx.failed_with() } else { hy.failed_with() };
            return Ok(Head::raise(e));
        }
        let mut steps: Vec<Step> =
            hx.steps.iter().map(|s| Step { target: kind.build(s.target.clone(), y.clone()), ..s.clone() }).collect();
        steps.extend(hy.steps.iter().map(|s| Step { target: kind.build(x.clone(), s.target.clone()), ..s.clone() }));
        steps.extend(self.sync(&hx, &hy, |a, b| kind.build(a, b)));
        let success = match kind {
            ParKind::And | ParKind::AndCut => match (&hx.success, &hy.success) {
                (Some(v), Some(w)) => Some(v.clone().or(w.clone())),
                _ => None,
            },
            ParKind::Or | ParKind::OrCut => match (&hx.success, &hy.success) {
                (Some(v), _) => Some(v.clone()),
                (None, w) => w.clone(),
            },
        };
        let exception = min_exception(hx.failure(), hy.failure());
        Ok(Head { steps, success, exception })
    }

    /// `MandInterrupts(x, y)` and `StreamFlow(x, d, y)`: `x` runs; at each
    /// success point of `x` the body runs once, then `x` resumes.
    fn rearming(&self, node: &Term, x: &Term, depth: usize) -> Result<Head, SemanticsError> {
        let (_, rebuild) = rearming_parts(node);
        let hx = self.head_at(x, depth)?;
        let mut steps: Vec<Step> =
            hx.steps.iter().map(|s| Step { target: rebuild(s.target.clone()), ..s.clone() }).collect();
        let mut success = None;
        let mut exception = hx.failure();
        if let Some(v) = &hx.success {
            let body = match node {
                Term::MandInterrupts(_, y) => (**y).clone(),
                Term::StreamFlow(_, binder, y) => {
                    match flow_value(&crate::term::Outcome::Success(v.clone()), binder, FlowKind::Value) {
                        Ok((name, value)) => substitute(y, &name, &value),
                        Err(e) => Term::Raise(Some(e.exception_name().to_string())),
                    }
                }
                _ => unreachable!(),
            };
            let resume = Term::Resume(Box::new(node.clone()));
            let hb = self.head_at(&body, depth)?;
            steps.extend(hb.steps.iter().map(|s| Step { target: seq(s.target.clone(), resume.clone()), ..s.clone() }));
            if let Some(bv) = &hb.success {
                if !hx.can_act() {
                    success = Some(bv.clone());
                }
            }
            exception = min_exception(exception, hb.failure());
        }
        Ok(Head { steps, success, exception })
    }
}

/// Left operand of a re-arming node and a constructor replacing it.
fn rearming_parts(node: &Term) -> (&Term, Box<dyn Fn(Term) -> Term + '_>) {
    match node {
        Term::MandInterrupts(x, y) => (x, Box::new(move |x2| Term::MandInterrupts(Box::new(x2), y.clone()))),
        Term::StreamFlow(x, b, y) => (x, Box::new(move |x2| Term::StreamFlow(Box::new(x2), b.clone(), y.clone()))),
        other => (other, Box::new(|x2| x2)),
    }
}
