use thiserror::Error;

use crate::term::{Binder, Outcome, PredicateAtom, Term, Value, ValueTag};

/// Which arrow a terminal outcome is routed through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    /// `~~(x:T)~~>` and `~~(x:T)~~>>`
    Value,
    /// `~/~(e:E)~~>`
    Exception,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("type mismatch: expected {expected}, got {actual}")]
    TypeMismatch { expected: ValueTag, actual: ValueTag },
    #[error("success without a value cannot bind `{0}`")]
    MissingValue(String),
    #[error("outcome `{0}` does not flow through this arrow")]
    WrongRoute(String),
}

impl FlowError {
    /// Exception name a failed binding raises at run time.
    pub fn exception_name(&self) -> &'static str {
        match self {
            FlowError::TypeMismatch { .. } => "TypeMismatch",
            FlowError::MissingValue(_) => "MissingValue",
            FlowError::WrongRoute(_) => "WrongRoute",
        }
    }
}

/// Binds the payload of a terminal outcome to `binder`.
pub fn flow_value(outcome: &Outcome, binder: &Binder, kind: FlowKind) -> Result<(String, Value), FlowError> {
    match (kind, outcome) {
        (FlowKind::Value, Outcome::Success(Some(v))) => {
            if binder.tag == ValueTag::Exc || v.tag() != binder.tag {
                return Err(FlowError::TypeMismatch { expected: binder.tag, actual: v.tag() });
            }
            Ok((binder.name.clone(), v.clone()))
        }
        (FlowKind::Value, Outcome::Success(None)) => Err(FlowError::MissingValue(binder.name.clone())),
        (FlowKind::Exception, Outcome::Failure(Some(e))) => match binder.tag {
            ValueTag::Exc | ValueTag::Str => Ok((binder.name.clone(), Value::Str(e.clone()))),
            other => Err(FlowError::TypeMismatch { expected: other, actual: ValueTag::Exc }),
        },
        (_, o) => Err(FlowError::WrongRoute(o.to_string())),
    }
}

/// Replaces predicate references to `name` in `t` by the bound boolean.
/// Inner binders of the same name shadow the substitution.
pub fn substitute(t: &Term, name: &str, value: &Value) -> Term {
    let Value::Bool(b) = value else {
        return t.clone();
    };
    subst_bool(t, name, *b)
}

fn subst_bool(t: &Term, name: &str, v: bool) -> Term {
    match t {
        Term::While(p) | Term::Guard(p) if p.atom == PredicateAtom::Named(name.to_string()) => {
            let mut p = p.clone();
            p.atom = PredicateAtom::Const(v);
            if matches!(t, Term::While(_)) {
                Term::While(p)
            } else {
                Term::Guard(p)
            }
        }
        Term::Flow(x, b, y) | Term::ExcFlow(x, b, y) | Term::StreamFlow(x, b, y) if b.name == name => {
            let x = Box::new(subst_bool(x, name, v));
            match t {
                Term::Flow(..) => Term::Flow(x, b.clone(), y.clone()),
                Term::ExcFlow(..) => Term::ExcFlow(x, b.clone(), y.clone()),
                _ => Term::StreamFlow(x, b.clone(), y.clone()),
            }
        }
        t => t.map_children(|c| Ok::<_, ()>(subst_bool(c, name, v))).unwrap(),
    }
}
