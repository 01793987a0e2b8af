use std::collections::{BTreeMap, HashMap};

use super::{Position, RewriteError, RewriteTrace, TraceStep};
use crate::parser::render;
use crate::semantics::{prefix, Semantics};
use crate::term::{ActionLabel, ProcessEnv, Term, Value};

pub const DEFAULT_FUEL: usize = 100_000;

/// Head normal form: a sum, a prefixed term, or a constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalForm {
    Alt(Box<NormalForm>, Box<NormalForm>),
    /// `a;x`; a bare atom is `a` followed by its own termination.
    Prefix(ActionLabel, Term),
    One(Option<Value>),
    Zero,
}

impl NormalForm {
    pub fn from_term(t: &Term) -> Option<NormalForm> {
        Some(match t {
            Term::Alt(x, y) => NormalForm::Alt(Box::new(Self::from_term(x)?), Box::new(Self::from_term(y)?)),
            Term::Atom(l) => NormalForm::Prefix(l.clone(), atom_continuation(l)),
            Term::Seq(a, x) => match &**a {
                Term::Atom(l) => NormalForm::Prefix(l.clone(), (**x).clone()),
                _ => return None,
            },
            Term::One(v) => NormalForm::One(v.clone()),
            Term::Zero => NormalForm::Zero,
            _ => return None,
        })
    }

    pub fn to_term(&self) -> Term {
        match self {
            NormalForm::Alt(x, y) => Term::alt(x.to_term(), y.to_term()),
            NormalForm::Prefix(l, x) => prefix(l, x.clone()),
            NormalForm::One(v) => Term::One(v.clone()),
            NormalForm::Zero => Term::Zero,
        }
    }

    /// Summands of a (nested) sum, left to right.
    pub fn summands(&self) -> Vec<&NormalForm> {
        match self {
            NormalForm::Alt(x, y) => {
                let mut v = x.summands();
                v.extend(y.summands());
                v
            }
            nf => vec![nf],
        }
    }
}

impl std::fmt::Display for NormalForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render(&self.to_term()))
    }
}

fn atom_continuation(l: &ActionLabel) -> Term {
    match &l.raises {
        Some(e) => Term::Raise(Some(e.clone())),
        None => Term::One(l.yield_value.clone()),
    }
}

/// Left-nested sum; empty is `0`.
pub(crate) fn sum(items: Vec<Term>) -> Term {
    items.into_iter().reduce(Term::alt).unwrap_or(Term::Zero)
}

pub(crate) fn summands(t: &Term) -> Vec<&Term> {
    match t {
        Term::Alt(x, y) => {
            let mut v = summands(x);
            v.extend(summands(y));
            v
        }
        t => vec![t],
    }
}

/// Splits a normal-form summand into its action and continuation.
fn as_prefix(t: &Term) -> Option<(&ActionLabel, Term)> {
    match t {
        Term::Atom(l) => Some((l, atom_continuation(l))),
        Term::Seq(a, x) => match &**a {
            Term::Atom(l) => Some((l, (**x).clone())),
            _ => None,
        },
        _ => None,
    }
}

fn success_value(nf: &Term) -> Option<Option<Value>> {
    summands(nf)
        .into_iter()
        .filter_map(|s| match s {
            Term::One(v) => Some(v.clone()),
            _ => None,
        })
        .min()
}

/// Continuations are normalised too when they denote finite behaviour.
fn finite(t: &Term) -> bool {
    !t.any(&|s| {
        matches!(
            s,
            Term::Var(_) | Term::MultiInterrupt(..) | Term::MandInterrupts(..) | Term::StreamFlow(..) | Term::Resume(_)
        )
    })
}

struct Normalizer<'a> {
    env: &'a ProcessEnv,
    bindings: BTreeMap<String, bool>,
    fuel: usize,
    trace: RewriteTrace,
    /// Results already derived in this run, keyed by rendered input.
    lemmas: HashMap<String, Term>,
}

impl Normalizer<'_> {
    fn record(&mut self, rule: &str, path: &[usize], cur: &mut Term, new: Term) -> Result<(), RewriteError> {
        if self.trace.steps.len() >= self.fuel {
            return Err(RewriteError::FuelExhausted(self.fuel));
        }
        self.trace.steps.push(TraceStep {
            rule: rule.to_string(),
            position: Position(path.to_vec()),
            before: cur.clone(),
            after: new.clone(),
        });
        *cur = new;
        Ok(())
    }

    fn child(&mut self, cur: &mut Term, i: usize, path: &mut Vec<usize>) -> Result<(), RewriteError> {
        let c = cur.child_mut(i).expect("child exists").clone();
        path.push(i);
        let out = self.nf(c, path);
        path.pop();
        *cur.child_mut(i).expect("child exists") = out?;
        Ok(())
    }

    /// Normalises `t`, reusing an earlier derivation for the same subterm
    /// as a single LEMMA step.
    fn nf(&mut self, t: Term, path: &mut Vec<usize>) -> Result<Term, RewriteError> {
        let key = render(&t);
        if let Some(known) = self.lemmas.get(&key).cloned() {
            let mut cur = t;
            if render(&known) != key {
                self.record("LEMMA", path, &mut cur, known)?;
            }
            return Ok(cur);
        }
        let out = self.derive(t, path)?;
        self.lemmas.insert(key, out.clone());
        Ok(out)
    }

    fn derive(&mut self, t: Term, path: &mut Vec<usize>) -> Result<Term, RewriteError> {
        use Term::*;
        let mut cur = t;
        loop {
            let next = match &cur {
                Zero | One(_) | Atom(_) | Raise(_) => return Ok(cur),
                Ellipsis | EllipsisOpt | OptBreak | Break | While(_) => {
                    return Err(RewriteError::UnexpandedIterationOperand(render(&cur)))
                }
                Var(n) => {
                    let body = self.env.get(n).ok_or_else(|| RewriteError::UnresolvedVar(n.clone()))?;
                    ("REC", body.clone())
                }
                Alt(..) => return self.alt(cur, path),
                Seq(..) => return self.seq(cur, path),
                LeftMerge(..) => return self.left_merge(cur, path),
                CommMerge(..) => return self.comm_merge(cur, path),
                TermMerge(..) => return self.term_merge(cur, path),
                Par(x, y) => {
                    let (x, y) = ((**x).clone(), (**y).clone());
                    let m = sum(vec![
                        TermMerge(Box::new(x.clone()), Box::new(y.clone())),
                        LeftMerge(Box::new(x.clone()), Box::new(y.clone())),
                        LeftMerge(Box::new(y.clone()), Box::new(x.clone())),
                        CommMerge(Box::new(x), Box::new(y)),
                    ]);
                    ("M", m)
                }
                RightMerge(x, y) => ("RM", LeftMerge(y.clone(), x.clone())),
                Neg(x) => ("NEG", Term::do_then_else((**x).clone(), Zero, Term::one())),
                _ => ("SOS", self.sos(&cur)?),
            };
            self.record(next.0, path, &mut cur, next.1)?;
        }
    }

    /// Expansion of an operator without its own axioms into the sum of its
    /// immediate steps.
    fn sos(&self, t: &Term) -> Result<Term, RewriteError> {
        let sem = Semantics::new(self.env, &self.bindings);
        let h = sem.head(t)?;
        let mut items: Vec<Term> = h.visible().map(|(l, k)| prefix(l, k.clone())).collect();
        if let Some(v) = &h.success {
            items.push(Term::One(v.clone()));
        }
        if items.is_empty() {
            if let Some(Some(e)) = h.failure() {
                return Ok(Term::Raise(Some(e)));
            }
        }
        Ok(sum(items))
    }

    fn alt(&mut self, mut cur: Term, path: &mut Vec<usize>) -> Result<Term, RewriteError> {
        self.child(&mut cur, 0, path)?;
        self.child(&mut cur, 1, path)?;
        let items: Vec<Term> = summands(&cur).into_iter().cloned().collect();
        let mut kept: Vec<Term> = items.iter().filter(|s| **s != Term::Zero).cloned().collect();
        if kept.len() < items.len() {
            self.record("A6", path, &mut cur, sum(kept.clone()))?;
        }
        let mut seen = std::collections::BTreeSet::new();
        let before = kept.len();
        kept.retain(|s| seen.insert(render(s)));
        if kept.len() < before {
            self.record("A3", path, &mut cur, sum(kept.clone()))?;
        }
        kept.sort_by_cached_key(render);
        let sorted = sum(kept);
        if render(&sorted) != render(&cur) || sorted != cur {
            self.record("A1/A2", path, &mut cur, sorted)?;
        }
        Ok(cur)
    }

    fn seq(&mut self, mut cur: Term, path: &mut Vec<usize>) -> Result<Term, RewriteError> {
        self.child(&mut cur, 0, path)?;
        let Term::Seq(x, y) = &cur else { unreachable!() };
        let (x, y) = ((**x).clone(), (**y).clone());
        match x {
            Term::Zero => {
                self.record("A7", path, &mut cur, Term::Zero)?;
                Ok(cur)
            }
            Term::One(_) => {
                self.record("A8", path, &mut cur, y)?;
                self.nf(cur, path)
            }
            Term::Alt(..) => {
                let dist = sum(summands(&x).into_iter().map(|s| Term::seq(s.clone(), y.clone())).collect());
                self.record("A4", path, &mut cur, dist)?;
                self.nf(cur, path)
            }
            Term::Seq(a, x2) => {
                let assoc = Term::Seq(a, Box::new(Term::seq(*x2, y)));
                self.record("A5", path, &mut cur, assoc)?;
                self.prefixed(cur, path)
            }
            Term::Atom(_) => self.prefixed(cur, path),
            _ => Ok(cur),
        }
    }

    /// `a;x`: normalise a finite continuation, then drop a trailing `1`.
    fn prefixed(&mut self, mut cur: Term, path: &mut Vec<usize>) -> Result<Term, RewriteError> {
        let Term::Seq(_, k) = &cur else { unreachable!() };
        if finite(k) {
            self.child(&mut cur, 1, path)?;
        }
        let Term::Seq(a, k) = &cur else { unreachable!() };
        let Term::Atom(l) = &**a else { unreachable!() };
        if let collapsed @ Term::Atom(_) = prefix(l, (**k).clone()) {
            self.record("A9", path, &mut cur, collapsed)?;
        }
        Ok(cur)
    }

    fn left_merge(&mut self, mut cur: Term, path: &mut Vec<usize>) -> Result<Term, RewriteError> {
        self.child(&mut cur, 0, path)?;
        let Term::LeftMerge(x, y) = &cur else { unreachable!() };
        let (x, y) = ((**x).clone(), (**y).clone());
        let (rule, next) = match &x {
            Term::One(_) => ("LM3", Term::Zero),
            Term::Zero | Term::Raise(_) => ("LM4", Term::Zero),
            Term::Alt(..) => (
                "LM1",
                sum(summands(&x)
                    .into_iter()
                    .map(|s| Term::LeftMerge(Box::new(s.clone()), Box::new(y.clone())))
                    .collect()),
            ),
            s => match as_prefix(s) {
                Some((l, k)) => ("LM2", Term::seq(Term::Atom(l.clone()), Term::par(k, y))),
                None => return Ok(cur),
            },
        };
        self.record(rule, path, &mut cur, next)?;
        self.nf(cur, path)
    }

    fn comm_merge(&mut self, mut cur: Term, path: &mut Vec<usize>) -> Result<Term, RewriteError> {
        self.child(&mut cur, 0, path)?;
        self.child(&mut cur, 1, path)?;
        let Term::CommMerge(x, y) = &cur else { unreachable!() };
        let mut items = Vec::new();
        for sx in summands(x) {
            for sy in summands(y) {
                if let (Some((a, kx)), Some((b, ky))) = (as_prefix(sx), as_prefix(sy)) {
                    if let Some(c) = self.env.gamma.reduce(&[a.name.as_str(), b.name.as_str()]) {
                        items.push(Term::seq(Term::atom(&c), Term::par(kx, ky)));
                    }
                }
            }
        }
        self.record("CM", path, &mut cur, sum(items))?;
        self.nf(cur, path)
    }

    fn term_merge(&mut self, mut cur: Term, path: &mut Vec<usize>) -> Result<Term, RewriteError> {
        self.child(&mut cur, 0, path)?;
        self.child(&mut cur, 1, path)?;
        let Term::TermMerge(x, y) = &cur else { unreachable!() };
        let next = match (success_value(x), success_value(y)) {
            (Some(v), Some(w)) => Term::One(v.or(w)),
            _ => Term::Zero,
        };
        self.record("TM", path, &mut cur, next)?;
        Ok(cur)
    }
}

/// Rewrites `t` to head normal form, recording every step. Continuations of
/// finite behaviour are normalised as well, so closed recursion-free terms
/// come out as fully expanded action trees.
pub fn normalize(t: &Term, env: &ProcessEnv, fuel: usize) -> Result<(NormalForm, RewriteTrace), RewriteError> {
    assert!(fuel > 0, "fuel must be positive");
    let mut n =
        Normalizer { env, bindings: BTreeMap::new(), fuel, trace: RewriteTrace::default(), lemmas: HashMap::new() };
    let out = n.nf(t.clone(), &mut Vec::new())?;
    let form = NormalForm::from_term(&out).ok_or_else(|| RewriteError::NoNormalForm(render(&out)))?;
    debug_assert_eq!(form.to_term(), out);
    Ok((form, n.trace))
}
