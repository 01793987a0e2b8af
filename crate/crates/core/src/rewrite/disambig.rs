use std::collections::{BTreeMap, BTreeSet};

use super::normalize::{sum, summands};
use super::RewriteError;
use crate::parser::render;
use crate::semantics::{prefix, seq, Head, Semantics, SemanticsError};
use crate::term::{ActionLabel, ProcessEnv, Term, Value};

/// Steps grouped by action, in order of first appearance.
fn by_action(steps: impl IntoIterator<Item = (ActionLabel, Term)>) -> Vec<(ActionLabel, Vec<Term>)> {
    let mut out: Vec<(ActionLabel, Vec<Term>)> = Vec::new();
    for (l, k) in steps {
        match out.iter_mut().find(|(m, _)| m.to_string() == l.to_string()) {
            Some((_, ks)) => ks.push(k),
            None => out.push((l, vec![k])),
        }
    }
    out
}

fn steps_of(h: &Head, cont: impl Fn(&Term) -> Term) -> Vec<(ActionLabel, Term)> {
    h.visible().map(|(l, k)| (l.clone(), cont(k))).collect()
}

/// Shares every action heading both sides: `a;x ⊕ a;y` becomes `a;(x ⊙ y)`.
fn merge_heads(
    left: Vec<(ActionLabel, Term)>,
    right: Vec<(ActionLabel, Term)>,
    combine: impl Fn(Term, Term) -> Term,
    success: Option<Option<Value>>,
) -> Term {
    let left = by_action(left);
    let mut right = by_action(right);
    let mut items = Vec::new();
    for (l, ks) in left {
        let k = sum(ks);
        match right.iter().position(|(m, _)| m.to_string() == l.to_string()) {
            Some(i) => {
                let (_, rs) = right.remove(i);
                items.push(prefix(&l, combine(k, sum(rs))));
            }
            None => items.push(prefix(&l, k)),
        }
    }
    items.extend(right.into_iter().map(|(l, rs)| prefix(&l, sum(rs))));
    if let Some(v) = success {
        items.push(Term::One(v));
    }
    sum(items)
}

fn failed(h: &Head) -> Option<String> {
    h.failure().flatten()
}

/// One level of factoring for a disambiguating node; continuations may still
/// contain disambiguating operators.
pub(crate) fn factor_node(sem: &Semantics, t: &Term) -> Result<Term, SemanticsError> {
    let both = |x: &Term, y: &Term| -> Result<(Head, Head), SemanticsError> { Ok((sem.head(x)?, sem.head(y)?)) };
    let out = match t {
        Term::DisambAlt(x, y) => {
            let (hx, hy) = both(x, y)?;
            let success = match (&hx.success, &hy.success) {
                (Some(v), Some(w)) => Some(v.clone().min(w.clone())),
                (v, w) => v.clone().or(w.clone()),
            };
            let exc = failed(&hx).or(failed(&hy));
            let out = merge_heads(
                steps_of(&hx, Clone::clone),
                steps_of(&hy, Clone::clone),
                |a, b| Term::DisambAlt(Box::new(a), Box::new(b)),
                success,
            );
            (out, exc, hx.failed() && hy.failed())
        }
        Term::DisambSeq1(p, q) | Term::DisambSeq2(p, q) | Term::DisambSeqX(p, q) => {
            let hp = sem.head(p)?;
            let left = steps_of(&hp, |k| seq(k.clone(), (**q).clone()));
            let mut right = Vec::new();
            let mut success = None;
            let mut exc = failed(&hp);
            if hp.success.is_some() {
                let hq = sem.head(q)?;
                right = steps_of(&hq, Clone::clone);
                success = hq.success.clone();
                exc = exc.or(failed(&hq));
            }
            let combine = |a: Term, b: Term| match t {
                Term::DisambSeq1(..) => Term::OrPar1(Box::new(a), Box::new(b)),
                Term::DisambSeq2(..) => Term::OrPar2(Box::new(a), Box::new(b)),
                _ => Term::DisambAlt(Box::new(a), Box::new(b)),
            };
            let dead = left.is_empty() && right.is_empty() && success.is_none();
            (merge_heads(left, right, combine, success), exc, dead)
        }
        Term::DisambDisrupt(x, y) => {
            let hx = sem.head(x)?;
            let left = steps_of(&hx, |k| match k {
                Term::One(_) | Term::Zero | Term::Raise(_) => k.clone(),
                k => Term::Disrupt(Box::new(k.clone()), y.clone()),
            });
            let right = if hx.can_act() { steps_of(&sem.head(y)?, Clone::clone) } else { Vec::new() };
            let combine = |a: Term, b: Term| Term::DisambAlt(Box::new(a), Box::new(b));
            (merge_heads(left, right, combine, hx.success.clone()), failed(&hx), hx.failed())
        }
        t => return Ok(t.clone()),
    };
    Ok(match out {
        (_, Some(e), true) => Term::Raise(Some(e)),
        (t, _, _) => t,
    })
}

/// Factors every disambiguating operator away. Each factoring step below a
/// node consumes one unit of `depth`.
pub fn disambiguate(t: &Term, env: &ProcessEnv, depth: usize) -> Result<Term, RewriteError> {
    let bindings = BTreeMap::new();
    let sem = Semantics::new(env, &bindings);
    walk(&sem, t, depth, depth)
}

fn walk(sem: &Semantics, t: &Term, left: usize, limit: usize) -> Result<Term, RewriteError> {
    if !t.any(&Term::is_disambiguating) {
        return Ok(t.clone());
    }
    if t.is_disambiguating() {
        if left == 0 {
            return Err(RewriteError::DepthExceeded(limit));
        }
        let f = factor_node(sem, t)?;
        return walk(sem, &f, left - 1, limit);
    }
    t.map_children(|c| walk(sem, c, left, limit))
}

fn seq_items(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Seq(x, y) => {
            seq_items(x, out);
            seq_items(y, out);
        }
        Term::One(None) => {}
        t => out.push(canonical(t)),
    }
}

/// Representative of a term modulo associativity of `;` and `+`,
/// commutativity and idempotence of `+`, and the unit laws of `0` and `1`.
pub fn canonical(t: &Term) -> Term {
    match t {
        Term::Seq(..) => {
            let mut items = Vec::new();
            seq_items(t, &mut items);
            items.into_iter().rev().reduce(|acc, x| Term::seq(x, acc)).unwrap_or_else(Term::one)
        }
        Term::Alt(..) => {
            let mut seen = BTreeSet::new();
            let mut items: Vec<Term> = summands(t)
                .into_iter()
                .map(canonical)
                .filter(|s| *s != Term::Zero)
                .filter(|s| seen.insert(render(s)))
                .collect();
            items.sort_by_cached_key(render);
            sum(items)
        }
        t => t.map_children(|c| Ok::<_, ()>(canonical(c))).unwrap(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn file(s: &str) -> Term {
        parse(&format!("main = {s}\n")).unwrap().main.unwrap()
    }

    fn check(input: &str, expected: &str) {
        let out = disambiguate(&file(input), &ProcessEnv::new(), 16).unwrap();
        assert_eq!(render(&canonical(&out)), render(&canonical(&file(expected))), "{input}");
    }

    #[test]
    fn shared_prefix_is_factored() {
        check("a b a c |+| a d", "a (b a c + d)");
    }

    #[test]
    fn optional_prefix_before_sequence() {
        check("(a b + 1)|; a d", "a (b a d | d)");
    }

    #[test]
    fn disrupt_factoring() {
        check("a b |/| a c", "a (b + c + a c)");
    }

    #[test]
    fn disjoint_heads_are_a_plain_choice() {
        check("a |+| b", "a + b");
    }

    #[test]
    fn recursion_hits_the_depth_limit() {
        let spec = parse("X = a X |+| a b\n").unwrap();
        let x = spec.env.get("X").unwrap().clone();
        assert_eq!(disambiguate(&x, &spec.env, 4), Err(RewriteError::DepthExceeded(4)));
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canonical(&file("(a;b);c")), canonical(&file("a;(b;c)")));
        assert_eq!(canonical(&file("b + a + 0 + a")), canonical(&file("a + b")));
        assert_eq!(canonical(&file("1;a;1")), Term::atom("a"));
    }
}
