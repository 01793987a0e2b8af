#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use acpk::parser::{parse, parse_term};
use acpk::semantics::{derive, Lts, StepBudget, Transition};
use acpk::term::{ActionLabel, Outcome, ProcessEnv, Term};
use rand::Rng;

pub fn t(src: &str) -> Term {
    parse_term(src, &BTreeSet::new()).unwrap_or_else(|e| panic!("{src}: {e}"))
}

pub fn main_of(src: &str) -> Term {
    parse(&format!("main = {src}\n")).unwrap().main.unwrap()
}

pub fn lts_in(term: &Term, env: &ProcessEnv, depth: usize) -> Lts {
    derive(term, env, &BTreeMap::new(), StepBudget::depth(depth)).unwrap()
}

pub fn lts(src: &str) -> Lts {
    lts_in(&t(src), &ProcessEnv::new(), 8)
}

/// Greatest fixpoint of the bisimulation transfer conditions, computed by
/// deleting violating pairs from the full relation until nothing changes.
pub fn naive_bisimilar(a: &Lts, b: &Lts) -> bool {
    let sa = a.successors();
    let sb = b.successors();
    let sig = |l: &Lts, s: usize| (l.outcome(s).cloned(), l.truncated.contains(&s));
    let mut rel: BTreeSet<(usize, usize)> = BTreeSet::new();
    for p in 0..a.states {
        for q in 0..b.states {
            if sig(a, p) == sig(b, q) {
                rel.insert((p, q));
            }
        }
    }
    loop {
        let keep: BTreeSet<(usize, usize)> = rel
            .iter()
            .copied()
            .filter(|&(p, q)| {
                let fwd = sa[p].iter().all(|(l, p2)| {
                    sb[q].iter().any(|(m, q2)| l.to_string() == m.to_string() && rel.contains(&(*p2, *q2)))
                });
                let back = sb[q].iter().all(|(m, q2)| {
                    sa[p].iter().any(|(l, p2)| l.to_string() == m.to_string() && rel.contains(&(*p2, *q2)))
                });
                fwd && back
            })
            .collect();
        if keep.len() == rel.len() {
            break;
        }
        rel = keep;
    }
    rel.contains(&(a.initial, b.initial))
}

/// All traces up to `depth` and the subset that may end in success,
/// enumerated path by path.
pub fn lts_traces(l: &Lts, depth: usize) -> (BTreeSet<Vec<String>>, BTreeSet<Vec<String>>) {
    let succ = l.successors();
    let mut all = BTreeSet::new();
    let mut ok = BTreeSet::new();
    let mut stack = vec![(l.initial, Vec::<String>::new())];
    while let Some((s, w)) = stack.pop() {
        if matches!(l.outcome(s), Some(Outcome::Success(_))) {
            ok.insert(w.clone());
        }
        all.insert(w.clone());
        if w.len() == depth {
            continue;
        }
        for (a, t) in &succ[s] {
            let mut w2 = w.clone();
            w2.push(a.name.clone());
            stack.push((*t, w2));
        }
    }
    (all, ok)
}

pub fn words(ws: &[&str]) -> BTreeSet<Vec<String>> {
    ws.iter().map(|w| w.chars().map(|c| c.to_string()).collect()).collect()
}

fn shuffle(x: &[String], y: &[String], out: &mut BTreeSet<Vec<String>>, acc: &mut Vec<String>) {
    if x.is_empty() && y.is_empty() {
        out.insert(acc.clone());
        return;
    }
    if let Some((h, rest)) = x.split_first() {
        acc.push(h.clone());
        shuffle(rest, y, out, acc);
        acc.pop();
    }
    if let Some((h, rest)) = y.split_first() {
        acc.push(h.clone());
        shuffle(x, rest, out, acc);
        acc.pop();
    }
}

/// Successful traces of a recursion-free term over `0 1 a + ; &`, computed
/// as a language: union, concatenation and shuffle.
pub fn language(t: &Term) -> BTreeSet<Vec<String>> {
    match t {
        Term::Zero => BTreeSet::new(),
        Term::One(_) => BTreeSet::from([Vec::new()]),
        Term::Atom(l) => BTreeSet::from([vec![l.name.clone()]]),
        Term::Alt(x, y) => language(x).union(&language(y)).cloned().collect(),
        Term::Seq(x, y) => {
            let ly = language(y);
            language(x).iter().flat_map(|u| ly.iter().map(move |v| u.iter().chain(v).cloned().collect())).collect()
        }
        Term::Par(x, y) => {
            let mut out = BTreeSet::new();
            for u in language(x) {
                for v in language(y) {
                    shuffle(&u, &v, &mut out, &mut Vec::new());
                }
            }
            out
        }
        other => panic!("language oracle does not cover {other:?}"),
    }
}

/// Every prefix of some successful trace or of some path to deadlock, for a
/// term over `0 1 a + ;`. Prefixes that lead into `0` count.
pub fn prefixes(t: &Term) -> BTreeSet<Vec<String>> {
    match t {
        Term::Zero | Term::One(_) => BTreeSet::from([Vec::new()]),
        Term::Atom(l) => BTreeSet::from([Vec::new(), vec![l.name.clone()]]),
        Term::Alt(x, y) => prefixes(x).union(&prefixes(y)).cloned().collect(),
        Term::Seq(x, y) => {
            let mut out = prefixes(x);
            let py = prefixes(y);
            for u in language(x) {
                for v in &py {
                    out.insert(u.iter().chain(v).cloned().collect());
                }
            }
            out
        }
        other => panic!("prefix oracle does not cover {other:?}"),
    }
}

/// An LTS over `a`/`b` whose transition relation is read from the bits of
/// `edges` (bit `(from * n + to) * 2 + letter`) and whose successful states
/// are the set bits of `success`.
pub fn lts_from_bits(n: usize, edges: u128, success: u64, initial: usize) -> Lts {
    let mut transitions = Vec::new();
    for from in 0..n {
        for to in 0..n {
            for (k, name) in ["a", "b"].iter().enumerate() {
                if edges >> ((from * n + to) * 2 + k) & 1 == 1 {
                    transitions.push(Transition { from, label: ActionLabel::new(*name), to });
                }
            }
        }
    }
    let outcomes = (0..n).filter(|s| success >> s & 1 == 1).map(|s| (s, Outcome::Success(None))).collect();
    Lts { states: n, initial, transitions, outcomes, truncated: BTreeSet::new() }
}

/// Every LTS with exactly `n` states over `a`/`b`, all success markings.
pub fn all_lts(n: usize) -> Vec<Lts> {
    let mut out = Vec::new();
    for edges in 0..1u128 << (2 * n * n) {
        for success in 0..1u64 << n {
            out.push(lts_from_bits(n, edges, success, 0));
        }
    }
    out
}

/// A random LTS with `1..=max` states; edges appear with probability 1/4.
pub fn random_lts(rng: &mut impl Rng, max: usize) -> Lts {
    let n = rng.gen_range(1..=max);
    let mut edges = 0u128;
    for bit in 0..2 * n * n {
        if rng.gen_bool(0.25) {
            edges |= 1 << bit;
        }
    }
    lts_from_bits(n, edges, rng.gen_range(0..1u64 << n), 0)
}

/// Unfolds a single `;`-governed iteration pass by pass: atoms emit, `.`
/// and `..` offer an exit, `break` and a false `while` force one, `...`
/// and `..` restart the pass.
pub fn unfold(ops: &[&str], depth: usize) -> (BTreeSet<Vec<String>>, BTreeSet<Vec<String>>) {
    let mut all = BTreeSet::new();
    let mut ok = BTreeSet::new();
    let mut stack = vec![(0usize, Vec::<String>::new())];
    let mut seen = BTreeSet::new();
    while let Some((i, w)) = stack.pop() {
        if !seen.insert((i, w.clone())) {
            continue;
        }
        all.insert(w.clone());
        if i == ops.len() {
            ok.insert(w);
            continue;
        }
        match ops[i] {
            "..." => stack.push((0, w)),
            ".." => {
                ok.insert(w.clone());
                stack.push((0, w));
            }
            "." => {
                ok.insert(w.clone());
                stack.push((i + 1, w));
            }
            "break" | "while(false)" => {
                ok.insert(w);
            }
            "while(true)" => stack.push((i + 1, w)),
            a if w.len() < depth => {
                let mut w2 = w;
                w2.push(a.to_string());
                stack.push((i + 1, w2));
            }
            _ => {}
        }
    }
    (all, ok)
}
