//! Strong bisimilarity and bounded trace equivalence of derived transition
//! systems, plus randomised checking of axiom schemas.

mod schema;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

pub use schema::{check_axiom_schema, random_term, GenConfig, SchemaFailure, SchemaReport};

use crate::semantics::Lts;
use crate::term::{Outcome, Value};

/// Blocks of states of the disjoint union of two systems. States of the
/// second system are offset by the size of the first.
/// A state's block together with the blocks its moves reach.
type RefineKey<'a> = (usize, BTreeSet<(&'a str, usize)>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<BTreeSet<usize>>,
}

impl Partition {
    fn block_of(&self) -> BTreeMap<usize, usize> {
        self.blocks.iter().enumerate().flat_map(|(i, b)| b.iter().map(move |s| (*s, i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    /// Actions leading to the pair of states that differ.
    pub trace: Vec<String>,
    pub reason: String,
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.trace.is_empty() {
            write!(f, "initially: {}", self.reason)
        } else {
            write!(f, "after {}: {}", self.trace.join(" "), self.reason)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimResult {
    pub equivalent: bool,
    /// Either system was cut off by its exploration bound.
    pub bounded_only: bool,
    pub evidence: Option<Evidence>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct Signature {
    outcome: Option<Outcome>,
    truncated: bool,
}

fn describe(sig: &Signature) -> String {
    match (&sig.outcome, sig.truncated) {
        (_, true) => "cut off by the exploration bound".to_string(),
        (Some(o), _) => o.to_string(),
        (None, _) => "no termination".to_string(),
    }
}

struct Union<'a> {
    a: &'a Lts,
    b: &'a Lts,
    succ: Vec<Vec<(String, usize)>>,
    sig: Vec<Signature>,
}

impl<'a> Union<'a> {
    fn new(a: &'a Lts, b: &'a Lts) -> Self {
        let off = a.states;
        let n = a.states + b.states;
        let mut succ = vec![Vec::new(); n];
        for t in &a.transitions {
            succ[t.from].push((t.label.to_string(), t.to));
        }
        for t in &b.transitions {
            succ[t.from + off].push((t.label.to_string(), t.to + off));
        }
        let sig = (0..n)
            .map(|s| {
                let (l, i) = if s < off { (a, s) } else { (b, s - off) };
                Signature { outcome: l.outcome(i).cloned(), truncated: l.truncated.contains(&i) }
            })
            .collect();
        Union { a, b, succ, sig }
    }

    fn refine(&self) -> Partition {
        let n = self.succ.len();
        let mut ids: BTreeMap<&Signature, usize> = BTreeMap::new();
        let mut block: Vec<usize> = self
            .sig
            .iter()
            .map(|s| {
                let k = ids.len();
                *ids.entry(s).or_insert(k)
            })
            .collect();
        let mut count = ids.len();
        loop {
            let mut keys: BTreeMap<RefineKey, usize> = BTreeMap::new();
            let next: Vec<usize> = (0..n)
                .map(|s| {
                    let moves = self.succ[s].iter().map(|(l, t)| (l.as_str(), block[*t])).collect();
                    let k = keys.len();
                    *keys.entry((block[s], moves)).or_insert(k)
                })
                .collect();
            let stable = keys.len() == count;
            count = keys.len();
            block = next;
            if stable {
                break;
            }
        }
        let mut blocks = vec![BTreeSet::new(); count];
        for (s, b) in block.into_iter().enumerate() {
            blocks[b].insert(s);
        }
        Partition { blocks }
    }

    /// Shortest action sequence to a pair of inequivalent states whose
    /// difference is immediate.
    fn evidence(&self, part: &Partition) -> Evidence {
        let block = part.block_of();
        let start = (self.a.initial, self.b.initial + self.a.states);
        let mut seen = BTreeSet::from([start]);
        let mut q = VecDeque::from([(start, Vec::new())]);
        while let Some(((p, r), path)) = q.pop_front() {
            if self.sig[p] != self.sig[r] {
                return Evidence {
                    trace: path,
                    reason: format!("left is {}, right is {}", describe(&self.sig[p]), describe(&self.sig[r])),
                };
            }
            let labels: BTreeSet<&str> = self.succ[p].iter().chain(&self.succ[r]).map(|(l, _)| l.as_str()).collect();
            for l in labels {
                let tp: Vec<usize> = self.succ[p].iter().filter(|(m, _)| m == l).map(|(_, t)| *t).collect();
                let tr: Vec<usize> = self.succ[r].iter().filter(|(m, _)| m == l).map(|(_, t)| *t).collect();
                if tr.is_empty() || tp.is_empty() {
                    let side = if tr.is_empty() { "left" } else { "right" };
                    let other = if tr.is_empty() { "right" } else { "left" };
                    return Evidence { trace: path, reason: format!("{side} can perform `{l}`, {other} cannot") };
                }
                let bp: BTreeSet<usize> = tp.iter().map(|t| block[t]).collect();
                let br: BTreeSet<usize> = tr.iter().map(|t| block[t]).collect();
                if bp == br {
                    continue;
                }
                let mut next = path.clone();
                next.push(l.to_string());
                for &x in &tp {
                    for &y in &tr {
                        if block[&x] != block[&y] && seen.insert((x, y)) {
                            q.push_back(((x, y), next.clone()));
                        }
                    }
                }
            }
        }
        Evidence { trace: Vec::new(), reason: "initial states are in different classes".to_string() }
    }
}

/// Coarsest partition of the disjoint union of `a` and `b` that respects
/// outcomes, truncation marks and labelled moves.
pub fn partition(a: &Lts, b: &Lts) -> Partition {
    Union::new(a, b).refine()
}

/// Decides strong bisimilarity of the initial states.
pub fn bisimilar(a: &Lts, b: &Lts) -> BisimResult {
    let u = Union::new(a, b);
    let part = u.refine();
    let block = part.block_of();
    let equivalent = block[&a.initial] == block[&(b.initial + a.states)];
    BisimResult {
        equivalent,
        bounded_only: !a.truncated.is_empty() || !b.truncated.is_empty(),
        evidence: (!equivalent).then(|| u.evidence(&part)),
    }
}

/// How a trace ends.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum End {
    Success(Option<Value>),
    Failure(Option<String>),
    Deadlock,
    Truncated,
    /// The trace may be extended.
    Open,
}

fn ends(l: &Lts, s: usize, succ: &[Vec<(String, usize)>]) -> Vec<End> {
    let mut out = Vec::new();
    match l.outcome(s) {
        Some(Outcome::Success(v)) => out.push(End::Success(v.clone())),
        Some(Outcome::Failure(e)) => out.push(End::Failure(e.clone())),
        None => {}
    }
    if l.truncated.contains(&s) {
        out.push(End::Truncated);
    } else if succ[s].is_empty() && l.outcome(s).is_none() {
        out.push(End::Deadlock);
    }
    if !succ[s].is_empty() {
        out.push(End::Open);
    }
    out
}

/// Every trace of at most `depth` actions with the ways it can end.
pub fn traces(l: &Lts, depth: usize) -> BTreeMap<Vec<String>, BTreeSet<End>> {
    let mut succ = vec![Vec::new(); l.states];
    for t in &l.transitions {
        succ[t.from].push((t.label.to_string(), t.to));
    }
    let mut out = BTreeMap::new();
    let mut frontier: Vec<(Vec<String>, BTreeSet<usize>)> = vec![(Vec::new(), BTreeSet::from([l.initial]))];
    for d in 0..=depth {
        let mut next: BTreeMap<Vec<String>, BTreeSet<usize>> = BTreeMap::new();
        for (w, states) in frontier {
            let tags: BTreeSet<End> = states.iter().flat_map(|s| ends(l, *s, &succ)).collect();
            out.insert(w.clone(), tags);
            if d == depth {
                continue;
            }
            for s in &states {
                for (a, t) in &succ[*s] {
                    let mut w2 = w.clone();
                    w2.push(a.clone());
                    next.entry(w2).or_default().insert(*t);
                }
            }
        }
        frontier = next.into_iter().collect();
    }
    out
}

/// Traces that end in success, failure or deadlock, with that ending.
pub fn completed_traces(l: &Lts, depth: usize) -> BTreeSet<(Vec<String>, End)> {
    traces(l, depth)
        .into_iter()
        .flat_map(|(w, ends)| {
            ends.into_iter().filter(|e| !matches!(e, End::Open | End::Truncated)).map(move |e| (w.clone(), e))
        })
        .collect()
}

/// Same traces up to `depth`, each ending the same ways.
pub fn trace_equivalent(a: &Lts, b: &Lts, depth: usize) -> bool {
    traces(a, depth) == traces(b, depth)
}
