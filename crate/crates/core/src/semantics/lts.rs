use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Semantics, SemanticsError};
use crate::parser::render;
use crate::term::{ActionLabel, Outcome, ProcessEnv, Term};

/// Exploration bounds for [`derive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepBudget {
    pub max_depth: usize,
    pub max_states: usize,
}

impl StepBudget {
    pub fn new(max_depth: usize, max_states: usize) -> Self {
        assert!(max_depth >= 1 && max_states >= 1, "budget bounds must be positive");
        StepBudget { max_depth, max_states }
    }

    pub fn depth(max_depth: usize) -> Self {
        Self::new(max_depth, 20_000)
    }
}

impl Default for StepBudget {
    fn default() -> Self {
        Self::depth(8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub label: ActionLabel,
    pub to: usize,
}

/// A labelled transition system with states numbered `0..states` in
/// breadth-first discovery order; state 0 is initial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    pub states: usize,
    pub initial: usize,
    pub transitions: Vec<Transition>,
    pub outcomes: BTreeMap<usize, Outcome>,
    pub truncated: BTreeSet<usize>,
}

impl Lts {
    pub fn successors(&self) -> Vec<Vec<(&ActionLabel, usize)>> {
        let mut out = vec![Vec::new(); self.states];
        for t in &self.transitions {
            out[t.from].push((&t.label, t.to));
        }
        out
    }

    pub fn outcome(&self, s: usize) -> Option<&Outcome> {
        self.outcomes.get(&s)
    }

    pub fn is_success(&self, s: usize) -> bool {
        matches!(self.outcomes.get(&s), Some(Outcome::Success(_)))
    }

    /// No transitions and no successful termination.
    pub fn is_failed(&self, s: usize) -> bool {
        !self.is_success(s) && !self.truncated.contains(&s) && !self.transitions.iter().any(|t| t.from == s)
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.transitions.iter().map(|t| t.label.name.as_str()).collect()
    }

    /// Deterministic text export.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "initial {} states {}", self.initial, self.states);
        for t in &self.transitions {
            let _ = writeln!(s, "{} {} {}", t.from, t.label, t.to);
        }
        for (st, o) in &self.outcomes {
            let _ = writeln!(s, "outcome {st} {o}");
        }
        for st in &self.truncated {
            let _ = writeln!(s, "truncated {st}");
        }
        s
    }

    pub fn to_export(&self) -> LtsExport {
        LtsExport {
            initial: self.initial,
            states: self.states,
            transitions: self
                .transitions
                .iter()
                .map(|t| ExportTransition { from: t.from, action: t.label.to_string(), to: t.to })
                .collect(),
            outcomes: self.outcomes.iter().map(|(s, o)| ExportOutcome { state: *s, outcome: o.clone() }).collect(),
            truncated: self.truncated.iter().copied().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_export()).expect("serializable")
    }

    /// Renumbers reachable states in breadth-first order, visiting successors
    /// in transition order.
    fn canonical(
        states: usize,
        initial: usize,
        mut trans: Vec<Transition>,
        outcomes: BTreeMap<usize, Outcome>,
        truncated: BTreeSet<usize>,
    ) -> Lts {
        trans.sort_by(|a, b| {
            (a.from, &a.label.name, a.label.to_string(), a.to).cmp(&(b.from, &b.label.name, b.label.to_string(), b.to))
        });
        trans.dedup_by(|a, b| a.from == b.from && a.to == b.to && a.label.to_string() == b.label.to_string());
        let mut succ = vec![Vec::new(); states];
        for t in &trans {
            succ[t.from].push(t);
        }
        let mut id = vec![usize::MAX; states];
        let mut order = Vec::new();
        let mut q = VecDeque::from([initial]);
        id[initial] = 0;
        order.push(initial);
        while let Some(s) = q.pop_front() {
            for t in &succ[s] {
                if id[t.to] == usize::MAX {
                    id[t.to] = order.len();
                    order.push(t.to);
                    q.push_back(t.to);
                }
            }
        }
        let mut transitions: Vec<Transition> = trans
            .iter()
            .filter(|t| id[t.from] != usize::MAX)
            .map(|t| Transition { from: id[t.from], label: t.label.clone(), to: id[t.to] })
            .collect();
        transitions.sort_by(|a, b| {
            (a.from, &a.label.name, a.label.to_string(), a.to).cmp(&(b.from, &b.label.name, b.label.to_string(), b.to))
        });
        Lts {
            states: order.len(),
            initial: 0,
            transitions,
            outcomes: outcomes.into_iter().filter(|(s, _)| id[*s] != usize::MAX).map(|(s, o)| (id[s], o)).collect(),
            truncated: truncated.into_iter().filter(|s| id[*s] != usize::MAX).map(|s| id[s]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportTransition {
    pub from: usize,
    pub action: String,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportOutcome {
    pub state: usize,
    pub outcome: Outcome,
}

/// Structured form of the text export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtsExport {
    pub initial: usize,
    pub states: usize,
    pub transitions: Vec<ExportTransition>,
    pub outcomes: Vec<ExportOutcome>,
    pub truncated: Vec<usize>,
}

/// Explores the behaviour of `t` breadth first. States at the depth bound, or
/// whose successors no longer fit the state bound, are not expanded and are
/// flagged truncated when they can still act.
pub fn derive(
    t: &Term,
    env: &ProcessEnv,
    bindings: &BTreeMap<String, bool>,
    budget: StepBudget,
) -> Result<Lts, SemanticsError> {
    let sem = Semantics::new(env, bindings);
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut terms: Vec<Term> = Vec::new();
    let mut depth: Vec<usize> = Vec::new();
    let mut trans = Vec::new();
    let mut outcomes = BTreeMap::new();
    let mut truncated = BTreeSet::new();

    index.insert(render(t), 0);
    terms.push(t.clone());
    depth.push(0);
    let mut next = 0;
    while next < terms.len() {
        let s = next;
        next += 1;
        let head = sem.head(&terms[s])?;
        if let Some(v) = &head.success {
            outcomes.insert(s, Outcome::Success(v.clone()));
        } else if let Some(e) = head.failure() {
            outcomes.insert(s, Outcome::Failure(e));
        }
        let visible: Vec<(ActionLabel, Term)> = head.visible().map(|(l, t)| (l.clone(), t.clone())).collect();
        if visible.is_empty() {
            continue;
        }
        if depth[s] >= budget.max_depth {
            truncated.insert(s);
            continue;
        }
        let keys: Vec<String> = visible.iter().map(|(_, t)| render(t)).collect();
        let fresh: BTreeSet<&String> = keys.iter().filter(|k| !index.contains_key(*k)).collect();
        if terms.len() + fresh.len() > budget.max_states {
            if s == 0 {
                return Err(SemanticsError::BudgetExceeded(format!(
                    "{} successor states exceed the bound of {}",
                    fresh.len() + 1,
                    budget.max_states
                )));
            }
            truncated.insert(s);
            continue;
        }
        for ((label, target), key) in visible.into_iter().zip(keys) {
            let to = match index.get(&key) {
                Some(&i) => i,
                None => {
                    let i = terms.len();
                    index.insert(key, i);
                    terms.push(target);
                    depth.push(depth[s] + 1);
                    i
                }
            };
            trans.push(Transition { from: s, label, to });
        }
    }
    Ok(Lts::canonical(terms.len(), 0, trans, outcomes, truncated))
}

/// Removes transitions whose action is in `hidden` and prunes states that are
/// no longer reachable.
pub fn encapsulate(l: &Lts, hidden: &BTreeSet<String>) -> Lts {
    let trans = l.transitions.iter().filter(|t| !hidden.contains(&t.label.name)).cloned().collect();
    Lts::canonical(l.states, l.initial, trans, l.outcomes.clone(), l.truncated.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;
    use crate::term::CommunicationFunction;

    fn lts(src: &str, env: &ProcessEnv) -> Lts {
        let t = parse_term(src, &BTreeSet::new()).unwrap();
        derive(&t, env, &BTreeMap::new(), StepBudget::default()).unwrap()
    }

    #[test]
    fn sequence_has_three_states() {
        let l = lts("a;b", &ProcessEnv::new());
        assert_eq!(l.to_text(), "initial 0 states 3\n0 a 1\n1 b 2\noutcome 2 Success\n");
    }

    #[test]
    fn one_exports_success() {
        let l = lts("1", &ProcessEnv::new());
        assert_eq!(l.to_text(), "initial 0 states 1\noutcome 0 Success\n");
    }

    #[test]
    fn synchronisation_and_encapsulation() {
        let env = ProcessEnv::with_gamma(CommunicationFunction::from_entries([("send", "recv", "msg")]));
        let l = lts("send & recv", &env);
        let hidden: BTreeSet<String> = ["send".to_string(), "recv".to_string()].into();
        let e = encapsulate(&l, &hidden);
        assert_eq!(e.to_text(), "initial 0 states 2\n0 msg 1\noutcome 1 Success\n");
        assert_eq!(encapsulate(&l, &BTreeSet::new()), l);
    }

    #[test]
    fn hiding_everything_leaves_a_deadlock() {
        let l = lts("a;b", &ProcessEnv::new());
        let e = encapsulate(&l, &["a".to_string(), "b".to_string()].into());
        assert_eq!(e.states, 1);
        assert!(e.transitions.is_empty());
        assert!(e.outcomes.is_empty());
        assert!(e.is_failed(0));
    }

    #[test]
    fn depth_bound_truncates() {
        let mut env = ProcessEnv::new();
        env.define("X", parse_term("a;(X & X)", &["X".to_string()].into()).unwrap());
        let l = derive(&Term::var("X"), &env, &BTreeMap::new(), StepBudget::depth(3)).unwrap();
        assert!(!l.truncated.is_empty());
        assert!(l.to_text().contains("truncated"));
    }

    #[test]
    fn json_export_mirrors_text() {
        let l = lts("a^5 + raise(E)", &ProcessEnv::new());
        let j: serde_json::Value = serde_json::from_str(&l.to_json()).unwrap();
        assert_eq!(j["states"], 2);
        assert_eq!(j["transitions"][0]["action"], "a^5");
        assert_eq!(j["outcomes"][0]["outcome"]["kind"], "Success");
    }
}
