use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use thiserror::Error;

use super::{Semantics, SemanticsError};
use crate::parser::render;
use crate::term::{ActionLabel, Outcome, ProcessEnv, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunResult {
    Done(Outcome),
    Pending,
}

impl std::fmt::Display for RunResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunResult::Done(o) => write!(f, "{o}"),
            RunResult::Pending => f.write_str("Pending"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("no transition for action `{action}` at step {step}")]
    NoSuchTransition { action: String, step: usize },
    #[error("action `{action}` is ambiguous at step {step}: {count} transitions match")]
    AmbiguousTransition { action: String, count: usize, step: usize },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Distinct successors of `t` by action, keyed by rendered target.
fn enabled(sem: &Semantics, t: &Term) -> Result<(Vec<(ActionLabel, Term)>, super::Head), SemanticsError> {
    let head = sem.head(t)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (l, target) in head.visible() {
        if seen.insert((l.to_string(), render(target))) {
            out.push((l.clone(), target.clone()));
        }
    }
    Ok((out, head))
}

fn settle(head: &super::Head) -> RunResult {
    if let Some(v) = &head.success {
        RunResult::Done(Outcome::Success(v.clone()))
    } else if head.failed() {
        RunResult::Done(Outcome::Failure(head.exception.clone().flatten()))
    } else {
        RunResult::Pending
    }
}

/// Replays `script` deterministically. After the script is exhausted the
/// current state's outcome is returned; a state that can neither act nor
/// succeed reports `Failure`.
pub fn run(
    t: &Term,
    env: &ProcessEnv,
    script: &[&str],
    bindings: &BTreeMap<String, bool>,
) -> Result<RunResult, RunError> {
    let sem = Semantics::new(env, bindings);
    let mut cur = t.clone();
    for (step, action) in script.iter().enumerate() {
        let (moves, _) = enabled(&sem, &cur)?;
        let mut matching: Vec<Term> = moves.into_iter().filter(|(l, _)| l.name == *action).map(|(_, t)| t).collect();
        match matching.len() {
            0 => return Err(RunError::NoSuchTransition { action: action.to_string(), step }),
            1 => cur = matching.pop().unwrap(),
            count => return Err(RunError::AmbiguousTransition { action: action.to_string(), count, step }),
        }
    }
    let head = sem.head(&cur)?;
    Ok(settle(&head))
}

/// Lists the enabled actions at each step and reads the next choice (an
/// action name or a listed index) from `input` until the process terminates
/// or the input ends.
pub fn run_interactive(
    t: &Term,
    env: &ProcessEnv,
    bindings: &BTreeMap<String, bool>,
    input: &mut impl BufRead,
    output: &mut impl Write,
) -> Result<RunResult, RunError> {
    let sem = Semantics::new(env, bindings);
    let mut cur = t.clone();
    let mut step = 0;
    loop {
        let (moves, head) = enabled(&sem, &cur)?;
        let state = settle(&head);
        if moves.is_empty() {
            return Ok(state);
        }
        let _ = writeln!(output, "step {step}: {state}");
        for (i, (l, _)) in moves.iter().enumerate() {
            let _ = writeln!(output, "  [{i}] {l}");
        }
        let _ = output.flush();
        let mut line = String::new();
        if input.read_line(&mut line).unwrap_or(0) == 0 {
            return Ok(state);
        }
        let choice = line.trim();
        let picked: Vec<usize> = match choice.parse::<usize>() {
            Ok(i) if i < moves.len() => vec![i],
            _ => moves.iter().enumerate().filter(|(_, (l, _))| l.name == choice).map(|(i, _)| i).collect(),
        };
        match picked.as_slice() {
            [i] => cur = moves[*i].1.clone(),
            [] => {
                let _ = writeln!(output, "no transition for `{choice}`");
                continue;
            }
            many => {
                let _ = writeln!(output, "`{choice}` is ambiguous ({} transitions); pick an index", many.len());
                continue;
            }
        }
        step += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;
    use crate::term::Value;

    fn t(s: &str) -> Term {
        parse_term(s, &BTreeSet::new()).unwrap()
    }

    fn go(src: &str, script: &[&str]) -> Result<RunResult, RunError> {
        run(&t(src), &ProcessEnv::new(), script, &BTreeMap::new())
    }

    #[test]
    fn choice_resolves_by_action() {
        assert_eq!(go("a + b", &["a"]), Ok(RunResult::Done(Outcome::Success(None))));
    }

    #[test]
    fn pending_and_missing() {
        assert_eq!(go("a;b", &["a"]), Ok(RunResult::Pending));
        assert_eq!(go("a;b", &["b"]), Err(RunError::NoSuchTransition { action: "b".into(), step: 0 }));
    }

    #[test]
    fn ambiguity_is_reported() {
        assert_eq!(
            go("a;b;a;c + a;d", &["a"]),
            Err(RunError::AmbiguousTransition { action: "a".into(), count: 2, step: 0 })
        );
    }

    #[test]
    fn yields_and_exceptions_surface() {
        assert_eq!(go("a;b^7", &["a", "b"]), Ok(RunResult::Done(Outcome::Success(Some(Value::Int(7))))));
        assert_eq!(go("a!IOError", &["a"]), Ok(RunResult::Done(Outcome::Failure(Some("IOError".into())))));
    }

    #[test]
    fn interactive_session() {
        let mut input = std::io::Cursor::new("a\n0\n");
        let mut out = Vec::new();
        let r = run_interactive(&t("a;(b + c)"), &ProcessEnv::new(), &BTreeMap::new(), &mut input, &mut out).unwrap();
        assert_eq!(r, RunResult::Done(Outcome::Success(None)));
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("[0] a"));
        assert!(text.contains("[1] c"));
    }
}
