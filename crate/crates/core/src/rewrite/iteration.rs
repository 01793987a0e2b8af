use super::RewriteError;
use crate::parser::render;
use crate::term::{unguarded_definitions, OpTag, ProcessEnv, Term};

fn symbol(tag: Option<OpTag>) -> String {
    match tag {
        None => "top level".to_string(),
        Some(tag) => {
            let probe = Term::from_parts(tag, vec![Term::atom("x"); tag.arity()]);
            let text = render(&probe);
            let inner = text.replace(['x', '(', ')'], "");
            let inner = inner.trim();
            if inner.is_empty() {
                format!("{tag:?}")
            } else {
                inner.to_string()
            }
        }
    }
}

fn chain<'a>(t: &'a Term, tag: OpTag, out: &mut Vec<&'a Term>) {
    match t.parts() {
        Some((g, kids)) if g == tag => kids.into_iter().for_each(|k| chain(k, tag, out)),
        _ => out.push(t),
    }
}

struct Expander {
    env: ProcessEnv,
    fresh: Vec<String>,
}

impl Expander {
    fn expand(&mut self, t: &Term, under: Option<OpTag>) -> Result<Term, RewriteError> {
        if t.is_iteration_operand() {
            return Err(RewriteError::IterationUnderUnsupportedOperator {
                operand: render(t),
                operator: symbol(under),
            });
        }
        let Some((tag, _)) = t.parts() else {
            return t.map_children(|c| self.expand(c, None));
        };
        if matches!(tag, OpTag::Seq | OpTag::Alt | OpTag::Par | OpTag::OrPar2) {
            let mut items = Vec::new();
            chain(t, tag, &mut items);
            if items.iter().any(|i| i.is_iteration_operand()) {
                return self.loop_for(tag, &items);
            }
        }
        t.map_children(|c| self.expand(c, Some(tag)))
    }

    fn loop_for(&mut self, tag: OpTag, items: &[&Term]) -> Result<Term, RewriteError> {
        let name = self.env.fresh_name("X");
        // reserve the name before expanding nested loops
        self.env.define(name.clone(), Term::Zero);
        let x = Term::var(&name);
        let body = if tag == OpTag::Seq {
            let mut acc = x.clone();
            for item in items.iter().rev() {
                acc = match item {
                    Term::Ellipsis => acc,
                    Term::EllipsisOpt | Term::OptBreak => Term::alt(Term::one(), acc),
                    Term::Break => Term::one(),
                    Term::While(p) => Term::do_then_else(Term::Guard(p.clone()), acc, Term::one()),
                    other => Term::seq(self.expand(other, Some(tag))?, acc),
                };
            }
            acc
        } else {
            let mut operands = Vec::new();
            let mut exits = Vec::new();
            for item in items {
                match item {
                    Term::Ellipsis => {}
                    Term::EllipsisOpt | Term::OptBreak => exits.push(Term::OptBreak),
                    Term::Break => exits.push(Term::Break),
                    Term::While(p) => exits.push(Term::While(p.clone())),
                    other => operands.push(self.expand(other, Some(tag))?),
                }
            }
            let body = operands.into_iter().reduce(|a, b| Term::from_parts(tag, vec![a, b]));
            let Some(body) = body else {
                return Err(RewriteError::UnguardedLoop(name));
            };
            if tag == OpTag::Alt {
                let mut acc = Term::seq(body, x.clone());
                for e in exits {
                    let exit = match e {
                        Term::While(p) => Term::do_then_else(Term::Guard(p), Term::Zero, Term::one()),
                        _ => Term::one(),
                    };
                    acc = Term::alt(acc, exit);
                }
                acc
            } else {
                let mut cont = x.clone();
                for e in exits.into_iter().rev() {
                    cont = match e {
                        Term::Break => Term::one(),
                        Term::While(p) => Term::do_then_else(Term::Guard(p), cont, Term::one()),
                        _ => Term::alt(Term::one(), cont),
                    };
                }
                Term::seq(body, cont)
            }
        };
        self.env.define(name.clone(), body);
        self.fresh.push(name.clone());
        Ok(x)
    }
}

/// Replaces every chain of `;`, `+`, `&` or `||` containing an iteration
/// operand by a fresh recursive definition, in `t` and in every definition of
/// `env`.
///
/// Under `;` the loop is `X = x1;...;xn;X` with `...` dropped, `.` (and the
/// second half of `..`) turning the rest of the pass into `1 + rest`, `break`
/// ending it and `while(p)` testing `p` at its position. Under the other
/// operators the loop body runs as a whole before the next pass:
/// `X = (x1 * ... * xn);X`, with exits added as `+ 1` under `+` and as an
/// optional or mandatory stop after the body under `&` and `||`.
pub fn expand_iteration(t: &Term, env: &ProcessEnv) -> Result<(Term, ProcessEnv), RewriteError> {
    let mut ex = Expander { env: env.clone(), fresh: Vec::new() };
    for (name, body) in env.defs.iter() {
        let out = ex.expand(body, None)?;
        ex.env.define(name.clone(), out);
    }
    let out = ex.expand(t, None)?;
    let unguarded = unguarded_definitions(&ex.env);
    if let Some(n) = ex.fresh.iter().find(|n| unguarded.contains(*n)) {
        return Err(RewriteError::UnguardedLoop(n.clone()));
    }
    Ok((out, ex.env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_term};

    fn t(s: &str) -> Term {
        parse_term(s, &Default::default()).unwrap()
    }

    fn body(env: &ProcessEnv, name: &str) -> String {
        render(env.get(name).unwrap())
    }

    #[test]
    fn plain_repetition() {
        let spec = parse("live = searchSequence ...\nsearchSequence = a;b\n").unwrap();
        let live = spec.env.get("live").unwrap().clone();
        let (_, env) = expand_iteration(&live, &spec.env).unwrap();
        assert_eq!(body(&env, "live"), "X0");
        assert_eq!(body(&env, "X0"), "searchSequence;X0");
    }

    #[test]
    fn optional_break_after_each_pass() {
        let (out, env) = expand_iteration(&t("a;.."), &ProcessEnv::new()).unwrap();
        assert_eq!(out, Term::var("X0"));
        assert_eq!(body(&env, "X0"), "a;(1 + X0)");
    }

    #[test]
    fn while_false_exits_at_once() {
        let (_, env) = expand_iteration(&t("while(false);a"), &ProcessEnv::new()).unwrap();
        assert_eq!(body(&env, "X0"), "do if(false) then a;X0 else 1");
    }

    #[test]
    fn choice_and_parallel_loops() {
        let (_, env) = expand_iteration(&t("a + b + ..."), &ProcessEnv::new()).unwrap();
        assert_eq!(body(&env, "X0"), "(a + b);X0");
        let (_, env) = expand_iteration(&t("a + . + ..."), &ProcessEnv::new()).unwrap();
        assert_eq!(body(&env, "X0"), "a;X0 + 1");
        let (_, env) = expand_iteration(&t("a & b & ..."), &ProcessEnv::new()).unwrap();
        assert_eq!(body(&env, "X0"), "(a & b);X0");
        let (_, env) = expand_iteration(&t("a || b || .."), &ProcessEnv::new()).unwrap();
        assert_eq!(body(&env, "X0"), "(a || b);(1 + X0)");
    }

    #[test]
    fn nested_loops_get_distinct_names() {
        let (out, env) = expand_iteration(&t("(a;...) + (b;...)"), &ProcessEnv::new()).unwrap();
        assert_eq!(render(&out), "X0 + X1");
        assert_eq!(body(&env, "X1"), "b;X1");
    }

    #[test]
    fn rejected_placements() {
        let env = ProcessEnv::new();
        assert!(matches!(
            expand_iteration(&t("a %/% ..."), &env),
            Err(RewriteError::IterationUnderUnsupportedOperator { .. })
        ));
        assert!(matches!(
            expand_iteration(&t("..."), &env),
            Err(RewriteError::IterationUnderUnsupportedOperator { .. })
        ));
        assert!(matches!(expand_iteration(&t("1;..."), &env), Err(RewriteError::UnguardedLoop(_))));
        assert!(matches!(expand_iteration(&t("... + ."), &env), Err(RewriteError::UnguardedLoop(_))));
    }

    #[test]
    fn output_is_free_of_operands() {
        let (out, env) = expand_iteration(&t("a;b;..;c"), &ProcessEnv::new()).unwrap();
        assert!(!out.any(&Term::is_iteration_operand));
        assert!(env.defs.values().all(|b| !b.any(&Term::is_iteration_operand)));
    }
}
