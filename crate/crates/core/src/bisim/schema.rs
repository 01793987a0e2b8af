use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::bisimilar;
use crate::parser::render;
use crate::rewrite::Axiom;
use crate::semantics::{derive, StepBudget};
use crate::term::{CommunicationFunction, OpTag, ProcessEnv, Term};

/// Shape of the random closed terms substituted into axiom schemas.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub atoms: Vec<String>,
    pub ops: Vec<OpTag>,
    /// Maximum nesting of operators.
    pub max_depth: usize,
    pub gamma: CommunicationFunction,
    pub budget: StepBudget,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            atoms: ["a", "b", "c"].iter().map(|s| s.to_string()).collect(),
            ops: vec![OpTag::Alt, OpTag::Seq, OpTag::Par, OpTag::LeftMerge, OpTag::CommMerge],
            max_depth: 3,
            gamma: CommunicationFunction::from_entries([("a", "b", "c")]),
            budget: StepBudget::depth(8),
        }
    }
}

/// A random term over `0`, `1`, the configured atoms and operators.
pub fn random_term(rng: &mut impl Rng, cfg: &GenConfig, depth: usize) -> Term {
    if depth == 0 || cfg.ops.is_empty() || rng.gen_bool(0.3) {
        return match rng.gen_range(0..8) {
            0 => Term::Zero,
            1 => Term::one(),
            _ => Term::atom(&cfg.atoms[rng.gen_range(0..cfg.atoms.len())]),
        };
    }
    let tag = cfg.ops[rng.gen_range(0..cfg.ops.len())];
    let kids = (0..tag.arity()).map(|_| random_term(rng, cfg, depth - 1)).collect();
    Term::from_parts(tag, kids)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaFailure {
    pub sample: usize,
    pub lhs: String,
    pub rhs: String,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaReport {
    pub axiom: String,
    pub samples: usize,
    /// Samples whose systems hit the exploration bound.
    pub bounded: usize,
    pub failures: Vec<SchemaFailure>,
}

impl SchemaReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{}: {} samples, {} failures, {} bounded\n",
            self.axiom,
            self.samples,
            self.failures.len(),
            self.bounded
        );
        for f in &self.failures {
            s += &format!("  #{} {}  vs  {}: {}\n", f.sample, f.lhs, f.rhs, f.evidence);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Instantiates `ax` with `samples` random substitutions and compares both
/// sides by bisimulation.
pub fn check_axiom_schema(ax: &Axiom, samples: usize, cfg: &GenConfig, seed: u64) -> SchemaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env = ProcessEnv::with_gamma(cfg.gamma.clone());
    let bindings = BTreeMap::new();
    let (terms, actions) = ax.lhs.var_kinds();
    let mut report = SchemaReport { axiom: ax.name.clone(), samples, bounded: 0, failures: Vec::new() };
    for sample in 0..samples {
        let mut subst = BTreeMap::new();
        for v in &terms {
            subst.insert(v.to_string(), random_term(&mut rng, cfg, cfg.max_depth));
        }
        for v in &actions {
            subst.insert(v.to_string(), Term::atom(&cfg.atoms[rng.gen_range(0..cfg.atoms.len())]));
        }
        let (lhs, rhs) = (ax.lhs.instantiate(&subst), ax.rhs.instantiate(&subst));
        let fail = |evidence: String| SchemaFailure { sample, lhs: render(&lhs), rhs: render(&rhs), evidence };
        match (derive(&lhs, &env, &bindings, cfg.budget), derive(&rhs, &env, &bindings, cfg.budget)) {
            (Ok(a), Ok(b)) => {
                let r = bisimilar(&a, &b);
                if r.bounded_only {
                    report.bounded += 1;
                }
                if let Some(e) = r.evidence {
                    report.failures.push(fail(e.to_string()));
                }
            }
            (Err(e), _) | (_, Err(e)) => report.failures.push(fail(e.to_string())),
        }
    }
    report
}
