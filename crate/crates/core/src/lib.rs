//! An executable kernel for ACP-style process algebra: parsing, axiom-directed
//! rewriting, operational semantics and bisimulation checking.

pub mod bisim;
pub mod parser;
pub mod rewrite;
pub mod semantics;
pub mod suites;
pub mod term;

pub use parser::{parse, parse_term, render, ParseError, SourceSpec};
pub use rewrite::{normalize, NormalForm, RewriteError, RewriteTrace};
pub use semantics::{derive, Lts, StepBudget};
pub use term::{ActionLabel, CommunicationFunction, Outcome, ProcessEnv, Term};
