use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use acpk::bisim::{bisimilar, trace_equivalent};
use acpk::parser::{parse, parse_bindings, parse_gamma, render_source};
use acpk::rewrite::{expand_iteration, normalize, RewriteError, DEFAULT_FUEL};
use acpk::semantics::{derive, encapsulate, run, run_interactive, Lts, RunError, SemanticsError, StepBudget};
use acpk::suites;
use acpk::term::{validate_env, Diagnostic, ProcessEnv, Term};

/// `print!` that ignores a closed stdout.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const EXIT_DIFFERENT: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SEMANTIC: u8 = 3;
const EXIT_FUEL: u8 = 4;
const EXIT_BOUNDED: u8 = 5;

#[derive(Parser)]
#[command(name = "acpk", version, about = "Process algebra kernel: normalise, explore and compare process terms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bisim,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Axioms,
    Lint,
    Disambig,
}

#[derive(clap::Args)]
struct Context {
    /// Communication table, one `a b -> c` per line
    #[arg(long)]
    gamma: Option<PathBuf>,
    /// Predicate bindings, one `name = true|false` per line
    #[arg(long)]
    bindings: Option<PathBuf>,
}

#[derive(clap::Args)]
struct Bounds {
    /// Maximum exploration depth
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Maximum number of states
    #[arg(long, default_value_t = 20_000)]
    max_states: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite `main` to head normal form
    Normalize {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Print every rewrite step before the result
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        ctx: Context,
    },
    /// Replace iteration operands by recursive definitions
    Expand { file: PathBuf },
    /// Derive the transition system of `main`
    Lts {
        file: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        /// Actions to encapsulate, comma separated
        #[arg(long, value_delimiter = ',')]
        hide: Vec<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        ctx: Context,
    },
    /// Compare the `main` terms of two files
    Equiv {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long, value_enum, default_value = "bisim")]
        mode: Mode,
        #[arg(long, value_delimiter = ',')]
        hide: Vec<String>,
        #[command(flatten)]
        ctx: Context,
    },
    /// Execute `main` along a script of actions
    Run {
        file: PathBuf,
        #[arg(long, value_delimiter = ',')]
        script: Vec<String>,
        /// Choose actions from standard input
        #[arg(long, conflicts_with = "script")]
        interactive: bool,
        #[command(flatten)]
        ctx: Context,
    },
    /// Run a verification suite
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Sampling seed; falls back to $ACPK_SEED, then 0
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<SemanticsError> for Failure {
    fn from(e: SemanticsError) -> Self {
        Failure::new(EXIT_SEMANTIC, e.to_string())
    }
}

impl From<RewriteError> for Failure {
    fn from(e: RewriteError) -> Self {
        let code = if matches!(e, RewriteError::FuelExhausted(_)) { EXIT_FUEL } else { EXIT_SEMANTIC };
        Failure::new(code, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

/// Parses `path`, attaches γ, checks the environment and expands iteration.
fn load(path: &Path, ctx: Option<&Context>) -> Result<(Term, ProcessEnv), Failure> {
    let spec = parse(&read(path)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}:{e}", path.display())))?;
    let mut env = spec.env;
    if let Some(g) = ctx.and_then(|c| c.gamma.as_deref()) {
        env.gamma = parse_gamma(&read(g)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}:{e}", g.display())))?;
    }
    let main =
        spec.main.ok_or_else(|| Failure::new(EXIT_SEMANTIC, format!("{}: no `main` definition", path.display())))?;
    let mut probe = env.clone();
    probe.define("main", main.clone());
    let mut fatal = Vec::new();
    for d in validate_env(&probe) {
        match d {
            Diagnostic::Associativity(_) => eprintln!("warning: {d}"),
            d => fatal.push(d.to_string()),
        }
    }
    if !fatal.is_empty() {
        return Err(Failure::new(EXIT_SEMANTIC, fatal.join("\n")));
    }
    Ok(expand_iteration(&main, &env)?)
}

fn bindings(ctx: &Context) -> Result<BTreeMap<String, bool>, Failure> {
    match &ctx.bindings {
        None => Ok(BTreeMap::new()),
        Some(p) => parse_bindings(&read(p)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}:{e}", p.display()))),
    }
}

fn lts_of(path: &Path, ctx: &Context, bounds: &Bounds, hide: &[String]) -> Result<Lts, Failure> {
    let (main, env) = load(path, Some(ctx))?;
    let l = derive(&main, &env, &bindings(ctx)?, StepBudget::new(bounds.depth, bounds.max_states))?;
    let hidden: BTreeSet<String> = hide.iter().cloned().collect();
    Ok(if hidden.is_empty() { l } else { encapsulate(&l, &hidden) })
}

fn seed(flag: Option<u64>) -> Result<u64, Failure> {
    match flag {
        Some(s) => Ok(s),
        None => match std::env::var("ACPK_SEED") {
            Ok(v) => v.trim().parse().map_err(|_| Failure::new(EXIT_PARSE, format!("ACPK_SEED is not a number: {v}"))),
            Err(_) => Ok(0),
        },
    }
}

fn execute(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Normalize { file, fuel, trace, ctx } => {
            if fuel == 0 {
                return Err(Failure::new(EXIT_PARSE, "--fuel must be positive"));
            }
            let (main, env) = load(&file, Some(&ctx))?;
            let (nf, steps) = normalize(&main, &env, fuel)?;
            if trace {
                out!("{}", steps.to_text());
            }
            outln!("{nf}");
            Ok(0)
        }
        Command::Expand { file } => {
            let (main, env) = load(&file, None)?;
            out!("{}", render_source(&env, Some(&main)));
            Ok(0)
        }
        Command::Lts { file, bounds, hide, format, ctx } => {
            let l = lts_of(&file, &ctx, &bounds, &hide)?;
            match format {
                Format::Text => out!("{}", l.to_text()),
                Format::Json => outln!("{}", l.to_json()),
            }
            Ok(0)
        }
        Command::Equiv { a, b, bounds, mode, hide, ctx } => {
            let la = lts_of(&a, &ctx, &bounds, &hide)?;
            let lb = lts_of(&b, &ctx, &bounds, &hide)?;
            let bounded = !la.truncated.is_empty() || !lb.truncated.is_empty();
            let (equal, evidence) = match mode {
                Mode::Bisim => {
                    let r = bisimilar(&la, &lb);
                    (r.equivalent, r.evidence.map(|e| e.to_string()))
                }
                Mode::Trace => (trace_equivalent(&la, &lb, bounds.depth), None),
            };
            if !equal {
                outln!("not equivalent");
                if let Some(e) = evidence {
                    outln!("evidence: {e}");
                }
                Ok(EXIT_DIFFERENT)
            } else if bounded {
                outln!("equivalent up to depth {}", bounds.depth);
                Ok(EXIT_BOUNDED)
            } else {
                outln!("equivalent");
                Ok(0)
            }
        }
        Command::Run { file, script, interactive, ctx } => {
            let (main, env) = load(&file, Some(&ctx))?;
            let b = bindings(&ctx)?;
            let result = if interactive {
                let stdin = std::io::stdin();
                run_interactive(&main, &env, &b, &mut stdin.lock(), &mut std::io::stdout())
            } else {
                let steps: Vec<&str> = script.iter().map(String::as_str).collect();
                run(&main, &env, &steps, &b)
            };
            match result {
                Ok(r) => {
                    outln!("{r}");
                    Ok(0)
                }
                Err(RunError::Semantics(e)) => Err(e.into()),
                Err(e) => Err(Failure::new(EXIT_DIFFERENT, e.to_string())),
            }
        }
        Command::Check { suite, samples, seed: flag, format } => {
            let seed = seed(flag)?;
            let (text, json, ok) = match suite {
                Suite::Axioms => {
                    let reports = suites::axiom_suite(samples, seed);
                    let ok = reports.iter().all(|r| r.passed());
                    (suites::axiom_suite_text(&reports), serde_json::to_string_pretty(&reports), ok)
                }
                Suite::Lint => {
                    let r = suites::lint_suite()?;
                    (r.to_text(), serde_json::to_string_pretty(&r), r.passed())
                }
                Suite::Disambig => {
                    let cases = suites::disambig_suite()?;
                    let ok = cases.iter().all(|c| c.passed());
                    (suites::disambig_suite_text(&cases), serde_json::to_string_pretty(&cases), ok)
                }
            };
            match format {
                Format::Text => out!("{text}"),
                Format::Json => outln!("{}", json.expect("serializable")),
            }
            Ok(if ok { 0 } else { EXIT_DIFFERENT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
