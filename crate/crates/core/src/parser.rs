//! Textual process DSL: lexing, parsing into [`Term`]s and definition
//! environments, and canonical rendering back to text.
//!
//! Operator precedence, loosest first:
//!
//! | level | operators | assoc |
//! |-------|-----------|-------|
//! | 0 | `~~(x:T)~~>` `~/~(e:E)~~>` `~~(x:T)~~>>` | right |
//! | 1 | `\|;` `\|\|;` `\|;\|` | left |
//! | 2 | `+` `&` `&&` `\|` `\|\|` `\|+\|` | left |
//! | 3 | `<*` `*>` `\|*\|` `o*o` | left |
//! | 4 | `/` `\|/\|` `%/` `%/%` `%/%/` `<%/` | left |
//! | 5 | `;` `·` and juxtaposition | left |
//! | 6 | prefix `-` | |
//!
//! `do x then y else z` is a primary whose `else` branch extends as far as
//! possible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::term::{ActionLabel, Binder, Predicate, PredicateAtom, ProcessEnv, Term, Value, ValueTag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}; expected one of: {}", expected.join(", "))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

/// A parsed source file: definitions plus the optional `main` term.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub text: String,
    pub env: ProcessEnv,
    pub main: Option<Term>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Bool(bool),
    LParen,
    RParen,
    Eq,
    Colon,
    Caret,
    Bang,
    Minus,
    Plus,
    Semi,
    Amp,
    AmpAmp,
    Bar,
    BarBar,
    DisAlt,
    DisSeq1,
    DisSeq2,
    DisSeqX,
    Slash,
    DisDisrupt,
    Interrupt,
    MultiInterrupt,
    MandInterrupts,
    LeftInterrupt,
    LeftMerge,
    RightMerge,
    CommMerge,
    TermMerge,
    Ellipsis,
    EllipsisOpt,
    Dot,
    FlowOpen,
    ExcFlowOpen,
    FlowClose,
    StreamClose,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Bool(b) => format!("`{b}`"),
            Tok::Eof => "end of input".into(),
            t => format!("`{}`", t.spelling()),
        }
    }

    fn spelling(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Eq => "=",
            Tok::Colon => ":",
            Tok::Caret => "^",
            Tok::Bang => "!",
            Tok::Minus => "-",
            Tok::Plus => "+",
            Tok::Semi => ";",
            Tok::Amp => "&",
            Tok::AmpAmp => "&&",
            Tok::Bar => "|",
            Tok::BarBar => "||",
            Tok::DisAlt => "|+|",
            Tok::DisSeq1 => "|;",
            Tok::DisSeq2 => "||;",
            Tok::DisSeqX => "|;|",
            Tok::Slash => "/",
            Tok::DisDisrupt => "|/|",
            Tok::Interrupt => "%/",
            Tok::MultiInterrupt => "%/%",
            Tok::MandInterrupts => "%/%/",
            Tok::LeftInterrupt => "<%/",
            Tok::LeftMerge => "<*",
            Tok::RightMerge => "*>",
            Tok::CommMerge => "|*|",
            Tok::TermMerge => "o*o",
            Tok::Ellipsis => "...",
            Tok::EllipsisOpt => "..",
            Tok::Dot => ".",
            Tok::FlowOpen => "~~(",
            Tok::ExcFlowOpen => "~/~(",
            Tok::FlowClose => ")~~>",
            Tok::StreamClose => ")~~>>",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
    /// Whitespace or a comment separates this token from the previous one.
    spaced: bool,
}

// Longest spelling first within each shared prefix.
const PUNCT: &[(&str, Tok)] = &[
    (")~~>>", Tok::StreamClose),
    (")~~>", Tok::FlowClose),
    ("~/~(", Tok::ExcFlowOpen),
    ("~~(", Tok::FlowOpen),
    ("||;", Tok::DisSeq2),
    ("|+|", Tok::DisAlt),
    ("|;|", Tok::DisSeqX),
    ("|/|", Tok::DisDisrupt),
    ("|*|", Tok::CommMerge),
    ("|;", Tok::DisSeq1),
    ("||", Tok::BarBar),
    ("|", Tok::Bar),
    ("%/%/", Tok::MandInterrupts),
    ("%/%", Tok::MultiInterrupt),
    ("%/", Tok::Interrupt),
    ("<%/", Tok::LeftInterrupt),
    ("<*", Tok::LeftMerge),
    ("*>", Tok::RightMerge),
    ("&&", Tok::AmpAmp),
    ("&", Tok::Amp),
    ("...", Tok::Ellipsis),
    ("..", Tok::EllipsisOpt),
    (".", Tok::Dot),
    ("(", Tok::LParen),
    (")", Tok::RParen),
    ("=", Tok::Eq),
    (":", Tok::Colon),
    ("^", Tok::Caret),
    ("!", Tok::Bang),
    ("-", Tok::Minus),
    ("+", Tok::Plus),
    (";", Tok::Semi),
    ("·", Tok::Semi),
    ("/", Tok::Slash),
];

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut rest = text;
    let mut spaced = true;
    let err = |line, column, message: String| ParseError { line, column, message, expected: vec![] };
    while let Some(c) = rest.chars().next() {
        if c == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            spaced = true;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            rest = &rest[c.len_utf8()..];
            spaced = true;
            continue;
        }
        if c == '#' || rest.starts_with("//") {
            let end = rest.find('\n').unwrap_or(rest.len());
            rest = &rest[end..];
            spaced = true;
            continue;
        }
        let (tok, len) = if c.is_ascii_alphabetic() {
            let len = rest.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(rest.len());
            let word = &rest[..len];
            if word == "o" && rest[len..].starts_with("*o") {
                let after = rest[len + 2..].chars().next();
                if !after.is_some_and(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                    (Tok::TermMerge, 3)
                } else {
                    (Tok::Ident(word.to_string()), len)
                }
            } else {
                let tok = match word {
                    "true" => Tok::Bool(true),
                    "false" => Tok::Bool(false),
                    _ => Tok::Ident(word.to_string()),
                };
                (tok, len)
            }
        } else if c.is_ascii_digit() {
            let len = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
            let n: i64 = rest[..len]
                .parse()
                .map_err(|_| err(line, col, format!("integer literal `{}` out of range", &rest[..len])))?;
            (Tok::Int(n), len)
        } else if c == '"' {
            let mut s = String::new();
            let mut chars = rest.char_indices().skip(1);
            let mut end = None;
            while let Some((i, ch)) = chars.next() {
                match ch {
                    '"' => {
                        end = Some(i + 1);
                        break;
                    }
                    '\\' => match chars.next() {
                        Some((_, 'n')) => s.push('\n'),
                        Some((_, e)) => s.push(e),
                        None => break,
                    },
                    '\n' => break,
                    ch => s.push(ch),
                }
            }
            let len = end.ok_or_else(|| err(line, col, "unterminated string literal".into()))?;
            (Tok::Str(s), len)
        } else if c == 'δ' {
            (Tok::Int(0), c.len_utf8())
        } else if c == 'ε' {
            (Tok::Int(1), c.len_utf8())
        } else if let Some((p, t)) = PUNCT.iter().find(|(p, _)| rest.starts_with(p)) {
            (t.clone(), p.len())
        } else {
            return Err(err(line, col, format!("unexpected character `{c}`")));
        };
        out.push(Spanned { tok, line, column: col, spaced });
        spaced = false;
        col += rest[..len].chars().count();
        rest = &rest[len..];
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col, spaced: true });
    Ok(out)
}

const KEYWORDS: &[&str] =
    &["do", "then", "else", "break", "while", "if", "raise", "resume", "delta", "epsilon", "true", "false"];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    juxtaposition: bool,
}

type PResult<T> = Result<T, ParseError>;

fn b(t: Term) -> Box<Term> {
    Box::new(t)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            message: format!("unexpected {}", s.tok.describe()),
            expected: expected.iter().map(|e| e.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok, spelling: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[spelling]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn at_definition_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) && *self.peek_at(1) == Tok::Eq
    }

    fn expr(&mut self) -> PResult<Term> {
        let lhs = self.dseq()?;
        let kind = match self.peek() {
            Tok::FlowOpen => 0,
            Tok::ExcFlowOpen => 1,
            _ => return Ok(lhs),
        };
        self.bump();
        let name = self.ident()?;
        self.expect(Tok::Colon, ":")?;
        let ty_pos = self.pos;
        let ty = self.ident()?;
        let tag = ValueTag::parse(&ty).ok_or_else(|| {
            let mut e = self.error(&["Bool", "Int", "Str", "Exc"]);
            e.line = self.toks[ty_pos].line;
            e.column = self.toks[ty_pos].column;
            e.message = format!("unknown type `{ty}`");
            e
        })?;
        let binder = Binder::new(name, tag);
        let close = self.bump();
        let rhs = self.expr()?;
        Ok(match (kind, close) {
            (0, Tok::FlowClose) => Term::Flow(b(lhs), binder, b(rhs)),
            (0, Tok::StreamClose) => Term::StreamFlow(b(lhs), binder, b(rhs)),
            (1, Tok::FlowClose) => Term::ExcFlow(b(lhs), binder, b(rhs)),
            _ => {
                self.pos -= 1;
                return Err(self.error(if kind == 0 { &[")~~>", ")~~>>"] } else { &[")~~>"] }));
            }
        })
    }

    fn dseq(&mut self) -> PResult<Term> {
        let mut lhs = self.choice()?;
        loop {
            let ctor: fn(Box<Term>, Box<Term>) -> Term = match self.peek() {
                Tok::DisSeq1 => Term::DisambSeq1,
                Tok::DisSeq2 => Term::DisambSeq2,
                Tok::DisSeqX => Term::DisambSeqX,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.choice()?;
            lhs = ctor(b(lhs), b(rhs));
        }
    }

    fn choice(&mut self) -> PResult<Term> {
        let mut lhs = self.merge()?;
        loop {
            let ctor: fn(Box<Term>, Box<Term>) -> Term = match self.peek() {
                Tok::Plus => Term::Alt,
                Tok::Amp => Term::Par,
                Tok::AmpAmp => Term::AndPar,
                Tok::Bar => Term::OrPar1,
                Tok::BarBar => Term::OrPar2,
                Tok::DisAlt => Term::DisambAlt,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.merge()?;
            lhs = ctor(b(lhs), b(rhs));
        }
    }

    fn merge(&mut self) -> PResult<Term> {
        let mut lhs = self.disrupt()?;
        loop {
            let ctor: fn(Box<Term>, Box<Term>) -> Term = match self.peek() {
                Tok::LeftMerge => Term::LeftMerge,
                Tok::RightMerge => Term::RightMerge,
                Tok::CommMerge => Term::CommMerge,
                Tok::TermMerge => Term::TermMerge,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.disrupt()?;
            lhs = ctor(b(lhs), b(rhs));
        }
    }

    fn disrupt(&mut self) -> PResult<Term> {
        let mut lhs = self.seq()?;
        loop {
            let ctor: fn(Box<Term>, Box<Term>) -> Term = match self.peek() {
                Tok::Slash => Term::Disrupt,
                Tok::DisDisrupt => Term::DisambDisrupt,
                Tok::Interrupt => Term::Interrupt,
                Tok::MultiInterrupt => Term::MultiInterrupt,
                Tok::MandInterrupts => Term::MandInterrupts,
                Tok::LeftInterrupt => Term::LeftInterrupt,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.seq()?;
            lhs = ctor(b(lhs), b(rhs));
        }
    }

    fn starts_operand(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => match s.as_str() {
                "then" | "else" => false,
                s if is_keyword(s) => true,
                _ => !self.at_definition_start(),
            },
            Tok::Int(_) | Tok::LParen | Tok::Ellipsis | Tok::EllipsisOpt | Tok::Dot | Tok::Minus => true,
            _ => false,
        }
    }

    fn seq(&mut self) -> PResult<Term> {
        let mut lhs = self.unary()?;
        loop {
            if *self.peek() == Tok::Semi {
                self.bump();
            } else if !(self.juxtaposition && self.starts_operand()) {
                return Ok(lhs);
            }
            let rhs = self.unary()?;
            lhs = Term::Seq(b(lhs), b(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Term> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Term::Neg(b(self.unary()?)));
        }
        self.primary()
    }

    fn literal(&mut self) -> PResult<Value> {
        match self.bump() {
            Tok::Int(i) => Ok(Value::Int(i)),
            Tok::Minus => match self.bump() {
                Tok::Int(i) => Ok(Value::Int(-i)),
                _ => {
                    self.pos -= 1;
                    Err(self.error(&["integer"]))
                }
            },
            Tok::Bool(v) => Ok(Value::Bool(v)),
            Tok::Str(s) => Ok(Value::Str(s)),
            _ => {
                self.pos -= 1;
                Err(self.error(&["integer", "true", "false", "string"]))
            }
        }
    }

    /// True if the current token directly follows the previous one.
    fn attached(&self) -> bool {
        !self.toks[self.pos].spaced
    }

    fn predicate(&mut self) -> PResult<Predicate> {
        self.expect(Tok::LParen, "(")?;
        let mut negated = false;
        while *self.peek() == Tok::Bang {
            self.bump();
            negated = !negated;
        }
        let atom = match self.peek().clone() {
            Tok::Bool(v) => {
                self.bump();
                PredicateAtom::Const(v)
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                PredicateAtom::Named(s)
            }
            _ => return Err(self.error(&["true", "false", "predicate name"])),
        };
        self.expect(Tok::RParen, ")")?;
        Ok(Predicate { negated, atom })
    }

    fn primary(&mut self) -> PResult<Term> {
        let tok = self.peek().clone();
        match tok {
            Tok::Int(0) => {
                self.bump();
                Ok(Term::Zero)
            }
            Tok::Int(1) => {
                self.bump();
                if *self.peek() == Tok::Caret && self.attached() {
                    self.bump();
                    return Ok(Term::One(Some(self.literal()?)));
                }
                Ok(Term::One(None))
            }
            Tok::LParen => {
                self.bump();
                let saved = self.juxtaposition;
                let t = self.expr()?;
                self.juxtaposition = saved;
                self.expect(Tok::RParen, ")")?;
                Ok(t)
            }
            Tok::Ellipsis => {
                self.bump();
                Ok(Term::Ellipsis)
            }
            Tok::EllipsisOpt => {
                self.bump();
                Ok(Term::EllipsisOpt)
            }
            Tok::Dot => {
                self.bump();
                Ok(Term::OptBreak)
            }
            Tok::Ident(word) => {
                self.bump();
                match word.as_str() {
                    "delta" => Ok(Term::Zero),
                    "epsilon" => Ok(Term::One(None)),
                    "break" => Ok(Term::Break),
                    "while" => Ok(Term::While(self.predicate()?)),
                    "if" => Ok(Term::Guard(self.predicate()?)),
                    "raise" => {
                        if *self.peek() == Tok::LParen && self.attached() {
                            self.bump();
                            let e = self.ident()?;
                            self.expect(Tok::RParen, ")")?;
                            Ok(Term::Raise(Some(e)))
                        } else {
                            Ok(Term::Raise(None))
                        }
                    }
                    "resume" => {
                        self.expect(Tok::LParen, "(")?;
                        let t = self.expr()?;
                        self.expect(Tok::RParen, ")")?;
                        Ok(Term::Resume(b(t)))
                    }
                    "do" => {
                        let x = self.expr()?;
                        self.keyword("then")?;
                        let y = self.expr()?;
                        self.keyword("else")?;
                        let z = self.expr()?;
                        Ok(Term::do_then_else(x, y, z))
                    }
                    w if is_keyword(w) => {
                        self.pos -= 1;
                        Err(self.error(&["operand"]))
                    }
                    _ => {
                        let mut label = ActionLabel::new(word);
                        if *self.peek() == Tok::Caret && self.attached() {
                            self.bump();
                            label.yield_value = Some(self.literal()?);
                        }
                        if *self.peek() == Tok::Bang && self.attached() {
                            self.bump();
                            label.raises = Some(self.ident()?);
                        }
                        Ok(Term::Atom(label))
                    }
                }
            }
            _ => Err(self.error(&["0", "1", "identifier", "(", "...", "..", ".", "-", "do", "break", "while", "if"])),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(&[kw])),
        }
    }
}

/// Turns atoms whose name is a defined process into `Var` references.
fn resolve(t: &Term, names: &BTreeSet<String>) -> Term {
    match t {
        Term::Atom(l) if l.yield_value.is_none() && l.raises.is_none() && names.contains(&l.name) => {
            Term::Var(l.name.clone())
        }
        t => t.map_children(|c| Ok::<_, ()>(resolve(c, names))).unwrap(),
    }
}

/// Parses a source file of `name = expr` definitions. `main`, when present,
/// becomes the distinguished main term; all other names form the environment.
pub fn parse(text: &str) -> Result<SourceSpec, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, juxtaposition: true };
    let mut defs: Vec<(String, Term, (usize, usize))> = Vec::new();
    while *p.peek() != Tok::Eof {
        let at = (p.toks[p.pos].line, p.toks[p.pos].column);
        if !p.at_definition_start() {
            return Err(p.error(&["definition `name = expr`"]));
        }
        let name = p.ident()?;
        p.bump();
        let body = p.expr()?;
        if *p.peek() != Tok::Eof && !p.at_definition_start() {
            return Err(p.error(&["operator", "new definition", "end of input"]));
        }
        if defs.iter().any(|(n, _, _)| *n == name) {
            return Err(ParseError {
                line: at.0,
                column: at.1,
                message: format!("duplicate definition of `{name}`"),
                expected: vec![],
            });
        }
        defs.push((name, body, at));
    }
    if defs.is_empty() {
        return Err(p.error(&["definition `name = expr`"]));
    }
    let names: BTreeSet<String> = defs.iter().map(|(n, _, _)| n.clone()).filter(|n| n != "main").collect();
    let mut env = ProcessEnv::new();
    let mut main = None;
    for (name, body, _) in defs {
        let body = resolve(&body, &names);
        if name == "main" {
            main = Some(body);
        } else {
            env.define(name, body);
        }
    }
    Ok(SourceSpec { text: text.to_string(), env, main })
}

/// Parses a single expression. Identifiers in `vars` become `Var` references.
/// Juxtaposition is not sequence here; `;` is required.
pub fn parse_term(text: &str, vars: &BTreeSet<String>) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, juxtaposition: false };
    let t = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(resolve(&t, vars))
}

/// Parses a communication table: one `a b -> c` entry per line.
pub fn parse_gamma(text: &str) -> Result<crate::term::CommunicationFunction, ParseError> {
    let mut g = crate::term::CommunicationFunction::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| ParseError {
            line: i + 1,
            column: 1,
            message: msg.to_string(),
            expected: vec!["`a b -> c`".into()],
        };
        let (lhs, rhs) = line.split_once("->").ok_or_else(|| bad("missing `->`"))?;
        let parts: Vec<&str> = lhs.split_whitespace().collect();
        let c = rhs.trim();
        if parts.len() != 2 || !parts.iter().chain([&c]).all(|s| crate::term::is_identifier(s)) {
            return Err(bad("malformed communication entry"));
        }
        g.define(parts[0], parts[1], c);
    }
    Ok(g)
}

/// Parses a predicate binding table: one `name = true|false` per line.
pub fn parse_bindings(text: &str) -> Result<BTreeMap<String, bool>, ParseError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || ParseError {
            line: i + 1,
            column: 1,
            message: "malformed binding".into(),
            expected: vec!["`name = true|false`".into()],
        };
        let (n, v) = line.split_once('=').ok_or_else(bad)?;
        let n = n.trim();
        let v = match v.trim() {
            "true" => true,
            "false" => false,
            _ => return Err(bad()),
        };
        if !crate::term::is_identifier(n) {
            return Err(bad());
        }
        out.insert(n.to_string(), v);
    }
    Ok(out)
}

const FLOW: u8 = 0;
const DSEQ: u8 = 1;
const CHOICE: u8 = 2;
const MERGE: u8 = 3;
const DISRUPT: u8 = 4;
const SEQ: u8 = 5;
const PREFIX: u8 = 6;
const ATOM: u8 = 7;

fn binary(t: &Term) -> Option<(u8, &'static str, &Term, &Term)> {
    use Term::*;
    Some(match t {
        DisambSeq1(x, y) => (DSEQ, " |; ", x, y),
        DisambSeq2(x, y) => (DSEQ, " ||; ", x, y),
        DisambSeqX(x, y) => (DSEQ, " |;| ", x, y),
        Alt(x, y) => (CHOICE, " + ", x, y),
        Par(x, y) => (CHOICE, " & ", x, y),
        AndPar(x, y) => (CHOICE, " && ", x, y),
        OrPar1(x, y) => (CHOICE, " | ", x, y),
        OrPar2(x, y) => (CHOICE, " || ", x, y),
        DisambAlt(x, y) => (CHOICE, " |+| ", x, y),
        LeftMerge(x, y) => (MERGE, " <* ", x, y),
        RightMerge(x, y) => (MERGE, " *> ", x, y),
        CommMerge(x, y) => (MERGE, " |*| ", x, y),
        TermMerge(x, y) => (MERGE, " o*o ", x, y),
        Disrupt(x, y) => (DISRUPT, " / ", x, y),
        DisambDisrupt(x, y) => (DISRUPT, " |/| ", x, y),
        Interrupt(x, y) => (DISRUPT, " %/ ", x, y),
        MultiInterrupt(x, y) => (DISRUPT, " %/% ", x, y),
        MandInterrupts(x, y) => (DISRUPT, " %/%/ ", x, y),
        LeftInterrupt(x, y) => (DISRUPT, " <%/ ", x, y),
        Seq(x, y) => (SEQ, ";", x, y),
        _ => return None,
    })
}

fn level(t: &Term) -> u8 {
    match t {
        Term::Flow(..) | Term::ExcFlow(..) | Term::StreamFlow(..) | Term::DoThenElse(..) => FLOW,
        Term::Neg(_) => PREFIX,
        t => binary(t).map_or(ATOM, |(l, ..)| l),
    }
}

fn render_into(t: &Term, out: &mut String) {
    let wrap = |t: &Term, paren: bool, out: &mut String| {
        if paren {
            out.push('(');
            render_into(t, out);
            out.push(')');
        } else {
            render_into(t, out);
        }
    };
    if let Some((l, op, x, y)) = binary(t) {
        wrap(x, level(x) < l, out);
        out.push_str(op);
        wrap(y, level(y) <= l, out);
        return;
    }
    match t {
        Term::Zero => out.push('0'),
        Term::One(None) => out.push('1'),
        Term::One(Some(v)) => {
            let _ = write!(out, "1^{v}");
        }
        Term::Atom(l) => {
            let _ = write!(out, "{l}");
        }
        Term::Var(n) => out.push_str(n),
        Term::Neg(x) => {
            out.push('-');
            wrap(x, level(x) < PREFIX, out);
        }
        Term::DoThenElse(x, y, z) => {
            out.push_str("do ");
            render_into(x, out);
            out.push_str(" then ");
            render_into(y, out);
            out.push_str(" else ");
            render_into(z, out);
        }
        Term::Flow(x, bd, y) | Term::ExcFlow(x, bd, y) | Term::StreamFlow(x, bd, y) => {
            let (open, close) = match t {
                Term::Flow(..) => ("~~(", ")~~>"),
                Term::ExcFlow(..) => ("~/~(", ")~~>"),
                _ => ("~~(", ")~~>>"),
            };
            wrap(x, level(x) == FLOW, out);
            let _ = write!(out, " {open}{}:{}{close} ", bd.name, bd.tag);
            render_into(y, out);
        }
        Term::Ellipsis => out.push_str("..."),
        Term::EllipsisOpt => out.push_str(".."),
        Term::OptBreak => out.push('.'),
        Term::Break => out.push_str("break"),
        Term::While(p) => {
            let _ = write!(out, "while({p})");
        }
        Term::Guard(p) => {
            let _ = write!(out, "if({p})");
        }
        Term::Raise(None) => out.push_str("raise"),
        Term::Raise(Some(e)) => {
            let _ = write!(out, "raise({e})");
        }
        Term::Resume(x) => {
            out.push_str("resume(");
            render_into(x, out);
            out.push(')');
        }
        _ => unreachable!("binary operators handled above"),
    }
}

/// Canonical text of a term with minimal parentheses.
pub fn render(t: &Term) -> String {
    let mut s = String::new();
    render_into(t, &mut s);
    s
}

/// Renders the environment as a definition file, `main` last.
pub fn render_source(env: &ProcessEnv, main: Option<&Term>) -> String {
    let mut s = String::new();
    for (n, body) in &env.defs {
        let _ = writeln!(s, "{n} = ({})", render(body));
    }
    if let Some(m) = main {
        let _ = writeln!(s, "main = ({})", render(m));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Term {
        Term::atom(n)
    }

    fn main_of(src: &str) -> Term {
        parse(src).unwrap().main.unwrap()
    }

    #[test]
    fn juxtaposition_is_left_nested_sequence() {
        assert_eq!(main_of("main = a b c"), Term::seq(Term::seq(a("a"), a("b")), a("c")));
    }

    #[test]
    fn ellipsis_operand_in_sequence() {
        let spec = parse("live = searchSequence ...\nsearchSequence = x y").unwrap();
        assert_eq!(spec.env.get("live").unwrap(), &Term::seq(Term::var("searchSequence"), Term::Ellipsis));
    }

    #[test]
    fn dataflow_arrow() {
        let t = main_of("main = x ~~(b:Bool)~~> y");
        assert_eq!(t, Term::Flow(b(a("x")), Binder::new("b", ValueTag::Bool), b(a("y"))));
        let t = main_of("main = confirmExit ~~(b:Boolean)~~> while(!b)");
        assert_eq!(
            t,
            Term::Flow(
                b(a("confirmExit")),
                Binder::new("b", ValueTag::Bool),
                b(Term::While(Predicate::named("b").negate()))
            )
        );
    }

    #[test]
    fn stream_flow_is_right_associative() {
        let t = main_of("main = s ~~(d:Int)~~>> t ~~(d:Int)~~>> u");
        let d = Binder::new("d", ValueTag::Int);
        assert_eq!(t, Term::StreamFlow(b(a("s")), d.clone(), b(Term::StreamFlow(b(a("t")), d, b(a("u"))))));
    }

    #[test]
    fn choice_with_one() {
        assert_eq!(main_of("main = a + 1"), Term::alt(a("a"), Term::one()));
        assert_eq!(render(&Term::alt(a("a"), Term::one())), "a + 1");
    }

    #[test]
    fn auxiliary_spellings() {
        assert_eq!(render(&Term::LeftMerge(b(a("x")), b(a("y")))), "x <* y");
        assert_eq!(render(&Term::RightMerge(b(a("x")), b(a("y")))), "x *> y");
        assert_eq!(render(&Term::CommMerge(b(a("x")), b(a("y")))), "x |*| y");
        assert_eq!(render(&Term::TermMerge(b(a("x")), b(a("y")))), "x o*o y");
        assert_eq!(render(&Term::negation(a("a"))), "-a");
    }

    #[test]
    fn sequence_binds_tighter_than_choice() {
        let t = main_of("main = a;b + b");
        assert_eq!(t, Term::alt(Term::seq(a("a"), a("b")), a("b")));
        assert_eq!(render(&t), "a;b + b");
    }

    #[test]
    fn greek_aliases() {
        assert_eq!(main_of("main = δ + ε"), Term::alt(Term::Zero, Term::one()));
    }

    #[test]
    fn definitions_resolve_to_vars() {
        let spec = parse("X = a X + b\nmain = X").unwrap();
        assert_eq!(spec.env.get("X").unwrap(), &Term::alt(Term::seq(a("a"), Term::var("X")), a("b")));
        assert_eq!(spec.main, Some(Term::var("X")));
    }

    #[test]
    fn yields_and_raises() {
        let t = main_of("main = a^5 ; b^\"s\" ; c^true ; d^-3 ; boom!IOError ; 1^false");
        let s = render(&t);
        assert_eq!(s, "a^5;b^\"s\";c^true;d^-3;boom!IOError;1^false");
    }

    #[test]
    fn errors_carry_position_and_expectations() {
        let e = parse("main = (a + b").unwrap_err();
        assert_eq!((e.line, e.column), (1, 14));
        assert!(e.expected.contains(&")".to_string()));
        assert!(parse("").is_err());
        assert!(parse("main = a\nmain = b").is_err());
        assert!(parse("main = a ~~(x:Datum)~~> b").is_err());
    }

    #[test]
    fn crlf_and_comments() {
        let spec = parse("# comment\r\nX = a\r\nmain = X ; b // trailing\r\n").unwrap();
        assert_eq!(spec.main, Some(Term::seq(Term::var("X"), a("b"))));
    }

    #[test]
    fn top_level_expressions_need_explicit_sequence() {
        let none = BTreeSet::new();
        assert!(parse_term("a b", &none).is_err());
        assert_eq!(parse_term("a;b", &none).unwrap(), Term::seq(a("a"), a("b")));
    }

    #[test]
    fn gamma_and_binding_tables() {
        let g = parse_gamma("send recv -> msg\n# c\n\n").unwrap();
        assert_eq!(g.get("recv", "send"), Some("msg"));
        assert!(parse_gamma("a -> b").is_err());
        let bd = parse_bindings("p = true\nq=false").unwrap();
        assert_eq!(bd.get("q"), Some(&false));
    }

    #[test]
    fn do_then_else_round_trip() {
        let t = Term::alt(Term::do_then_else(a("x"), a("y"), a("z")), a("w"));
        let s = render(&t);
        assert_eq!(s, "(do x then y else z) + w");
        assert_eq!(parse_term(&s, &BTreeSet::new()).unwrap(), t);
    }
}
