//! Reader for problem files.
//!
//! ```text
//! # comment
//! bound: 10
//! vars: x y z
//! consts: a b
//! problem:
//! h(y) =? x + f(a, z)
//! ```

use std::collections::BTreeSet;
use std::fmt;

use achunify_core::{canonicalize, Equation, RawTerm, Signature, Term, Var};
use thiserror::Error;

pub const DEFAULT_BOUND: u32 = 10;

/// Prefix of solver-generated variable names.
pub const FRESH_PREFIX: &str = "_v";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemFile {
    pub bound: u32,
    pub vars: Vec<String>,
    pub consts: Vec<String>,
    /// Free symbols with their arities, as used in the equations.
    pub signature: Signature,
    pub equations: Vec<Equation>,
}

impl ProblemFile {
    pub fn declared_vars(&self) -> BTreeSet<Var> {
        self.vars.iter().map(|v| Var::user(v)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("undeclared identifier `{0}`")]
    Undeclared(String),
    #[error("`{name}` used with {found} arguments, earlier with {expected}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("identifier `{0}` is reserved")]
    Reserved(String),
    #[error("`{0}` is declared twice")]
    Duplicate(String),
    #[error("`{0}` is declared and cannot be applied to arguments")]
    NotASymbol(String),
    #[error("unknown header `{0}`")]
    UnknownHeader(String),
    #[error("missing `problem:` section")]
    MissingProblem,
    #[error("expected {expected}, found {found}")]
    Syntax { expected: String, found: String },
}

/// Parses a whole problem file.
pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let mut file = ProblemFile {
        bound: DEFAULT_BOUND,
        vars: Vec::new(),
        consts: Vec::new(),
        signature: Signature::new(),
        equations: Vec::new(),
    };
    let mut in_problem = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        if in_problem {
            let eq = {
                let mut p = Parser::new(line, line_no, &file, false);
                p.equation()?
            };
            file.equations.push(eq.resolve(&mut file.signature)?);
            continue;
        }
        let err = |column: usize, kind| ParseError {
            line: line_no,
            column,
            kind,
        };
        let colon = line.find(':').ok_or_else(|| {
            err(
                line.len() - line.trim_start().len() + 1,
                ParseErrorKind::Syntax {
                    expected: "`key: value`".into(),
                    found: line.trim().into(),
                },
            )
        })?;
        let key = line[..colon].trim();
        let value = &line[colon + 1..];
        let value_col = colon + 2;
        match key {
            "bound" => {
                let v = value.trim();
                file.bound = v.parse().map_err(|_| {
                    err(
                        value_col + value.len() - value.trim_start().len(),
                        ParseErrorKind::Syntax {
                            expected: "a natural number".into(),
                            found: v.into(),
                        },
                    )
                })?;
            }
            "vars" | "consts" => {
                for (col, id) in words(value, value_col) {
                    check_identifier(id).map_err(|k| err(col, k))?;
                    if file.vars.iter().chain(&file.consts).any(|d| d == id) {
                        return Err(err(col, ParseErrorKind::Duplicate(id.into())));
                    }
                    if key == "vars" {
                        file.vars.push(id.into());
                    } else {
                        file.consts.push(id.into());
                    }
                }
            }
            "problem" => {
                if let Some((col, w)) = words(value, value_col).into_iter().next() {
                    return Err(err(
                        col,
                        ParseErrorKind::Syntax {
                            expected: "end of line".into(),
                            found: w.into(),
                        },
                    ));
                }
                in_problem = true;
            }
            other => {
                return Err(err(
                    line.len() - line.trim_start().len() + 1,
                    ParseErrorKind::UnknownHeader(other.into()),
                ))
            }
        }
    }
    if !in_problem {
        return Err(ParseError {
            line: text.lines().count().max(1),
            column: 1,
            kind: ParseErrorKind::MissingProblem,
        });
    }
    Ok(file)
}

/// Parses one term against the declarations of `file`. With `allow_fresh`,
/// names `_v<n>` denote solver variables, so printed unifiers read back.
pub fn parse_term(text: &str, file: &ProblemFile, allow_fresh: bool) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, 1, file, allow_fresh);
    let t = p.sum()?;
    p.expect_end()?;
    let mut sig = file.signature.clone();
    t.resolve(&mut sig)
}

fn words(s: &str, start_col: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut i = 0;
    let b = s.as_bytes();
    while i < b.len() {
        if b[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let j = (i..b.len())
            .find(|&j| b[j].is_ascii_whitespace())
            .unwrap_or(b.len());
        out.push((start_col + i, &s[i..j]));
        i = j;
    }
    out
}

fn check_identifier(id: &str) -> Result<(), ParseErrorKind> {
    if id.starts_with(FRESH_PREFIX) || id == "h" {
        return Err(ParseErrorKind::Reserved(id.into()));
    }
    let mut chars = id.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(ParseErrorKind::Syntax {
            expected: "an identifier".into(),
            found: id.into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Eq,
    End,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Comma => f.write_str("`,`"),
            Token::Plus => f.write_str("`+`"),
            Token::Eq => f.write_str("`=?`"),
            Token::End => f.write_str("end of line"),
        }
    }
}

/// A parsed term whose free-symbol arities are not yet checked against
/// the rest of the file.
struct Pending {
    raw: RawTerm,
    /// `(name, arity, column)` for every free-symbol application.
    uses: Vec<(String, usize, usize)>,
    line: usize,
}

impl Pending {
    fn resolve(self, sig: &mut Signature) -> Result<Term, ParseError> {
        for (name, arity, column) in &self.uses {
            if let Some(expected) = sig.arity(name) {
                if expected != *arity {
                    return Err(ParseError {
                        line: self.line,
                        column: *column,
                        kind: ParseErrorKind::Arity {
                            name: name.clone(),
                            expected,
                            found: *arity,
                        },
                    });
                }
            }
            sig.declare(name, *arity).expect("arity checked above");
        }
        Ok(canonicalize(&self.raw, sig).expect("checked while parsing"))
    }
}

struct PendingEq(Pending, Pending);

impl PendingEq {
    fn resolve(self, sig: &mut Signature) -> Result<Equation, ParseError> {
        let l = self.0.resolve(sig)?;
        let r = self.1.resolve(sig)?;
        Ok(Equation::new(l, r))
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    file: &'a ProblemFile,
    allow_fresh: bool,
    uses: Vec<(String, usize, usize)>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, line: usize, file: &'a ProblemFile, allow_fresh: bool) -> Self {
        Parser {
            src,
            pos: 0,
            line,
            file,
            allow_fresh,
            uses: Vec::new(),
        }
    }

    fn error(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    /// Next token and its 1-based column, without consuming it.
    fn peek(&mut self) -> Result<(Token, usize, usize), ParseError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let col = self.pos + 1;
        let Some(c) = rest.chars().next() else {
            return Ok((Token::End, col, 0));
        };
        let single = |t| Ok((t, col, 1));
        match c {
            '(' => single(Token::LParen),
            ')' => single(Token::RParen),
            ',' => single(Token::Comma),
            '+' => single(Token::Plus),
            '=' if rest.starts_with("=?") => Ok((Token::Eq, col, 2)),
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let len = rest
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(rest.len());
                Ok((Token::Ident(rest[..len].to_string()), col, len))
            }
            other => Err(self.error(
                col,
                ParseErrorKind::Syntax {
                    expected: "a term".into(),
                    found: format!("`{other}`"),
                },
            )),
        }
    }

    fn bump(&mut self) -> Result<(Token, usize), ParseError> {
        let (t, col, len) = self.peek()?;
        self.pos += len;
        Ok((t, col))
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        let (t, col) = self.bump()?;
        if t == want {
            Ok(())
        } else {
            Err(self.error(
                col,
                ParseErrorKind::Syntax {
                    expected: want.to_string(),
                    found: t.to_string(),
                },
            ))
        }
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        self.expect(Token::End)
    }

    fn equation(&mut self) -> Result<PendingEq, ParseError> {
        let l = self.sum()?;
        self.expect(Token::Eq)?;
        let r = self.sum()?;
        self.expect_end()?;
        Ok(PendingEq(l, r))
    }

    fn sum(&mut self) -> Result<Pending, ParseError> {
        let raw = self.sum_raw()?;
        Ok(Pending {
            raw,
            uses: std::mem::take(&mut self.uses),
            line: self.line,
        })
    }

    fn sum_raw(&mut self) -> Result<RawTerm, ParseError> {
        let mut parts = vec![self.atom()?];
        while self.peek()?.0 == Token::Plus {
            self.bump()?;
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            RawTerm::Plus(parts)
        })
    }

    fn atom(&mut self) -> Result<RawTerm, ParseError> {
        let (t, col) = self.bump()?;
        match t {
            Token::LParen => {
                let inner = self.sum_raw()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if self.peek()?.0 == Token::LParen {
                    self.bump()?;
                    let mut args = vec![self.sum_raw()?];
                    while self.peek()?.0 == Token::Comma {
                        self.bump()?;
                        args.push(self.sum_raw()?);
                    }
                    self.expect(Token::RParen)?;
                    self.application(name, args, col)
                } else {
                    self.identifier(name, col)
                }
            }
            other => Err(self.error(
                col,
                ParseErrorKind::Syntax {
                    expected: "a term".into(),
                    found: other.to_string(),
                },
            )),
        }
    }

    fn application(
        &mut self,
        name: String,
        args: Vec<RawTerm>,
        col: usize,
    ) -> Result<RawTerm, ParseError> {
        if name == "h" {
            if args.len() != 1 {
                return Err(self.error(
                    col,
                    ParseErrorKind::Arity {
                        name,
                        expected: 1,
                        found: args.len(),
                    },
                ));
            }
            return Ok(RawTerm::Apply(name, args));
        }
        if self.file.vars.contains(&name) || self.file.consts.contains(&name) {
            return Err(self.error(col, ParseErrorKind::NotASymbol(name)));
        }
        check_identifier(&name).map_err(|k| self.error(col, k))?;
        if let Some((_, expected, _)) = self.uses.iter().find(|(n, _, _)| *n == name) {
            if *expected != args.len() {
                return Err(self.error(
                    col,
                    ParseErrorKind::Arity {
                        name,
                        expected: *expected,
                        found: args.len(),
                    },
                ));
            }
        }
        self.uses.push((name.clone(), args.len(), col));
        Ok(RawTerm::Apply(name, args))
    }

    fn identifier(&mut self, name: String, col: usize) -> Result<RawTerm, ParseError> {
        if let Some(n) = name.strip_prefix(FRESH_PREFIX) {
            if self.allow_fresh {
                if let Ok(i) = n.parse::<u32>() {
                    return Ok(RawTerm::Var(Var::Fresh(i)));
                }
            }
            return Err(self.error(col, ParseErrorKind::Reserved(name)));
        }
        if name == "h" {
            return Err(self.error(col, ParseErrorKind::Reserved(name)));
        }
        if self.file.vars.contains(&name) {
            return Ok(RawTerm::Var(Var::user(&name)));
        }
        if self.file.consts.contains(&name) {
            return Ok(RawTerm::Const(name));
        }
        check_identifier(&name).map_err(|k| self.error(col, k))?;
        Err(self.error(col, ParseErrorKind::Undeclared(name)))
    }
}
