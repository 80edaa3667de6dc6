//! Hand-written lexer and parser for the line-oriented network format:
//!
//! ```text
//! species S1, S2
//! const A = 1.0
//! reaction A + 2 S1 <=> 3 S1 @ kf=6, kb=1
//! ```
//!
//! `#` starts a comment. A lone `0` denotes an empty side.

use super::{ReactionNetwork, ReactionSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Comma,
    Equals,
    Plus,
    Arrow,
    At,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn lex(line_no: usize, text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            ',' => {
                i += 1;
                Tok::Comma
            }
            '=' => {
                i += 1;
                Tok::Equals
            }
            '+' => {
                i += 1;
                Tok::Plus
            }
            '@' => {
                i += 1;
                Tok::At
            }
            '<' => {
                if chars.get(i + 1) == Some(&'=') && chars.get(i + 2) == Some(&'>') {
                    i += 3;
                    Tok::Arrow
                } else {
                    return Err(err(line_no, col, "expected `<=>`"));
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                Tok::Number(chars[start..i].iter().collect())
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(err(line_no, col, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { tok, col });
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |s| s.col)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(err(self.line, self.col(), message))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<(String, usize)> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, col))
            }
            _ => self.fail("expected a species name"),
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek() {
            Some(Tok::Number(s)) => match s.parse::<f64>() {
                Ok(v) => {
                    self.pos += 1;
                    Ok(v)
                }
                Err(_) => self.fail(format!("malformed number `{s}`")),
            },
            _ => self.fail("expected a number"),
        }
    }

    fn done(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            self.fail("unexpected trailing input")
        } else {
            Ok(())
        }
    }
}

/// Species name with the column it appeared at, for late resolution errors.
type Term = (String, u32, usize);

fn parse_side(cur: &mut Cursor<'_>) -> Result<Vec<Term>> {
    if let Some(Tok::Number(s)) = cur.peek() {
        if s == "0" && !matches!(cur.toks.get(cur.pos + 1).map(|t| &t.tok), Some(Tok::Ident(_))) {
            cur.pos += 1;
            return Ok(Vec::new());
        }
    }
    let mut terms = Vec::new();
    loop {
        let coeff = match cur.peek() {
            Some(Tok::Number(s)) => match s.parse::<u32>() {
                Ok(v) if v >= 1 => {
                    cur.pos += 1;
                    v
                }
                _ => return cur.fail(format!("coefficient `{s}` is not a positive integer")),
            },
            _ => 1,
        };
        let (name, col) = cur.ident()?;
        terms.push((name, coeff, col));
        if cur.peek() == Some(&Tok::Plus) {
            cur.pos += 1;
        } else {
            return Ok(terms);
        }
    }
}

fn parse_rate(cur: &mut Cursor<'_>, key: &str) -> Result<f64> {
    match cur.peek() {
        Some(Tok::Ident(s)) if s == key => cur.pos += 1,
        _ => return cur.fail(format!("expected `{key}`")),
    }
    cur.expect(Tok::Equals, "`=`")?;
    cur.number()
}

struct RawReaction {
    line: usize,
    lhs: Vec<Term>,
    rhs: Vec<Term>,
    kf: f64,
    kb: f64,
}

/// Parses the text format into a validated network.
pub fn parse_network(src: &str) -> Result<ReactionNetwork> {
    let mut species: Vec<(String, usize, usize)> = Vec::new();
    let mut constants: Vec<(String, f64, usize, usize)> = Vec::new();
    let mut raw = Vec::new();

    for (idx, text) in src.lines().enumerate() {
        let line = idx + 1;
        let toks = lex(line, text)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            toks: &toks,
            pos: 0,
            line,
            end_col: text.chars().count() + 1,
        };
        let (keyword, _) = cur.ident().map_err(|_| err(line, toks[0].col, "expected a keyword"))?;
        match keyword.as_str() {
            "species" => loop {
                let (name, col) = cur.ident()?;
                species.push((name, line, col));
                if cur.peek() == Some(&Tok::Comma) {
                    cur.pos += 1;
                } else {
                    cur.done()?;
                    break;
                }
            },
            "const" => {
                let (name, col) = cur.ident()?;
                cur.expect(Tok::Equals, "`=`")?;
                let value_col = cur.col();
                let value = cur.number()?;
                cur.done()?;
                if !(value > 0.0 && value.is_finite()) {
                    return Err(err(line, value_col, "constant concentration must be positive"));
                }
                constants.push((name, value, line, col));
            }
            "reaction" => {
                let lhs = parse_side(&mut cur)?;
                cur.expect(Tok::Arrow, "`<=>`")?;
                let rhs = parse_side(&mut cur)?;
                cur.expect(Tok::At, "`@`")?;
                let kf_col = cur.col();
                let kf = parse_rate(&mut cur, "kf")?;
                cur.expect(Tok::Comma, "`,`")?;
                let kb_col = cur.col();
                let kb = parse_rate(&mut cur, "kb")?;
                cur.done()?;
                for (v, c, name) in [(kf, kf_col, "kf"), (kb, kb_col, "kb")] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(err(line, c, format!("rate constant {name} must be positive")));
                    }
                }
                raw.push(RawReaction { line, lhs, rhs, kf, kb });
            }
            other => {
                return Err(err(line, toks[0].col, format!("unknown keyword `{other}`")));
            }
        }
    }

    let mut seen = std::collections::HashMap::new();
    for (name, line, col) in species
        .iter()
        .map(|(n, l, c)| (n, l, c))
        .chain(constants.iter().map(|(n, _, l, c)| (n, l, c)))
    {
        if seen.insert(name.clone(), ()).is_some() {
            return Err(err(*line, *col, format!("duplicate species `{name}`")));
        }
    }

    let mut specs = Vec::with_capacity(raw.len());
    for r in raw {
        for (name, _, col) in r.lhs.iter().chain(&r.rhs) {
            if !seen.contains_key(name) {
                return Err(err(r.line, *col, format!("undeclared species `{name}`")));
            }
        }
        let net_change_zero = species.iter().all(|(s, _, _)| {
            let count = |side: &[Term]| -> i64 {
                side.iter().filter(|(n, _, _)| n == s).map(|(_, c, _)| i64::from(*c)).sum()
            };
            count(&r.lhs) == count(&r.rhs)
        });
        if net_change_zero {
            return Err(err(r.line, 1, "null reaction: no dynamic species changes"));
        }
        let strip = |side: Vec<Term>| side.into_iter().map(|(n, c, _)| (n, c)).collect();
        specs.push(ReactionSpec {
            reactants: strip(r.lhs),
            products: strip(r.rhs),
            kf: r.kf,
            kb: r.kb,
        });
    }
    if species.is_empty() {
        return Err(err(1, 1, "no dynamic species declared"));
    }
    if specs.is_empty() {
        return Err(err(1, 1, "no reactions declared"));
    }

    ReactionNetwork::new(
        species.into_iter().map(|(n, _, _)| n).collect(),
        constants.into_iter().map(|(n, v, _, _)| (n, v)).collect(),
        specs,
    )
}
