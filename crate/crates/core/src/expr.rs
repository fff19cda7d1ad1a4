//! Placeholder expression trees over `Q` objects, iterated-integral atoms, `·` and `▷`.
//!
//! The same tree type carries every stage of the pipeline: the compact Picard form over `Q^k`,
//! the substituted form over weighted `J` atoms, and the monomials handed to instantiation.
//!
//! Text grammar (one expression per line):
//!
//! ```text
//! expr := "1" | "Q" k | [coeff "*"] "J[" letters "]"
//!       | "(+ " expr+ ")" | "(* " expr+ ")" | "(^ " expr " " k ")" | "(> " expr " " expr ")"
//! ```
//!
//! A coefficient with more than one term is parenthesised, e.g. `(a-a*y0)*J[0]`.

use std::fmt;
use std::str::FromStr;

use crate::algebra::{Coefficient, Word};
use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    One,
    Q(u32),
    /// `c · J^w`. With an empty word this is a scalar.
    J(Coefficient, Word),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Box<Expr>, u32),
    Ncp(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn q(k: u32) -> Expr {
        Expr::Q(k)
    }

    pub fn j(coeff: Coefficient, word: Word) -> Expr {
        Expr::J(coeff, word)
    }

    pub fn scalar(coeff: Coefficient) -> Expr {
        Expr::J(coeff, Word::empty())
    }

    /// Sum node; a single summand is returned unwrapped.
    pub fn sum(mut children: Vec<Expr>) -> Expr {
        if children.len() == 1 {
            children.pop().expect("one child")
        } else {
            Expr::Sum(children)
        }
    }

    /// Product node with nested products flattened; a single factor is returned unwrapped.
    pub fn prod(children: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Expr::Prod(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().expect("one factor")
        } else {
            Expr::Prod(flat)
        }
    }

    pub fn pow(base: Expr, k: u32) -> Expr {
        if k == 1 {
            base
        } else {
            Expr::Pow(Box::new(base), k)
        }
    }

    pub fn ncp(left: Expr, right: Expr) -> Expr {
        Expr::Ncp(Box::new(left), Box::new(right))
    }

    /// No `Sum` and no `Pow` anywhere in the tree.
    pub fn is_monomial(&self) -> bool {
        match self {
            Expr::One | Expr::Q(_) | Expr::J(..) => true,
            Expr::Sum(_) | Expr::Pow(..) => false,
            Expr::Prod(c) => c.iter().all(Expr::is_monomial),
            Expr::Ncp(l, r) => l.is_monomial() && r.is_monomial(),
        }
    }

    /// Word length produced by a monomial: `Q` atoms stand for single letters.
    pub fn word_length(&self) -> usize {
        match self {
            Expr::One => 0,
            Expr::Q(_) => 1,
            Expr::J(_, w) => w.len(),
            Expr::Sum(c) => c.iter().map(Expr::word_length).min().unwrap_or(0),
            Expr::Prod(c) => c.iter().map(Expr::word_length).sum(),
            Expr::Pow(b, k) => b.word_length() * *k as usize,
            Expr::Ncp(l, r) => l.word_length() + r.word_length(),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + match self {
            Expr::One | Expr::Q(_) | Expr::J(..) => 0,
            Expr::Sum(c) | Expr::Prod(c) => c.iter().map(Expr::node_count).sum(),
            Expr::Pow(b, _) => b.node_count(),
            Expr::Ncp(l, r) => l.node_count() + r.node_count(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::One => f.write_str("1"),
            Expr::Q(k) => write!(f, "Q{k}"),
            Expr::J(c, w) => {
                if c.is_one() {
                    write!(f, "J[{w}]")
                } else if c.len() == 1 {
                    write!(f, "{c}*J[{w}]")
                } else {
                    write!(f, "({c})*J[{w}]")
                }
            }
            Expr::Sum(c) | Expr::Prod(c) => {
                f.write_str(if matches!(self, Expr::Sum(_)) {
                    "(+"
                } else {
                    "(*"
                })?;
                for e in c {
                    write!(f, " {e}")?;
                }
                f.write_str(")")
            }
            Expr::Pow(b, k) => write!(f, "(^ {b} {k})"),
            Expr::Ncp(l, r) => write!(f, "(> {l} {r})"),
        }
    }
}

#[derive(Debug)]
enum Token<'a> {
    Open(u8),
    Close,
    Atom(&'a str),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn error(&self, at: usize, message: impl Into<String>) -> ParseError {
        ParseError::at(1, at + 1, message)
    }

    /// Returns the token and its byte offset.
    fn next(&mut self) -> Option<(Token<'a>, usize)> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let first = *bytes.get(start)?;
        if first == b'('
            && matches!(bytes.get(start + 1), Some(b'+' | b'*' | b'^' | b'>'))
            && bytes.get(start + 2).is_some_and(u8::is_ascii_whitespace)
        {
            self.pos += 2;
            return Some((Token::Open(bytes[start + 1]), start));
        }
        if first == b')' {
            self.pos += 1;
            return Some((Token::Close, start));
        }
        let mut depth = 0i32;
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b'(' | b'[' => depth += 1,
                b']' => depth -= 1,
                b')' if depth == 0 => break,
                b')' => depth -= 1,
                c if c.is_ascii_whitespace() && depth == 0 => break,
                _ => {}
            }
            self.pos += 1;
        }
        Some((Token::Atom(&self.src[start..self.pos]), start))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let end = self.src.len();
        let (tok, at) = self
            .next()
            .ok_or_else(|| self.error(end, "unexpected end of expression"))?;
        match tok {
            Token::Close => Err(self.error(at, "unexpected `)`")),
            Token::Atom(text) => parse_atom(text).map_err(|e| e.shifted(at)),
            Token::Open(op) => {
                let node = match op {
                    b'+' | b'*' => {
                        let children = self.children()?;
                        if children.len() < 2 {
                            return Err(self.error(at, "sum and product need two operands"));
                        }
                        if op == b'+' {
                            Expr::Sum(children)
                        } else {
                            Expr::Prod(children)
                        }
                    }
                    b'^' => {
                        let base = self.expr()?;
                        let (tok, k_at) = self
                            .next()
                            .ok_or_else(|| self.error(end, "missing exponent"))?;
                        let k = match tok {
                            Token::Atom(t) => t.parse::<u32>().ok().filter(|&k| k >= 1),
                            _ => None,
                        }
                        .ok_or_else(|| self.error(k_at, "exponent must be an integer >= 1"))?;
                        self.close(at)?;
                        Expr::Pow(Box::new(base), k)
                    }
                    _ => {
                        let left = self.expr()?;
                        let right = self.expr()?;
                        self.close(at)?;
                        Expr::ncp(left, right)
                    }
                };
                Ok(node)
            }
        }
    }

    fn children(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut out = Vec::new();
        loop {
            let save = self.pos;
            match self.next() {
                Some((Token::Close, _)) => return Ok(out),
                Some(_) => {
                    self.pos = save;
                    out.push(self.expr()?);
                }
                None => return Err(self.error(self.src.len(), "unclosed `(`")),
            }
        }
    }

    fn close(&mut self, open_at: usize) -> Result<(), ParseError> {
        match self.next() {
            Some((Token::Close, _)) => Ok(()),
            Some((_, at)) => Err(self.error(at, "expected `)`")),
            None => Err(self.error(open_at, "unclosed `(`")),
        }
    }
}

fn parse_atom(text: &str) -> Result<Expr, ParseError> {
    if text == "1" {
        return Ok(Expr::One);
    }
    if let Some(k) = text.strip_prefix('Q') {
        return k
            .parse::<u32>()
            .map(Expr::Q)
            .map_err(|_| ParseError::at(1, 1, format!("invalid Q atom `{text}`")));
    }
    let (Some(idx), true) = (text.rfind("J["), text.ends_with(']')) else {
        return Err(ParseError::at(1, 1, format!("invalid atom `{text}`")));
    };
    let word: Word = text[idx + 2..text.len() - 1]
        .parse()
        .map_err(|e: ParseError| e.shifted(idx + 2))?;
    let prefix = &text[..idx];
    let coeff = if prefix.is_empty() {
        Coefficient::one()
    } else {
        let body = prefix
            .strip_suffix('*')
            .ok_or_else(|| ParseError::at(1, idx + 1, "expected `*` before `J[`"))?;
        body.parse()?
    };
    Ok(Expr::J(coeff, word))
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lexer = Lexer { src: s, pos: 0 };
        let e = lexer.expr()?;
        if let Some((_, at)) = lexer.next() {
            return Err(lexer.error(at, "trailing input after expression"));
        }
        Ok(e)
    }
}
