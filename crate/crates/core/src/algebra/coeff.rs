//! Exact multivariate polynomials over the rationals, used as term coefficients.
//!
//! Symbols are lowercase identifiers (`a`, `b`, `y0`, …). Monomials are kept in graded order:
//! lower total degree first, and within a degree the monomial with the larger exponent on the
//! alphabetically first symbol comes first (`a^2 < a*b < b^2`).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, ParseError};

pub type Symbol = Arc<str>;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(name: &str) -> Self {
        Monomial(vec![(Arc::from(name), 1)])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(s, e)| (&**s, *e))
    }

    pub fn exponent(&self, symbol: &str) -> u32 {
        self.0
            .iter()
            .find(|(s, _)| &**s == symbol)
            .map_or(0, |(_, e)| *e)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        while i < self.0.len() && j < other.0.len() {
            let (sa, ea) = &self.0[i];
            let (sb, eb) = &other.0[j];
            match sa.cmp(sb) {
                Ordering::Less => {
                    out.push((sa.clone(), *ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((sb.clone(), *eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((sa.clone(), ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            for ((sa, ea), (sb, eb)) in self.0.iter().zip(other.0.iter()) {
                match sa.cmp(sb) {
                    Ordering::Equal => {}
                    // self carries the earlier symbol; the other has exponent 0 there
                    ord => return ord,
                }
                match eb.cmp(ea) {
                    Ordering::Equal => {}
                    ord => return ord,
                }
            }
            other.0.len().cmp(&self.0.len())
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Exact polynomial in the parameter symbols. Zero terms are never stored.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Coefficient(BTreeMap<Monomial, BigRational>);

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient(BTreeMap::new())
    }

    pub fn one() -> Self {
        Coefficient::constant(BigRational::one())
    }

    pub fn constant(value: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(Monomial::one(), value);
        }
        Coefficient(terms)
    }

    pub fn integer(value: i64) -> Self {
        Coefficient::constant(BigRational::from_integer(value.into()))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Coefficient::constant(BigRational::new(numer.into(), denom.into()))
    }

    pub fn symbol(name: &str) -> Self {
        Coefficient::term(BigRational::one(), Monomial::var(name))
    }

    pub fn term(value: BigRational, monomial: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(monomial, value);
        }
        Coefficient(terms)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The value if this polynomial has no symbols.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.0.len() {
            0 => Some(BigRational::zero()),
            1 => self
                .0
                .iter()
                .next()
                .filter(|(m, _)| m.is_one())
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.0.iter()
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .0
            .keys()
            .flat_map(|m| m.factors().map(|(s, _)| s.to_string()))
            .collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn scale(&self, factor: &BigRational) -> Coefficient {
        if factor.is_zero() {
            return Coefficient::zero();
        }
        Coefficient(
            self.0
                .iter()
                .map(|(m, c)| (m.clone(), c * factor))
                .collect(),
        )
    }

    pub fn scale_int(&self, factor: u128) -> Coefficient {
        if factor == 1 {
            return self.clone();
        }
        self.scale(&BigRational::from_integer(BigInt::from(factor)))
    }

    pub fn pow(&self, k: u32) -> Coefficient {
        (0..k).fold(Coefficient::one(), |acc, _| &acc * self)
    }

    fn add_term(&mut self, monomial: Monomial, value: BigRational) {
        if value.is_zero() {
            return;
        }
        match self.0.entry(monomial) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(value);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += value;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Numeric value under the given symbol bindings.
    pub fn eval_f64(&self, bindings: &HashMap<String, f64>) -> Result<f64, Error> {
        let mut total = 0.0;
        for (m, c) in &self.0 {
            let mut v = c.to_f64().unwrap_or(f64::NAN);
            for (s, e) in m.factors() {
                let x = bindings
                    .get(s)
                    .ok_or_else(|| Error::UnboundSymbol(s.to_string()))?;
                v *= x.powi(e as i32);
            }
            total += v;
        }
        Ok(total)
    }
}

impl AddAssign<&Coefficient> for Coefficient {
    fn add_assign(&mut self, rhs: &Coefficient) {
        for (m, c) in &rhs.0 {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl Add for &Coefficient {
    type Output = Coefficient;
    fn add(self, rhs: &Coefficient) -> Coefficient {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        Coefficient(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }
}

impl Sub for &Coefficient {
    type Output = Coefficient;
    fn sub(self, rhs: &Coefficient) -> Coefficient {
        self + &(-rhs)
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;
    fn mul(self, rhs: &Coefficient) -> Coefficient {
        let mut out = Coefficient::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &rhs.0 {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl From<BigRational> for Coefficient {
    fn from(value: BigRational) -> Self {
        Coefficient::constant(value)
    }
}

pub(crate) fn fmt_rational(r: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Writes `c*m` with the sign handled by the caller; `first` controls a leading `+`.
pub(crate) fn fmt_signed_term(
    f: &mut fmt::Formatter<'_>,
    value: &BigRational,
    monomial: &dyn fmt::Display,
    monomial_is_one: bool,
    first: bool,
) -> fmt::Result {
    if value.is_negative() {
        f.write_str("-")?;
    } else if !first {
        f.write_str("+")?;
    }
    let abs = value.abs();
    if monomial_is_one {
        fmt_rational(&abs, f)
    } else if abs.is_one() {
        write!(f, "{monomial}")
    } else {
        fmt_rational(&abs, f)?;
        write!(f, "*{monomial}")
    }
}

/// Canonical text: no whitespace, terms in monomial order, `0` for zero.
impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.0.iter().enumerate() {
            fmt_signed_term(f, c, m, m.is_one(), i == 0)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Coefficient {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let value = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(value)
    }
}

/// Recursive-descent parser for `+ - * / ^ ( )`, integers and `[a-z][a-z0-9]*` symbols.
struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError::at(1, self.pos + 1, message)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Coefficient, ParseError> {
        let mut acc = Coefficient::zero();
        let mut negate = false;
        loop {
            if let Some((m, v)) = self.canonical_term() {
                acc.add_term(m, if negate { -v } else { v });
            } else {
                let t = self.term()?;
                acc += &if negate { -&t } else { t };
            }
            match self.peek() {
                Some(b'+') => negate = false,
                Some(b'-') => negate = true,
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }

    /// Fast path for terms as they are printed: `[-][n[/d]*]s1[^e1]*s2…` with ascending
    /// symbols and no spaces. Leaves the position untouched when the term has another form.
    fn canonical_term(&mut self) -> Option<(Monomial, BigRational)> {
        let start = self.pos;
        let parsed = self.canonical_term_inner();
        match (parsed, self.peek()) {
            (Some(t), None | Some(b'+' | b'-' | b')')) => Some(t),
            _ => {
                self.pos = start;
                None
            }
        }
    }

    fn canonical_term_inner(&mut self) -> Option<(Monomial, BigRational)> {
        self.skip_ws();
        let negative = self.src.get(self.pos) == Some(&b'-');
        if negative {
            self.pos += 1;
        }
        let digits = |p: &mut Self| -> Option<BigInt> {
            let start = p.pos;
            while p.src.get(p.pos).is_some_and(u8::is_ascii_digit) {
                p.pos += 1;
            }
            let text = std::str::from_utf8(&p.src[start..p.pos]).ok()?;
            if text.is_empty() {
                None
            } else {
                text.parse().ok()
            }
        };
        let mut value = BigRational::one();
        let mut factors: Vec<(Symbol, u32)> = Vec::new();
        if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            let num = digits(self)?;
            let den = if self.src.get(self.pos) == Some(&b'/') {
                self.pos += 1;
                digits(self).filter(|d| !d.is_zero())?
            } else {
                BigInt::one()
            };
            value = BigRational::new(num, den);
            if self.src.get(self.pos) != Some(&b'*') {
                return Some((Monomial::one(), if negative { -value } else { value }));
            }
            self.pos += 1;
        }
        loop {
            let start = self.pos;
            if !self.src.get(self.pos).is_some_and(u8::is_ascii_lowercase) {
                return None;
            }
            while self
                .src
                .get(self.pos)
                .is_some_and(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).ok()?;
            let exp = if self.src.get(self.pos) == Some(&b'^') {
                self.pos += 1;
                digits(self)?.to_u32().filter(|&e| e > 0)?
            } else {
                1
            };
            if factors.last().is_some_and(|(s, _)| &**s >= name) {
                return None;
            }
            factors.push((Arc::from(name), exp));
            if self.src.get(self.pos) != Some(&b'*') {
                break;
            }
            self.pos += 1;
        }
        Some((Monomial(factors), if negative { -value } else { value }))
    }

    fn term(&mut self) -> Result<Coefficient, ParseError> {
        let mut acc = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let start = self.pos;
            let rhs = self.unary()?;
            if op == b'*' {
                acc = &acc * &rhs;
            } else {
                let divisor = rhs.as_constant().ok_or_else(|| {
                    ParseError::at(1, start + 1, "division by a non-constant expression")
                })?;
                if divisor.is_zero() {
                    return Err(ParseError::at(1, start + 1, "division by zero"));
                }
                acc = acc.scale(&divisor.recip());
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Coefficient, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Coefficient, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let exp = self.integer()?;
            let exp = exp
                .to_u32()
                .ok_or_else(|| self.error("exponent out of range"))?;
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("validated digits"))
    }

    fn primary(&mut self) -> Result<Coefficient, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => Ok(Coefficient::constant(BigRational::from_integer(
                self.integer()?,
            ))),
            Some(c) if c.is_ascii_lowercase() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_lowercase()
                        || self.src[self.pos].is_ascii_digit())
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii symbol");
                Ok(Coefficient::symbol(name))
            }
            Some(_) => Err(self.error("expected a number, symbol or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Coefficient {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_printing() {
        assert_eq!(c("b*a^2*2").to_string(), "2*a^2*b");
        assert_eq!(c("a*(1-y0)").to_string(), "a-a*y0");
        assert_eq!(c("b*a + a^2 + b^2").to_string(), "a^2+a*b+b^2");
        assert_eq!(c("-1/2*a + 3").to_string(), "3-1/2*a");
        assert_eq!(c("a - a").to_string(), "0");
        assert_eq!(c("6/4").to_string(), "3/2");
    }

    #[test]
    fn arithmetic_is_exact() {
        let x = c("1/3*a + b");
        let y = c("3*a - b");
        assert_eq!(&x * &y, c("a^2 + 8/3*a*b - b^2"));
        assert_eq!(&(&x + &y) - &y, x);
        assert_eq!(c("(a+b)^2"), c("a^2+2*a*b+b^2"));
    }

    #[test]
    fn printed_and_free_form_terms_agree() {
        let a = Coefficient::symbol("a");
        let b = Coefficient::symbol("b");
        let y0 = Coefficient::symbol("y0");
        let half = Coefficient::constant(BigRational::new(1.into(), 2.into()));
        assert_eq!(c("a*b ^2"), &a * &b.pow(2));
        assert_eq!(c("b*a"), &a * &b);
        assert_eq!(c("a--b"), &a + &b);
        assert_eq!(c("2*3*a"), a.scale_int(6));
        assert_eq!(c("-a^2"), -&a.pow(2));
        assert_eq!(c("y0^2*a"), &a * &y0.pow(2));
        assert_eq!(c("1/2/3"), c("1/6"));
        assert_eq!(c("a^0"), Coefficient::one());
        assert_eq!(c("-1/2*a*b^3+y0"), &(&(-&(&half * &a)) * &b.pow(3)) + &y0);
        assert_eq!(c("(a+b)*2-a"), &a + &b.scale_int(2));
    }

    #[test]
    fn parse_errors_have_columns() {
        let err = "a + * b".parse::<Coefficient>().unwrap_err();
        assert_eq!(err.column, 5);
        assert!("a / b".parse::<Coefficient>().is_err());
        assert!("1/0".parse::<Coefficient>().is_err());
        assert!("A".parse::<Coefficient>().is_err());
    }

    #[test]
    fn numeric_evaluation() {
        let bindings: HashMap<String, f64> = [("a".to_string(), 2.0)].into_iter().collect();
        assert_eq!(c("1/2*a^3 - 1").eval_f64(&bindings).unwrap(), 3.0);
        assert!(matches!(
            c("a*b").eval_f64(&bindings),
            Err(Error::UnboundSymbol(s)) if s == "b"
        ));
    }
}
