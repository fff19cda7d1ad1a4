//! Exact expectations of iterated Stratonovich integrals when the drivers are time and
//! independent standard Brownian motions.
//!
//! `E J^w(t)` vanishes unless `w` splits, read from the right, into time letters and adjacent
//! pairs of equal Brownian letters. Otherwise it equals `(1/2)^pairs · t^q / q!` with
//! `q = pairs + time letters`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::algebra::{fmt_signed_term, parse_term_line, Coefficient, Letter, LinComb, Word};
use crate::error::{Error, IoContext, Result};

/// `p · t^q / q!` for a word with non-zero expectation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectationMonomial {
    /// `(1/2)^pairs`
    pub p: BigRational,
    pub t_power: u32,
}

impl ExpectationMonomial {
    /// The full rational factor `p / q!`.
    pub fn weight(&self) -> BigRational {
        let factorial = (1..=self.t_power).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
        &self.p / BigRational::from_integer(factorial)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        use num_traits::ToPrimitive;
        self.weight().to_f64().unwrap_or(f64::NAN) * t.powi(self.t_power as i32)
    }
}

/// Right-to-left scan: a time letter consumes one position, two equal adjacent Brownian
/// letters consume two, anything else makes the expectation zero.
pub fn expect_word(word: &Word, time_letter: Letter) -> Option<ExpectationMonomial> {
    let letters = word.letters();
    let mut i = letters.len();
    let (mut pairs, mut power) = (0u32, 0u32);
    while i > 0 {
        if letters[i - 1] == time_letter {
            power += 1;
            i -= 1;
        } else if i > 1 && letters[i - 1] == letters[i - 2] {
            pairs += 1;
            power += 1;
            i -= 2;
        } else {
            return None;
        }
    }
    Some(ExpectationMonomial {
        p: BigRational::new(BigInt::one(), BigInt::from(2).pow(pairs)),
        t_power: power,
    })
}

/// Polynomial in the time horizon with parameter-polynomial coefficients.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct TimePolynomial(BTreeMap<u32, Coefficient>);

impl TimePolynomial {
    pub fn zero() -> Self {
        TimePolynomial(BTreeMap::new())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_term(&mut self, power: u32, coeff: &Coefficient) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.0.entry(power).or_default();
        *slot += coeff;
        if slot.is_zero() {
            self.0.remove(&power);
        }
    }

    /// Coefficient of `t^power`.
    pub fn coefficient(&self, power: u32) -> Coefficient {
        self.0.get(&power).cloned().unwrap_or_default()
    }

    pub fn powers(&self) -> impl Iterator<Item = (u32, &Coefficient)> {
        self.0.iter().map(|(k, c)| (*k, c))
    }

    pub fn degree(&self) -> Option<u32> {
        self.0.keys().next_back().copied()
    }

    pub fn eval_f64(
        &self,
        t: f64,
        bindings: &std::collections::HashMap<String, f64>,
    ) -> Result<f64> {
        let mut total = 0.0;
        for (k, c) in &self.0 {
            total += c.eval_f64(bindings)? * t.powi(*k as i32);
        }
        Ok(total)
    }

    /// Formats with a chosen name for the time symbol.
    pub fn display_with<'a>(&'a self, time_symbol: &'a str) -> impl fmt::Display + 'a {
        DisplayWith {
            poly: self,
            symbol: time_symbol,
        }
    }
}

struct DisplayWith<'a> {
    poly: &'a TimePolynomial,
    symbol: &'a str,
}

impl fmt::Display for DisplayWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in &self.poly.0 {
            let t = match k {
                0 => String::new(),
                1 => self.symbol.to_string(),
                _ => format!("{}^{k}", self.symbol),
            };
            for (m, v) in c.terms() {
                let text = match (m.is_one(), t.is_empty()) {
                    (true, _) => t.clone(),
                    (false, true) => m.to_string(),
                    (false, false) => format!("{m}*{t}"),
                };
                fmt_signed_term(f, v, &text, text.is_empty(), first)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl fmt::Display for TimePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with("T"))
    }
}

impl fmt::Debug for TimePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn add_word(acc: &mut TimePolynomial, word: &Word, coeff: &Coefficient, time_letter: Letter) {
    if let Some(e) = expect_word(word, time_letter) {
        acc.add_term(e.t_power, &coeff.scale(&e.weight()));
    }
}

/// Termwise expectation of an in-memory expansion.
pub fn expect_lincomb(x: &LinComb, time_letter: Letter) -> TimePolynomial {
    let mut acc = TimePolynomial::zero();
    for (w, c) in x.iter() {
        add_word(&mut acc, w, c, time_letter);
    }
    acc
}

/// Termwise expectation of an expansion read line by line; only the running sum is kept.
pub fn expect_expansion<R: BufRead>(reader: R, time_letter: Letter) -> Result<TimePolynomial> {
    let mut acc = TimePolynomial::zero();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: "<expansion>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let (w, c) = parse_term_line(&line).map_err(|e| e.on_line(i + 1))?;
        add_word(&mut acc, &w, &c, time_letter);
    }
    Ok(acc)
}

pub fn expect_expansion_file(path: &Path, time_letter: Letter) -> Result<TimePolynomial> {
    let file = std::fs::File::open(path).with_path(path)?;
    expect_expansion(std::io::BufReader::new(file), time_letter).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}
