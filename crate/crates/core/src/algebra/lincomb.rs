use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::shuffle::{shuffle_counts, Multiplicities, ShuffleCounts};
use super::{Coefficient, Letter, Word};
use crate::error::ParseError;

/// Maximum word length kept in an expansion; `None` keeps everything.
pub type WordLimit = Option<usize>;

pub(crate) fn within(limit: WordLimit, len: usize) -> bool {
    limit.is_none_or(|l| len <= l)
}

/// A finite linear combination `Σ c_w J^w` of iterated integrals.
///
/// Terms are stored in canonical word order and zero coefficients are never kept, so two values
/// are equal exactly when their serializations are byte-identical.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct LinComb(BTreeMap<Word, Coefficient>);

impl LinComb {
    pub fn zero() -> Self {
        LinComb(BTreeMap::new())
    }

    /// `1·J^()`, the multiplicative identity.
    pub fn one() -> Self {
        LinComb::term(Coefficient::one(), Word::empty())
    }

    pub fn term(coeff: Coefficient, word: Word) -> Self {
        let mut out = LinComb::zero();
        out.add_term(word, &coeff);
        out
    }

    pub fn word(word: Word) -> Self {
        LinComb::term(Coefficient::one(), word)
    }

    pub fn constant(coeff: Coefficient) -> Self {
        LinComb::term(coeff, Word::empty())
    }

    pub fn from_counts(counts: ShuffleCounts) -> Self {
        let mut out = LinComb::zero();
        for (w, n) in counts {
            out.add_term(w, &Coefficient::integer(n as i64));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Coefficient)> {
        self.0.iter()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.0.keys()
    }

    pub fn coefficient(&self, word: &Word) -> Option<&Coefficient> {
        self.0.get(word)
    }

    pub fn max_word_length(&self) -> usize {
        self.0.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, word: Word, coeff: &Coefficient) {
        if coeff.is_zero() {
            return;
        }
        match self.0.entry(word) {
            Entry::Vacant(e) => {
                e.insert(coeff.clone());
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &LinComb) -> LinComb {
        let mut out = self.clone();
        out += other;
        out
    }

    pub fn scale(&self, factor: &Coefficient) -> LinComb {
        let mut out = LinComb::zero();
        for (w, c) in &self.0 {
            out.add_term(w.clone(), &(c * factor));
        }
        out
    }

    /// Every word with `letter` appended: `x ▷ J^(letter)`.
    pub fn append_letter(&self, letter: Letter) -> LinComb {
        LinComb(
            self.0
                .iter()
                .map(|(w, c)| (w.append(letter), c.clone()))
                .collect(),
        )
    }

    pub fn truncate(&self, limit: WordLimit) -> LinComb {
        match limit {
            None => self.clone(),
            Some(l) => LinComb(
                self.0
                    .iter()
                    .filter(|(w, _)| w.len() <= l)
                    .map(|(w, c)| (w.clone(), c.clone()))
                    .collect(),
            ),
        }
    }

    /// Shuffle product, dropping any word longer than `limit`.
    pub fn mul_truncated(&self, other: &LinComb, limit: WordLimit) -> LinComb {
        let mut acc: HashMap<Word, Coefficient> = HashMap::new();
        for (wa, ca) in &self.0 {
            for (wb, cb) in &other.0 {
                if !within(limit, wa.len() + wb.len()) {
                    continue;
                }
                let weight = ca * cb;
                accumulate(&mut acc, kernel(wa, wb), &weight, None);
            }
        }
        LinComb::from_map(acc)
    }

    pub fn pow_truncated(&self, k: u32, limit: WordLimit) -> LinComb {
        let mut acc = LinComb::one().truncate(limit);
        for _ in 0..k {
            acc = acc.mul_truncated(self, limit);
        }
        acc
    }

    /// Dendriform product `x ▷ y`, bilinear extension of
    /// `J^a ▷ J^b = (J^a J^{b-}) ▷ J^{b_end}` and `J^a ▷ J^() = 0`.
    pub fn ncp_truncated(&self, other: &LinComb, limit: WordLimit) -> LinComb {
        let mut acc: HashMap<Word, Coefficient> = HashMap::new();
        for (wb, cb) in &other.0 {
            let Some((b_init, b_last)) = wb.split_last() else {
                continue;
            };
            for (wa, ca) in &self.0 {
                if !within(limit, wa.len() + wb.len()) {
                    continue;
                }
                let weight = ca * cb;
                accumulate(&mut acc, kernel(wa, &b_init), &weight, Some(b_last));
            }
        }
        LinComb::from_map(acc)
    }

    fn from_map(acc: HashMap<Word, Coefficient>) -> LinComb {
        LinComb(acc.into_iter().filter(|(_, c)| !c.is_zero()).collect())
    }

    /// Canonical text, one `<coefficient> ; <word>` line per term.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (w, c) in &self.0 {
            writeln!(out, "{c} ; {w}")?;
        }
        Ok(())
    }
}

fn kernel(a: &Word, b: &Word) -> Multiplicities {
    shuffle_counts(a, b).expect("shuffle multiplicity exceeds u128")
}

fn accumulate(
    acc: &mut HashMap<Word, Coefficient>,
    counts: Multiplicities,
    weight: &Coefficient,
    suffix: Option<Letter>,
) {
    for (mut w, n) in counts {
        if let Some(l) = suffix {
            w.push(l);
        }
        let term = weight.scale_int(n);
        match acc.entry(w) {
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(term);
            }
            std::collections::hash_map::Entry::Occupied(mut e) => *e.get_mut() += &term,
        }
    }
}

impl std::ops::AddAssign<&LinComb> for LinComb {
    fn add_assign(&mut self, rhs: &LinComb) {
        for (w, c) in &rhs.0 {
            self.add_term(w.clone(), c);
        }
    }
}

pub fn lincomb_mul(x: &LinComb, y: &LinComb) -> LinComb {
    x.mul_truncated(y, None)
}

pub fn lincomb_pow(x: &LinComb, k: u32) -> LinComb {
    x.pow_truncated(k, None)
}

pub fn ncp(x: &LinComb, y: &LinComb) -> LinComb {
    x.ncp_truncated(y, None)
}

pub fn truncate(x: &LinComb, limit: WordLimit) -> LinComb {
    x.truncate(limit)
}

/// Parses one `<coefficient> ; <word>` line.
pub fn parse_term_line(line: &str) -> Result<(Word, Coefficient), ParseError> {
    let Some(split) = line.find(';') else {
        return Err(ParseError::at(1, 1, "expected `<coefficient> ; <word>`"));
    };
    let (coeff_text, word_text) = (&line[..split], &line[split + 1..]);
    let coeff: Coefficient = coeff_text.parse()?;
    let word: Word = word_text
        .parse()
        .map_err(|e: ParseError| e.shifted(split + 1))?;
    Ok((word, coeff))
}

impl fmt::Display for LinComb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, c) in &self.0 {
            writeln!(f, "{c} ; {w}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for LinComb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})J({w})")?;
        }
        Ok(())
    }
}

/// Blank lines are ignored; repeated words are summed.
impl FromStr for LinComb {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = LinComb::zero();
        for (i, line) in s.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (w, c) = parse_term_line(line).map_err(|e| e.on_line(i + 1))?;
            out.add_term(w, &c);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lc(s: &str) -> LinComb {
        s.parse().unwrap()
    }

    fn j(w: &[u16]) -> LinComb {
        LinComb::word(Word::from_letters(w.iter().copied()))
    }

    #[test]
    fn mul_examples() {
        assert_eq!(
            lincomb_mul(&lc("a ; 1"), &lc("b ; 2")),
            lc("a*b ; 1,2\na*b ; 2,1")
        );
        let x = lc("a ; 1\n3*b ; 0,1");
        assert_eq!(lincomb_mul(&x, &LinComb::one()), x);
        assert!(lincomb_mul(&lc("a ; 1"), &LinComb::zero()).is_zero());
    }

    #[test]
    fn pow_examples() {
        assert_eq!(lincomb_pow(&j(&[1]), 3), lc("6 ; 1,1,1"));
        assert_eq!(lincomb_pow(&j(&[1]), 2), lc("2 ; 1,1"));
        assert_eq!(lincomb_pow(&lc("a ; 1"), 0), LinComb::one());
    }

    #[test]
    fn ncp_examples() {
        assert_eq!(ncp(&j(&[1]), &j(&[2])), j(&[1, 2]));
        assert_eq!(
            ncp(&j(&[1]), &j(&[2, 3])),
            j(&[1, 2, 3]).add(&j(&[2, 1, 3]))
        );
        assert_eq!(ncp(&j(&[2, 3]), &j(&[1])), j(&[2, 3, 1]));
        assert_eq!(ncp(&LinComb::one(), &j(&[2])), j(&[2]));
        assert!(ncp(&j(&[2]), &LinComb::one()).is_zero());
    }

    #[test]
    fn truncate_examples() {
        let x = lc("a ; 1\nb ; 1,1,1");
        assert_eq!(truncate(&x, Some(2)), lc("a ; 1"));
        assert_eq!(truncate(&x, None), x);
        assert!(truncate(&LinComb::zero(), Some(3)).is_zero());
    }

    #[test]
    fn serialization_format() {
        let x = LinComb::term("2*a^2*b".parse().unwrap(), Word::from([0, 1]));
        assert_eq!(x.to_text(), "2*a^2*b ; 0,1\n");
        assert_eq!(LinComb::one().to_text(), "1 ; \n");
        assert!(lc("").is_zero());
        assert_eq!(lc("a ; 1\n-a ; 1"), LinComb::zero());
        let sorted = lc("1 ; 1,0\nb ; 2\na ; 0,5\n1 ; ");
        assert_eq!(sorted.to_text(), "1 ; \nb ; 2\na ; 0,5\n1 ; 1,0\n");
    }

    #[test]
    fn parse_errors_report_line_and_column() {
        let err = "a ; 1\nb ; 2,x".parse::<LinComb>().unwrap_err();
        assert_eq!((err.line, err.column), (2, 7));
        let err = "a ; 1\n\nb 2".parse::<LinComb>().unwrap_err();
        assert_eq!(err.line, 3);
        let err = "a + ; 1".parse::<LinComb>().unwrap_err();
        assert_eq!((err.line, err.column), (1, 5));
    }
}
