use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::ParseError;

/// Index of a driver. By convention letter 0 is time when a time driver exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u16);

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u16> for Letter {
    fn from(value: u16) -> Self {
        Letter(value)
    }
}

/// A word indexing the iterated integral `J^w`.
///
/// Words order by length first and then lexicographically on letters, which is the canonical
/// term order of an expansion.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(SmallVec<[Letter; 16]>);

impl Word {
    pub fn empty() -> Self {
        Word(SmallVec::new())
    }

    pub fn from_letters<I: IntoIterator<Item = u16>>(letters: I) -> Self {
        Word(letters.into_iter().map(Letter).collect())
    }

    pub fn single(letter: Letter) -> Self {
        let mut w = SmallVec::new();
        w.push(letter);
        Word(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    /// The word with its last letter removed, together with that letter.
    pub fn split_last(&self) -> Option<(Word, Letter)> {
        let (&last, init) = self.0.split_last()?;
        Some((Word(SmallVec::from_slice(init)), last))
    }

    /// `(w_1, …, w_k, l)`: the word of `∫ J^w dX^l`.
    pub fn append(&self, letter: Letter) -> Word {
        let mut out = self.clone();
        out.0.push(letter);
        out
    }

    pub fn push(&mut self, letter: Letter) {
        self.0.push(letter);
    }

    pub(crate) fn with_capacity(n: usize) -> Self {
        Word(SmallVec::with_capacity(n))
    }
}

/// Free-function form of [`Word::append`].
pub fn append(w: &Word, l: Letter) -> Word {
    w.append(l)
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.as_slice().cmp(other.0.as_slice()))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

/// Comma separated decimal letters; the empty word prints as the empty string.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", l.0)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Ok(Word::empty());
        }
        let mut word = Word::empty();
        let mut offset = 0;
        for part in s.split(',') {
            let trimmed = part.trim();
            let letter = trimmed.parse::<u16>().map_err(|_| {
                let lead = part.len() - part.trim_start().len();
                ParseError::at(1, offset + lead + 1, format!("invalid letter `{trimmed}`"))
            })?;
            word.push(Letter(letter));
            offset += part.len() + 1;
        }
        Ok(word)
    }
}

impl<const N: usize> From<[u16; N]> for Word {
    fn from(letters: [u16; N]) -> Self {
        Word::from_letters(letters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn append_examples() {
        assert_eq!(
            append(&Word::from([2, 3]), Letter(1)),
            Word::from([2, 3, 1])
        );
        assert_eq!(append(&Word::empty(), Letter(5)), Word::from([5]));
        assert_eq!(
            append(&Word::from([1, 1]), Letter(1)),
            Word::from([1, 1, 1])
        );
    }

    #[test]
    fn order_is_length_then_lex() {
        let mut words = [
            Word::from([1, 0]),
            Word::from([2]),
            Word::empty(),
            Word::from([0, 5]),
            Word::from([0]),
        ];
        words.sort();
        let printed: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        assert_eq!(printed, ["", "0", "2", "0,5", "1,0"]);
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        assert_eq!("0,1,0".parse::<Word>().unwrap(), Word::from([0, 1, 0]));
        assert_eq!("".parse::<Word>().unwrap(), Word::empty());
        assert_eq!(" 4 , 2 ".parse::<Word>().unwrap(), Word::from([4, 2]));
        let err = "1,x".parse::<Word>().unwrap_err();
        assert_eq!(err.column, 3);
    }
}
