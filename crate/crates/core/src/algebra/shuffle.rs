//! Shuffle products of words.
//!
//! Two independent algorithms are provided. [`shuffle_recursive`] is the classical recursion on
//! last letters, `J^a J^b = ∫ J^{a-} J^b dJ^{a_end} + ∫ J^a J^{b-} dJ^{b_end}`.
//! [`shuffle_iterative`] enumerates interleaving patterns by repeatedly rewriting `ab -> ba` in
//! the string `a…ab…b` until the closure is reached, then substitutes the letters of both words
//! into every pattern.

use std::collections::{HashMap, HashSet};

use super::{LinComb, Word};

/// Multiset of words with their multiplicities.
pub type ShuffleCounts = HashMap<Word, u64>;

/// Interleaving pattern: bit `i` set means position `i` takes the next letter of the right word.
type Pattern = u128;

const MAX_PATTERN_LEN: usize = Pattern::BITS as usize;

pub fn shuffle_recursive(a: &Word, b: &Word) -> LinComb {
    LinComb::from_counts(shuffle_recursive_counts(a, b))
}

pub fn shuffle_iterative(a: &Word, b: &Word) -> LinComb {
    LinComb::from_counts(shuffle_iterative_counts(a, b))
}

/// Selects one of the two shuffle algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShuffleAlgorithm {
    Recursive,
    Iterative,
}

impl ShuffleAlgorithm {
    pub fn shuffle(self, a: &Word, b: &Word) -> LinComb {
        match self {
            ShuffleAlgorithm::Recursive => shuffle_recursive(a, b),
            ShuffleAlgorithm::Iterative => shuffle_iterative(a, b),
        }
    }

    /// `J^a ▷ J^b` through this algorithm's shuffle; zero when `b` is empty.
    pub fn ncp(self, a: &Word, b: &Word) -> LinComb {
        match b.split_last() {
            Some((head, last)) => self.shuffle(a, &head).append_letter(last),
            None => LinComb::zero(),
        }
    }
}

pub fn shuffle_recursive_counts(a: &Word, b: &Word) -> ShuffleCounts {
    if a.is_empty() {
        return ShuffleCounts::from([(b.clone(), 1)]);
    }
    if b.is_empty() {
        return ShuffleCounts::from([(a.clone(), 1)]);
    }
    if a.len() == 1 {
        return insert_everywhere(a.letters()[0], b);
    }
    if b.len() == 1 {
        return insert_everywhere(b.letters()[0], a);
    }
    let (a_init, a_last) = a.split_last().expect("non-empty");
    let (b_init, b_last) = b.split_last().expect("non-empty");
    let mut out = ShuffleCounts::new();
    for (w, n) in shuffle_recursive_counts(a, &b_init) {
        *out.entry(w.append(b_last)).or_insert(0) += n;
    }
    for (w, n) in shuffle_recursive_counts(&a_init, b) {
        *out.entry(w.append(a_last)).or_insert(0) += n;
    }
    out
}

fn insert_everywhere(letter: super::Letter, word: &Word) -> ShuffleCounts {
    let mut out = ShuffleCounts::new();
    let letters = word.letters();
    for k in 0..=letters.len() {
        let mut w = Word::with_capacity(letters.len() + 1);
        for &l in &letters[..k] {
            w.push(l);
        }
        w.push(letter);
        for &l in &letters[k..] {
            w.push(l);
        }
        *out.entry(w).or_insert(0) += 1;
    }
    out
}

pub fn shuffle_iterative_counts(a: &Word, b: &Word) -> ShuffleCounts {
    if a.len() + b.len() > MAX_PATTERN_LEN {
        return shuffle_recursive_counts(a, b);
    }
    let mut out = ShuffleCounts::new();
    for pattern in rewrite_closure(a.len(), b.len()) {
        *out.entry(substitute(pattern, a, b)).or_insert(0) += 1;
    }
    out
}

/// All interleavings of `m` left slots and `n` right slots, reached from `a^m b^n` by the
/// rewrite `ab -> ba`. Each rewrite adds exactly one inversion, so successive generations are
/// disjoint and only need deduplicating within themselves.
fn rewrite_closure(m: usize, n: usize) -> Vec<Pattern> {
    let start: Pattern = if n == 0 {
        0
    } else {
        (Pattern::MAX >> (MAX_PATTERN_LEN - n)) << m
    };
    let len = m + n;
    let mut all = vec![start];
    let mut generation = vec![start];
    while !generation.is_empty() {
        let mut next = HashSet::new();
        for &p in &generation {
            for i in 0..len.saturating_sub(1) {
                // `a` at i followed by `b` at i + 1
                if p & (1 << i) == 0 && p & (1 << (i + 1)) != 0 {
                    next.insert(p ^ (0b11 << i));
                }
            }
        }
        generation = next.into_iter().collect();
        all.extend_from_slice(&generation);
    }
    all
}

fn substitute(pattern: Pattern, a: &Word, b: &Word) -> Word {
    let (la, lb) = (a.letters(), b.letters());
    let mut w = Word::with_capacity(la.len() + lb.len());
    let (mut i, mut j) = (0, 0);
    for pos in 0..la.len() + lb.len() {
        if pattern & (1 << pos) != 0 {
            w.push(lb[j]);
            j += 1;
        } else {
            w.push(la[i]);
            i += 1;
        }
    }
    w
}

/// Multiplicities wide enough for any shuffle of words up to 130 letters.
pub(crate) type Multiplicities = HashMap<Word, u128>;

/// Product kernel used by [`LinComb`](super::LinComb) and the pipeline.
///
/// Dynamic programming over prefix pairs: cell `(i, j)` holds the shuffles of `a[..i]` and
/// `b[..j]` with multiplicities, built from cells `(i-1, j)` and `(i, j-1)` by appending `a_i`
/// and `b_j`. Equal words merge as soon as they appear, so the cost follows the number of
/// distinct words rather than the `C(m+n, m)` interleavings. `None` on multiplicity overflow.
pub(crate) fn shuffle_counts(a: &Word, b: &Word) -> Option<Multiplicities> {
    let (la, lb) = (a.letters(), b.letters());
    if la.is_empty() || lb.is_empty() {
        let w = if la.is_empty() { b } else { a };
        return Some(Multiplicities::from([(w.clone(), 1)]));
    }
    let prefix = |letters: &[super::Letter]| Word::from_letters(letters.iter().map(|l| l.0));
    let mut row: Vec<Multiplicities> = (0..=lb.len())
        .map(|j| Multiplicities::from([(prefix(&lb[..j]), 1)]))
        .collect();
    for i in 1..=la.len() {
        let mut next = Vec::with_capacity(lb.len() + 1);
        next.push(Multiplicities::from([(prefix(&la[..i]), 1)]));
        for j in 1..=lb.len() {
            let mut cell = Multiplicities::with_capacity(row[j].len() + next[j - 1].len());
            for (src, letter) in [(&row[j], la[i - 1]), (&next[j - 1], lb[j - 1])] {
                for (w, n) in src {
                    let slot = cell.entry(w.append(letter)).or_insert(0);
                    *slot = slot.checked_add(*n)?;
                }
            }
            next.push(cell);
        }
        row = next;
    }
    row.pop()
}
