//! Exact shuffle-algebra kernel: words, polynomial coefficients, linear combinations of
//! iterated integrals, shuffle products and the dendriform product `▷`.

mod coeff;
mod lincomb;
pub mod shuffle;
mod word;

pub(crate) use coeff::fmt_signed_term;
pub use coeff::{Coefficient, Monomial, Symbol};
pub(crate) use lincomb::within;
pub use lincomb::{lincomb_mul, lincomb_pow, ncp, parse_term_line, truncate, LinComb, WordLimit};
pub use shuffle::{shuffle_iterative, shuffle_recursive, ShuffleAlgorithm};
pub use word::{append, Letter, Word};
