//! Truncated stochastic Taylor expansions of one-dimensional polynomial differential equations.
//!
//! An expansion is a linear combination of iterated integrals `J^w` of the drivers, with
//! coefficients that are exact polynomials in the model parameters. Expansions are produced
//! either by direct Picard iteration ([`picard::picard_direct`]) or from the compact
//! Q-expression form ([`picard::picard_q`]) pushed through the staged, out-of-core
//! [`pipeline`]. [`expectation`] evaluates exact expectations when the drivers are time and
//! independent Brownian motions, and [`mc`] provides a Monte-Carlo cross-check.

pub mod algebra;
pub mod error;
pub mod expectation;
pub mod expr;
pub mod mc;
pub mod model;
pub mod picard;
pub mod pipeline;

pub use algebra::{Coefficient, Letter, LinComb, Word, WordLimit};
pub use error::{Error, ParseError, Result};
