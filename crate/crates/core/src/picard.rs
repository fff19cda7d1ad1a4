//! Picard iteration, directly on linear combinations and in the compact Q form.
//!
//! The Q form rewrites `Y(r+1) = Σ_i f_i(y0 + Y(r)) ▷ X^(i)` with the Taylor expansion of each
//! `f_i` around `y0`:
//!
//! ```text
//! Y(1)   = Q0
//! Y(r+1) = Q0 + Σ_{k=1..q} Y(r)^k ▷ Qk
//! ```
//!
//! The resulting expression depends only on the iteration count and the degree `q`.

use crate::algebra::{Letter, LinComb, WordLimit};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::{Model, QTable};

/// Compact Picard expression over the placeholders `Q0..Qq`.
pub type QExpr = Expr;

pub fn picard_q(iterations: usize, degree: usize) -> Result<QExpr> {
    if iterations < 1 {
        return Err(Error::NoIterations);
    }
    let mut y = Expr::q(0);
    for _ in 1..iterations {
        let mut terms = vec![Expr::q(0)];
        for k in 1..=degree {
            terms.push(Expr::ncp(Expr::pow(y.clone(), k as u32), Expr::q(k as u32)));
        }
        y = Expr::sum(terms);
    }
    Ok(y)
}

/// Expansion after `iterations` direct Picard steps starting from `Y(0) = 0`, with every
/// intermediate result truncated to `limit`.
pub fn picard_direct(model: &Model, iterations: usize, limit: WordLimit) -> LinComb {
    if limit == Some(0) {
        return LinComb::zero();
    }
    // the integrand loses one letter of budget to the appended driver
    let inner = limit.map(|l| l - 1);
    let mut y = LinComb::zero();
    for _ in 0..iterations {
        let mut state = y.clone();
        state += &LinComb::constant(model.y0().clone());
        let mut next = LinComb::zero();
        for (i, f) in model.vector_fields().iter().enumerate() {
            let mut integrand = LinComb::zero();
            for c in f.coeffs().iter().rev() {
                integrand = integrand.mul_truncated(&state, inner);
                integrand += &LinComb::constant(c.clone());
            }
            next += &integrand.append_letter(Letter(i as u16));
        }
        y = next;
    }
    y
}

/// Evaluates a Q expression against a Q-table entirely in memory.
pub fn qexpr_eval_in_memory(e: &QExpr, table: &QTable, limit: WordLimit) -> Result<LinComb> {
    Ok(match e {
        Expr::One => LinComb::one().truncate(limit),
        Expr::Q(k) => table
            .get(*k as usize)
            .ok_or(Error::MissingQ(*k))?
            .truncate(limit),
        Expr::J(c, w) => LinComb::term(c.clone(), w.clone()).truncate(limit),
        Expr::Sum(children) => {
            let mut acc = LinComb::zero();
            for c in children {
                acc += &qexpr_eval_in_memory(c, table, limit)?;
            }
            acc
        }
        Expr::Prod(children) => {
            let mut acc = LinComb::one().truncate(limit);
            for c in children {
                acc = acc.mul_truncated(&qexpr_eval_in_memory(c, table, limit)?, limit);
            }
            acc
        }
        Expr::Pow(base, k) => qexpr_eval_in_memory(base, table, limit)?.pow_truncated(*k, limit),
        Expr::Ncp(l, r) => {
            let left = qexpr_eval_in_memory(l, table, limit)?;
            let right = qexpr_eval_in_memory(r, table, limit)?;
            left.ncp_truncated(&right, limit)
        }
    })
}
