//! Evaluation of `·` and `▷` on J-monomials.
//!
//! All atom coefficients of a monomial multiply into one overall factor, so the word tree is
//! evaluated with plain integer multiplicities.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::algebra::shuffle::shuffle_counts;
use crate::algebra::{within, Coefficient, Word, WordLimit};
use crate::error::{Error, Result};
use crate::expr::Expr;

type Counts = HashMap<Word, u128>;

/// Counts the terms held by all live intermediate results of one worker.
#[derive(Debug)]
pub struct TermGauge {
    cap: usize,
    live: usize,
    peak: usize,
}

/// The gauge ran past its cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapExceeded;

impl TermGauge {
    pub fn new(cap: usize) -> Self {
        TermGauge {
            cap,
            live: 0,
            peak: 0,
        }
    }

    fn grow(&mut self) -> Result<(), CapExceeded> {
        if self.live >= self.cap {
            return Err(CapExceeded);
        }
        self.live += 1;
        self.peak = self.peak.max(self.live);
        Ok(())
    }

    fn release(&mut self, counts: Counts) {
        self.live -= counts.len();
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn live(&self) -> usize {
        self.live
    }
}

#[derive(Debug)]
pub enum InstantiateError {
    Cap,
    Overflow,
    Shape(&'static str),
}

impl From<CapExceeded> for InstantiateError {
    fn from(_: CapExceeded) -> Self {
        InstantiateError::Cap
    }
}

fn add(out: &mut Counts, w: Word, n: u128, gauge: &mut TermGauge) -> Result<(), InstantiateError> {
    match out.entry(w) {
        Entry::Occupied(mut e) => {
            *e.get_mut() = e.get().checked_add(n).ok_or(InstantiateError::Overflow)?;
        }
        Entry::Vacant(e) => {
            gauge.grow()?;
            e.insert(n);
        }
    }
    Ok(())
}

fn single(w: &Word, limit: WordLimit, gauge: &mut TermGauge) -> Result<Counts, InstantiateError> {
    let mut out = Counts::new();
    if within(limit, w.len()) {
        add(&mut out, w.clone(), 1, gauge)?;
    }
    Ok(out)
}

fn product(
    x: &Counts,
    y: &Counts,
    limit: WordLimit,
    gauge: &mut TermGauge,
) -> Result<Counts, InstantiateError> {
    let mut out = Counts::new();
    for (a, m) in x {
        for (b, n) in y {
            if !within(limit, a.len() + b.len()) {
                continue;
            }
            let weight = m.checked_mul(*n).ok_or(InstantiateError::Overflow)?;
            for (w, k) in shuffle_counts(a, b).ok_or(InstantiateError::Overflow)? {
                let k = k.checked_mul(weight).ok_or(InstantiateError::Overflow)?;
                add(&mut out, w, k, gauge)?;
            }
        }
    }
    Ok(out)
}

/// `x ▷ y`: shuffle with `y` minus its last letter, then append that letter.
fn dendriform(
    x: &Counts,
    y: &Counts,
    limit: WordLimit,
    gauge: &mut TermGauge,
) -> Result<Counts, InstantiateError> {
    let mut out = Counts::new();
    for (b, n) in y {
        let Some((head, last)) = b.split_last() else {
            continue;
        };
        for (a, m) in x {
            if !within(limit, a.len() + b.len()) {
                continue;
            }
            let weight = m.checked_mul(*n).ok_or(InstantiateError::Overflow)?;
            for (mut w, k) in shuffle_counts(a, &head).ok_or(InstantiateError::Overflow)? {
                w.push(last);
                let k = k.checked_mul(weight).ok_or(InstantiateError::Overflow)?;
                add(&mut out, w, k, gauge)?;
            }
        }
    }
    Ok(out)
}

fn eval(e: &Expr, limit: WordLimit, gauge: &mut TermGauge) -> Result<Counts, InstantiateError> {
    match e {
        Expr::One => single(&Word::empty(), limit, gauge),
        Expr::J(_, w) => single(w, limit, gauge),
        Expr::Prod(children) => {
            let mut acc = single(&Word::empty(), limit, gauge)?;
            for c in children {
                let factor = eval(c, limit, gauge)?;
                let next = product(&acc, &factor, limit, gauge)?;
                gauge.release(acc);
                gauge.release(factor);
                acc = next;
            }
            Ok(acc)
        }
        Expr::Ncp(l, r) => {
            let left = eval(l, limit, gauge)?;
            let right = eval(r, limit, gauge)?;
            let out = dendriform(&left, &right, limit, gauge)?;
            gauge.release(left);
            gauge.release(right);
            Ok(out)
        }
        Expr::Q(_) => Err(InstantiateError::Shape("unsubstituted Q atom")),
        Expr::Sum(_) => Err(InstantiateError::Shape("unexpanded sum")),
        Expr::Pow(..) => Err(InstantiateError::Shape("unexpanded power")),
    }
}

fn coefficient(e: &Expr) -> Coefficient {
    match e {
        Expr::J(c, _) => c.clone(),
        Expr::Prod(children) | Expr::Sum(children) => children
            .iter()
            .fold(Coefficient::one(), |acc, c| &acc * &coefficient(c)),
        Expr::Ncp(l, r) => &coefficient(l) * &coefficient(r),
        Expr::Pow(b, k) => coefficient(b).pow(*k),
        Expr::One | Expr::Q(_) => Coefficient::one(),
    }
}

/// Terms of one J-monomial in canonical word order. The gauge is back to its starting level
/// afterwards, except on error.
pub fn instantiate_record(
    e: &Expr,
    limit: WordLimit,
    gauge: &mut TermGauge,
) -> Result<Vec<(Word, Coefficient)>, InstantiateError> {
    let factor = coefficient(e);
    if factor.is_zero() {
        // still reject malformed records
        let counts = eval(e, Some(0), gauge)?;
        gauge.release(counts);
        return Ok(Vec::new());
    }
    let counts = eval(e, limit, gauge)?;
    let mut terms: Vec<(Word, u128)> = counts.iter().map(|(w, n)| (w.clone(), *n)).collect();
    gauge.release(counts);
    terms.sort_unstable();
    Ok(terms
        .into_iter()
        .map(|(w, n)| (w, factor.scale_int(n)))
        .collect())
}

/// Wraps [`InstantiateError`] with the stage and record position.
pub(crate) fn record_error(err: InstantiateError, stage: u32, record: usize, cap: usize) -> Error {
    match err {
        InstantiateError::Cap => Error::TermCapExceeded { stage, record, cap },
        InstantiateError::Overflow => Error::Overflow,
        InstantiateError::Shape(message) => Error::BadRecord {
            stage,
            record,
            message: message.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LinComb;

    fn terms(e: &str, limit: WordLimit) -> LinComb {
        let mut g = TermGauge::new(usize::MAX);
        let mut out = LinComb::zero();
        for (w, c) in instantiate_record(&e.parse().unwrap(), limit, &mut g).unwrap() {
            out.add_term(w, &c);
        }
        assert_eq!(g.live(), 0);
        out
    }

    fn lc(s: &str) -> LinComb {
        s.parse().unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(terms("(> a*J[0] -a*J[0])", None), lc("-a^2 ; 0,0"));
        assert_eq!(
            terms("(> (* a*J[0] a*J[0]) b*J[1])", None),
            lc("2*a^2*b ; 0,0,1")
        );
        assert_eq!(terms("(> J[] b*J[1])", None), lc("b ; 1"));
        assert_eq!(terms("(> 1 b*J[1])", None), lc("b ; 1"));
        assert!(terms("(> a*J[0] J[])", None).is_zero());
        assert_eq!(terms("(* 3*J[] J[0])", None), lc("3 ; 0"));
    }

    #[test]
    fn general_right_operand() {
        // J^(1) ▷ J^(2,3) = J^(1,2,3) + J^(2,1,3)
        assert_eq!(terms("(> J[1] J[2,3])", None), lc("1 ; 1,2,3\n1 ; 2,1,3"));
        assert_eq!(terms("(* J[0,1] J[1,1])", Some(3)), LinComb::zero());
    }

    #[test]
    fn cap_is_enforced() {
        let e: Expr = "(* J[0] J[1] J[2] J[3])".parse().unwrap();
        let mut g = TermGauge::new(10);
        assert!(matches!(
            instantiate_record(&e, None, &mut g),
            Err(InstantiateError::Cap)
        ));
        let mut g = TermGauge::new(1000);
        assert_eq!(instantiate_record(&e, None, &mut g).unwrap().len(), 24);
        assert!(g.peak() >= 24 && g.peak() <= 1000);
    }

    #[test]
    fn malformed_records() {
        let mut g = TermGauge::new(100);
        for bad in [
            "(> Q0 J[1])",
            "(+ J[0] J[1])",
            "(^ J[0] 2)",
            "(* 0*J[0] Q1)",
        ] {
            assert!(matches!(
                instantiate_record(&bad.parse().unwrap(), None, &mut g),
                Err(InstantiateError::Shape(_))
            ));
        }
    }
}
