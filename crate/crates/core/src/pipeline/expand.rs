//! Monomial expansion and Q substitution.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::algebra::{within, Coefficient, LinComb, WordLimit};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::QTable;

/// Splits `e` into monomials whose sum is `e`, dropping those longer than `limit`.
///
/// Each step rewrites only the shallowest `Sum` or `Pow` and pushes the partial results back
/// on a stack, so at most one record per tree level is pending.
pub fn expand_record(
    e: Expr,
    limit: WordLimit,
    mut emit: impl FnMut(Expr) -> Result<()>,
) -> Result<()> {
    let mut pending = vec![e];
    while let Some(e) = pending.pop() {
        if !within(limit, e.word_length()) {
            continue;
        }
        match rewrite_shallowest(&e) {
            None => emit(e)?,
            Some(parts) => pending.extend(parts.into_iter().rev()),
        }
    }
    Ok(())
}

/// Path (child indices) to the first `Sum`/`Pow` in breadth-first order.
fn shallowest(e: &Expr) -> Option<Vec<usize>> {
    let mut queue = std::collections::VecDeque::from([(e, Vec::new())]);
    while let Some((node, path)) = queue.pop_front() {
        let children: Vec<&Expr> = match node {
            Expr::Sum(_) | Expr::Pow(..) => return Some(path),
            Expr::One | Expr::Q(_) | Expr::J(..) => continue,
            Expr::Prod(c) => c.iter().collect(),
            Expr::Ncp(l, r) => vec![l, r],
        };
        for (i, c) in children.into_iter().enumerate() {
            let mut p = path.clone();
            p.push(i);
            queue.push_back((c, p));
        }
    }
    None
}

fn node_at<'a>(e: &'a Expr, path: &[usize]) -> &'a Expr {
    path.iter().fold(e, |node, &i| match node {
        Expr::Prod(c) | Expr::Sum(c) => &c[i],
        Expr::Pow(b, _) => b,
        Expr::Ncp(l, r) => {
            if i == 0 {
                l
            } else {
                r
            }
        }
        _ => unreachable!("path leads through a leaf"),
    })
}

/// Copy of `e` with the node at `path` replaced; products stay flat.
fn replace_at(e: &Expr, path: &[usize], new: Expr) -> Expr {
    let Some((&i, rest)) = path.split_first() else {
        return new;
    };
    match e {
        Expr::Prod(c) => {
            let mut children = c.clone();
            children[i] = replace_at(&c[i], rest, new);
            Expr::prod(children)
        }
        Expr::Sum(c) => {
            let mut children = c.clone();
            children[i] = replace_at(&c[i], rest, new);
            Expr::Sum(children)
        }
        Expr::Pow(b, k) => Expr::Pow(Box::new(replace_at(b, rest, new)), *k),
        Expr::Ncp(l, r) if i == 0 => Expr::ncp(replace_at(l, rest, new), (**r).clone()),
        Expr::Ncp(l, r) => Expr::ncp((**l).clone(), replace_at(r, rest, new)),
        _ => unreachable!("path leads through a leaf"),
    }
}

fn rewrite_shallowest(e: &Expr) -> Option<Vec<Expr>> {
    let path = shallowest(e)?;
    let alternatives = match node_at(e, &path) {
        Expr::Sum(children) => children.clone(),
        Expr::Pow(base, k) => match &**base {
            Expr::Sum(children) => multinomial_terms(children, *k),
            other => vec![Expr::prod(vec![other.clone(); *k as usize])],
        },
        _ => unreachable!(),
    };
    Some(
        alternatives
            .into_iter()
            .map(|alt| replace_at(e, &path, alt))
            .collect(),
    )
}

/// `(x_1 + … + x_n)^k` as one product per multiset of summands, each carrying its multinomial
/// coefficient as a scalar factor.
fn multinomial_terms(children: &[Expr], k: u32) -> Vec<Expr> {
    let mut out = Vec::new();
    let mut choice = Vec::with_capacity(k as usize);
    multisets(children.len(), k as usize, 0, &mut choice, &mut |idx| {
        let mut factors = Vec::with_capacity(idx.len() + 1);
        let m = multinomial(idx);
        if m != BigInt::from(1) {
            factors.push(Expr::scalar(Coefficient::constant(
                BigRational::from_integer(m),
            )));
        }
        factors.extend(idx.iter().map(|&i| children[i].clone()));
        out.push(Expr::prod(factors));
    });
    out
}

fn multisets(n: usize, k: usize, from: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if acc.len() == k {
        return f(acc);
    }
    for i in from..n {
        acc.push(i);
        multisets(n, k, i, acc, f);
        acc.pop();
    }
}

/// `k! / ∏ m_j!` for the multiplicities of a sorted index list.
fn multinomial(sorted: &[usize]) -> BigInt {
    let fact = |n: usize| (1..=n).fold(BigInt::from(1), |a, i| a * BigInt::from(i));
    let mut m = fact(sorted.len());
    for run in sorted.chunk_by(|a, b| a == b) {
        m /= fact(run.len());
    }
    m
}

/// The Q value as an expression: a single atom or a sum of single-letter atoms.
pub(crate) fn q_value(table: &QTable, k: u32) -> Result<Option<Expr>> {
    let value: &LinComb = table.get(k as usize).ok_or(Error::MissingQ(k))?;
    if value.is_zero() {
        return Ok(None);
    }
    Ok(Some(Expr::sum(
        value
            .iter()
            .map(|(w, c)| Expr::j(c.clone(), w.clone()))
            .collect(),
    )))
}

/// Replaces every `Q<k>`; `None` when some `Q<k>` is zero and the record vanishes.
pub fn substitute_record(e: &Expr, table: &QTable) -> Result<Option<Expr>> {
    Ok(Some(match e {
        Expr::Q(k) => match q_value(table, *k)? {
            Some(v) => v,
            None => return Ok(None),
        },
        Expr::One | Expr::J(..) => e.clone(),
        Expr::Sum(c) | Expr::Prod(c) => {
            let mut out = Vec::with_capacity(c.len());
            for child in c {
                match substitute_record(child, table)? {
                    Some(v) => out.push(v),
                    None if matches!(e, Expr::Prod(_)) => return Ok(None),
                    None => {}
                }
            }
            match e {
                Expr::Prod(_) => Expr::prod(out),
                _ if out.is_empty() => return Ok(None),
                _ => Expr::sum(out),
            }
        }
        Expr::Pow(b, k) => match substitute_record(b, table)? {
            Some(v) => Expr::pow(v, *k),
            None => return Ok(None),
        },
        Expr::Ncp(l, r) => {
            let (Some(l), Some(r)) = (substitute_record(l, table)?, substitute_record(r, table)?)
            else {
                return Ok(None);
            };
            Expr::ncp(l, r)
        }
    }))
}
