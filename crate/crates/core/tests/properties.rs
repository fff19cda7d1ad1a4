use proptest::prelude::*;
use stochexp::algebra::{lincomb_mul, lincomb_pow, ncp, truncate, ShuffleAlgorithm};
use stochexp::expectation::{expect_lincomb, expect_word};
use stochexp::expr::Expr;
use stochexp::model::{taylor_recenter, StatePolynomial};
use stochexp::{Coefficient, Letter, LinComb, Word};

const RECURSIVE: ShuffleAlgorithm = ShuffleAlgorithm::Recursive;
const ITERATIVE: ShuffleAlgorithm = ShuffleAlgorithm::Iterative;

fn word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u16..3, 0..=max).prop_map(Word::from_letters)
}

fn nonempty_word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u16..3, 1..=max).prop_map(Word::from_letters)
}

/// Sums of `n/d · a^i · b^j`.
fn coefficient() -> impl Strategy<Value = Coefficient> {
    prop::collection::vec((-9i64..=9, 1i64..=6, 0u32..3, 0u32..3), 0..4).prop_map(|terms| {
        let mut c = Coefficient::zero();
        for (n, d, i, j) in terms {
            let t = &(&Coefficient::ratio(n, d) * &Coefficient::symbol("a").pow(i))
                * &Coefficient::symbol("b").pow(j);
            c += &t;
        }
        c
    })
}

fn lincomb() -> impl Strategy<Value = LinComb> {
    prop::collection::vec((word(4), coefficient()), 0..5).prop_map(|terms| {
        let mut x = LinComb::zero();
        for (w, c) in terms {
            x.add_term(w, &c);
        }
        x
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::One),
        (0u32..4).prop_map(Expr::q),
        (coefficient(), word(3)).prop_map(|(c, w)| Expr::j(c, w)),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Sum),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Prod),
            (inner.clone(), 2u32..4).prop_map(|(b, k)| Expr::Pow(Box::new(b), k)),
            (inner.clone(), inner).prop_map(|(l, r)| Expr::ncp(l, r)),
        ]
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn total_mass(x: &LinComb) -> Coefficient {
    x.iter().fold(Coefficient::zero(), |acc, (_, c)| &acc + c)
}

proptest! {
    #[test]
    fn algorithms_agree(a in word(6), b in word(6)) {
        let r = RECURSIVE.shuffle(&a, &b);
        prop_assert_eq!(&r, &ITERATIVE.shuffle(&a, &b));
        prop_assert_eq!(&r, &lincomb_mul(&LinComb::word(a), &LinComb::word(b)));
    }

    #[test]
    fn shuffle_commutes(a in word(6), b in word(6)) {
        prop_assert_eq!(ITERATIVE.shuffle(&a, &b), ITERATIVE.shuffle(&b, &a));
    }

    #[test]
    fn product_is_associative(x in lincomb(), y in lincomb(), z in lincomb()) {
        prop_assert_eq!(
            lincomb_mul(&lincomb_mul(&x, &y), &z),
            lincomb_mul(&x, &lincomb_mul(&y, &z))
        );
    }

    #[test]
    fn product_is_bilinear(x in lincomb(), y in lincomb(), z in lincomb(), c in coefficient()) {
        prop_assert_eq!(
            lincomb_mul(&x.add(&y.scale(&c)), &z),
            lincomb_mul(&x, &z).add(&lincomb_mul(&y, &z).scale(&c))
        );
    }

    #[test]
    fn binomial_mass(a in word(7), b in word(7)) {
        let mass = total_mass(&RECURSIVE.shuffle(&a, &b));
        prop_assert_eq!(mass, Coefficient::one().scale_int(binomial(a.len() + b.len(), a.len())));
    }

    #[test]
    fn dendriform_halves_sum_to_shuffle(a in nonempty_word(6), b in nonempty_word(6)) {
        for algo in [RECURSIVE, ITERATIVE] {
            prop_assert_eq!(algo.shuffle(&a, &b), algo.ncp(&a, &b).add(&algo.ncp(&b, &a)));
        }
        prop_assert_eq!(
            ncp(&LinComb::word(a.clone()), &LinComb::word(b.clone())),
            ITERATIVE.ncp(&a, &b)
        );
    }

    #[test]
    fn ncp_with_a_single_letter_appends_it(a in word(8), l in 0u16..3) {
        let expected = LinComb::word(a.append(Letter(l)));
        prop_assert_eq!(ITERATIVE.ncp(&a, &Word::single(Letter(l))), expected.clone());
        prop_assert_eq!(RECURSIVE.ncp(&a, &Word::single(Letter(l))), expected);
        prop_assert!(ITERATIVE.ncp(&a, &Word::empty()).is_zero());
    }

    #[test]
    fn power_law(l in 0u16..3, k in 1u32..8) {
        let factorial: u128 = (1..=k as u128).product();
        prop_assert_eq!(
            lincomb_pow(&LinComb::word(Word::single(Letter(l))), k),
            LinComb::term(Coefficient::one().scale_int(factorial), Word::from_letters(vec![l; k as usize]))
        );
    }

    #[test]
    fn truncated_products_are_truncations(x in lincomb(), y in lincomb(), limit in 0usize..8) {
        let l = Some(limit);
        prop_assert_eq!(x.mul_truncated(&y, l), truncate(&lincomb_mul(&x, &y), l));
        prop_assert_eq!(x.ncp_truncated(&y, l), truncate(&ncp(&x, &y), l));
    }

    #[test]
    fn lincomb_text_round_trip(x in lincomb()) {
        prop_assert_eq!(x.to_text().parse::<LinComb>().unwrap(), x);
    }

    #[test]
    fn coefficient_text_round_trip(c in coefficient()) {
        prop_assert_eq!(c.to_string().parse::<Coefficient>().unwrap(), c);
    }

    #[test]
    fn expr_text_round_trip(e in expr()) {
        prop_assert_eq!(e.to_string().parse::<Expr>().unwrap(), e);
    }

    #[test]
    fn taylor_recentering_matches_derivatives(
        coeffs in prop::collection::vec(coefficient(), 1..5),
        y0 in coefficient(),
    ) {
        let p = StatePolynomial::new(coeffs);
        let g = taylor_recenter(&p, &y0);
        // g_k = P^(k)(y0) / k!
        let mut derivative = p.clone();
        let mut factorial = 1u128;
        for (k, gk) in g.iter().enumerate() {
            if k > 0 {
                factorial *= k as u128;
                derivative = derivative.derivative();
            }
            prop_assert_eq!(&gk.scale_int(factorial), &derivative.eval(&y0));
        }
        // Σ g_k h^k = P(y0 + h)
        let h = Coefficient::symbol("h");
        let mut sum = Coefficient::zero();
        for (k, gk) in g.iter().enumerate() {
            sum += &(gk * &h.pow(k as u32));
        }
        prop_assert_eq!(sum, p.eval(&(&y0 + &h)));
    }

    #[test]
    fn expectation_of_time_and_pairs(
        blocks in prop::collection::vec(prop_oneof![Just(0u16), 1u16..4], 0..6),
        stray in 1u16..4,
    ) {
        // each Brownian block is a pair of equal letters; time blocks are single letters
        let mut letters = Vec::new();
        let (mut pairs, mut times) = (0u32, 0u32);
        for b in &blocks {
            if *b == 0 {
                letters.push(0);
                times += 1;
            } else {
                letters.extend([*b, *b]);
                pairs += 1;
            }
        }
        let w = Word::from_letters(letters.clone());
        let e = expect_word(&w, Letter(0)).unwrap();
        prop_assert_eq!(e.t_power, pairs + times);
        let denominator = 2i64.pow(pairs) * (1..=(pairs + times) as i64).product::<i64>();
        prop_assert_eq!(
            expect_lincomb(&LinComb::word(w), Letter(0)).coefficient(pairs + times),
            Coefficient::ratio(1, denominator)
        );
        // a single unpaired Brownian letter at the end has zero mean
        letters.push(stray);
        prop_assert!(expect_word(&Word::from_letters(letters), Letter(0)).is_none());
    }

    #[test]
    fn expectation_is_linear(x in lincomb(), y in lincomb(), c in coefficient()) {
        let lhs = expect_lincomb(&x.add(&y.scale(&c)), Letter(0));
        let ex = expect_lincomb(&x, Letter(0));
        let ey = expect_lincomb(&y, Letter(0));
        for k in 0..=8 {
            prop_assert_eq!(lhs.coefficient(k), &ex.coefficient(k) + &(&ey.coefficient(k) * &c));
        }
    }
}
