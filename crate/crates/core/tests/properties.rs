//! Property tests: the algebraic laws of the calculus on shrinkable random
//! inputs. Where the seeded suites certify fixed streams of cases, these
//! hunt for small counterexamples — coefficients stay tiny so a failure
//! shrinks to something readable.

use densops::densities::{density_pullback, ChartChange, Density};
use densops::operators::{DiffOperator, OpKey};
use densops::verify::{scalar_product, TorusValue};
use densops::{expr_equal, EqualityPolicy, Expression, Rational};
use proptest::prelude::*;

fn exprs_equal(a: &Expression, b: &Expression) -> bool {
    expr_equal(a, b, EqualityPolicy::Symbolic).unwrap()
}

/// `coeff · sin(x₁)^a cos(x₁)^b sin(x₂)^c …` — one bounded trig monomial.
fn trig_term(dim: usize) -> impl Strategy<Value = Expression> {
    (
        -4i64..=4,
        1i64..=3,
        prop::collection::vec((0u32..=2, 0u32..=2), dim),
    )
        .prop_map(|(num, den, powers)| {
            let mut e = Expression::constant(Rational::new(num, den));
            for (i, (a, b)) in powers.into_iter().enumerate() {
                let xi = Expression::coord(i);
                for _ in 0..a {
                    e = &e * &xi.sin();
                }
                for _ in 0..b {
                    e = &e * &xi.cos();
                }
            }
            e
        })
}

fn trig_poly(dim: usize) -> impl Strategy<Value = Expression> {
    prop::collection::vec(trig_term(dim), 1..=3).prop_map(|terms| {
        terms
            .into_iter()
            .fold(Expression::zero(), |acc, t| &acc + &t)
    })
}

/// A normal-ordered operator with up to three small terms.
fn operator(dim: usize) -> impl Strategy<Value = DiffOperator> {
    prop::collection::vec(
        (
            prop::collection::vec(0u32..=1, dim),
            0u32..=1,
            trig_poly(dim),
        ),
        1..=3,
    )
    .prop_map(move |terms| {
        let mut op = DiffOperator::zero(dim);
        for (alpha, wpow, coeff) in terms {
            op.add_term(OpKey::new(alpha, wpow), coeff);
        }
        op
    })
}

fn density(dim: usize) -> impl Strategy<Value = Density> {
    (
        prop::sample::select(vec![(0, 1), (1, 1), (1, 2), (3, 2), (-1, 1)]),
        trig_poly(dim),
    )
        .prop_map(|((n, d), coeff)| Density::term(Rational::new(n, d), coeff))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn differentiation_satisfies_the_product_rule(a in trig_poly(2), b in trig_poly(2)) {
        for i in 0..2 {
            let lhs = (&a * &b).diff(i);
            let rhs = &(&a.diff(i) * &b) + &(&a * &b.diff(i));
            prop_assert!(exprs_equal(&lhs, &rhs), "∂{}(ab) ≠ (∂a)b + a(∂b)", i + 1);
        }
    }

    #[test]
    fn partial_derivatives_commute(e in trig_poly(2)) {
        prop_assert!(exprs_equal(&e.diff(0).diff(1), &e.diff(1).diff(0)));
    }

    #[test]
    fn composition_is_associative(
        a in operator(2),
        b in operator(2),
        c in operator(2),
    ) {
        let lhs = a.compose(&b).compose(&c);
        let rhs = a.compose(&b.compose(&c));
        prop_assert!(
            lhs.equal(&rhs, EqualityPolicy::Symbolic).unwrap(),
            "(AB)C = {lhs} but A(BC) = {rhs}"
        );
    }

    #[test]
    fn adjoint_is_an_involutive_antihomomorphism(a in operator(2), b in operator(2)) {
        prop_assert!(a.adjoint().adjoint().equal(&a, EqualityPolicy::Symbolic).unwrap());
        let lhs = a.compose(&b).adjoint();
        let rhs = b.adjoint().compose(&a.adjoint());
        prop_assert!(lhs.equal(&rhs, EqualityPolicy::Symbolic).unwrap());
    }

    #[test]
    fn composition_acts_as_iterated_application(
        a in operator(2),
        b in operator(2),
        d in density(2),
    ) {
        let once = a.compose(&b).apply(&d);
        let twice = a.apply(&b.apply(&d));
        let diff = once.sub(&twice);
        for (w, coeff) in diff.terms() {
            prop_assert!(
                exprs_equal(coeff, &Expression::zero()),
                "(AB)s ≠ A(Bs) at weight {w:?}: {coeff}"
            );
        }
    }

    #[test]
    fn restriction_is_linear(a in operator(2), b in operator(2)) {
        let lambda = Rational::new(3, 2);
        let lhs = a.add(&b).restrict(&lambda);
        let rhs = a.restrict(&lambda).add(&b.restrict(&lambda));
        prop_assert!(lhs.equal(&rhs, EqualityPolicy::Symbolic).unwrap());
    }

    #[test]
    fn pullback_is_multiplicative(d1 in density(1), d2 in density(1)) {
        // x' = eˣ: a genuinely nonlinear but globally invertible chart change.
        let ch = ChartChange::new(
            vec![Expression::coord(0).exp()],
            vec![Expression::coord(0).log().unwrap()],
        )
        .unwrap();
        let lhs = density_pullback(&d1.mul(&d2), &ch).unwrap();
        let rhs = density_pullback(&d1, &ch)
            .unwrap()
            .mul(&density_pullback(&d2, &ch).unwrap());
        let diff = lhs.sub(&rhs);
        for (w, coeff) in diff.terms() {
            prop_assert!(
                exprs_equal(coeff, &Expression::zero()),
                "pullback not multiplicative at weight {w:?}: {coeff}"
            );
        }
    }

    #[test]
    fn scalar_product_is_symmetric(d1 in density(2), d2 in density(2)) {
        let lhs = scalar_product(&d1, &d2, 2).unwrap();
        let rhs = scalar_product(&d2, &d1, 2).unwrap();
        match (&lhs, &rhs) {
            (
                TorusValue::Exact { coeff: c1, pi_power: p1 },
                TorusValue::Exact { coeff: c2, pi_power: p2 },
            ) => prop_assert!((c1.is_zero() && c2.is_zero()) || (c1 == c2 && p1 == p2)),
            _ => prop_assert!((lhs.to_f64() - rhs.to_f64()).abs() < 1e-12),
        }
    }
}
