//! Operator pencils: one operator on the density algebra restricting to a
//! family of weight-λ operators, and the canonical self-adjoint pencil
//! through a given second-order operator.
//!
//! A self-adjoint operator in the canonical form of
//! [`build_canonical`](crate::operators::build_canonical) with no constant
//! term is determined uniquely by its restriction to a single weight
//! λ₀ ∉ {0, ½, 1}; [`canonical_pencil`] inverts that restriction in closed
//! form. Lie derivatives of densities arise as the divergenceless lifts of
//! vector fields and generate the classical example of such a pencil.

use crate::expr::{ExprError, Expression};
use crate::operators::{
    build_canonical, principal_symbol, DiffOperator, OpKey, OperatorError, SymbolTriple,
};
use crate::rational::Rational;
use thiserror::Error;

/// Errors from pencil construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PencilError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("weight {0} is singular: the reconstruction needs λ ∉ {{0, 1/2, 1}}")]
    SingularWeight(Rational),
    #[error("expected a weight-λ operator (order ≤ 2, no ŵ): {0}")]
    NotWeightOperator(String),
    #[error("vector fields have mismatched dimensions {0} and {1}")]
    DimMismatch(usize, usize),
    #[error("a vector field needs at least one component")]
    Empty,
}

/// A vector field `X = Xⁱ(x)∂ᵢ` on the base chart.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Expression>,
}

impl VectorField {
    pub fn new(components: Vec<Expression>) -> Result<Self, PencilError> {
        if components.is_empty() {
            return Err(PencilError::Empty);
        }
        Ok(VectorField { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    /// Lie bracket `[X, Y]ⁱ = Xᵏ∂ₖYⁱ − Yᵏ∂ₖXⁱ`.
    pub fn commutator(&self, other: &VectorField) -> Result<VectorField, PencilError> {
        let n = self.dim();
        if other.dim() != n {
            return Err(PencilError::DimMismatch(n, other.dim()));
        }
        let mut components = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Expression::zero();
            for k in 0..n {
                acc = &acc + &(&self.components[k] * &other.components[i].diff(k));
                acc = &acc - &(&other.components[k] * &self.components[i].diff(k));
            }
            components.push(acc);
        }
        VectorField::new(components)
    }

    /// The Lie derivative of densities along `X`, as an operator on the
    /// algebra: `L̂_X = Xⁱ∂ᵢ + ŵ·(∂ᵢXⁱ)`. It is the unique divergenceless
    /// (equivalently, anti-self-adjoint) lift of `X`.
    pub fn lie_lift(&self) -> DiffOperator {
        let n = self.dim();
        let mut op = DiffOperator::zero(n);
        let mut div = Expression::zero();
        for (i, x) in self.components.iter().enumerate() {
            let mut alpha = vec![0; n];
            alpha[i] = 1;
            op.add_term(OpKey::new(alpha, 0), x.clone());
            div = &div + &x.diff(i);
        }
        op.add_term(OpKey::new(vec![0; n], 1), div);
        op
    }

    /// The horizontal lift through a connection `γ`:
    /// `X̂ = Xⁱ∂ᵢ + γᵢXⁱ·ŵ`.
    pub fn horizontal_lift(&self, gamma: &[Expression]) -> Result<DiffOperator, PencilError> {
        let n = self.dim();
        if gamma.len() != n {
            return Err(PencilError::DimMismatch(n, gamma.len()));
        }
        let mut op = DiffOperator::zero(n);
        let mut vertical = Expression::zero();
        for (i, x) in self.components.iter().enumerate() {
            let mut alpha = vec![0; n];
            alpha[i] = 1;
            op.add_term(OpKey::new(alpha, 0), x.clone());
            vertical = &vertical + &(&gamma[i] * x);
        }
        op.add_term(OpKey::new(vec![0; n], 1), vertical);
        Ok(op)
    }
}

/// A second-order operator acting on densities of one fixed weight: the
/// restriction `Δ_{λ₀} = A^{ik}∂ᵢ∂ₖ + Aⁱ∂ᵢ + A` of a pencil at a regular
/// weight λ₀ ∉ {0, ½, 1}, and the input of [`canonical_pencil`].
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaOperator {
    op: DiffOperator,
    weight: Rational,
}

impl LambdaOperator {
    /// Validates that `op` has order ≤ 2 with no ŵ-powers and that the
    /// weight is regular for the reconstruction.
    pub fn new(op: DiffOperator, weight: Rational) -> Result<Self, PencilError> {
        check_regular_weight(&weight)?;
        weight_operator_parts(&op)?;
        Ok(LambdaOperator { op, weight })
    }

    pub fn op(&self) -> &DiffOperator {
        &self.op
    }

    pub fn weight(&self) -> &Rational {
        &self.weight
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// Splits a weight-λ operator (order ≤ 2, no ŵ) into its parts
/// `Δ = A^{ik}∂ᵢ∂ₖ + Aⁱ∂ᵢ + A` with `A^{ik}` symmetric.
fn weight_operator_parts(
    a: &DiffOperator,
) -> Result<(Vec<Vec<Expression>>, Vec<Expression>, Expression), PencilError> {
    if a.w_degree() != 0 {
        return Err(PencilError::NotWeightOperator(format!(
            "ŵ-degree {}",
            a.w_degree()
        )));
    }
    if a.order() > 2 {
        return Err(PencilError::NotWeightOperator(format!(
            "order {}",
            a.order()
        )));
    }
    let n = a.dim();
    let upper = principal_symbol(a)?;
    let mut first = vec![Expression::zero(); n];
    let mut scalar = Expression::zero();
    for (key, coeff) in a.terms() {
        match key.order() {
            1 => {
                let i = key.alpha.iter().position(|&v| v == 1).unwrap();
                first[i] = coeff.clone();
            }
            0 => scalar = coeff.clone(),
            _ => {}
        }
    }
    Ok((upper, first, scalar))
}

fn check_regular_weight(lambda0: &Rational) -> Result<(), PencilError> {
    if lambda0.is_zero() || lambda0.is_one() || *lambda0 == Rational::new(1, 2) {
        return Err(PencilError::SingularWeight(lambda0.clone()));
    }
    Ok(())
}

/// The unique normalized self-adjoint pencil through a weight-λ₀ operator.
///
/// Given `Δ_{λ₀} = A^{ik}∂ᵢ∂ₖ + Aⁱ∂ᵢ + A` acting on densities of weight
/// λ₀ ∉ {0, ½, 1}, returns the canonical self-adjoint operator on the whole
/// algebra whose weight-λ₀ restriction is `Δ_{λ₀}`, built from
///
/// ```text
/// Bⁱ = (Aⁱ − ∂ₖA^{ki}) / (2λ₀ − 1)
/// C  = A / (λ₀(λ₀−1)) − (∂ᵢAⁱ − ∂ᵢ∂ₖA^{ki}) / ((λ₀−1)(2λ₀−1))
/// ```
pub fn canonical_pencil(l: &LambdaOperator) -> DiffOperator {
    let lambda0 = l.weight();
    let (upper, first, scalar) =
        weight_operator_parts(l.op()).expect("validated at LambdaOperator construction");
    let n = l.dim();
    let one = Rational::one();
    let inv_2l1 = (&(lambda0 + lambda0) - &one).recip();
    let inv_l_l1 = (lambda0 * &(lambda0 - &one)).recip();
    let inv_l1_2l1 = (&(lambda0 - &one) * &(&(lambda0 + lambda0) - &one)).recip();

    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        // ∂ₖ A^{ki}
        let mut div_a = Expression::zero();
        for k in 0..n {
            div_a = &div_a + &upper[k][i].diff(k);
        }
        b.push((&first[i] - &div_a).scale(&inv_2l1));
    }
    // ∂ᵢAⁱ − ∂ᵢ∂ₖA^{ki}
    let mut double = Expression::zero();
    for i in 0..n {
        double = &double + &first[i].diff(i);
        for k in 0..n {
            double = &double - &upper[k][i].diff(k).diff(i);
        }
    }
    let c = &scalar.scale(&inv_l_l1) - &double.scale(&inv_l1_2l1);
    let triple = SymbolTriple::new(upper, b, c).expect("symmetry is preserved");
    build_canonical(&triple)
}

/// The classical pencil through `Δ_{λ₀} = L_X ∘ L_Y` on weight-λ₀
/// densities: `Δ̂ = L̂_X L̂_Y + ((ŵ−λ₀)/(2λ₀−1))·L̂_{[X,Y]}`.
pub fn example_pencil(
    x: &VectorField,
    y: &VectorField,
    lambda0: &Rational,
) -> Result<DiffOperator, PencilError> {
    check_regular_weight(lambda0)?;
    if x.dim() != y.dim() {
        return Err(PencilError::DimMismatch(x.dim(), y.dim()));
    }
    let lx = x.lie_lift();
    let ly = y.lie_lift();
    let lb = x.commutator(y)?.lie_lift();
    let n = x.dim();
    // (ŵ − λ₀) / (2λ₀ − 1) as an operator factor
    let inv = (&(lambda0 + lambda0) - &Rational::one()).recip();
    let shift = DiffOperator::weight(n)
        .sub(&DiffOperator::scalar(
            n,
            Expression::constant(lambda0.clone()),
        ))
        .scale(&inv);
    Ok(lx.compose(&ly).add(&shift.compose(&lb)))
}

/// Whether two pencils agree after restriction to the given weight.
pub fn pencil_agrees(
    a: &DiffOperator,
    b: &DiffOperator,
    lambda: &Rational,
    policy: crate::expr::EqualityPolicy,
) -> Result<bool, ExprError> {
    a.restrict(lambda).equal(&b.restrict(lambda), policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::EqualityPolicy;
    use crate::operators::commutator;

    fn x(i: usize) -> Expression {
        Expression::coord(i)
    }

    fn field(components: Vec<Expression>) -> VectorField {
        VectorField::new(components).unwrap()
    }

    fn pencil(a: &DiffOperator, lambda: &Rational) -> DiffOperator {
        canonical_pencil(&LambdaOperator::new(a.clone(), lambda.clone()).unwrap())
    }

    #[test]
    fn lie_lift_is_divergenceless_and_antiselfadjoint() {
        let v = field(vec![&x(0).sin() * &x(1), x(0).exp()]);
        let lift = v.lie_lift();
        assert!(lift.divergence().unwrap().is_zero());
        assert_eq!(lift.adjoint(), lift.neg());
    }

    #[test]
    fn first_order_adjoint_matches_closed_form() {
        // K̂ = Kⁱ∂ᵢ + K⁰ŵ has K̂* = −Kⁱ∂ᵢ − ∂ᵢKⁱ + K⁰(1−ŵ)
        let k1 = &x(0) * &x(1);
        let k0 = x(1).cos();
        let mut k = DiffOperator::zero(2);
        k.add_term(OpKey::new(vec![1, 0], 0), k1.clone());
        k.add_term(OpKey::new(vec![0, 0], 1), k0.clone());
        let mut expect = DiffOperator::zero(2);
        expect.add_term(OpKey::new(vec![1, 0], 0), -&k1);
        expect.add_term(OpKey::new(vec![0, 0], 0), &(-&k1.diff(0)) + &k0);
        expect.add_term(OpKey::new(vec![0, 0], 1), -&k0);
        assert_eq!(k.adjoint(), expect);
    }

    #[test]
    fn lie_lift_is_a_homomorphism() {
        // [L̂_X, L̂_Y] = L̂_{[X,Y]} exactly
        let a = field(vec![x(0).sin(), &x(0) * &x(1)]);
        let b = field(vec![x(1).exp(), x(0).cos()]);
        let lhs = commutator(&a.lie_lift(), &b.lie_lift());
        let rhs = a.commutator(&b).unwrap().lie_lift();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn horizontal_lift_carries_the_connection() {
        let v = field(vec![x(0).clone(), x(1).clone()]);
        let gamma = vec![x(1).clone(), Expression::zero()];
        let h = v.horizontal_lift(&gamma).unwrap();
        assert_eq!(
            h.coefficient(&OpKey::new(vec![0, 0], 1)),
            Some(&(&x(0) * &x(1)))
        );
        assert!(v.horizontal_lift(&[x(0).clone()]).is_err());
    }

    #[test]
    fn reconstruction_round_trips() {
        // a generic second-order weight operator in 2d
        let mut a = DiffOperator::zero(2);
        a.add_term(OpKey::new(vec![2, 0], 0), x(0).sin());
        a.add_term(OpKey::new(vec![1, 1], 0), &x(0) * &x(1));
        a.add_term(OpKey::new(vec![0, 2], 0), Expression::one());
        a.add_term(OpKey::new(vec![1, 0], 0), x(1).exp());
        a.add_term(OpKey::new(vec![0, 0], 0), x(0).cos());
        for lambda in [
            Rational::from_int(2),
            Rational::from_int(-1),
            Rational::new(3, 2),
        ] {
            let pencil = pencil(&a, &lambda);
            assert!(pencil.is_self_adjoint(EqualityPolicy::Symbolic).unwrap());
            // restriction recovers the operator exactly
            assert_eq!(pencil.restrict(&lambda), a);
            // and the pencil is normalized: no constant term
            assert_eq!(pencil.coefficient(&OpKey::identity(2)), None);
        }
    }

    #[test]
    fn reconstruction_is_unique_across_weights() {
        // reconstructing from a different weight's restriction returns the
        // same pencil — the uniqueness statement in operator form
        let mut a = DiffOperator::zero(1);
        a.add_term(OpKey::new(vec![2], 0), x(0).exp());
        a.add_term(OpKey::new(vec![1], 0), x(0).sin());
        a.add_term(OpKey::new(vec![0], 0), x(0).clone());
        let lambda = Rational::from_int(3);
        let pencil = pencil(&a, &lambda);
        for other in [Rational::from_int(-2), Rational::new(5, 2)] {
            let again = self::pencil(&pencil.restrict(&other), &other);
            assert_eq!(again, pencil);
        }
    }

    #[test]
    fn singular_weights_are_rejected() {
        let a = DiffOperator::scalar(1, x(0).clone());
        for bad in [Rational::zero(), Rational::new(1, 2), Rational::one()] {
            assert!(matches!(
                LambdaOperator::new(a.clone(), bad),
                Err(PencilError::SingularWeight(_))
            ));
        }
    }

    #[test]
    fn w_terms_are_rejected() {
        let w = DiffOperator::weight(1);
        assert!(matches!(
            LambdaOperator::new(w, Rational::from_int(2)),
            Err(PencilError::NotWeightOperator(_))
        ));
    }

    #[test]
    fn example_pencil_matches_reconstruction() {
        let a = field(vec![x(0).sin(), x(1).clone()]);
        let b = field(vec![x(1).exp(), &x(0) * &x(1)]);
        let lambda = Rational::from_int(2);
        let example = example_pencil(&a, &b, &lambda).unwrap();
        // restrict L̂_X L̂_Y to weight λ₀ and reconstruct
        let product = a.lie_lift().compose(&b.lie_lift());
        let reconstructed = pencil(&product.restrict(&lambda), &lambda);
        assert_eq!(example, reconstructed);
        assert!(example.is_self_adjoint(EqualityPolicy::Symbolic).unwrap());
    }

    #[test]
    fn example_pencil_equals_its_symmetrized_form() {
        let a = field(vec![&x(0) * &x(0), x(0).cos()]);
        let b = field(vec![x(1).sin(), x(0).clone()]);
        let lambda = Rational::new(-3, 2);
        let example = example_pencil(&a, &b, &lambda).unwrap();
        // ½(L̂_XL̂_Y + L̂_YL̂_X) + ½·(2ŵ−1)/(2λ₀−1)·[L̂_X, L̂_Y]
        let lx = a.lie_lift();
        let ly = b.lie_lift();
        let n = 2;
        let half = Rational::new(1, 2);
        let sym = lx.compose(&ly).add(&ly.compose(&lx)).scale(&half);
        let inv = (&(&lambda + &lambda) - &Rational::one()).recip();
        let factor = DiffOperator::weight(n)
            .scale(&Rational::from_int(2))
            .sub(&DiffOperator::identity(n))
            .scale(&(&half * &inv));
        let anti = factor.compose(&commutator(&lx, &ly));
        assert_eq!(example, sym.add(&anti));
    }
}
