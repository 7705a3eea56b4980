//! Densities of rational weight and changes of coordinates.
//!
//! A density of weight λ looks like `s(x)·t^λ` in a chart, where the formal
//! generator `t` transforms as the coordinate volume element. General
//! elements of the density algebra are finite sums of such terms over
//! distinct rational weights; multiplication adds weights, and the weight
//! operator ŵ acts on a weight-λ term as multiplication by λ.

use crate::expr::{tree, Chart, ExprError, Expression};
use crate::rational::Rational;
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from density and chart-change constructions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("chart change must have {expected} component(s), got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("chart change is not invertible: {0}")]
    NotInvertible(String),
    #[error("jacobian determinant fails to stay positive: {0}")]
    DegenerateJacobian(String),
}

/// An element of the density algebra: a finite sum `Σ s_λ(x)·t^λ` with
/// distinct rational weights λ and nonzero coefficients `s_λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    terms: BTreeMap<Rational, Expression>,
}

impl Density {
    pub fn zero() -> Self {
        Density {
            terms: BTreeMap::new(),
        }
    }

    /// Single term `coeff·t^weight` (the zero density if `coeff` is 0).
    pub fn term(weight: Rational, coeff: Expression) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(weight, coeff);
        }
        Density { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Rational, Expression)>>(iter: I) -> Self {
        let mut d = Density::zero();
        for (w, c) in iter {
            d.add_term(w, c);
        }
        d
    }

    /// Adds `coeff·t^weight` in place, merging with an existing weight.
    pub fn add_term(&mut self, weight: Rational, coeff: Expression) {
        if coeff.is_zero() {
            return;
        }
        let slot = self
            .terms
            .entry(weight.clone())
            .or_insert_with(Expression::zero);
        *slot = &*slot + &coeff;
        if slot.is_zero() {
            self.terms.remove(&weight);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending weight order.
    pub fn terms(&self) -> impl Iterator<Item = (&Rational, &Expression)> {
        self.terms.iter()
    }

    pub fn weights(&self) -> Vec<Rational> {
        self.terms.keys().cloned().collect()
    }

    pub fn coefficient(&self, weight: &Rational) -> Option<&Expression> {
        self.terms.get(weight)
    }

    /// Largest coordinate index any coefficient mentions.
    pub fn max_coord(&self) -> Option<usize> {
        self.terms.values().filter_map(|e| e.max_coord()).max()
    }

    pub fn neg(&self) -> Self {
        Density {
            terms: self.terms.iter().map(|(w, c)| (w.clone(), -c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Multiplies every coefficient by a scalar function (weight 0).
    pub fn mul_expr(&self, f: &Expression) -> Self {
        Density::from_terms(self.terms.iter().map(|(w, c)| (w.clone(), c * f)))
    }

    /// Algebra product: weights add, coefficients multiply.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Density::zero();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                out.add_term(wa + wb, ca * cb);
            }
        }
        out
    }

    /// The weight operator ŵ = t·∂/∂t: multiplies a weight-λ term by λ.
    pub fn weight_op(&self) -> Self {
        Density::from_terms(self.terms.iter().map(|(w, c)| (w.clone(), c.scale(w))))
    }

    /// Coordinate derivative ∂ᵢ applied to every coefficient.
    pub fn diff(&self, i: usize) -> Self {
        Density::from_terms(self.terms.iter().map(|(w, c)| (w.clone(), c.diff(i))))
    }

    /// Evaluates all coefficients at a point, returning weight/value pairs.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<(Rational, f64)>, ExprError> {
        self.terms
            .iter()
            .map(|(w, c)| Ok((w.clone(), c.eval(point)?)))
            .collect()
    }

    /// Renders with the chart's coordinate names.
    pub fn render(&self, chart: &Chart) -> String {
        self.render_names(&|i| {
            if i < chart.dim() {
                chart.name(i).to_string()
            } else {
                format!("x{}", i + 1)
            }
        })
    }

    fn render_names(&self, names: &dyn Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (w, c)) in self.terms.iter().enumerate() {
            let (negative, factor) = tree::render_signed_factor(c.frac(), names);
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let t_part = if w.is_zero() {
                None
            } else if w.is_one() {
                Some("t".to_string())
            } else if w.is_integer() {
                Some(format!("t^{w}"))
            } else {
                Some(format!("t^({w})"))
            };
            match t_part {
                None => out.push_str(&factor),
                Some(t) => {
                    if factor == "1" {
                        out.push_str(&t);
                    } else {
                        out.push_str(&factor);
                        out.push('*');
                        out.push_str(&t);
                    }
                }
            }
        }
        out
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render_names(&|i| format!("x{}", i + 1)))
    }
}

// ---------------------------------------------------------------------------
// Chart changes
// ---------------------------------------------------------------------------

/// Sample count used when validating a chart change numerically.
const VALIDATION_POINTS: usize = 16;

/// Tolerance for the round-trip and Jacobian checks at validation points.
const VALIDATION_TOL: f64 = 1e-9;

/// An invertible, orientation-preserving change of coordinates `x ↦ x'`.
///
/// `forward[j]` expresses the new coordinate `x'_j` in old coordinates and
/// `inverse[i]` the old coordinate `x_i` in new ones. Construction verifies
/// numerically (at seeded sample points) that the pair really is a two-sided
/// inverse and that the Jacobian determinant stays positive; symbolic
/// inverses are supplied by the caller because inverting a map exactly is
/// not possible in general.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartChange {
    dim: usize,
    forward: Vec<Expression>,
    inverse: Vec<Expression>,
}

impl ChartChange {
    pub fn new(forward: Vec<Expression>, inverse: Vec<Expression>) -> Result<Self, DensityError> {
        let dim = forward.len();
        if dim == 0 || inverse.len() != dim {
            return Err(DensityError::ComponentCount {
                expected: dim.max(1),
                got: inverse.len(),
            });
        }
        let ch = ChartChange {
            dim,
            forward,
            inverse,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward(&self) -> &[Expression] {
        &self.forward
    }

    pub fn inverse(&self) -> &[Expression] {
        &self.inverse
    }

    fn validate(&self) -> Result<(), DensityError> {
        let points = crate::expr::sample_points(self.dim, VALIDATION_POINTS * 4, 0x41ec_7a2d);
        let det = self.jacobian_det();
        let mut checked = 0;
        for p in &points {
            // image of p under the forward map
            let mut image = Vec::with_capacity(self.dim);
            let mut ok = true;
            for f in &self.forward {
                match f.eval(p) {
                    Ok(v) if v.is_finite() => image.push(v),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            // two-sided inverse at this point
            for (i, g) in self.inverse.iter().enumerate() {
                match g.eval(&image) {
                    Ok(v) if v.is_finite() => {
                        if (v - p[i]).abs() > VALIDATION_TOL * (1.0 + p[i].abs()) {
                            return Err(DensityError::NotInvertible(format!(
                                "inverse(forward(x)) deviates by {:.3e} in component {} at x = {p:?}",
                                (v - p[i]).abs(),
                                i + 1,
                            )));
                        }
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            match det.eval(p) {
                Ok(v) if v.is_finite() => {
                    if v <= VALIDATION_TOL {
                        return Err(DensityError::DegenerateJacobian(format!(
                            "det J = {v:.3e} at x = {p:?}"
                        )));
                    }
                }
                _ => continue,
            }
            checked += 1;
            if checked >= VALIDATION_POINTS {
                break;
            }
        }
        if checked < VALIDATION_POINTS / 4 {
            return Err(DensityError::NotInvertible(format!(
                "only {checked} admissible validation points in [-1,1]^{}",
                self.dim
            )));
        }
        Ok(())
    }

    /// Jacobian of the forward map: entry `(j, i)` is ∂x'_j/∂x_i, expressed
    /// in old coordinates.
    pub fn jacobian(&self) -> Vec<Vec<Expression>> {
        self.forward
            .iter()
            .map(|f| (0..self.dim).map(|i| f.diff(i)).collect())
            .collect()
    }

    /// det(∂x'/∂x) in old coordinates.
    pub fn jacobian_det(&self) -> Expression {
        det(&self.jacobian())
    }

    /// Jacobian of the inverse map: entry `(i, j)` is ∂x_i/∂x'_j, expressed
    /// in new coordinates.
    pub fn inverse_jacobian(&self) -> Vec<Vec<Expression>> {
        self.inverse
            .iter()
            .map(|g| (0..self.dim).map(|j| g.diff(j)).collect())
            .collect()
    }

    /// Composition: apply `self` first, then `other` (so the result maps the
    /// original coordinates to `other`'s target coordinates).
    pub fn then(&self, other: &ChartChange) -> Result<ChartChange, DensityError> {
        if other.dim != self.dim {
            return Err(DensityError::ComponentCount {
                expected: self.dim,
                got: other.dim,
            });
        }
        let forward = other
            .forward
            .iter()
            .map(|f| f.subst(&self.forward))
            .collect::<Result<Vec<_>, _>>()?;
        let inverse = self
            .inverse
            .iter()
            .map(|g| g.subst(&other.inverse))
            .collect::<Result<Vec<_>, _>>()?;
        ChartChange::new(forward, inverse)
    }
}

/// Exact determinant by Laplace expansion (fine for the small dimensions a
/// chart calculus meets).
pub(crate) fn det(m: &[Vec<Expression>]) -> Expression {
    let n = m.len();
    match n {
        0 => Expression::one(),
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut acc = Expression::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expression>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = &m[0][j] * &det(&minor);
                if j % 2 == 0 {
                    acc = &acc + &term;
                } else {
                    acc = &acc - &term;
                }
            }
            acc
        }
    }
}

/// Pulls a density back along a chart change: a weight-λ term `s(x)·t^λ`
/// becomes `s(ψ(x'))·(det ∂x/∂x')^λ·t'^λ` in the new coordinates, where ψ is
/// the inverse map. Fractional weights use the positive branch, which the
/// orientation check at construction justifies.
pub fn density_pullback(d: &Density, ch: &ChartChange) -> Result<Density, DensityError> {
    // det(∂x/∂x') in new coordinates: J_forward substituted into the inverse
    // would need a matrix inverse, so differentiate the inverse map directly.
    let det_inv = det(&ch.inverse_jacobian());
    let mut out = Density::zero();
    for (w, c) in d.terms() {
        let moved = c.subst(ch.inverse())?;
        let factor = det_inv.rat_pow(w)?;
        out.add_term(w.clone(), &moved * &factor);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{expr_equal, EqualityPolicy};

    fn x(i: usize) -> Expression {
        Expression::coord(i)
    }

    fn w(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn weights_add_under_multiplication() {
        // (sin·t^{1/2})·(cos·t^{1/2}) = sin·cos·t
        let a = Density::term(w(1, 2), x(0).sin());
        let b = Density::term(w(1, 2), x(0).cos());
        let p = a.mul(&b);
        assert_eq!(p.weights(), vec![Rational::one()]);
        assert_eq!(
            p.coefficient(&Rational::one()).unwrap(),
            &(&x(0).sin() * &x(0).cos())
        );
    }

    #[test]
    fn weight_operator_is_grading() {
        let d = Density::from_terms([
            (w(0, 1), Expression::one()),
            (w(1, 2), x(0).clone()),
            (w(2, 1), x(1).clone()),
        ]);
        let wd = d.weight_op();
        // the weight-0 part is annihilated
        assert_eq!(wd.weights(), vec![w(1, 2), w(2, 1)]);
        assert_eq!(wd.coefficient(&w(1, 2)).unwrap(), &x(0).scale(&w(1, 2)));
        assert_eq!(wd.coefficient(&w(2, 1)).unwrap(), &x(1).scale(&w(2, 1)));
        // ŵ is a derivation of the density algebra
        let a = Density::term(w(1, 3), x(0).clone());
        let b = Density::term(w(1, 6), x(1).clone());
        let lhs = a.mul(&b).weight_op();
        let rhs = a.weight_op().mul(&b).add(&a.mul(&b.weight_op()));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn cancellation_removes_terms() {
        let a = Density::term(w(1, 2), x(0).clone());
        assert!(a.sub(&a).is_zero());
        let b = a.add(&Density::term(w(1, 2), -&x(0)));
        assert!(b.is_zero());
    }

    #[test]
    fn display_uses_t_notation() {
        let d = Density::from_terms([
            (w(1, 2), x(0).sin()),
            (w(0, 1), Expression::from_int(2)),
            (w(1, 1), -&Expression::one()),
        ]);
        assert_eq!(d.to_string(), "2 + sin(x1)*t^(1/2) - t");
    }

    #[test]
    fn chart_change_requires_an_inverse() {
        // x' = x + x³ with a deliberately wrong inverse
        let fwd = vec![&x(0) + &x(0).int_pow(3).unwrap()];
        let bad = ChartChange::new(fwd, vec![x(0).clone()]);
        assert!(matches!(bad, Err(DensityError::NotInvertible(_))));
    }

    #[test]
    fn exp_chart_change_validates() {
        // x' = e^x, x = log x'
        let ch = ChartChange::new(vec![x(0).exp()], vec![x(0).log().unwrap()]).unwrap();
        assert_eq!(ch.jacobian_det(), x(0).exp());
    }

    #[test]
    fn degenerate_jacobian_is_rejected() {
        // x' = x² is not orientation-preserving on [-1,1] (det J = 2x)
        let sq = ChartChange::new(
            vec![x(0).int_pow(2).unwrap()],
            vec![x(0).rat_pow(&w(1, 2)).unwrap()],
        );
        assert!(sq.is_err());
    }

    #[test]
    fn pullback_scales_by_det_power() {
        // x = 2x' (inverse of x' = x/2): |Dx| = 2|Dx'|, so t^λ ↦ 2^λ t^λ
        let ch = ChartChange::new(vec![x(0).scale(&w(1, 2))], vec![x(0).scale(&w(2, 1))]).unwrap();
        let d = Density::term(w(2, 1), Expression::one());
        let p = density_pullback(&d, &ch).unwrap();
        assert_eq!(p.coefficient(&w(2, 1)).unwrap(), &Expression::from_int(4));
        // weight 1/2 picks up √2: exact as a power atom, numerically √2
        let d = Density::term(w(1, 2), Expression::one());
        let p = density_pullback(&d, &ch).unwrap();
        let c = p.coefficient(&w(1, 2)).unwrap();
        let v = c.eval(&[0.3]).unwrap();
        assert!((v - 2.0_f64.sqrt()).abs() < 1e-12);
        // and its square folds back to the rational 2 exactly
        assert_eq!((c * c).as_constant(), Some(w(2, 1)));
    }

    #[test]
    fn pullback_is_functorial() {
        // two triangular volume-preserving maps in 2d, composed
        let a = ChartChange::new(
            vec![&x(0) + &x(1).int_pow(2).unwrap(), x(1).clone()],
            vec![&x(0) - &x(1).int_pow(2).unwrap(), x(1).clone()],
        )
        .unwrap();
        let b = ChartChange::new(
            vec![x(0).clone(), &x(1) + &x(0).sin()],
            vec![x(0).clone(), &x(1) - &x(0).sin()],
        )
        .unwrap();
        let ab = a.then(&b).unwrap();
        let d = Density::from_terms([(w(1, 2), x(0).clone()), (w(3, 1), x(1).sin())]);
        let two_step = density_pullback(&density_pullback(&d, &a).unwrap(), &b).unwrap();
        let one_step = density_pullback(&d, &ab).unwrap();
        assert_eq!(two_step, one_step);
    }

    #[test]
    fn pullback_with_exp_jacobian_is_exact() {
        // x' = e^x: det ∂x/∂x' = 1/x', and t^{1/2} ↦ x'^{-1/2} t^{1/2}
        let ch = ChartChange::new(vec![x(0).exp()], vec![x(0).log().unwrap()]).unwrap();
        let d = Density::term(w(1, 2), Expression::one());
        let p = density_pullback(&d, &ch).unwrap();
        let c = p.coefficient(&w(1, 2)).unwrap();
        let expect = x(0).rat_pow(&w(-1, 2)).unwrap();
        assert!(expr_equal(c, &expect, EqualityPolicy::Symbolic).unwrap());
    }
}
