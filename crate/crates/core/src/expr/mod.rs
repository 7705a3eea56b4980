//! Symbolic coefficient expressions over chart coordinates.
//!
//! [`Expression`] values are kept in a canonical normal form (a quotient of
//! expanded polynomials over coordinates and sin/cos/exp/log atoms), so
//! algebraic identities that hold as rational functions of those atoms are
//! decided exactly by subtraction. Identities that need transcendental
//! relations (like sin² + cos² = 1) are settled by seeded numeric sampling
//! through [`expr_equal`].

mod nf;
pub(crate) mod tree;

use crate::rational::Rational;
use nf::{Atom, Frac, NfError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Errors from building, differentiating, or evaluating expressions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    /// A coordinate or derivative index does not exist in the chart.
    #[error("index {index} out of range for a chart of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    /// Log of a non-positive value, fractional power of a negative value, …
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by the zero expression")]
    DivisionByZero,
    /// An evaluation point or substitution map is shorter than the
    /// coordinates the expression mentions.
    #[error("dimension mismatch: expression needs {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    /// An equality check could not collect enough admissible sample points.
    #[error("numeric comparison failed: {0}")]
    Numeric(String),
    /// A chart was built with an invalid coordinate name.
    #[error("invalid coordinate name {0:?}: {1}")]
    BadName(String, String),
}

impl From<NfError> for ExprError {
    fn from(e: NfError) -> Self {
        match e {
            NfError::DivisionByZero => ExprError::DivisionByZero,
            NfError::Domain(msg) => ExprError::Domain(msg),
            NfError::Dimension { expected, got } => ExprError::Dimension { expected, got },
        }
    }
}

/// A symbolic function of chart coordinates, closed under +, −, ·, rational
/// powers, partial derivatives, and composition with sin/cos/exp/log.
///
/// Structural equality (`==`) compares normal forms and is therefore a sound
/// but incomplete test for equality of functions; use [`expr_equal`] when
/// transcendental identities may be involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expression {
    frac: Frac,
}

impl Expression {
    pub fn zero() -> Self {
        Expression { frac: Frac::zero() }
    }

    pub fn one() -> Self {
        Expression { frac: Frac::one() }
    }

    pub fn constant(c: Rational) -> Self {
        Expression {
            frac: Frac::constant(c),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Expression::constant(Rational::from_int(n))
    }

    /// The coordinate function `x_{i+1}` (indices are 0-based in the API).
    pub fn coord(i: usize) -> Self {
        Expression {
            frac: Frac::coord(i),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.frac.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.frac.is_one()
    }

    /// `Some(c)` when the expression is the constant function `c`.
    pub fn as_constant(&self) -> Option<Rational> {
        self.frac.as_constant()
    }

    /// Largest coordinate index mentioned, if any.
    pub fn max_coord(&self) -> Option<usize> {
        self.frac.max_coord()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Expression {
            frac: self.frac.scale(c),
        }
    }

    /// Exact integer power; negative powers of zero are rejected.
    pub fn int_pow(&self, k: i64) -> Result<Self, ExprError> {
        Ok(Expression {
            frac: self.frac.pow(&Rational::from_int(k))?,
        })
    }

    /// Exact rational power (principal branch for fractional exponents).
    pub fn rat_pow(&self, r: &Rational) -> Result<Self, ExprError> {
        Ok(Expression {
            frac: self.frac.pow(r)?,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(Expression {
            frac: self.frac.div(&other.frac)?,
        })
    }

    pub fn recip(&self) -> Result<Self, ExprError> {
        Expression::one().div(self)
    }

    pub fn sin(&self) -> Self {
        Expression {
            frac: Frac::sin_of(&self.frac),
        }
    }

    pub fn cos(&self) -> Self {
        Expression {
            frac: Frac::cos_of(&self.frac),
        }
    }

    pub fn exp(&self) -> Self {
        Expression {
            frac: Frac::exp_of(&self.frac),
        }
    }

    pub fn log(&self) -> Result<Self, ExprError> {
        Ok(Expression {
            frac: Frac::log_of(&self.frac)?,
        })
    }

    /// Exact partial derivative along coordinate `i`. Differentiating along
    /// a coordinate the expression does not mention yields zero; range
    /// checking against a chart lives in [`Chart::diff`].
    pub fn diff(&self, i: usize) -> Self {
        Expression {
            frac: self.frac.diff(i),
        }
    }

    /// Substitutes `map[i]` for coordinate `i` in parallel.
    pub fn subst(&self, map: &[Expression]) -> Result<Self, ExprError> {
        let fracs: Vec<Frac> = map.iter().map(|e| e.frac.clone()).collect();
        Ok(Expression {
            frac: self.frac.subst(&fracs)?,
        })
    }

    /// Evaluates at a point (coordinate `i` is `point[i]`).
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        Ok(self.frac.eval(point)?)
    }

    /// Classifies the expression for torus integration.
    ///
    /// `Ok(Some(terms))` when it is a trig-polynomial — a rational
    /// combination of products of `sin(xᵢ)`/`cos(xᵢ)` powers; each returned
    /// term lists per-coordinate (sin, cos) exponent pairs with the term's
    /// coefficient. `Ok(None)` when the expression is bounded-looking but
    /// not exactly integrable (quadrature territory). `Err` when logarithms
    /// or fractional powers make it potentially undefined on the torus;
    /// vanishing denominators are left for evaluation to detect.
    pub fn trig_poly_terms(
        &self,
    ) -> Result<Option<Vec<(Vec<(usize, u64, u64)>, Rational)>>, String> {
        for poly in [&self.frac.num, &self.frac.den] {
            for (mono, _) in &poly.terms {
                for (atom, exp) in &mono.entries {
                    if !exp.is_integer() || exp.is_negative() {
                        return Err("fractional powers are not admitted on the torus".into());
                    }
                    match atom {
                        Atom::Log(_) => {
                            return Err("logarithms are not admitted on the torus".into())
                        }
                        Atom::Power(_) => {
                            return Err("fractional powers are not admitted on the torus".into())
                        }
                        _ => {}
                    }
                }
            }
        }
        if !self.frac.den.is_one() {
            return Ok(None);
        }
        let mut out = Vec::new();
        for (mono, coeff) in &self.frac.num.terms {
            let mut pairs: Vec<(usize, u64, u64)> = Vec::new();
            for (atom, exp) in &mono.entries {
                let e = exp.to_integer().expect("screened above") as u64;
                let (i, is_sin) = match atom {
                    Atom::Sin(f) => match f.as_coord() {
                        Some(i) => (i, true),
                        None => return Ok(None),
                    },
                    Atom::Cos(f) => match f.as_coord() {
                        Some(i) => (i, false),
                        None => return Ok(None),
                    },
                    _ => return Ok(None),
                };
                match pairs.iter_mut().find(|(j, _, _)| *j == i) {
                    Some(entry) => {
                        if is_sin {
                            entry.1 += e;
                        } else {
                            entry.2 += e;
                        }
                    }
                    None => pairs.push(if is_sin { (i, e, 0) } else { (i, 0, e) }),
                }
            }
            out.push((pairs, coeff.clone()));
        }
        Ok(Some(out))
    }

    pub(crate) fn frac(&self) -> &Frac {
        &self.frac
    }
}

impl std::ops::Add for &Expression {
    type Output = Expression;
    fn add(self, rhs: &Expression) -> Expression {
        Expression {
            frac: self.frac.add(&rhs.frac),
        }
    }
}

impl std::ops::Sub for &Expression {
    type Output = Expression;
    fn sub(self, rhs: &Expression) -> Expression {
        Expression {
            frac: self.frac.sub(&rhs.frac),
        }
    }
}

impl std::ops::Mul for &Expression {
    type Output = Expression;
    fn mul(self, rhs: &Expression) -> Expression {
        Expression {
            frac: self.frac.mul(&rhs.frac),
        }
    }
}

impl std::ops::Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression {
            frac: self.frac.neg(),
        }
    }
}

impl std::ops::Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        &self + &rhs
    }
}

impl std::ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        &self - &rhs
    }
}

impl std::ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        &self * &rhs
    }
}

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -&self
    }
}

impl std::fmt::Display for Expression {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = tree::build(&self.frac);
        f.write_str(&tree::render(&t, &|i| format!("x{}", i + 1)))
    }
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

/// Names reserved by the operator DSL; coordinate names must avoid them.
const RESERVED: &[&str] = &["w", "adj", "sin", "cos", "exp", "log", "t"];

/// A coordinate chart: a dimension plus coordinate names (default `x1…xn`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    names: Vec<String>,
}

impl Chart {
    /// Chart of dimension `dim` with default names `x1…xn`.
    pub fn new(dim: usize) -> Self {
        Chart {
            names: (1..=dim).map(|i| format!("x{i}")).collect(),
        }
    }

    /// Chart with custom coordinate names. Names must be unique identifiers
    /// and must not collide with DSL keywords or `d<k>` derivative symbols.
    pub fn with_names(names: Vec<String>) -> Result<Self, ExprError> {
        for (i, n) in names.iter().enumerate() {
            let mut chars = n.chars();
            let head_ok = chars
                .next()
                .map(|c| c.is_ascii_alphabetic() || c == '_')
                .unwrap_or(false);
            if !head_ok || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ExprError::BadName(
                    n.clone(),
                    "not an identifier".to_string(),
                ));
            }
            if RESERVED.contains(&n.as_str()) {
                return Err(ExprError::BadName(n.clone(), "reserved word".to_string()));
            }
            if n.len() > 1 && n.starts_with('d') && n[1..].chars().all(|c| c.is_ascii_digit()) {
                return Err(ExprError::BadName(
                    n.clone(),
                    "collides with a derivative symbol".to_string(),
                ));
            }
            if names[..i].contains(n) {
                return Err(ExprError::BadName(n.clone(), "duplicate name".to_string()));
            }
        }
        Ok(Chart { names })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Range-checked coordinate expression.
    pub fn coord(&self, i: usize) -> Result<Expression, ExprError> {
        self.check_index(i)?;
        Ok(Expression::coord(i))
    }

    /// Range-checked partial derivative.
    pub fn diff(&self, e: &Expression, i: usize) -> Result<Expression, ExprError> {
        self.check_index(i)?;
        Ok(e.diff(i))
    }

    pub fn check_index(&self, i: usize) -> Result<(), ExprError> {
        if i < self.dim() {
            Ok(())
        } else {
            Err(ExprError::IndexOutOfRange {
                index: i,
                dim: self.dim(),
            })
        }
    }

    /// Checks that an expression only mentions this chart's coordinates.
    pub fn check_expr(&self, e: &Expression) -> Result<(), ExprError> {
        match e.max_coord() {
            Some(m) if m >= self.dim() => Err(ExprError::IndexOutOfRange {
                index: m,
                dim: self.dim(),
            }),
            _ => Ok(()),
        }
    }

    /// Renders an expression with this chart's coordinate names.
    pub fn render(&self, e: &Expression) -> String {
        let t = tree::build(e.frac());
        tree::render(&t, &|i| {
            self.names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("x{}", i + 1))
        })
    }
}

// ---------------------------------------------------------------------------
// Equality
// ---------------------------------------------------------------------------

/// How [`expr_equal`] decides equality of two expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EqualityPolicy {
    /// Normal forms must subtract to zero (sound, incomplete).
    Symbolic,
    /// Seeded sampling at random points with the given tolerance.
    Numeric { tolerance: f64 },
    /// Symbolic first; on failure fall back to numeric sampling.
    SymbolicThenNumeric { tolerance: f64 },
}

/// Fixed seed for the sampling fallback so equality checks are reproducible.
const EQUALITY_SEED: u64 = 0x5eed_0dd5;

/// Number of informative sample points required by the numeric policy.
const EQUALITY_POINTS: usize = 16;

/// Deterministic sample points, uniform in `[-1, 1]^dim`.
pub(crate) fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim.max(1)).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Decides whether two expressions define the same function under the given
/// policy. The numeric fallback skips points where either side is outside
/// its domain and requires [`EQUALITY_POINTS`] informative points.
pub fn expr_equal(
    a: &Expression,
    b: &Expression,
    policy: EqualityPolicy,
) -> Result<bool, ExprError> {
    let symbolic = || (a - b).is_zero();
    match policy {
        EqualityPolicy::Symbolic => Ok(symbolic()),
        EqualityPolicy::Numeric { tolerance } => numeric_equal(a, b, tolerance),
        EqualityPolicy::SymbolicThenNumeric { tolerance } => {
            if symbolic() {
                Ok(true)
            } else {
                numeric_equal(a, b, tolerance)
            }
        }
    }
}

fn numeric_equal(a: &Expression, b: &Expression, tolerance: f64) -> Result<bool, ExprError> {
    let dim = a.max_coord().max(b.max_coord()).map_or(1, |m| m + 1);
    let points = sample_points(dim, EQUALITY_POINTS * 4, EQUALITY_SEED);
    let mut informative = 0;
    for p in &points {
        let va = a.eval(p);
        let vb = b.eval(p);
        match (va, vb) {
            (Ok(x), Ok(y)) => {
                if !x.is_finite() || !y.is_finite() {
                    continue;
                }
                let scale = 1.0 + x.abs().max(y.abs());
                if (x - y).abs() > tolerance * scale {
                    return Ok(false);
                }
                informative += 1;
                if informative >= EQUALITY_POINTS {
                    return Ok(true);
                }
            }
            // a point outside either domain carries no information
            _ => continue,
        }
    }
    if informative >= EQUALITY_POINTS / 4 {
        Ok(true)
    } else {
        Err(ExprError::Numeric(format!(
            "only {informative} admissible sample points in [-1,1]^{dim}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expression {
        Expression::coord(i)
    }

    #[test]
    fn arithmetic_normalizes() {
        // (x1 + 1)^2 - x1^2 - 2 x1 - 1 = 0 exactly
        let lhs = (&x(0) + &Expression::one()).int_pow(2).unwrap();
        let rhs = &(&x(0) * &x(0)) + &(&x(0).scale(&Rational::from_int(2)) + &Expression::one());
        assert_eq!(lhs, rhs);
        assert!((&lhs - &rhs).is_zero());
    }

    #[test]
    fn derivative_rules() {
        // product rule
        assert_eq!((&x(0) * &x(1)).diff(0), x(1));
        // chain rule through log and exp
        let f = (&x(0) + &x(1)).exp().log().unwrap();
        assert!(f.diff(0).is_one());
        // quotient: d/dx (1/x) = -1/x²
        let inv = x(0).recip().unwrap();
        let expect = -&x(0).int_pow(-2).unwrap();
        assert_eq!(inv.diff(0), expect);
    }

    #[test]
    fn trig_derivatives() {
        assert_eq!(x(0).sin().diff(0), x(0).cos());
        assert_eq!(x(0).cos().diff(0), -&x(0).sin());
        // mixed partials commute
        let f = &(&x(0) * &x(1)).sin() * &x(0).exp();
        assert_eq!(f.diff(0).diff(1), f.diff(1).diff(0));
    }

    #[test]
    fn equality_policies() {
        let sin2 = x(0).sin().int_pow(2).unwrap();
        let cos2 = x(0).cos().int_pow(2).unwrap();
        let one = Expression::one();
        let sum = &sin2 + &cos2;
        // Pythagorean identity is invisible symbolically…
        assert!(!expr_equal(&sum, &one, EqualityPolicy::Symbolic).unwrap());
        // …but the numeric fallback sees it
        assert!(expr_equal(
            &sum,
            &one,
            EqualityPolicy::SymbolicThenNumeric { tolerance: 1e-9 }
        )
        .unwrap());
        // and a genuinely different pair is rejected
        assert!(!expr_equal(
            &sin2,
            &one,
            EqualityPolicy::SymbolicThenNumeric { tolerance: 1e-9 }
        )
        .unwrap());
    }

    #[test]
    fn eval_and_finite_differences_agree() {
        // d/dx0 of sin(x0 x1) e^{x0} at a few points, h = 1e-6 central
        let f = &(&x(0) * &x(1)).sin() * &x(0).exp();
        let df = f.diff(0);
        for p in sample_points(2, 8, 7) {
            let h = 1e-6;
            let up = f.eval(&[p[0] + h, p[1]]).unwrap();
            let dn = f.eval(&[p[0] - h, p[1]]).unwrap();
            let fd = (up - dn) / (2.0 * h);
            let exact = df.eval(&p).unwrap();
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn chart_checks_indices_and_names() {
        let chart = Chart::new(2);
        assert!(chart.diff(&x(0), 1).is_ok());
        assert!(matches!(
            chart.diff(&x(0), 2),
            Err(ExprError::IndexOutOfRange { index: 2, dim: 2 })
        ));
        assert!(Chart::with_names(vec!["u".into(), "v".into()]).is_ok());
        assert!(Chart::with_names(vec!["w".into()]).is_err());
        assert!(Chart::with_names(vec!["d2".into()]).is_err());
        assert!(Chart::with_names(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn substitution_is_composition() {
        // f(x) = x², x -> sin(u): f = sin²(u); derivative matches chain rule
        let f = x(0).int_pow(2).unwrap();
        let g = f.subst(&[x(0).sin()]).unwrap();
        let dg = g.diff(0);
        let expect = &(&x(0).sin() * &x(0).cos()).scale(&Rational::from_int(2));
        assert!((&dg - expect).is_zero());
    }

    #[test]
    fn domain_errors_surface() {
        assert!(matches!(
            Expression::from_int(-2).log(),
            Err(ExprError::Domain(_))
        ));
        assert!(matches!(
            x(0).div(&Expression::zero()),
            Err(ExprError::DivisionByZero)
        ));
    }
}
