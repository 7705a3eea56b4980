//! Connections and their geometry: γ from volume forms and metrics,
//! Levi-Civita Christoffel symbols, Kaluza–Klein extraction of a connection
//! from a second-order principal symbol, covariant combinations, projective
//! symbols Π, projective equivalence, and the Thomas lift to the extended
//! chart.
//!
//! Conventions: a connection on densities is a covector-like family
//! `γᵢ(x)`; Christoffel symbols `Γ^i_{km}` are symmetric in the lower pair;
//! the connection a Christoffel induces on densities is the negative trace
//! `γᵢ = −Γ^k_{ik}`. On the extended chart the coordinates are
//! `(x¹, …, xⁿ, x⁰)` with `x⁰ = log t`; extended indices here use slot `n`
//! for `x⁰`.

use crate::densities::{det, ChartChange};
use crate::expr::{expr_equal, sample_points, EqualityPolicy, ExprError, Expression};
use crate::operators::{DiffOperator, OpKey, OperatorError, SymbolTriple};
use crate::rational::Rational;
use thiserror::Error;

/// Seed for the sample-point validations in this module (positivity of
/// volume forms, nondegeneracy of symbols and metrics).
const GEOMETRY_SEED: u64 = 0x9e03_7a11;
const GEOMETRY_POINTS: usize = 64;
const GEOMETRY_TOL: f64 = 1e-9;
/// Minimum number of in-domain sample points for a numeric validation to
/// count as informative.
const MIN_INFORMATIVE: usize = 4;

/// Errors from geometric constructions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("expected {expected} components, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("symbols are not symmetric in the lower index pair at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("projective symbols have nonzero trace against lower index {0}")]
    NotTraceFree(usize),
    #[error("matrix product with the stated inverse is not the identity at entry ({0}, {1})")]
    NotInverse(usize, usize),
    #[error("volume form is not positive: {0}")]
    NotPositive(String),
    #[error(
        "principal symbol is degenerate (det S vanishes at sample points); \
         B lies in the range of S at the sampled points: {b_in_range}"
    )]
    DegenerateSymbol { b_in_range: bool },
    #[error("metric determinant vanishes at a sample point")]
    SingularMetric,
    #[error(
        "symbolic inversion is limited to dimension ≤ 3, got {0}; supply the inverse explicitly"
    )]
    TooLarge(usize),
    #[error("operator conjugation is implemented for order ≤ 2, got order {0}")]
    OrderTooHigh(u32),
    #[error("extended symbols violate the structural constants: {0}")]
    Structural(String),
    #[error("validation had too few informative sample points: {0}")]
    Numeric(String),
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A connection on densities: components `γᵢ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    components: Vec<Expression>,
}

impl Connection {
    pub fn new(components: Vec<Expression>) -> Result<Self, GeometryError> {
        if components.is_empty() {
            return Err(GeometryError::Shape {
                expected: 1,
                got: 0,
            });
        }
        Ok(Connection { components })
    }

    pub fn zero(dim: usize) -> Self {
        Connection {
            components: vec![Expression::zero(); dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expression {
        &self.components[i]
    }
}

/// Christoffel symbols `Γ^i_{km}` of a symmetric affine connection,
/// validated symmetric in the lower pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    entries: Vec<Vec<Vec<Expression>>>,
}

impl Christoffel {
    /// `entries[i][k][m]` is `Γ^i_{km}`; the lower pair must be exactly
    /// symmetric.
    pub fn new(entries: Vec<Vec<Vec<Expression>>>) -> Result<Self, GeometryError> {
        let dim = entries.len();
        if dim == 0 {
            return Err(GeometryError::Shape {
                expected: 1,
                got: 0,
            });
        }
        check_cube_shape(&entries, dim)?;
        check_lower_symmetry(&entries, dim)?;
        Ok(Christoffel { dim, entries })
    }

    pub fn zero(dim: usize) -> Self {
        Christoffel {
            dim,
            entries: vec![vec![vec![Expression::zero(); dim]; dim]; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, k: usize, m: usize) -> &Expression {
        &self.entries[i][k][m]
    }

    /// The connection on densities induced by these symbols:
    /// `γᵢ = −Γ^k_{ik}`.
    pub fn trace_connection(&self) -> Connection {
        let n = self.dim;
        let mut components = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Expression::zero();
            for k in 0..n {
                acc = &acc + &self.entries[k][i][k];
            }
            components.push(-&acc);
        }
        Connection { components }
    }
}

/// Projective connection symbols `Π^i_{km}`: symmetric in the lower pair and
/// exactly trace-free, the invariant of a projective class.
#[derive(Debug, Clone, PartialEq)]
pub struct PiSymbols {
    dim: usize,
    entries: Vec<Vec<Vec<Expression>>>,
}

impl PiSymbols {
    pub fn new(entries: Vec<Vec<Vec<Expression>>>) -> Result<Self, GeometryError> {
        let dim = entries.len();
        if dim == 0 {
            return Err(GeometryError::Shape {
                expected: 1,
                got: 0,
            });
        }
        check_cube_shape(&entries, dim)?;
        check_lower_symmetry(&entries, dim)?;
        for m in 0..dim {
            let mut trace = Expression::zero();
            for k in 0..dim {
                trace = &trace + &entries[k][k][m];
            }
            if !trace.is_zero() {
                return Err(GeometryError::NotTraceFree(m));
            }
        }
        Ok(PiSymbols { dim, entries })
    }

    pub fn zero(dim: usize) -> Self {
        PiSymbols {
            dim,
            entries: vec![vec![vec![Expression::zero(); dim]; dim]; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, k: usize, m: usize) -> &Expression {
        &self.entries[i][k][m]
    }
}

/// Christoffel symbols of the canonical affine connection on the extended
/// chart `(x¹,…,xⁿ,x⁰)`, `x⁰ = log t`. Index slot `n` stands for `x⁰`.
///
/// The vertical structure is rigid: `Γ̂^i_{k0} = −δ^i_k/(n+1)`,
/// `Γ̂^i_{00} = Γ̂^0_{i0} = 0`, `Γ̂^0_{00} = −1/(n+1)`; construction rejects
/// anything else.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedChristoffel {
    dim: usize,
    entries: Vec<Vec<Vec<Expression>>>,
}

impl ExtendedChristoffel {
    /// `entries[a][b][c]` is `Γ̂^a_{bc}` with `a,b,c ∈ 0..=n` and slot `n`
    /// standing for the vertical coordinate `x⁰`.
    pub fn new(dim: usize, entries: Vec<Vec<Vec<Expression>>>) -> Result<Self, GeometryError> {
        let ext = dim + 1;
        check_cube_shape(&entries, ext)?;
        check_lower_symmetry(&entries, ext)?;
        let frac = Expression::constant(Rational::new(-1, (dim + 1) as i64));
        for i in 0..dim {
            for k in 0..dim {
                let want = if i == k {
                    frac.clone()
                } else {
                    Expression::zero()
                };
                if entries[i][k][dim] != want {
                    return Err(GeometryError::Structural(format!(
                        "Γ̂^{}_{{{} 0}} must be {}δ/( n+1)",
                        i + 1,
                        k + 1,
                        "-"
                    )));
                }
            }
            if !entries[i][dim][dim].is_zero() {
                return Err(GeometryError::Structural(format!(
                    "Γ̂^{}_{{00}} must vanish",
                    i + 1
                )));
            }
            if !entries[dim][i][dim].is_zero() {
                return Err(GeometryError::Structural(format!(
                    "Γ̂^0_{{{} 0}} must vanish",
                    i + 1
                )));
            }
        }
        if entries[dim][dim][dim] != frac {
            return Err(GeometryError::Structural(
                "Γ̂^0_{00} must be -1/(n+1)".into(),
            ));
        }
        Ok(ExtendedChristoffel { dim, entries })
    }

    /// Base dimension `n`; the extended chart has `n + 1` coordinates.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The index slot of the vertical coordinate `x⁰`.
    pub fn vertical_index(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, a: usize, b: usize, c: usize) -> &Expression {
        &self.entries[a][b][c]
    }
}

/// A Riemannian metric on the chart: the matrix `g_{ik}` together with its
/// validated inverse `g^{ik}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    dim: usize,
    lower: Vec<Vec<Expression>>,
    upper: Vec<Vec<Expression>>,
}

impl Metric {
    /// Validates symmetry of both matrices (exactly) and `g·g⁻¹ = 1`
    /// (symbolically, with a numeric fallback at tolerance 1e−9).
    pub fn new(
        lower: Vec<Vec<Expression>>,
        upper: Vec<Vec<Expression>>,
    ) -> Result<Self, GeometryError> {
        let dim = lower.len();
        if dim == 0 {
            return Err(GeometryError::Shape {
                expected: 1,
                got: 0,
            });
        }
        check_square_shape(&lower, dim)?;
        check_square_shape(&upper, dim)?;
        check_matrix_symmetry(&lower, dim)?;
        check_matrix_symmetry(&upper, dim)?;
        let policy = EqualityPolicy::SymbolicThenNumeric {
            tolerance: GEOMETRY_TOL,
        };
        for i in 0..dim {
            for k in 0..dim {
                let mut prod = Expression::zero();
                for j in 0..dim {
                    prod = &prod + &(&lower[i][j] * &upper[j][k]);
                }
                let want = if i == k {
                    Expression::one()
                } else {
                    Expression::zero()
                };
                if !expr_equal(&prod, &want, policy)? {
                    return Err(GeometryError::NotInverse(i, k));
                }
            }
        }
        Ok(Metric { dim, lower, upper })
    }

    /// Builds the inverse by adjugate/determinant (dimension ≤ 3 only) and
    /// validates nondegeneracy at sample points.
    pub fn from_lower(lower: Vec<Vec<Expression>>) -> Result<Self, GeometryError> {
        let dim = lower.len();
        if dim == 0 {
            return Err(GeometryError::Shape {
                expected: 1,
                got: 0,
            });
        }
        if dim > 3 {
            return Err(GeometryError::TooLarge(dim));
        }
        check_square_shape(&lower, dim)?;
        check_matrix_symmetry(&lower, dim)?;
        let d = det(&lower);
        if !nonvanishing_at_samples(&d, dim)? {
            return Err(GeometryError::SingularMetric);
        }
        let adj = adjugate(&lower);
        let mut upper = Vec::with_capacity(dim);
        for row in adj {
            let mut out = Vec::with_capacity(dim);
            for e in row {
                out.push(e.div(&d)?);
            }
            upper.push(out);
        }
        Metric::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[Vec<Expression>] {
        &self.lower
    }

    pub fn upper(&self) -> &[Vec<Expression>] {
        &self.upper
    }

    /// The metric volume form `ρ = √det g`.
    pub fn volume_form(&self) -> Result<VolumeForm, GeometryError> {
        let rho = det(&self.lower).rat_pow(&Rational::new(1, 2))?;
        VolumeForm::new(self.dim, rho)
    }
}

/// A volume form `ρ(x)|Dx|` with `ρ` validated positive at sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeForm {
    dim: usize,
    rho: Expression,
}

impl VolumeForm {
    pub fn new(dim: usize, rho: Expression) -> Result<Self, GeometryError> {
        let points = sample_points(dim.max(1), GEOMETRY_POINTS, GEOMETRY_SEED);
        let mut informative = 0;
        for p in &points {
            match rho.eval(p) {
                Ok(v) if v.is_finite() => {
                    if v <= GEOMETRY_TOL {
                        return Err(GeometryError::NotPositive(format!(
                            "ρ evaluates to {v:.3e} at a sample point"
                        )));
                    }
                    informative += 1;
                }
                _ => continue,
            }
        }
        if informative < MIN_INFORMATIVE {
            return Err(GeometryError::Numeric(format!(
                "only {informative} of {GEOMETRY_POINTS} points admissible for ρ"
            )));
        }
        Ok(VolumeForm { dim, rho })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> &Expression {
        &self.rho
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// The connection a volume form induces on densities: `γᵢ = −∂ᵢ log ρ`,
/// computed as the logarithmic derivative `−(∂ᵢρ)/ρ` so that metric volume
/// forms give exactly rational components.
pub fn connection_from_volume(v: &VolumeForm) -> Connection {
    let n = v.dim.max(1);
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let g = v
            .rho
            .diff(i)
            .div(&v.rho)
            .expect("volume form is nonvanishing");
        components.push(-&g);
    }
    Connection { components }
}

/// Christoffel symbols of the Levi-Civita connection:
/// `Γ^i_{km} = ½ g^{ij}(∂ₖ g_{jm} + ∂ₘ g_{jk} − ∂ⱼ g_{km})`.
pub fn levi_civita(g: &Metric) -> Christoffel {
    let n = g.dim;
    let half = Rational::new(1, 2);
    let mut entries = vec![vec![vec![Expression::zero(); n]; n]; n];
    for i in 0..n {
        for k in 0..n {
            for m in k..n {
                let mut acc = Expression::zero();
                for j in 0..n {
                    let sum =
                        &(&g.lower[j][m].diff(k) + &g.lower[j][k].diff(m)) - &g.lower[k][m].diff(j);
                    acc = &acc + &(&g.upper[i][j] * &sum);
                }
                let gamma = acc.scale(&half);
                entries[i][k][m] = gamma.clone();
                entries[i][m][k] = gamma;
            }
        }
    }
    Christoffel { dim: n, entries }
}

/// Transforms connection components to the chart on the far side of `ch`:
/// `γ_{i'} = (∂xⁱ/∂x^{i'})(γᵢ + ∂ᵢ log det(∂x'/∂x))`, expressed in the new
/// coordinates.
pub fn gamma_transform(gamma: &Connection, ch: &ChartChange) -> Result<Connection, GeometryError> {
    let n = gamma.dim();
    if ch.dim() != n {
        return Err(GeometryError::Shape {
            expected: n,
            got: ch.dim(),
        });
    }
    let d = ch.jacobian_det();
    let inv_jac = ch.inverse_jacobian();
    let inverse = ch.inverse();
    let mut components = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = Expression::zero();
        for i in 0..n {
            let log_term = d.diff(i).div(&d)?;
            let bracket = (&gamma.components[i] + &log_term).subst(inverse)?;
            acc = &acc + &(&inv_jac[i][j] * &bracket);
        }
        components.push(acc);
    }
    Ok(Connection { components })
}

/// Extracts the connection a second-order symbol defines through the
/// Kaluza–Klein condition `S^{ik}γₖ = Bⁱ`, inverting `S` symbolically by
/// adjugate/determinant (dimension ≤ 3).
///
/// A degenerate `S` is an error; the error reports whether `B` at least lies
/// in the range of `S` at the sampled points, i.e. whether horizontal
/// directions exist even though they are not unique.
pub fn kk_extract(st: &SymbolTriple) -> Result<Connection, GeometryError> {
    let n = st.dim();
    if n > 3 {
        return Err(GeometryError::TooLarge(n));
    }
    let d = det(st.s());
    if !nonvanishing_at_samples(&d, n)? {
        return Err(GeometryError::DegenerateSymbol {
            b_in_range: degenerate_range_check(st)?,
        });
    }
    let adj = adjugate(st.s());
    let mut components = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Expression::zero();
        for i in 0..n {
            acc = &acc + &(&adj[k][i] * &st.b()[i]);
        }
        components.push(acc.div(&d)?);
    }
    Ok(Connection { components })
}

/// Like [`kk_extract`] with a caller-supplied inverse of `S`, for dimensions
/// or expression shapes where the adjugate route is unavailable. The inverse
/// is validated against `S` before use.
pub fn kk_extract_with_inverse(
    st: &SymbolTriple,
    s_inv: &[Vec<Expression>],
) -> Result<Connection, GeometryError> {
    let n = st.dim();
    check_square_shape(s_inv, n)?;
    let policy = EqualityPolicy::SymbolicThenNumeric {
        tolerance: GEOMETRY_TOL,
    };
    for i in 0..n {
        for k in 0..n {
            let mut prod = Expression::zero();
            for j in 0..n {
                prod = &prod + &(&st.s()[i][j] * &s_inv[j][k]);
            }
            let want = if i == k {
                Expression::one()
            } else {
                Expression::zero()
            };
            if !expr_equal(&prod, &want, policy)? {
                return Err(GeometryError::NotInverse(i, k));
            }
        }
    }
    let mut components = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Expression::zero();
        for i in 0..n {
            acc = &acc + &(&s_inv[k][i] * &st.b()[i]);
        }
        components.push(acc);
    }
    Ok(Connection { components })
}

/// The Brans–Dicke scalar of a symbol with respect to a connection:
/// `C − Bⁱγᵢ`.
pub fn brans_dicke(st: &SymbolTriple, gamma: &Connection) -> Result<Expression, GeometryError> {
    let n = st.dim();
    if gamma.dim() != n {
        return Err(GeometryError::Shape {
            expected: n,
            got: gamma.dim(),
        });
    }
    let mut acc = st.c().clone();
    for i in 0..n {
        acc = &acc - &(&st.b()[i] * &gamma.components[i]);
    }
    Ok(acc)
}

/// The covariant parts of a symbol with respect to an arbitrary affine
/// connection `Γ`: the vector field `Bⁱ − S^{ik}Γₖ` and the scalar
/// `C − 2BⁱΓᵢ + S^{ik}ΓᵢΓₖ`, where `Γᵢ := −Γ^k_{ik}`.
pub fn covariant_parts(
    st: &SymbolTriple,
    gamma: &Christoffel,
) -> Result<(Vec<Expression>, Expression), GeometryError> {
    let n = st.dim();
    if gamma.dim() != n {
        return Err(GeometryError::Shape {
            expected: n,
            got: gamma.dim(),
        });
    }
    let lowered = gamma.trace_connection();
    let mut vector = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = st.b()[i].clone();
        for k in 0..n {
            acc = &acc - &(&st.s()[i][k] * &lowered.components[k]);
        }
        vector.push(acc);
    }
    let mut scalar = st.c().clone();
    for i in 0..n {
        scalar = &scalar - &(&st.b()[i] * &lowered.components[i]).scale(&Rational::from_int(2));
        for k in 0..n {
            scalar =
                &scalar + &(&(&st.s()[i][k] * &lowered.components[i]) * &lowered.components[k]);
        }
    }
    Ok((vector, scalar))
}

/// Conjugates an operator by the density pullback along a chart change:
/// the result acts on new-coordinate representations exactly as `op` acts on
/// old-coordinate ones. Generators map as
///
/// ```text
/// f(x) ↦ f(x(x')),   ŵ ↦ ŵ,
/// ∂ᵢ   ↦ (∂x'_k/∂xᵢ)∘inv · ∂'_k + (∂ᵢ log det(∂x'/∂x))∘inv · ŵ
/// ```
///
/// — the ŵ term is the weight factor the Jacobian determinant contributes.
pub fn op_conjugate(op: &DiffOperator, ch: &ChartChange) -> Result<DiffOperator, GeometryError> {
    let n = op.dim();
    if ch.dim() != n {
        return Err(GeometryError::Shape {
            expected: n,
            got: ch.dim(),
        });
    }
    if op.order() > 2 {
        return Err(GeometryError::OrderTooHigh(op.order()));
    }
    let jac = ch.jacobian();
    let d = ch.jacobian_det();
    let inverse = ch.inverse();
    let mut partial_images = Vec::with_capacity(n);
    for i in 0..n {
        let mut img = DiffOperator::zero(n);
        for k in 0..n {
            let coeff = jac[k][i].subst(inverse)?;
            if !coeff.is_zero() {
                let mut alpha = vec![0; n];
                alpha[k] = 1;
                img.add_term(OpKey::new(alpha, 0), coeff);
            }
        }
        let log_term = d.diff(i).div(&d)?.subst(inverse)?;
        img.add_term(OpKey::new(vec![0; n], 1), log_term);
        partial_images.push(img);
    }
    let mut out = DiffOperator::zero(n);
    for (key, coeff) in op.terms() {
        let mut term_op = DiffOperator::scalar(n, coeff.subst(inverse)?);
        for (i, &mult) in key.alpha.iter().enumerate() {
            for _ in 0..mult {
                term_op = term_op.compose(&partial_images[i]);
            }
        }
        if key.wpow > 0 {
            let mut wk = DiffOperator::zero(n);
            wk.add_term(OpKey::new(vec![0; n], key.wpow), Expression::one());
            term_op = term_op.compose(&wk);
        }
        out = out.add(&term_op);
    }
    Ok(out)
}

/// The projective symbols of an affine connection:
/// `Π^i_{km} = Γ^i_{km} + (γₖδ^i_m + γₘδ^i_k)/(n+1)` with `γᵢ = −Γ^k_{ik}`.
/// The result is exactly trace-free and depends only on the projective
/// class.
pub fn pi_symbols(gamma: &Christoffel) -> PiSymbols {
    let n = gamma.dim;
    let frac = Rational::new(1, (n + 1) as i64);
    let lowered = gamma.trace_connection();
    let mut entries = vec![vec![vec![Expression::zero(); n]; n]; n];
    for i in 0..n {
        for k in 0..n {
            for m in 0..n {
                let mut e = gamma.entries[i][k][m].clone();
                if i == m {
                    e = &e + &lowered.components[k].scale(&frac);
                }
                if i == k {
                    e = &e + &lowered.components[m].scale(&frac);
                }
                entries[i][k][m] = e;
            }
        }
    }
    PiSymbols::new(entries).expect("projective symbols are trace-free by construction")
}

/// Whether two connections belong to the same projective class, i.e. have
/// equal projective symbols; when they do, also returns the covector `t`
/// with `Γ̃^i_{km} − Γ^i_{km} = tₖδ^i_m + tₘδ^i_k`, recovered as
/// `tₖ = (Γ̃−Γ)^i_{ik}/(n+1)`.
pub fn projectively_equivalent(
    g1: &Christoffel,
    g2: &Christoffel,
    policy: EqualityPolicy,
) -> Result<(bool, Option<Vec<Expression>>), GeometryError> {
    let n = g1.dim;
    if g2.dim != n {
        return Err(GeometryError::Shape {
            expected: n,
            got: g2.dim,
        });
    }
    let p1 = pi_symbols(g1);
    let p2 = pi_symbols(g2);
    for i in 0..n {
        for k in 0..n {
            for m in k..n {
                if !expr_equal(&p1.entries[i][k][m], &p2.entries[i][k][m], policy)? {
                    return Ok((false, None));
                }
            }
        }
    }
    let frac = Rational::new(1, (n + 1) as i64);
    let mut t = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Expression::zero();
        for i in 0..n {
            acc = &acc + &(&g2.entries[i][i][k] - &g1.entries[i][i][k]);
        }
        t.push(acc.scale(&frac));
    }
    Ok((true, Some(t)))
}

/// The Thomas lift: the canonical affine connection on the extended chart
/// determined by a projective class, with symbols
///
/// ```text
/// Γ̂^i_{km} = Π^i_{km}
/// Γ̂^0_{km} = (∂ᵣΠ^r_{km} − Π^r_{sk}Π^s_{rm}) / (n+1)
/// Γ̂^i_{k0} = −δ^i_k/(n+1),   Γ̂^i_{00} = Γ̂^0_{i0} = 0,   Γ̂^0_{00} = −1/(n+1)
/// ```
pub fn thomas_lift(pi: &PiSymbols) -> ExtendedChristoffel {
    let n = pi.dim;
    let frac = Rational::new(1, (n + 1) as i64);
    let neg_frac = Rational::new(-1, (n + 1) as i64);
    let mut entries = vec![vec![vec![Expression::zero(); n + 1]; n + 1]; n + 1];
    for i in 0..n {
        for k in 0..n {
            for m in 0..n {
                entries[i][k][m] = pi.entries[i][k][m].clone();
            }
        }
    }
    for k in 0..n {
        for m in k..n {
            let mut acc = Expression::zero();
            for r in 0..n {
                acc = &acc + &pi.entries[r][k][m].diff(r);
                for s in 0..n {
                    acc = &acc - &(&pi.entries[r][s][k] * &pi.entries[s][r][m]);
                }
            }
            let e = acc.scale(&frac);
            entries[n][k][m] = e.clone();
            entries[n][m][k] = e;
        }
    }
    for i in 0..n {
        let c = Expression::constant(neg_frac.clone());
        entries[i][i][n] = c.clone();
        entries[i][n][i] = c;
    }
    entries[n][n][n] = Expression::constant(neg_frac);
    ExtendedChristoffel { dim: n, entries }
}

// ---------------------------------------------------------------------------
// Shared validation helpers
// ---------------------------------------------------------------------------

fn check_cube_shape(entries: &[Vec<Vec<Expression>>], dim: usize) -> Result<(), GeometryError> {
    if entries.len() != dim {
        return Err(GeometryError::Shape {
            expected: dim,
            got: entries.len(),
        });
    }
    for plane in entries {
        if plane.len() != dim {
            return Err(GeometryError::Shape {
                expected: dim,
                got: plane.len(),
            });
        }
        for row in plane {
            if row.len() != dim {
                return Err(GeometryError::Shape {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
    }
    Ok(())
}

fn check_lower_symmetry(entries: &[Vec<Vec<Expression>>], dim: usize) -> Result<(), GeometryError> {
    for plane in entries {
        for k in 0..dim {
            for m in (k + 1)..dim {
                if plane[k][m] != plane[m][k] {
                    return Err(GeometryError::NotSymmetric(k, m));
                }
            }
        }
    }
    Ok(())
}

fn check_square_shape(m: &[Vec<Expression>], dim: usize) -> Result<(), GeometryError> {
    if m.len() != dim {
        return Err(GeometryError::Shape {
            expected: dim,
            got: m.len(),
        });
    }
    for row in m {
        if row.len() != dim {
            return Err(GeometryError::Shape {
                expected: dim,
                got: row.len(),
            });
        }
    }
    Ok(())
}

fn check_matrix_symmetry(m: &[Vec<Expression>], dim: usize) -> Result<(), GeometryError> {
    for i in 0..dim {
        for k in (i + 1)..dim {
            if m[i][k] != m[k][i] {
                return Err(GeometryError::NotSymmetric(i, k));
            }
        }
    }
    Ok(())
}

/// The adjugate (transposed cofactor matrix), so `adj · M = det(M)·1`.
fn adjugate(m: &[Vec<Expression>]) -> Vec<Vec<Expression>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![Expression::one()]];
    }
    let mut adj = vec![vec![Expression::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            let minor: Vec<Vec<Expression>> = (0..n)
                .filter(|&r| r != i)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != k)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let cof = det(&minor);
            adj[k][i] = if (i + k) % 2 == 0 { cof } else { -&cof };
        }
    }
    adj
}

/// True when `e` stays bounded away from zero at the admissible sample
/// points; errors when too few points are admissible to decide.
fn nonvanishing_at_samples(e: &Expression, dim: usize) -> Result<bool, GeometryError> {
    let points = sample_points(dim.max(1), GEOMETRY_POINTS, GEOMETRY_SEED);
    let mut informative = 0;
    for p in &points {
        match e.eval(p) {
            Ok(v) if v.is_finite() => {
                if v.abs() <= GEOMETRY_TOL {
                    return Ok(false);
                }
                informative += 1;
            }
            _ => continue,
        }
    }
    if informative < MIN_INFORMATIVE {
        return Err(GeometryError::Numeric(format!(
            "only {informative} of {GEOMETRY_POINTS} points admissible"
        )));
    }
    Ok(true)
}

/// For a degenerate symbol, checks at the sample points whether `B` lies in
/// the range of `S` — whether the horizontal distribution exists at all,
/// even though it is not unique.
fn degenerate_range_check(st: &SymbolTriple) -> Result<bool, GeometryError> {
    let n = st.dim();
    let points = sample_points(n.max(1), GEOMETRY_POINTS, GEOMETRY_SEED);
    let mut informative = 0;
    for p in &points {
        let mut s_val = vec![vec![0.0; n]; n];
        let mut b_val = vec![0.0; n];
        let mut ok = true;
        'fill: for i in 0..n {
            match st.b()[i].eval(p) {
                Ok(v) if v.is_finite() => b_val[i] = v,
                _ => {
                    ok = false;
                    break 'fill;
                }
            }
            for k in 0..n {
                match st.s()[i][k].eval(p) {
                    Ok(v) if v.is_finite() => s_val[i][k] = v,
                    _ => {
                        ok = false;
                        break 'fill;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        informative += 1;
        if !linear_system_consistent(&s_val, &b_val) {
            return Ok(false);
        }
    }
    if informative < MIN_INFORMATIVE {
        return Err(GeometryError::Numeric(format!(
            "only {informative} of {GEOMETRY_POINTS} points admissible"
        )));
    }
    Ok(true)
}

/// Gaussian elimination with partial pivoting on the augmented system,
/// reporting whether `S·γ = b` is consistent (possibly underdetermined).
fn linear_system_consistent(s: &[Vec<f64>], b: &[f64]) -> bool {
    let n = b.len();
    let scale = s
        .iter()
        .flatten()
        .chain(b.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = GEOMETRY_TOL * (1.0 + scale);
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = s[i].clone();
            row.push(b[i]);
            row
        })
        .collect();
    let mut row = 0;
    for col in 0..n {
        let pivot = (row..n).max_by(|&a, &b| {
            m[a][col]
                .abs()
                .partial_cmp(&m[b][col].abs())
                .expect("finite entries")
        });
        let Some(p) = pivot else { break };
        if m[p][col].abs() <= tol {
            continue;
        }
        m.swap(row, p);
        for r in 0..n {
            if r != row {
                let f = m[r][col] / m[row][col];
                for c in col..=n {
                    m[r][c] -= f * m[row][c];
                }
            }
        }
        row += 1;
        if row == n {
            break;
        }
    }
    m.iter()
        .all(|r| r[..n].iter().any(|v| v.abs() > tol) || r[n].abs() <= tol)
}
