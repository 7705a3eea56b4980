//! Independent numeric oracles: exact torus integration of
//! trig-polynomials, trapezoid quadrature on the periodic grid, the induced
//! scalar product of complementary-weight densities, adjoint duality
//! certification, and the randomized identity suites behind `verify`.
//!
//! The torus `Tⁿ` (period 2π per axis) stands in for compact support: every
//! integration-by-parts identity behind the adjoint calculus holds verbatim
//! on a closed manifold, and trig-polynomial integrands admit an exact
//! Fourier evaluation that is independent of the symbolic engine.

use crate::densities::Density;
use crate::expr::{expr_equal, EqualityPolicy, ExprError, Expression};
use crate::geometry::{
    brans_dicke, gamma_transform, kk_extract, op_conjugate, pi_symbols, thomas_lift, Christoffel,
    Connection,
};
use crate::operators::{build_canonical, commutator, DiffOperator, OpKey, SymbolTriple};
use crate::pencils::{canonical_pencil, example_pencil, LambdaOperator, VectorField};
use crate::rational::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Relative tolerance for quadrature-based comparisons.
pub const QUADRATURE_TOL: f64 = 1e-9;
/// Agreement demanded between the exact and quadrature integration paths.
pub const INTEGRATOR_TOL: f64 = 1e-10;

/// Errors from the verification oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("integrand is not defined on the torus: {0}")]
    Unbounded(String),
    #[error("expression mentions coordinate {got} beyond dimension {dim}")]
    Dimension { dim: usize, got: usize },
    #[error("quadrature grid for dimension {0} is too large; use dimension ≤ 3")]
    GridTooLarge(usize),
    #[error("unknown suite {0:?}; known suites: {1}")]
    UnknownSuite(String, String),
    #[error("{0}")]
    Failed(String),
}

// ---------------------------------------------------------------------------
// Torus integration
// ---------------------------------------------------------------------------

/// Value of a torus integral: exact `coeff·π^pi_power` when the integrand
/// was a trig-polynomial, or a quadrature float.
#[derive(Debug, Clone, PartialEq)]
pub enum TorusValue {
    Exact { coeff: Rational, pi_power: u32 },
    Quadrature(f64),
}

impl TorusValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            TorusValue::Exact { coeff, pi_power } => {
                coeff.to_f64() * std::f64::consts::PI.powi(*pi_power as i32)
            }
            TorusValue::Quadrature(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, TorusValue::Exact { .. })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TorusValue::Exact { coeff, .. } => coeff.is_zero(),
            TorusValue::Quadrature(v) => *v == 0.0,
        }
    }

    fn add(&self, other: &TorusValue) -> TorusValue {
        match (self, other) {
            (
                TorusValue::Exact {
                    coeff: a,
                    pi_power: pa,
                },
                TorusValue::Exact {
                    coeff: b,
                    pi_power: pb,
                },
            ) => {
                if a.is_zero() {
                    return other.clone();
                }
                if b.is_zero() {
                    return self.clone();
                }
                if pa == pb {
                    TorusValue::Exact {
                        coeff: a + b,
                        pi_power: *pa,
                    }
                } else {
                    TorusValue::Quadrature(self.to_f64() + other.to_f64())
                }
            }
            _ => TorusValue::Quadrature(self.to_f64() + other.to_f64()),
        }
    }
}

impl fmt::Display for TorusValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusValue::Exact { coeff, pi_power } => {
                if coeff.is_zero() || *pi_power == 0 {
                    write!(f, "{coeff}")
                } else if *pi_power == 1 {
                    write!(f, "{coeff}*pi")
                } else {
                    write!(f, "{coeff}*pi^{pi_power}")
                }
            }
            TorusValue::Quadrature(v) => write!(f, "{v}"),
        }
    }
}

/// `∫₀^{2π} sinᵃx cosᵇx dx / (2π)` as a rational: zero unless both exponents
/// are even, else the double-factorial ratio `(a−1)!!(b−1)!!/(a+b)!!`.
fn axis_moment(a: u64, b: u64) -> Rational {
    if a % 2 == 1 || b % 2 == 1 {
        return Rational::zero();
    }
    fn double_factorial(k: i64) -> i64 {
        if k <= 0 {
            1
        } else {
            k * double_factorial(k - 2)
        }
    }
    Rational::new(
        double_factorial(a as i64 - 1) * double_factorial(b as i64 - 1),
        double_factorial((a + b) as i64),
    )
}

/// Integrates over the torus `[0,2π)^dim`. Trig-polynomials (rational
/// combinations of `sin(xᵢ)`, `cos(xᵢ)` powers) integrate exactly through
/// their Fourier constant term; anything else bounded falls back to the
/// periodic trapezoid rule. Logarithms and negative or fractional powers are
/// rejected as potentially unbounded.
pub fn integrate_torus(e: &Expression, dim: usize) -> Result<TorusValue, VerifyError> {
    if dim == 0 {
        return Err(VerifyError::GridTooLarge(0));
    }
    if let Some(m) = e.max_coord() {
        if m >= dim {
            return Err(VerifyError::Dimension { dim, got: m });
        }
    }
    match exact_torus(e, dim)? {
        Some(v) => Ok(v),
        None => quadrature_torus(e, dim),
    }
}

/// The exact Fourier path; `Ok(None)` means the integrand is bounded but not
/// a trig-polynomial.
fn exact_torus(e: &Expression, dim: usize) -> Result<Option<TorusValue>, VerifyError> {
    let mut total = Rational::zero();
    let Some(terms) = e.trig_poly_terms().map_err(|m| VerifyError::Unbounded(m))? else {
        return Ok(None);
    };
    for (pairs, coeff) in terms {
        let mut factor = coeff;
        for i in 0..dim {
            let (a, b) = pairs
                .iter()
                .find(|(j, _, _)| *j == i)
                .map(|(_, a, b)| (*a, *b))
                .unwrap_or((0, 0));
            factor = &factor * &axis_moment(a, b);
            if factor.is_zero() {
                break;
            }
        }
        total = &total + &factor;
    }
    // each axis contributes its 2π period
    let two_pow = Rational::from_int(2).pow(dim as i64);
    Ok(Some(TorusValue::Exact {
        coeff: &total * &two_pow,
        pi_power: dim as u32,
    }))
}

fn quadrature_torus(e: &Expression, dim: usize) -> Result<TorusValue, VerifyError> {
    let n: usize = match dim {
        1 | 2 => 256,
        3 => 64,
        d => return Err(VerifyError::GridTooLarge(d)),
    };
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut idx = vec![0usize; dim];
    let mut acc = 0.0;
    let mut point = vec![0.0; dim];
    loop {
        for (k, &j) in idx.iter().enumerate() {
            point[k] = j as f64 * step;
        }
        let v = e
            .eval(&point)
            .map_err(|err| VerifyError::Unbounded(format!("evaluation failed on grid: {err}")))?;
        if !v.is_finite() {
            return Err(VerifyError::Unbounded(
                "integrand is not finite on the grid".into(),
            ));
        }
        acc += v;
        // advance the mixed-radix counter
        let mut k = 0;
        loop {
            if k == dim {
                return Ok(TorusValue::Quadrature(acc * step.powi(dim as i32)));
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// The canonical scalar product `⟨s₁, s₂⟩` of two densities on the torus:
/// complementary-weight pairs `λ + μ = 1` integrate against `|Dx|`, all
/// other pairs contribute nothing.
pub fn scalar_product(d1: &Density, d2: &Density, dim: usize) -> Result<TorusValue, VerifyError> {
    let mut acc = TorusValue::Exact {
        coeff: Rational::zero(),
        pi_power: dim as u32,
    };
    for (w1, c1) in d1.terms() {
        let complement = &Rational::one() - w1;
        if let Some(c2) = d2.coefficient(&complement) {
            let v = integrate_torus(&(c1 * c2), dim)?;
            acc = acc.add(&v);
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Randomized suites
// ---------------------------------------------------------------------------

/// Configuration of the randomized verification suites; every suite is
/// deterministic given the seed.
#[derive(Debug, Clone)]
pub struct RandomSuiteConfig {
    pub seed: u64,
    pub trials: usize,
    pub dim: usize,
    pub max_order: u32,
    pub degree: u32,
}

impl Default for RandomSuiteConfig {
    fn default() -> Self {
        RandomSuiteConfig {
            seed: 42,
            trials: 25,
            dim: 2,
            max_order: 2,
            degree: 2,
        }
    }
}

/// Outcome of one suite run: deterministic for a given configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub max_residual: f64,
    pub failures: Vec<FailureRecord>,
}

/// A failed trial with its rendered inputs and the two disagreeing sides.
#[derive(Debug, Clone, Serialize)]
pub struct FailureRecord {
    pub trial: usize,
    pub inputs: String,
    pub lhs: String,
    pub rhs: String,
}

impl SuiteReport {
    fn new(suite: &str, cfg: &RandomSuiteConfig) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            seed: cfg.seed,
            trials: cfg.trials,
            passed: 0,
            max_residual: 0.0,
            failures: Vec::new(),
        }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.passed == self.trials
    }

    fn record(
        &mut self,
        trial: usize,
        ok: bool,
        residual: f64,
        inputs: &str,
        lhs: &str,
        rhs: &str,
    ) {
        self.max_residual = self.max_residual.max(residual);
        if ok {
            self.passed += 1;
        } else {
            self.failures.push(FailureRecord {
                trial,
                inputs: inputs.to_string(),
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
            });
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "suite {}: {}/{} trials passed (seed {}, max residual {:.3e})",
            self.suite, self.passed, self.trials, self.seed, self.max_residual
        )?;
        for rec in &self.failures {
            writeln!(
                f,
                "  trial {} FAILED: {}\n    lhs: {}\n    rhs: {}",
                rec.trial, rec.inputs, rec.lhs, rec.rhs
            )?;
        }
        Ok(())
    }
}

// -- random structure generators --------------------------------------------

fn rand_rational(rng: &mut ChaCha20Rng) -> Rational {
    let num = rng.gen_range(-3i64..=3);
    let den = rng.gen_range(1i64..=2);
    Rational::new(num, den)
}

fn rand_nonzero_rational(rng: &mut ChaCha20Rng) -> Rational {
    loop {
        let r = rand_rational(rng);
        if !r.is_zero() {
            return r;
        }
    }
}

/// A random trig-polynomial: a short sum of products of `sin/cos(xᵢ)`
/// powers with small rational coefficients. Always bounded on the torus and
/// exactly integrable.
pub fn rand_trig_poly(rng: &mut ChaCha20Rng, dim: usize, degree: u32) -> Expression {
    let terms = rng.gen_range(1..=3);
    let mut acc = Expression::zero();
    for _ in 0..terms {
        let mut term = Expression::constant(rand_nonzero_rational(rng));
        for i in 0..dim {
            let budget = rng.gen_range(0..=degree);
            let a = rng.gen_range(0..=budget);
            let b = budget - a;
            let xi = Expression::coord(i);
            for _ in 0..a {
                term = &term * &xi.sin();
            }
            for _ in 0..b {
                term = &term * &xi.cos();
            }
        }
        acc = &acc + &term;
    }
    acc
}

/// A weight from a rational pool, avoiding the singular values 0, ½, 1 when
/// `regular` is set.
pub fn rand_weight(rng: &mut ChaCha20Rng, regular: bool) -> Rational {
    let pool: &[(i64, i64)] = if regular {
        &[(2, 1), (-1, 1), (3, 2), (-1, 2), (3, 1), (1, 3)]
    } else {
        &[(0, 1), (1, 2), (1, 1), (2, 1), (-1, 1), (3, 2)]
    };
    let (n, d) = pool[rng.gen_range(0..pool.len())];
    Rational::new(n, d)
}

/// A random normal-ordered operator of order ≤ `max_order` with
/// trig-polynomial coefficients.
pub fn rand_operator(
    rng: &mut ChaCha20Rng,
    dim: usize,
    max_order: u32,
    degree: u32,
) -> DiffOperator {
    let mut op = DiffOperator::zero(dim);
    let terms = rng.gen_range(1..=4);
    for _ in 0..terms {
        let order = rng.gen_range(0..=max_order);
        let wpow = rng.gen_range(0..=order);
        let spatial = order - wpow;
        let mut alpha = vec![0u32; dim];
        for _ in 0..spatial {
            alpha[rng.gen_range(0..dim)] += 1;
        }
        op.add_term(OpKey::new(alpha, wpow), rand_trig_poly(rng, dim, degree));
    }
    if op.is_zero() {
        op.add_term(OpKey::identity(dim), Expression::one());
    }
    op
}

/// A random symmetric symbol triple with trig-polynomial entries.
pub fn rand_symbol_triple(rng: &mut ChaCha20Rng, dim: usize, degree: u32) -> SymbolTriple {
    let mut s = vec![vec![Expression::zero(); dim]; dim];
    for i in 0..dim {
        for k in i..dim {
            let e = rand_trig_poly(rng, dim, degree);
            s[i][k] = e.clone();
            s[k][i] = e;
        }
    }
    let b = (0..dim).map(|_| rand_trig_poly(rng, dim, degree)).collect();
    let c = rand_trig_poly(rng, dim, degree);
    SymbolTriple::new(s, b, c).expect("generated symbol is symmetric")
}

/// A random vector field with trig-polynomial components.
pub fn rand_vector_field(rng: &mut ChaCha20Rng, dim: usize, degree: u32) -> VectorField {
    VectorField::new((0..dim).map(|_| rand_trig_poly(rng, dim, degree)).collect())
        .expect("dimension is positive")
}

/// A random symmetric Christoffel symbol set with trig-polynomial entries.
pub fn rand_christoffel(rng: &mut ChaCha20Rng, dim: usize, degree: u32) -> Christoffel {
    let mut entries = vec![vec![vec![Expression::zero(); dim]; dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            for m in k..dim {
                let e = rand_trig_poly(rng, dim, degree);
                entries[i][k][m] = e.clone();
                entries[i][m][k] = e;
            }
        }
    }
    Christoffel::new(entries).expect("generated symbols are symmetric")
}

/// A random weight-λ second-order operator (no ŵ terms): the input shape of
/// the pencil reconstruction theorem.
pub fn rand_weight_operator(rng: &mut ChaCha20Rng, dim: usize, degree: u32) -> DiffOperator {
    let mut op = DiffOperator::zero(dim);
    for i in 0..dim {
        for k in i..dim {
            let mut alpha = vec![0u32; dim];
            alpha[i] += 1;
            alpha[k] += 1;
            op.add_term(OpKey::new(alpha, 0), rand_trig_poly(rng, dim, degree));
        }
    }
    for i in 0..dim {
        let mut alpha = vec![0u32; dim];
        alpha[i] = 1;
        op.add_term(OpKey::new(alpha, 0), rand_trig_poly(rng, dim, degree));
    }
    op.add_term(OpKey::identity(dim), rand_trig_poly(rng, dim, degree));
    op
}

// -- adjoint duality ---------------------------------------------------------

/// Certifies `⟨Â s₁, s₂⟩ = ⟨s₁, Â* s₂⟩` on random complementary-weight
/// trig-polynomial densities. The integrals go through the exact Fourier
/// path, so the certificate is independent of the symbolic adjoint.
pub fn check_adjoint_numeric(
    op: &DiffOperator,
    cfg: &RandomSuiteConfig,
) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("adjoint-duality", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let dim = op.dim();
    let adj = op.adjoint();
    for trial in 0..cfg.trials {
        let lambda = rand_weight(&mut rng, false);
        let s1 = Density::term(lambda.clone(), rand_trig_poly(&mut rng, dim, cfg.degree));
        let s2 = Density::term(
            &Rational::one() - &lambda,
            rand_trig_poly(&mut rng, dim, cfg.degree),
        );
        let lhs = scalar_product(&op.apply(&s1), &s2, dim)?;
        let rhs = scalar_product(&s1, &adj.apply(&s2), dim)?;
        let residual = (lhs.to_f64() - rhs.to_f64()).abs();
        let ok = residual <= QUADRATURE_TOL * (1.0 + lhs.to_f64().abs());
        report.record(
            trial,
            ok,
            residual,
            &format!("lambda = {lambda}, s1 = {s1}, s2 = {s2}"),
            &lhs.to_string(),
            &rhs.to_string(),
        );
    }
    Ok(report)
}

// -- the named suites ---------------------------------------------------------

/// The suites `run_suite` knows, one per module-level invariant group.
pub const SUITE_NAMES: &[&str] = &[
    "adjoint-involution",
    "adjoint-duality",
    "canonical-selfadjoint",
    "theorem-uniqueness",
    "example-pencil",
    "lie-structure",
    "kk-extraction",
    "projective-invariance",
    "covariance",
    "integrator-consistency",
];

/// Runs one named identity suite. Every trial draws fresh random structures
/// from a stream seeded by `cfg.seed`, so reports are reproducible.
pub fn run_suite(name: &str, cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    match name {
        "adjoint-involution" => suite_adjoint_involution(cfg),
        "adjoint-duality" => suite_adjoint_duality(cfg),
        "canonical-selfadjoint" => suite_canonical_selfadjoint(cfg),
        "theorem-uniqueness" => suite_theorem_uniqueness(cfg),
        "example-pencil" => suite_example_pencil(cfg),
        "lie-structure" => suite_lie_structure(cfg),
        "kk-extraction" => suite_kk_extraction(cfg),
        "projective-invariance" => suite_projective_invariance(cfg),
        "covariance" => suite_covariance(cfg),
        "integrator-consistency" => suite_integrator_consistency(cfg),
        other => Err(VerifyError::UnknownSuite(
            other.to_string(),
            SUITE_NAMES.join(", "),
        )),
    }
}

fn suite_adjoint_involution(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("adjoint-involution", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.trials {
        let a = rand_operator(&mut rng, cfg.dim, cfg.max_order, cfg.degree);
        let b = rand_operator(&mut rng, cfg.dim, cfg.max_order, cfg.degree);
        let double = a.adjoint().adjoint();
        let anti = a.compose(&b).adjoint();
        let anti_want = b.adjoint().compose(&a.adjoint());
        let ok = double == a && anti == anti_want;
        report.record(
            trial,
            ok,
            0.0,
            &format!("A = {a}, B = {b}"),
            &format!("A** = {double}; (AB)* = {anti}"),
            &format!("A = {a}; B*A* = {anti_want}"),
        );
    }
    Ok(report)
}

fn suite_adjoint_duality(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    // one random operator per run; the per-trial densities vary inside
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let op = rand_operator(&mut rng, cfg.dim, cfg.max_order, cfg.degree);
    check_adjoint_numeric(&op, cfg)
}

fn suite_canonical_selfadjoint(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("canonical-selfadjoint", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.trials {
        let st = rand_symbol_triple(&mut rng, cfg.dim, cfg.degree);
        let op = build_canonical(&st);
        let selfadj = op.adjoint() == op;
        let normalized = op.coefficient(&OpKey::identity(cfg.dim)).is_none();
        let ok = selfadj && normalized;
        report.record(
            trial,
            ok,
            0.0,
            &format!("operator = {op}"),
            &format!("adjoint = {}", op.adjoint()),
            &format!("self-adjoint: {selfadj}, normalized: {normalized}"),
        );
    }
    Ok(report)
}

fn suite_theorem_uniqueness(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("theorem-uniqueness", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.trials {
        let a = rand_weight_operator(&mut rng, cfg.dim, cfg.degree);
        let lambda = rand_weight(&mut rng, true);
        let pencil = match LambdaOperator::new(a.clone(), lambda.clone()) {
            Ok(l) => canonical_pencil(&l),
            Err(e) => {
                report.record(trial, false, 0.0, &format!("A = {a}"), &e.to_string(), "");
                continue;
            }
        };
        let round = pencil.restrict(&lambda) == a;
        let selfadj = pencil.adjoint() == pencil;
        // uniqueness across weights: rebuilding from another restriction
        // recovers the same pencil
        let other = loop {
            let mu = rand_weight(&mut rng, true);
            if mu != lambda {
                break mu;
            }
        };
        let again = match LambdaOperator::new(pencil.restrict(&other), other.clone()) {
            Ok(l) => canonical_pencil(&l),
            Err(e) => {
                report.record(trial, false, 0.0, &format!("A = {a}"), &e.to_string(), "");
                continue;
            }
        };
        let unique = again == pencil;
        let ok = round && selfadj && unique;
        report.record(
            trial,
            ok,
            0.0,
            &format!("A = {a}, lambda0 = {lambda}, other = {other}"),
            &format!("round trip: {round}, self-adjoint: {selfadj}, unique: {unique}"),
            &pencil.to_string(),
        );
    }
    Ok(report)
}

fn suite_example_pencil(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("example-pencil", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.trials {
        let x = rand_vector_field(&mut rng, cfg.dim, cfg.degree);
        let y = rand_vector_field(&mut rng, cfg.dim, cfg.degree);
        let lambda = rand_weight(&mut rng, true);
        let example = match example_pencil(&x, &y, &lambda) {
            Ok(p) => p,
            Err(e) => {
                report.record(trial, false, 0.0, "example pencil", &e.to_string(), "");
                continue;
            }
        };
        let product = x.lie_lift().compose(&y.lie_lift());
        let reconstructed = match LambdaOperator::new(product.restrict(&lambda), lambda.clone()) {
            Ok(l) => canonical_pencil(&l),
            Err(e) => {
                report.record(trial, false, 0.0, "reconstruction", &e.to_string(), "");
                continue;
            }
        };
        let ok = example == reconstructed && example.restrict(&lambda) == product.restrict(&lambda);
        report.record(
            trial,
            ok,
            0.0,
            &format!("lambda0 = {lambda}"),
            &example.to_string(),
            &reconstructed.to_string(),
        );
    }
    Ok(report)
}

fn suite_lie_structure(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("lie-structure", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.trials {
        let x = rand_vector_field(&mut rng, cfg.dim, cfg.degree);
        let y = rand_vector_field(&mut rng, cfg.dim, cfg.degree);
        let lift_bracket = match x.commutator(&y) {
            Ok(b) => b.lie_lift(),
            Err(e) => {
                report.record(trial, false, 0.0, "commutator", &e.to_string(), "");
                continue;
            }
        };
        let bracket_lift = commutator(&x.lie_lift(), &y.lie_lift());
        let homomorphism = lift_bracket == bracket_lift;
        let lx = x.lie_lift();
        let divergenceless = lx.divergence().map(|d| d.is_zero()).unwrap_or(false);
        let anti = lx.adjoint() == lx.neg();
        let ok = homomorphism && divergenceless && anti;
        report.record(
            trial,
            ok,
            0.0,
            &format!("L_X = {lx}"),
            &format!("[L_X,L_Y] = {bracket_lift}"),
            &format!("L_[X,Y] = {lift_bracket}"),
        );
    }
    Ok(report)
}

fn suite_kk_extraction(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("kk-extraction", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dim.min(3);
    for trial in 0..cfg.trials {
        // a strictly diagonally dominant S is invertible everywhere
        let mut s = vec![vec![Expression::zero(); dim]; dim];
        for i in 0..dim {
            for k in i..dim {
                let e = if i == k {
                    &Expression::from_int(3) + &rand_trig_poly(&mut rng, dim, 1)
                } else {
                    rand_trig_poly(&mut rng, dim, 1).scale(&Rational::new(1, 3))
                };
                s[i][k] = e.clone();
                s[k][i] = e;
            }
        }
        let gamma: Vec<Expression> = (0..dim).map(|_| rand_trig_poly(&mut rng, dim, 1)).collect();
        let b: Vec<Expression> = (0..dim)
            .map(|i| {
                let mut acc = Expression::zero();
                for k in 0..dim {
                    acc = &acc + &(&s[i][k] * &gamma[k]);
                }
                acc
            })
            .collect();
        let c = rand_trig_poly(&mut rng, dim, 1);
        let st = SymbolTriple::new(s, b, c).expect("symmetric by construction");
        let extracted = match kk_extract(&st) {
            Ok(g) => g,
            Err(e) => {
                report.record(trial, false, 0.0, "kk_extract", &e.to_string(), "");
                continue;
            }
        };
        let mut ok = true;
        for k in 0..dim {
            if !expr_equal(extracted.component(k), &gamma[k], EqualityPolicy::Symbolic)? {
                ok = false;
            }
        }
        // the Brans–Dicke scalar of the induced data: C − Bⁱγᵢ
        let gamma_conn = Connection::new(gamma.clone()).expect("nonempty");
        let bd = brans_dicke(&st, &gamma_conn).map_err(|e| VerifyError::Failed(e.to_string()))?;
        let mut want = st.c().clone();
        for i in 0..dim {
            want = &want - &(&st.b()[i] * &gamma[i]);
        }
        if !expr_equal(&bd, &want, EqualityPolicy::Symbolic)? {
            ok = false;
        }
        report.record(
            trial,
            ok,
            0.0,
            "S strictly diagonally dominant, B = S·gamma",
            &format!(
                "extracted = ({})",
                extracted
                    .components()
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            &format!(
                "expected = ({})",
                gamma
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        );
    }
    Ok(report)
}

fn suite_projective_invariance(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("projective-invariance", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.trials {
        let gamma = rand_christoffel(&mut rng, cfg.dim, cfg.degree);
        let t: Vec<Expression> = (0..cfg.dim)
            .map(|_| rand_trig_poly(&mut rng, cfg.dim, cfg.degree))
            .collect();
        let mut shifted_entries = vec![vec![vec![Expression::zero(); cfg.dim]; cfg.dim]; cfg.dim];
        for i in 0..cfg.dim {
            for k in 0..cfg.dim {
                for m in 0..cfg.dim {
                    let mut e = gamma.entry(i, k, m).clone();
                    if i == m {
                        e = &e + &t[k];
                    }
                    if i == k {
                        e = &e + &t[m];
                    }
                    shifted_entries[i][k][m] = e;
                }
            }
        }
        let shifted = Christoffel::new(shifted_entries).expect("shift preserves symmetry");
        let pi = pi_symbols(&gamma);
        let pi_shifted = pi_symbols(&shifted);
        let invariant = pi == pi_shifted;
        let mut trace_free = true;
        for m in 0..cfg.dim {
            let mut trace = Expression::zero();
            for k in 0..cfg.dim {
                trace = &trace + pi.entry(k, k, m);
            }
            if !trace.is_zero() {
                trace_free = false;
            }
        }
        let lift_invariant = thomas_lift(&pi) == thomas_lift(&pi_shifted);
        let ok = invariant && trace_free && lift_invariant;
        report.record(
            trial,
            ok,
            0.0,
            "Christoffel with random projective shift",
            &format!("Pi invariant: {invariant}, trace-free: {trace_free}"),
            &format!("Thomas lift invariant: {lift_invariant}"),
        );
    }
    Ok(report)
}

fn suite_covariance(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("covariance", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let to_verify_err = |e: crate::geometry::GeometryError| VerifyError::Failed(e.to_string());
    for trial in 0..cfg.trials {
        // random invertible affine change: x'_j = Σ a_{ji} x_i with a
        // triangular-composed integer matrix, so the inverse is exact
        let dim = cfg.dim;
        let mut ok = true;
        let ch = rand_affine_change(&mut rng, dim);
        let op = rand_operator(&mut rng, dim, 2, cfg.degree);
        let conj = op_conjugate(&op, &ch).map_err(to_verify_err)?;
        // pullback consistency on a random density of mixed weight
        let d = Density::from_terms(vec![
            (Rational::zero(), rand_trig_poly(&mut rng, dim, cfg.degree)),
            (
                Rational::new(1, 2),
                rand_trig_poly(&mut rng, dim, cfg.degree),
            ),
        ]);
        let lhs = crate::densities::density_pullback(&op.apply(&d), &ch)
            .map_err(|e| VerifyError::Failed(e.to_string()))?;
        let rhs = conj.apply(
            &crate::densities::density_pullback(&d, &ch)
                .map_err(|e| VerifyError::Failed(e.to_string()))?,
        );
        if !lhs.sub(&rhs).is_zero() {
            ok = false;
        }
        // γ-transform composes along `then`
        let gamma = Connection::new((0..dim).map(|_| rand_trig_poly(&mut rng, dim, 1)).collect())
            .expect("nonempty");
        let ch2 = rand_affine_change(&mut rng, dim);
        let composed = ch
            .then(&ch2)
            .map_err(|e| VerifyError::Failed(e.to_string()))?;
        let two_step = gamma_transform(&gamma_transform(&gamma, &ch).map_err(to_verify_err)?, &ch2)
            .map_err(to_verify_err)?;
        let one_step = gamma_transform(&gamma, &composed).map_err(to_verify_err)?;
        for j in 0..dim {
            if !expr_equal(
                two_step.component(j),
                one_step.component(j),
                EqualityPolicy::Symbolic,
            )? {
                ok = false;
            }
        }
        report.record(
            trial,
            ok,
            0.0,
            &format!("affine chart change, operator = {op}"),
            "pullback/conjugation and transform composition",
            "exact agreement",
        );
    }
    Ok(report)
}

fn suite_integrator_consistency(cfg: &RandomSuiteConfig) -> Result<SuiteReport, VerifyError> {
    let mut report = SuiteReport::new("integrator-consistency", cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dim.min(2);
    for trial in 0..cfg.trials {
        let e = rand_trig_poly(&mut rng, dim, cfg.degree.max(6));
        let exact = match exact_torus(&e, dim) {
            Ok(Some(v)) => v,
            _ => {
                report.record(
                    trial,
                    false,
                    0.0,
                    "exact path unavailable",
                    &e.to_string(),
                    "",
                );
                continue;
            }
        };
        let quad = quadrature_torus(&e, dim)?;
        let residual = (exact.to_f64() - quad.to_f64()).abs();
        let ok = residual <= INTEGRATOR_TOL * (1.0 + exact.to_f64().abs());
        report.record(
            trial,
            ok,
            residual,
            &format!("integrand = {e}"),
            &exact.to_string(),
            &quad.to_f64().to_string(),
        );
    }
    Ok(report)
}

/// A random invertible affine chart change with exact rational inverse.
fn rand_affine_change(rng: &mut ChaCha20Rng, dim: usize) -> crate::densities::ChartChange {
    // compose unit upper- and lower-triangular shears with a diagonal
    // scaling: always invertible, inverse computed exactly
    let mut upper = vec![vec![Rational::zero(); dim]; dim];
    let mut lower = vec![vec![Rational::zero(); dim]; dim];
    for i in 0..dim {
        upper[i][i] = Rational::one();
        lower[i][i] = Rational::one();
        for k in (i + 1)..dim {
            upper[i][k] = Rational::from_int(rng.gen_range(-2i64..=2));
            lower[k][i] = Rational::from_int(rng.gen_range(-2i64..=2));
        }
    }
    let scale: Vec<Rational> = (0..dim)
        .map(|_| {
            let v = rng.gen_range(1i64..=3);
            if rng.gen_bool(0.5) {
                Rational::new(1, v)
            } else {
                Rational::from_int(v)
            }
        })
        .collect();
    // forward matrix M = upper · lower · diag(scale)
    let mut m = vec![vec![Rational::zero(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Rational::zero();
            for k in 0..dim {
                acc = &acc + &(&upper[i][k] * &lower[k][j]);
            }
            m[i][j] = &acc * &scale[j];
        }
    }
    let forward: Vec<Expression> = (0..dim)
        .map(|i| {
            let mut acc = Expression::zero();
            for (j, mij) in m[i].iter().enumerate() {
                acc = &acc + &Expression::coord(j).scale(mij);
            }
            acc
        })
        .collect();
    let inv = invert_rational_matrix(&m);
    let inverse: Vec<Expression> = (0..dim)
        .map(|i| {
            let mut acc = Expression::zero();
            for (j, mij) in inv[i].iter().enumerate() {
                acc = &acc + &Expression::coord(j).scale(mij);
            }
            acc
        })
        .collect();
    crate::densities::ChartChange::new(forward, inverse).expect("affine change is invertible")
}

/// Exact Gauss–Jordan inverse of a rational matrix with nonzero determinant.
fn invert_rational_matrix(m: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut inv = vec![vec![Rational::zero(); n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .expect("matrix is invertible");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone().recip();
        for j in 0..n {
            a[col][j] = &a[col][j] * &p;
            inv[col][j] = &inv[col][j] * &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    a[r][j] = &a[r][j] - &(&f * &a[col][j]);
                    inv[r][j] = &inv[r][j] - &(&f * &inv[col][j]);
                }
            }
        }
    }
    inv
}
