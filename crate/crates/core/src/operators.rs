//! Normal-ordered differential operators on the density algebra.
//!
//! An operator is a finite sum `Σ c_{α,k}(x)·∂^α·ŵ^k` with all coefficient
//! functions moved to the left (normal order). ∂ᵢ and ŵ commute, so the
//! normal form is unique and composition reduces to the multivariate Leibniz
//! rule. The adjoint anti-involution is induced by the canonical scalar
//! product on densities: `xⁱ* = xⁱ`, `∂ᵢ* = −∂ᵢ`, `ŵ* = 1 − ŵ`.

use crate::densities::Density;
use crate::expr::{expr_equal, tree, Chart, EqualityPolicy, ExprError, Expression};
use crate::rational::Rational;
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from operator construction and shape-sensitive extractions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("multi-index has length {got}, expected the chart dimension {expected}")]
    BadKey { expected: usize, got: usize },
    #[error("not a vector field on densities: unexpected term {0}")]
    NotVectorField(String),
    #[error("operator lacks the canonical second-order shape: {0}")]
    NotCanonical(String),
    #[error("symbol matrix is not symmetric in components ({0}, {1})")]
    AsymmetricSymbol(usize, usize),
}

/// Monomial key `∂^α ŵ^k` of a normal-ordered term.
///
/// Keys order by total grade `|α| + k`, then by `α` lexicographically, then
/// by `k`; displays therefore run from the identity upward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpKey {
    pub alpha: Vec<u32>,
    pub wpow: u32,
}

impl OpKey {
    pub fn new(alpha: Vec<u32>, wpow: u32) -> Self {
        OpKey { alpha, wpow }
    }

    pub fn identity(dim: usize) -> Self {
        OpKey {
            alpha: vec![0; dim],
            wpow: 0,
        }
    }

    /// Total derivative order `|α|`.
    pub fn order(&self) -> u32 {
        self.alpha.iter().sum()
    }

    fn grade(&self) -> u32 {
        self.order() + self.wpow
    }
}

impl PartialOrd for OpKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.grade()
            .cmp(&other.grade())
            .then_with(|| self.alpha.cmp(&other.alpha))
            .then_with(|| self.wpow.cmp(&other.wpow))
    }
}

/// A differential operator `Σ c_{α,k}(x)·∂^α·ŵ^k` on the density algebra
/// over a chart of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffOperator {
    dim: usize,
    terms: BTreeMap<OpKey, Expression>,
}

impl DiffOperator {
    pub fn zero(dim: usize) -> Self {
        DiffOperator {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// The identity operator.
    pub fn identity(dim: usize) -> Self {
        DiffOperator::scalar(dim, Expression::one())
    }

    /// Multiplication by a coefficient function.
    pub fn scalar(dim: usize, f: Expression) -> Self {
        let mut op = DiffOperator::zero(dim);
        op.add_term(OpKey::identity(dim), f);
        op
    }

    /// The partial derivative ∂ᵢ (0-based index, must be `< dim`).
    pub fn partial(dim: usize, i: usize) -> Result<Self, OperatorError> {
        if i >= dim {
            return Err(OperatorError::Expr(ExprError::IndexOutOfRange {
                index: i,
                dim,
            }));
        }
        let mut alpha = vec![0; dim];
        alpha[i] = 1;
        let mut op = DiffOperator::zero(dim);
        op.add_term(OpKey::new(alpha, 0), Expression::one());
        Ok(op)
    }

    /// The weight operator ŵ.
    pub fn weight(dim: usize) -> Self {
        let mut op = DiffOperator::zero(dim);
        op.add_term(OpKey::new(vec![0; dim], 1), Expression::one());
        op
    }

    pub fn from_terms<I>(dim: usize, iter: I) -> Result<Self, OperatorError>
    where
        I: IntoIterator<Item = (OpKey, Expression)>,
    {
        let mut op = DiffOperator::zero(dim);
        for (key, coeff) in iter {
            if key.alpha.len() != dim {
                return Err(OperatorError::BadKey {
                    expected: dim,
                    got: key.alpha.len(),
                });
            }
            op.add_term(key, coeff);
        }
        Ok(op)
    }

    /// Adds `coeff·∂^α·ŵ^k`, merging with an existing term of the same key.
    pub fn add_term(&mut self, key: OpKey, coeff: Expression) {
        debug_assert_eq!(key.alpha.len(), self.dim);
        if coeff.is_zero() {
            return;
        }
        let slot = self
            .terms
            .entry(key.clone())
            .or_insert_with(Expression::zero);
        *slot = &*slot + &coeff;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Derivative order (max `|α|`); the zero operator has order 0.
    pub fn order(&self) -> u32 {
        self.terms.keys().map(|k| k.order()).max().unwrap_or(0)
    }

    /// Highest power of ŵ appearing.
    pub fn w_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.wpow).max().unwrap_or(0)
    }

    /// Terms in ascending key order.
    pub fn terms(&self) -> impl Iterator<Item = (&OpKey, &Expression)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, key: &OpKey) -> Option<&Expression> {
        self.terms.get(key)
    }

    pub fn neg(&self) -> Self {
        DiffOperator {
            dim: self.dim,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions must match");
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return DiffOperator::zero(self.dim);
        }
        DiffOperator {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(k, e)| (k.clone(), e.scale(c)))
                .collect(),
        }
    }

    /// Left multiplication by a coefficient function.
    pub fn mul_expr(&self, f: &Expression) -> Self {
        let mut out = DiffOperator::zero(self.dim);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * f);
        }
        out
    }

    /// Operator composition `self ∘ other` in normal order, via the
    /// multivariate Leibniz rule
    /// `∂^α ∘ c = Σ_{β ≤ α} C(α,β)·(∂^{α−β}c)·∂^β`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions must match");
        let mut out = DiffOperator::zero(self.dim);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                for beta in sub_multi_indices(&ka.alpha) {
                    let gamma: Vec<u32> = ka.alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
                    let weight = multi_binom(&ka.alpha, &beta);
                    let coeff = ca * &diff_multi(cb, &gamma).scale(&weight);
                    if coeff.is_zero() {
                        continue;
                    }
                    let alpha: Vec<u32> = beta.iter().zip(&kb.alpha).map(|(b, a)| b + a).collect();
                    out.add_term(OpKey::new(alpha, ka.wpow + kb.wpow), coeff);
                }
            }
        }
        out
    }

    /// Adjoint with respect to the canonical scalar product: the unique
    /// anti-involution with `xⁱ* = xⁱ`, `∂ᵢ* = −∂ᵢ`, `ŵ* = 1 − ŵ`. Each
    /// normal-ordered term maps to
    /// `(c·∂^α·ŵ^k)* = (1−ŵ)^k·(−1)^{|α|}·∂^α ∘ c`, re-normal-ordered.
    pub fn adjoint(&self) -> Self {
        let mut out = DiffOperator::zero(self.dim);
        for (key, c) in &self.terms {
            let sign_alpha = if key.order() % 2 == 0 { 1 } else { -1 };
            for beta in sub_multi_indices(&key.alpha) {
                let gamma: Vec<u32> = key.alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
                let dcoeff = diff_multi(c, &gamma);
                if dcoeff.is_zero() {
                    continue;
                }
                let base = multi_binom(&key.alpha, &beta);
                for j in 0..=key.wpow {
                    let sign_j = if j % 2 == 0 { 1 } else { -1 };
                    let w = &base
                        * &Rational::from_int(sign_alpha * sign_j * binom_u(key.wpow, j) as i64);
                    out.add_term(OpKey::new(beta.clone(), j), dcoeff.scale(&w));
                }
            }
        }
        out
    }

    /// Applies the operator to a density: a term `c·∂^α·ŵ^k` sends
    /// `s·t^λ` to `c·λ^k·(∂^α s)·t^λ`.
    pub fn apply(&self, d: &Density) -> Density {
        let mut out = Density::zero();
        for (key, c) in &self.terms {
            for (lambda, s) in d.terms() {
                let ds = diff_multi(s, &key.alpha);
                if ds.is_zero() {
                    continue;
                }
                let scaled = ds.scale(&lambda.pow(key.wpow as i64));
                out.add_term(lambda.clone(), &scaled * c);
            }
        }
        out
    }

    /// Restriction to the subspace of weight λ: ŵ becomes the scalar λ.
    pub fn restrict(&self, lambda: &Rational) -> Self {
        let mut out = DiffOperator::zero(self.dim);
        for (key, c) in &self.terms {
            out.add_term(
                OpKey::new(key.alpha.clone(), 0),
                c.scale(&lambda.pow(key.wpow as i64)),
            );
        }
        out
    }

    /// Termwise equality of two operators under the given policy.
    pub fn equal(&self, other: &Self, policy: EqualityPolicy) -> Result<bool, ExprError> {
        let diff = self.sub(other);
        for (_, c) in diff.terms() {
            if !expr_equal(c, &Expression::zero(), policy)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether the operator equals its adjoint under the given policy.
    pub fn is_self_adjoint(&self, policy: EqualityPolicy) -> Result<bool, ExprError> {
        self.equal(&self.adjoint(), policy)
    }

    /// Divergence of a vector field on densities `K̂ = Kⁱ∂ᵢ + K⁰ŵ`:
    /// `div K̂ = ∂ᵢKⁱ − K⁰`. Errors unless the operator has exactly that
    /// first-order, ŵ-linear shape with no constant term.
    pub fn divergence(&self) -> Result<Expression, OperatorError> {
        let mut div = Expression::zero();
        for (key, c) in &self.terms {
            match (key.order(), key.wpow) {
                (1, 0) => {
                    let i = key.alpha.iter().position(|&a| a == 1).unwrap();
                    div = &div + &c.diff(i);
                }
                (0, 1) => div = &div - c,
                _ => {
                    return Err(OperatorError::NotVectorField(format!(
                        "{}",
                        TermDisplay {
                            key,
                            coeff: c,
                            names: &default_names
                        }
                    )))
                }
            }
        }
        Ok(div)
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
        for (k, (key, c)) in self.terms.iter().enumerate() {
            let (negative, text) = render_term(key, c, names);
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            out.push_str(&text);
        }
        out
    }
}

impl std::fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render_names(&default_names))
    }
}

fn default_names(i: usize) -> String {
    format!("x{}", i + 1)
}

/// Renders one normal-ordered term as `coeff*d1^a*…*w^k`.
fn render_term(key: &OpKey, coeff: &Expression, names: &dyn Fn(usize) -> String) -> (bool, String) {
    let (negative, factor) = tree::render_signed_factor(coeff.frac(), names);
    let mut symbols: Vec<String> = Vec::new();
    for (i, &a) in key.alpha.iter().enumerate() {
        match a {
            0 => {}
            1 => symbols.push(format!("d{}", i + 1)),
            _ => symbols.push(format!("d{}^{}", i + 1, a)),
        }
    }
    match key.wpow {
        0 => {}
        1 => symbols.push("w".to_string()),
        k => symbols.push(format!("w^{k}")),
    }
    if symbols.is_empty() {
        return (negative, factor);
    }
    let tail = symbols.join("*");
    if factor == "1" {
        (negative, tail)
    } else {
        (negative, format!("{factor}*{tail}"))
    }
}

struct TermDisplay<'a> {
    key: &'a OpKey,
    coeff: &'a Expression,
    names: &'a dyn Fn(usize) -> String,
}

impl std::fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (negative, text) = render_term(self.key, self.coeff, self.names);
        if negative {
            write!(f, "-{text}")
        } else {
            f.write_str(&text)
        }
    }
}

// ---------------------------------------------------------------------------
// Multi-index helpers
// ---------------------------------------------------------------------------

/// All β with 0 ≤ βᵢ ≤ αᵢ, in mixed-radix order.
fn sub_multi_indices(alpha: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; alpha.len()]];
    for (i, &a) in alpha.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let base = out.clone();
        for v in 1..=a {
            for b in &base {
                let mut next = b.clone();
                next[i] = v;
                out.push(next);
            }
        }
    }
    out
}

fn binom_u(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Product of componentwise binomial coefficients `Π C(αᵢ, βᵢ)`.
fn multi_binom(alpha: &[u32], beta: &[u32]) -> Rational {
    let mut acc = 1u64;
    for (a, b) in alpha.iter().zip(beta) {
        acc *= binom_u(*a, *b);
    }
    Rational::from_int(acc as i64)
}

/// Iterated partial derivative `∂^γ e`.
pub(crate) fn diff_multi(e: &Expression, gamma: &[u32]) -> Expression {
    let mut out = e.clone();
    for (i, &g) in gamma.iter().enumerate() {
        for _ in 0..g {
            if out.is_zero() {
                return out;
            }
            out = out.diff(i);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Canonical second-order form
// ---------------------------------------------------------------------------

/// The data `(S^{ik}, Bⁱ, C)` of a canonical self-adjoint second-order
/// operator: a symmetric contravariant symbol, a vector part, and a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTriple {
    dim: usize,
    s: Vec<Vec<Expression>>,
    b: Vec<Expression>,
    c: Expression,
}

impl SymbolTriple {
    /// Validates shape and symmetry of `s` (structural, after normal form).
    pub fn new(
        s: Vec<Vec<Expression>>,
        b: Vec<Expression>,
        c: Expression,
    ) -> Result<Self, OperatorError> {
        let dim = b.len();
        if s.len() != dim || s.iter().any(|row| row.len() != dim) {
            return Err(OperatorError::BadKey {
                expected: dim,
                got: s.len(),
            });
        }
        for i in 0..dim {
            for k in (i + 1)..dim {
                if s[i][k] != s[k][i] {
                    return Err(OperatorError::AsymmetricSymbol(i, k));
                }
            }
        }
        Ok(SymbolTriple { dim, s, b, c })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> &[Vec<Expression>] {
        &self.s
    }

    pub fn b(&self) -> &[Expression] {
        &self.b
    }

    pub fn c(&self) -> &Expression {
        &self.c
    }
}

/// Builds the canonical self-adjoint operator of the triple:
///
/// `Â = S^{ik}∂ᵢ∂ₖ + (∂ₖS^{ki})∂ᵢ + (2ŵ−1)Bⁱ∂ᵢ + ŵ(∂ᵢBⁱ) + ŵ(ŵ−1)C`.
///
/// Every operator of this shape is self-adjoint, exactly, termwise.
pub fn build_canonical(st: &SymbolTriple) -> DiffOperator {
    let n = st.dim;
    let mut op = DiffOperator::zero(n);
    let two = Rational::from_int(2);
    for i in 0..n {
        for k in i..n {
            let mut alpha = vec![0; n];
            alpha[i] += 1;
            alpha[k] += 1;
            let coeff = if i == k {
                st.s[i][k].clone()
            } else {
                st.s[i][k].scale(&two)
            };
            op.add_term(OpKey::new(alpha, 0), coeff);
        }
    }
    let mut div_b = Expression::zero();
    for i in 0..n {
        let mut ei = vec![0; n];
        ei[i] = 1;
        // ∂ₖ S^{ki} for this i
        let mut div_s = Expression::zero();
        for k in 0..n {
            div_s = &div_s + &st.s[k][i].diff(k);
        }
        op.add_term(OpKey::new(ei.clone(), 0), &div_s - &st.b[i]);
        op.add_term(OpKey::new(ei, 1), st.b[i].scale(&two));
        div_b = &div_b + &st.b[i].diff(i);
    }
    let zero_alpha = vec![0; n];
    op.add_term(OpKey::new(zero_alpha.clone(), 1), &div_b - &st.c);
    op.add_term(OpKey::new(zero_alpha, 2), st.c.clone());
    op
}

/// Reads the triple back off an operator in canonical shape. Errors when the
/// operator has terms outside the canonical key set (order > 2, ŵ-degree
/// > 2, or mixed terms like ŵ∂∂).
pub fn extract_symbol(op: &DiffOperator) -> Result<SymbolTriple, OperatorError> {
    let n = op.dim();
    let mut s = vec![vec![Expression::zero(); n]; n];
    let mut b = vec![Expression::zero(); n];
    let mut c = Expression::zero();
    let half = Rational::new(1, 2);
    for (key, coeff) in op.terms() {
        match (key.order(), key.wpow) {
            (2, 0) => {
                let mut idx = Vec::new();
                for (i, &a) in key.alpha.iter().enumerate() {
                    for _ in 0..a {
                        idx.push(i);
                    }
                }
                let (i, k) = (idx[0], idx[1]);
                if i == k {
                    s[i][i] = coeff.clone();
                } else {
                    s[i][k] = coeff.scale(&half);
                    s[k][i] = s[i][k].clone();
                }
            }
            (1, 1) => {
                let i = key.alpha.iter().position(|&a| a == 1).unwrap();
                b[i] = coeff.scale(&half);
            }
            (0, 2) => c = coeff.clone(),
            (1, 0) | (0, 1) | (0, 0) => {} // dependent parts of the canonical form
            _ => {
                return Err(OperatorError::NotCanonical(format!(
                    "term {}",
                    TermDisplay {
                        key,
                        coeff,
                        names: &default_names
                    }
                )))
            }
        }
    }
    SymbolTriple::new(s, b, c)
}

/// Principal (second-order) symbol of an operator with no ŵ in its leading
/// terms: the symmetric matrix `S^{ik}` with `Â = S^{ik}∂ᵢ∂ₖ + lower order`.
pub fn principal_symbol(op: &DiffOperator) -> Result<Vec<Vec<Expression>>, OperatorError> {
    if op.order() > 2 {
        return Err(OperatorError::NotCanonical(format!(
            "order {} operator, expected at most 2",
            op.order()
        )));
    }
    let n = op.dim();
    let mut s = vec![vec![Expression::zero(); n]; n];
    let half = Rational::new(1, 2);
    for (key, coeff) in op.terms() {
        if key.order() != 2 {
            continue;
        }
        if key.wpow != 0 {
            return Err(OperatorError::NotCanonical(
                "second-order term carries a power of ŵ".to_string(),
            ));
        }
        let mut idx = Vec::new();
        for (i, &a) in key.alpha.iter().enumerate() {
            for _ in 0..a {
                idx.push(i);
            }
        }
        let (i, k) = (idx[0], idx[1]);
        if i == k {
            s[i][i] = coeff.clone();
        } else {
            s[i][k] = coeff.scale(&half);
            s[k][i] = s[i][k].clone();
        }
    }
    Ok(s)
}

/// Commutator `[A, B] = A∘B − B∘A`.
pub fn commutator(a: &DiffOperator, b: &DiffOperator) -> DiffOperator {
    a.compose(b).sub(&b.compose(a))
}
