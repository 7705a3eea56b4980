//! JSON documents for every structure the CLI exchanges.
//!
//! Documents carry coefficients as strings in the expression DSL (so every
//! file is readable and diffable) and exact rationals as `"p/q"` strings.
//! Loading parses against a [`Chart`], restoring the validated in-memory
//! types; saving renders canonical normal forms, so save∘load is the
//! identity on documents produced by this module.
//!
//! Index conventions match the surface syntax: coordinates and tensor slots
//! are 1-based, and the vertical coordinate `x⁰` of an extended chart is
//! index 0. Christoffel-like tables store only the lower-triangular lower
//! pair (`k ≤ m`); omitted entries are zero.

use crate::densities::{ChartChange, Density};
use crate::dsl::{parse_expression, ParseError};
use crate::expr::{Chart, Expression};
use crate::geometry::{
    Christoffel, Connection, ExtendedChristoffel, GeometryError, Metric, PiSymbols,
};
use crate::operators::{DiffOperator, OpKey, OperatorError, SymbolTriple};
use crate::pencils::{LambdaOperator, PencilError, VectorField};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while converting documents to validated values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JsonError {
    #[error("{field}: {source}")]
    Coefficient { field: String, source: ParseError },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Pencil(#[from] PencilError),
}

fn coeff(field: impl Into<String>, text: &str, chart: &Chart) -> Result<Expression, JsonError> {
    parse_expression(text, chart).map_err(|source| JsonError::Coefficient {
        field: field.into(),
        source,
    })
}

fn rational(field: impl Into<String>, text: &str) -> Result<Rational, JsonError> {
    text.trim().parse().map_err(|_| JsonError::Invalid {
        field: field.into(),
        message: format!("invalid rational literal {text:?}"),
    })
}

fn matrix(
    field: &str,
    rows: &[Vec<String>],
    chart: &Chart,
) -> Result<Vec<Vec<Expression>>, JsonError> {
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let mut r = Vec::with_capacity(row.len());
        for (k, text) in row.iter().enumerate() {
            r.push(coeff(
                format!("{field}[{}][{}]", i + 1, k + 1),
                text,
                chart,
            )?);
        }
        out.push(r);
    }
    Ok(out)
}

fn vector(field: &str, items: &[String], chart: &Chart) -> Result<Vec<Expression>, JsonError> {
    items
        .iter()
        .enumerate()
        .map(|(i, text)| coeff(format!("{field}[{}]", i + 1), text, chart))
        .collect()
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

/// `{"terms": [{"weight": "1/2", "coeff": "sin(x1)"}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityDoc {
    pub terms: Vec<DensityTermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTermDoc {
    pub weight: String,
    pub coeff: String,
}

pub fn density_to_doc(d: &Density) -> DensityDoc {
    DensityDoc {
        terms: d
            .terms()
            .map(|(w, c)| DensityTermDoc {
                weight: w.to_string(),
                coeff: c.to_string(),
            })
            .collect(),
    }
}

pub fn density_from_doc(doc: &DensityDoc, chart: &Chart) -> Result<Density, JsonError> {
    let mut terms = Vec::with_capacity(doc.terms.len());
    for (i, term) in doc.terms.iter().enumerate() {
        let w = rational(format!("terms[{}].weight", i + 1), &term.weight)?;
        let c = coeff(format!("terms[{}].coeff", i + 1), &term.coeff, chart)?;
        terms.push((w, c));
    }
    Ok(Density::from_terms(terms))
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Mirror of the normal-ordered term map: one entry per `∂^α ŵ^k` basis
/// element, `{"alpha": [2,0], "w": 1, "coeff": "sin(x1)"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub terms: Vec<OperatorTermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorTermDoc {
    pub alpha: Vec<u32>,
    pub w: u32,
    pub coeff: String,
}

pub fn operator_to_doc(op: &DiffOperator) -> OperatorDoc {
    OperatorDoc {
        terms: op
            .terms()
            .map(|(key, c)| OperatorTermDoc {
                alpha: key.alpha.clone(),
                w: key.wpow,
                coeff: c.to_string(),
            })
            .collect(),
    }
}

pub fn operator_from_doc(doc: &OperatorDoc, chart: &Chart) -> Result<DiffOperator, JsonError> {
    let dim = chart.dim();
    let mut op = DiffOperator::zero(dim);
    for (i, term) in doc.terms.iter().enumerate() {
        if term.alpha.len() != dim {
            return Err(JsonError::Invalid {
                field: format!("terms[{}].alpha", i + 1),
                message: format!(
                    "has {} entries, expected the chart dimension {dim}",
                    term.alpha.len()
                ),
            });
        }
        let c = coeff(format!("terms[{}].coeff", i + 1), &term.coeff, chart)?;
        op.add_term(OpKey::new(term.alpha.clone(), term.w), c);
    }
    Ok(op)
}

// ---------------------------------------------------------------------------
// Symbols and pencils
// ---------------------------------------------------------------------------

/// The canonical symbol triple `(S^{ik}, Bⁱ, C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTripleDoc {
    pub s: Vec<Vec<String>>,
    pub b: Vec<String>,
    pub c: String,
}

pub fn symbol_triple_to_doc(st: &SymbolTriple) -> SymbolTripleDoc {
    SymbolTripleDoc {
        s: st
            .s()
            .iter()
            .map(|row| row.iter().map(|e| e.to_string()).collect())
            .collect(),
        b: st.b().iter().map(|e| e.to_string()).collect(),
        c: st.c().to_string(),
    }
}

pub fn symbol_triple_from_doc(
    doc: &SymbolTripleDoc,
    chart: &Chart,
) -> Result<SymbolTriple, JsonError> {
    let s = matrix("s", &doc.s, chart)?;
    let b = vector("b", &doc.b, chart)?;
    let c = coeff("c", &doc.c, chart)?;
    Ok(SymbolTriple::new(s, b, c)?)
}

/// Input of the pencil reconstruction: the weight-λ₀ operator
/// `A^{ik}∂ᵢ∂ₖ + Aⁱ∂ᵢ + A` by coefficient blocks. A non-symmetric `upper`
/// is symmetrized, matching the commuting derivatives it multiplies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilInputDoc {
    pub upper: Vec<Vec<String>>,
    pub first: Vec<String>,
    pub scalar: String,
    pub lambda0: String,
}

pub fn pencil_input_from_doc(
    doc: &PencilInputDoc,
    chart: &Chart,
) -> Result<LambdaOperator, JsonError> {
    let dim = chart.dim();
    if doc.upper.len() != dim || doc.upper.iter().any(|r| r.len() != dim) {
        return Err(JsonError::Invalid {
            field: "upper".into(),
            message: format!("expected a {dim}×{dim} matrix"),
        });
    }
    if doc.first.len() != dim {
        return Err(JsonError::Invalid {
            field: "first".into(),
            message: format!("expected {dim} components"),
        });
    }
    let upper = matrix("upper", &doc.upper, chart)?;
    let first = vector("first", &doc.first, chart)?;
    let scalar = coeff("scalar", &doc.scalar, chart)?;
    let lambda0 = rational("lambda0", &doc.lambda0)?;
    let mut op = DiffOperator::zero(dim);
    for i in 0..dim {
        for k in i..dim {
            let mut alpha = vec![0; dim];
            alpha[i] += 1;
            alpha[k] += 1;
            let c = if i == k {
                upper[i][i].clone()
            } else {
                &upper[i][k] + &upper[k][i]
            };
            op.add_term(OpKey::new(alpha, 0), c);
        }
        let mut alpha = vec![0; dim];
        alpha[i] = 1;
        op.add_term(OpKey::new(alpha, 0), first[i].clone());
    }
    op.add_term(OpKey::identity(dim), scalar);
    Ok(LambdaOperator::new(op, lambda0)?)
}

// ---------------------------------------------------------------------------
// Fields, connections, chart changes
// ---------------------------------------------------------------------------

/// A vector field or a connection: a list of component expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentsDoc {
    pub components: Vec<String>,
}

pub fn vector_field_to_doc(x: &VectorField) -> ComponentsDoc {
    ComponentsDoc {
        components: x.components().iter().map(|e| e.to_string()).collect(),
    }
}

pub fn vector_field_from_doc(doc: &ComponentsDoc, chart: &Chart) -> Result<VectorField, JsonError> {
    check_component_count("components", doc.components.len(), chart.dim())?;
    Ok(VectorField::new(vector(
        "components",
        &doc.components,
        chart,
    )?)?)
}

pub fn connection_to_doc(gamma: &Connection) -> ComponentsDoc {
    ComponentsDoc {
        components: gamma.components().iter().map(|e| e.to_string()).collect(),
    }
}

pub fn connection_from_doc(doc: &ComponentsDoc, chart: &Chart) -> Result<Connection, JsonError> {
    check_component_count("components", doc.components.len(), chart.dim())?;
    Ok(Connection::new(vector(
        "components",
        &doc.components,
        chart,
    )?)?)
}

fn check_component_count(field: &str, got: usize, dim: usize) -> Result<(), JsonError> {
    if got != dim {
        return Err(JsonError::Invalid {
            field: field.into(),
            message: format!("has {got} components, expected the chart dimension {dim}"),
        });
    }
    Ok(())
}

/// `{"forward": ["x1 + x2", …], "inverse": […]}` — the inverse map is
/// supplied, never derived, and is validated on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartChangeDoc {
    pub forward: Vec<String>,
    pub inverse: Vec<String>,
}

pub fn chart_change_to_doc(ch: &ChartChange) -> ChartChangeDoc {
    ChartChangeDoc {
        forward: ch.forward().iter().map(|e| e.to_string()).collect(),
        inverse: ch.inverse().iter().map(|e| e.to_string()).collect(),
    }
}

pub fn chart_change_from_doc(
    doc: &ChartChangeDoc,
    chart: &Chart,
) -> Result<ChartChange, JsonError> {
    check_component_count("forward", doc.forward.len(), chart.dim())?;
    check_component_count("inverse", doc.inverse.len(), chart.dim())?;
    let forward = vector("forward", &doc.forward, chart)?;
    let inverse = vector("inverse", &doc.inverse, chart)?;
    ChartChange::new(forward, inverse).map_err(|e| JsonError::Invalid {
        field: "forward/inverse".into(),
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Connections with two lower indices
// ---------------------------------------------------------------------------

/// Christoffel-like symbol table. Indices are 1-based; only `k ≤ m` entries
/// are stored (the lower pair is symmetric) and omitted entries are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelDoc {
    pub dim: usize,
    pub symbols: Vec<ChristoffelEntryDoc>,
}

/// One symbol `Γ^i_{km}`: `{"upper": i, "lower": [k, m], "coeff": "…"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelEntryDoc {
    pub upper: usize,
    pub lower: [usize; 2],
    pub coeff: String,
}

fn table_to_doc(dim: usize, entry: impl Fn(usize, usize, usize) -> Expression) -> ChristoffelDoc {
    let mut symbols = Vec::new();
    for i in 0..dim {
        for k in 0..dim {
            for m in k..dim {
                let e = entry(i, k, m);
                if !e.is_zero() {
                    symbols.push(ChristoffelEntryDoc {
                        upper: i + 1,
                        lower: [k + 1, m + 1],
                        coeff: e.to_string(),
                    });
                }
            }
        }
    }
    ChristoffelDoc { dim, symbols }
}

pub fn christoffel_to_doc(gamma: &Christoffel) -> ChristoffelDoc {
    table_to_doc(gamma.dim(), |i, k, m| gamma.entry(i, k, m).clone())
}

pub fn pi_to_doc(pi: &PiSymbols) -> ChristoffelDoc {
    table_to_doc(pi.dim(), |i, k, m| pi.entry(i, k, m).clone())
}

fn table_from_doc(
    doc: &ChristoffelDoc,
    chart: &Chart,
) -> Result<Vec<Vec<Vec<Expression>>>, JsonError> {
    let dim = doc.dim;
    if dim != chart.dim() {
        return Err(JsonError::Invalid {
            field: "dim".into(),
            message: format!("document is {dim}-dimensional, chart is {}", chart.dim()),
        });
    }
    let mut entries = vec![vec![vec![Expression::zero(); dim]; dim]; dim];
    let mut seen = std::collections::BTreeSet::new();
    for (idx, sym) in doc.symbols.iter().enumerate() {
        let field = format!("symbols[{}]", idx + 1);
        let (i, k, m) = (sym.upper, sym.lower[0], sym.lower[1]);
        if i == 0 || i > dim || k == 0 || k > dim || m == 0 || m > dim {
            return Err(JsonError::Invalid {
                field,
                message: format!("indices ({i}, [{k}, {m}]) out of range 1..={dim}"),
            });
        }
        if k > m {
            return Err(JsonError::Invalid {
                field,
                message: format!(
                    "lower pair [{k}, {m}] must be stored with k ≤ m (symmetric storage)"
                ),
            });
        }
        if !seen.insert((i, k, m)) {
            return Err(JsonError::Invalid {
                field,
                message: format!("duplicate entry for ({i}, [{k}, {m}])"),
            });
        }
        let e = coeff(format!("{field}.coeff"), &sym.coeff, chart)?;
        entries[i - 1][k - 1][m - 1] = e.clone();
        entries[i - 1][m - 1][k - 1] = e;
    }
    Ok(entries)
}

pub fn christoffel_from_doc(doc: &ChristoffelDoc, chart: &Chart) -> Result<Christoffel, JsonError> {
    Ok(Christoffel::new(table_from_doc(doc, chart)?)?)
}

/// The Thomas lift on the extended chart. Base indices stay 1-based; the
/// vertical coordinate `x⁰ = log t` is index 0. Output-only: the lift is
/// always recomputed from `Π`, never loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedChristoffelDoc {
    pub dim: usize,
    pub symbols: Vec<ChristoffelEntryDoc>,
}

pub fn extended_to_doc(hat: &ExtendedChristoffel) -> ExtendedChristoffelDoc {
    let n = hat.dim();
    let ext = n + 1;
    // internal slot n is the vertical coordinate; document index 0
    let doc_index = |slot: usize| if slot == n { 0 } else { slot + 1 };
    let mut symbols = Vec::new();
    for a in 0..ext {
        for b in 0..ext {
            for c in b..ext {
                let e = hat.entry(a, b, c);
                if !e.is_zero() {
                    let (db, dc) = (doc_index(b), doc_index(c));
                    let lower = if db <= dc { [db, dc] } else { [dc, db] };
                    symbols.push(ChristoffelEntryDoc {
                        upper: doc_index(a),
                        lower,
                        coeff: e.to_string(),
                    });
                }
            }
        }
    }
    symbols.sort_by_key(|s| (s.upper, s.lower));
    ExtendedChristoffelDoc { dim: n, symbols }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// `{"lower": [[…]]}` with an optional explicit inverse. Without `upper`
/// the inverse is computed symbolically (charts of dimension ≤ 3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDoc {
    pub lower: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<Vec<String>>>,
}

pub fn metric_to_doc(g: &Metric) -> MetricDoc {
    MetricDoc {
        lower: g
            .lower()
            .iter()
            .map(|row| row.iter().map(|e| e.to_string()).collect())
            .collect(),
        upper: Some(
            g.upper()
                .iter()
                .map(|row| row.iter().map(|e| e.to_string()).collect())
                .collect(),
        ),
    }
}

pub fn metric_from_doc(doc: &MetricDoc, chart: &Chart) -> Result<Metric, JsonError> {
    let lower = matrix("lower", &doc.lower, chart)?;
    match &doc.upper {
        Some(upper) => Ok(Metric::new(lower, matrix("upper", upper, chart)?)?),
        None => Ok(Metric::from_lower(lower)?),
    }
}
