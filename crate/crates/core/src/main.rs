//! Command-line front end: every construction and verification suite in the
//! library as a subcommand, exchanging operators in the DSL and structured
//! data as JSON documents.
//!
//! Exit codes: 0 on success (and verified checks), 1 when a verification or
//! equivalence check fails, 2 on usage, parse, or input errors.

use clap::{Parser, Subcommand};
use densops::dsl::{self, ParseError};
use densops::expr::EqualityPolicy;
use densops::geometry::{
    brans_dicke, kk_extract, levi_civita, pi_symbols, projectively_equivalent, thomas_lift,
    GeometryError,
};
use densops::json::{self, JsonError};
use densops::operators::OperatorError;
use densops::pencils::{
    canonical_pencil, example_pencil, LambdaOperator, PencilError, VectorField,
};
use densops::verify::{
    check_adjoint_numeric, run_suite, scalar_product, RandomSuiteConfig, SuiteReport, VerifyError,
    SUITE_NAMES,
};
use densops::{Chart, ExprError, Expression, Rational};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Input-side failures; every variant maps to exit code 2.
#[derive(Debug, Error)]
enum AppError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Json(#[from] JsonError),
    #[error("{0}")]
    Operator(#[from] OperatorError),
    #[error("{0}")]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Pencil(#[from] PencilError),
    #[error("{0}")]
    Verify(#[from] VerifyError),
    #[error("{0}")]
    Expr(#[from] ExprError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON document: {source}")]
    Document {
        path: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(
    name = "densops",
    version,
    about = "Differential operators on the algebra of densities: pencils, adjoints, \
             connections, and the Thomas lift",
    propagate_version = true
)]
struct Cli {
    /// Chart dimension: coordinates are x1…xn
    #[arg(short = 'n', long = "dim", global = true, default_value_t = 1)]
    dim: usize,

    /// Emit JSON documents instead of text
    #[arg(long, global = true)]
    json: bool,

    /// Write the result to a file instead of stdout
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adjoint of an operator with respect to the canonical scalar product
    Adjoint {
        /// Operator in the DSL, e.g. "sin(x1)*d1^2 + 2*cos(x1)*d1*w"
        #[arg(allow_hyphen_values = true)]
        op: String,
    },
    /// Composition A ∘ B of two operators
    Compose {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
    },
    /// Apply an operator to a density document
    Apply {
        #[arg(allow_hyphen_values = true)]
        op: String,
        /// Density JSON document ("-" for stdin)
        #[arg(long, value_name = "FILE")]
        density: String,
    },
    /// Restrict an operator to densities of one weight (substitute ŵ = λ)
    Restrict {
        #[arg(allow_hyphen_values = true)]
        op: String,
        /// The weight λ, an exact rational like 3/2
        #[arg(long, value_name = "RATIONAL", allow_hyphen_values = true)]
        weight: String,
    },
    /// Reconstruct the unique self-adjoint pencil through a weight-λ₀ operator
    Pencil {
        /// Pencil input document {upper, first, scalar, lambda0} ("-" for stdin)
        #[arg(long, value_name = "FILE", conflicts_with_all = ["op", "lambda0"])]
        input: Option<String>,
        /// The weight-λ₀ operator in the DSL (no ŵ, order ≤ 2)
        #[arg(long, requires = "lambda0", allow_hyphen_values = true)]
        op: Option<String>,
        /// The anchor weight λ₀ ∉ {0, 1/2, 1}
        #[arg(long, value_name = "RATIONAL", allow_hyphen_values = true)]
        lambda0: Option<String>,
    },
    /// The classical pencil L̂_X L̂_Y + ((ŵ−λ₀)/(2λ₀−1))·L̂_[X,Y]
    Example {
        /// Components of X, comma-separated, e.g. "sin(x1), x2"
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Components of Y
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, value_name = "RATIONAL", allow_hyphen_values = true)]
        lambda0: String,
    },
    /// Extract the connection γ from a symbol triple with invertible S
    ExtractConnection {
        /// Symbol triple document {s, b, c} ("-" for stdin)
        #[arg(long, value_name = "FILE")]
        symbol: String,
        /// Also print the Brans–Dicke scalar C − Bⁱγᵢ
        #[arg(long)]
        scalar: bool,
    },
    /// Projective connection symbols Π of a Christoffel table
    Pi {
        #[arg(long, value_name = "FILE")]
        christoffel: String,
    },
    /// Decide projective equivalence of two Christoffel tables
    ProjEquiv {
        #[arg(long, value_name = "FILE")]
        first: String,
        #[arg(long, value_name = "FILE")]
        second: String,
    },
    /// Thomas lift: the canonical affine connection on the extended chart
    ThomasLift {
        #[arg(long, value_name = "FILE")]
        christoffel: String,
    },
    /// Christoffel symbols of the Levi-Civita connection of a metric
    LeviCivita {
        /// Metric document {lower, upper?} ("-" for stdin)
        #[arg(long, value_name = "FILE")]
        metric: String,
    },
    /// Canonical scalar product of two density documents over the torus
    ScalarProduct {
        #[arg(long, value_name = "FILE")]
        first: String,
        #[arg(long, value_name = "FILE")]
        second: String,
    },
    /// Divergence of a first-order operator Kⁱ∂ᵢ + K⁰ŵ
    Divergence {
        #[arg(allow_hyphen_values = true)]
        op: String,
    },
    /// Run randomized verification suites
    Verify {
        /// Suite name, or "all" (default). Known suites: see --list
        #[arg(long, default_value = "all")]
        suite: String,
        /// List the known suites and exit
        #[arg(long)]
        list: bool,
        /// RNG seed; falls back to $DENSOPS_SEED, then 42
        #[arg(long)]
        seed: Option<u64>,
        /// Trials per suite
        #[arg(long, default_value_t = 25)]
        trials: usize,
        /// Maximum operator order for generated operators
        #[arg(long, default_value_t = 2)]
        max_order: u32,
        /// Degree bound for generated trig-polynomial coefficients
        #[arg(long, default_value_t = 2)]
        degree: u32,
        /// Certify adjoint duality for one specific operator instead
        #[arg(long, value_name = "OP", allow_hyphen_values = true)]
        op: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    });
}

fn read_input(path: &str) -> Result<String, AppError> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|source| AppError::Io {
                path: "<stdin>".into(),
                source,
            })?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|source| AppError::Io {
            path: path.into(),
            source,
        })
    }
}

fn read_doc<T: DeserializeOwned>(path: &str) -> Result<T, AppError> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|source| AppError::Document {
        path: path.into(),
        source,
    })
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), AppError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text).map_err(|source| AppError::Io {
            path: path.display().to_string(),
            source,
        }),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn parse_weight(text: &str) -> Result<Rational, AppError> {
    text.trim()
        .parse()
        .map_err(|_| AppError::Usage(format!("invalid rational weight {text:?}")))
}

/// Splits "sin(x1), x2*x2" into top-level comma-separated components.
fn split_components(src: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in src.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(src[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(src[start..].trim());
    parts
}

fn parse_field(src: &str, chart: &Chart) -> Result<VectorField, AppError> {
    let components = split_components(src)
        .iter()
        .map(|part| dsl::parse_expression(part, chart))
        .collect::<Result<Vec<Expression>, _>>()?;
    if components.len() != chart.dim() {
        return Err(AppError::Usage(format!(
            "vector field has {} components, expected the chart dimension {}",
            components.len(),
            chart.dim()
        )));
    }
    Ok(VectorField::new(components)?)
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, AppError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("DENSOPS_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| AppError::Usage(format!("DENSOPS_SEED is not an integer: {text:?}"))),
        Err(_) => Ok(42),
    }
}

fn run(cli: &Cli) -> Result<i32, AppError> {
    if cli.dim == 0 {
        return Err(AppError::Usage(
            "the chart dimension must be at least 1".into(),
        ));
    }
    let chart = Chart::new(cli.dim);
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Adjoint { op } => {
            let op = dsl::parse_operator(op, &chart)?.adjoint();
            emit_operator(cli, out, &op)
        }
        Command::Compose { a, b } => {
            let a = dsl::parse_operator(a, &chart)?;
            let b = dsl::parse_operator(b, &chart)?;
            emit_operator(cli, out, &a.compose(&b))
        }
        Command::Apply { op, density } => {
            let op = dsl::parse_operator(op, &chart)?;
            let d = json::density_from_doc(&read_doc(density)?, &chart)?;
            let result = op.apply(&d);
            let text = if cli.json {
                to_json(&json::density_to_doc(&result))
            } else {
                format!("{result}\n")
            };
            write_output(out, &text)?;
            Ok(0)
        }
        Command::Restrict { op, weight } => {
            let op = dsl::parse_operator(op, &chart)?;
            let weight = parse_weight(weight)?;
            emit_operator(cli, out, &op.restrict(&weight))
        }
        Command::Pencil { input, op, lambda0 } => {
            let l = match (input, op) {
                (Some(path), None) => json::pencil_input_from_doc(&read_doc(path)?, &chart)?,
                (None, Some(text)) => {
                    let lambda0 = lambda0
                        .as_deref()
                        .ok_or_else(|| AppError::Usage("--op needs --lambda0".into()))?;
                    LambdaOperator::new(dsl::parse_operator(text, &chart)?, parse_weight(lambda0)?)?
                }
                _ => {
                    return Err(AppError::Usage(
                        "pass either --input FILE or --op OP --lambda0 L".into(),
                    ))
                }
            };
            let pencil = canonical_pencil(&l);
            let st = densops::operators::extract_symbol(&pencil)?;
            let text = if cli.json {
                to_json(&serde_json::json!({
                    "triple": json::symbol_triple_to_doc(&st),
                    "operator": json::operator_to_doc(&pencil),
                }))
            } else {
                let mut s = String::new();
                for (i, row) in st.s().iter().enumerate() {
                    for (k, e) in row.iter().enumerate() {
                        if k >= i && !e.is_zero() {
                            let _ = writeln!(s, "S[{}][{}] = {e}", i + 1, k + 1);
                        }
                    }
                }
                for (i, e) in st.b().iter().enumerate() {
                    let _ = writeln!(s, "B[{}] = {e}", i + 1);
                }
                let _ = writeln!(s, "C = {}", st.c());
                let _ = writeln!(s, "operator: {pencil}");
                s
            };
            write_output(out, &text)?;
            Ok(0)
        }
        Command::Example { x, y, lambda0 } => {
            let x = parse_field(x, &chart)?;
            let y = parse_field(y, &chart)?;
            let op = example_pencil(&x, &y, &parse_weight(lambda0)?)?;
            emit_operator(cli, out, &op)
        }
        Command::ExtractConnection { symbol, scalar } => {
            let st = json::symbol_triple_from_doc(&read_doc(symbol)?, &chart)?;
            match kk_extract(&st) {
                Ok(gamma) => {
                    let text = if cli.json {
                        to_json(&json::connection_to_doc(&gamma))
                    } else {
                        let mut s = String::new();
                        for (i, e) in gamma.components().iter().enumerate() {
                            let _ = writeln!(s, "gamma[{}] = {e}", i + 1);
                        }
                        if *scalar {
                            let _ = writeln!(s, "brans–dicke = {}", brans_dicke(&st, &gamma)?);
                        }
                        s
                    };
                    write_output(out, &text)?;
                    Ok(0)
                }
                Err(GeometryError::DegenerateSymbol { b_in_range }) => {
                    let state = if b_in_range {
                        "B lies in the range of S at the sampled points; \
                         a connection exists but is not unique"
                    } else {
                        "B leaves the range of S at the sampled points; \
                         no connection reproduces this symbol"
                    };
                    eprintln!("degenerate principal symbol: {state}");
                    Ok(1)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Pi { christoffel } => {
            let gamma = json::christoffel_from_doc(&read_doc(christoffel)?, &chart)?;
            let pi = pi_symbols(&gamma);
            let doc = json::pi_to_doc(&pi);
            let text = if cli.json {
                to_json(&doc)
            } else {
                christoffel_text(&doc, "Pi")
            };
            write_output(out, &text)?;
            Ok(0)
        }
        Command::ProjEquiv { first, second } => {
            let g1 = json::christoffel_from_doc(&read_doc(first)?, &chart)?;
            let g2 = json::christoffel_from_doc(&read_doc(second)?, &chart)?;
            let (equivalent, t) = projectively_equivalent(&g1, &g2, EqualityPolicy::Symbolic)?;
            let text = if cli.json {
                to_json(&serde_json::json!({
                    "equivalent": equivalent,
                    "t": t.as_ref().map(|v| v.iter().map(|e| e.to_string()).collect::<Vec<_>>()),
                }))
            } else if let Some(t) = &t {
                let mut s = String::from("projectively equivalent\n");
                for (i, e) in t.iter().enumerate() {
                    let _ = writeln!(s, "t[{}] = {e}", i + 1);
                }
                s
            } else {
                "not projectively equivalent\n".to_string()
            };
            write_output(out, &text)?;
            Ok(if equivalent { 0 } else { 1 })
        }
        Command::ThomasLift { christoffel } => {
            let gamma = json::christoffel_from_doc(&read_doc(christoffel)?, &chart)?;
            let hat = thomas_lift(&pi_symbols(&gamma));
            let doc = json::extended_to_doc(&hat);
            let text = if cli.json {
                to_json(&doc)
            } else {
                let mut s = String::new();
                for e in &doc.symbols {
                    let _ = writeln!(
                        s,
                        "Gamma^{}_{{{} {}}} = {}",
                        e.upper, e.lower[0], e.lower[1], e.coeff
                    );
                }
                s
            };
            write_output(out, &text)?;
            Ok(0)
        }
        Command::LeviCivita { metric } => {
            let g = json::metric_from_doc(&read_doc(metric)?, &chart)?;
            let doc = json::christoffel_to_doc(&levi_civita(&g));
            let text = if cli.json {
                to_json(&doc)
            } else {
                christoffel_text(&doc, "Gamma")
            };
            write_output(out, &text)?;
            Ok(0)
        }
        Command::ScalarProduct { first, second } => {
            let d1 = json::density_from_doc(&read_doc(first)?, &chart)?;
            let d2 = json::density_from_doc(&read_doc(second)?, &chart)?;
            let value = scalar_product(&d1, &d2, cli.dim)?;
            let text = if cli.json {
                to_json(&serde_json::json!({
                    "value": value.to_string(),
                    "float": value.to_f64(),
                    "exact": value.is_exact(),
                }))
            } else {
                format!("{value}\n")
            };
            write_output(out, &text)?;
            Ok(0)
        }
        Command::Divergence { op } => {
            let op = dsl::parse_operator(op, &chart)?;
            let div = op.divergence()?;
            let text = if cli.json {
                to_json(&serde_json::json!({ "divergence": div.to_string() }))
            } else {
                format!("{div}\n")
            };
            write_output(out, &text)?;
            Ok(0)
        }
        Command::Verify {
            suite,
            list,
            seed,
            trials,
            max_order,
            degree,
            op,
        } => {
            if *list {
                let mut s = String::new();
                for name in SUITE_NAMES {
                    let _ = writeln!(s, "{name}");
                }
                write_output(out, &s)?;
                return Ok(0);
            }
            let cfg = RandomSuiteConfig {
                seed: resolve_seed(*seed)?,
                trials: *trials,
                dim: cli.dim,
                max_order: *max_order,
                degree: *degree,
            };
            let reports: Vec<SuiteReport> = if let Some(text) = op {
                let op = dsl::parse_operator(text, &chart)?;
                vec![check_adjoint_numeric(&op, &cfg)?]
            } else if suite == "all" {
                SUITE_NAMES
                    .iter()
                    .map(|name| run_suite(name, &cfg))
                    .collect::<Result<_, _>>()?
            } else {
                vec![run_suite(suite, &cfg)?]
            };
            let ok = reports.iter().all(|r| r.ok());
            let text = if cli.json {
                to_json(&reports)
            } else {
                let mut s = String::new();
                for r in &reports {
                    let _ = write!(s, "{r}");
                }
                let _ = writeln!(s, "{}", if ok { "all suites passed" } else { "FAILURES" });
                s
            };
            write_output(out, &text)?;
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn emit_operator(
    cli: &Cli,
    out: Option<&Path>,
    op: &densops::operators::DiffOperator,
) -> Result<i32, AppError> {
    let text = if cli.json {
        to_json(&json::operator_to_doc(op))
    } else {
        format!("{op}\n")
    };
    write_output(out, &text)?;
    Ok(0)
}

fn christoffel_text(doc: &json::ChristoffelDoc, name: &str) -> String {
    if doc.symbols.is_empty() {
        return format!("{name} = 0\n");
    }
    let mut s = String::new();
    for e in &doc.symbols {
        let _ = writeln!(
            s,
            "{name}^{}_{{{} {}}} = {}",
            e.upper, e.lower[0], e.lower[1], e.coeff
        );
    }
    s
}
