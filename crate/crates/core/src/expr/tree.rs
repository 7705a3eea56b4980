//! Conversion of normal forms into a display tree and canonical rendering.
//!
//! The renderer emits exactly the grammar the DSL parser accepts, so every
//! printed expression round-trips: sums of grlex-descending terms, `*` for
//! products, `^` with integer or parenthesized rational exponents, and a
//! trailing `^-1` power for denominators.

use super::nf::{Atom, Frac, Monomial, Poly};
use crate::rational::Rational;

#[derive(Debug, Clone)]
pub(crate) enum ExprTree {
    Const(Rational),
    Coord(usize),
    Sum(Vec<ExprTree>),
    Product(Vec<ExprTree>),
    Pow(Box<ExprTree>, Rational),
    Sin(Box<ExprTree>),
    Cos(Box<ExprTree>),
    Exp(Box<ExprTree>),
    Log(Box<ExprTree>),
}

pub(crate) fn build(f: &Frac) -> ExprTree {
    let num = poly_tree(&f.num);
    if f.den.is_one() {
        return num;
    }
    let den = ExprTree::Pow(Box::new(poly_tree(&f.den)), Rational::from_int(-1));
    match num {
        ExprTree::Const(c) if c.is_one() => den,
        ExprTree::Product(mut fs) => {
            fs.push(den);
            ExprTree::Product(fs)
        }
        other => ExprTree::Product(vec![other, den]),
    }
}

fn poly_tree(p: &Poly) -> ExprTree {
    if p.is_zero() {
        return ExprTree::Const(Rational::zero());
    }
    let mut terms: Vec<ExprTree> = p.terms.iter().map(|(m, c)| term_tree(m, c)).collect();
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        ExprTree::Sum(terms)
    }
}

fn term_tree(m: &Monomial, c: &Rational) -> ExprTree {
    let mut factors: Vec<ExprTree> = Vec::new();
    if !c.is_one() || m.entries.is_empty() {
        factors.push(ExprTree::Const(c.clone()));
    }
    for (atom, exp) in &m.entries {
        let base = atom_tree(atom);
        if exp.is_one() {
            factors.push(base);
        } else {
            factors.push(ExprTree::Pow(Box::new(base), exp.clone()));
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        ExprTree::Product(factors)
    }
}

fn atom_tree(a: &Atom) -> ExprTree {
    match a {
        Atom::Coord(i) => ExprTree::Coord(*i),
        Atom::Sin(g) => ExprTree::Sin(Box::new(build(g))),
        Atom::Cos(g) => ExprTree::Cos(Box::new(build(g))),
        Atom::Exp(g) => ExprTree::Exp(Box::new(build(g))),
        Atom::Log(g) => ExprTree::Log(Box::new(build(g))),
        Atom::Power(b) => build(b),
    }
}

/// Splits a leading minus sign off a tree, returning (negative?, |tree|).
fn split_sign(t: &ExprTree) -> (bool, ExprTree) {
    match t {
        ExprTree::Const(c) if c.is_negative() => (true, ExprTree::Const(c.abs())),
        ExprTree::Product(fs) => {
            if let Some(ExprTree::Const(c)) = fs.first() {
                if c.is_negative() {
                    let mut rest = fs[1..].to_vec();
                    let a = c.abs();
                    if !a.is_one() || rest.is_empty() {
                        rest.insert(0, ExprTree::Const(a));
                    }
                    let inner = if rest.len() == 1 {
                        rest.pop().unwrap()
                    } else {
                        ExprTree::Product(rest)
                    };
                    return (true, inner);
                }
            }
            (false, t.clone())
        }
        _ => (false, t.clone()),
    }
}

/// Precedence levels: sum = 1, product = 2, power = 3, atoms/calls = 4.
fn precedence(t: &ExprTree) -> u8 {
    match t {
        ExprTree::Sum(_) => 1,
        ExprTree::Const(c) if c.is_negative() => 1,
        ExprTree::Product(_) => 2,
        ExprTree::Pow(..) => 3,
        _ => 4,
    }
}

pub(crate) fn render(t: &ExprTree, names: &dyn Fn(usize) -> String) -> String {
    let mut out = String::new();
    write_tree(t, 1, names, &mut out);
    out
}

/// Renders a fraction for use as one factor of a product: a leading sign is
/// split off and sums are parenthesized. Returns `(negative, text)`.
pub(crate) fn render_signed_factor(f: &Frac, names: &dyn Fn(usize) -> String) -> (bool, String) {
    let t = build(f);
    let (negative, abs) = split_sign(&t);
    let mut out = String::new();
    write_tree(&abs, 2, names, &mut out);
    (negative, out)
}

fn write_tree(t: &ExprTree, min_prec: u8, names: &dyn Fn(usize) -> String, out: &mut String) {
    let wrap = precedence(t) < min_prec;
    if wrap {
        out.push('(');
    }
    match t {
        ExprTree::Const(c) => out.push_str(&c.to_string()),
        ExprTree::Coord(i) => out.push_str(&names(*i)),
        ExprTree::Sum(terms) => {
            for (k, term) in terms.iter().enumerate() {
                let (negative, abs) = split_sign(term);
                if k == 0 {
                    if negative {
                        out.push('-');
                    }
                } else {
                    out.push_str(if negative { " - " } else { " + " });
                }
                write_tree(&abs, 2, names, out);
            }
        }
        ExprTree::Product(factors) => {
            let (negative, abs) = split_sign(t);
            if negative {
                out.push('-');
                write_tree(&abs, 2, names, out);
            } else {
                for (k, f) in factors.iter().enumerate() {
                    if k > 0 {
                        out.push('*');
                    }
                    write_tree(f, 2, names, out);
                }
            }
        }
        ExprTree::Pow(base, exp) => {
            write_tree(base, 4, names, out);
            out.push('^');
            if exp.is_integer() {
                out.push_str(&exp.to_string());
            } else {
                out.push('(');
                out.push_str(&exp.to_string());
                out.push(')');
            }
        }
        ExprTree::Sin(g) => write_call("sin", g, names, out),
        ExprTree::Cos(g) => write_call("cos", g, names, out),
        ExprTree::Exp(g) => write_call("exp", g, names, out),
        ExprTree::Log(g) => write_call("log", g, names, out),
    }
    if wrap {
        out.push(')');
    }
}

fn write_call(name: &str, arg: &ExprTree, names: &dyn Fn(usize) -> String, out: &mut String) {
    out.push_str(name);
    out.push('(');
    write_tree(arg, 1, names, out);
    out.push(')');
}
