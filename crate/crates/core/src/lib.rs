//! Symbolic calculus for differential operators on the algebra of densities
//! over a coordinate chart.
//!
//! The crate provides exact symbolic expressions ([`expr`]), weighted
//! densities and their canonical scalar product ([`densities`]), normal
//! ordered differential operators with adjoints and weight restriction
//! ([`operators`]), operator pencils and the self-adjoint reconstruction
//! ([`pencils`]), connection-flavoured geometry: symbol extraction, the
//! projective class, and the Thomas lift ([`geometry`]), and a numeric
//! verification harness ([`verify`]). The `densops` binary exposes all of it
//! on the command line.

pub mod densities;
pub mod dsl;
pub mod expr;
pub mod geometry;
pub mod json;
pub mod operators;
pub mod pencils;
pub mod rational;
pub mod verify;

pub use expr::{expr_equal, Chart, EqualityPolicy, ExprError, Expression};
pub use rational::Rational;
