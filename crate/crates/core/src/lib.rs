//! Jumarie's modified Riemann–Liouville derivative of piecewise
//! shifted-power functions, and checks of the rules claimed for it.

// `!(x > y)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod expr;
pub mod jacobi;
mod num;
pub mod parse;
pub mod piecewise;
pub mod powersum;
pub mod rules;
pub mod special;

pub use engine::{
    frac_deriv, frac_deriv_with, one_sided, EngineConfig, FracDerivResult, FracOrder, Method,
    SidedValue,
};
pub use error::{Error, Result};
pub use expr::{Expr, Side};
pub use piecewise::{Derivative, PiecewiseFn, SingularityTag, DEFAULT_DOMAIN_END};
pub use rules::{
    check_chain_a, check_chain_b, check_leibniz, locality_test, reproduce_suite, LocalityReport,
    Reproduction, RuleId, RuleReport, Verdict, VERDICT_TOL,
};
