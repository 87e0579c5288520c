//! Exact symbolic phase-space algebra and the generalized Moyal bracket.

mod adjoint;
mod bracket;
mod expr;
pub mod models;
mod parse;
mod symbol;

use thiserror::Error;

pub use adjoint::{adjointness_check, AdjointReport, TestFn};
pub use bracket::{
    check_zero_orderwise, d_omega_pow, gmb, liouvillian, liouvillian_product, moyal_coefficient,
    poisson, BracketSpec, BracketValue, Operand,
};
pub use expr::{CompiledExpr, PhaseExpr, TermJson, Var};
pub use parse::parse;
pub use symbol::Symbol;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AlgebraError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("expression is singular at |q| = 0")]
    SingularPoint,
    #[error("`{0}` has no inverse in the expression ring")]
    NotInvertible(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("malformed expression JSON: {0}")]
    Json(String),
    #[error("test function does not decay: {0}")]
    NonDecaying(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
}
