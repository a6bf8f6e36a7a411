//! Exact polynomial-matrix algebra.
//!
//! Polynomials live in up to three spatial variables (`x`, `y`, `z`) and carry
//! coefficients that are affine in decision variables. Everything stays linear
//! in the decision variables: multiplying two decision-bearing operands is an
//! error rather than a silent quadratic term.

mod basis;
mod linexpr;
mod matrix;
mod monomial;
mod polynomial;

use thiserror::Error;

pub use basis::{basis_len, kron_identity, mono_basis, MonomialVector};
pub use linexpr::LinExpr;
pub use matrix::PolyMatrix;
pub use monomial::{Monomial, Var, VarSet};
pub use polynomial::Polynomial;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("product of two decision-bearing operands is not linear")]
    Bilinear,
    #[error("variable {0:?} is not declared")]
    UndeclaredVariable(Var),
    #[error("monomial bases support one or two variables, got {0}")]
    UnsupportedVariableCount(usize),
}

/// `expr == 0`, with a human-readable origin.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint<S: Scalar> {
    pub expr: LinExpr<S>,
    pub label: String,
}

impl<S: Scalar> LinearConstraint<S> {
    pub fn new(expr: LinExpr<S>, label: impl Into<String>) -> Self {
        Self { expr, label: label.into() }
    }

    pub fn residual(&self, values: &[f64]) -> f64 {
        self.expr.eval(values)
    }
}
