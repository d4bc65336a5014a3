//! Closed-form scalar expressions in the plane coordinates `x` and `y`.
//!
//! Expressions describe conformal factors, revolution profiles and metric
//! components. The grammar is small and unambiguous (see `docs/grammar.md`):
//! decimal literals, the variables `x` and `y`, the functions
//! `exp log sqrt sin cos atan`, and the operators `+ - * / ^` where the
//! exponent of `^` must fold to a constant.

mod diff;
mod display;
mod eval;
mod parser;

use std::fmt;

use thiserror::Error;

pub use diff::{diff, laplacian};
pub use eval::EvalError;
pub use parser::{parse, parse_with_limits, ParseError, ParseLimits};

/// Plane coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    Y,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X => f.write_str("x"),
            Var::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Atan,
}

impl UnaryOp {
    pub(crate) fn function_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Log => Some("log"),
            UnaryOp::Sqrt => Some("sqrt"),
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Atan => Some("atan"),
        }
    }

    pub(crate) fn from_function_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "atan" => UnaryOp::Atan,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub(crate) fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Expression tree.
///
/// Powers carry their exponent as a plain number, so the tree is closed
/// under symbolic differentiation. Trees are immutable once built and can be
/// shared across threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn x() -> Self {
        Expr::Var(Var::X)
    }

    pub fn y() -> Self {
        Expr::Var(Var::Y)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn pow(base: Expr, exponent: f64) -> Self {
        Expr::Pow(Box::new(base), exponent)
    }

    /// Constant value if the tree contains no variables.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// True if the expression does not depend on `x` or `y`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Number of nodes in the tree.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) | Expr::Pow(a, _) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// `s * self + (1 - s) * other`, simplified.
    pub fn affine_blend(&self, other: &Expr, s: f64) -> Expr {
        simplify_add(
            simplify_mul(Expr::Const(s), self.clone()),
            simplify_mul(Expr::Const(1.0 - s), other.clone()),
        )
    }

    /// Constant multiple `c * self`, simplified.
    pub fn scaled(&self, c: f64) -> Expr {
        simplify_mul(Expr::Const(c), self.clone())
    }
}

#[derive(Debug, Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

// Constructors with constant folding and 0/1 identities. Nothing beyond that.

pub(crate) fn simplify_add(a: Expr, b: Expr) -> Expr {
    match (a.as_constant(), b.as_constant()) {
        (Some(p), Some(q)) => Expr::Const(p + q),
        (Some(p), _) if p == 0.0 => b,
        (_, Some(q)) if q == 0.0 => a,
        _ => Expr::binary(BinaryOp::Add, a, b),
    }
}

pub(crate) fn simplify_sub(a: Expr, b: Expr) -> Expr {
    match (a.as_constant(), b.as_constant()) {
        (Some(p), Some(q)) => Expr::Const(p - q),
        (_, Some(q)) if q == 0.0 => a,
        (Some(p), _) if p == 0.0 => simplify_neg(b),
        _ => Expr::binary(BinaryOp::Sub, a, b),
    }
}

pub(crate) fn simplify_mul(a: Expr, b: Expr) -> Expr {
    match (a.as_constant(), b.as_constant()) {
        (Some(p), Some(q)) => Expr::Const(p * q),
        (Some(p), _) | (_, Some(p)) if p == 0.0 => Expr::Const(0.0),
        (Some(p), _) if p == 1.0 => b,
        (_, Some(q)) if q == 1.0 => a,
        _ => Expr::binary(BinaryOp::Mul, a, b),
    }
}

pub(crate) fn simplify_div(a: Expr, b: Expr) -> Expr {
    match (a.as_constant(), b.as_constant()) {
        (Some(p), Some(q)) if q != 0.0 => Expr::Const(p / q),
        (Some(p), _) if p == 0.0 => Expr::Const(0.0),
        (_, Some(q)) if q == 1.0 => a,
        _ => Expr::binary(BinaryOp::Div, a, b),
    }
}

pub(crate) fn simplify_neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::unary(UnaryOp::Neg, other),
    }
}

pub(crate) fn simplify_pow(base: Expr, exponent: f64) -> Expr {
    if exponent == 0.0 {
        return Expr::Const(1.0);
    }
    if exponent == 1.0 {
        return base;
    }
    match base.as_constant() {
        Some(c) => Expr::Const(c.powf(exponent)),
        None => Expr::pow(base, exponent),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blend_at_endpoints_folds() {
        let u0 = Expr::Const(0.0);
        let u1 = Expr::Const(2.0);
        assert_eq!(u1.affine_blend(&u0, 0.25), Expr::Const(0.5));
    }

    #[test]
    fn node_count_and_constness() {
        let e = parse("x*y+1").unwrap();
        assert_eq!(e.node_count(), 5);
        assert!(!e.is_constant());
        assert!(parse("exp(2)*3").unwrap().is_constant());
    }
}
