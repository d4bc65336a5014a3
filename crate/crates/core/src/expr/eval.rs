use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{reason} in `{subexpression}` at ({x}, {y})")]
pub struct EvalError {
    pub reason: &'static str,
    pub subexpression: String,
    pub x: f64,
    pub y: f64,
}

impl Expr {
    /// Evaluates the expression at the point `(x, y)`.
    ///
    /// Fails when a logarithm or square root leaves its domain, on division by
    /// zero, or when any intermediate value stops being finite.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let fail = |reason, node: &Expr| EvalError {
            reason,
            subexpression: node.to_string(),
            x,
            y,
        };
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Unary(op, arg) => {
                let a = arg.eval(x, y)?;
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Log => {
                        if a <= 0.0 {
                            return Err(fail("logarithm of a nonpositive value", self));
                        }
                        a.ln()
                    }
                    UnaryOp::Sqrt => {
                        if a < 0.0 {
                            return Err(fail("square root of a negative value", self));
                        }
                        a.sqrt()
                    }
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Atan => a.atan(),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(x, y)?;
                let b = rhs.eval(x, y)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(fail("division by zero", self));
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(base, p) => {
                let b = base.eval(x, y)?;
                if b < 0.0 && p.fract() != 0.0 {
                    return Err(fail("fractional power of a negative value", self));
                }
                if b == 0.0 && *p < 0.0 {
                    return Err(fail("negative power of zero", self));
                }
                if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    b.powi(*p as i32)
                } else {
                    b.powf(*p)
                }
            }
        };
        if !value.is_finite() {
            return Err(fail("non-finite value", self));
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn arithmetic() {
        assert_eq!(parse("x*y").unwrap().eval(2.0, 3.0).unwrap(), 6.0);
        assert_eq!(parse("log(1+x^2+y^2)").unwrap().eval(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_log_two() {
        let v = parse("0.5*log(1+x^2+y^2)").unwrap().eval(1.0, 0.0).unwrap();
        assert!((v - 0.3465735903).abs() < 1e-10);
        assert!((v - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let err = parse("1+log(x)").unwrap().eval(-1.0, 0.0).unwrap_err();
        assert_eq!(err.subexpression, "log(x)");
        let err = parse("y/x").unwrap().eval(0.0, 1.0).unwrap_err();
        assert_eq!(err.reason, "division by zero");
        assert!(parse("sqrt(x)").unwrap().eval(-0.5, 0.0).is_err());
        assert!(parse("exp(x)").unwrap().eval(1000.0, 0.0).is_err());
        assert!(parse("x^0.5").unwrap().eval(-1.0, 0.0).is_err());
        assert!(parse("x^-1").unwrap().eval(0.0, 0.0).is_err());
    }

    #[test]
    fn integer_and_fractional_powers() {
        assert_eq!(parse("x^3").unwrap().eval(-2.0, 0.0).unwrap(), -8.0);
        assert!((parse("x^1.5").unwrap().eval(4.0, 0.0).unwrap() - 8.0).abs() < 1e-12);
    }
}
