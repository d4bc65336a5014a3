use std::fmt;

use super::{BinaryOp, Expr, UnaryOp};

// Binding strength used to decide where parentheses are required.
const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_sign_negative() => NEG,
        Expr::Const(_) | Expr::Var(_) => ATOM,
        Expr::Unary(UnaryOp::Neg, _) => NEG,
        Expr::Unary(_, _) => ATOM,
        Expr::Pow(_, _) => POW,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => ADD,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => MUL,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_level: u8) -> fmt::Result {
    if level(e) < min_level {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{}` on f64 is the shortest decimal that round-trips and never uses
    // exponent notation, which keeps the output inside the grammar.
    if v == 0.0 {
        f.write_str("0")
    } else {
        write!(f, "{v}")
    }
}

/// Prints in the input grammar; the output reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_number(f, *c),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_child(f, a, NEG)
            }
            Expr::Unary(op, a) => {
                let name = op.function_name().unwrap_or("?");
                write!(f, "{name}({a})")
            }
            Expr::Binary(op, a, b) => {
                let l = level(self);
                write_child(f, a, l)?;
                write!(f, "{}", op.symbol())?;
                write_child(f, b, l + 1)
            }
            Expr::Pow(base, p) => {
                write_child(f, base, ATOM)?;
                f.write_str("^")?;
                if p.is_sign_negative() && *p != 0.0 {
                    f.write_str("-")?;
                    write_number(f, -p)
                } else {
                    write_number(f, *p)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Expr};

    #[test]
    fn prints_minimal_parentheses() {
        for (src, want) in [
            ("x*y", "x*y"),
            ("(x+y)*2", "(x+y)*2"),
            ("x-(y-1)", "x-(y-1)"),
            ("-(x+1)", "-(x+1)"),
            ("(-2)^2", "(-2)^2"),
            ("(x^2)^3", "(x^2)^3"),
            ("x^-2", "x^-2"),
            ("log(1+x^2+y^2)", "log(1+x^2+y^2)"),
            ("0.0000001*x", "0.0000001*x"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), want, "source {src}");
        }
    }

    #[test]
    fn negative_constant_as_base_reparses() {
        let e = Expr::pow(Expr::Const(-3.0), 2.0);
        assert_eq!(parse(&e.to_string()).unwrap(), e);
    }
}
