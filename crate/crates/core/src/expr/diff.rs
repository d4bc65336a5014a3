use super::{
    simplify_add, simplify_div, simplify_mul, simplify_neg, simplify_pow, simplify_sub, BinaryOp,
    Expr, UnaryOp, Var,
};

/// Symbolic partial derivative with respect to `var`.
pub fn diff(expr: &Expr, var: Var) -> Expr {
    match expr {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
        Expr::Unary(op, arg) => {
            let da = diff(arg, var);
            if da.as_constant() == Some(0.0) {
                return Expr::Const(0.0);
            }
            let a = (**arg).clone();
            let outer = match op {
                UnaryOp::Neg => return simplify_neg(da),
                UnaryOp::Exp => expr.clone(),
                UnaryOp::Log => return simplify_div(da, a),
                UnaryOp::Sqrt => {
                    return simplify_div(da, simplify_mul(Expr::Const(2.0), expr.clone()))
                }
                UnaryOp::Sin => Expr::unary(UnaryOp::Cos, a),
                UnaryOp::Cos => simplify_neg(Expr::unary(UnaryOp::Sin, a)),
                UnaryOp::Atan => {
                    return simplify_div(
                        da,
                        simplify_add(Expr::Const(1.0), simplify_pow(a, 2.0)),
                    )
                }
            };
            simplify_mul(outer, da)
        }
        Expr::Binary(op, a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinaryOp::Add => simplify_add(da, db),
                BinaryOp::Sub => simplify_sub(da, db),
                BinaryOp::Mul => simplify_add(simplify_mul(da, b), simplify_mul(a, db)),
                BinaryOp::Div => {
                    if db.as_constant() == Some(0.0) {
                        return simplify_div(da, b);
                    }
                    simplify_div(
                        simplify_sub(simplify_mul(da, b.clone()), simplify_mul(a, db)),
                        simplify_pow(b, 2.0),
                    )
                }
            }
        }
        Expr::Pow(base, p) => {
            let db = diff(base, var);
            if db.as_constant() == Some(0.0) {
                return Expr::Const(0.0);
            }
            let outer = simplify_mul(Expr::Const(*p), simplify_pow((**base).clone(), p - 1.0));
            simplify_mul(outer, db)
        }
    }
}

/// Symbolic Laplacian `u_xx + u_yy`.
pub fn laplacian(expr: &Expr) -> Expr {
    let uxx = diff(&diff(expr, Var::X), Var::X);
    let uyy = diff(&diff(expr, Var::Y), Var::Y);
    simplify_add(uxx, uyy)
}
