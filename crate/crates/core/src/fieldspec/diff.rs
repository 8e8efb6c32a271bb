use super::expr::{BinaryOp, Expr, UnaryOp, Var};

/// Exact symbolic derivative, simplified only by constant folding and 0/1 identities.
pub fn diff(e: &Expr, v: Var) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(w) => Expr::Const(if *w == v { 1.0 } else { 0.0 }),
        Expr::Unary(op, a) => {
            let da = diff(a, v);
            let a = (**a).clone();
            match op {
                UnaryOp::Neg => Expr::neg(da),
                UnaryOp::Sin => Expr::mul(Expr::unary(UnaryOp::Cos, a), da),
                UnaryOp::Cos => Expr::mul(Expr::neg(Expr::unary(UnaryOp::Sin, a)), da),
                UnaryOp::Exp => Expr::mul(Expr::unary(UnaryOp::Exp, a), da),
            }
        }
        Expr::Binary(op, a, b) => {
            let (da, db) = (diff(a, v), diff(b, v));
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinaryOp::Add => Expr::add(da, db),
                BinaryOp::Sub => Expr::sub(da, db),
                BinaryOp::Mul => Expr::add(Expr::mul(da, b), Expr::mul(a, db)),
                BinaryOp::Div => Expr::div(Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a, db)), Expr::pow(b, 2)),
            }
        }
        Expr::Pow(_, 0) => Expr::Const(0.0),
        Expr::Pow(a, n) => {
            let da = diff(a, v);
            let coeff = Expr::mul(Expr::Const(f64::from(*n)), Expr::pow((**a).clone(), n - 1));
            Expr::mul(coeff, da)
        }
    }
}
