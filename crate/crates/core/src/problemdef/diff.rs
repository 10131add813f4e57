//! Symbolic partial differentiation. Coefficient references are constants.

use super::expr::{add, div, mul, neg, pow, sub, unary, BinaryOp, Expr, UnaryOp, Var};

/// Exact derivative of `e` with respect to `wrt`, with constant folding only.
pub fn differentiate(e: &Expr, wrt: Var) -> Expr {
    match e {
        Expr::Const(_) | Expr::Coeff(_) => Expr::Const(0.0),
        Expr::Var(v) => Expr::Const(if *v == wrt { 1.0 } else { 0.0 }),
        Expr::Unary(op, u) => {
            let du = differentiate(u, wrt);
            if du.is_zero() {
                return Expr::Const(0.0);
            }
            let u = (**u).clone();
            let outer = match op {
                UnaryOp::Neg => return neg(du),
                UnaryOp::Sin => unary(UnaryOp::Cos, u),
                UnaryOp::Cos => neg(unary(UnaryOp::Sin, u)),
                UnaryOp::Exp => unary(UnaryOp::Exp, u),
                UnaryOp::Ln => return div(du, u),
                UnaryOp::Sqrt => {
                    return div(du, mul(Expr::Const(2.0), unary(UnaryOp::Sqrt, u)));
                }
                UnaryOp::Abs => div(u.clone(), unary(UnaryOp::Abs, u)),
            };
            mul(outer, du)
        }
        Expr::Binary(op, l, r) => {
            let dl = differentiate(l, wrt);
            let dr = differentiate(r, wrt);
            let (l, r) = ((**l).clone(), (**r).clone());
            match op {
                BinaryOp::Add => add(dl, dr),
                BinaryOp::Sub => sub(dl, dr),
                BinaryOp::Mul => add(mul(dl, r.clone()), mul(l, dr)),
                BinaryOp::Div => {
                    if dr.is_zero() {
                        div(dl, r)
                    } else {
                        div(
                            sub(mul(dl, r.clone()), mul(l, dr)),
                            pow(r, Expr::Const(2.0)),
                        )
                    }
                }
                BinaryOp::Pow => {
                    if dr.is_zero() {
                        if dl.is_zero() {
                            return Expr::Const(0.0);
                        }
                        // d(u^c) = c u^(c-1) u'
                        let lowered = match &r {
                            Expr::Const(c) => Expr::Const(c - 1.0),
                            _ => sub(r.clone(), Expr::Const(1.0)),
                        };
                        mul(mul(r, pow(l, lowered)), dl)
                    } else {
                        // d(u^e) = u^e (e' ln u + e u'/u)
                        let whole = pow(l.clone(), r.clone());
                        let log_part = mul(dr, unary(UnaryOp::Ln, l.clone()));
                        let base_part = div(mul(r, dl), l);
                        mul(whole, add(log_part, base_part))
                    }
                }
            }
        }
        Expr::Ml { alpha, deriv, arg } => {
            let da = differentiate(arg, wrt);
            if da.is_zero() {
                return Expr::Const(0.0);
            }
            mul(Expr::Ml { alpha: *alpha, deriv: deriv + 1, arg: arg.clone() }, da)
        }
    }
}
