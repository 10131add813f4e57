//! Expression AST for Lagrangians `L(x, y, v, w)` and auxiliary functions.

use std::fmt;

use crate::specfun::{mittag_leffler_derivative, MLOrder};

/// Independent variables of a Lagrangian: `x`, the function value `y`, the left
/// Caputo value `v` and the right Caputo value `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    V,
    W,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::V => "v",
            Var::W => "w",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "v" => Some(Var::V),
            "w" => Some(Var::W),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub(crate) const FUNCTIONS: [UnaryOp; 6] =
        [UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Exp, UnaryOp::Ln, UnaryOp::Sqrt, UnaryOp::Abs];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    /// Reference to a named coefficient function of `x`, written `coeff:<name>`.
    Coeff(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// `deriv`-th derivative of the Mittag-Leffler function `E_alpha` at `arg`;
    /// written `ml(alpha, arg)` for `deriv = 0` and `mld(alpha, deriv, arg)` otherwise.
    Ml { alpha: f64, deriv: u32, arg: Box<Expr> },
}

impl Expr {
    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    /// True when `v` occurs anywhere in the expression.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) | Expr::Coeff(_) => false,
            Expr::Var(u) => *u == v,
            Expr::Unary(_, e) => e.depends_on(v),
            Expr::Binary(_, l, r) => l.depends_on(v) || r.depends_on(v),
            Expr::Ml { arg, .. } => arg.depends_on(v),
        }
    }

    /// Names of all referenced coefficients, in first-occurrence order.
    pub fn coefficients(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_coefficients(&mut out);
        out
    }

    fn collect_coefficients<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Coeff(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Expr::Unary(_, e) | Expr::Ml { arg: e, .. } => e.collect_coefficients(out),
            Expr::Binary(_, l, r) => {
                l.collect_coefficients(out);
                r.collect_coefficients(out);
            }
            Expr::Const(_) | Expr::Var(_) => {}
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Coeff(_) => 1,
            Expr::Unary(_, e) | Expr::Ml { arg: e, .. } => 1 + e.node_count(),
            Expr::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    /// Resolves coefficient names to indices into `names`.
    pub fn compile(&self, names: &[String]) -> Result<Compiled, String> {
        Ok(Compiled { root: self.lower(names)? })
    }

    fn lower(&self, names: &[String]) -> Result<Node, String> {
        Ok(match self {
            Expr::Const(c) => Node::Const(*c),
            Expr::Var(v) => Node::Var(*v),
            Expr::Coeff(name) => Node::Coeff(
                names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| format!("undeclared coefficient '{name}'"))?,
            ),
            Expr::Unary(op, e) => Node::Unary(*op, Box::new(e.lower(names)?)),
            Expr::Binary(op, l, r) => {
                Node::Binary(*op, Box::new(l.lower(names)?), Box::new(r.lower(names)?))
            }
            Expr::Ml { alpha, deriv, arg } => Node::Ml {
                alpha: MLOrder::new(*alpha).map_err(|e| e.to_string())?,
                deriv: *deriv,
                arg: Box::new(arg.lower(names)?),
            },
        })
    }
}

// Simplifying constructors used by differentiation and Lagrangian algebra.
// They fold constants and drop neutral elements only.
pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ => Expr::Binary(BinaryOp::Add, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        _ => Expr::Binary(BinaryOp::Sub, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if a.is_zero() || b.is_zero() => Expr::Const(0.0),
        _ if a.is_one() => b,
        _ if b.is_one() => a,
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ => Expr::Binary(BinaryOp::Mul, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if a.is_zero() => Expr::Const(0.0),
        _ if b.is_one() => a,
        _ => Expr::Binary(BinaryOp::Div, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if b.is_zero() => Expr::Const(1.0),
        _ if b.is_one() => a,
        _ => Expr::Binary(BinaryOp::Pow, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
    }
}

pub(crate) fn unary(op: UnaryOp, a: Expr) -> Expr {
    if op == UnaryOp::Neg {
        neg(a)
    } else {
        Expr::Unary(op, Box::new(a))
    }
}

/// Fully parenthesised form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "(-{:?})", -c),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Coeff(name) => write!(f, "coeff:{name}"),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(op, e) => write!(f, "{}({e})", op.name()),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Ml { alpha, deriv: 0, arg } => write!(f, "ml({alpha:?}, {arg})"),
            Expr::Ml { alpha, deriv, arg } => write!(f, "mld({alpha:?}, {deriv}, {arg})"),
        }
    }
}

/// Values at which a compiled expression is evaluated. `coeffs[k]` is the
/// value of the `k`-th declared coefficient at `x`.
#[derive(Debug, Clone, Copy)]
pub struct Point<'a> {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub w: f64,
    pub coeffs: &'a [f64],
}

impl<'a> Point<'a> {
    pub fn new(x: f64, y: f64, v: f64, w: f64, coeffs: &'a [f64]) -> Self {
        Self { x, y, v, w, coeffs }
    }

    /// A point depending on `x` only.
    pub fn at_x(x: f64, coeffs: &'a [f64]) -> Self {
        Self { x, y: 0.0, v: 0.0, w: 0.0, coeffs }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Coeff(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Ml { alpha: MLOrder, deriv: u32, arg: Box<Node> },
}

/// Expression with coefficients resolved to indices, ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    root: Node,
}

impl Compiled {
    /// Evaluates the expression; any non-finite intermediate is an error.
    pub fn eval(&self, p: &Point<'_>) -> Result<f64, String> {
        eval_node(&self.root, p)
    }

    /// True when the expression is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }
}

fn finite(v: f64, what: impl FnOnce() -> String) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(what())
    }
}

fn eval_node(node: &Node, p: &Point<'_>) -> Result<f64, String> {
    match node {
        Node::Const(c) => Ok(*c),
        Node::Var(Var::X) => Ok(p.x),
        Node::Var(Var::Y) => Ok(p.y),
        Node::Var(Var::V) => Ok(p.v),
        Node::Var(Var::W) => Ok(p.w),
        Node::Coeff(k) => p
            .coeffs
            .get(*k)
            .copied()
            .ok_or_else(|| format!("coefficient #{k} has no value")),
        Node::Unary(op, e) => {
            let u = eval_node(e, p)?;
            match op {
                UnaryOp::Neg => Ok(-u),
                UnaryOp::Sin => Ok(u.sin()),
                UnaryOp::Cos => Ok(u.cos()),
                UnaryOp::Exp => finite(u.exp(), || format!("exp({u}) overflows")),
                UnaryOp::Ln => {
                    if u > 0.0 {
                        Ok(u.ln())
                    } else {
                        Err(format!("ln of non-positive argument {u}"))
                    }
                }
                UnaryOp::Sqrt => {
                    if u >= 0.0 {
                        Ok(u.sqrt())
                    } else {
                        Err(format!("sqrt of negative argument {u}"))
                    }
                }
                UnaryOp::Abs => Ok(u.abs()),
            }
        }
        Node::Binary(op, l, r) => {
            let a = eval_node(l, p)?;
            let b = eval_node(r, p)?;
            let value = match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b == 0.0 {
                        return Err(format!("division of {a} by zero"));
                    }
                    a / b
                }
                BinaryOp::Pow => {
                    if b == b.trunc() && b.abs() <= i32::MAX as f64 {
                        a.powi(b as i32)
                    } else if a < 0.0 {
                        return Err(format!("{a} raised to non-integer power {b}"));
                    } else {
                        a.powf(b)
                    }
                }
            };
            finite(value, || format!("{a} {} {b} is not finite", op.symbol()))
        }
        Node::Ml { alpha, deriv, arg } => {
            let z = eval_node(arg, p)?;
            mittag_leffler_derivative(*alpha, z, *deriv as usize).map_err(|e| e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    #[test]
    fn simplifying_constructors() {
        let v = Expr::var(Var::V);
        assert_eq!(add(c(0.0), v.clone()), v);
        assert_eq!(mul(c(1.0), v.clone()), v);
        assert_eq!(mul(c(0.0), v.clone()), c(0.0));
        assert_eq!(mul(c(2.0), c(3.0)), c(6.0));
        assert_eq!(pow(v.clone(), c(1.0)), v);
        assert_eq!(neg(neg(v.clone())), v);
        assert_eq!(sub(c(0.0), v.clone()), neg(v));
    }

    #[test]
    fn display_is_parenthesised() {
        let e = Expr::Binary(
            BinaryOp::Add,
            Box::new(pow(Expr::var(Var::V), c(2.0))),
            Box::new(mul(Expr::Coeff("ybar".into()), Expr::var(Var::X))),
        );
        assert_eq!(e.to_string(), "((v ^ 2.0) + (coeff:ybar * x))");
    }

    #[test]
    fn evaluation_errors() {
        let names: Vec<String> = vec![];
        let p = Point::new(0.5, -1.0, 0.0, 0.0, &[]);
        let sqrt = Expr::Unary(UnaryOp::Sqrt, Box::new(Expr::var(Var::Y))).compile(&names).unwrap();
        assert!(sqrt.eval(&p).unwrap_err().contains("sqrt"));
        let ln = Expr::Unary(UnaryOp::Ln, Box::new(Expr::var(Var::V))).compile(&names).unwrap();
        assert!(ln.eval(&p).is_err());
        let d = Expr::Binary(BinaryOp::Div, Box::new(c(1.0)), Box::new(Expr::var(Var::W)))
            .compile(&names)
            .unwrap();
        assert!(d.eval(&p).is_err());
        let pw = Expr::Binary(BinaryOp::Pow, Box::new(Expr::var(Var::Y)), Box::new(c(2.0)))
            .compile(&names)
            .unwrap();
        assert_eq!(pw.eval(&p).unwrap(), 1.0);
    }

    #[test]
    fn coefficient_resolution() {
        let e = mul(Expr::Coeff("a".into()), Expr::Coeff("b".into()));
        assert_eq!(e.coefficients(), vec!["a", "b"]);
        assert!(e.compile(&["a".to_string()]).is_err());
        let k = e.compile(&["b".to_string(), "a".to_string()]).unwrap();
        assert_eq!(k.eval(&Point::at_x(0.0, &[2.0, 3.0])).unwrap(), 6.0);
    }

    #[test]
    fn mittag_leffler_node() {
        let e = Expr::Ml { alpha: 1.0, deriv: 0, arg: Box::new(Expr::var(Var::X)) };
        let k = e.compile(&[]).unwrap();
        assert!((k.eval(&Point::at_x(1.0, &[])).unwrap() - std::f64::consts::E).abs() < 1e-13);
    }
}
