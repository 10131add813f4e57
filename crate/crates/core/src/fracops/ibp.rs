//! Numerical check of the fractional integration-by-parts formulas for
//! orders in (0, 1):
//!
//! ```text
//! ∫ g · ᶜ_aD_x^α f  =  ∫ f · _xD_b^α g  +  [ _xI_b^(1−α) g · f ]_a^b
//! ∫ g · ᶜ_xD_b^α f  =  ∫ f · _aD_x^α g  −  [ _aI_x^(1−α) g · f ]_a^b
//! ```
//!
//! Every side is evaluated by nested adaptive quadrature. Riemann-Liouville
//! derivatives of `g` are split into their Caputo part and the endpoint term
//! `g(b)(b−x)^(−α)/Γ(1−α)`, whose product with `f` integrates to a
//! Riemann-Liouville integral of `f` and is handled by the graded rule.

use super::pointwise::{caputo_left_at, caputo_right_at, rl_integral_left_tol, rl_integral_right_tol};
use super::{FracOrder, SmoothFn};
use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;

/// Smallest quadrature tolerance attempted; requests below it are clamped.
pub const MIN_QUAD_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IbpIdentity {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, residual: (lhs - rhs).abs() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpReport {
    /// Identity with the left Caputo derivative of `f`.
    pub left: IbpIdentity,
    /// Identity with the right Caputo derivative of `f`.
    pub right: IbpIdentity,
    /// Tolerance actually used after clamping.
    pub quad_tol: f64,
}

impl IbpReport {
    pub fn max_residual(&self) -> f64 {
        self.left.residual.max(self.right.residual)
    }
}

/// Evaluates both integration-by-parts identities on [a, b].
pub fn verify_ibp(
    f: &impl SmoothFn,
    g: &impl SmoothFn,
    alpha: FracOrder,
    a: f64,
    b: f64,
    quad_tol: f64,
) -> Result<IbpReport> {
    alpha.require_derivative()?;
    if !(a < b) {
        return Err(Error::Argument(format!("need a < b, got [{a}, {b}]")));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::Argument(format!("quadrature tolerance must be positive, got {quad_tol}")));
    }
    let tol = quad_tol.max(MIN_QUAD_TOL);
    let len = b - a;
    let outer = 0.1 * tol;
    let inner = 1e-2 * tol / len.max(1.0);
    let mu = alpha.complement();

    // first identity
    let lhs1 = nested(|x| Ok(g.value(x) * caputo_left_at(f, alpha, a, x, inner)?), a, b, outer)?;
    let caputo_part = nested(|x| Ok(f.value(x) * caputo_right_at(g, alpha, x, b, inner)?), a, b, outer)?;
    let endpoint_part = g.value(b) * rl_integral_left_tol(|t| f.value(t), mu, a, b, outer)?;
    let boundary1 = -rl_integral_right_tol(|t| g.value(t), mu, a, b, outer)? * f.value(a);
    let rhs1 = caputo_part + endpoint_part + boundary1;

    // second identity
    let lhs2 = nested(|x| Ok(g.value(x) * caputo_right_at(f, alpha, x, b, inner)?), a, b, outer)?;
    let caputo_part = nested(|x| Ok(f.value(x) * caputo_left_at(g, alpha, a, x, inner)?), a, b, outer)?;
    let endpoint_part = g.value(a) * rl_integral_right_tol(|t| f.value(t), mu, a, b, outer)?;
    let boundary2 = rl_integral_left_tol(|t| g.value(t), mu, a, b, outer)? * f.value(b);
    let rhs2 = caputo_part + endpoint_part - boundary2;

    Ok(IbpReport {
        left: IbpIdentity::new(lhs1, rhs1),
        right: IbpIdentity::new(lhs2, rhs2),
        quad_tol: tol,
    })
}

/// Outer quadrature whose integrand may itself fail.
fn nested(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut failure = None;
    let value = integrate_adaptive(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        tol,
    );
    match failure {
        Some(e) => Err(e),
        None => value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::WithDerivative;

    #[test]
    fn vanishing_boundary_case() {
        let f = WithDerivative(|x: f64| x * (1.0 - x), |x: f64| 1.0 - 2.0 * x);
        let g = WithDerivative(|x: f64| 1.0 + x * x, |x: f64| 2.0 * x);
        let r = verify_ibp(&f, &g, FracOrder::new(0.4).unwrap(), 0.0, 1.0, 1e-8).unwrap();
        assert!(r.max_residual() <= 1e-7, "{r:?}");
    }

    #[test]
    fn zero_function() {
        let f = WithDerivative(|_| 0.0, |_| 0.0);
        let g = WithDerivative(|x: f64| x.exp(), |x: f64| x.exp());
        let r = verify_ibp(&f, &g, FracOrder::new(0.5).unwrap(), 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(r.left.lhs, 0.0);
        assert!(r.left.rhs.abs() < 1e-12 && r.right.rhs.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = WithDerivative(|x: f64| x, |_| 1.0);
        assert!(verify_ibp(&f, &f, FracOrder::new(1.2).unwrap(), 0.0, 1.0, 1e-8).is_err());
        assert!(verify_ibp(&f, &f, FracOrder::new(0.5).unwrap(), 1.0, 1.0, 1e-8).is_err());
    }
}
