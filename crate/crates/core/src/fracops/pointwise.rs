use super::FracOrder;
use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;
use crate::specfun::gamma;

/// Absolute tolerance used by the pointwise operators unless overridden.
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

/// A continuously differentiable function known together with its derivative.
pub trait SmoothFn {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// Pairs a function with its derivative.
#[derive(Debug, Clone, Copy)]
pub struct WithDerivative<F, D>(pub F, pub D);

impl<F: Fn(f64) -> f64, D: Fn(f64) -> f64> SmoothFn for WithDerivative<F, D> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.1)(x)
    }
}

/// Left Riemann-Liouville integral `(1/Γ(α)) ∫_a^x (x−t)^(α−1) f(t) dt`.
pub fn rl_integral_left(f: impl Fn(f64) -> f64, alpha: FracOrder, a: f64, x: f64) -> Result<f64> {
    rl_integral_left_tol(f, alpha, a, x, DEFAULT_QUAD_TOL)
}

/// [`rl_integral_left`] with an explicit absolute tolerance.
///
/// The substitution `t = x − (x−a)·s^(1/α)` turns the integral into
/// `(x−a)^α/Γ(α+1) · ∫_0^1 f(x − (x−a)s^(1/α)) ds`, whose integrand is bounded.
pub fn rl_integral_left_tol(
    f: impl Fn(f64) -> f64,
    alpha: FracOrder,
    a: f64,
    x: f64,
    tol: f64,
) -> Result<f64> {
    if !(x >= a) {
        return Err(Error::Domain(format!(
            "left integral needs x >= a, got x = {x}, a = {a}"
        )));
    }
    if x == a {
        return Ok(0.0);
    }
    let al = alpha.value();
    let len = x - a;
    let scale = len.powf(al) / gamma(al + 1.0)?;
    let inv = 1.0 / al;
    let inner = integrate_adaptive(|s| f(x - len * s.powf(inv)), 0.0, 1.0, tol / scale)?;
    Ok(scale * inner)
}

/// Right Riemann-Liouville integral `(1/Γ(α)) ∫_x^b (t−x)^(α−1) f(t) dt`.
pub fn rl_integral_right(f: impl Fn(f64) -> f64, alpha: FracOrder, x: f64, b: f64) -> Result<f64> {
    rl_integral_right_tol(f, alpha, x, b, DEFAULT_QUAD_TOL)
}

/// [`rl_integral_right`] with an explicit absolute tolerance.
pub fn rl_integral_right_tol(
    f: impl Fn(f64) -> f64,
    alpha: FracOrder,
    x: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    if !(x <= b) {
        return Err(Error::Domain(format!(
            "right integral needs x <= b, got x = {x}, b = {b}"
        )));
    }
    if x == b {
        return Ok(0.0);
    }
    let al = alpha.value();
    let len = b - x;
    let scale = len.powf(al) / gamma(al + 1.0)?;
    let inv = 1.0 / al;
    let inner = integrate_adaptive(|s| f(x + len * s.powf(inv)), 0.0, 1.0, tol / scale)?;
    Ok(scale * inner)
}

/// Left Caputo derivative `aI_x^(1−α)[f′](x)`.
pub fn caputo_left_at(f: &impl SmoothFn, alpha: FracOrder, a: f64, x: f64, tol: f64) -> Result<f64> {
    alpha.require_derivative()?;
    rl_integral_left_tol(|t| f.derivative(t), alpha.complement(), a, x, tol)
}

/// Right Caputo derivative `xI_b^(1−α)[−f′](x)`.
pub fn caputo_right_at(f: &impl SmoothFn, alpha: FracOrder, x: f64, b: f64, tol: f64) -> Result<f64> {
    alpha.require_derivative()?;
    Ok(-rl_integral_right_tol(|t| f.derivative(t), alpha.complement(), x, b, tol)?)
}

/// Left Riemann-Liouville derivative of a C¹ function,
/// `f(a)(x−a)^(−α)/Γ(1−α) + ᶜD^α f(x)`; singular at `x = a` unless `f(a) = 0`.
pub fn rl_derivative_left_at(
    f: &impl SmoothFn,
    alpha: FracOrder,
    a: f64,
    x: f64,
    tol: f64,
) -> Result<f64> {
    let caputo = caputo_left_at(f, alpha, a, x, tol)?;
    let fa = f.value(a);
    if fa == 0.0 {
        return Ok(caputo);
    }
    if x == a {
        return Err(Error::Domain(
            "left Riemann-Liouville derivative is singular at x = a".into(),
        ));
    }
    Ok(fa * (x - a).powf(-alpha.value()) / gamma(1.0 - alpha.value())? + caputo)
}

/// Right Riemann-Liouville derivative of a C¹ function,
/// `f(b)(b−x)^(−α)/Γ(1−α) + ᶜD^α f(x)`.
pub fn rl_derivative_right_at(
    f: &impl SmoothFn,
    alpha: FracOrder,
    x: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let caputo = caputo_right_at(f, alpha, x, b, tol)?;
    let fb = f.value(b);
    if fb == 0.0 {
        return Ok(caputo);
    }
    if x == b {
        return Err(Error::Domain(
            "right Riemann-Liouville derivative is singular at x = b".into(),
        ));
    }
    Ok(fb * (b - x).powf(-alpha.value()) / gamma(1.0 - alpha.value())? + caputo)
}
