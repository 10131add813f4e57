//! Gamma and one-parameter Mittag-Leffler functions.
//!
//! `gamma` uses the Lanczos approximation with `g = 7` and nine coefficients,
//! plus the reflection formula below 0.5. `mittag_leffler` sums the Taylor series
//! `E_α(z) = Σ z^k / Γ(αk + 1)` with compensated summation and is restricted
//! to `|z| ≤ 10`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest |z| accepted by [`mittag_leffler`].
pub const ML_MAX_ARG: f64 = 10.0;
/// Hard cap on the number of series terms.
pub const ML_MAX_TERMS: usize = 200;
const ML_TERM_TOL: f64 = 1e-16;
/// Maximum tolerated estimate of relative round-off from cancelling terms.
const ML_CANCELLATION_TOL: f64 = 1e-9;

/// Order parameter of the Mittag-Leffler function.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MLOrder(f64);

impl MLOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Domain(format!(
                "Mittag-Leffler order must be positive and finite, got {alpha}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Lanczos sum for x >= 0.5, returns (A(x), t) with Γ(x) = √(2π) t^(x-0.5) e^-t A(x).
fn lanczos_parts(x: f64) -> (f64, f64) {
    let xm1 = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (xm1 + i as f64);
    }
    (acc, xm1 + LANCZOS_G + 0.5)
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let (acc, t) = lanczos_parts(x);
        // split the power to postpone overflow for large x
        let half = t.powf(0.5 * (x - 0.5));
        (2.0 * PI).sqrt() * half * (half * (-t).exp()) * acc
    }
}

/// Euler gamma function.
///
/// Fails with a domain error at the poles `0, -1, -2, ...` and for non-finite input.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("gamma has a pole at {x}")));
    }
    if x == x.floor() && x <= 171.0 {
        // exact factorial; every partial product below 171! is representable
        return Ok((2..x as u32).fold(1.0, |acc, k| acc * k as f64));
    }
    Ok(gamma_unchecked(x))
}

/// Natural logarithm of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x < 0.5 {
        // Γ(x) = Γ(x+1)/x keeps the argument in the Lanczos range
        return Ok(ln_gamma(x + 1.0)? - x.ln());
    }
    let (acc, t) = lanczos_parts(x);
    Ok(0.5 * (2.0 * PI).ln() + (x - 0.5) * t.ln() - t + acc.ln())
}

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Series term `k!/(k-m)! · z^(k-m) / Γ(αk+1)`.
fn ml_term(alpha: f64, z: f64, k: usize, m: usize) -> f64 {
    let arg = alpha * k as f64 + 1.0;
    let p = (k - m) as i32;
    if arg < 170.0 {
        let falling: f64 = ((k - m + 1)..=k).map(|j| j as f64).product();
        // arg >= 1 is never a pole
        let g = gamma(arg).unwrap_or(f64::NAN);
        let direct = falling * z.powi(p) / g;
        if direct.is_finite() {
            return direct;
        }
    }
    if z == 0.0 {
        return 0.0;
    }
    // unwrap: both arguments are >= 1
    let log_falling = ln_gamma(k as f64 + 1.0).unwrap() - ln_gamma((k - m) as f64 + 1.0).unwrap();
    let log_mag = log_falling + p as f64 * z.abs().ln() - ln_gamma(arg).unwrap();
    let sign = if z < 0.0 && p % 2 != 0 { -1.0 } else { 1.0 };
    sign * log_mag.exp()
}

fn ml_series(alpha: MLOrder, z: f64, order: usize) -> Result<f64> {
    if !z.is_finite() || z.abs() > ML_MAX_ARG {
        return Err(Error::OutOfRange(format!(
            "Mittag-Leffler argument {z} outside supported range |z| <= {ML_MAX_ARG}"
        )));
    }
    let a = alpha.value();
    let mut sum = CompensatedSum::default();
    let mut abs_sum = 0.0;
    for k in order..(order + ML_MAX_TERMS) {
        let term = ml_term(a, z, k, order);
        let partial = sum.value();
        if k > order && term.abs() < ML_TERM_TOL * (1.0 + partial.abs()) {
            let value = sum.value();
            if f64::EPSILON * abs_sum > ML_CANCELLATION_TOL * value.abs().max(1.0) {
                return Err(Error::Accuracy(format!(
                    "Mittag-Leffler series at z = {z} lost precision to cancellation"
                )));
            }
            return Ok(value);
        }
        sum.add(term);
        abs_sum += term.abs();
    }
    Err(Error::Accuracy(format!(
        "Mittag-Leffler series for alpha = {a}, z = {z} did not converge in {ML_MAX_TERMS} terms"
    )))
}

/// One-parameter Mittag-Leffler function `E_α(z)` for real `|z| ≤ 10`.
pub fn mittag_leffler(alpha: MLOrder, z: f64) -> Result<f64> {
    ml_series(alpha, z, 0)
}

/// Derivative `d^m/dz^m E_α(z)` from the term-wise differentiated series.
pub fn mittag_leffler_derivative(alpha: MLOrder, z: f64, m: usize) -> Result<f64> {
    ml_series(alpha, z, m)
}
