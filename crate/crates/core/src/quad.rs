//! Gauss-Legendre rules and an adaptive bisection integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n from the Chebyshev initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Applies the rule on [a, b].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The 32-point rule used by the adaptive integrator.
pub fn gl32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

/// Panels narrower than `2^-MAX_DEPTH` of the interval are never split.
const MAX_DEPTH: u32 = 100;
const MAX_PANELS: usize = 20_000;

/// Relative accuracy treated as converged regardless of the requested tolerance.
pub const ROUNDOFF_FLOOR: f64 = 64.0 * f64::EPSILON;

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: u32,
}

impl Panel {
    fn new(f: &mut impl FnMut(f64) -> f64, rule: &GaussLegendre, a: f64, b: f64, whole: f64, depth: u32) -> Self {
        let mid = 0.5 * (a + b);
        let value = rule.integrate(&mut *f, a, mid) + rule.integrate(&mut *f, mid, b);
        let err = if mid <= a || mid >= b { 0.0 } else { (value - whole).abs() };
        Self { a, b, value, err, depth }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // largest error first, leftmost panel on ties
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive 32-point Gauss-Legendre quadrature of `f` over [a, b].
///
/// The panel with the largest error estimate (difference between the rule on
/// the panel and on its two halves) is bisected until the summed estimate is
/// below `tol` or below the round-off floor relative to the integral.
pub fn integrate_adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = gl32();
    let tol = tol.max(0.0);
    let whole = rule.integrate(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel::new(&mut f, rule, a, b, whole, 0));
    let mut panels = 1usize;
    let (mut value, mut err) = (heap.peek().map_or(0.0, |p| p.value), heap.peek().map_or(0.0, |p| p.err));
    loop {
        if !value.is_finite() || !err.is_finite() {
            return Err(Error::Accuracy(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= tol || err <= ROUNDOFF_FLOOR * value.abs() {
            // re-sum to drop the drift of the running totals
            return Ok(heap.iter().map(|p| p.value).sum());
        }
        let worst = heap.pop().expect("heap is never empty");
        if worst.depth >= MAX_DEPTH || panels >= MAX_PANELS {
            return Err(Error::Accuracy(format!(
                "adaptive quadrature did not reach tolerance {tol:e} on [{a}, {b}] (estimate {err:e}, worst panel [{}, {}])",
                worst.a, worst.b
            )));
        }
        let mid = 0.5 * (worst.a + worst.b);
        let lw = rule.integrate(&mut f, worst.a, mid);
        let rw = rule.integrate(&mut f, mid, worst.b);
        let left = Panel::new(&mut f, rule, worst.a, mid, lw, worst.depth + 1);
        let right = Panel::new(&mut f, rule, mid, worst.b, rw, worst.depth + 1);
        value += left.value + right.value - worst.value;
        err = (err + left.err + right.err - worst.err).max(0.0);
        heap.push(left);
        heap.push(right);
        panels += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // degree 15 is exact for 8 nodes
        let v = rule.integrate(|x| x.powi(14) + x.powi(3), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-15);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl32_weights_sum_to_two() {
        let w: f64 = gl32().weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
        assert!(gl32().nodes.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = integrate_adaptive(|x| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_smooth() {
        let v = integrate_adaptive(f64::sin, 0.0, PI, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        assert_eq!(integrate_adaptive(f64::sin, 1.0, 1.0, 1e-13).unwrap(), 0.0);
    }

    #[test]
    fn adaptive_square_root_behaviour() {
        // E_1/2(√x)² has a √x-type term at 0
        let e = crate::specfun::MLOrder::new(0.5).unwrap();
        let f = |x: f64| crate::specfun::mittag_leffler(e, x.sqrt()).unwrap().powi(2);
        let coarse = integrate_adaptive(f, 0.0, 1.0, 1e-10).unwrap();
        let fine = integrate_adaptive(f, 0.0, 1.0, 1e-13).unwrap();
        assert!((coarse - fine).abs() < 1e-10);
    }

    #[test]
    fn adaptive_reports_nonfinite() {
        assert!(integrate_adaptive(|x| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }
}
