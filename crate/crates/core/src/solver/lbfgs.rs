//! Limited-memory BFGS with backtracking Armijo line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    pub history: usize,
    pub armijo_c: f64,
    pub shrink: f64,
    pub grad_tol: f64,
    pub rel_obj_tol: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            history: 10,
            armijo_c: 1e-4,
            shrink: 0.5,
            grad_tol: 1e-8,
            rel_obj_tol: 1e-12,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimises `f`, which returns the objective and its gradient.
///
/// Trial points where `f` fails with an evaluation or domain error are
/// treated as rejected steps. A non-finite objective is a numerical error.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    x0: Vec<f64>,
    opts: &LbfgsOptions,
) -> Result<LbfgsOutcome> {
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    if !fx.is_finite() {
        return Err(Error::Numerical(format!("objective is {fx} at the initial point")));
    }
    let mut trace = vec![fx];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.history);
    let mut iterations = 0;
    let mut converged = sup(&g) <= opts.grad_tol;

    while !converged && iterations < opts.max_iters {
        let mut d = direction(&g, &mem);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = if mem.is_empty() { (1.0 / sup(&g)).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            match f(&trial) {
                Ok((ft, gt)) => {
                    if ft.is_nan() {
                        return Err(Error::Numerical(format!(
                            "objective is NaN during line search at iteration {iterations}"
                        )));
                    }
                    if ft <= fx + opts.armijo_c * t * slope {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                }
                Err(Error::Eval { .. } | Error::Domain(_)) => {}
                Err(e) => return Err(e),
            }
            t *= opts.shrink;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        iterations += 1;

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > f64::EPSILON * dot(&yv, &yv) {
            if mem.len() == opts.history {
                mem.pop_front();
            }
            mem.push_back((s, yv, 1.0 / sy));
        }

        let decrease = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(fx);
        converged = sup(&g) <= opts.grad_tol || decrease <= opts.rel_obj_tol * fx.abs().max(f64::MIN_POSITIVE);
    }

    debug_assert_eq!(x.len(), n);
    Ok(LbfgsOutcome { grad_sup: sup(&g), x, f: fx, iterations, converged, trace })
}

/// Two-loop recursion for `−H g`.
fn direction(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Ok((f, g))
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(rosenbrock, vec![-1.2, 1.0], &LbfgsOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5, "{out:?}");
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_converges_quickly() {
        let diag = [1.0, 10.0, 100.0, 1000.0];
        let f = |x: &[f64]| {
            let v = x.iter().zip(&diag).map(|(xi, d)| 0.5 * d * xi * xi).sum();
            Ok((v, x.iter().zip(&diag).map(|(xi, d)| d * xi).collect()))
        };
        let out = minimize(f, vec![1.0; 4], &LbfgsOptions::default()).unwrap();
        assert!(out.converged && out.iterations < 50, "{out:?}");
        assert!(out.x.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn rejects_infeasible_trials() {
        // ln(x) - x is maximal at 1; minimising its negative from 3 crosses x <= 0 with long steps
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                return Err(Error::Domain("ln of non-positive".into()));
            }
            Ok((x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]]))
        };
        let out = minimize(f, vec![3.0], &LbfgsOptions::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-4, "{out:?}");
    }

    #[test]
    fn nan_is_numerical_error() {
        let f = |x: &[f64]| if x[0] == 0.5 { Ok((0.0, vec![1.0])) } else { Ok((f64::NAN, vec![0.0])) };
        assert!(matches!(minimize(f, vec![0.5], &LbfgsOptions::default()), Err(Error::Numerical(_))));
    }
}
