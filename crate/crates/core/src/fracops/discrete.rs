#![allow(clippy::needless_range_loop)]

use rayon::prelude::*;

use super::{FracOrder, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::specfun::gamma;

/// Grids at least this large evaluate nodes in parallel. Each node's
/// convolution is summed in a fixed order, so results do not depend on the
/// thread count.
const PAR_THRESHOLD: usize = 512;

fn fill_nodes(out: &mut [f64], node: impl Fn(usize) -> f64 + Sync) {
    if out.len() >= PAR_THRESHOLD {
        out.par_iter_mut()
            .enumerate()
            .with_min_len(32)
            .for_each(|(i, o)| *o = node(i));
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o = node(i);
        }
    }
}

/// L1 discretisation of the Caputo derivative on a uniform grid.
///
/// At node `i ≥ 1` the left derivative is
/// `h^(−α)/Γ(2−α) · Σ_{k<i} b_k (f_{i−k} − f_{i−k−1})` with
/// `b_k = (k+1)^(1−α) − k^(1−α)`; node 0 is zero. The right derivative is the
/// reflection of the left one. Both are linear maps; the transposes are
/// exposed for gradient computations.
#[derive(Debug, Clone)]
pub struct CaputoL1 {
    n: usize,
    coef: f64,
    b: Vec<f64>,
    /// `d_0 = b_0`, `d_k = b_k − b_{k−1}`: column weights of the matrix form.
    d: Vec<f64>,
}

impl CaputoL1 {
    pub fn new(grid: &Grid, alpha: FracOrder) -> Result<Self> {
        alpha.require_derivative()?;
        let n = grid.n_nodes();
        let al = alpha.value();
        let p = 1.0 - al;
        let b: Vec<f64> = (0..n)
            .map(|k| ((k + 1) as f64).powf(p) - (k as f64).powf(p))
            .collect();
        let mut d = Vec::with_capacity(n);
        d.push(b[0]);
        d.extend(b.windows(2).map(|w| w[1] - w[0]));
        Ok(Self { n, coef: grid.h().powf(-al) / gamma(2.0 - al)?, b, d })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Diagonal entry, `∂v_i/∂f_i` for `i ≥ 1`.
    pub fn diagonal(&self) -> f64 {
        self.coef * self.b[0]
    }

    pub fn apply_left(&self, f: &[f64], out: &mut [f64]) {
        assert_eq!(f.len(), self.n);
        assert_eq!(out.len(), self.n);
        fill_nodes(out, |i| {
            if i == 0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for k in 0..i {
                acc += self.b[k] * (f[i - k] - f[i - k - 1]);
            }
            self.coef * acc
        });
    }

    pub fn apply_left_transpose(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.n);
        assert_eq!(out.len(), self.n);
        let n = self.n;
        fill_nodes(out, |j| {
            if j == 0 {
                let mut acc = 0.0;
                for i in 1..n {
                    acc -= self.b[i - 1] * u[i];
                }
                return self.coef * acc;
            }
            let mut acc = 0.0;
            for i in j..n {
                acc += self.d[i - j] * u[i];
            }
            self.coef * acc
        });
    }

    pub fn apply_right(&self, f: &[f64], out: &mut [f64]) {
        let rev: Vec<f64> = f.iter().rev().copied().collect();
        self.apply_left(&rev, out);
        out.reverse();
    }

    pub fn apply_right_transpose(&self, u: &[f64], out: &mut [f64]) {
        let rev: Vec<f64> = u.iter().rev().copied().collect();
        self.apply_left_transpose(&rev, out);
        out.reverse();
    }
}

/// Product-trapezoidal Riemann-Liouville integral: `f` is replaced by its
/// piecewise-linear interpolant and integrated exactly against the kernel.
#[derive(Debug, Clone)]
pub struct ProductTrapezoid {
    n: usize,
    scale: f64,
    /// Interior weights indexed by `k = i − j ≥ 1`.
    interior: Vec<f64>,
    /// Weight of node 0 in the value at node `i`.
    first: Vec<f64>,
    mu: f64,
}

impl ProductTrapezoid {
    pub fn new(grid: &Grid, order: FracOrder) -> Result<Self> {
        let n = grid.n_nodes();
        let mu = order.value();
        let q = mu + 1.0;
        let pw = |k: f64| k.powf(q);
        let interior = (0..n)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    let k = k as f64;
                    pw(k + 1.0) + pw(k - 1.0) - 2.0 * pw(k)
                }
            })
            .collect();
        let first = (0..n)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    let i = i as f64;
                    pw(i - 1.0) - (i - 1.0 - mu) * i.powf(mu)
                }
            })
            .collect();
        Ok(Self { n, scale: grid.h().powf(mu) / gamma(mu + 2.0)?, interior, first, mu })
    }

    fn left_at(&self, f: &[f64], i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let mut acc = self.first[i] * f[0];
        for j in 1..i {
            acc += self.interior[i - j] * f[j];
        }
        acc += f[i];
        self.scale * acc
    }

    pub fn apply_left(&self, f: &[f64], out: &mut [f64]) {
        assert_eq!(f.len(), self.n);
        assert_eq!(out.len(), self.n);
        fill_nodes(out, |i| self.left_at(f, i));
    }

    pub fn apply_right(&self, f: &[f64], out: &mut [f64]) {
        let rev: Vec<f64> = f.iter().rev().copied().collect();
        self.apply_left(&rev, out);
        out.reverse();
    }

    /// Right integral evaluated at the second-to-last node; only the last cell contributes.
    pub fn right_at_penultimate(&self, f: &[f64]) -> f64 {
        let n = self.n;
        self.scale * (self.mu * f[n - 1] + f[n - 2])
    }
}

fn central_difference(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// L1 left Caputo derivative of order `alpha ∈ (0, 1)`.
pub fn caputo_left(f: &GridFunction, alpha: FracOrder) -> Result<GridFunction> {
    let op = CaputoL1::new(f.grid(), alpha)?;
    let mut out = vec![0.0; f.len()];
    op.apply_left(f.values(), &mut out);
    GridFunction::new(*f.grid(), out)
}

/// L1 right Caputo derivative, the reflection of [`caputo_left`].
pub fn caputo_right(f: &GridFunction, beta: FracOrder) -> Result<GridFunction> {
    let op = CaputoL1::new(f.grid(), beta)?;
    let mut out = vec![0.0; f.len()];
    op.apply_right(f.values(), &mut out);
    GridFunction::new(*f.grid(), out)
}

/// Product-trapezoidal left Riemann-Liouville integral of any positive order.
pub fn rl_integral_left_grid(f: &GridFunction, order: FracOrder) -> Result<GridFunction> {
    let op = ProductTrapezoid::new(f.grid(), order)?;
    let mut out = vec![0.0; f.len()];
    op.apply_left(f.values(), &mut out);
    GridFunction::new(*f.grid(), out)
}

/// Product-trapezoidal right Riemann-Liouville integral.
pub fn rl_integral_right_grid(f: &GridFunction, order: FracOrder) -> Result<GridFunction> {
    let op = ProductTrapezoid::new(f.grid(), order)?;
    let mut out = vec![0.0; f.len()];
    op.apply_right(f.values(), &mut out);
    GridFunction::new(*f.grid(), out)
}

/// Left Riemann-Liouville derivative: `d/dx` of the product-trapezoidal
/// integral of order `1 − β`, by central differences with second-order
/// one-sided formulas at both end nodes. End values are extrapolations and
/// should not be trusted when `f(a) ≠ 0`.
pub fn rl_derivative_left(f: &GridFunction, beta: FracOrder) -> Result<GridFunction> {
    beta.require_derivative()?;
    let integral = rl_integral_left_grid(f, beta.complement())?;
    GridFunction::new(*f.grid(), central_difference(integral.values(), f.grid().h()))
}

/// Right Riemann-Liouville derivative `−d/dx xI_b^(1−α) f`, the reflection of
/// [`rl_derivative_left`].
pub fn rl_derivative_right(f: &GridFunction, alpha: FracOrder) -> Result<GridFunction> {
    Ok(rl_derivative_left(&f.reflected(), alpha)?.reflected())
}

/// Left Riemann-Liouville derivative of signed order `k < 1`, where orders
/// `k < 0` denote the integral of order `−k` and `k = 0` is the identity.
pub fn rl_derivative_left_signed(f: &GridFunction, k: f64) -> Result<GridFunction> {
    match signed(k)? {
        Signed::Integral(o) => rl_integral_left_grid(f, o),
        Signed::Identity => Ok(f.clone()),
        Signed::Derivative(o) => rl_derivative_left(f, o),
    }
}

/// Right-sided counterpart of [`rl_derivative_left_signed`].
pub fn rl_derivative_right_signed(f: &GridFunction, k: f64) -> Result<GridFunction> {
    match signed(k)? {
        Signed::Integral(o) => rl_integral_right_grid(f, o),
        Signed::Identity => Ok(f.clone()),
        Signed::Derivative(o) => rl_derivative_right(f, o),
    }
}

enum Signed {
    Integral(FracOrder),
    Identity,
    Derivative(FracOrder),
}

fn signed(k: f64) -> Result<Signed> {
    if !k.is_finite() {
        return Err(Error::Order(format!("order {k} is not finite")));
    }
    if k < 0.0 {
        Ok(Signed::Integral(FracOrder::new(-k)?))
    } else if k == 0.0 {
        Ok(Signed::Identity)
    } else {
        Ok(Signed::Derivative(FracOrder::derivative(k)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::rl_integral_left_tol;

    fn grid(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    fn ord(v: f64) -> FracOrder {
        FracOrder::new(v).unwrap()
    }

    #[test]
    fn caputo_of_constant_vanishes() {
        let f = GridFunction::from_fn(grid(33), |_| 3.5).unwrap();
        assert!(caputo_left(&f, ord(0.4)).unwrap().values().iter().all(|v| *v == 0.0));
        assert!(caputo_right(&f, ord(0.4)).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn caputo_of_linear_function() {
        // the L1 scheme is exact on piecewise-linear data: D^α x = x^(1−α)/Γ(2−α)
        let g = grid(65);
        let f = GridFunction::from_fn(g, |x| x).unwrap();
        let d = caputo_left(&f, ord(0.5)).unwrap();
        for (x, v) in g.nodes().zip(d.values()) {
            let exact = 2.0 * (x / std::f64::consts::PI).sqrt();
            assert!((v - exact).abs() < 1e-13, "x = {x}");
        }
        let r = caputo_right(&GridFunction::from_fn(g, |x| 1.0 - x).unwrap(), ord(0.5)).unwrap();
        for (x, v) in g.nodes().zip(r.values()) {
            assert!((v - 2.0 * ((1.0 - x) / std::f64::consts::PI).sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn order_errors() {
        let f = GridFunction::from_fn(grid(9), |x| x).unwrap();
        assert!(matches!(caputo_left(&f, ord(1.0)), Err(Error::Order(_))));
        assert!(matches!(rl_derivative_right(&f, ord(1.5)), Err(Error::Order(_))));
        assert!(rl_integral_left_grid(&f, ord(1.5)).is_ok());
    }

    #[test]
    fn transpose_matches_matrix() {
        let g = grid(11);
        let op = CaputoL1::new(&g, ord(0.3)).unwrap();
        let n = g.n_nodes();
        let mut cols = vec![vec![0.0; n]; n];
        let mut e = vec![0.0; n];
        for (j, col) in cols.iter_mut().enumerate() {
            e.fill(0.0);
            e[j] = 1.0;
            op.apply_left(&e, col);
        }
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut t = vec![0.0; n];
        op.apply_left_transpose(&u, &mut t);
        for j in 0..n {
            let direct: f64 = (0..n).map(|i| cols[j][i] * u[i]).sum();
            assert!((direct - t[j]).abs() < 1e-12);
        }
        let mut rt = vec![0.0; n];
        let mut rcol = vec![0.0; n];
        op.apply_right_transpose(&u, &mut rt);
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            op.apply_right(&e, &mut rcol);
            let direct: f64 = (0..n).map(|i| rcol[i] * u[i]).sum();
            assert!((direct - rt[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn product_trapezoid_exact_on_linear() {
        let g = grid(17);
        for mu in [0.3, 0.5, 1.4] {
            let one = rl_integral_left_grid(&GridFunction::from_fn(g, |_| 1.0).unwrap(), ord(mu)).unwrap();
            let lin = rl_integral_left_grid(&GridFunction::from_fn(g, |x| x).unwrap(), ord(mu)).unwrap();
            for (i, x) in g.nodes().enumerate() {
                let e1 = x.powf(mu) / gamma(mu + 1.0).unwrap();
                let e2 = x.powf(mu + 1.0) / gamma(mu + 2.0).unwrap();
                assert!((one.values()[i] - e1).abs() < 1e-13);
                assert!((lin.values()[i] - e2).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn product_trapezoid_hat_functions() {
        // each weight equals the kernel integral of a hat basis function
        let g = grid(9);
        let n = g.n_nodes();
        for j in [0, 3, 8] {
            let mut hat = vec![0.0; n];
            hat[j] = 1.0;
            let hat_fn = GridFunction::new(g, hat).unwrap();
            let numeric = rl_integral_left_grid(&hat_fn, ord(0.6)).unwrap();
            let hf = |t: f64| hat_fn.interpolate(t).unwrap();
            for i in 1..n {
                let oracle = rl_integral_left_tol(hf, ord(0.6), 0.0, g.node(i), 1e-14).unwrap();
                assert!((numeric.values()[i] - oracle).abs() < 1e-10, "i = {i}, j = {j}");
            }
        }
    }

    #[test]
    fn rl_derivative_of_constant() {
        let g = grid(257);
        let f = GridFunction::from_fn(g, |_| 1.0).unwrap();
        let d = rl_derivative_left(&f, ord(0.5)).unwrap();
        let c = 1.0 / gamma(0.5).unwrap();
        for i in 20..g.n_nodes() - 1 {
            let x = g.node(i);
            assert!((d.values()[i] - c * x.powf(-0.5)).abs() < 2e-3 * x.powf(-0.5), "x = {x}");
        }
        let zero = rl_derivative_left(&GridFunction::zeros(g), ord(0.5)).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rl_matches_caputo_when_endpoint_vanishes() {
        let g = grid(257);
        let f = GridFunction::from_fn(g, |x| x * x).unwrap();
        let rl = rl_derivative_left(&f, ord(0.5)).unwrap();
        let c = caputo_left(&f, ord(0.5)).unwrap();
        let err = (0..g.n_nodes()).map(|i| (rl.values()[i] - c.values()[i]).abs()).fold(0.0, f64::max);
        assert!(err < 5e-2, "err = {err}");

        let fr = GridFunction::from_fn(g, |x| (1.0 - x) * (1.0 - x)).unwrap();
        let rr = rl_derivative_right(&fr, ord(0.5)).unwrap();
        let cr = caputo_right(&fr, ord(0.5)).unwrap();
        let err = (0..g.n_nodes()).map(|i| (rr.values()[i] - cr.values()[i]).abs()).fold(0.0, f64::max);
        assert!(err < 5e-2, "err = {err}");
    }

    #[test]
    fn reflection_identities() {
        let g = grid(40);
        let f = GridFunction::from_fn(g, |x| (2.0 * x).exp() + x * x * x).unwrap();
        let a = caputo_right(&f, ord(0.35)).unwrap();
        let b = caputo_left(&f.reflected(), ord(0.35)).unwrap().reflected();
        assert_eq!(a, b);
        let a = rl_derivative_right(&f, ord(0.6)).unwrap();
        let b = rl_derivative_left(&f.reflected(), ord(0.6)).unwrap().reflected();
        assert_eq!(a, b);
    }

    #[test]
    fn signed_order_routing() {
        let g = grid(21);
        let f = GridFunction::from_fn(g, |x| 1.0 + x).unwrap();
        assert_eq!(rl_derivative_left_signed(&f, 0.0).unwrap(), f);
        assert_eq!(
            rl_derivative_left_signed(&f, -0.4).unwrap(),
            rl_integral_left_grid(&f, ord(0.4)).unwrap()
        );
        assert_eq!(
            rl_derivative_right_signed(&f, -0.4).unwrap(),
            rl_integral_right_grid(&f, ord(0.4)).unwrap()
        );
        assert!(rl_derivative_left_signed(&f, 1.0).is_err());
    }

    #[test]
    fn penultimate_right_integral() {
        let g = grid(12);
        let f = GridFunction::from_fn(g, |x| x.cos()).unwrap();
        let op = ProductTrapezoid::new(&g, ord(0.3)).unwrap();
        let full = rl_integral_right_grid(&f, ord(0.3)).unwrap();
        assert!((op.right_at_penultimate(f.values()) - full.values()[10]).abs() < 1e-15);
    }

    #[test]
    fn parallel_and_serial_agree_bitwise() {
        let g = grid(PAR_THRESHOLD + 7);
        let f = GridFunction::from_fn(g, |x| (5.0 * x).sin()).unwrap();
        let op = CaputoL1::new(&g, ord(0.45)).unwrap();
        let par = caputo_left(&f, ord(0.45)).unwrap();
        let mut serial = vec![0.0; g.n_nodes()];
        for (i, s) in serial.iter_mut().enumerate().skip(1) {
            let mut acc = 0.0;
            for k in 0..i {
                acc += op.b[k] * (f.values()[i - k] - f.values()[i - k - 1]);
            }
            *s = op.coef * acc;
        }
        assert_eq!(par.values(), &serial[..]);
    }
}
