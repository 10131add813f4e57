use fracvar::fracops::{
    caputo_left, caputo_left_at, caputo_right, rl_derivative_left, rl_derivative_right, rl_integral_left,
    rl_integral_left_tol, rl_integral_right, verify_ibp, FracOrder, Grid, GridFunction, Operator,
    WithDerivative,
};
use fracvar::specfun::{gamma, mittag_leffler, MLOrder};
use fracvar::varcalc::boundary_layer;
use proptest::prelude::*;

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * x + k)
}

fn horner_deriv(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (i, k)| acc * x + i as f64 * k)
}

fn poly_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 1..=5)
}

fn sampled(grid: &Grid, c: &[f64]) -> GridFunction {
    GridFunction::from_fn(*grid, |x| horner(c, x)).unwrap()
}

fn interior_error(f: &GridFunction, exact: impl Fn(f64) -> f64) -> f64 {
    let n = f.len();
    let k = boundary_layer(n);
    (k..n - k).map(|i| (f.values()[i] - exact(f.grid().node(i))).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operators_are_linear(
        p in poly_strategy(),
        q in poly_strategy(),
        c1 in -3.0f64..3.0,
        c2 in -3.0f64..3.0,
        alpha in 0.05f64..0.95,
    ) {
        let grid = Grid::new(0.0, 1.0, 97).unwrap();
        let (f, g) = (sampled(&grid, &p), sampled(&grid, &q));
        let mix = f.combine(c1, c2, &g).unwrap();
        for op in Operator::ALL {
            let lhs = op.apply(&mix, order(alpha)).unwrap();
            let rhs = op.apply(&f, order(alpha)).unwrap().combine(c1, c2, &op.apply(&g, order(alpha)).unwrap()).unwrap();
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0), "{op}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn integrals_compose(p in poly_strategy(), a in 0.05f64..0.95, b in 0.05f64..0.95, x in 0.05f64..1.0) {
        let f = |t: f64| horner(&p, t);
        let inner = |s: f64| rl_integral_left_tol(f, order(a), 0.0, s, 1e-13).unwrap();
        let lhs = rl_integral_left_tol(inner, order(b), 0.0, x, 1e-11).unwrap();
        let rhs = rl_integral_left(f, order(a + b), 0.0, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn grid_reflection(p in poly_strategy(), alpha in 0.05f64..0.95) {
        let grid = Grid::new(-1.0, 0.5, 65).unwrap();
        let f = sampled(&grid, &p);
        let right = caputo_right(&f, order(alpha)).unwrap();
        let mirrored = caputo_left(&f.reflected(), order(alpha)).unwrap().reflected();
        prop_assert_eq!(right.values(), mirrored.values());
        let right = rl_derivative_right(&f, order(alpha)).unwrap();
        let mirrored = rl_derivative_left(&f.reflected(), order(alpha)).unwrap().reflected();
        prop_assert_eq!(right.values(), mirrored.values());
    }

    #[test]
    fn pointwise_mirror(p in poly_strategy(), alpha in 0.1f64..1.9, x in 0.0f64..1.0) {
        let (a, b) = (0.0, 1.0);
        let right = rl_integral_right(|t| horner(&p, t), order(alpha), x, b).unwrap();
        let left = rl_integral_left(|t| horner(&p, a + b - t), order(alpha), a, a + b - x).unwrap();
        prop_assert!((right - left).abs() <= 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn integration_by_parts(p in poly_strategy(), q in poly_strategy(), alpha in 0.1f64..0.9) {
        let tol = 1e-8;
        let f = WithDerivative(|x| horner(&p, x), |x| horner_deriv(&p, x));
        let g = WithDerivative(|x| horner(&q, x), |x| horner_deriv(&q, x));
        let rep = verify_ibp(&f, &g, order(alpha), 0.0, 1.0, tol).unwrap();
        prop_assert!(rep.max_residual() <= 10.0 * tol, "{rep:?}");
    }
}

#[test]
fn power_rule_convergence() {
    for alpha in [0.3, 0.5, 0.7] {
        let exact = |x: f64| 2.0 * x.powf(2.0 - alpha) / gamma(3.0 - alpha).unwrap();
        let errs: Vec<f64> = [65, 129, 257, 513]
            .iter()
            .map(|&n| {
                let f = GridFunction::from_fn(Grid::new(0.0, 1.0, n).unwrap(), |x| x * x).unwrap();
                interior_error(&caputo_left(&f, order(alpha)).unwrap(), exact)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio >= 0.8 * 2f64.powf(2.0 - alpha), "alpha = {alpha}, errors {errs:?}");
        }
    }
}

#[test]
fn near_classical_order() {
    let grid = Grid::new(0.0, 1.0, 129).unwrap();
    let f = GridFunction::from_fn(grid, |x| (2.0 * x).sin() + x * x).unwrap();
    let d = caputo_left(&f, order(0.999)).unwrap();
    let h = grid.h();
    let k = boundary_layer(129);
    for i in k..129 - k {
        let fd = (f.values()[i + 1] - f.values()[i - 1]) / (2.0 * h);
        assert!((d.values()[i] - fd).abs() <= 5e-2, "node {i}");
    }
}

#[test]
fn constant_rules() {
    for alpha in [0.3, 0.5, 1.5] {
        for x in [0.0f64, 0.25, 1.0] {
            let exact = x.powf(alpha) / gamma(alpha + 1.0).unwrap();
            assert!((rl_integral_left(|_| 1.0, order(alpha), 0.0, x).unwrap() - exact).abs() < 1e-13);
            let exact = (1.0 - x).powf(alpha) / gamma(alpha + 1.0).unwrap();
            assert!((rl_integral_right(|_| 1.0, order(alpha), x, 1.0).unwrap() - exact).abs() < 1e-13);
        }
    }
    let exact = gamma(2.0).unwrap() / gamma(2.5).unwrap();
    assert!((rl_integral_left(|t| t, order(0.5), 0.0, 1.0).unwrap() - exact).abs() < 1e-13);
}

#[test]
fn caputo_examples() {
    let grid = Grid::new(0.0, 1.0, 257).unwrap();
    let c = GridFunction::from_fn(grid, |_| 3.5).unwrap();
    assert!(caputo_left(&c, order(0.5)).unwrap().values().iter().all(|v| *v == 0.0));
    assert!(caputo_right(&c, order(0.5)).unwrap().values().iter().all(|v| *v == 0.0));

    let lin = GridFunction::from_fn(grid, |x| x).unwrap();
    let e = interior_error(&caputo_left(&lin, order(0.5)).unwrap(), |x| 2.0 * (x / std::f64::consts::PI).sqrt());
    assert!(e < 1e-12, "{e}");
    let lin = GridFunction::from_fn(grid, |x| 1.0 - x).unwrap();
    let e = interior_error(&caputo_right(&lin, order(0.5)).unwrap(), |x| 2.0 * ((1.0 - x) / std::f64::consts::PI).sqrt());
    assert!(e < 1e-12, "{e}");

    let ml = |x: f64| mittag_leffler(MLOrder::new(0.5).unwrap(), x.sqrt()).unwrap();
    let y = GridFunction::from_fn(grid, ml).unwrap();
    assert!(interior_error(&caputo_left(&y, order(0.5)).unwrap(), ml) < 5e-2);
}

#[test]
fn riemann_liouville_examples() {
    let mut last = f64::INFINITY;
    for n in [65, 129, 257] {
        let grid = Grid::new(0.0, 1.0, n).unwrap();
        let sq = GridFunction::from_fn(grid, |x| x * x).unwrap();
        let rl = rl_derivative_left(&sq, order(0.5)).unwrap();
        let cap = caputo_left(&sq, order(0.5)).unwrap();
        let diff = interior_error(&rl, |x| cap.interpolate(x).unwrap());
        assert!(diff <= 5e-2 && diff < last, "n = {n}, {diff}");
        last = diff;

        let sq = GridFunction::from_fn(grid, |x| (1.0 - x).powi(2)).unwrap();
        let rl = rl_derivative_right(&sq, order(0.5)).unwrap();
        let cap = caputo_right(&sq, order(0.5)).unwrap();
        assert!(interior_error(&rl, |x| cap.interpolate(x).unwrap()) <= 5e-2);
    }
    let grid = Grid::new(0.0, 1.0, 257).unwrap();
    let one = GridFunction::from_fn(grid, |_| 1.0).unwrap();
    let rl = rl_derivative_left(&one, order(0.5)).unwrap();
    let g = gamma(0.5).unwrap();
    let k = boundary_layer(257);
    for i in k..257 - k {
        let x = grid.node(i);
        let exact = x.powf(-0.5) / g;
        assert!((rl.values()[i] - exact).abs() <= 1e-2 * exact, "node {i}");
    }
    let zero = GridFunction::zeros(grid);
    assert!(rl_derivative_left(&zero, order(0.5)).unwrap().values().iter().all(|v| *v == 0.0));
    assert!(rl_derivative_right(&zero, order(0.5)).unwrap().values().iter().all(|v| *v == 0.0));
}

#[test]
fn ibp_examples() {
    let tol = 1e-8;
    let f = WithDerivative(|x: f64| x * (1.0 - x), |x: f64| 1.0 - 2.0 * x);
    let g = WithDerivative(|x: f64| 1.0 + x * x, |x: f64| 2.0 * x);
    assert!(verify_ibp(&f, &g, order(0.4), 0.0, 1.0, tol).unwrap().max_residual() <= 10.0 * tol);
    let f = WithDerivative(|x: f64| x.powi(3), |x: f64| 3.0 * x * x);
    assert!(verify_ibp(&f, &g, order(0.4), 0.0, 1.0, tol).unwrap().max_residual() <= 10.0 * tol);
    let zero = WithDerivative(|_| 0.0, |_| 0.0);
    let rep = verify_ibp(&zero, &g, order(0.4), 0.0, 1.0, tol).unwrap();
    assert_eq!((rep.left.lhs, rep.left.rhs), (0.0, 0.0));
}

#[test]
fn pointwise_caputo_of_smooth_function() {
    let f = WithDerivative(|x: f64| x.exp(), |x: f64| x.exp());
    // ᶜD^α e^x = x^(1−α) E_{1,2−α}(x); at α = 1/2 compare with the series directly
    let x: f64 = 0.8;
    let series: f64 = (0..40).map(|k| x.powf(k as f64 + 0.5) / gamma(k as f64 + 1.5).unwrap()).sum();
    assert!((caputo_left_at(&f, order(0.5), 0.0, x, 1e-12).unwrap() - series).abs() < 1e-10);
}
