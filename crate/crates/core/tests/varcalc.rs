use fracvar::fracops::{rl_derivative_right_at, FracOrder, Grid, GridFunction, WithDerivative};
use fracvar::problemdef::{CoeffTable, Coefficient};
use fracvar::specfun::{gamma, mittag_leffler, MLOrder};
use fracvar::varcalc::{
    abnormal_el_residual, el_residual, eval_functional, iso_el_residual, IsoConstraint, Lagrangian,
};
use proptest::prelude::*;

const LAGRANGIANS: [&str; 6] = [
    "v^2",
    "v^2 + y^2 - x*y",
    "exp(0.2*y) * v + w^2",
    "(v - x)^2 + sin(y) * w",
    "y*v*w + cos(x) * v",
    "sqrt(1 + v^2) + 0.5*y^3",
];

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

fn lag(src: &str) -> Lagrangian {
    Lagrangian::parse(src, CoeffTable::new()).unwrap()
}

fn ybar(x: f64) -> f64 {
    mittag_leffler(MLOrder::new(0.5).unwrap(), x.sqrt()).unwrap()
}

fn ybar_table() -> CoeffTable {
    CoeffTable::new().with("ybar", Coefficient::ml_alpha_power(0.5).unwrap()).unwrap()
}

fn example_constraint() -> IsoConstraint {
    let l = Coefficient::ml_alpha_power(0.5).unwrap().integral_of_square(0.0, 1.0).unwrap();
    IsoConstraint::new(Lagrangian::parse("coeff:ybar * v", ybar_table()).unwrap(), l).unwrap()
}

fn candidate(n: usize, c: &[f64]) -> GridFunction {
    GridFunction::from_fn(Grid::new(0.0, 1.0, n).unwrap(), |x| {
        c.iter().rev().fold(0.0, |acc, k| acc * x + k) + 0.3 * (3.0 * x).sin()
    })
    .unwrap()
}

fn bits(r: &fracvar::varcalc::ELReport) -> Vec<u64> {
    r.residual.values().iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn partials_match_differences(
        which in 0..LAGRANGIANS.len(),
        x in 0.0f64..1.0, y in -1.5f64..1.5, v in -1.5f64..1.5, w in -1.5f64..1.5,
    ) {
        let l = lag(LAGRANGIANS[which]);
        let p = l.partials_at(x, y, v, w).unwrap();
        let h = 1e-5;
        let f = |dy: f64, dv: f64, dw: f64| l.value_at(x, y + dy, v + dv, w + dw).unwrap();
        let fd = [
            (f(h, 0.0, 0.0) - f(-h, 0.0, 0.0)) / (2.0 * h),
            (f(0.0, h, 0.0) - f(0.0, -h, 0.0)) / (2.0 * h),
            (f(0.0, 0.0, h) - f(0.0, 0.0, -h)) / (2.0 * h),
        ];
        for (s, d) in p.iter().zip(fd) {
            prop_assert!((s - d).abs() <= 1e-6 * s.abs().max(1.0), "{}: {s} vs {d}", LAGRANGIANS[which]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_linear_in_lagrangian(
        i in 0..LAGRANGIANS.len(),
        j in 0..LAGRANGIANS.len(),
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
        alpha in 0.1f64..0.9,
        beta in 0.1f64..0.9,
    ) {
        let (l1, l2) = (lag(LAGRANGIANS[i]), lag(LAGRANGIANS[j]));
        let y = candidate(65, &coeffs);
        let (a, b) = (order(alpha), order(beta));
        let mixed = el_residual(&Lagrangian::combine(c1, &l1, c2, &l2).unwrap(), &y, a, b).unwrap();
        let r1 = el_residual(&l1, &y, a, b).unwrap();
        let r2 = el_residual(&l2, &y, a, b).unwrap();
        let expect = r1.residual.combine(c1, c2, &r2.residual).unwrap();
        let scale = c1.abs() * r1.residual.sup_norm_range(0, 65) + c2.abs() * r2.residual.sup_norm_range(0, 65);
        for (m, e) in mixed.residual.values().iter().zip(expect.values()) {
            prop_assert!((m - e).abs() <= 1e-10 * scale.max(1.0), "{m} vs {e}");
        }
    }

    #[test]
    fn multiplier_zero_and_unit_weight_are_exact(
        i in 0..LAGRANGIANS.len(),
        lambda in -3.0f64..3.0,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
    ) {
        let l = lag(LAGRANGIANS[i]);
        let c = example_constraint();
        let y = candidate(65, &coeffs);
        let (a, b) = (order(0.5), order(0.5));
        let plain = el_residual(&l, &y, a, b).unwrap();
        prop_assert_eq!(bits(&iso_el_residual(&l, &c, 0.0, &y, a, b).unwrap()), bits(&plain));
        let iso = iso_el_residual(&l, &c, lambda, &y, a, b).unwrap();
        let abn = abnormal_el_residual(&l, &c, 1.0, lambda, &y, a, b).unwrap();
        prop_assert_eq!(bits(&abn), bits(&iso));
    }

    #[test]
    fn abnormal_residual_scales(scale in 0.1f64..10.0, coeffs in prop::collection::vec(-1.0f64..1.0, 1..4)) {
        let c = example_constraint();
        let y = candidate(65, &coeffs);
        let (a, b) = (order(0.5), order(0.5));
        let base = abnormal_el_residual(&lag("v^2"), &c, 0.0, 1.0, &y, a, b).unwrap();
        let scaled = abnormal_el_residual(&lag("v^2"), &c, 0.0, scale, &y, a, b).unwrap();
        for (s, r) in scaled.residual.values().iter().zip(base.residual.values()) {
            prop_assert!((s - scale * r).abs() <= 1e-12 * (scale * r).abs().max(1.0));
        }
        let g_alone = el_residual(&c.g, &y, a, b).unwrap();
        prop_assert_eq!(bits(&base), bits(&g_alone));
    }
}

#[test]
fn example_residual_shrinks_monotonically() {
    let c = example_constraint();
    let norms: Vec<f64> = [65, 129, 257, 513]
        .iter()
        .map(|&n| {
            let y = GridFunction::from_fn(Grid::new(0.0, 1.0, n).unwrap(), ybar).unwrap();
            iso_el_residual(&lag("v^2"), &c, -2.0, &y, order(0.5), order(0.5)).unwrap().sup_norm
        })
        .collect();
    for w in norms.windows(2) {
        assert!(w[1] <= 1.1 * w[0], "{norms:?}");
    }
    assert!(norms[3] <= 0.1, "{norms:?}");
}

#[test]
fn functional_of_example_solution() {
    let y = GridFunction::from_fn(Grid::new(0.0, 1.0, 513).unwrap(), ybar).unwrap();
    let j = eval_functional(&lag("v^2"), &y, order(0.5), order(0.5)).unwrap();
    let l = example_constraint().l;
    assert!((j - l).abs() <= 2e-2 * l, "{j} vs {l}");
}

#[test]
fn unconstrained_residual_detects_non_extremal() {
    let y = GridFunction::from_fn(Grid::new(0.0, 1.0, 257).unwrap(), ybar).unwrap();
    assert!(el_residual(&lag("v^2"), &y, order(0.5), order(0.5)).unwrap().sup_norm > 0.1);
}

#[test]
fn near_classical_line_is_nearly_extremal() {
    // what remains is the exact endpoint term 2v(1)(1−x)^(−α)/Γ(1−α), small away from the ends
    let a = 0.999;
    let g = gamma(2.0 - a).unwrap();
    let v = WithDerivative(move |x: f64| 2.0 * x.powf(1.0 - a) / g, move |x: f64| 2.0 * (1.0 - a) * x.powf(-a) / g);
    for n in [129, 257] {
        let y = GridFunction::from_fn(Grid::new(0.0, 1.0, n).unwrap(), |x| x).unwrap();
        let r = el_residual(&lag("v^2"), &y, order(a), order(a)).unwrap();
        let (lo, hi) = r.trusted_range();
        for i in lo..hi {
            let x = y.grid().node(i);
            let exact = rl_derivative_right_at(&v, order(a), x, 1.0, 1e-12).unwrap();
            let disc = r.residual.values()[i];
            assert!((disc - exact).abs() <= 5e-3, "n = {n}, x = {x}: {disc} vs {exact}");
            if (0.05..=0.95).contains(&x) {
                assert!(disc.abs() <= 0.05, "n = {n}, x = {x}: {disc}");
            }
        }
    }
}

#[test]
fn constraint_equal_to_lagrangian_cancels() {
    let l = lag("v^2 + y*w");
    let c = IsoConstraint::new(l.clone(), 1.0).unwrap();
    let y = candidate(129, &[0.2, -0.4, 1.0]);
    let r = iso_el_residual(&l, &c, -1.0, &y, order(0.3), order(0.7)).unwrap();
    assert!(r.residual.values().iter().all(|v| *v == 0.0));
}
