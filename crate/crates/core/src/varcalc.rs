//! Fractional variational functionals `J[y] = ∫_a^b L(x, y, ᶜD^α_left y, ᶜD^β_right y) dx`,
//! their Euler-Lagrange residuals and the natural boundary conditions of
//! free-endpoint problems.
//!
//! The Euler-Lagrange residual is
//!
//! ```text
//! R = ∂₂L + _xD_b^α[∂₃L] + _aD_x^β[∂₄L]
//! ```
//!
//! evaluated on the grid with the L1 Caputo scheme for the arguments and the
//! product-trapezoidal Riemann-Liouville derivatives for the outer operators.
//! Riemann-Liouville derivatives are endpoint-singular for generic inputs, so
//! norms skip a boundary layer of `max(2, ⌈0.02 n⌉)` nodes at each end.

use crate::error::{Error, Result};
use crate::fracops::{
    caputo_left, caputo_right, rl_derivative_left, rl_derivative_right, FracOrder, Grid,
    GridFunction, ProductTrapezoid,
};
use crate::problemdef::{
    add, differentiate, mul, parse_expression, CoeffTable, Compiled, Expr, Point, Var,
};

/// Lagrangian `L(x, y, v, w)` together with its symbolic partials in `y`, `v`, `w`.
#[derive(Debug, Clone)]
pub struct Lagrangian {
    expr: Expr,
    partials: [Expr; 3],
    coeffs: CoeffTable,
    value_code: Compiled,
    partial_code: [Compiled; 3],
}

const PARTIAL_VARS: [Var; 3] = [Var::Y, Var::V, Var::W];

impl Lagrangian {
    pub fn new(expr: Expr, coeffs: CoeffTable) -> Result<Self> {
        let partials = PARTIAL_VARS.map(|v| differentiate(&expr, v));
        Self::assemble(expr, partials, coeffs)
    }

    pub fn parse(src: &str, coeffs: CoeffTable) -> Result<Self> {
        Self::new(parse_expression(src)?, coeffs)
    }

    fn assemble(expr: Expr, partials: [Expr; 3], coeffs: CoeffTable) -> Result<Self> {
        let names = coeffs.names();
        let compile = |e: &Expr| e.compile(&names).map_err(Error::Problem);
        let value_code = compile(&expr)?;
        let partial_code = [compile(&partials[0])?, compile(&partials[1])?, compile(&partials[2])?];
        Ok(Self { expr, partials, coeffs, value_code, partial_code })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// `∂₂L`, the partial in `y`.
    pub fn d2(&self) -> &Expr {
        &self.partials[0]
    }

    /// `∂₃L`, the partial in the left Caputo argument `v`.
    pub fn d3(&self) -> &Expr {
        &self.partials[1]
    }

    /// `∂₄L`, the partial in the right Caputo argument `w`.
    pub fn d4(&self) -> &Expr {
        &self.partials[2]
    }

    pub fn coeffs(&self) -> &CoeffTable {
        &self.coeffs
    }

    /// True when the Lagrangian depends on the right Caputo derivative.
    pub fn uses_right(&self) -> bool {
        self.expr.depends_on(Var::W)
    }

    /// `c1·l1 + c2·l2`; returns `l1` unchanged when `c1 = 1` and `c2 = 0`.
    pub fn combine(c1: f64, l1: &Lagrangian, c2: f64, l2: &Lagrangian) -> Result<Lagrangian> {
        if c1 == 1.0 && c2 == 0.0 {
            return Ok(l1.clone());
        }
        let lin = |a: &Expr, b: &Expr| add(mul(Expr::Const(c1), a.clone()), mul(Expr::Const(c2), b.clone()));
        let expr = lin(&l1.expr, &l2.expr);
        let partials = [0, 1, 2].map(|k| lin(&l1.partials[k], &l2.partials[k]));
        Self::assemble(expr, partials, l1.coeffs.merged(&l2.coeffs)?)
    }

    fn coefficient_values(&self, x: f64) -> Result<Vec<f64>> {
        let mut buf = Vec::with_capacity(self.coeffs.len());
        self.coeffs.values_at(x, &mut buf)?;
        Ok(buf)
    }

    /// `L(x, y, v, w)` with coefficients evaluated at `x`.
    pub fn value_at(&self, x: f64, y: f64, v: f64, w: f64) -> Result<f64> {
        let c = self.coefficient_values(x)?;
        self.value_code.eval(&Point::new(x, y, v, w, &c)).map_err(Error::Domain)
    }

    /// `(∂₂L, ∂₃L, ∂₄L)` at a point.
    pub fn partials_at(&self, x: f64, y: f64, v: f64, w: f64) -> Result<[f64; 3]> {
        let c = self.coefficient_values(x)?;
        let p = Point::new(x, y, v, w, &c);
        let mut out = [0.0; 3];
        for (o, code) in out.iter_mut().zip(&self.partial_code) {
            *o = code.eval(&p).map_err(Error::Domain)?;
        }
        Ok(out)
    }

    pub(crate) fn on_grid(&self, grid: &Grid) -> Result<GridLagrangian<'_>> {
        GridLagrangian::new(self, grid)
    }
}

/// A Lagrangian with its coefficients sampled at the nodes of one grid.
pub(crate) struct GridLagrangian<'a> {
    lag: &'a Lagrangian,
    nodes: Vec<f64>,
    stride: usize,
    samples: Vec<f64>,
}

impl<'a> GridLagrangian<'a> {
    fn new(lag: &'a Lagrangian, grid: &Grid) -> Result<Self> {
        let stride = lag.coeffs.len();
        let nodes: Vec<f64> = grid.nodes().collect();
        let mut samples = Vec::with_capacity(stride * nodes.len());
        let mut buf = Vec::with_capacity(stride);
        for (i, &x) in nodes.iter().enumerate() {
            lag.coeffs
                .values_at(x, &mut buf)
                .map_err(|e| Error::Eval { node: i, message: e.to_string() })?;
            samples.extend_from_slice(&buf);
        }
        Ok(Self { lag, nodes, stride, samples })
    }

    fn point(&self, i: usize, y: f64, v: f64, w: f64) -> Point<'_> {
        let c = &self.samples[i * self.stride..(i + 1) * self.stride];
        Point::new(self.nodes[i], y, v, w, c)
    }

    pub(crate) fn value(&self, i: usize, y: f64, v: f64, w: f64) -> Result<f64> {
        self.lag
            .value_code
            .eval(&self.point(i, y, v, w))
            .map_err(|message| Error::Eval { node: i, message })
    }

    pub(crate) fn partials(&self, i: usize, y: f64, v: f64, w: f64) -> Result<[f64; 3]> {
        let p = self.point(i, y, v, w);
        let mut out = [0.0; 3];
        for (o, code) in out.iter_mut().zip(&self.lag.partial_code) {
            if !code.is_zero() {
                *o = code.eval(&p).map_err(|message| Error::Eval { node: i, message })?;
            }
        }
        Ok(out)
    }

    pub(crate) fn has_partial(&self, k: usize) -> bool {
        !self.lag.partial_code[k].is_zero()
    }

    /// Nodal values of `L` and of the three partials.
    pub(crate) fn evaluate_all(&self, y: &[f64], v: &[f64], w: &[f64]) -> Result<NodalTerms> {
        let n = self.nodes.len();
        let mut t = NodalTerms { value: vec![0.0; n], d2: vec![0.0; n], d3: vec![0.0; n], d4: vec![0.0; n] };
        for i in 0..n {
            t.value[i] = self.value(i, y[i], v[i], w[i])?;
            let [a, b, c] = self.partials(i, y[i], v[i], w[i])?;
            t.d2[i] = a;
            t.d3[i] = b;
            t.d4[i] = c;
        }
        Ok(t)
    }
}

pub(crate) struct NodalTerms {
    pub value: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    pub d4: Vec<f64>,
}

/// Integral constraint `∫_a^b g(x, y, v, w) dx = l`.
#[derive(Debug, Clone)]
pub struct IsoConstraint {
    pub g: Lagrangian,
    pub l: f64,
}

impl IsoConstraint {
    pub fn new(g: Lagrangian, l: f64) -> Result<Self> {
        if !l.is_finite() {
            return Err(Error::Argument(format!("constraint value must be finite, got {l}")));
        }
        Ok(Self { g, l })
    }
}

/// Euler-Lagrange residual on a grid with norms over the trusted interior.
#[derive(Debug, Clone, PartialEq)]
pub struct ELReport {
    pub residual: GridFunction,
    pub sup_norm: f64,
    /// Discrete `L²` norm `sqrt(h Σ R_i²)` over trusted nodes.
    pub l2_norm: f64,
    /// Nodes skipped at each end of the grid.
    pub excluded_boundary_nodes: usize,
}

impl ELReport {
    /// Index range `[lo, hi)` of trusted nodes.
    pub fn trusted_range(&self) -> (usize, usize) {
        let n = self.residual.len();
        (self.excluded_boundary_nodes, n - self.excluded_boundary_nodes)
    }

    fn from_residual(residual: GridFunction) -> Self {
        let n = residual.len();
        let m = boundary_layer(n);
        let trusted = &residual.values()[m..n - m];
        let sup_norm = trusted.iter().fold(0.0_f64, |s, r| s.max(r.abs()));
        let l2_norm = (residual.grid().h() * trusted.iter().map(|r| r * r).sum::<f64>()).sqrt();
        Self { residual, sup_norm, l2_norm, excluded_boundary_nodes: m }
    }
}

/// Number of untrusted nodes at each end of an `n`-node grid.
pub fn boundary_layer(n: usize) -> usize {
    2usize.max(n.div_ceil(50))
}

fn caputo_arguments(y: &GridFunction, alpha: FracOrder, beta: FracOrder) -> Result<(GridFunction, GridFunction)> {
    Ok((caputo_left(y, alpha)?, caputo_right(y, beta)?))
}

/// `J[y]` by the composite trapezoidal rule.
pub fn eval_functional(l: &Lagrangian, y: &GridFunction, alpha: FracOrder, beta: FracOrder) -> Result<f64> {
    let (v, w) = caputo_arguments(y, alpha, beta)?;
    let gl = l.on_grid(y.grid())?;
    let weights = y.grid().trapezoid_weights();
    let mut sum = 0.0;
    for (i, wt) in weights.iter().enumerate() {
        sum += wt * gl.value(i, y.values()[i], v.values()[i], w.values()[i])?;
    }
    Ok(sum)
}

/// Euler-Lagrange residual of `l` at `y`.
pub fn el_residual(l: &Lagrangian, y: &GridFunction, alpha: FracOrder, beta: FracOrder) -> Result<ELReport> {
    let n = y.len();
    if n < 2 * boundary_layer(n) + 1 {
        return Err(Error::Argument(format!("{n} nodes leave no trusted interior")));
    }
    let (v, w) = caputo_arguments(y, alpha, beta)?;
    let gl = l.on_grid(y.grid())?;
    let terms = gl.evaluate_all(y.values(), v.values(), w.values())?;
    let grid = *y.grid();
    let mut r = terms.d2;
    if gl.has_partial(1) {
        let dp = rl_derivative_right(&GridFunction::new(grid, terms.d3)?, alpha)?;
        r.iter_mut().zip(dp.values()).for_each(|(a, b)| *a += b);
    }
    if gl.has_partial(2) {
        let dq = rl_derivative_left(&GridFunction::new(grid, terms.d4)?, beta)?;
        r.iter_mut().zip(dq.values()).for_each(|(a, b)| *a += b);
    }
    Ok(ELReport::from_residual(GridFunction::new(grid, r)?))
}

/// Residual of the augmented Lagrangian `L + λg`.
pub fn iso_el_residual(
    l: &Lagrangian,
    c: &IsoConstraint,
    lambda: f64,
    y: &GridFunction,
    alpha: FracOrder,
    beta: FracOrder,
) -> Result<ELReport> {
    el_residual(&Lagrangian::combine(1.0, l, lambda, &c.g)?, y, alpha, beta)
}

/// Residual of `λ₀L + λg`; the multipliers may not both vanish.
pub fn abnormal_el_residual(
    l: &Lagrangian,
    c: &IsoConstraint,
    lambda0: f64,
    lambda: f64,
    y: &GridFunction,
    alpha: FracOrder,
    beta: FracOrder,
) -> Result<ELReport> {
    if lambda0 == 0.0 && lambda == 0.0 {
        return Err(Error::Argument("multipliers lambda0 and lambda are both zero".into()));
    }
    el_residual(&Lagrangian::combine(lambda0, l, lambda, &c.g)?, y, alpha, beta)
}

/// Terminal curve `y = ψ(x)` for the curve-constrained endpoint.
#[derive(Debug, Clone)]
pub struct Curve {
    psi: Expr,
    slope: Expr,
    coeffs: CoeffTable,
    value_code: Compiled,
    slope_code: Compiled,
}

impl Curve {
    pub fn new(psi: Expr, coeffs: CoeffTable) -> Result<Self> {
        if [Var::Y, Var::V, Var::W].iter().any(|&v| psi.depends_on(v)) {
            return Err(Error::Problem(format!("terminal curve {psi} may depend on x only")));
        }
        if !psi.coefficients().is_empty() {
            return Err(Error::Problem("terminal curve may not reference coefficients".into()));
        }
        let slope = differentiate(&psi, Var::X);
        let names = coeffs.names();
        let value_code = psi.compile(&names).map_err(Error::Problem)?;
        let slope_code = slope.compile(&names).map_err(Error::Problem)?;
        Ok(Self { psi, slope, coeffs, value_code, slope_code })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(parse_expression(src)?, CoeffTable::new())
    }

    pub fn expr(&self) -> &Expr {
        &self.psi
    }

    pub fn slope_expr(&self) -> &Expr {
        &self.slope
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let mut c = Vec::new();
        self.coeffs.values_at(x, &mut c)?;
        self.value_code.eval(&Point::at_x(x, &c)).map_err(Error::Domain)
    }

    pub fn slope(&self, x: f64) -> Result<f64> {
        let mut c = Vec::new();
        self.coeffs.values_at(x, &mut c)?;
        self.slope_code.eval(&Point::at_x(x, &c)).map_err(Error::Domain)
    }
}

/// Which natural boundary conditions apply at the right end `T`.
#[derive(Debug, Clone)]
pub enum TransversalityMode {
    /// Both `T` and `y(T)` free.
    FreeBoth,
    /// `T` fixed, `y(T)` free.
    FixedTFreeY,
    /// `y(T)` prescribed, `T` free.
    FreeTFixedY,
    /// `y(T) = ψ(T)` with `T` free.
    Curve(Curve),
}

impl TransversalityMode {
    pub fn name(&self) -> &'static str {
        match self {
            TransversalityMode::FreeBoth => "free_both",
            TransversalityMode::FixedTFreeY => "fixed_T_free_y",
            TransversalityMode::FreeTFixedY => "free_T_fixed_y",
            TransversalityMode::Curve(_) => "curve",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransCondition {
    pub name: &'static str,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransReport {
    pub mode: &'static str,
    pub t: f64,
    /// `L(T, y(T), v(T))`.
    pub lagrangian_at_t: f64,
    /// `_xI_T^(1−α)[∂₃L](T)` in its discrete form.
    pub i_term: f64,
    /// One-sided three-point `y′(T)`.
    pub y_slope: f64,
    pub conditions: Vec<TransCondition>,
}

impl TransReport {
    pub fn max_magnitude(&self) -> f64 {
        self.conditions.iter().fold(0.0, |m, c| m.max(c.magnitude))
    }
}

/// Restriction of `y` to `[a, t]`: a prefix when `t` is a node, otherwise a
/// linear resampling on the same number of nodes.
pub fn restrict(y: &GridFunction, t: f64) -> Result<GridFunction> {
    let g = y.grid();
    let slack = 1e-9 * g.h();
    if !(t > g.a() && t <= g.b() + slack) {
        return Err(Error::Domain(format!(
            "terminal point {t} outside ({}, {}]",
            g.a(),
            g.b()
        )));
    }
    if let Some(i) = g.node_index(t) {
        if i == g.n_nodes() - 1 {
            return Ok(y.clone());
        }
        if i < 2 {
            return Err(Error::Domain(format!("terminal point {t} leaves fewer than 3 nodes")));
        }
        let sub = Grid::new(g.a(), g.node(i), i + 1)?;
        return GridFunction::new(sub, y.values()[..=i].to_vec());
    }
    let sub = Grid::new(g.a(), t, g.n_nodes())?;
    let values = sub.nodes().map(|x| y.interpolate(x.min(g.b()))).collect::<Result<Vec<_>>>()?;
    GridFunction::new(sub, values)
}

/// Natural boundary conditions at `T` for a Lagrangian without right
/// Caputo argument. The integral term uses the product-trapezoidal right
/// integral evaluated one node before `T`, which is the boundary equation of
/// the discretised functional.
pub fn transversality_check(
    l: &Lagrangian,
    y: &GridFunction,
    alpha: FracOrder,
    t: f64,
    mode: &TransversalityMode,
) -> Result<TransReport> {
    if l.uses_right() {
        return Err(Error::Argument(
            "transversality conditions require a Lagrangian without the right Caputo argument w".into(),
        ));
    }
    let yt = restrict(y, t)?;
    let grid = *yt.grid();
    let n = grid.n_nodes();
    let v = caputo_left(&yt, alpha)?;
    let gl = l.on_grid(&grid)?;
    let yv = yt.values();
    let vv = v.values();
    let mut p = vec![0.0; n];
    for i in 0..n {
        p[i] = gl.partials(i, yv[i], vv[i], 0.0)?[1];
    }
    let last = n - 1;
    let lagrangian_at_t = gl.value(last, yv[last], vv[last], 0.0)?;
    let i_term = ProductTrapezoid::new(&grid, alpha.complement())?.right_at_penultimate(&p);
    let h = grid.h();
    let y_slope = (3.0 * yv[last] - 4.0 * yv[last - 1] + yv[last - 2]) / (2.0 * h);
    let tt = grid.b();
    let conditions = match mode {
        TransversalityMode::FreeBoth => vec![
            TransCondition { name: "L(T)", magnitude: lagrangian_at_t.abs() },
            TransCondition { name: "I-term", magnitude: i_term.abs() },
        ],
        TransversalityMode::FixedTFreeY => {
            vec![TransCondition { name: "I-term", magnitude: i_term.abs() }]
        }
        TransversalityMode::FreeTFixedY => vec![TransCondition {
            name: "L(T) - y'(T) I",
            magnitude: (lagrangian_at_t - y_slope * i_term).abs(),
        }],
        TransversalityMode::Curve(c) => vec![TransCondition {
            name: "(psi'(T) - y'(T)) I + L(T)",
            magnitude: ((c.slope(tt)? - y_slope) * i_term + lagrangian_at_t).abs(),
        }],
    };
    Ok(TransReport { mode: mode.name(), t: tt, lagrangian_at_t, i_term, y_slope, conditions })
}
