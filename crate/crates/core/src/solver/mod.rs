//! Direct (Ritz) solution of fractional variational problems.
//!
//! The functional is discretised on a uniform grid with the L1 Caputo scheme
//! and the trapezoidal rule, and minimised over the free nodal values by
//! L-BFGS. Isoperimetric problems add an outer search for the multiplier;
//! free-endpoint problems add a search over the terminal point. Every result
//! carries the Euler-Lagrange residual of the computed extremal.

mod lbfgs;

pub use lbfgs::{minimize, LbfgsOptions, LbfgsOutcome};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fracops::{CaputoL1, FracOrder, Grid, GridFunction};
use crate::problemdef::Var;
use crate::varcalc::{
    el_residual, eval_functional, iso_el_residual, transversality_check, Curve, ELReport,
    GridLagrangian, IsoConstraint, Lagrangian, TransReport, TransversalityMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Factor applied to the Lagrangian so that the solver always minimises.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

/// Boundary data at `a` and the treatment of the right end.
#[derive(Debug, Clone)]
pub enum Boundary {
    /// `y(a) = ya`, `y(b) = yb`.
    Fixed { ya: f64, yb: f64 },
    /// `y(a) = ya`, `y(b)` free.
    FreeRightValue { ya: f64 },
    /// `y(a) = ya`; terminal point `T ∈ t_range` and `y(T)` free.
    FreeRightPoint { ya: f64, t_range: (f64, f64) },
    /// `y(a) = ya`; `y(T) = ψ(T)` with `T ∈ t_range`.
    Curve { ya: f64, psi: Curve, t_range: (f64, f64) },
}

impl Boundary {
    pub fn ya(&self) -> f64 {
        match self {
            Boundary::Fixed { ya, .. }
            | Boundary::FreeRightValue { ya }
            | Boundary::FreeRightPoint { ya, .. }
            | Boundary::Curve { ya, .. } => *ya,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Fixed { .. } => "fixed",
            Boundary::FreeRightValue { .. } => "free_right_value",
            Boundary::FreeRightPoint { .. } => "free_right_point",
            Boundary::Curve { .. } => "curve",
        }
    }

    fn t_range(&self) -> Option<(f64, f64)> {
        match self {
            Boundary::FreeRightPoint { t_range, .. } | Boundary::Curve { t_range, .. } => Some(*t_range),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VariationalProblem {
    pub lagrangian: Lagrangian,
    pub alpha: FracOrder,
    pub beta: FracOrder,
    pub a: f64,
    pub b: f64,
    pub boundary: Boundary,
    pub constraint: Option<IsoConstraint>,
    pub sense: Sense,
}

impl VariationalProblem {
    pub fn new(
        lagrangian: Lagrangian,
        alpha: FracOrder,
        beta: FracOrder,
        a: f64,
        b: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let p = Self { lagrangian, alpha, beta, a, b, boundary, constraint: None, sense: Sense::Minimize };
        p.validate()?;
        Ok(p)
    }

    pub fn with_constraint(mut self, c: IsoConstraint) -> Self {
        self.constraint = Some(c);
        self
    }

    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(Error::Argument(format!("invalid interval [{}, {}]", self.a, self.b)));
        }
        FracOrder::derivative(self.alpha.value())?;
        FracOrder::derivative(self.beta.value())?;
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Argument(format!("{what} must be finite, got {v}")))
            }
        };
        finite(self.boundary.ya(), "y(a)")?;
        if let Boundary::Fixed { yb, .. } = self.boundary {
            finite(yb, "y(b)")?;
        }
        if let Some((lo, hi)) = self.boundary.t_range() {
            if !(lo <= hi) {
                return Err(Error::Argument(format!("empty terminal range [{lo}, {hi}]")));
            }
            if !(lo > self.a && hi <= self.b) {
                return Err(Error::Argument(format!(
                    "terminal range [{lo}, {hi}] must lie in ({}, {}]",
                    self.a, self.b
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub history: usize,
    pub armijo_c: f64,
    pub shrink: f64,
    pub grad_tol: f64,
    pub rel_obj_tol: f64,
    /// Bound on the trusted sup norm of the Euler-Lagrange residual.
    pub residual_tol: f64,
    /// Bound on `|I(y) − l| / max(1, |l|)`.
    pub constraint_tol: f64,
    pub lambda_range: (f64, f64),
    pub lambda_scan: usize,
    /// Number of terminal points in the coarse scan of free-point problems.
    pub t_scan: usize,
    /// Terminal-point tolerance relative to the width of the range.
    pub t_rel_tol: f64,
    /// Starting nodal values (all nodes), used index-wise on every trial grid.
    /// Boundary data overrides the end values.
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let l = LbfgsOptions::default();
        Self {
            max_iters: l.max_iters,
            history: l.history,
            armijo_c: l.armijo_c,
            shrink: l.shrink,
            grad_tol: l.grad_tol,
            rel_obj_tol: l.rel_obj_tol,
            residual_tol: 0.1,
            constraint_tol: 1e-6,
            lambda_range: (-100.0, 100.0),
            lambda_scan: 32,
            t_scan: 9,
            t_rel_tol: 1e-4,
            initial_guess: None,
        }
    }
}

impl SolverOptions {
    pub fn lbfgs(&self) -> LbfgsOptions {
        LbfgsOptions {
            max_iters: self.max_iters,
            history: self.history,
            armijo_c: self.armijo_c,
            shrink: self.shrink,
            grad_tol: self.grad_tol,
            rel_obj_tol: self.rel_obj_tol,
            ..LbfgsOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub y: GridFunction,
    pub lambda: Option<f64>,
    pub lambda0: Option<f64>,
    pub t: Option<f64>,
    pub el_report: ELReport,
    pub trans_report: Option<TransReport>,
    /// Value of the original (unnegated) functional at `y`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sense: Sense,
    /// `I(y) − l` for constrained problems.
    pub constraint_defect: Option<f64>,
}

/// Discretised functional `y ↦ Σ w_i L(x_i, y_i, v_i, w_i)` as a function of
/// the free nodal values: the interior nodes, plus the last node when the
/// right value is free.
pub struct DiscreteFunctional<'a> {
    gl: GridLagrangian<'a>,
    grid: Grid,
    left: Option<CaputoL1>,
    right: Option<CaputoL1>,
    weights: Vec<f64>,
    ya: f64,
    yb: Option<f64>,
}

impl<'a> DiscreteFunctional<'a> {
    /// `yb = None` leaves the right value free.
    pub fn new(
        l: &'a Lagrangian,
        alpha: FracOrder,
        beta: FracOrder,
        grid: Grid,
        ya: f64,
        yb: Option<f64>,
    ) -> Result<Self> {
        let left = if l.expr().depends_on(Var::V) { Some(CaputoL1::new(&grid, alpha)?) } else { None };
        let right = if l.expr().depends_on(Var::W) { Some(CaputoL1::new(&grid, beta)?) } else { None };
        Ok(Self { gl: l.on_grid(&grid)?, grid, left, right, weights: grid.trapezoid_weights(), ya, yb })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_unknowns(&self) -> usize {
        self.grid.n_nodes() - if self.yb.is_some() { 2 } else { 1 }
    }

    /// Full nodal vector from the free values.
    pub fn embed(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n_unknowns());
        let mut y = Vec::with_capacity(self.grid.n_nodes());
        y.push(self.ya);
        y.extend_from_slice(z);
        if let Some(yb) = self.yb {
            y.push(yb);
        }
        y
    }

    /// Free values of a full nodal vector.
    pub fn free_part(&self, y: &[f64]) -> Vec<f64> {
        y[1..1 + self.n_unknowns()].to_vec()
    }

    fn caputo(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = y.len();
        let mut v = vec![0.0; n];
        let mut w = vec![0.0; n];
        if let Some(op) = &self.left {
            op.apply_left(y, &mut v);
        }
        if let Some(op) = &self.right {
            op.apply_right(y, &mut w);
        }
        (v, w)
    }

    pub fn value(&self, z: &[f64]) -> Result<f64> {
        let y = self.embed(z);
        let (v, w) = self.caputo(&y);
        let mut sum = 0.0;
        for i in 0..y.len() {
            sum += self.weights[i] * self.gl.value(i, y[i], v[i], w[i])?;
        }
        Ok(sum)
    }

    /// Value and gradient `W∘∂₂L + C_Lᵀ(W∘∂₃L) + C_Rᵀ(W∘∂₄L)` restricted to the free nodes.
    pub fn value_and_gradient(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let y = self.embed(z);
        let n = y.len();
        let (v, w) = self.caputo(&y);
        let terms = self.gl.evaluate_all(&y, &v, &w)?;
        let value = self.weights.iter().zip(&terms.value).map(|(a, b)| a * b).sum();
        let mut grad: Vec<f64> = self.weights.iter().zip(&terms.d2).map(|(a, b)| a * b).collect();
        let mut buf = vec![0.0; n];
        if let Some(op) = &self.left {
            let p: Vec<f64> = self.weights.iter().zip(&terms.d3).map(|(a, b)| a * b).collect();
            op.apply_left_transpose(&p, &mut buf);
            grad.iter_mut().zip(&buf).for_each(|(g, b)| *g += b);
        }
        if let Some(op) = &self.right {
            let q: Vec<f64> = self.weights.iter().zip(&terms.d4).map(|(a, b)| a * b).collect();
            op.apply_right_transpose(&q, &mut buf);
            grad.iter_mut().zip(&buf).for_each(|(g, b)| *g += b);
        }
        Ok((value, self.free_part(&grad)))
    }
}

struct Inner {
    y: GridFunction,
    outcome: LbfgsOutcome,
}

/// Minimises the discretised functional of `l` (already signed) on `grid`.
#[allow(clippy::too_many_arguments)]
fn minimize_on(
    l: &Lagrangian,
    alpha: FracOrder,
    beta: FracOrder,
    grid: Grid,
    ya: f64,
    yb: Option<f64>,
    z0: Vec<f64>,
    opts: &SolverOptions,
) -> Result<Inner> {
    let df = DiscreteFunctional::new(l, alpha, beta, grid, ya, yb)?;
    let outcome = minimize(|z| df.value_and_gradient(z), z0, &opts.lbfgs())?;
    let y = GridFunction::new(grid, df.embed(&outcome.x))?;
    Ok(Inner { y, outcome })
}

fn signed(l: &Lagrangian, sense: Sense) -> Result<Lagrangian> {
    Lagrangian::combine(sense.sign(), l, 0.0, l)
}

/// Free values of the straight line from `(a, ya)` to `(b, yb)`.
fn linear_start(grid: &Grid, ya: f64, yb: f64, right_free: bool) -> Vec<f64> {
    let n = grid.n_nodes();
    let end = if right_free { n } else { n - 1 };
    (1..end).map(|i| ya + (yb - ya) * i as f64 / (n - 1) as f64).collect()
}

fn guess(opts: &SolverOptions, n_nodes: usize) -> Result<Option<&[f64]>> {
    match &opts.initial_guess {
        Some(g) if g.len() == n_nodes => Ok(Some(g)),
        Some(g) => Err(Error::Argument(format!(
            "initial guess has {} values, grid has {n_nodes}",
            g.len()
        ))),
        None => Ok(None),
    }
}

const MIN_NODES: usize = 17;

fn check_nodes(n: usize) -> Result<()> {
    if n < MIN_NODES {
        Err(Error::Argument(format!("need at least {MIN_NODES} nodes, got {n}")))
    } else {
        Ok(())
    }
}

fn fixed_data(problem: &VariationalProblem) -> Result<(f64, f64)> {
    match problem.boundary {
        Boundary::Fixed { ya, yb } => Ok((ya, yb)),
        ref other => Err(Error::Argument(format!(
            "boundary mode '{}' requires the free-endpoint solver",
            other.name()
        ))),
    }
}

/// Fixed-boundary extremal without constraint.
pub fn solve_fixed(problem: &VariationalProblem, n_nodes: usize, opts: &SolverOptions) -> Result<SolveResult> {
    if problem.constraint.is_some() {
        return Err(Error::Argument("constrained problem: use the isoperimetric solver".into()));
    }
    fixed_core(problem, n_nodes, opts)
}

fn fixed_core(problem: &VariationalProblem, n_nodes: usize, opts: &SolverOptions) -> Result<SolveResult> {
    problem.validate()?;
    check_nodes(n_nodes)?;
    let (ya, yb) = fixed_data(problem)?;
    let grid = Grid::new(problem.a, problem.b, n_nodes)?;
    let z0 = match guess(opts, n_nodes)? {
        Some(g) => g[1..n_nodes - 1].to_vec(),
        None => linear_start(&grid, ya, yb, false),
    };
    let l = signed(&problem.lagrangian, problem.sense)?;
    let inner = minimize_on(&l, problem.alpha, problem.beta, grid, ya, Some(yb), z0, opts)?;
    let el_report = el_residual(&problem.lagrangian, &inner.y, problem.alpha, problem.beta)?;
    let objective = eval_functional(&problem.lagrangian, &inner.y, problem.alpha, problem.beta)?;
    Ok(SolveResult {
        converged: inner.outcome.converged && el_report.sup_norm <= opts.residual_tol,
        iterations: inner.outcome.iterations,
        y: inner.y,
        lambda: None,
        lambda0: None,
        t: None,
        el_report,
        trans_report: None,
        objective,
        sense: problem.sense,
        constraint_defect: None,
    })
}

struct Probe {
    mu: f64,
    defect: f64,
    inner: Inner,
}

/// Isoperimetric problem: multiplier search on the constraint defect of the
/// minimisers of `L + λg`.
pub fn solve_isoperimetric(problem: &VariationalProblem, n_nodes: usize, opts: &SolverOptions) -> Result<SolveResult> {
    problem.validate()?;
    check_nodes(n_nodes)?;
    let c = problem
        .constraint
        .as_ref()
        .ok_or_else(|| Error::Argument("problem has no isoperimetric constraint".into()))?;
    let (ya, yb) = fixed_data(problem)?;
    let grid = Grid::new(problem.a, problem.b, n_nodes)?;
    let (alpha, beta) = (problem.alpha, problem.beta);
    let sign = problem.sense.sign();
    let (lo, hi) = opts.lambda_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Argument(format!("invalid multiplier range [{lo}, {hi}]")));
    }
    let scale = c.l.abs().max(1.0);
    let within = |d: f64| d.abs() <= opts.constraint_tol * scale;
    let mut iterations = 0;

    let mut probe = |mu: f64, z0: Vec<f64>| -> Result<Probe> {
        let f = Lagrangian::combine(sign, &problem.lagrangian, mu, &c.g)?;
        let inner = minimize_on(&f, alpha, beta, grid, ya, Some(yb), z0, opts)?;
        iterations += inner.outcome.iterations;
        let defect = eval_functional(&c.g, &inner.y, alpha, beta)? - c.l;
        Ok(Probe { mu, defect, inner })
    };

    let start_mu = 0.0_f64.clamp(lo, hi);
    let start = probe(start_mu, linear_start(&grid, ya, yb, false))?;
    let root = if within(start.defect) {
        start
    } else {
        let m = opts.lambda_scan.max(2);
        let pts: Vec<f64> = (0..m).map(|k| lo + (hi - lo) * k as f64 / (m - 1) as f64).collect();
        let mut up: Vec<f64> = pts.iter().copied().filter(|&p| p > start_mu).collect();
        let mut down: Vec<f64> = pts.iter().copied().filter(|&p| p < start_mu).collect();
        up.sort_by(f64::total_cmp);
        down.sort_by(|a, b| b.total_cmp(a));
        let start_y = start.inner.y.values().to_vec();
        let mut sides = [(start.mu, start.defect, start_y.clone()), (start.mu, start.defect, start_y)];
        let lists = [up, down];
        let mut bracket = None;
        let mut seen = vec![(start.mu, start.defect)];
        'scan: for k in 0..lists[0].len().max(lists[1].len()) {
            for s in 0..2 {
                let Some(&mu) = lists[s].get(k) else { continue };
                let z0 = sides[s].2[1..n_nodes - 1].to_vec();
                let p = match probe(mu, z0) {
                    Ok(p) if p.inner.outcome.converged => p,
                    Ok(_) | Err(Error::Eval { .. } | Error::Domain(_)) => continue,
                    Err(e) => return Err(e),
                };
                seen.push((mu, p.defect));
                if within(p.defect) {
                    bracket = Some(Err(p));
                    break 'scan;
                }
                if p.defect.signum() != sides[s].1.signum() {
                    bracket = Some(Ok(((sides[s].0, sides[s].1), p)));
                    break 'scan;
                }
                sides[s] = (mu, p.defect, p.inner.y.values().to_vec());
            }
        }
        match bracket {
            None => {
                seen.sort_by(|a, b| a.0.total_cmp(&b.0));
                let listing: Vec<String> = seen.iter().map(|(m, d)| format!("{m:.4}: {d:.3e}")).collect();
                return Err(Error::Bracketing(format!(
                    "constraint defect I(y) - l has constant sign over multipliers in [{lo}, {hi}] ({})",
                    listing.join(", ")
                )));
            }
            Some(Err(p)) => p,
            Some(Ok((prev, p2))) => refine(&mut probe, prev, p2, n_nodes, within)?,
        }
    };

    let lambda = sign * root.mu;
    let y = root.inner.y;
    let el_report = iso_el_residual(&problem.lagrangian, c, lambda, &y, alpha, beta)?;
    let objective = eval_functional(&problem.lagrangian, &y, alpha, beta)?;
    Ok(SolveResult {
        converged: root.inner.outcome.converged
            && el_report.sup_norm <= opts.residual_tol
            && within(root.defect),
        iterations,
        y,
        lambda: Some(lambda),
        lambda0: Some(1.0),
        t: None,
        el_report,
        trans_report: None,
        objective,
        sense: problem.sense,
        constraint_defect: Some(root.defect),
    })
}

const MAX_REFINE: usize = 80;

/// Illinois iteration on a sign-changing bracket `(m1, d1)`, `b` of the defect.
fn refine(
    probe: &mut impl FnMut(f64, Vec<f64>) -> Result<Probe>,
    (mut m1, mut d1): (f64, f64),
    b: Probe,
    n_nodes: usize,
    within: impl Fn(f64) -> bool,
) -> Result<Probe> {
    let mut best = b;
    let (mut m2, mut d2) = (best.mu, best.defect);
    for _ in 0..MAX_REFINE {
        if within(best.defect) || (m2 - m1).abs() <= 1e-13 * m1.abs().max(m2.abs()).max(1.0) {
            break;
        }
        let mut mu = m2 - d2 * (m2 - m1) / (d2 - d1);
        if !(mu > m1.min(m2) && mu < m1.max(m2)) {
            mu = 0.5 * (m1 + m2);
        }
        let z0 = best.inner.y.values()[1..n_nodes - 1].to_vec();
        let p = probe(mu, z0)?;
        if p.defect.signum() == d2.signum() {
            d1 *= 0.5;
        } else {
            m1 = m2;
            d1 = d2;
        }
        m2 = mu;
        d2 = p.defect;
        best = p;
    }
    Ok(best)
}

/// Outcome of the test for the abnormal case of the multiplier rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AbnormalCheck {
    /// The candidate is an extremal of the constraint functional.
    pub abnormal: bool,
    /// `(λ₀, λ) = (0, 1)` when abnormal.
    pub multipliers: Option<(f64, f64)>,
    /// Trusted sup norm of the constraint Lagrangian's own residual.
    pub g_residual_sup: f64,
    /// Sup norm of the discrete constraint gradient divided by `h`.
    pub constraint_gradient_sup: f64,
}

/// Threshold below which the discrete constraint gradient counts as zero.
pub const CONSTRAINT_GRADIENT_TOL: f64 = 1e-6;

/// Tests whether `y` is an extremal of the constraint functional.
pub fn detect_abnormal_at(problem: &VariationalProblem, y: &GridFunction, opts: &SolverOptions) -> Result<AbnormalCheck> {
    let c = problem
        .constraint
        .as_ref()
        .ok_or_else(|| Error::Argument("problem has no isoperimetric constraint".into()))?;
    let g_res = el_residual(&c.g, y, problem.alpha, problem.beta)?;
    let n = y.len();
    let df = DiscreteFunctional::new(&c.g, problem.alpha, problem.beta, *y.grid(), y.values()[0], Some(y.values()[n - 1]))?;
    let (_, grad) = df.value_and_gradient(&df.free_part(y.values()))?;
    let h = y.grid().h();
    let constraint_gradient_sup = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs())) / h;
    let abnormal = g_res.sup_norm <= opts.residual_tol || constraint_gradient_sup < CONSTRAINT_GRADIENT_TOL;
    Ok(AbnormalCheck {
        abnormal,
        multipliers: abnormal.then_some((0.0, 1.0)),
        g_residual_sup: g_res.sup_norm,
        constraint_gradient_sup,
    })
}

/// [`detect_abnormal_at`] for the isoperimetric solution, or for the
/// unconstrained extremal when the multiplier search fails.
pub fn detect_abnormal(problem: &VariationalProblem, n_nodes: usize, opts: &SolverOptions) -> Result<AbnormalCheck> {
    let y = match solve_isoperimetric(problem, n_nodes, opts) {
        Ok(r) => r.y,
        Err(Error::Bracketing(_)) => fixed_core(problem, n_nodes, opts)?.y,
        Err(e) => return Err(e),
    };
    detect_abnormal_at(problem, &y, opts)
}

struct Trial {
    t: f64,
    signed_objective: f64,
    inner: Inner,
}

/// Free-endpoint problems: free right value, free terminal point, or
/// terminal point on a curve.
pub fn solve_free(problem: &VariationalProblem, n_nodes: usize, opts: &SolverOptions) -> Result<SolveResult> {
    problem.validate()?;
    check_nodes(n_nodes)?;
    if problem.constraint.is_some() {
        return Err(Error::Argument("constraints are not supported with free endpoints".into()));
    }
    if problem.lagrangian.uses_right() {
        return Err(Error::Argument(
            "free-endpoint problems require a Lagrangian without the right Caputo argument w".into(),
        ));
    }
    let l = signed(&problem.lagrangian, problem.sense)?;
    let (alpha, beta, a) = (problem.alpha, problem.beta, problem.a);
    let ya = problem.boundary.ya();
    let start = guess(opts, n_nodes)?;

    let run = |t: f64| -> Result<Trial> {
        let grid = Grid::new(a, t, n_nodes)?;
        let (yb, z0) = match (&problem.boundary, start) {
            (Boundary::Curve { psi, .. }, Some(g)) => (Some(psi.value(t)?), g[1..n_nodes - 1].to_vec()),
            (Boundary::Curve { psi, .. }, None) => {
                let yb = psi.value(t)?;
                (Some(yb), linear_start(&grid, ya, yb, false))
            }
            (_, Some(g)) => (None, g[1..].to_vec()),
            (_, None) => (None, vec![ya; n_nodes - 1]),
        };
        let inner = minimize_on(&l, alpha, beta, grid, ya, yb, z0, opts)?;
        let signed_objective = eval_functional(&l, &inner.y, alpha, beta)?;
        Ok(Trial { t, signed_objective, inner })
    };

    let (best, mode, iterations, t_out) = match &problem.boundary {
        Boundary::Fixed { .. } => {
            return Err(Error::Argument("fixed boundary: use the fixed-boundary solver".into()))
        }
        Boundary::FreeRightValue { .. } => {
            let trial = run(problem.b)?;
            let it = trial.inner.outcome.iterations;
            (trial, TransversalityMode::FixedTFreeY, it, None)
        }
        Boundary::FreeRightPoint { t_range, .. } | Boundary::Curve { t_range, .. } => {
            let mode = match &problem.boundary {
                Boundary::Curve { psi, .. } => TransversalityMode::Curve(psi.clone()),
                _ => TransversalityMode::FreeBoth,
            };
            let (trial, it) = search_terminal(&run, *t_range, opts)?;
            let t = trial.t;
            (trial, mode, it, Some(t))
        }
    };

    let y = best.inner.y;
    let el_report = el_residual(&problem.lagrangian, &y, alpha, beta)?;
    let trans_report = transversality_check(&problem.lagrangian, &y, alpha, y.grid().b(), &mode)?;
    let objective = eval_functional(&problem.lagrangian, &y, alpha, beta)?;
    Ok(SolveResult {
        converged: best.inner.outcome.converged && el_report.sup_norm <= opts.residual_tol,
        iterations,
        y,
        lambda: None,
        lambda0: None,
        t: t_out,
        el_report,
        trans_report: Some(trans_report),
        objective,
        sense: problem.sense,
        constraint_defect: None,
    })
}

fn better(a: &Trial, b: &Trial) -> bool {
    a.signed_objective < b.signed_objective || (a.signed_objective == b.signed_objective && a.t < b.t)
}

/// Coarse scan of the terminal range followed by golden-section refinement
/// around the best scan point.
fn search_terminal(
    run: &(impl Fn(f64) -> Result<Trial> + Sync),
    (lo, hi): (f64, f64),
    opts: &SolverOptions,
) -> Result<(Trial, usize)> {
    let m = if hi > lo { opts.t_scan.max(2) } else { 1 };
    let ts: Vec<f64> = (0..m)
        .map(|k| if m == 1 { lo } else { lo + (hi - lo) * k as f64 / (m - 1) as f64 })
        .collect();
    let scanned: Vec<Result<Trial>> = ts.par_iter().map(|&t| run(t)).collect();
    let mut iterations = 0;
    let mut best: Option<(usize, Trial)> = None;
    let mut first_err = None;
    for (k, r) in scanned.into_iter().enumerate() {
        match r {
            Ok(trial) => {
                iterations += trial.inner.outcome.iterations;
                if best.as_ref().is_none_or(|(_, b)| better(&trial, b)) {
                    best = Some((k, trial));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((k, mut best)) = best else {
        return Err(first_err.unwrap_or_else(|| Error::Argument("empty terminal range".into())));
    };
    if m == 1 {
        return Ok((best, iterations));
    }

    let tol = opts.t_rel_tol * (hi - lo);
    let mut left = ts[k.saturating_sub(1)];
    let mut right = ts[(k + 1).min(m - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let consider = |trial: Trial, best: &mut Trial, iterations: &mut usize| {
        *iterations += trial.inner.outcome.iterations;
        let value = trial.signed_objective;
        if better(&trial, best) {
            *best = trial;
        }
        value
    };
    let mut x1 = right - phi * (right - left);
    let mut x2 = left + phi * (right - left);
    let mut f1 = consider(run(x1)?, &mut best, &mut iterations);
    let mut f2 = consider(run(x2)?, &mut best, &mut iterations);
    while right - left > tol {
        if f1 <= f2 {
            right = x2;
            x2 = x1;
            f2 = f1;
            x1 = right - phi * (right - left);
            f1 = consider(run(x1)?, &mut best, &mut iterations);
        } else {
            left = x1;
            x1 = x2;
            f1 = f2;
            x2 = left + phi * (right - left);
            f2 = consider(run(x2)?, &mut best, &mut iterations);
        }
    }
    Ok((best, iterations))
}

/// Dispatches on the problem class.
pub fn solve(problem: &VariationalProblem, n_nodes: usize, opts: &SolverOptions) -> Result<SolveResult> {
    match (&problem.constraint, &problem.boundary) {
        (Some(_), _) => solve_isoperimetric(problem, n_nodes, opts),
        (None, Boundary::Fixed { .. }) => solve_fixed(problem, n_nodes, opts),
        (None, _) => solve_free(problem, n_nodes, opts),
    }
}
