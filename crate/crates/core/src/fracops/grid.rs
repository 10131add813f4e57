use crate::error::{Error, Result};

/// Uniform partition of [a, b] with `n_nodes` nodes; node `i` is `a + i·h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n_nodes: usize,
    h: f64,
}

impl Grid {
    pub const MIN_NODES: usize = 3;

    pub fn new(a: f64, b: f64, n_nodes: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::Argument(format!("grid needs finite a < b, got [{a}, {b}]")));
        }
        if n_nodes < Self::MIN_NODES {
            return Err(Error::Argument(format!(
                "grid needs at least {} nodes, got {n_nodes}",
                Self::MIN_NODES
            )));
        }
        let h = (b - a) / (n_nodes - 1) as f64;
        Ok(Self { a, b, n_nodes, h })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_nodes).map(|i| self.node(i))
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n_nodes];
        w[0] = 0.5 * self.h;
        w[self.n_nodes - 1] = 0.5 * self.h;
        w
    }

    /// Index of the node within `1e-9·h` of `x`, if any.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let s = (x - self.a) / self.h;
        let i = s.round();
        if i >= 0.0 && (i as usize) < self.n_nodes && (s - i).abs() <= 1e-9 {
            Some(i as usize)
        } else {
            None
        }
    }
}

/// Samples of a real function on a [`Grid`]. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::Argument(format!(
                "expected {} samples, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "sample {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn try_from_fn(grid: Grid, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let values = grid.nodes().map(&mut f).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n_nodes()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; grids carry at least three nodes.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples of `t ↦ f(a + b - t)` on the same grid.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { grid: self.grid, values }
    }

    /// Linear combination `c1·self + c2·other` on a shared grid.
    pub fn combine(&self, c1: f64, c2: f64, other: &GridFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Argument("grid functions live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| c1 * x + c2 * y)
            .collect();
        Self::new(self.grid, values)
    }

    /// Piecewise-linear interpolation at `x ∈ [a, b]`.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let g = &self.grid;
        if !(x >= g.a() - 1e-12 * g.h() && x <= g.b() + 1e-12 * g.h()) {
            return Err(Error::Domain(format!(
                "x = {x} outside grid range [{}, {}]",
                g.a(),
                g.b()
            )));
        }
        let s = ((x - g.a()) / g.h()).clamp(0.0, (g.n_nodes() - 1) as f64);
        let i = (s.floor() as usize).min(g.n_nodes() - 2);
        let t = s - i as f64;
        Ok((1.0 - t) * self.values[i] + t * self.values[i + 1])
    }

    /// Sup-norm over `values[lo..hi]`.
    pub fn sup_norm_range(&self, lo: usize, hi: usize) -> f64 {
        self.values[lo..hi].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Composite trapezoid integral over the whole grid.
    pub fn trapezoid(&self) -> f64 {
        let w = self.grid.trapezoid_weights();
        w.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }
}
