//! Left and right Riemann-Liouville integrals, Riemann-Liouville derivatives and
//! Caputo derivatives of order in (0, 1).
//!
//! Two families are provided:
//!
//! * pointwise operators on callables ([`rl_integral_left`], [`caputo_left_at`], ...),
//!   evaluated by Gauss-Legendre quadrature after a graded substitution that
//!   absorbs the weakly singular kernel;
//! * grid operators on [`GridFunction`]s: the L1 scheme for Caputo derivatives
//!   and product-trapezoidal integrals followed by finite differences for
//!   Riemann-Liouville derivatives.
//!
//! Right-sided grid operators are the left-sided ones conjugated by the
//! reflection `t ↦ a + b − t`.

mod discrete;
mod grid;
mod ibp;
mod pointwise;

pub use discrete::{
    caputo_left, caputo_right, rl_derivative_left, rl_derivative_left_signed, rl_derivative_right,
    rl_derivative_right_signed, rl_integral_left_grid, rl_integral_right_grid, CaputoL1,
    ProductTrapezoid,
};
pub use grid::{Grid, GridFunction};
pub use ibp::{verify_ibp, IbpIdentity, IbpReport};
pub use pointwise::{
    caputo_left_at, caputo_right_at, rl_derivative_left_at, rl_derivative_right_at,
    rl_integral_left, rl_integral_left_tol, rl_integral_right, rl_integral_right_tol, SmoothFn,
    WithDerivative, DEFAULT_QUAD_TOL,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Fractional order. Integrals accept any positive order; derivatives require (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::Order(format!("fractional order must be positive, got {value}")))
        }
    }

    /// Order restricted to the open interval (0, 1).
    pub fn derivative(value: f64) -> Result<Self> {
        let o = Self::new(value)?;
        o.require_derivative()?;
        Ok(o)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub(crate) fn require_derivative(self) -> Result<()> {
        if self.0 < 1.0 {
            Ok(())
        } else {
            Err(Error::Order(format!(
                "derivative order must lie in (0, 1), got {}",
                self.0
            )))
        }
    }

    /// `1 - order`, the order of the integral inside a derivative.
    pub(crate) fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

/// Grid operator selector used by front ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    IntegralLeft,
    IntegralRight,
    CaputoLeft,
    CaputoRight,
    RlDerivativeLeft,
    RlDerivativeRight,
}

impl Operator {
    pub const ALL: [Operator; 6] = [
        Operator::IntegralLeft,
        Operator::IntegralRight,
        Operator::CaputoLeft,
        Operator::CaputoRight,
        Operator::RlDerivativeLeft,
        Operator::RlDerivativeRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::IntegralLeft => "Ileft",
            Operator::IntegralRight => "Iright",
            Operator::CaputoLeft => "Dcleft",
            Operator::CaputoRight => "Dcright",
            Operator::RlDerivativeLeft => "Drlleft",
            Operator::RlDerivativeRight => "Drlright",
        }
    }

    pub fn is_integral(self) -> bool {
        matches!(self, Operator::IntegralLeft | Operator::IntegralRight)
    }

    /// Applies the grid version of the operator.
    pub fn apply(self, f: &GridFunction, order: FracOrder) -> Result<GridFunction> {
        match self {
            Operator::IntegralLeft => rl_integral_left_grid(f, order),
            Operator::IntegralRight => rl_integral_right_grid(f, order),
            Operator::CaputoLeft => caputo_left(f, order),
            Operator::CaputoRight => caputo_right(f, order),
            Operator::RlDerivativeLeft => rl_derivative_left(f, order),
            Operator::RlDerivativeRight => rl_derivative_right(f, order),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Operator::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown operator '{s}'")))
    }
}
