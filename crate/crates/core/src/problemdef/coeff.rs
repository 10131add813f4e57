//! Named coefficient functions of `x` referenced from expressions as `coeff:<name>`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;
use crate::specfun::{mittag_leffler, MLOrder};

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    /// `E_alpha(x^alpha)` for `x ≥ 0`.
    MlAlphaPower { alpha: MLOrder },
    /// Piecewise-linear interpolant of samples with strictly increasing abscissae.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl Coefficient {
    pub fn ml_alpha_power(alpha: f64) -> Result<Self> {
        Ok(Coefficient::MlAlphaPower { alpha: MLOrder::new(alpha)? })
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Problem(format!(
                "tabulated coefficient has {} abscissae but {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::Problem("tabulated coefficient needs at least two samples".into()));
        }
        if let Some(k) = xs.iter().chain(&ys).position(|v| !v.is_finite()) {
            return Err(Error::Problem(format!("tabulated coefficient has a non-finite entry (#{k})")));
        }
        if let Some(k) = xs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Problem(format!(
                "tabulated abscissae must be strictly increasing (row {})",
                k + 1
            )));
        }
        Ok(Coefficient::Tabulated { xs, ys })
    }

    /// Reads a two-column CSV `x,value`; a non-numeric first row is treated as a header.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Problem(format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv_str(&text).map_err(|e| match e {
            Error::Problem(m) => Error::Problem(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (xs, ys) = read_two_columns(text)?;
        Self::tabulated(xs, ys)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Coefficient::MlAlphaPower { alpha } => {
                if x < 0.0 {
                    return Err(Error::Domain(format!("E_a(x^a) needs x >= 0, got {x}")));
                }
                mittag_leffler(*alpha, x.powf(alpha.value()))
            }
            Coefficient::Tabulated { xs, ys } => {
                let (lo, hi) = (xs[0], xs[xs.len() - 1]);
                let slack = 1e-12 * (hi - lo);
                if !(x >= lo - slack && x <= hi + slack) {
                    return Err(Error::Domain(format!(
                        "{x} outside tabulated range [{lo}, {hi}]"
                    )));
                }
                let k = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
                let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                Ok(ys[k - 1] + t * (ys[k] - ys[k - 1]))
            }
        }
    }

    /// `∫_a^b c(x)² dx`.
    pub fn integral_of_square(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Coefficient::MlAlphaPower { .. } => {
                let mut failure = None;
                let v = integrate_adaptive(
                    |x| match self.eval(x) {
                        Ok(c) => c * c,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    a,
                    b,
                    1e-13,
                );
                match failure {
                    Some(e) => Err(e),
                    None => v,
                }
            }
            Coefficient::Tabulated { xs, .. } => {
                if a < xs[0] || b > xs[xs.len() - 1] {
                    // reuse the range error of eval
                    self.eval(a)?;
                    self.eval(b)?;
                }
                // exact on each linear piece, with the pieces cut at a and b
                let mut knots = vec![a];
                knots.extend(xs.iter().copied().filter(|&t| t > a && t < b));
                knots.push(b);
                let mut sum = 0.0;
                for w in knots.windows(2) {
                    let (y0, y1) = (self.eval(w[0])?, self.eval(w[1])?);
                    sum += (w[1] - w[0]) * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0;
                }
                Ok(sum)
            }
        }
    }
}

/// Parses a two-column numeric CSV; a first row that does not parse is a header.
pub fn read_two_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Problem(format!("CSV error: {e}")))?;
        if record.len() != 2 {
            return Err(Error::Problem(format!(
                "CSV row {} has {} columns, expected 2",
                row + 1,
                record.len()
            )));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if row == 0 => continue,
            _ => {
                return Err(Error::Problem(format!(
                    "CSV row {} is not numeric: {:?}",
                    row + 1,
                    record.iter().collect::<Vec<_>>()
                )))
            }
        }
    }
    Ok((xs, ys))
}

/// Ordered set of named coefficients; expressions refer to them by index
/// after compilation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoeffTable {
    entries: Vec<(String, Coefficient)>,
}

impl CoeffTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a coefficient; redeclaring a name with a different definition is an error.
    pub fn insert(&mut self, name: impl Into<String>, c: Coefficient) -> Result<()> {
        let name = name.into();
        match self.get(&name) {
            Some(existing) if *existing == c => Ok(()),
            Some(_) => Err(Error::Problem(format!("coefficient '{name}' declared twice"))),
            None => {
                self.entries.push((name, c));
                Ok(())
            }
        }
    }

    pub fn with(mut self, name: impl Into<String>, c: Coefficient) -> Result<Self> {
        self.insert(name, c)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Coefficient> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Union of two tables; shared names must agree.
    pub fn merged(&self, other: &CoeffTable) -> Result<CoeffTable> {
        let mut out = self.clone();
        for (n, c) in &other.entries {
            out.insert(n.clone(), c.clone())?;
        }
        Ok(out)
    }

    /// Values of every coefficient at `x`, in declaration order.
    pub fn values_at(&self, x: f64, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        for (_, c) in &self.entries {
            out.push(c.eval(x)?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ml_alpha_power_matches_series() {
        let c = Coefficient::ml_alpha_power(1.0).unwrap();
        assert!((c.eval(0.7).unwrap() - 0.7_f64.exp()).abs() < 1e-13);
        assert!(matches!(c.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn tabulated_interpolation() {
        let c = Coefficient::from_csv_str("x,value\n0,1\n1,3\n2,2\n").unwrap();
        assert_eq!(c.eval(0.5).unwrap(), 2.0);
        assert_eq!(c.eval(1.0).unwrap(), 3.0);
        assert_eq!(c.eval(2.0).unwrap(), 2.0);
        assert!(c.eval(2.5).is_err());
        let sq = c.integral_of_square(0.0, 2.0).unwrap();
        assert!((sq - (13.0 / 3.0 + 19.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn tabulated_validation() {
        assert!(Coefficient::from_csv_str("0,1\n0,2\n").is_err());
        assert!(Coefficient::from_csv_str("0,1,2\n1,2,3\n").is_err());
        assert!(Coefficient::from_csv_str("0,1\nfoo,2\n").is_err());
        assert!(Coefficient::from_csv_str("0,1\n").is_err());
    }

    #[test]
    fn square_integral_of_exponential() {
        let c = Coefficient::ml_alpha_power(1.0).unwrap();
        let v = c.integral_of_square(0.0, 1.0).unwrap();
        assert!((v - (2.0_f64.exp() - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn table_merge() {
        let a = CoeffTable::new().with("p", Coefficient::ml_alpha_power(0.5).unwrap()).unwrap();
        let b = CoeffTable::new().with("q", Coefficient::ml_alpha_power(0.3).unwrap()).unwrap();
        let m = a.merged(&b).unwrap();
        assert_eq!(m.names(), vec!["p", "q"]);
        let clash = CoeffTable::new().with("p", Coefficient::ml_alpha_power(0.9).unwrap()).unwrap();
        assert!(a.merged(&clash).is_err());
        assert_eq!(a.merged(&a).unwrap(), a);
    }
}
