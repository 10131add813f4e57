//! TOML problem files.
//!
//! ```toml
//! lagrangian = "v^2"
//! sense = "min"                 # or "max"; optional
//!
//! [interval]
//! a = 0
//! b = 1
//!
//! [orders]
//! alpha = 0.5
//! beta = 0.5                    # optional, defaults to alpha
//!
//! [boundary]
//! mode = "fixed"                # fixed | free_right_value | free_right_point | curve
//! ya = 1
//! yb = "ml(0.5, 1)"             # numbers or constant expressions
//!
//! [constraint]                  # optional
//! g = "coeff:ybar * v"
//! l = "auto:ybar"               # number, constant expression, or auto:<coeff> for ∫ coeff²
//!
//! [[coefficients]]
//! name = "ybar"
//! kind = "ml_alpha_power"       # E_alpha(x^alpha)
//! alpha = 0.5
//!
//! [solver]                      # optional overrides
//! nodes = 257
//! ```
//!
//! `free_right_point` and `curve` take `t_range = [lo, hi]`; `curve` also takes
//! `psi`, an expression in `x`. Tabulated coefficients give either
//! `csv = "<path relative to the problem file>"` or `samples = [[x, value], ...]`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{parse_expression, CoeffTable, Coefficient, Compiled, Point, Var};
use crate::error::{Error, Result};
use crate::fracops::FracOrder;
use crate::solver::{Boundary, Sense, SolverOptions, VariationalProblem};
use crate::varcalc::{Curve, IsoConstraint, Lagrangian};

/// Default bound on transversality magnitudes used when checking candidates.
pub const DEFAULT_TRANS_TOL: f64 = 5e-2;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    lagrangian: String,
    #[serde(default)]
    sense: SenseSpec,
    interval: IntervalSpec,
    orders: OrdersSpec,
    boundary: BoundarySpec,
    constraint: Option<ConstraintSpec>,
    #[serde(default)]
    coefficients: Vec<CoeffSpec>,
    #[serde(default)]
    solver: SolverSpec,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SenseSpec {
    #[default]
    Min,
    Max,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalSpec {
    a: Number,
    b: Number,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrdersSpec {
    alpha: f64,
    beta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Number {
    Value(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum BoundarySpec {
    Fixed { ya: Number, yb: Number },
    FreeRightValue { ya: Number },
    FreeRightPoint { ya: Number, t_range: [Number; 2] },
    Curve { ya: Number, psi: String, t_range: [Number; 2] },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintSpec {
    g: String,
    l: Number,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum CoeffSpec {
    MlAlphaPower { name: String, alpha: f64 },
    Tabulated { name: String, csv: Option<String>, samples: Option<Vec<[f64; 2]>> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSpec {
    nodes: Option<usize>,
    max_iters: Option<usize>,
    history: Option<usize>,
    armijo_c: Option<f64>,
    shrink: Option<f64>,
    grad_tol: Option<f64>,
    rel_obj_tol: Option<f64>,
    residual_tol: Option<f64>,
    constraint_tol: Option<f64>,
    trans_tol: Option<f64>,
    lambda_range: Option<[f64; 2]>,
    lambda_scan: Option<usize>,
    t_scan: Option<usize>,
    t_rel_tol: Option<f64>,
}

/// A problem file resolved into library objects.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: VariationalProblem,
    pub options: SolverOptions,
    /// Node count requested by the file, if any.
    pub nodes: Option<usize>,
    /// Bound on transversality magnitudes for candidate checks.
    pub trans_tol: f64,
}

/// Reads and resolves a problem file; relative CSV paths are taken from its directory.
pub fn load_problem(path: &Path) -> Result<LoadedProblem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Problem(format!("cannot read {}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_problem_str(&text, Some(&dir))
}

/// Resolves problem text; `base_dir` anchors relative CSV paths.
pub fn load_problem_str(text: &str, base_dir: Option<&Path>) -> Result<LoadedProblem> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| Error::Problem(e.message().to_string()))?;

    let mut coeffs = CoeffTable::new();
    for spec in &file.coefficients {
        let (name, c) = match spec {
            CoeffSpec::MlAlphaPower { name, alpha } => (name, Coefficient::ml_alpha_power(*alpha)?),
            CoeffSpec::Tabulated { name, csv, samples } => {
                let c = match (csv, samples) {
                    (Some(p), None) => {
                        let path = resolve(base_dir, p);
                        Coefficient::from_csv_path(&path)?
                    }
                    (None, Some(s)) => {
                        Coefficient::tabulated(s.iter().map(|r| r[0]).collect(), s.iter().map(|r| r[1]).collect())?
                    }
                    _ => {
                        return Err(Error::Problem(format!(
                            "tabulated coefficient '{name}' needs exactly one of csv or samples"
                        )))
                    }
                };
                (name, c)
            }
        };
        if coeffs.get(name).is_some() {
            return Err(Error::Problem(format!("coefficient '{name}' declared twice")));
        }
        coeffs.insert(name.clone(), c)?;
    }

    let a = constant(&file.interval.a, "interval.a")?;
    let b = constant(&file.interval.b, "interval.b")?;
    let alpha = FracOrder::derivative(file.orders.alpha)?;
    let beta = FracOrder::derivative(file.orders.beta.unwrap_or(file.orders.alpha))?;
    let lagrangian = expression(&file.lagrangian, "lagrangian", &coeffs)?;

    let t_range = |r: &[Number; 2]| -> Result<(f64, f64)> {
        Ok((constant(&r[0], "boundary.t_range")?, constant(&r[1], "boundary.t_range")?))
    };
    let boundary = match &file.boundary {
        BoundarySpec::Fixed { ya, yb } => Boundary::Fixed {
            ya: constant(ya, "boundary.ya")?,
            yb: constant(yb, "boundary.yb")?,
        },
        BoundarySpec::FreeRightValue { ya } => Boundary::FreeRightValue { ya: constant(ya, "boundary.ya")? },
        BoundarySpec::FreeRightPoint { ya, t_range: r } => {
            Boundary::FreeRightPoint { ya: constant(ya, "boundary.ya")?, t_range: t_range(r)? }
        }
        BoundarySpec::Curve { ya, psi, t_range: r } => Boundary::Curve {
            ya: constant(ya, "boundary.ya")?,
            psi: Curve::new(parse_field(psi, "boundary.psi")?, CoeffTable::new())?,
            t_range: t_range(r)?,
        },
    };

    let mut problem = VariationalProblem::new(lagrangian, alpha, beta, a, b, boundary)?.with_sense(match file.sense {
        SenseSpec::Min => Sense::Minimize,
        SenseSpec::Max => Sense::Maximize,
    });

    if let Some(spec) = &file.constraint {
        let g = expression(&spec.g, "constraint.g", &coeffs)?;
        let l = match &spec.l {
            Number::Text(t) if t.trim_start().starts_with("auto:") => {
                let name = t.trim_start()["auto:".len()..].trim();
                let c = coeffs
                    .get(name)
                    .ok_or_else(|| Error::Problem(format!("constraint.l: undeclared coefficient '{name}'")))?;
                c.integral_of_square(a, b)?
            }
            other => constant(other, "constraint.l")?,
        };
        problem = problem.with_constraint(IsoConstraint::new(g, l)?);
    }

    let s = &file.solver;
    let mut options = SolverOptions::default();
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = s.$field { options.$field = v; } )* };
    }
    set!(max_iters, history, armijo_c, shrink, grad_tol, rel_obj_tol, residual_tol, constraint_tol, lambda_scan, t_scan, t_rel_tol);
    if let Some([lo, hi]) = s.lambda_range {
        options.lambda_range = (lo, hi);
    }
    Ok(LoadedProblem { problem, options, nodes: s.nodes, trans_tol: s.trans_tol.unwrap_or(DEFAULT_TRANS_TOL) })
}

fn resolve(base: Option<&Path>, p: &str) -> PathBuf {
    let p = Path::new(p);
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn parse_field(src: &str, field: &str) -> Result<super::Expr> {
    parse_expression(src).map_err(|e| Error::Problem(format!("{field}: {e}")))
}

fn expression(src: &str, field: &str, coeffs: &CoeffTable) -> Result<Lagrangian> {
    let e = parse_field(src, field)?;
    Lagrangian::new(e, coeffs.clone()).map_err(|e| match e {
        Error::Problem(m) => Error::Problem(format!("{field}: {m}")),
        other => other,
    })
}

/// A number, or an expression without variables or coefficients.
fn constant(n: &Number, field: &str) -> Result<f64> {
    let v = match n {
        Number::Value(v) => *v,
        Number::Text(t) => {
            let e = parse_field(t, field)?;
            if [Var::X, Var::Y, Var::V, Var::W].iter().any(|&v| e.depends_on(v)) || !e.coefficients().is_empty() {
                return Err(Error::Problem(format!("{field}: '{t}' is not a constant expression")));
            }
            let code: Compiled = e.compile(&[]).map_err(Error::Problem)?;
            code.eval(&Point::at_x(0.0, &[])).map_err(|m| Error::Problem(format!("{field}: {m}")))?
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Problem(format!("{field} must be finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
lagrangian = "v^2"
[interval]
a = 0
b = 1
[orders]
alpha = 0.5
[boundary]
mode = "fixed"
ya = 0
yb = 1
"#;

    #[test]
    fn minimal_file_uses_defaults() {
        let p = load_problem_str(MINIMAL, None).unwrap();
        assert_eq!(p.options, SolverOptions::default());
        assert_eq!(p.nodes, None);
        assert_eq!(p.problem.beta.value(), 0.5);
        assert_eq!(p.problem.sense, Sense::Minimize);
        assert!(p.problem.constraint.is_none());
    }

    #[test]
    fn undeclared_coefficient_is_named() {
        let text = MINIMAL.replace("\"v^2\"", "\"v^2 + coeff:zbar\"");
        let e = load_problem_str(&text, None).unwrap_err();
        assert!(e.to_string().contains("zbar"), "{e}");
    }

    #[test]
    fn parse_errors_are_located() {
        let text = MINIMAL.replace("\"v^2\"", "\"2 + * v\"");
        let e = load_problem_str(&text, None).unwrap_err();
        assert!(e.to_string().contains("lagrangian") && e.to_string().contains("byte 4"), "{e}");
    }

    #[test]
    fn schema_violations() {
        assert!(load_problem_str(&MINIMAL.replace("mode = \"fixed\"", "mode = \"sideways\""), None).is_err());
        assert!(load_problem_str(&MINIMAL.replace("[orders]\nalpha = 0.5", ""), None).is_err());
        assert!(load_problem_str(&format!("{MINIMAL}\n[solver]\nbogus = 1\n"), None).is_err());
        assert!(load_problem_str(&MINIMAL.replace("yb = 1", "yb = \"x\""), None).is_err());
        assert!(load_problem_str(&MINIMAL.replace("alpha = 0.5", "alpha = 1.5"), None).is_err());
    }

    #[test]
    fn constant_expressions_and_overrides() {
        let text = format!(
            "{}\n[solver]\nnodes = 65\nresidual_tol = 0.2\nlambda_range = [-5, 5]\n",
            MINIMAL.replace("yb = 1", "yb = \"ml(1, 1)\"")
        );
        let p = load_problem_str(&text, None).unwrap();
        match p.problem.boundary {
            Boundary::Fixed { yb, .. } => assert!((yb - std::f64::consts::E).abs() < 1e-14),
            _ => panic!("wrong mode"),
        }
        assert_eq!(p.nodes, Some(65));
        assert_eq!(p.options.residual_tol, 0.2);
        assert_eq!(p.options.lambda_range, (-5.0, 5.0));
    }

    #[test]
    fn tabulated_samples_and_auto_constraint() {
        let text = format!(
            "{MINIMAL}\n[constraint]\ng = \"coeff:c * v\"\nl = \"auto:c\"\n\n[[coefficients]]\nname = \"c\"\nkind = \"tabulated\"\nsamples = [[0, 1], [1, 1]]\n"
        );
        let p = load_problem_str(&text, None).unwrap();
        assert!((p.problem.constraint.unwrap().l - 1.0).abs() < 1e-14);
    }

    #[test]
    fn free_modes() {
        let text = MINIMAL.replace("mode = \"fixed\"\nya = 0\nyb = 1", "mode = \"curve\"\nya = 0\npsi = \"x^2\"\nt_range = [0.5, 1]");
        let p = load_problem_str(&text, None).unwrap();
        assert_eq!(p.problem.boundary.name(), "curve");
        let text = MINIMAL.replace("yb = 1", "t_range = [0.5, 1]").replace("\"fixed\"", "\"free_right_point\"");
        assert!(load_problem_str(&text, None).is_ok());
        let text = MINIMAL.replace("yb = 1", "t_range = [1, 0.5]").replace("\"fixed\"", "\"free_right_point\"");
        assert!(load_problem_str(&text, None).is_err());
    }
}
