//! `fracvar` command-line tool.
//!
//! Exit codes: 0 success, 1 certified failure (a check or solve that ran but
//! did not meet its tolerances), 2 usage or input errors, 3 numerical errors.

mod manifest;
mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use fracvar::fracops::{caputo_left, verify_ibp, FracOrder, Grid, GridFunction, Operator, SmoothFn};
use fracvar::problemdef::{differentiate, load_problem, parse_expression, Compiled, Expr, LoadedProblem, Point, Var};
use fracvar::solver::{solve, Boundary, SolveResult};
use fracvar::varcalc::{el_residual, transversality_check, ELReport, Lagrangian, TransReport, TransversalityMode};
use fracvar::Error;

use manifest::{FileDigest, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "fracvar", version, about = "Fractional operators and fractional variational problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply a fractional operator to a function sampled on a uniform grid.
    Op(OpArgs),
    /// Check both integration-by-parts identities for a pair of functions.
    VerifyIbp(IbpArgs),
    /// Certify a candidate solution of a problem file.
    Check(CheckArgs),
    /// Solve a problem file.
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
struct OpArgs {
    /// Ileft, Iright, Dcleft, Dcright, Drlleft or Drlright.
    #[arg(long)]
    op: String,
    #[arg(long, default_value_t = 0.5)]
    order: f64,
    #[arg(long, num_args = 2, value_names = ["A", "B"], default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
    interval: Vec<f64>,
    #[arg(long, default_value_t = 257)]
    nodes: usize,
    /// Expression in x.
    #[arg(long = "fn", conflicts_with = "csv", required_unless_present = "csv")]
    function: Option<String>,
    /// Two-column CSV of samples on a uniform grid.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IbpArgs {
    #[arg(long)]
    order: f64,
    #[arg(long)]
    f: String,
    #[arg(long)]
    g: String,
    #[arg(long, num_args = 2, value_names = ["A", "B"], default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
    interval: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    problem: PathBuf,
    /// CSV whose first two columns are x and y.
    #[arg(long)]
    candidate: PathBuf,
    /// Multiplier for constrained problems; estimated when absent.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Grid size; defaults to the problem file's value, then 257.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

const DEFAULT_NODES: usize = 257;

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

type Outcome = Result<bool, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn utf8(path: &Path, bytes: &[u8]) -> Result<String, Failure> {
    String::from_utf8(bytes.to_vec()).map_err(|_| usage(format!("{} is not valid UTF-8", path.display())))
}

fn interval(v: &[f64]) -> Result<(f64, f64), Failure> {
    match *v {
        [a, b] if a.is_finite() && b.is_finite() && a < b => Ok((a, b)),
        _ => Err(usage(format!("--interval needs two finite values A < B, got {v:?}"))),
    }
}

/// Parses an expression that may only mention `x`.
fn parse_in_x(flag: &str, src: &str) -> Result<(Expr, Compiled), Failure> {
    let e = parse_expression(src).map_err(|err| usage(format!("{flag}: {err}")))?;
    if let Some(v) = [Var::Y, Var::V, Var::W].into_iter().find(|&v| e.depends_on(v)) {
        return Err(usage(format!("{flag}: expression may only use x, found {}", v.name())));
    }
    let c = e.compile(&[]).map_err(|err| usage(format!("{flag}: {err}")))?;
    Ok((e, c))
}

fn eval_in_x(c: &Compiled, x: f64) -> Result<f64, String> {
    c.eval(&Point::at_x(x, &[]))
}

fn write_output(out: &Path, text: &str) -> Result<FileDigest, Failure> {
    fs::write(out, text).map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
    Ok(FileDigest::of(out, text.as_bytes()))
}

fn finish_manifest(
    command: &str,
    options: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    out: &Path,
    start: Instant,
) -> Result<(), Failure> {
    let m = RunManifest {
        command: command.into(),
        options,
        inputs,
        outputs,
        version: env!("CARGO_PKG_VERSION"),
        elapsed_ms: start.elapsed().as_millis(),
    };
    m.write_next_to(out).map_err(|e| usage(format!("cannot write manifest for {}: {e}", out.display())))?;
    Ok(())
}

fn cmd_op(args: &OpArgs) -> Outcome {
    let start = Instant::now();
    let op = Operator::from_str(&args.op)?;
    let order = FracOrder::new(args.order)?;
    let mut inputs = Vec::new();
    let f = match (&args.function, &args.csv) {
        (Some(src), _) => {
            let (a, b) = interval(&args.interval)?;
            let grid = Grid::new(a, b, args.nodes)?;
            let (_, c) = parse_in_x("--fn", src)?;
            let mut values = Vec::with_capacity(args.nodes);
            for (i, x) in grid.nodes().enumerate() {
                let v = eval_in_x(&c, x).map_err(|message| Failure::from(Error::Eval { node: i, message }))?;
                values.push(v);
            }
            GridFunction::new(grid, values)?
        }
        (None, Some(path)) => {
            let bytes = read_input(path)?;
            let text = utf8(path, &bytes)?;
            inputs.push(FileDigest::of(path, &bytes));
            let (xs, ys) = table::read_xy(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let (a, b) = match (xs.first(), xs.last()) {
                (Some(&a), Some(&b)) if a < b => (a, b),
                _ => return Err(usage(format!("{}: x column must increase", path.display()))),
            };
            table::check_uniform(&xs, a, b).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            GridFunction::new(Grid::new(a, b, xs.len())?, ys)?
        }
        (None, None) => return Err(usage("one of --fn or --csv is required")),
    };
    let result = op.apply(&f, order)?;
    let xs: Vec<f64> = f.grid().nodes().collect();
    let text = table::render(&["x", "f", "result"], &[&xs, f.values(), result.values()]);
    match &args.out {
        None => print!("{text}"),
        Some(out) => {
            let digest = write_output(out, &text)?;
            println!("{op} of order {} on {} nodes written to {}", args.order, f.len(), out.display());
            let options = json!({
                "op": op.name(),
                "order": args.order,
                "interval": [f.grid().a(), f.grid().b()],
                "nodes": f.len(),
                "fn": args.function,
                "csv": args.csv.as_ref().map(|p| p.display().to_string()),
            });
            finish_manifest("op", options, inputs, vec![digest], out, start)?;
        }
    }
    Ok(true)
}

struct ExprFn {
    value: Compiled,
    derivative: Compiled,
}

impl ExprFn {
    fn parse(flag: &str, src: &str) -> Result<Self, Failure> {
        let (e, value) = parse_in_x(flag, src)?;
        let derivative = differentiate(&e, Var::X).compile(&[]).map_err(|err| usage(format!("{flag}: {err}")))?;
        Ok(Self { value, derivative })
    }
}

impl SmoothFn for ExprFn {
    // evaluation failures become NaN, which the quadrature reports
    fn value(&self, x: f64) -> f64 {
        eval_in_x(&self.value, x).unwrap_or(f64::NAN)
    }

    fn derivative(&self, x: f64) -> f64 {
        eval_in_x(&self.derivative, x).unwrap_or(f64::NAN)
    }
}

fn cmd_verify_ibp(args: &IbpArgs) -> Outcome {
    let (a, b) = interval(&args.interval)?;
    let alpha = FracOrder::derivative(args.order)?;
    let f = ExprFn::parse("--f", &args.f)?;
    let g = ExprFn::parse("--g", &args.g)?;
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let bound = 10.0 * args.tol;
    let report = match verify_ibp(&f, &g, alpha, a, b, args.tol) {
        Ok(r) => r,
        Err(Error::Accuracy(msg)) => {
            println!("quadrature could not reach the requested tolerance {}: {msg}", args.tol);
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    for (name, id) in [("left", report.left), ("right", report.right)] {
        println!(
            "{name:<5}  lhs = {}  rhs = {}  residual = {:.3e}",
            table::fmt_f64(id.lhs),
            table::fmt_f64(id.rhs),
            id.residual
        );
    }
    if report.quad_tol != args.tol {
        println!("quadrature tolerance clamped to {:e}", report.quad_tol);
    }
    let ok = report.max_residual() <= bound;
    println!("{}: max residual {:.3e}, bound {:.3e}", if ok { "PASS" } else { "FAIL" }, report.max_residual(), bound);
    Ok(ok)
}

fn load(path: &Path) -> Result<(LoadedProblem, FileDigest), Failure> {
    let bytes = read_input(path)?;
    let p = load_problem(path)?;
    Ok((p, FileDigest::of(path, &bytes)))
}

fn trans_mode(boundary: &Boundary) -> Option<TransversalityMode> {
    match boundary {
        Boundary::Fixed { .. } => None,
        Boundary::FreeRightValue { .. } => Some(TransversalityMode::FixedTFreeY),
        Boundary::FreeRightPoint { .. } => Some(TransversalityMode::FreeBoth),
        Boundary::Curve { psi, .. } => Some(TransversalityMode::Curve(psi.clone())),
    }
}

fn print_el(report: &ELReport) {
    let (lo, hi) = report.trusted_range();
    println!(
        "Euler-Lagrange residual: sup {:.6e}, L2 {:.6e} over nodes {lo}..{hi}",
        report.sup_norm, report.l2_norm
    );
}

fn print_trans(report: &TransReport) {
    for c in &report.conditions {
        println!("transversality {} = {:.6e} ({} at T = {})", c.name, c.magnitude, report.mode, report.t);
    }
}

/// Least-squares multiplier for `R_L + λ R_g ≈ 0` over trusted nodes.
fn estimate_lambda(rl: &ELReport, rg: &ELReport) -> Option<f64> {
    let (lo, hi) = rl.trusted_range();
    let (l, g) = (&rl.residual.values()[lo..hi], &rg.residual.values()[lo..hi]);
    let gg: f64 = g.iter().map(|v| v * v).sum();
    (gg > 0.0).then(|| -l.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / gg)
}

fn cmd_check(args: &CheckArgs) -> Outcome {
    let (lp, _) = load(&args.problem)?;
    let p = &lp.problem;
    let bytes = read_input(&args.candidate)?;
    let text = utf8(&args.candidate, &bytes)?;
    let bad = |e: String| usage(format!("{}: {e}", args.candidate.display()));
    let (xs, ys) = table::read_xy(&text).map_err(bad)?;
    let t = match &p.boundary {
        Boundary::FreeRightPoint { t_range, .. } | Boundary::Curve { t_range, .. } => {
            let t = xs.last().copied().unwrap_or(f64::NAN);
            if !(t >= t_range.0 && t <= t_range.1) {
                return Err(bad(format!("candidate ends at {t}, outside the terminal range {t_range:?}")));
            }
            t
        }
        _ => p.b,
    };
    table::check_uniform(&xs, p.a, t).map_err(bad)?;
    let y = GridFunction::new(Grid::new(p.a, t, xs.len())?, ys)?;
    println!("candidate {} with {} nodes on [{}, {t}]", args.candidate.display(), y.len(), p.a);

    let scale = p.boundary.ya().abs().max(1.0);
    let mut ok = true;
    let mut boundary_gap = (y.values()[0] - p.boundary.ya()).abs();
    if let Boundary::Fixed { yb, .. } = p.boundary {
        boundary_gap = boundary_gap.max((y.values()[y.len() - 1] - yb).abs());
    }
    if boundary_gap > 1e-9 * scale {
        println!("boundary data violated by {boundary_gap:.3e}");
        ok = false;
    }

    let target = match &p.constraint {
        None => p.lagrangian.clone(),
        Some(c) => {
            let lambda = match args.lambda {
                Some(l) => l,
                None => {
                    let rl = el_residual(&p.lagrangian, &y, p.alpha, p.beta)?;
                    let rg = el_residual(&c.g, &y, p.alpha, p.beta)?;
                    let l = estimate_lambda(&rl, &rg).ok_or_else(|| {
                        Failure::Numerical("constraint residual vanishes; multiplier is not identifiable".into())
                    })?;
                    println!("estimated multiplier lambda = {l:.10}");
                    l
                }
            };
            let defect = fracvar::varcalc::eval_functional(&c.g, &y, p.alpha, p.beta)? - c.l;
            println!("lambda = {lambda}, constraint defect I(y) - l = {defect:.6e}");
            Lagrangian::combine(1.0, &p.lagrangian, lambda, &c.g)?
        }
    };
    let el = el_residual(&target, &y, p.alpha, p.beta)?;
    print_el(&el);
    if el.sup_norm > lp.options.residual_tol {
        ok = false;
    }
    if let Some(mode) = trans_mode(&p.boundary) {
        let tr = transversality_check(&p.lagrangian, &y, p.alpha, t, &mode)?;
        print_trans(&tr);
        if tr.max_magnitude() > lp.trans_tol {
            ok = false;
        }
    }
    println!(
        "{} (residual tolerance {}, transversality tolerance {})",
        if ok { "PASS" } else { "FAIL" },
        lp.options.residual_tol,
        lp.trans_tol
    );
    Ok(ok)
}

fn print_solution(r: &SolveResult) {
    if let Some(l) = r.lambda {
        println!("lambda = {l:.10}");
    }
    if let Some(t) = r.t {
        println!("T = {t:.10}");
    }
    if let Some(d) = r.constraint_defect {
        println!("constraint defect = {d:.6e}");
    }
    println!("objective = {}", table::fmt_f64(r.objective));
    print_el(&r.el_report);
    if let Some(tr) = &r.trans_report {
        print_trans(tr);
    }
    println!("iterations = {}", r.iterations);
    println!("converged = {}", r.converged);
}

fn cmd_solve(args: &SolveArgs) -> Outcome {
    let start = Instant::now();
    let (lp, digest) = load(&args.problem)?;
    let nodes = args.nodes.or(lp.nodes).unwrap_or(DEFAULT_NODES);
    let r = solve(&lp.problem, nodes, &lp.options)?;
    print_solution(&r);
    if let Some(out) = &args.out {
        let v = caputo_left(&r.y, lp.problem.alpha)?;
        let xs: Vec<f64> = r.y.grid().nodes().collect();
        let text = table::render(
            &["x", "y", "v", "residual"],
            &[&xs, r.y.values(), v.values(), r.el_report.residual.values()],
        );
        let out_digest = write_output(out, &text)?;
        let o = &lp.options;
        let options = json!({
            "problem": args.problem.display().to_string(),
            "nodes": nodes,
            "boundary": lp.problem.boundary.name(),
            "residual_tol": o.residual_tol,
            "constraint_tol": o.constraint_tol,
            "lambda_range": [o.lambda_range.0, o.lambda_range.1],
            "lambda_scan": o.lambda_scan,
            "t_scan": o.t_scan,
            "t_rel_tol": o.t_rel_tol,
            "max_iters": o.max_iters,
            "history": o.history,
            "grad_tol": o.grad_tol,
            "rel_obj_tol": o.rel_obj_tol,
        });
        finish_manifest("solve", options, vec![digest], vec![out_digest], out, start)?;
        println!("solution written to {}", out.display());
    }
    Ok(r.converged)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("FRACVAR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("FRACVAR_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Numerical(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Op(a) => cmd_op(a),
        Command::VerifyIbp(a) => cmd_verify_ibp(a),
        Command::Check(a) => cmd_check(a),
        Command::Solve(a) => cmd_solve(a),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(3)
        }
    }
}
