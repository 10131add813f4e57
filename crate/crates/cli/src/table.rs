//! Numeric CSV input and fixed-precision CSV output.

use std::fmt::Write as _;

/// Formats a double with 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let cells: Vec<String> = columns.iter().map(|c| fmt_f64(c[i])).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Reads the first two columns of a numeric CSV. A first row that does not
/// parse is taken as a header; extra columns are ignored.
pub fn read_xy(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("CSV error: {e}"))?;
        if record.len() < 2 {
            return Err(format!("CSV row {} has {} columns, expected at least 2", row + 1, record.len()));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if row == 0 => {}
            _ => return Err(format!("CSV row {} is not numeric", row + 1)),
        }
    }
    Ok((xs, ys))
}

/// Checks that `xs` are the nodes of the uniform grid on [a, b] they span.
pub fn check_uniform(xs: &[f64], a: f64, b: f64) -> Result<(), String> {
    let n = xs.len();
    if n < 3 {
        return Err(format!("need at least 3 rows, got {n}"));
    }
    let h = (b - a) / (n - 1) as f64;
    let tol = 1e-9 * (b - a).abs().max(f64::MIN_POSITIVE);
    for (i, &x) in xs.iter().enumerate() {
        let node = a + h * i as f64;
        if (x - node).abs() > tol {
            return Err(format!(
                "row {} has x = {x}, expected node {node} of the {n}-node grid on [{a}, {b}]",
                i + 1
            ));
        }
    }
    Ok(())
}
