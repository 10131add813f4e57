//! Expression language for Lagrangians and the problem-file loader.

mod coeff;
mod diff;
mod expr;
mod file;
mod parser;

pub use coeff::{read_two_columns, CoeffTable, Coefficient};
pub use diff::differentiate;
pub use file::{load_problem, load_problem_str, LoadedProblem, DEFAULT_TRANS_TOL};
pub use expr::{BinaryOp, Compiled, Expr, Point, UnaryOp, Var};
pub use parser::{parse_expression, ParseError, ParseErrorKind, MAX_DEPTH, MAX_SOURCE_LEN};

pub(crate) use expr::{add, mul};
