//! Sandboxed adapter programs.
//!
//! An adapter is an ordered list of `target := expression` assignments. The
//! expression language has field reads, JSON constants, the four arithmetic
//! operators and calls into a fixed set of builtins. There are no loops,
//! bindings or user functions, so every program terminates and has no side
//! effects beyond building its output object.
//!
//! Programs travel as JSON (`{"assignments":[{"target":"a.b","expr":{...}}]}`)
//! and mapping transforms use a compact text form of the same expressions,
//! e.g. `round(kmh_to_mph($wind_speed_kmh), 2)`.

mod check;
pub(crate) mod eval;
mod text;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::path::Path;

pub use check::{check_static, validate_adapter, AdapterError, StaticViolation, ValidatedAdapter};
pub use eval::{epoch_to_iso8601, evaluate, execute_adapter, execute_unchecked, iso8601_to_epoch, EvalError};
pub use text::{parse_expr, parse_transform, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    #[serde(rename = "add", alias = "+")]
    Add,
    #[serde(rename = "sub", alias = "-")]
    Sub,
    #[serde(rename = "mul", alias = "*")]
    Mul,
    #[serde(rename = "div", alias = "/")]
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Get(Path),
    Const(Value),
    Arith {
        op: ArithOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        #[serde(rename = "fn")]
        func: String,
        #[serde(default)]
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn get(path: &str) -> Self {
        Expr::Get(path.parse().expect("valid path literal"))
    }

    pub fn call(func: &str, args: Vec<Expr>) -> Self {
        Expr::Call { func: func.into(), args }
    }

    pub fn arith(op: ArithOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Arith { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    /// Pre-order walk over this node and all sub-expressions.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Arith { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.visit(f)),
            Expr::Get(_) | Expr::Const(_) => {}
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

/// Renders the text form; [`parse_expr`] reads it back to an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Get(path) => f.write_str(&text::render_get(path)),
            Expr::Const(value) => write!(f, "{value}"),
            Expr::Arith { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Call { func, args } => {
                write!(f, "{func}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub target: Path,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdapterProgram {
    pub assignments: Vec<Assignment>,
}

impl AdapterProgram {
    pub fn new(assignments: Vec<Assignment>) -> Self {
        Self { assignments }
    }

    pub fn assign(mut self, target: &str, expr: Expr) -> Self {
        self.assignments.push(Assignment { target: target.parse().expect("valid path literal"), expr });
        self
    }

    /// Keeps only assignments whose target satisfies `keep`.
    pub fn retain_targets(&mut self, mut keep: impl FnMut(&Path) -> bool) {
        self.assignments.retain(|a| keep(&a.target));
    }
}

/// Arity rule for a whitelisted builtin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

/// The builtin whitelist: name and arity.
pub const BUILTINS: &[(&str, Arity)] = &[
    ("to_float", Arity::Exactly(1)),
    ("to_int", Arity::Exactly(1)),
    ("to_string", Arity::Exactly(1)),
    ("round", Arity::Exactly(2)),
    ("celsius_to_fahrenheit", Arity::Exactly(1)),
    ("fahrenheit_to_celsius", Arity::Exactly(1)),
    ("kmh_to_mph", Arity::Exactly(1)),
    ("mph_to_kmh", Arity::Exactly(1)),
    ("m_to_ft", Arity::Exactly(1)),
    ("ft_to_m", Arity::Exactly(1)),
    ("iso8601_to_epoch", Arity::Exactly(1)),
    ("epoch_to_iso8601", Arity::Exactly(1)),
    ("first", Arity::Exactly(1)),
    ("wrap_array", Arity::Exactly(1)),
    ("mean", Arity::AtLeast(1)),
    ("min", Arity::AtLeast(1)),
    ("max", Arity::AtLeast(1)),
    ("lower", Arity::Exactly(1)),
    ("upper", Arity::Exactly(1)),
    ("concat", Arity::AtLeast(1)),
];

pub fn builtin_arity(name: &str) -> Option<Arity> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}
