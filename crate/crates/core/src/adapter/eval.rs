use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{Map, Number, Value};

use super::{check::ValidatedAdapter, AdapterProgram, ArithOp, Expr};
use crate::path::{Path, Segment};
use crate::units;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("field `{0}` is absent from the input")]
    Missing(Path),
    #[error("`{func}`: {message}")]
    BadArgument { func: String, message: String },
    #[error("arithmetic `{op}` needs numbers, found {lhs} and {rhs}")]
    NonNumeric { op: char, lhs: String, rhs: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("result is not a finite number")]
    NonFinite,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("cannot write `{path}`: {message}")]
    Shape { path: Path, message: String },
}

/// Runs a validated program. Pure: the same program and input always
/// produce the same output.
pub fn execute_adapter(program: &ValidatedAdapter, data: &Value) -> Result<Value, EvalError> {
    execute_unchecked(program.program(), data)
}

/// Runs a program that has not been through [`super::validate_adapter`].
/// Unknown functions surface as [`EvalError::UnknownFunction`].
///
/// An assignment whose inputs are absent is skipped, leaving the target
/// unset; schema validation decides whether that matters.
pub fn execute_unchecked(program: &AdapterProgram, data: &Value) -> Result<Value, EvalError> {
    let mut out = Value::Object(Map::new());
    for assignment in &program.assignments {
        match evaluate(&assignment.expr, data) {
            Ok(value) => write_path(&mut out, assignment.target.segments(), value, &assignment.target)?,
            Err(EvalError::Missing(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn evaluate(expr: &Expr, data: &Value) -> Result<Value, EvalError> {
    match expr {
        Expr::Get(path) => read_path(data, path.segments()).ok_or_else(|| EvalError::Missing(path.clone())),
        Expr::Const(v) => Ok(v.clone()),
        Expr::Arith { op, lhs, rhs } => arith(*op, &evaluate(lhs, data)?, &evaluate(rhs, data)?),
        Expr::Call { func, args } => {
            let values = args.iter().map(|a| evaluate(a, data)).collect::<Result<Vec<_>, _>>()?;
            call(func, &values)
        }
    }
}

/// Reads `segments` from `data`. An items marker maps the rest of the path
/// over every element.
pub(crate) fn read_path(data: &Value, segments: &[Segment]) -> Option<Value> {
    match segments.split_first() {
        None => Some(data.clone()),
        Some((Segment::Field(name), rest)) => read_path(data.as_object()?.get(name)?, rest),
        Some((Segment::Items, rest)) => {
            let items = data.as_array()?;
            items.iter().map(|item| read_path(item, rest)).collect::<Option<Vec<_>>>().map(Value::Array)
        }
    }
}

/// Writes `value` at `segments`, creating intermediate objects. Writing
/// through an items marker spreads an array value over array elements.
pub(crate) fn write_path(slot: &mut Value, segments: &[Segment], value: Value, full: &Path) -> Result<(), EvalError> {
    let shape = |message: &str| EvalError::Shape { path: full.clone(), message: message.to_string() };
    match segments.split_first() {
        None => {
            *slot = value;
            Ok(())
        }
        Some((Segment::Field(name), rest)) => {
            if slot.is_null() {
                *slot = Value::Object(Map::new());
            }
            let obj = slot.as_object_mut().ok_or_else(|| shape("parent is not an object"))?;
            let child = obj.entry(name.clone()).or_insert(Value::Null);
            write_path(child, rest, value, full)
        }
        Some((Segment::Items, rest)) => {
            let Value::Array(values) = value else {
                return Err(shape("an array value is required"));
            };
            if rest.is_empty() {
                *slot = Value::Array(values);
                return Ok(());
            }
            if slot.is_null() {
                *slot = Value::Array(vec![Value::Null; values.len()]);
            }
            let existing = slot.as_array_mut().ok_or_else(|| shape("parent is not an array"))?;
            if existing.len() != values.len() {
                return Err(shape("array lengths differ between assignments"));
            }
            for (item, v) in existing.iter_mut().zip(values) {
                write_path(item, rest, v, full)?;
            }
            Ok(())
        }
    }
}

pub(crate) fn number(f: f64) -> Result<Value, EvalError> {
    Number::from_f64(f).map(Value::Number).ok_or(EvalError::NonFinite)
}

fn describe(v: &Value) -> String {
    let text = v.to_string();
    if text.len() > 40 {
        format!("{}…", &text[..text.char_indices().nth(40).map_or(text.len(), |(i, _)| i)])
    } else {
        text
    }
}

fn arith(op: ArithOp, lhs: &Value, rhs: &Value) -> Result<Value, EvalError> {
    let non_numeric = || EvalError::NonNumeric { op: op.symbol(), lhs: describe(lhs), rhs: describe(rhs) };
    if let (Some(a), Some(b)) = (lhs.as_i64(), rhs.as_i64()) {
        let exact = match op {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
            ArithOp::Mul => a.checked_mul(b),
            ArithOp::Div => None,
        };
        if let Some(n) = exact {
            return Ok(Value::from(n));
        }
    }
    let a = lhs.as_f64().ok_or_else(non_numeric)?;
    let b = rhs.as_f64().ok_or_else(non_numeric)?;
    let r = match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => {
            if b == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            a / b
        }
    };
    number(r)
}

fn bad(func: &str, message: impl Into<String>) -> EvalError {
    EvalError::BadArgument { func: func.to_string(), message: message.into() }
}

fn to_f64(func: &str, v: &Value) -> Result<f64, EvalError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| bad(func, "number out of range")),
        Value::String(s) => s.trim().parse::<f64>().map_err(|_| bad(func, format!("`{s}` is not numeric"))),
        other => Err(bad(func, format!("expected a number, found {}", describe(other)))),
    }
}

/// Numeric arguments of an aggregate: one array, or the arguments
/// themselves.
fn numeric_list(func: &str, args: &[Value]) -> Result<Vec<Value>, EvalError> {
    let items: Vec<Value> = match args {
        [Value::Array(items)] => items.clone(),
        _ => args.to_vec(),
    };
    if items.is_empty() {
        return Err(bad(func, "no values"));
    }
    for item in &items {
        if !item.is_number() {
            return Err(bad(func, format!("expected numbers, found {}", describe(item))));
        }
    }
    Ok(items)
}

/// Parses RFC 3339 / ISO 8601 text with `Z` or a numeric offset.
pub fn iso8601_to_epoch(text: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(text.trim()).ok().map(|dt| dt.timestamp())
}

pub fn epoch_to_iso8601(secs: i64) -> Option<String> {
    DateTime::<Utc>::from_timestamp(secs, 0).map(|dt| dt.to_rfc3339_opts(SecondsFormat::Secs, true))
}

/// Text rendering used by `to_string` and `concat`.
pub(crate) fn stringify(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn call(func: &str, args: &[Value]) -> Result<Value, EvalError> {
    match super::builtin_arity(func) {
        None => return Err(EvalError::UnknownFunction(func.to_string())),
        Some(arity) if !arity.accepts(args.len()) => {
            return Err(bad(func, format!("wrong number of arguments ({})", args.len())))
        }
        Some(_) => {}
    }
    let one = || args.first().ok_or_else(|| bad(func, "missing argument"));
    match func {
        "to_float" => number(to_f64(func, one()?)?),
        "to_int" => {
            let v = one()?;
            if let Some(n) = v.as_i64() {
                return Ok(Value::from(n));
            }
            if let Value::String(s) = v {
                if let Ok(n) = s.trim().parse::<i64>() {
                    return Ok(Value::from(n));
                }
            }
            let f = libm::trunc(to_f64(func, v)?);
            if !f.is_finite() || f.abs() > 9.0e18 {
                return Err(EvalError::NonFinite);
            }
            Ok(Value::from(f as i64))
        }
        "to_string" => Ok(Value::String(stringify(one()?))),
        "round" => {
            let x = to_f64(func, &args[0])?;
            let digits = args[1]
                .as_i64()
                .or_else(|| args[1].as_f64().filter(|f| libm::trunc(*f) == *f).map(|f| f as i64))
                .filter(|d| (0..=15).contains(d))
                .ok_or_else(|| bad(func, "digits must be an integer in 0..=15"))?;
            let scale = libm::pow(10.0, digits as f64);
            number(libm::round(x * scale) / scale)
        }
        "celsius_to_fahrenheit" => number(units::celsius_to_fahrenheit(to_f64(func, one()?)?)),
        "fahrenheit_to_celsius" => number(units::fahrenheit_to_celsius(to_f64(func, one()?)?)),
        "kmh_to_mph" => number(units::kmh_to_mph(to_f64(func, one()?)?)),
        "mph_to_kmh" => number(units::mph_to_kmh(to_f64(func, one()?)?)),
        "m_to_ft" => number(units::m_to_ft(to_f64(func, one()?)?)),
        "ft_to_m" => number(units::ft_to_m(to_f64(func, one()?)?)),
        "iso8601_to_epoch" => {
            let text = one()?.as_str().ok_or_else(|| bad(func, "expected a string"))?;
            iso8601_to_epoch(text)
                .map(Value::from)
                .ok_or_else(|| bad(func, format!("`{text}` is not an ISO 8601 timestamp")))
        }
        "epoch_to_iso8601" => {
            let v = one()?;
            let secs = v
                .as_i64()
                .or_else(|| v.as_f64().map(|f| libm::floor(f) as i64))
                .ok_or_else(|| bad(func, "expected a number"))?;
            epoch_to_iso8601(secs).map(Value::String).ok_or_else(|| bad(func, "timestamp out of range"))
        }
        "first" => match one()? {
            Value::Array(items) => items.first().cloned().ok_or_else(|| bad(func, "empty array")),
            other => Err(bad(func, format!("expected an array, found {}", describe(other)))),
        },
        "wrap_array" => Ok(Value::Array(vec![one()?.clone()])),
        "mean" => {
            let items = numeric_list(func, args)?;
            let sum: f64 = items.iter().filter_map(Value::as_f64).sum();
            number(sum / items.len() as f64)
        }
        "min" | "max" => {
            let items = numeric_list(func, args)?;
            let mut best = &items[0];
            for item in &items[1..] {
                let (a, b) = (item.as_f64().unwrap_or(f64::NAN), best.as_f64().unwrap_or(f64::NAN));
                if (func == "min" && a < b) || (func == "max" && a > b) {
                    best = item;
                }
            }
            Ok(best.clone())
        }
        "lower" | "upper" => {
            let s = one()?.as_str().ok_or_else(|| bad(func, "expected a string"))?;
            Ok(Value::String(if func == "lower" { s.to_lowercase() } else { s.to_uppercase() }))
        }
        "concat" => Ok(Value::String(args.iter().map(stringify).collect())),
        other => Err(EvalError::UnknownFunction(other.to_string())),
    }
}
