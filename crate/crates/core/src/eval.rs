//! Expression semantics shared by all evaluators.
//!
//! Every stage evaluates its scalar expressions through [`eval`], so the stages
//! can only disagree on control flow, never on operator behavior.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::EvalError;
use crate::expr::{BinOp, Builtin, Expr, UnOp};
use crate::frontend::Param;
use crate::runtime::QueryOracle;
use crate::value::{TypeTag, Value};

/// Default maximum number of loop steps an evaluator may take.
pub const DEFAULT_ITERATION_CAP: u64 = 1_000_000;

/// Name resolution for expression evaluation.
pub trait Scope {
    fn get(&self, name: &str) -> Option<&Value>;

    fn column(&self, _table: &str, _name: &str) -> Option<&Value> {
        None
    }
}

impl Scope for HashMap<String, Value> {
    fn get(&self, name: &str) -> Option<&Value> {
        HashMap::get(self, name)
    }
}

/// Evaluates `expr` left to right. Embedded queries and `random()` go through `oracle`.
pub fn eval(
    expr: &Expr,
    scope: &dyn Scope,
    oracle: &mut dyn QueryOracle,
) -> Result<Value, EvalError> {
    match expr {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(name) => scope
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::Undefined(name.clone())),
        Expr::Column { table, name } => scope
            .column(table, name)
            .cloned()
            .ok_or_else(|| EvalError::Undefined(format!("{table}.{name}"))),
        Expr::Binary { op, lhs, rhs } => {
            let a = eval(lhs, scope, oracle)?;
            let b = eval(rhs, scope, oracle)?;
            binary(*op, a, b)
        }
        Expr::Unary { op, arg } => {
            let v = eval(arg, scope, oracle)?;
            unary(*op, v)
        }
        Expr::IsNull { expr, negated } => {
            let v = eval(expr, scope, oracle)?;
            Ok(Value::Bool(v.is_null() != *negated))
        }
        Expr::Builtin {
            func: Builtin::Coalesce,
            args,
        } => {
            for a in args {
                let v = eval(a, scope, oracle)?;
                if !v.is_null() {
                    return Ok(v);
                }
            }
            Ok(Value::Null)
        }
        Expr::Builtin {
            func: Builtin::Random,
            ..
        } => Ok(Value::Float(oracle.next_random())),
        Expr::Builtin { func, args } => {
            let vals = args
                .iter()
                .map(|a| eval(a, scope, oracle))
                .collect::<Result<Vec<_>, _>>()?;
            builtin(*func, &vals)
        }
        Expr::Query { id, args } => {
            let vals = args
                .iter()
                .map(|a| eval(a, scope, oracle))
                .collect::<Result<Vec<_>, _>>()?;
            oracle
                .eval_query(*id, &vals)
                .map_err(|e| EvalError::Oracle(e.to_string()))
        }
        Expr::Cast { expr, ty } => {
            let v = eval(expr, scope, oracle)?;
            cast(v, *ty)
        }
        Expr::Tuple(items) => Ok(Value::Tuple(
            items
                .iter()
                .map(|a| eval(a, scope, oracle))
                .collect::<Result<Vec<_>, _>>()?,
        )),
        Expr::Apply { func, .. } => Err(EvalError::NonTailCall(func.clone())),
    }
}

/// Conditions only take their branch on a definite `true`; NULL behaves like `false`.
pub fn truthy(v: &Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Null => Ok(false),
        other => Err(EvalError::TypeMismatch(format!(
            "condition must be bool, got {}",
            other.kind()
        ))),
    }
}

/// Checks arity and declared types of call arguments.
pub fn check_args(params: &[Param], args: &[Value]) -> Result<(), EvalError> {
    if params.len() != args.len() {
        return Err(EvalError::Arguments(format!(
            "expected {} arguments, got {}",
            params.len(),
            args.len()
        )));
    }
    for (p, v) in params.iter().zip(args) {
        if !v.conforms(p.ty) {
            return Err(EvalError::TypeMismatch(format!(
                "argument `{}` expects {}, got {}",
                p.name,
                p.ty,
                v.kind()
            )));
        }
    }
    Ok(())
}

/// Checks a function result against the declared return type.
pub fn check_result(ty: TypeTag, v: Value) -> Result<Value, EvalError> {
    if v.conforms(ty) {
        Ok(v)
    } else {
        Err(EvalError::TypeMismatch(format!(
            "function returns {ty}, got {}",
            v.kind()
        )))
    }
}

/// Counts loop steps against a cap.
#[derive(Debug, Clone, Copy)]
pub struct StepBudget {
    cap: u64,
    used: u64,
}

impl StepBudget {
    pub fn new(cap: u64) -> Self {
        StepBudget { cap, used: 0 }
    }

    pub fn tick(&mut self) -> Result<(), EvalError> {
        self.used += 1;
        if self.used > self.cap {
            Err(EvalError::IterationCap(self.cap))
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }
}

fn mismatch(op: &str, a: &Value, b: &Value) -> EvalError {
    EvalError::TypeMismatch(format!(
        "cannot apply {op} to {} and {}",
        a.kind(),
        b.kind()
    ))
}

pub(crate) fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    match op {
        BinOp::And | BinOp::Or => logic(op, a, b),
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = compare(&a, &b).map_err(|_| mismatch(op.symbol(), &a, &b))?;
            Ok(match ord {
                None => Value::Null,
                Some(o) => Value::Bool(match op {
                    BinOp::Eq => o == Ordering::Equal,
                    BinOp::Ne => o != Ordering::Equal,
                    BinOp::Lt => o == Ordering::Less,
                    BinOp::Le => o != Ordering::Greater,
                    BinOp::Gt => o == Ordering::Greater,
                    _ => o != Ordering::Less,
                }),
            })
        }
        BinOp::Concat => match (&a, &b) {
            (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
            (Value::Text(x), Value::Text(y)) => Ok(Value::Text(format!("{x}{y}"))),
            _ => Err(mismatch("||", &a, &b)),
        },
        _ => arith(op, a, b),
    }
}

fn arith(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    let sym = op.symbol();
    match (&a, &b) {
        (Value::Null, Value::Null | Value::Int(_) | Value::Float(_))
        | (Value::Int(_) | Value::Float(_), Value::Null) => Ok(Value::Null),
        (Value::Int(x), Value::Int(y)) => {
            let (x, y) = (*x, *y);
            let r = match op {
                BinOp::Add => x.checked_add(y),
                BinOp::Sub => x.checked_sub(y),
                BinOp::Mul => x.checked_mul(y),
                BinOp::Div | BinOp::Mod if y == 0 => return Err(EvalError::DivisionByZero),
                // truncates toward zero, like SQL
                BinOp::Div => x.checked_div(y),
                BinOp::Mod => x.checked_rem(y),
                _ => unreachable!("non-arithmetic operator"),
            };
            r.map(Value::Int)
                .ok_or_else(|| EvalError::Overflow(format!("{x} {sym} {y}")))
        }
        (Value::Float(x), Value::Float(y)) => {
            let (x, y) = (*x, *y);
            Ok(Value::Float(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div if y == 0.0 => return Err(EvalError::DivisionByZero),
                BinOp::Div => x / y,
                _ => return Err(mismatch(sym, &a, &b)),
            }))
        }
        _ => Err(mismatch(sym, &a, &b)),
    }
}

fn logic(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    let as_bool = |v: &Value| match v {
        Value::Bool(x) => Ok(Some(*x)),
        Value::Null => Ok(None),
        _ => Err(mismatch(op.symbol(), &a, &b)),
    };
    let (x, y) = (as_bool(&a)?, as_bool(&b)?);
    Ok(match (op, x, y) {
        (BinOp::And, Some(false), _) | (BinOp::And, _, Some(false)) => Value::Bool(false),
        (BinOp::And, Some(true), Some(true)) => Value::Bool(true),
        (BinOp::Or, Some(true), _) | (BinOp::Or, _, Some(true)) => Value::Bool(true),
        (BinOp::Or, Some(false), Some(false)) => Value::Bool(false),
        _ => Value::Null,
    })
}

/// SQL comparison: `Ok(None)` when the outcome is unknown because of NULL.
pub(crate) fn compare(a: &Value, b: &Value) -> Result<Option<Ordering>, ()> {
    match (a, b) {
        (Value::Null, _) | (_, Value::Null) => Ok(None),
        (Value::Int(x), Value::Int(y)) => Ok(Some(x.cmp(y))),
        (Value::Float(x), Value::Float(y)) => Ok(Some(x.total_cmp(y))),
        (Value::Text(x), Value::Text(y)) => Ok(Some(x.as_bytes().cmp(y.as_bytes()))),
        (Value::Bool(x), Value::Bool(y)) => Ok(Some(x.cmp(y))),
        (Value::Tuple(xs), Value::Tuple(ys)) if xs.len() == ys.len() => {
            for (x, y) in xs.iter().zip(ys) {
                match compare(x, y)? {
                    Some(Ordering::Equal) => continue,
                    other => return Ok(other),
                }
            }
            Ok(Some(Ordering::Equal))
        }
        _ => Err(()),
    }
}

fn unary(op: UnOp, v: Value) -> Result<Value, EvalError> {
    match (op, v) {
        (_, Value::Null) => Ok(Value::Null),
        (UnOp::Neg, Value::Int(i)) => i
            .checked_neg()
            .map(Value::Int)
            .ok_or_else(|| EvalError::Overflow(format!("-({i})"))),
        (UnOp::Neg, Value::Float(x)) => Ok(Value::Float(-x)),
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (op, v) => Err(EvalError::TypeMismatch(format!(
            "cannot apply {} to {}",
            if op == UnOp::Neg { "-" } else { "NOT" },
            v.kind()
        ))),
    }
}

fn int_arg(func: Builtin, v: &Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(EvalError::TypeMismatch(format!(
            "{} expects int, got {}",
            func.name(),
            other.kind()
        ))),
    }
}

fn text_arg(func: Builtin, v: &Value) -> Result<&str, EvalError> {
    match v {
        Value::Text(s) => Ok(s),
        other => Err(EvalError::TypeMismatch(format!(
            "{} expects text, got {}",
            func.name(),
            other.kind()
        ))),
    }
}

/// Characters at 1-based positions `[from, to)`, clipped to the string.
fn char_range(s: &str, from: i64, to: i64) -> String {
    let lo = from.max(1);
    if to <= lo {
        return String::new();
    }
    s.chars()
        .skip((lo - 1) as usize)
        .take((to - lo).min(i64::from(u32::MAX)) as usize)
        .collect()
}

fn builtin(func: Builtin, args: &[Value]) -> Result<Value, EvalError> {
    let (lo, hi) = func.arity();
    if args.len() < lo || args.len() > hi {
        return Err(EvalError::Arguments(format!(
            "{} takes {lo}..{hi} arguments",
            func.name()
        )));
    }
    if args.iter().any(Value::is_null) {
        return Ok(Value::Null);
    }
    let v = match func {
        Builtin::Sign => match &args[0] {
            Value::Int(i) => Value::Int(i.signum()),
            Value::Float(x) => Value::Float(if *x > 0.0 {
                1.0
            } else if *x < 0.0 {
                -1.0
            } else {
                0.0
            }),
            other => {
                return Err(EvalError::TypeMismatch(format!(
                    "sign expects a number, got {}",
                    other.kind()
                )))
            }
        },
        Builtin::Abs => match &args[0] {
            Value::Int(i) => Value::Int(
                i.checked_abs()
                    .ok_or_else(|| EvalError::Overflow(format!("abs({i})")))?,
            ),
            Value::Float(x) => Value::Float(x.abs()),
            other => {
                return Err(EvalError::TypeMismatch(format!(
                    "abs expects a number, got {}",
                    other.kind()
                )))
            }
        },
        Builtin::Length => Value::Int(text_arg(func, &args[0])?.chars().count() as i64),
        Builtin::Upper => Value::Text(text_arg(func, &args[0])?.to_uppercase()),
        Builtin::Lower => Value::Text(text_arg(func, &args[0])?.to_lowercase()),
        Builtin::Substr => {
            let s = text_arg(func, &args[0])?;
            let start = int_arg(func, &args[1])?;
            let end = match args.get(2) {
                None => i64::MAX,
                Some(len) => {
                    let len = int_arg(func, len)?;
                    if len < 0 {
                        return Err(EvalError::Arguments("negative substring length".into()));
                    }
                    start.saturating_add(len)
                }
            };
            Value::Text(char_range(s, start, end))
        }
        Builtin::Left | Builtin::Right => {
            let s = text_arg(func, &args[0])?;
            let n = int_arg(func, &args[1])?;
            let total = s.chars().count() as i64;
            let keep = if n >= 0 {
                n.min(total)
            } else {
                (total + n).max(0)
            };
            if func == Builtin::Left {
                Value::Text(char_range(s, 1, keep + 1))
            } else {
                Value::Text(char_range(s, total - keep + 1, total + 1))
            }
        }
        Builtin::Random | Builtin::Coalesce => unreachable!("handled before argument evaluation"),
    };
    Ok(v)
}

pub(crate) fn cast(v: Value, ty: TypeTag) -> Result<Value, EvalError> {
    let fail = |v: &Value| EvalError::InvalidCast(format!("{v} to {ty}"));
    Ok(match (&v, ty) {
        (Value::Null, _) => Value::Null,
        (Value::Int(_), TypeTag::Int)
        | (Value::Float(_), TypeTag::Float)
        | (Value::Text(_), TypeTag::Text)
        | (Value::Bool(_), TypeTag::Bool) => v,
        (Value::Tuple(_), TypeTag::Coord) if v.conforms(TypeTag::Coord) => v,
        (Value::Int(i), TypeTag::Float) => Value::Float(*i as f64),
        (Value::Float(x), TypeTag::Int) => {
            let r = x.round();
            if !(-9.223_372_036_854_776e18..9.223_372_036_854_776e18).contains(&r) {
                return Err(EvalError::Overflow(format!("CAST({x} AS int)")));
            }
            Value::Int(r as i64)
        }
        (Value::Int(i), TypeTag::Text) => Value::Text(i.to_string()),
        (Value::Float(x), TypeTag::Text) => Value::Text(x.to_string()),
        (Value::Bool(b), TypeTag::Text) => Value::Text(b.to_string()),
        (Value::Tuple(_), TypeTag::Text) => Value::Text(v.to_string()),
        (Value::Text(s), t) => t.parse_literal(s).map_err(|_| fail(&v))?,
        (Value::Int(i), TypeTag::Bool) => Value::Bool(*i != 0),
        _ => return Err(fail(&v)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(op: BinOp, a: Value, c: Value) -> Result<Value, EvalError> {
        binary(op, a, c)
    }

    #[test]
    fn integer_division_truncates_toward_zero() {
        assert_eq!(
            b(BinOp::Div, Value::Int(-7), Value::Int(2)),
            Ok(Value::Int(-3))
        );
        assert_eq!(
            b(BinOp::Mod, Value::Int(-7), Value::Int(2)),
            Ok(Value::Int(-1))
        );
        assert_eq!(
            b(BinOp::Div, Value::Int(1), Value::Int(0)),
            Err(EvalError::DivisionByZero)
        );
    }

    #[test]
    fn integer_overflow_is_an_error() {
        assert!(matches!(
            b(BinOp::Add, Value::Int(i64::MAX), Value::Int(1)),
            Err(EvalError::Overflow(_))
        ));
        assert!(matches!(
            b(BinOp::Div, Value::Int(i64::MIN), Value::Int(-1)),
            Err(EvalError::Overflow(_))
        ));
    }

    #[test]
    fn mixed_numeric_operands_need_a_cast() {
        assert!(matches!(
            b(BinOp::Add, Value::Int(1), Value::Float(1.0)),
            Err(EvalError::TypeMismatch(_))
        ));
        assert!(matches!(
            b(BinOp::Lt, Value::Int(1), Value::Float(1.0)),
            Err(EvalError::TypeMismatch(_))
        ));
    }

    #[test]
    fn three_valued_logic() {
        let n = Value::Null;
        assert_eq!(
            b(BinOp::And, n.clone(), Value::Bool(false)),
            Ok(Value::Bool(false))
        );
        assert_eq!(
            b(BinOp::Or, n.clone(), Value::Bool(true)),
            Ok(Value::Bool(true))
        );
        assert_eq!(b(BinOp::Or, n.clone(), Value::Bool(false)), Ok(Value::Null));
        assert_eq!(b(BinOp::Eq, n, Value::Int(1)), Ok(Value::Null));
    }

    #[test]
    fn text_comparison_is_bytewise() {
        assert_eq!(
            b(BinOp::Lt, Value::text("B"), Value::text("a")),
            Ok(Value::Bool(true))
        );
        assert_eq!(
            b(BinOp::Lt, Value::text("ab"), Value::text("b")),
            Ok(Value::Bool(true))
        );
    }

    #[test]
    fn string_builtins_follow_postgres() {
        let t = |s: &str| Value::text(s);
        assert_eq!(
            builtin(Builtin::Substr, &[t("hello"), Value::Int(2)]),
            Ok(t("ello"))
        );
        assert_eq!(
            builtin(Builtin::Substr, &[t("hello"), Value::Int(0), Value::Int(3)]),
            Ok(t("he"))
        );
        assert_eq!(
            builtin(Builtin::Substr, &[t("a"), Value::Int(2)]),
            Ok(t(""))
        );
        assert_eq!(
            builtin(Builtin::Left, &[t("hello"), Value::Int(2)]),
            Ok(t("he"))
        );
        assert_eq!(
            builtin(Builtin::Left, &[t("hello"), Value::Int(-2)]),
            Ok(t("hel"))
        );
        assert_eq!(
            builtin(Builtin::Right, &[t("hello"), Value::Int(2)]),
            Ok(t("lo"))
        );
        assert_eq!(
            builtin(Builtin::Right, &[t("hello"), Value::Int(-4)]),
            Ok(t("o"))
        );
        assert_eq!(builtin(Builtin::Length, &[t("")]), Ok(Value::Int(0)));
    }

    #[test]
    fn sign_and_casts() {
        assert_eq!(
            builtin(Builtin::Sign, &[Value::Int(-4)]),
            Ok(Value::Int(-1))
        );
        assert_eq!(cast(Value::Float(2.5), TypeTag::Int), Ok(Value::Int(3)));
        assert_eq!(cast(Value::Float(-2.5), TypeTag::Int), Ok(Value::Int(-3)));
        assert_eq!(cast(Value::text(" 17 "), TypeTag::Int), Ok(Value::Int(17)));
        assert!(cast(Value::text("x"), TypeTag::Int).is_err());
    }
}
