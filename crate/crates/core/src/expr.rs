//! Scalar expressions shared by every intermediate form.
//!
//! The frontend produces them, SSA renames their variables, ANF and the UDF
//! stage bind them with `let`, and SQL generation renders them per dialect.

use std::fmt;

use crate::value::{format_float, quote_text, TypeTag, Value};

/// Occurrence-based identity of an embedded query (`Q1`, `Q2`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryId(pub u32);

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Concat => "||",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "AND",
            BinOp::Or => "OR",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Concat => 6,
            BinOp::Add | BinOp::Sub => 7,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

/// Built-in scalar functions of the supported subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Random,
    Sign,
    Abs,
    Length,
    Substr,
    Left,
    Right,
    Upper,
    Lower,
    Coalesce,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name.to_ascii_lowercase().as_str() {
            "random" => Builtin::Random,
            "sign" => Builtin::Sign,
            "abs" => Builtin::Abs,
            "length" => Builtin::Length,
            "substr" | "substring" => Builtin::Substr,
            "left" => Builtin::Left,
            "right" => Builtin::Right,
            "upper" => Builtin::Upper,
            "lower" => Builtin::Lower,
            "coalesce" => Builtin::Coalesce,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Random => "random",
            Builtin::Sign => "sign",
            Builtin::Abs => "abs",
            Builtin::Length => "length",
            Builtin::Substr => "substr",
            Builtin::Left => "left",
            Builtin::Right => "right",
            Builtin::Upper => "upper",
            Builtin::Lower => "lower",
            Builtin::Coalesce => "coalesce",
        }
    }

    /// Accepted argument counts (inclusive range).
    pub fn arity(self) -> (usize, usize) {
        match self {
            Builtin::Random => (0, 0),
            Builtin::Sign | Builtin::Abs | Builtin::Length | Builtin::Upper | Builtin::Lower => {
                (1, 1)
            }
            Builtin::Substr => (2, 3),
            Builtin::Left | Builtin::Right => (2, 2),
            Builtin::Coalesce => (1, usize::MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Var(String),
    /// Qualified column read such as `r.step_1`.
    Column {
        table: String,
        name: String,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        arg: Box<Expr>,
    },
    Builtin {
        func: Builtin,
        args: Vec<Expr>,
    },
    /// Embedded query; `args` instantiate the template's free variables in order.
    Query {
        id: QueryId,
        args: Vec<Expr>,
    },
    Cast {
        expr: Box<Expr>,
        ty: TypeTag,
    },
    Tuple(Vec<Expr>),
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
    /// Application of a local (letrec-bound) function outside tail position.
    /// Never produced by the compiler; exists so the tail-position checker can
    /// report it.
    Apply {
        func: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn int(i: i64) -> Expr {
        Expr::Lit(Value::Int(i))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn column(table: impl Into<String>, name: impl Into<String>) -> Expr {
        Expr::Column {
            table: table.into(),
            name: name.into(),
        }
    }

    /// Direct subexpressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Column { .. } => vec![],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Unary { arg, .. } => vec![arg],
            Expr::Cast { expr, .. } | Expr::IsNull { expr, .. } => vec![expr],
            Expr::Builtin { args, .. }
            | Expr::Query { args, .. }
            | Expr::Tuple(args)
            | Expr::Apply { args, .. } => args.iter().collect(),
        }
    }

    /// Visits every node in evaluation (left-to-right, pre-order) order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Variable names read by this expression, in first-occurrence order, without duplicates.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    /// Rebuilds the expression, replacing every `Var` through `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(&str) -> Expr) -> Expr {
        self.rebuild(&mut |e| match e {
            Expr::Var(v) => Some(f(v)),
            _ => None,
        })
    }

    /// Top-down rebuild: where `f` returns a replacement, that subtree is not descended into.
    pub fn rebuild(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(replaced) = f(self) {
            return replaced;
        }
        let mut go = |e: &Expr| e.rebuild(f);
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Column { .. } => self.clone(),
            Expr::Binary { op, lhs, rhs } => {
                let l = go(lhs);
                let r = go(rhs);
                Expr::Binary {
                    op: *op,
                    lhs: Box::new(l),
                    rhs: Box::new(r),
                }
            }
            Expr::Unary { op, arg } => Expr::Unary {
                op: *op,
                arg: Box::new(go(arg)),
            },
            Expr::Builtin { func, args } => Expr::Builtin {
                func: *func,
                args: args.iter().map(go).collect(),
            },
            Expr::Query { id, args } => Expr::Query {
                id: *id,
                args: args.iter().map(go).collect(),
            },
            Expr::Cast { expr, ty } => Expr::Cast {
                expr: Box::new(go(expr)),
                ty: *ty,
            },
            Expr::Tuple(items) => Expr::Tuple(items.iter().map(go).collect()),
            Expr::IsNull { expr, negated } => Expr::IsNull {
                expr: Box::new(go(expr)),
                negated: *negated,
            },
            Expr::Apply { func, args } => Expr::Apply {
                func: func.clone(),
                args: args.iter().map(go).collect(),
            },
        }
    }

    /// True when evaluation touches neither the query oracle nor the random stream.
    pub fn is_pure(&self) -> bool {
        let mut pure = true;
        self.walk(&mut |e| {
            if matches!(
                e,
                Expr::Query { .. }
                    | Expr::Apply { .. }
                    | Expr::Builtin {
                        func: Builtin::Random,
                        ..
                    }
            ) {
                pure = false;
            }
        });
        pure
    }

    /// A variable or literal: the operands copy propagation may forward.
    pub fn is_trivial(&self) -> bool {
        matches!(self, Expr::Var(_) | Expr::Lit(_))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Unary { op: UnOp::Not, .. } => 3,
            Expr::IsNull { .. } => 4,
            Expr::Unary { op: UnOp::Neg, .. } => 9,
            Expr::Lit(Value::Int(i)) if *i < 0 => 9,
            Expr::Lit(Value::Float(x)) if x.is_sign_negative() => 9,
            _ => 10,
        }
    }
}

/// Controls how leaves of an expression are spelled when printing.
pub trait ExprStyle {
    fn var(&self, name: &str) -> String {
        name.to_string()
    }

    fn column(&self, table: &str, name: &str) -> String {
        format!("{table}.{name}")
    }

    fn literal(&self, value: &Value) -> String {
        literal_source(value)
    }

    fn builtin(&self, func: Builtin, args: Vec<String>) -> String {
        format!("{}({})", func.name(), args.join(", "))
    }

    fn cast(&self, inner: String, ty: TypeTag) -> String {
        format!("CAST({inner} AS {ty})")
    }

    fn tuple(&self, items: Vec<String>) -> String {
        format!("({})", items.join(", "))
    }

    /// `args` are already rendered in this style.
    fn query(&self, id: QueryId, args: Vec<String>) -> String {
        format!("{id}[{}]", args.join(", "))
    }
}

/// Literal spelling used in source code and dumps.
pub fn literal_source(value: &Value) -> String {
    match value {
        Value::Null => "NULL".into(),
        Value::Bool(true) => "true".into(),
        Value::Bool(false) => "false".into(),
        Value::Int(i) => i.to_string(),
        Value::Float(x) => format_float(*x),
        Value::Text(s) => quote_text(s),
        Value::Tuple(items) => format!(
            "({})",
            items
                .iter()
                .map(literal_source)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

/// Dump style used by the SSA/ANF/UDF textual forms: queries print as `Q1[args]`.
pub struct DumpStyle;

impl ExprStyle for DumpStyle {}

pub fn render<S: ExprStyle + ?Sized>(expr: &Expr, style: &S) -> String {
    render_prec(expr, style, 0)
}

fn render_prec<S: ExprStyle + ?Sized>(expr: &Expr, style: &S, min_prec: u8) -> String {
    let own = expr.precedence();
    let text = match expr {
        Expr::Lit(v) => style.literal(v),
        Expr::Var(v) => style.var(v),
        Expr::Column { table, name } => style.column(table, name),
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            // comparisons are non-associative; everything else is left-associative
            let left_min = if p == 5 { p + 1 } else { p };
            format!(
                "{} {} {}",
                render_prec(lhs, style, left_min),
                op.symbol(),
                render_prec(rhs, style, p + 1)
            )
        }
        Expr::Unary { op: UnOp::Neg, arg } => format!("-{}", render_prec(arg, style, 10)),
        Expr::Unary { op: UnOp::Not, arg } => format!("NOT {}", render_prec(arg, style, 3)),
        Expr::IsNull { expr, negated } => format!(
            "{} IS {}NULL",
            render_prec(expr, style, 5),
            if *negated { "NOT " } else { "" }
        ),
        Expr::Builtin { func, args } => style.builtin(
            *func,
            args.iter().map(|a| render_prec(a, style, 0)).collect(),
        ),
        Expr::Query { id, args } => {
            style.query(*id, args.iter().map(|a| render_prec(a, style, 0)).collect())
        }
        Expr::Cast { expr, ty } => style.cast(render_prec(expr, style, 0), *ty),
        Expr::Tuple(items) => style.tuple(items.iter().map(|a| render_prec(a, style, 0)).collect()),
        Expr::Apply { func, args } => format!(
            "{func}({})",
            args.iter()
                .map(|a| render_prec(a, style, 0))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    if own < min_prec {
        format!("({text})")
    } else {
        text
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, &DumpStyle))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_with_minimal_parentheses() {
        let e = Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Add, Expr::var("a"), Expr::var("b")),
            Expr::var("c"),
        );
        assert_eq!(e.to_string(), "(a + b) * c");
        let e = Expr::binary(
            BinOp::Sub,
            Expr::var("a"),
            Expr::binary(BinOp::Sub, Expr::var("b"), Expr::var("c")),
        );
        assert_eq!(e.to_string(), "a - (b - c)");
        let e = Expr::binary(
            BinOp::Or,
            Expr::binary(BinOp::Ge, Expr::var("r"), Expr::var("w")),
            Expr::binary(BinOp::Le, Expr::var("r"), Expr::var("l")),
        );
        assert_eq!(e.to_string(), "r >= w OR r <= l");
    }

    #[test]
    fn free_vars_in_first_occurrence_order() {
        let e = Expr::Query {
            id: QueryId(2),
            args: vec![Expr::var("b"), Expr::var("a"), Expr::var("b")],
        };
        assert_eq!(e.free_vars(), vec!["b".to_string(), "a".to_string()]);
        assert_eq!(e.to_string(), "Q2[b, a, b]");
        assert!(!e.is_pure());
    }
}
