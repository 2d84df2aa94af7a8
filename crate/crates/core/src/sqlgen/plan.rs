//! Dialect-level SQL trees. Let chains take their dialect's shape here
//! (LATERAL joins or nested derived tables) and are evaluated in that shape,
//! so the two encodings can be checked against each other.

use std::collections::HashMap;

use crate::error::EvalError;
use crate::eval::{eval, truthy, Scope};
use crate::expr::Expr;
use crate::runtime::QueryOracle;
use crate::sqlgen::adapt::RowExpr;
use crate::sqlgen::Dialect;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum SqlNode {
    Case {
        arms: Vec<(Expr, SqlNode)>,
        otherwise: Option<Box<SqlNode>>,
    },
    CallRow {
        tag: Option<i64>,
        args: Vec<Expr>,
    },
    BaseRow(Expr),
    /// Scalar subquery `(SELECT value FROM from)`.
    Select {
        value: Box<SqlNode>,
        from: FromClause,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub alias: String,
    pub var: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FromClause {
    /// `(SELECT e1) AS _0(v1) LEFT JOIN LATERAL (SELECT e2) AS _1(v2) ON true …`
    Lateral(Vec<Binding>),
    /// Outermost layer of `(SELECT _k.*, en AS vn FROM (… (SELECT e1 AS v1) AS _0 …) AS _k)`.
    Onion(Layer),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub binding: Binding,
    pub inner: Option<Box<Layer>>,
}

impl Layer {
    pub fn depth(&self) -> usize {
        1 + self.inner.as_ref().map_or(0, |i| i.depth())
    }
}

/// Lowers an adapted body; derived-table aliases are numbered `_0, _1, …` from `next_alias`.
pub fn lower(e: &RowExpr, dialect: Dialect, next_alias: &mut usize) -> SqlNode {
    match e {
        RowExpr::Case { arms, otherwise } => SqlNode::Case {
            arms: arms
                .iter()
                .map(|(g, a)| (g.clone(), lower(a, dialect, next_alias)))
                .collect(),
            otherwise: otherwise
                .as_ref()
                .map(|o| Box::new(lower(o, dialect, next_alias))),
        },
        RowExpr::CallRow { tag, args } => SqlNode::CallRow {
            tag: *tag,
            args: args.clone(),
        },
        RowExpr::BaseRow(v) => SqlNode::BaseRow(v.clone()),
        RowExpr::LetChain { bindings, body } => {
            let bindings: Vec<Binding> = bindings
                .iter()
                .map(|(var, expr)| {
                    let alias = format!("_{next_alias}");
                    *next_alias += 1;
                    Binding {
                        alias,
                        var: var.clone(),
                        expr: expr.clone(),
                    }
                })
                .collect();
            let from = match dialect {
                Dialect::Postgres => FromClause::Lateral(bindings),
                Dialect::Sqlite => {
                    let mut layer: Option<Layer> = None;
                    for binding in bindings {
                        layer = Some(Layer {
                            binding,
                            inner: layer.map(Box::new),
                        });
                    }
                    FromClause::Onion(layer.expect("let chains are non-empty"))
                }
            };
            SqlNode::Select {
                value: Box::new(lower(body, dialect, next_alias)),
                from,
            }
        }
    }
}

/// A produced row of table `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub call: bool,
    /// One value per `run` argument column; all NULL in a base-case row.
    pub args: Vec<Value>,
    /// NULL in a call row.
    pub result: Value,
}

impl RunRow {
    pub fn text_payload(&self) -> usize {
        self.args.iter().map(Value::text_payload).sum::<usize>() + self.result.text_payload()
    }

    /// Checks the row's shape against `width` argument columns.
    pub fn validate(&self, width: usize) -> Result<(), EvalError> {
        if self.args.len() != width {
            return Err(EvalError::MalformedRow(format!(
                "{} argument columns, expected {width}",
                self.args.len()
            )));
        }
        if self.call && !self.result.is_null() {
            return Err(EvalError::MalformedRow("call row carries a result".into()));
        }
        if !self.call && self.args.iter().any(|a| !a.is_null()) {
            return Err(EvalError::MalformedRow("base row carries arguments".into()));
        }
        Ok(())
    }
}

/// Names visible while evaluating a body: columns of `r` plus let-bound variables.
pub(crate) struct RowScope<'a> {
    pub r: &'a HashMap<String, Value>,
    pub vars: HashMap<String, Value>,
}

impl Scope for RowScope<'_> {
    fn get(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }

    fn column(&self, table: &str, name: &str) -> Option<&Value> {
        (table == "r").then(|| self.r.get(name)).flatten()
    }
}

pub(crate) fn call_row(
    tag: Option<i64>,
    args: &[Expr],
    scope: &RowScope,
    oracle: &mut dyn QueryOracle,
) -> Result<RunRow, EvalError> {
    let mut values: Vec<Value> = tag.map(Value::Int).into_iter().collect();
    for a in args {
        values.push(eval(a, scope, oracle)?);
    }
    Ok(RunRow {
        call: true,
        args: values,
        result: Value::Null,
    })
}

pub(crate) fn base_row(
    v: &Expr,
    width: usize,
    scope: &RowScope,
    oracle: &mut dyn QueryOracle,
) -> Result<RunRow, EvalError> {
    Ok(RunRow {
        call: false,
        args: vec![Value::Null; width],
        result: eval(v, scope, oracle)?,
    })
}

pub(crate) fn pick<'e, T>(
    arms: &'e [(Expr, T)],
    otherwise: Option<&'e T>,
    scope: &RowScope,
    oracle: &mut dyn QueryOracle,
) -> Result<&'e T, EvalError> {
    for (g, arm) in arms {
        if truthy(&eval(g, scope, oracle)?)? {
            return Ok(arm);
        }
    }
    // CASE without ELSE yields NULL, which is no row at all
    otherwise.ok_or_else(|| EvalError::Dispatch("no CASE arm matched".into()))
}

/// Evaluates one step of the CTE: the body for the current row.
pub(crate) fn eval_node(
    n: &SqlNode,
    width: usize,
    scope: &mut RowScope,
    oracle: &mut dyn QueryOracle,
) -> Result<RunRow, EvalError> {
    match n {
        SqlNode::CallRow { tag, args } => call_row(*tag, args, scope, oracle),
        SqlNode::BaseRow(v) => base_row(v, width, scope, oracle),
        SqlNode::Case { arms, otherwise } => {
            let arm = pick(arms, otherwise.as_deref(), scope, oracle)?;
            eval_node(arm, width, scope, oracle)
        }
        SqlNode::Select { value, from } => {
            let saved = scope.vars.clone();
            match from {
                FromClause::Lateral(bindings) => {
                    // each joined single-row table sees the ones to its left
                    for b in bindings {
                        let v = eval(&b.expr, scope, oracle)?;
                        scope.vars.insert(b.var.clone(), v);
                    }
                }
                FromClause::Onion(layer) => {
                    let row = eval_layer(layer, scope, oracle)?;
                    scope.vars.extend(row);
                }
            }
            let out = eval_node(value, width, scope, oracle);
            scope.vars = saved;
            out
        }
    }
}

/// The single row of a derived-table layer: the inner layer's columns plus this layer's binding.
fn eval_layer(
    layer: &Layer,
    scope: &mut RowScope,
    oracle: &mut dyn QueryOracle,
) -> Result<Vec<(String, Value)>, EvalError> {
    let mut row = match &layer.inner {
        Some(inner) => eval_layer(inner, scope, oracle)?,
        None => Vec::new(),
    };
    let saved = scope.vars.clone();
    scope.vars.extend(row.iter().cloned());
    let v = eval(&layer.binding.expr, scope, oracle);
    scope.vars = saved;
    row.push((layer.binding.var.clone(), v?));
    Ok(row)
}
