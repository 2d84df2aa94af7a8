//! SQL emission: the adapted worker body spliced into a recursive CTE that
//! tabulates the worker's calls in a table `run("call?", args…, result)`.

mod adapt;
mod plan;
mod render;

use std::fmt;
use std::str::FromStr;

use crate::error::EmitError;
use crate::expr::Expr;
use crate::frontend::{Param, QueryTemplate};
use crate::udf::{UdfExpr, UdfProgram};
use crate::value::{TypeTag, Value};

pub use adapt::{adapt_body, AdaptedBody, RowExpr};
pub(crate) use plan::{base_row, call_row, eval_node, pick, RowScope};
pub use plan::{lower, Binding, FromClause, Layer, RunRow, SqlNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    Postgres,
    Sqlite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CteMode {
    /// Standard `WITH RECURSIVE`: the whole trace of calls is retained.
    Recursive,
    /// `WITH ITERATE`: only the most recent row is kept.
    Iterate,
}

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Dialect::Postgres => "postgres",
            Dialect::Sqlite => "sqlite",
        }
    }
}

impl CteMode {
    pub fn name(self) -> &'static str {
        match self {
            CteMode::Recursive => "recursive",
            CteMode::Iterate => "iterate",
        }
    }
}

impl FromStr for Dialect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "postgres" => Ok(Dialect::Postgres),
            "sqlite" => Ok(Dialect::Sqlite),
            _ => Err(format!(
                "unknown dialect {s:?} (expected postgres or sqlite)"
            )),
        }
    }
}

impl FromStr for CteMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "recursive" => Ok(CteMode::Recursive),
            "iterate" => Ok(CteMode::Iterate),
            _ => Err(format!(
                "unknown mode {s:?} (expected recursive or iterate)"
            )),
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for CteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything needed to render or simulate an emitted query.
#[derive(Debug, Clone, PartialEq)]
pub struct CtePlan {
    /// The wrapper function's parameters (free in `seed`).
    pub params: Vec<Param>,
    /// Argument columns of `run`.
    pub columns: Vec<Param>,
    /// The seed row's argument values.
    pub seed: Vec<Expr>,
    pub body: SqlNode,
    pub result_type: TypeTag,
    pub queries: Vec<QueryTemplate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqlQuery {
    pub text: String,
    pub dialect: Dialect,
    pub mode: CteMode,
    pub result_type: TypeTag,
    pub plan: CtePlan,
}

impl SqlQuery {
    /// Substitutes argument values for the parameters, as a caller would at an inlined call site.
    pub fn bind(&self, args: &[Value]) -> SqlQuery {
        let mut plan = self.plan.clone();
        let names: Vec<&str> = plan.params.iter().map(|p| p.name.as_str()).collect();
        plan.seed = plan
            .seed
            .iter()
            .map(|e| {
                e.map_vars(&mut |v| match names.iter().position(|n| *n == v) {
                    Some(i) => Expr::Lit(args[i].clone()),
                    None => Expr::var(v),
                })
            })
            .collect();
        plan.params.clear();
        let text = render::render_cte(&plan, self.dialect, self.mode, false);
        SqlQuery {
            text,
            plan,
            ..self.clone()
        }
    }
}

/// Builds the plan for `u` in `dialect`.
pub fn plan_cte(u: &UdfProgram, dialect: Dialect) -> CtePlan {
    let adapted = adapt_body(u);
    let mut columns: Vec<Param> = u
        .dispatch
        .iter()
        .map(|d| Param::new(d.clone(), TypeTag::Int))
        .collect();
    columns.extend(u.slots.iter().cloned());
    let UdfExpr::Call { tag, slots } = &u.initial else {
        unreachable!("the wrapper always calls the worker")
    };
    let mut seed: Vec<Expr> = tag.iter().map(|t| Expr::int(*t)).collect();
    seed.extend(u.slots.iter().zip(slots).map(|(s, e)| match e {
        Expr::Lit(Value::Null) => Expr::Cast {
            expr: Box::new(e.clone()),
            ty: s.ty,
        },
        _ => e.clone(),
    }));
    let mut aliases = 0;
    CtePlan {
        params: u.params.clone(),
        columns,
        seed,
        body: lower(&adapted.expr, dialect, &mut aliases),
        result_type: u.return_type,
        queries: u.queries.clone(),
    }
}

/// Emits the recursive CTE evaluating `u`. The text has no trailing semicolon
/// and refers to the function's parameters by name.
pub fn emit_cte(u: &UdfProgram, dialect: Dialect, mode: CteMode) -> Result<SqlQuery, EmitError> {
    if dialect == Dialect::Sqlite && mode == CteMode::Iterate {
        return Err(EmitError::UnsupportedCombination {
            dialect: dialect.name(),
            mode: mode.name(),
        });
    }
    let plan = plan_cte(u, dialect);
    let text = render::render_cte(&plan, dialect, mode, false);
    Ok(SqlQuery {
        text,
        dialect,
        mode,
        result_type: u.return_type,
        plan,
    })
}

/// The query as a parenthesized scalar subquery whose parameters are `:name` placeholders.
pub fn wrap_inline(q: &SqlQuery) -> String {
    format!("({})", render::render_cte(&q.plan, q.dialect, q.mode, true))
}

/// Renders let `bindings` around the SQL text `body`: a LATERAL join chain
/// on postgres, nested derived tables on sqlite.
pub fn emit_let_chain(
    bindings: &[(String, Expr)],
    body: &str,
    dialect: Dialect,
    queries: &[QueryTemplate],
) -> String {
    render::render_let_chain(bindings, body, dialect, queries)
}
