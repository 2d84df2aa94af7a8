//! Text rendering of CTE plans.

use std::collections::HashSet;

use crate::expr::{render, Builtin, Expr, ExprStyle, QueryId};
use crate::frontend::QueryTemplate;
use crate::sqlgen::plan::{Binding, FromClause, Layer, SqlNode};
use crate::sqlgen::{CteMode, CtePlan, Dialect};
use crate::value::{format_float, quote_text, TypeTag, Value};

pub(crate) struct SqlStyle<'a> {
    pub dialect: Dialect,
    pub queries: &'a [QueryTemplate],
    /// Variables rendered as `:name` placeholders.
    pub placeholders: HashSet<String>,
}

pub(crate) fn type_name(dialect: Dialect, ty: TypeTag) -> &'static str {
    match (dialect, ty) {
        (_, TypeTag::Text) => "text",
        (_, TypeTag::Coord) => "coord",
        (Dialect::Postgres, TypeTag::Int) => "int",
        (Dialect::Postgres, TypeTag::Float) => "float",
        (Dialect::Postgres, TypeTag::Bool) => "boolean",
        (Dialect::Sqlite, TypeTag::Int | TypeTag::Bool) => "integer",
        (Dialect::Sqlite, TypeTag::Float) => "real",
    }
}

pub(crate) fn ident(name: &str) -> String {
    if name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

/// Whether a rendered argument can be spliced into query text without parentheses.
fn is_atomic(s: &str) -> bool {
    let b = s.as_bytes();
    let word = |c: u8| c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || c == b':';
    if !b.is_empty() && b.iter().all(|&c| word(c)) {
        return true;
    }
    // one complete string literal
    if b.len() >= 2 && b[0] == b'\'' && b[b.len() - 1] == b'\'' {
        let inner = &s[1..s.len() - 1];
        return !inner.replace("''", "").contains('\'');
    }
    false
}

impl ExprStyle for SqlStyle<'_> {
    fn var(&self, name: &str) -> String {
        if self.placeholders.contains(name) {
            format!(":{name}")
        } else {
            ident(name)
        }
    }

    fn column(&self, table: &str, name: &str) -> String {
        format!("{table}.{}", ident(name))
    }

    fn literal(&self, value: &Value) -> String {
        match value {
            Value::Null => "NULL".into(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Float(x) => format_float(*x),
            Value::Text(s) => quote_text(s),
            Value::Tuple(items) => self.tuple(items.iter().map(|v| self.literal(v)).collect()),
        }
    }

    fn builtin(&self, func: Builtin, args: Vec<String>) -> String {
        match (self.dialect, func) {
            // map sqlite's 64-bit random integer onto [0, 1)
            (Dialect::Sqlite, Builtin::Random) => {
                "(random() / 18446744073709551616.0 + 0.5)".into()
            }
            (Dialect::Sqlite, Builtin::Left) => format!("substr({}, 1, {})", args[0], args[1]),
            (Dialect::Sqlite, Builtin::Right) => format!("substr({}, -({}))", args[0], args[1]),
            _ => format!("{}({})", func.name(), args.join(", ")),
        }
    }

    fn cast(&self, inner: String, ty: TypeTag) -> String {
        format!("CAST({inner} AS {})", type_name(self.dialect, ty))
    }

    fn tuple(&self, items: Vec<String>) -> String {
        match self.dialect {
            Dialect::Postgres => format!("ROW({})", items.join(", ")),
            Dialect::Sqlite => format!("({})", items.join(", ")),
        }
    }

    fn query(&self, id: QueryId, args: Vec<String>) -> String {
        let q = self
            .queries
            .iter()
            .find(|q| q.id == id)
            .expect("query template for every id");
        let text = q.instantiate(|i| {
            if is_atomic(&args[i]) {
                args[i].clone()
            } else {
                format!("({})", args[i])
            }
        });
        format!("({})", squeeze(&text))
    }
}

/// Collapses whitespace runs outside string literals to single spaces.
fn squeeze(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut quoted = false;
    let mut gap = false;
    for c in text.trim().chars() {
        if !quoted && c.is_whitespace() {
            gap = true;
            continue;
        }
        if gap {
            out.push(' ');
            gap = false;
        }
        if c == '\'' {
            quoted = !quoted;
        }
        out.push(c);
    }
    out
}

impl SqlStyle<'_> {
    fn expr(&self, e: &Expr) -> String {
        render(e, self)
    }

    /// Run rows use the dialect's row-value syntax, like tuples.
    fn row(&self, items: Vec<String>) -> String {
        self.tuple(items)
    }

    /// Lines of a node, relative to the node's own column.
    pub fn node(&self, n: &SqlNode) -> Vec<String> {
        match n {
            SqlNode::CallRow { tag, args } => {
                let mut inner: Vec<String> = tag.iter().map(|t| t.to_string()).collect();
                inner.extend(args.iter().map(|a| self.expr(a)));
                vec![self.row(vec!["true".into(), self.row(inner), "NULL".into()])]
            }
            SqlNode::BaseRow(v) => {
                vec![self.row(vec!["false".into(), "NULL".into(), self.expr(v)])]
            }
            SqlNode::Case { arms, otherwise } => {
                let mut out = vec!["CASE".to_string()];
                let mut arm = |head: String, body: Vec<String>| {
                    if let [single] = body.as_slice() {
                        out.push(format!("  {head} {single}"));
                    } else {
                        out.push(format!("  {head}"));
                        out.extend(body.into_iter().map(|l| format!("    {l}")));
                    }
                };
                for (g, a) in arms {
                    arm(format!("WHEN {} THEN", self.expr(g)), self.node(a));
                }
                if let Some(o) = otherwise {
                    arm("ELSE".into(), self.node(o));
                }
                out.push("END".into());
                out
            }
            SqlNode::Select { value, from } => self.select(self.node(value), from),
        }
    }

    /// `(SELECT value FROM …)` as a scalar subquery.
    pub fn select(&self, value: Vec<String>, from: &FromClause) -> Vec<String> {
        let mut out = vec!["(SELECT".to_string()];
        out.extend(value.into_iter().map(|l| format!("   {l}")));
        let mut from_lines = match from {
            FromClause::Lateral(bindings) => self.lateral(bindings),
            FromClause::Onion(layer) => self.onion(layer),
        };
        from_lines[0] = format!(" FROM {}", from_lines[0]);
        for l in from_lines.iter_mut().skip(1) {
            *l = format!("      {l}");
        }
        out.extend(from_lines);
        out.last_mut().expect("non-empty").push(')');
        out
    }

    fn lateral(&self, bindings: &[Binding]) -> Vec<String> {
        bindings
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let table = format!(
                    "(SELECT {}) AS {}({})",
                    self.expr(&b.expr),
                    b.alias,
                    ident(&b.var)
                );
                if i == 0 {
                    table
                } else {
                    format!("LEFT JOIN LATERAL {table} ON true")
                }
            })
            .collect()
    }

    fn onion(&self, layer: &Layer) -> Vec<String> {
        let mut lines = Vec::new();
        let mut closers = Vec::new();
        let mut cur = Some(layer);
        while let Some(l) = cur {
            let b = &l.binding;
            match &l.inner {
                Some(inner) => {
                    lines.push(format!(
                        "(SELECT {}.*, {} AS {} FROM",
                        inner.binding.alias,
                        self.expr(&b.expr),
                        ident(&b.var)
                    ));
                    closers.push(format!(") AS {}", b.alias));
                }
                None => lines.push(format!(
                    "(SELECT {} AS {}) AS {}",
                    self.expr(&b.expr),
                    ident(&b.var),
                    b.alias
                )),
            }
            cur = l.inner.as_deref();
        }
        let last = lines.last_mut().expect("at least one layer");
        for c in closers.iter().rev() {
            last.push_str(c);
        }
        lines
    }
}

fn keyword(mode: CteMode) -> &'static str {
    match mode {
        CteMode::Recursive => "WITH RECURSIVE",
        CteMode::Iterate => "WITH ITERATE",
    }
}

/// Renders the whole CTE; `placeholders` switches parameter references to `:name`.
pub(crate) fn render_cte(
    plan: &CtePlan,
    dialect: Dialect,
    mode: CteMode,
    placeholders: bool,
) -> String {
    let style = SqlStyle {
        dialect,
        queries: &plan.queries,
        placeholders: if placeholders {
            plan.params.iter().map(|p| p.name.clone()).collect()
        } else {
            HashSet::new()
        },
    };
    let mut cols = vec!["\"call?\"".to_string()];
    cols.extend(plan.columns.iter().map(|c| ident(&c.name)));
    cols.push("result".into());
    let col_list = cols.join(", ");

    let mut seed = vec!["true AS \"call?\"".to_string()];
    for (c, e) in plan.columns.iter().zip(&plan.seed) {
        seed.push(format!("{} AS {}", style.expr(e), ident(&c.name)));
    }
    seed.push(format!(
        "CAST(NULL AS {}) AS result",
        type_name(dialect, plan.result_type)
    ));

    let mut out = Vec::new();
    out.push(format!("{} run({col_list}) AS (", keyword(mode)));
    out.push(format!("  SELECT {}", seed.join(", ")));
    out.push("    UNION ALL".into());
    let body = style.node(&plan.body);
    match dialect {
        Dialect::Postgres => {
            out.push("  SELECT iter.*".into());
            out.push("  FROM   run AS r,".into());
            out.push("         LATERAL (".into());
            out.push("           SELECT".into());
            out.extend(body.into_iter().map(|l| format!("             {l}")));
            out.push(format!("         ) AS iter({col_list})"));
        }
        Dialect::Sqlite => {
            // no LATERAL: the body is a correlated expression over r
            out.push("  SELECT".into());
            out.extend(body.into_iter().map(|l| format!("    {l}")));
            out.push("    AS iter".into());
            out.push("  FROM   run AS r".into());
        }
    }
    out.push("  WHERE  r.\"call?\"".into());
    out.push(")".into());
    out.push("SELECT r.result".into());
    out.push("FROM   run AS r".into());
    out.push("WHERE  NOT r.\"call?\"".into());
    out.join("\n")
}

/// Renders a let chain around already-rendered `body` text.
pub(crate) fn render_let_chain(
    bindings: &[(String, Expr)],
    body: &str,
    dialect: Dialect,
    queries: &[QueryTemplate],
) -> String {
    if bindings.is_empty() {
        return body.to_string();
    }
    let style = SqlStyle {
        dialect,
        queries,
        placeholders: HashSet::new(),
    };
    let bindings: Vec<Binding> = bindings
        .iter()
        .enumerate()
        .map(|(i, (var, expr))| Binding {
            alias: format!("_{i}"),
            var: var.clone(),
            expr: expr.clone(),
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
            FromClause::Onion(layer.expect("non-empty"))
        }
    };
    style
        .select(body.lines().map(str::to_string).collect(), &from)
        .join("\n")
}
