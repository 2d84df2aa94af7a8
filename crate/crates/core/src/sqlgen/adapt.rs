//! Body adaptation: recursive calls and base cases become `run` rows, and
//! worker parameters become reads of the current row `r`.

use std::collections::HashSet;

use crate::expr::Expr;
use crate::udf::{UdfExpr, UdfProgram};

/// The worker body with row-constructing leaves.
#[derive(Debug, Clone, PartialEq)]
pub enum RowExpr {
    Case {
        arms: Vec<(Expr, RowExpr)>,
        otherwise: Option<Box<RowExpr>>,
    },
    /// Consecutive let bindings, evaluated in order.
    LetChain {
        bindings: Vec<(String, Expr)>,
        body: Box<RowExpr>,
    },
    /// `(true, (tag, args…), NULL)`
    CallRow { tag: Option<i64>, args: Vec<Expr> },
    /// `(false, NULL, value)`
    BaseRow(Expr),
}

impl RowExpr {
    pub fn walk(&self, f: &mut impl FnMut(&RowExpr)) {
        f(self);
        match self {
            RowExpr::Case { arms, otherwise } => {
                arms.iter().for_each(|(_, a)| a.walk(f));
                if let Some(o) = otherwise {
                    o.walk(f);
                }
            }
            RowExpr::LetChain { body, .. } => body.walk(f),
            RowExpr::CallRow { .. } | RowExpr::BaseRow(_) => {}
        }
    }

    /// (call rows, base rows)
    pub fn leaf_counts(&self) -> (usize, usize) {
        let mut counts = (0, 0);
        self.walk(&mut |e| match e {
            RowExpr::CallRow { .. } => counts.0 += 1,
            RowExpr::BaseRow(_) => counts.1 += 1,
            _ => {}
        });
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedBody {
    /// Columns of `run` between `"call?"` and `result`: the dispatch tag (if any), then the slots.
    pub columns: Vec<String>,
    pub expr: RowExpr,
}

/// Replaces every self-call by a call row and every base case by a base row,
/// and qualifies parameter reads with the current row `r`. A let binding
/// shadows the parameter of the same name for the rest of its scope.
pub fn adapt_body(u: &UdfProgram) -> AdaptedBody {
    let columns: Vec<String> = u
        .dispatch
        .iter()
        .cloned()
        .chain(u.slots.iter().map(|s| s.name.clone()))
        .collect();
    let params: HashSet<&str> = columns.iter().map(String::as_str).collect();
    let expr = adapt(&u.body, &params, &HashSet::new());
    AdaptedBody { columns, expr }
}

fn adapt(e: &UdfExpr, params: &HashSet<&str>, bound: &HashSet<String>) -> RowExpr {
    let q = |e: &Expr, bound: &HashSet<String>| {
        e.map_vars(&mut |v| {
            if params.contains(v) && !bound.contains(v) {
                Expr::column("r", v)
            } else {
                Expr::var(v)
            }
        })
    };
    match e {
        UdfExpr::Let { .. } => {
            let mut bound = bound.clone();
            let mut bindings = Vec::new();
            let mut cur = e;
            while let UdfExpr::Let { var, value, body } = cur {
                bindings.push((var.clone(), q(value, &bound)));
                bound.insert(var.clone());
                cur = body;
            }
            RowExpr::LetChain {
                bindings,
                body: Box::new(adapt(cur, params, &bound)),
            }
        }
        UdfExpr::Case { arms, otherwise } => RowExpr::Case {
            arms: arms
                .iter()
                .map(|(g, a)| (q(g, bound), adapt(a, params, bound)))
                .collect(),
            otherwise: otherwise
                .as_ref()
                .map(|o| Box::new(adapt(o, params, bound))),
        },
        UdfExpr::Call { tag, slots } => RowExpr::CallRow {
            tag: *tag,
            args: slots.iter().map(|s| q(s, bound)).collect(),
        },
        UdfExpr::Return(v) => RowExpr::BaseRow(q(v, bound)),
    }
}
