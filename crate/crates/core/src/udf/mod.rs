//! Defunctionalization: all ANF functions merge into one self-recursive
//! worker that dispatches on an integer tag and takes the union of their
//! parameters.

mod interp;

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write};

use crate::anf::{AnfExpr, AnfFunction, AnfProgram};
use crate::expr::{BinOp, Expr};
use crate::frontend::{Param, QueryTemplate};
use crate::value::{TypeTag, Value};

pub use interp::{interpret_udf, interpret_udf_capped, UdfStats};

#[derive(Debug, Clone, PartialEq)]
pub enum UdfExpr {
    Let {
        var: String,
        value: Expr,
        body: Box<UdfExpr>,
    },
    /// First arm whose guard is true; no arm and no `otherwise` is a dispatch error.
    Case {
        arms: Vec<(Expr, UdfExpr)>,
        otherwise: Option<Box<UdfExpr>>,
    },
    /// Self-recursive call in tail position.
    Call {
        tag: Option<i64>,
        slots: Vec<Expr>,
    },
    Return(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UdfProgram {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: TypeTag,
    /// Name of the recursive worker, `name*`.
    pub worker: String,
    /// Dispatch parameter; absent when only one function remains.
    pub dispatch: Option<String>,
    /// Source labels of the merged functions; function `i` has tag `i + 1`.
    pub functions: Vec<String>,
    /// The worker's parameters after the dispatch tag.
    pub slots: Vec<Param>,
    /// The wrapper's call into the worker, over the function's own parameters.
    pub initial: UdfExpr,
    pub body: UdfExpr,
    pub queries: Vec<QueryTemplate>,
    pub var_types: BTreeMap<String, TypeTag>,
}

impl UdfProgram {
    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name == name)
    }
}

impl UdfExpr {
    pub fn walk(&self, f: &mut impl FnMut(&UdfExpr)) {
        f(self);
        match self {
            UdfExpr::Let { body, .. } => body.walk(f),
            UdfExpr::Case { arms, otherwise } => {
                arms.iter().for_each(|(_, a)| a.walk(f));
                if let Some(o) = otherwise {
                    o.walk(f);
                }
            }
            UdfExpr::Call { .. } | UdfExpr::Return(_) => {}
        }
    }

    /// Scalar expressions at this node.
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            UdfExpr::Let { value, .. } => vec![value],
            UdfExpr::Case { arms, .. } => arms.iter().map(|(g, _)| g).collect(),
            UdfExpr::Call { slots, .. } => slots.iter().collect(),
            UdfExpr::Return(e) => vec![e],
        }
    }
}

/// Merges the ANF functions into one worker.
pub fn defunctionalize(p: &AnfProgram) -> UdfProgram {
    // the worker's functions; a top-level body that does more than jump becomes function `L0`
    let (mut funcs, initial_call): (Vec<AnfFunction>, Option<(String, Vec<Expr>)>) = match &p.body {
        AnfExpr::TailCall { func, args } => (Vec::new(), Some((func.clone(), args.clone()))),
        AnfExpr::LetRec { funcs, body } if matches!(**body, AnfExpr::TailCall { .. }) => {
            let AnfExpr::TailCall { func, args } = &**body else {
                unreachable!()
            };
            (funcs.clone(), Some((func.clone(), args.clone())))
        }
        body => {
            let mut name = "L0".to_string();
            while p.functions().iter().any(|f| f.name == name) {
                name.push('_');
            }
            (
                vec![AnfFunction {
                    name,
                    params: Vec::new(),
                    body: body.clone(),
                }],
                None,
            )
        }
    };
    // flatten nested letrecs, outermost first
    let mut i = 0;
    while i < funcs.len() {
        if let AnfExpr::LetRec { funcs: inner, body } = funcs[i].body.clone() {
            funcs[i].body = *body;
            funcs.extend(inner);
            continue;
        }
        i += 1;
    }
    let top: Vec<&Param> = p.params.iter().collect();
    let mut names: Vec<String> = Vec::new();
    for f in &funcs {
        for v in &f.params {
            if !names.contains(v) {
                names.push(v.clone());
            }
        }
    }
    let mut used = HashSet::new();
    for f in &funcs {
        anf_free_vars(&f.body, &mut used);
    }
    let mut slots: Vec<Param> = names
        .iter()
        .map(|n| {
            Param::new(
                n.clone(),
                p.var_types.get(n).copied().unwrap_or(TypeTag::Int),
            )
        })
        .collect();
    slots.extend(
        top.iter()
            .filter(|t| used.contains(&t.name) && !names.contains(&t.name))
            .map(|t| (*t).clone()),
    );

    let labels: Vec<String> = funcs.iter().map(|f| f.name.clone()).collect();
    let dispatch = (labels.len() > 1).then(|| {
        let mut d = "fn".to_string();
        while slots.iter().any(|s| s.name == d) || p.var_types.contains_key(&d) {
            d.push('_');
        }
        d
    });
    let cx = Cx {
        funcs: &funcs,
        labels: &labels,
        slots: &slots,
        top: &p.params,
    };

    let initial = match initial_call {
        Some((func, args)) => cx.call(&func, &args, &[]),
        None => cx.call(&labels[0], &[], &[]),
    };
    let body = match &dispatch {
        None => cx.body(&funcs[0]),
        Some(d) => UdfExpr::Case {
            arms: funcs
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    (
                        Expr::binary(BinOp::Eq, Expr::var(d), Expr::int(i as i64 + 1)),
                        cx.body(f),
                    )
                })
                .collect(),
            otherwise: None,
        },
    };
    UdfProgram {
        name: p.name.clone(),
        params: p.params.clone(),
        return_type: p.return_type,
        worker: format!("{}*", p.name),
        dispatch,
        functions: labels,
        slots,
        initial,
        body,
        queries: p.queries.clone(),
        var_types: p.var_types.clone(),
    }
}

fn anf_free_vars(e: &AnfExpr, out: &mut HashSet<String>) {
    let mut add = |x: &Expr| out.extend(x.free_vars());
    match e {
        AnfExpr::Let { value, body, .. } => {
            add(value);
            anf_free_vars(body, out);
        }
        AnfExpr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            add(cond);
            anf_free_vars(then_branch, out);
            anf_free_vars(else_branch, out);
        }
        AnfExpr::LetRec { funcs, body } => {
            funcs.iter().for_each(|f| anf_free_vars(&f.body, out));
            anf_free_vars(body, out);
        }
        AnfExpr::TailCall { args, .. } => args.iter().for_each(add),
        AnfExpr::Return(x) => add(x),
    }
}

struct Cx<'a> {
    funcs: &'a [AnfFunction],
    labels: &'a [String],
    slots: &'a [Param],
    top: &'a [Param],
}

impl Cx<'_> {
    fn body(&self, f: &AnfFunction) -> UdfExpr {
        self.expr(&f.body, &f.params)
    }

    /// A call to `func`: its arguments in its own slots, the caller's
    /// parameters and the top-level parameters carried along, NULL elsewhere.
    fn call(&self, func: &str, args: &[Expr], caller: &[String]) -> UdfExpr {
        let k = self
            .labels
            .iter()
            .position(|l| l == func)
            .expect("known function");
        let target = &self.funcs[k];
        let slots = self
            .slots
            .iter()
            .map(|s| {
                if let Some(i) = target.params.iter().position(|p| *p == s.name) {
                    args[i].clone()
                } else if caller.contains(&s.name) || self.top.iter().any(|t| t.name == s.name) {
                    Expr::var(&s.name)
                } else {
                    Expr::Lit(Value::Null)
                }
            })
            .collect();
        UdfExpr::Call {
            tag: (self.labels.len() > 1).then_some(k as i64 + 1),
            slots,
        }
    }

    fn expr(&self, e: &AnfExpr, caller: &[String]) -> UdfExpr {
        match e {
            AnfExpr::Let { var, value, body } => UdfExpr::Let {
                var: var.clone(),
                value: value.clone(),
                body: Box::new(self.expr(body, caller)),
            },
            AnfExpr::If { .. } => {
                let mut arms = Vec::new();
                let mut cur = e;
                while let AnfExpr::If {
                    cond,
                    then_branch,
                    else_branch,
                } = cur
                {
                    arms.push((cond.clone(), self.expr(then_branch, caller)));
                    cur = else_branch;
                }
                UdfExpr::Case {
                    arms,
                    otherwise: Some(Box::new(self.expr(cur, caller))),
                }
            }
            AnfExpr::LetRec { body, .. } => self.expr(body, caller),
            AnfExpr::TailCall { func, args } => self.call(func, args, caller),
            AnfExpr::Return(x) => UdfExpr::Return(x.clone()),
        }
    }
}

pub fn dump(p: &UdfProgram) -> String {
    let params: Vec<&str> = p.params.iter().map(|p| p.name.as_str()).collect();
    let mut out = String::new();
    let mut head = String::new();
    write_expr(&mut head, p, &p.initial, 0);
    write!(
        out,
        "{}({}) = {}",
        p.name,
        params.join(", "),
        head.trim_start()
    )
    .unwrap();
    let mut wparams: Vec<&str> = p.dispatch.iter().map(String::as_str).collect();
    wparams.extend(p.slots.iter().map(|s| s.name.as_str()));
    writeln!(out, "{}({}) =", p.worker, wparams.join(", ")).unwrap();
    write_expr(&mut out, p, &p.body, 1);
    out
}

fn guard(p: &UdfProgram, g: &Expr) -> String {
    if let (
        Some(d),
        Expr::Binary {
            op: BinOp::Eq,
            lhs,
            rhs,
        },
    ) = (&p.dispatch, g)
    {
        if let (Expr::Var(v), Expr::Lit(Value::Int(k))) = (&**lhs, &**rhs) {
            if v == d && *k >= 1 && (*k as usize) <= p.functions.len() {
                return format!("{d} = {}", p.functions[*k as usize - 1]);
            }
        }
    }
    g.to_string()
}

fn write_expr(out: &mut String, p: &UdfProgram, e: &UdfExpr, depth: usize) {
    let pad = "  ".repeat(depth);
    match e {
        UdfExpr::Let { var, value, body } => {
            writeln!(out, "{pad}let {var} = {value} in").unwrap();
            write_expr(out, p, body, depth);
        }
        UdfExpr::Case { arms, otherwise } => {
            writeln!(out, "{pad}case").unwrap();
            for (g, a) in arms {
                writeln!(out, "{pad}  when {} then", guard(p, g)).unwrap();
                write_expr(out, p, a, depth + 2);
            }
            if let Some(o) = otherwise {
                writeln!(out, "{pad}  else").unwrap();
                write_expr(out, p, o, depth + 2);
            }
            writeln!(out, "{pad}end").unwrap();
        }
        UdfExpr::Call { tag, slots } => {
            let mut args: Vec<String> = tag.iter().map(|t| t.to_string()).collect();
            args.extend(slots.iter().map(|s| s.to_string()));
            writeln!(out, "{pad}{}({})", p.worker, args.join(", ")).unwrap();
        }
        UdfExpr::Return(x) => writeln!(out, "{pad}{x}").unwrap(),
    }
}

impl fmt::Display for UdfProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&dump(self))
    }
}
