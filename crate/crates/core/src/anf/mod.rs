//! Administrative normal form: blocks become (mutually) tail-recursive
//! functions, gotos become tail calls, φs become parameters.

mod convert;
mod interp;

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write};

use crate::expr::Expr;
use crate::frontend::{Param, QueryTemplate};
use crate::value::TypeTag;

pub use convert::ssa_to_anf;
pub use interp::{interpret_anf, interpret_anf_capped, AnfStats};

#[derive(Debug, Clone, PartialEq)]
pub enum AnfExpr {
    Let {
        var: String,
        value: Expr,
        body: Box<AnfExpr>,
    },
    If {
        cond: Expr,
        then_branch: Box<AnfExpr>,
        else_branch: Box<AnfExpr>,
    },
    LetRec {
        funcs: Vec<AnfFunction>,
        body: Box<AnfExpr>,
    },
    TailCall {
        func: String,
        args: Vec<Expr>,
    },
    Return(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnfFunction {
    pub name: String,
    pub params: Vec<String>,
    pub body: AnfExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnfProgram {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: TypeTag,
    pub body: AnfExpr,
    pub queries: Vec<QueryTemplate>,
    pub var_types: BTreeMap<String, TypeTag>,
}

impl AnfExpr {
    /// Every scalar expression directly in this node (not in nested nodes).
    fn exprs(&self) -> Vec<&Expr> {
        match self {
            AnfExpr::Let { value, .. } => vec![value],
            AnfExpr::If { cond, .. } => vec![cond],
            AnfExpr::LetRec { .. } => vec![],
            AnfExpr::TailCall { args, .. } => args.iter().collect(),
            AnfExpr::Return(e) => vec![e],
        }
    }

    fn children(&self) -> Vec<&AnfExpr> {
        match self {
            AnfExpr::Let { body, .. } => vec![body],
            AnfExpr::If {
                then_branch,
                else_branch,
                ..
            } => vec![then_branch, else_branch],
            AnfExpr::LetRec { funcs, body } => {
                funcs.iter().map(|f| &f.body).chain([&**body]).collect()
            }
            AnfExpr::TailCall { .. } | AnfExpr::Return(_) => vec![],
        }
    }
}

impl AnfProgram {
    /// All functions, outermost first, as a flat list.
    pub fn functions(&self) -> Vec<&AnfFunction> {
        fn go<'a>(e: &'a AnfExpr, out: &mut Vec<&'a AnfFunction>) {
            if let AnfExpr::LetRec { funcs, .. } = e {
                out.extend(funcs.iter());
            }
            for c in e.children() {
                go(c, out);
            }
        }
        let mut out = Vec::new();
        go(&self.body, &mut out);
        out
    }
}

/// Reports every call that is not in tail position, every tail call to an
/// unknown function, and every arity mismatch.
pub fn check_tail_positions(p: &AnfProgram) -> Vec<String> {
    let arity: HashMap<&str, usize> = p
        .functions()
        .iter()
        .map(|f| (f.name.as_str(), f.params.len()))
        .collect();
    let mut errs = Vec::new();
    fn go(e: &AnfExpr, arity: &HashMap<&str, usize>, errs: &mut Vec<String>) {
        for x in e.exprs() {
            x.walk(&mut |n| {
                if let Expr::Apply { func, .. } = n {
                    errs.push(format!("call to {func} is not in tail position"));
                }
            });
        }
        if let AnfExpr::TailCall { func, args } = e {
            match arity.get(func.as_str()) {
                None => errs.push(format!("tail call to unknown function {func}")),
                Some(&n) if n != args.len() => errs.push(format!(
                    "{func} takes {n} arguments but is called with {}",
                    args.len()
                )),
                _ => {}
            }
        }
        for c in e.children() {
            go(c, arity, errs);
        }
    }
    go(&p.body, &arity, &mut errs);
    errs
}

pub fn dump(p: &AnfProgram) -> String {
    let params: Vec<&str> = p.params.iter().map(|p| p.name.as_str()).collect();
    let mut out = format!("{}({}) =\n", p.name, params.join(", "));
    write_expr(&mut out, &p.body, 1);
    out
}

fn write_expr(out: &mut String, e: &AnfExpr, depth: usize) {
    let pad = "  ".repeat(depth);
    match e {
        AnfExpr::Let { var, value, body } => {
            writeln!(out, "{pad}let {var} = {value} in").unwrap();
            write_expr(out, body, depth);
        }
        AnfExpr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            writeln!(out, "{pad}if {cond} then").unwrap();
            write_expr(out, then_branch, depth + 1);
            writeln!(out, "{pad}else").unwrap();
            write_expr(out, else_branch, depth + 1);
        }
        AnfExpr::LetRec { funcs, body } => {
            for (i, f) in funcs.iter().enumerate() {
                let kw = if i == 0 { "letrec" } else { "and" };
                writeln!(out, "{pad}{kw} {}({}) =", f.name, f.params.join(", ")).unwrap();
                write_expr(out, &f.body, depth + 1);
            }
            writeln!(out, "{pad}in").unwrap();
            write_expr(out, body, depth);
        }
        AnfExpr::TailCall { func, args } => {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            writeln!(out, "{pad}{func}({})", args.join(", ")).unwrap();
        }
        AnfExpr::Return(e) => writeln!(out, "{pad}{e}").unwrap(),
    }
}

impl fmt::Display for AnfProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&dump(self))
    }
}
