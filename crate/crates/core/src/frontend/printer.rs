//! Pretty-printer producing source the parser accepts again.

use std::fmt::Write;

use crate::expr::{render, Expr, ExprStyle, QueryId};
use crate::frontend::ast::{FunctionAst, Stmt};
use crate::frontend::query::QueryTemplate;

/// Spells embedded queries as their (instantiated) source text.
pub struct SourceStyle<'a> {
    pub queries: &'a [QueryTemplate],
}

impl ExprStyle for SourceStyle<'_> {
    fn query(&self, id: QueryId, args: Vec<String>) -> String {
        match self.queries.iter().find(|q| q.id == id) {
            Some(q) => format!("({})", q.instantiate(|i| args[i].clone())),
            None => format!("{id}[{}]", args.join(", ")),
        }
    }
}

pub fn print_function(f: &FunctionAst) -> String {
    let style = SourceStyle {
        queries: &f.queries,
    };
    let e = |x: &Expr| render(x, &style);
    let mut out = String::new();
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| format!("{} {}", p.name, p.ty))
        .collect();
    writeln!(out, "CREATE FUNCTION {}({})", f.name, params.join(", ")).unwrap();
    writeln!(out, "RETURNS {} AS $$", f.return_type).unwrap();
    if !f.decls.is_empty() {
        out.push_str("DECLARE\n");
        for d in &f.decls {
            match &d.init {
                Some(init) => writeln!(out, "  {} {} = {};", d.name, d.ty, e(init)).unwrap(),
                None => writeln!(out, "  {} {};", d.name, d.ty).unwrap(),
            }
        }
    }
    out.push_str("BEGIN\n");
    print_block(&mut out, &f.body, 1, &e);
    out.push_str("END;\n$$ LANGUAGE PLPGSQL;\n");
    out
}

fn print_block(out: &mut String, stmts: &[Stmt], depth: usize, e: &dyn Fn(&Expr) -> String) {
    for s in stmts {
        print_stmt(out, s, depth, e);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize, e: &dyn Fn(&Expr) -> String) {
    let pad = "  ".repeat(depth);
    let label = |l: &Option<String>| l.as_ref().map(|l| format!("<<{l}>> ")).unwrap_or_default();
    let end_label = |l: &Option<String>| l.as_ref().map(|l| format!(" {l}")).unwrap_or_default();
    let when = |c: &Option<Expr>| {
        c.as_ref()
            .map(|c| format!(" WHEN {}", e(c)))
            .unwrap_or_default()
    };
    match s {
        Stmt::Assign { var, expr } => writeln!(out, "{pad}{var} = {};", e(expr)).unwrap(),
        Stmt::Return(x) => writeln!(out, "{pad}RETURN {};", e(x)).unwrap(),
        Stmt::Exit { label: l, cond } => {
            writeln!(out, "{pad}EXIT{}{};", end_label(l), when(cond)).unwrap()
        }
        Stmt::Continue { label: l, cond } => {
            writeln!(out, "{pad}CONTINUE{}{};", end_label(l), when(cond)).unwrap()
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            writeln!(out, "{pad}IF {} THEN", e(cond)).unwrap();
            print_block(out, then_branch, depth + 1, e);
            let mut rest = else_branch;
            // fold `ELSE IF ... END IF; END IF;` into ELSIF, which parses to the same tree
            while let [Stmt::If {
                cond,
                then_branch,
                else_branch,
            }] = rest.as_slice()
            {
                writeln!(out, "{pad}ELSIF {} THEN", e(cond)).unwrap();
                print_block(out, then_branch, depth + 1, e);
                rest = else_branch;
            }
            if !rest.is_empty() {
                writeln!(out, "{pad}ELSE").unwrap();
                print_block(out, rest, depth + 1, e);
            }
            writeln!(out, "{pad}END IF;").unwrap();
        }
        Stmt::ForRange {
            label: l,
            var,
            lo,
            hi,
            body,
        } => {
            writeln!(
                out,
                "{pad}{}FOR {var} IN {}..{} LOOP",
                label(l),
                e(lo),
                e(hi)
            )
            .unwrap();
            print_block(out, body, depth + 1, e);
            writeln!(out, "{pad}END LOOP{};", end_label(l)).unwrap();
        }
        Stmt::While {
            label: l,
            cond,
            body,
        } => {
            writeln!(out, "{pad}{}WHILE {} LOOP", label(l), e(cond)).unwrap();
            print_block(out, body, depth + 1, e);
            writeln!(out, "{pad}END LOOP{};", end_label(l)).unwrap();
        }
        Stmt::Loop { label: l, body } => {
            writeln!(out, "{pad}{}LOOP", label(l)).unwrap();
            print_block(out, body, depth + 1, e);
            writeln!(out, "{pad}END LOOP{};", end_label(l)).unwrap();
        }
    }
}
