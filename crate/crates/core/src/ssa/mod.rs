//! Static single assignment form with goto-based control flow.

mod build;
mod cfg;
mod interp;
mod simplify;
mod verify;

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use crate::expr::Expr;
use crate::frontend::{Param, QueryTemplate};
use crate::value::TypeTag;

pub use build::lower_to_ssa;
pub use cfg::Cfg;
pub use interp::{interpret_ssa, interpret_ssa_capped};
pub use simplify::simplify_ssa;
pub use verify::verify;

/// Where a block came from; the ANF conversion uses this to decide which
/// blocks become functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Entry,
    /// Target of a loop's back edge.
    LoopHead,
    /// First block of a FOR or WHILE body.
    LoopBody,
    /// Control-flow merge point (after IF, loop exit, CONTINUE latch).
    Join,
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    pub target: String,
    /// One operand per predecessor label; operands are variables or literals.
    pub sources: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Terminator {
    Goto(String),
    CondGoto {
        cond: Expr,
        then_label: String,
        else_label: String,
    },
    Return(Expr),
}

impl Terminator {
    pub fn successors(&self) -> Vec<&str> {
        match self {
            Terminator::Goto(l) => vec![l],
            Terminator::CondGoto {
                then_label,
                else_label,
                ..
            } => vec![then_label, else_label],
            Terminator::Return(_) => vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: String,
    pub kind: BlockKind,
    pub phis: Vec<Phi>,
    pub assigns: Vec<(String, Expr)>,
    pub term: Terminator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsaProgram {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: TypeTag,
    pub entry: String,
    pub blocks: Vec<Block>,
    pub queries: Vec<QueryTemplate>,
    /// Declared type of every SSA variable (inherited from its source variable).
    pub var_types: BTreeMap<String, TypeTag>,
}

impl SsaProgram {
    pub fn block(&self, label: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.label == label)
    }

    pub fn phi_count(&self) -> usize {
        self.blocks.iter().map(|b| b.phis.len()).sum()
    }

    /// Applies `f` to every variable use and every φ operand.
    pub(crate) fn rewrite_uses(&mut self, f: &mut impl FnMut(&str) -> Option<Expr>) {
        let mut map = |e: &Expr| e.map_vars(&mut |v| f(v).unwrap_or_else(|| Expr::var(v)));
        for b in &mut self.blocks {
            for phi in &mut b.phis {
                for (_, src) in &mut phi.sources {
                    *src = map(src);
                }
            }
            for (_, e) in &mut b.assigns {
                *e = map(e);
            }
            match &mut b.term {
                Terminator::Goto(_) => {}
                Terminator::CondGoto { cond, .. } => *cond = map(cond),
                Terminator::Return(e) => *e = map(e),
            }
        }
    }
}

/// Textual form: labelled blocks, `<-` assignments, `phi(pred: operand, ...)`.
pub fn dump(p: &SsaProgram) -> String {
    let mut out = String::new();
    let params: Vec<&str> = p.params.iter().map(|p| p.name.as_str()).collect();
    writeln!(out, "function {}({})", p.name, params.join(", ")).unwrap();
    out.push_str("{\n");
    for b in &p.blocks {
        let head = format!("  {}: ", b.label);
        let pad = " ".repeat(head.len());
        let mut lines = Vec::new();
        for phi in &b.phis {
            let ops: Vec<String> = phi
                .sources
                .iter()
                .map(|(l, e)| format!("{l}: {e}"))
                .collect();
            lines.push(format!("{} <- phi({});", phi.target, ops.join(", ")));
        }
        for (v, e) in &b.assigns {
            lines.push(format!("{v} <- {e};"));
        }
        lines.push(match &b.term {
            Terminator::Goto(l) => format!("goto {l};"),
            Terminator::CondGoto {
                cond,
                then_label,
                else_label,
            } => {
                format!("if {cond} then goto {then_label} else goto {else_label};")
            }
            Terminator::Return(e) => format!("return {e};"),
        });
        for (i, line) in lines.iter().enumerate() {
            out.push_str(if i == 0 { &head } else { &pad });
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str("}\n");
    out
}

impl fmt::Display for SsaProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&dump(self))
    }
}
