//! SSA → ANF. A block becomes a function when it heads or starts a loop or
//! merges control flow; any other block is inlined into its only predecessor.
//! Functions nest inside the function of their nearest dominator, and every
//! variable a function (or anything it calls) reads from outside is lambda
//! lifted into an explicit parameter.

use std::collections::{BTreeSet, HashMap};

use crate::anf::{AnfExpr, AnfFunction, AnfProgram};
use crate::expr::Expr;
use crate::ssa::{BlockKind, Cfg, SsaProgram, Terminator};

struct Conv<'a> {
    p: &'a SsaProgram,
    cfg: Cfg,
    is_fn: Vec<bool>,
    children: Vec<Vec<usize>>,
    params: Vec<Vec<String>>,
}

pub fn ssa_to_anf(p: &SsaProgram) -> AnfProgram {
    let cfg = Cfg::new(p);
    let n = p.blocks.len();
    let entry = cfg.index(&p.entry).expect("entry block exists");
    let is_fn: Vec<bool> = (0..n)
        .map(|i| {
            i != entry
                && cfg.reachable(i)
                && (matches!(p.blocks[i].kind, BlockKind::LoopHead | BlockKind::LoopBody)
                    || cfg.preds[i].len() >= 2)
        })
        .collect();
    let roots: Vec<usize> = (0..n).filter(|&i| i == entry || is_fn[i]).collect();

    // the region of a root: itself plus the blocks inlined into it
    let mut owner = vec![usize::MAX; n];
    for &r in &roots {
        let mut stack = vec![r];
        while let Some(b) = stack.pop() {
            if owner[b] == r {
                continue;
            }
            owner[b] = r;
            stack.extend(cfg.succs[b].iter().copied().filter(|&s| !is_fn[s]));
        }
    }

    let top: BTreeSet<&str> = p.params.iter().map(|p| p.name.as_str()).collect();
    let mut def_order: HashMap<&str, usize> = HashMap::new();
    for b in &p.blocks {
        for name in b
            .phis
            .iter()
            .map(|f| &f.target)
            .chain(b.assigns.iter().map(|(v, _)| v))
        {
            let k = def_order.len();
            def_order.entry(name).or_insert(k);
        }
    }

    let mut defs: HashMap<usize, BTreeSet<String>> = HashMap::new();
    let mut uses: HashMap<usize, BTreeSet<String>> = HashMap::new();
    let mut calls: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for (b, block) in p.blocks.iter().enumerate() {
        let r = owner[b];
        if r == usize::MAX {
            continue;
        }
        let d = defs.entry(r).or_default();
        d.extend(block.phis.iter().map(|f| f.target.clone()));
        d.extend(block.assigns.iter().map(|(v, _)| v.clone()));
        let u = uses.entry(r).or_default();
        let mut read = |e: &Expr| u.extend(e.free_vars());
        block.assigns.iter().for_each(|(_, e)| read(e));
        match &block.term {
            Terminator::CondGoto { cond: e, .. } | Terminator::Return(e) => read(e),
            Terminator::Goto(_) => {}
        }
        // φ operands are read at the end of the predecessor
        for &s in &cfg.succs[b] {
            for phi in &p.blocks[s].phis {
                phi.sources
                    .iter()
                    .filter(|(l, _)| *l == block.label)
                    .for_each(|(_, e)| read(e));
            }
            if is_fn[s] {
                calls.entry(r).or_default().insert(s);
            }
        }
    }

    let mut lifted: HashMap<usize, BTreeSet<String>> = HashMap::new();
    loop {
        let mut changed = false;
        for &r in &roots {
            let mut need: BTreeSet<String> = uses.get(&r).cloned().unwrap_or_default();
            for g in calls.get(&r).into_iter().flatten() {
                need.extend(lifted.get(g).into_iter().flatten().cloned());
            }
            let local = defs.get(&r).cloned().unwrap_or_default();
            need.retain(|v| !local.contains(v) && !top.contains(v.as_str()));
            if lifted.get(&r) != Some(&need) {
                lifted.insert(r, need);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut params = vec![Vec::new(); n];
    let mut children = vec![Vec::new(); n];
    for &r in &roots {
        if r == entry {
            continue;
        }
        let mut extra: Vec<String> = lifted[&r].iter().cloned().collect();
        extra.sort_by_key(|v| def_order.get(v.as_str()).copied().unwrap_or(usize::MAX));
        params[r] = p.blocks[r]
            .phis
            .iter()
            .map(|f| f.target.clone())
            .chain(extra)
            .collect();
        let mut d = cfg.idom[r];
        while let Some(x) = d {
            if x == entry || is_fn[x] {
                break;
            }
            d = cfg.idom[x];
        }
        children[d.expect("reachable blocks are dominated by the entry")].push(r);
    }

    let conv = Conv {
        p,
        cfg,
        is_fn,
        children,
        params,
    };
    AnfProgram {
        name: p.name.clone(),
        params: p.params.clone(),
        return_type: p.return_type,
        body: conv.root(entry),
        queries: p.queries.clone(),
        var_types: p.var_types.clone(),
    }
}

impl Conv<'_> {
    fn root(&self, r: usize) -> AnfExpr {
        let body = self.region(r, None);
        if self.children[r].is_empty() {
            return body;
        }
        let funcs = self.children[r]
            .iter()
            .map(|&f| AnfFunction {
                name: self.p.blocks[f].label.clone(),
                params: self.params[f].clone(),
                body: self.root(f),
            })
            .collect();
        AnfExpr::LetRec {
            funcs,
            body: Box::new(body),
        }
    }

    /// Translates block `b` and the blocks inlined below it; `from` is the
    /// predecessor control arrived from when `b` is inlined.
    fn region(&self, b: usize, from: Option<&str>) -> AnfExpr {
        let block = &self.p.blocks[b];
        let mut lets: Vec<(String, Expr)> = Vec::new();
        if let Some(from) = from {
            for phi in &block.phis {
                let (_, e) = phi
                    .sources
                    .iter()
                    .find(|(l, _)| l == from)
                    .expect("operand per predecessor");
                lets.push((phi.target.clone(), e.clone()));
            }
        }
        lets.extend(block.assigns.iter().cloned());
        let tail = match &block.term {
            Terminator::Return(e) => AnfExpr::Return(e.clone()),
            Terminator::Goto(t) => self.jump(b, t),
            Terminator::CondGoto {
                cond,
                then_label,
                else_label,
            } => AnfExpr::If {
                cond: cond.clone(),
                then_branch: Box::new(self.jump(b, then_label)),
                else_branch: Box::new(self.jump(b, else_label)),
            },
        };
        lets.into_iter()
            .rev()
            .fold(tail, |body, (var, value)| AnfExpr::Let {
                var,
                value,
                body: Box::new(body),
            })
    }

    fn jump(&self, from: usize, target: &str) -> AnfExpr {
        let t = self.cfg.index(target).expect("verified label");
        let from_label = self.p.blocks[from].label.as_str();
        if !self.is_fn[t] {
            return self.region(t, Some(from_label));
        }
        let phis = &self.p.blocks[t].phis;
        let mut args: Vec<Expr> = phis
            .iter()
            .map(|phi| {
                let (_, e) = phi
                    .sources
                    .iter()
                    .find(|(l, _)| l == from_label)
                    .expect("operand per predecessor");
                e.clone()
            })
            .collect();
        args.extend(self.params[t][phis.len()..].iter().map(Expr::var));
        AnfExpr::TailCall {
            func: target.to_string(),
            args,
        }
    }
}
