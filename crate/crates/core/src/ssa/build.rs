//! Lowering from the AST: sealed-block SSA construction over a CFG that is
//! built on the fly.
//!
//! Variables are read through `read`, which walks predecessors and inserts φs
//! where control merges. Loop heads stay unsealed until their back edges are
//! known. Variables that the loop assigns get φs at the head as soon as it is
//! entered, so their names are allocated in declaration order. Every other φ is
//! created on demand. φs that end up trivial are left in place for
//! [`simplify_ssa`](super::simplify_ssa).

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::expr::{BinOp, Expr};
use crate::frontend::{walk_stmts, FunctionAst, Stmt};
use crate::ssa::{Block, BlockKind, Phi, SsaProgram, Terminator};
use crate::value::{TypeTag, Value};

enum Term {
    Goto(usize),
    Cond(Expr, usize, usize),
    Return(Expr),
}

struct PhiB {
    target: String,
    sources: Vec<(usize, Expr)>,
}

struct Bb {
    kind: BlockKind,
    preds: Vec<usize>,
    phis: Vec<PhiB>,
    assigns: Vec<(String, Expr)>,
    term: Option<Term>,
    /// Position in the order blocks were first entered; determines labels.
    order: Option<usize>,
    sealed: bool,
    incomplete: Vec<(String, usize)>,
}

struct LoopCtx {
    label: Option<String>,
    break_to: usize,
    /// `None` for FOR loops until a CONTINUE needs the latch.
    continue_to: Option<usize>,
}

struct Builder<'a> {
    ast: &'a FunctionAst,
    blocks: Vec<Bb>,
    cur: usize,
    entered: usize,
    defs: HashMap<(String, usize), Expr>,
    counters: HashMap<String, usize>,
    versions: BTreeMap<String, Vec<String>>,
    reserved: HashSet<String>,
    var_types: BTreeMap<String, TypeTag>,
    loops: Vec<LoopCtx>,
    /// Variables definitely assigned on every path to the current point.
    assigned: HashSet<String>,
}

/// Lowers a parsed function to (unsimplified) SSA.
pub fn lower_to_ssa(ast: &FunctionAst) -> SsaProgram {
    let mut reserved: HashSet<String> = ast.params.iter().map(|p| p.name.clone()).collect();
    reserved.extend(ast.decls.iter().map(|d| d.name.clone()));
    walk_stmts(&ast.body, &mut |s| {
        if let Stmt::ForRange { var, .. } = s {
            reserved.insert(var.clone());
        }
    });
    let mut b = Builder {
        ast,
        blocks: Vec::new(),
        cur: 0,
        entered: 0,
        defs: HashMap::new(),
        counters: HashMap::new(),
        versions: BTreeMap::new(),
        reserved,
        var_types: BTreeMap::new(),
        loops: Vec::new(),
        assigned: HashSet::new(),
    };
    let entry = b.new_block(BlockKind::Entry);
    b.seal(entry);
    b.enter(entry);
    for p in &ast.params {
        b.var_types.insert(p.name.clone(), p.ty);
        b.write(&p.name, entry, Expr::var(&p.name));
        b.assigned.insert(p.name.clone());
    }
    for d in &ast.decls {
        let value = match &d.init {
            Some(init) => {
                b.assigned.insert(d.name.clone());
                let e = b.rename(init);
                if e.is_trivial() {
                    e
                } else {
                    b.define(&d.name, e)
                }
            }
            None => Expr::Lit(Value::Null),
        };
        let cur = b.cur;
        b.write(&d.name, cur, value);
    }
    b.stmts(&ast.body);
    if !b.terminated() {
        // unreachable for parsed functions, which always return
        b.terminate(Term::Return(Expr::Lit(Value::Null)));
    }
    b.finish()
}

impl Builder<'_> {
    fn new_block(&mut self, kind: BlockKind) -> usize {
        self.blocks.push(Bb {
            kind,
            preds: Vec::new(),
            phis: Vec::new(),
            assigns: Vec::new(),
            term: None,
            order: None,
            sealed: false,
            incomplete: Vec::new(),
        });
        self.blocks.len() - 1
    }

    fn enter(&mut self, b: usize) {
        if self.blocks[b].order.is_none() {
            self.blocks[b].order = Some(self.entered);
            self.entered += 1;
        }
        self.cur = b;
    }

    fn terminated(&self) -> bool {
        self.blocks[self.cur].term.is_some()
    }

    fn terminate(&mut self, t: Term) {
        let cur = self.cur;
        debug_assert!(self.blocks[cur].term.is_none());
        match &t {
            Term::Goto(s) => self.blocks[*s].preds.push(cur),
            Term::Cond(_, a, b) => {
                self.blocks[*a].preds.push(cur);
                self.blocks[*b].preds.push(cur);
            }
            Term::Return(_) => {}
        }
        self.blocks[cur].term = Some(t);
    }

    fn ty(&self, base: &str) -> TypeTag {
        self.ast.var_type(base).unwrap_or(TypeTag::Int)
    }

    fn fresh(&mut self, base: &str, ty: TypeTag) -> String {
        let n = self.counters.entry(base.to_string()).or_insert(0);
        let name = loop {
            *n += 1;
            let candidate = format!("{base}_{n}");
            if !self.reserved.contains(&candidate) {
                break candidate;
            }
        };
        self.var_types.insert(name.clone(), ty);
        name
    }

    fn new_version(&mut self, base: &str) -> String {
        let name = self.fresh(base, self.ty(base));
        self.versions
            .entry(base.to_string())
            .or_default()
            .push(name.clone());
        name
    }

    /// Emits `base_k <- e` in the current block.
    fn define(&mut self, base: &str, e: Expr) -> Expr {
        let v = self.new_version(base);
        let cur = self.cur;
        self.blocks[cur].assigns.push((v.clone(), e));
        Expr::var(v)
    }

    fn write(&mut self, base: &str, block: usize, value: Expr) {
        self.defs.insert((base.to_string(), block), value);
    }

    fn new_phi(&mut self, base: &str, block: usize) -> String {
        let target = self.new_version(base);
        self.blocks[block].phis.push(PhiB {
            target: target.clone(),
            sources: Vec::new(),
        });
        target
    }

    fn read(&mut self, base: &str, block: usize) -> Expr {
        if let Some(v) = self.defs.get(&(base.to_string(), block)) {
            return v.clone();
        }
        let value = if !self.blocks[block].sealed {
            Expr::var(self.incomplete_phi(base, block))
        } else {
            match self.blocks[block].preds.as_slice() {
                [] => Expr::Lit(Value::Null),
                [p] => {
                    let p = *p;
                    self.read(base, p)
                }
                _ => {
                    let phi = self.new_phi(base, block);
                    let idx = self.blocks[block].phis.len() - 1;
                    self.write(base, block, Expr::var(&phi));
                    self.add_operands(base, block, idx);
                    Expr::var(phi)
                }
            }
        };
        self.write(base, block, value.clone());
        value
    }

    /// A φ in an unsealed block, completed when the block is sealed.
    fn incomplete_phi(&mut self, base: &str, block: usize) -> String {
        let phi = self.new_phi(base, block);
        let idx = self.blocks[block].phis.len() - 1;
        self.blocks[block].incomplete.push((base.to_string(), idx));
        phi
    }

    fn add_operands(&mut self, base: &str, block: usize, phi: usize) {
        for p in self.blocks[block].preds.clone() {
            let v = self.read(base, p);
            self.blocks[block].phis[phi].sources.push((p, v));
        }
    }

    fn seal(&mut self, block: usize) {
        for (base, phi) in std::mem::take(&mut self.blocks[block].incomplete) {
            self.add_operands(&base, block, phi);
        }
        self.blocks[block].sealed = true;
    }

    fn rename(&mut self, e: &Expr) -> Expr {
        let cur = self.cur;
        e.map_vars(&mut |v| self.read(v, cur))
    }

    /// Enters a new loop head, creating φs for the variables the loop body assigns.
    fn enter_head(&mut self, head: usize, body: &[Stmt], for_var: Option<&str>) {
        self.enter(head);
        let mut written = HashSet::new();
        walk_stmts(body, &mut |s| {
            if let Stmt::Assign { var, .. } = s {
                written.insert(var.as_str());
            }
        });
        let names = self
            .ast
            .params
            .iter()
            .map(|p| p.name.as_str())
            .chain(self.ast.decls.iter().map(|d| d.name.as_str()))
            .filter(|n| written.contains(n) && self.assigned.contains(*n))
            .chain(for_var)
            .map(str::to_string)
            .collect::<Vec<_>>();
        for n in names {
            let phi = self.incomplete_phi(&n, head);
            self.write(&n, head, Expr::var(phi));
        }
    }

    fn stmts(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            if self.terminated() {
                // code after RETURN/EXIT/CONTINUE: lower into an unreachable block
                let dead = self.new_block(BlockKind::Plain);
                self.seal(dead);
                self.enter(dead);
            }
            self.stmt(s);
        }
    }

    fn find_loop(&self, label: &Option<String>) -> usize {
        match label {
            None => self.loops.len() - 1,
            Some(l) => self
                .loops
                .iter()
                .rposition(|c| c.label.as_ref() == Some(l))
                .expect("label checked by parser"),
        }
    }

    fn jump(&mut self, target: usize, cond: &Option<Expr>) {
        match cond {
            None => self.terminate(Term::Goto(target)),
            Some(c) => {
                let c = self.rename(c);
                let next = self.new_block(BlockKind::Plain);
                self.terminate(Term::Cond(c, target, next));
                self.seal(next);
                self.enter(next);
            }
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Assign { var, expr } => {
                let e = self.rename(expr);
                let v = self.define(var, e);
                let cur = self.cur;
                self.write(var, cur, v);
                self.assigned.insert(var.clone());
            }
            Stmt::Return(e) => {
                let e = self.rename(e);
                self.terminate(Term::Return(e));
            }
            Stmt::Exit { label, cond } => {
                let target = self.loops[self.find_loop(label)].break_to;
                self.jump(target, cond);
            }
            Stmt::Continue { label, cond } => {
                let i = self.find_loop(label);
                let target = match self.loops[i].continue_to {
                    Some(t) => t,
                    None => {
                        let latch = self.new_block(BlockKind::Join);
                        self.loops[i].continue_to = Some(latch);
                        latch
                    }
                };
                self.jump(target, cond);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.rename(cond);
                let before = self.assigned.clone();
                let then_b = self.new_block(BlockKind::Plain);
                let join = self.new_block(BlockKind::Join);
                let else_b = if else_branch.is_empty() {
                    join
                } else {
                    self.new_block(BlockKind::Plain)
                };
                self.terminate(Term::Cond(c, then_b, else_b));

                let mut outs: Vec<HashSet<String>> = Vec::new();
                self.seal(then_b);
                self.enter(then_b);
                self.stmts(then_branch);
                if !self.terminated() {
                    self.terminate(Term::Goto(join));
                    outs.push(std::mem::replace(&mut self.assigned, before.clone()));
                } else {
                    self.assigned = before.clone();
                }
                if else_branch.is_empty() {
                    outs.push(before.clone());
                } else {
                    self.seal(else_b);
                    self.enter(else_b);
                    self.stmts(else_branch);
                    if !self.terminated() {
                        self.terminate(Term::Goto(join));
                        outs.push(std::mem::take(&mut self.assigned));
                    }
                }
                self.assigned = match outs.split_first() {
                    Some((first, rest)) => first
                        .iter()
                        .filter(|v| rest.iter().all(|o| o.contains(*v)))
                        .cloned()
                        .collect(),
                    None => before,
                };
                self.seal(join);
                self.enter(join);
            }
            Stmt::ForRange {
                label,
                var,
                lo,
                hi,
                body,
            } => {
                let lo = self.rename(lo);
                let lo = if lo.is_trivial() {
                    lo
                } else {
                    self.define(var, lo)
                };
                let cur = self.cur;
                self.write(var, cur, lo);
                let hi = self.rename(hi);
                let hi = if hi.is_trivial() {
                    hi
                } else {
                    let t = self.fresh(&format!("{var}_hi"), TypeTag::Int);
                    self.blocks[cur].assigns.push((t.clone(), hi));
                    Expr::var(t)
                };
                let before = self.assigned.clone();
                self.assigned.insert(var.clone());

                let head = self.new_block(BlockKind::LoopHead);
                let body_b = self.new_block(BlockKind::LoopBody);
                let exit = self.new_block(BlockKind::Join);
                self.terminate(Term::Goto(head));
                self.enter_head(head, body, Some(var));
                let i = self.read(var, head);
                self.terminate(Term::Cond(Expr::binary(BinOp::Le, i, hi), body_b, exit));
                self.seal(body_b);
                self.enter(body_b);
                self.loops.push(LoopCtx {
                    label: label.clone(),
                    break_to: exit,
                    continue_to: None,
                });
                self.stmts(body);
                let ctx = self.loops.pop().expect("pushed above");
                if let Some(latch) = ctx.continue_to {
                    if !self.terminated() {
                        self.terminate(Term::Goto(latch));
                    }
                    self.seal(latch);
                    self.enter(latch);
                }
                if !self.terminated() {
                    let cur = self.cur;
                    let i = self.read(var, cur);
                    let next = self.define(var, Expr::binary(BinOp::Add, i, Expr::int(1)));
                    self.write(var, cur, next);
                    self.terminate(Term::Goto(head));
                }
                self.finish_loop(head, exit, before);
            }
            Stmt::While { label, cond, body } => {
                let before = self.assigned.clone();
                let head = self.new_block(BlockKind::LoopHead);
                let body_b = self.new_block(BlockKind::LoopBody);
                let exit = self.new_block(BlockKind::Join);
                self.terminate(Term::Goto(head));
                self.enter_head(head, body, None);
                let c = self.rename(cond);
                self.terminate(Term::Cond(c, body_b, exit));
                self.seal(body_b);
                self.enter(body_b);
                self.loops.push(LoopCtx {
                    label: label.clone(),
                    break_to: exit,
                    continue_to: Some(head),
                });
                self.stmts(body);
                self.loops.pop();
                if !self.terminated() {
                    self.terminate(Term::Goto(head));
                }
                self.finish_loop(head, exit, before);
            }
            Stmt::Loop { label, body } => {
                let before = self.assigned.clone();
                let head = self.new_block(BlockKind::LoopHead);
                let exit = self.new_block(BlockKind::Join);
                self.terminate(Term::Goto(head));
                self.enter_head(head, body, None);
                self.loops.push(LoopCtx {
                    label: label.clone(),
                    break_to: exit,
                    continue_to: Some(head),
                });
                self.stmts(body);
                self.loops.pop();
                if !self.terminated() {
                    self.terminate(Term::Goto(head));
                }
                self.finish_loop(head, exit, before);
            }
        }
    }

    fn finish_loop(&mut self, head: usize, exit: usize, before: HashSet<String>) {
        self.seal(head);
        self.seal(exit);
        self.enter(exit);
        self.assigned = before;
    }

    fn finish(mut self) -> SsaProgram {
        // reachability from the entry
        let mut reachable = vec![false; self.blocks.len()];
        let mut stack = vec![0];
        while let Some(b) = stack.pop() {
            if std::mem::replace(&mut reachable[b], true) {
                continue;
            }
            match &self.blocks[b].term {
                Some(Term::Goto(s)) => stack.push(*s),
                Some(Term::Cond(_, x, y)) => stack.extend([*x, *y]),
                _ => {}
            }
        }
        let mut live: Vec<usize> = (0..self.blocks.len()).filter(|&b| reachable[b]).collect();
        live.sort_by_key(|&b| self.blocks[b].order);
        let labels: HashMap<usize, String> = live
            .iter()
            .enumerate()
            .map(|(i, &b)| (b, format!("L{i}")))
            .collect();

        // a variable with a single SSA version takes the bare name
        let mut rename: HashMap<String, String> = HashMap::new();
        let taken: HashSet<String> = self.ast.params.iter().map(|p| p.name.clone()).collect();
        for (base, vs) in &self.versions {
            if let [only] = vs.as_slice() {
                if !taken.contains(base) {
                    rename.insert(only.clone(), base.clone());
                }
            }
        }
        let r = |n: &str| rename.get(n).cloned().unwrap_or_else(|| n.to_string());
        let re = |e: &Expr| e.map_vars(&mut |v| Expr::var(r(v)));

        let mut blocks = Vec::new();
        for &b in &live {
            let bb = &mut self.blocks[b];
            let phis = std::mem::take(&mut bb.phis)
                .into_iter()
                .map(|p| Phi {
                    target: r(&p.target),
                    sources: p
                        .sources
                        .iter()
                        .filter(|(pred, _)| reachable[*pred])
                        .map(|(pred, e)| (labels[pred].clone(), re(e)))
                        .collect(),
                })
                .collect();
            let assigns = bb.assigns.iter().map(|(v, e)| (r(v), re(e))).collect();
            let term = match bb.term.as_ref().expect("every block is terminated") {
                Term::Goto(s) => Terminator::Goto(labels[s].clone()),
                Term::Cond(c, x, y) => Terminator::CondGoto {
                    cond: re(c),
                    then_label: labels[x].clone(),
                    else_label: labels[y].clone(),
                },
                Term::Return(e) => Terminator::Return(re(e)),
            };
            blocks.push(Block {
                label: labels[&b].clone(),
                kind: bb.kind,
                phis,
                assigns,
                term,
            });
        }
        let var_types = self.var_types.iter().map(|(k, t)| (r(k), *t)).collect();
        SsaProgram {
            name: self.ast.name.clone(),
            params: self.ast.params.clone(),
            return_type: self.ast.return_type,
            entry: "L0".into(),
            blocks,
            queries: self.ast.queries.clone(),
            var_types,
        }
    }
}
