//! Structural checks: labels, φ/predecessor agreement, single assignment,
//! and definitions dominating their uses.

use std::collections::HashMap;

use crate::expr::Expr;
use crate::ssa::{Cfg, SsaProgram, Terminator};

/// Where a name is defined: block index and position (φs are 0, assignment `i` is `i + 1`).
type Site = Option<(usize, usize)>;

/// Returns every violated invariant; an empty list means the program is well formed.
pub fn verify<'a>(p: &'a SsaProgram) -> Vec<String> {
    let mut errs = Vec::new();
    let mut labels = HashMap::new();
    for b in &p.blocks {
        if labels.insert(b.label.as_str(), ()).is_some() {
            errs.push(format!("duplicate label {}", b.label));
        }
    }
    if !labels.contains_key(p.entry.as_str()) {
        errs.push(format!("missing entry block {}", p.entry));
    }
    for b in &p.blocks {
        for s in b.term.successors() {
            if !labels.contains_key(s) {
                errs.push(format!("{} jumps to unknown label {s}", b.label));
            }
        }
    }
    if !errs.is_empty() {
        return errs;
    }
    let cfg = Cfg::new(p);

    let mut defs: HashMap<&str, Site> = HashMap::new();
    let mut define = |name: &'a str, site: Site, errs: &mut Vec<String>| {
        if defs.insert(name, site).is_some() {
            errs.push(format!("{name} is assigned more than once"));
        }
    };
    for param in &p.params {
        define(&param.name, None, &mut errs);
    }
    for (bi, b) in p.blocks.iter().enumerate() {
        for phi in &b.phis {
            define(&phi.target, Some((bi, 0)), &mut errs);
        }
        for (i, (v, _)) in b.assigns.iter().enumerate() {
            define(v, Some((bi, i + 1)), &mut errs);
        }
    }

    let check_use = |e: &Expr, block: usize, pos: usize, errs: &mut Vec<String>| {
        e.walk(&mut |x| match x {
            Expr::Var(v) => match defs.get(v.as_str()) {
                None => errs.push(format!(
                    "{v} used in {} but never defined",
                    cfg.labels[block]
                )),
                Some(None) => {}
                Some(Some((db, dpos))) => {
                    let ok = if *db == block {
                        *dpos < pos
                    } else {
                        cfg.dominates(*db, block)
                    };
                    if !ok {
                        errs.push(format!(
                            "definition of {v} does not dominate its use in {}",
                            cfg.labels[block]
                        ));
                    }
                }
            },
            Expr::Apply { func, .. } => {
                errs.push(format!("call to {func} in {}", cfg.labels[block]))
            }
            _ => {}
        });
    };

    for (bi, b) in p.blocks.iter().enumerate() {
        if !cfg.reachable(bi) {
            errs.push(format!("{} is unreachable", b.label));
            continue;
        }
        let mut preds: Vec<&str> = cfg.preds[bi]
            .iter()
            .map(|&i| cfg.labels[i].as_str())
            .collect();
        preds.sort_unstable();
        for phi in &b.phis {
            let mut srcs: Vec<&str> = phi.sources.iter().map(|(l, _)| l.as_str()).collect();
            srcs.sort_unstable();
            if srcs != preds {
                errs.push(format!(
                    "phi for {} in {} does not match the predecessors",
                    phi.target, b.label
                ));
            }
            for (l, e) in &phi.sources {
                if !e.is_trivial() {
                    errs.push(format!("phi for {} has a compound operand", phi.target));
                }
                if let Some(pi) = cfg.index(l) {
                    check_use(e, pi, usize::MAX, &mut errs);
                }
            }
        }
        for (i, (_, e)) in b.assigns.iter().enumerate() {
            check_use(e, bi, i + 1, &mut errs);
        }
        match &b.term {
            Terminator::Goto(_) => {}
            Terminator::CondGoto { cond: e, .. } | Terminator::Return(e) => {
                check_use(e, bi, usize::MAX, &mut errs)
            }
        }
    }
    errs
}
