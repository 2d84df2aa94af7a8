//! Cleanup to a fixpoint: unreachable blocks, trivial φs, and copies.

use crate::expr::Expr;
use crate::ssa::{Cfg, SsaProgram};

/// Removes unreachable blocks, φs whose operands are all the same value (or
/// the φ itself), and assignments of a bare variable or literal, forwarding
/// the value to every use. Names of surviving definitions are not changed.
pub fn simplify_ssa(p: &SsaProgram) -> SsaProgram {
    let mut p = p.clone();
    loop {
        let pruned = remove_unreachable(&mut p);
        let replaced = match find_redundant(&mut p) {
            Some((name, value)) => {
                p.rewrite_uses(&mut |v| (v == name).then(|| value.clone()));
                true
            }
            None => false,
        };
        if !pruned && !replaced {
            return p;
        }
    }
}

fn remove_unreachable(p: &mut SsaProgram) -> bool {
    let cfg = Cfg::new(p);
    let dead: Vec<String> = (0..p.blocks.len())
        .filter(|&i| !cfg.reachable(i))
        .map(|i| cfg.labels[i].clone())
        .collect();
    if dead.is_empty() {
        return false;
    }
    p.blocks.retain(|b| !dead.contains(&b.label));
    for b in &mut p.blocks {
        for phi in &mut b.phis {
            phi.sources.retain(|(l, _)| !dead.contains(l));
        }
    }
    true
}

/// Detaches one redundant definition, returning its name and replacement.
fn find_redundant(p: &mut SsaProgram) -> Option<(String, Expr)> {
    for b in &mut p.blocks {
        for (i, phi) in b.phis.iter().enumerate() {
            let mut distinct = phi
                .sources
                .iter()
                .map(|(_, e)| e)
                .filter(|e| !matches!(e, Expr::Var(v) if *v == phi.target));
            let first = distinct.next();
            if let Some(first) = first {
                if distinct.all(|e| e == first) {
                    let out = (phi.target.clone(), first.clone());
                    b.phis.remove(i);
                    return Some(out);
                }
            }
        }
        if let Some(i) = b.assigns.iter().position(|(_, e)| e.is_trivial()) {
            return Some(b.assigns.remove(i));
        }
    }
    None
}
