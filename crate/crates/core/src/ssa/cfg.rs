//! Control-flow graph queries over an [`SsaProgram`]: predecessors,
//! reverse postorder, and immediate dominators.

use std::collections::HashMap;

use crate::ssa::SsaProgram;

#[derive(Debug, Clone)]
pub struct Cfg {
    pub labels: Vec<String>,
    index: HashMap<String, usize>,
    pub preds: Vec<Vec<usize>>,
    pub succs: Vec<Vec<usize>>,
    /// Blocks reachable from the entry, in reverse postorder.
    pub rpo: Vec<usize>,
    /// Immediate dominator; the entry and unreachable blocks map to `None`.
    pub idom: Vec<Option<usize>>,
}

impl Cfg {
    /// Panics if a terminator names a missing label; run [`verify`](super::verify) first on untrusted input.
    pub fn new(p: &SsaProgram) -> Cfg {
        let labels: Vec<String> = p.blocks.iter().map(|b| b.label.clone()).collect();
        let index: HashMap<String, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let n = labels.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for (i, b) in p.blocks.iter().enumerate() {
            for s in b.term.successors() {
                let j = index[s];
                succs[i].push(j);
                preds[j].push(i);
            }
        }
        let entry = index.get(&p.entry).copied();
        let mut post = Vec::new();
        let mut seen = vec![false; n];
        if let Some(e) = entry {
            // iterative DFS postorder
            let mut stack = vec![(e, 0usize)];
            seen[e] = true;
            while let Some((b, k)) = stack.pop() {
                if k < succs[b].len() {
                    stack.push((b, k + 1));
                    let s = succs[b][k];
                    if !seen[s] {
                        seen[s] = true;
                        stack.push((s, 0));
                    }
                } else {
                    post.push(b);
                }
            }
        }
        let rpo: Vec<usize> = post.into_iter().rev().collect();
        let idom = dominators(&rpo, &preds, n);
        Cfg {
            labels,
            index,
            preds,
            succs,
            rpo,
            idom,
        }
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn reachable(&self, b: usize) -> bool {
        self.rpo.contains(&b)
    }

    /// Whether `a` dominates `b` (reflexively).
    pub fn dominates(&self, a: usize, b: usize) -> bool {
        let mut cur = Some(b);
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.idom[c];
        }
        false
    }
}

/// Cooper–Harvey–Kennedy iterative dominators.
fn dominators(rpo: &[usize], preds: &[Vec<usize>], n: usize) -> Vec<Option<usize>> {
    let Some(&entry) = rpo.first() else {
        return vec![None; n];
    };
    let mut order = vec![usize::MAX; n];
    for (i, &b) in rpo.iter().enumerate() {
        order[b] = i;
    }
    let mut idom: Vec<Option<usize>> = vec![None; n];
    idom[entry] = Some(entry);
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &rpo[1..] {
            let mut new: Option<usize> = None;
            for &p in &preds[b] {
                if idom[p].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => p,
                    Some(q) => {
                        let (mut x, mut y) = (p, q);
                        while x != y {
                            while order[x] > order[y] {
                                x = idom[x].expect("processed");
                            }
                            while order[y] > order[x] {
                                y = idom[y].expect("processed");
                            }
                        }
                        x
                    }
                });
            }
            if new.is_some() && idom[b] != new {
                idom[b] = new;
                changed = true;
            }
        }
    }
    idom[entry] = None;
    idom
}
