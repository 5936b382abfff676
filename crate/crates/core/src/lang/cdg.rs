//! Control dependence computed from post-dominance.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::PredId;
use super::cfg::{BlockId, Cfg, EdgeKind};

/// One outcome of a predicate; the target of branch-coverage goals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchSide {
    pub pred: PredId,
    pub side: bool,
}

impl fmt::Display for BranchSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}{}", self.pred, if self.side { "T" } else { "F" })
    }
}

/// Immediate control dependencies of every block of one method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlDependencyGraph {
    pub deps: Vec<BTreeSet<BranchSide>>,
    pub ipdom: Vec<Option<BlockId>>,
    /// Blocks that run on every entry to the method (they post-dominate the
    /// entry block). Such a block may still depend on branches, e.g. a loop
    /// header reached again through the body.
    pub entry: Vec<bool>,
}

impl ControlDependencyGraph {
    pub fn deps(&self, block: BlockId) -> &BTreeSet<BranchSide> {
        &self.deps[block as usize]
    }

    pub fn on_entry(&self, block: BlockId) -> bool {
        self.entry[block as usize]
    }
}

/// Post-dominator sets as bit vectors, one row per block.
fn post_dominators(cfg: &Cfg) -> Vec<Vec<bool>> {
    let n = cfg.blocks.len();
    let exit = cfg.exit as usize;
    let mut pdom = vec![vec![true; n]; n];
    pdom[exit] = vec![false; n];
    pdom[exit][exit] = true;
    let succs: Vec<Vec<usize>> =
        (0..n).map(|b| cfg.successors(b as BlockId).map(|e| e.to as usize).collect()).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for b in (0..n).rev() {
            if b == exit {
                continue;
            }
            let mut row = vec![succs[b].is_empty(); n];
            if let Some((&first, rest)) = succs[b].split_first() {
                row.clone_from(&pdom[first]);
                for &s in rest {
                    for (r, &p) in row.iter_mut().zip(&pdom[s]) {
                        *r &= p;
                    }
                }
            }
            row[b] = true;
            if row != pdom[b] {
                pdom[b] = row;
                changed = true;
            }
        }
    }
    pdom
}

pub fn build_cdg(cfg: &Cfg) -> ControlDependencyGraph {
    let n = cfg.blocks.len();
    let pdom = post_dominators(cfg);
    let ipdom: Vec<Option<BlockId>> = (0..n)
        .map(|b| {
            // Post-dominators form a chain; the nearest strict one has the largest set.
            (0..n)
                .filter(|&d| d != b && pdom[b][d])
                .max_by_key(|&d| pdom[d].iter().filter(|&&x| x).count())
                .map(|d| d as BlockId)
        })
        .collect();

    let mut deps = vec![BTreeSet::new(); n];
    for edge in &cfg.edges {
        let side = match edge.kind {
            EdgeKind::True => true,
            EdgeKind::False => false,
            _ => continue,
        };
        let Some(pred) = cfg.blocks[edge.from as usize].predicate else { continue };
        let stop = ipdom[edge.from as usize];
        let mut runner = Some(edge.to);
        while let Some(r) = runner {
            if Some(r) == stop {
                break;
            }
            if r != edge.from {
                deps[r as usize].insert(BranchSide { pred, side });
            }
            runner = ipdom[r as usize];
        }
    }
    let mut entry = vec![false; n];
    let mut runner = Some(cfg.entry);
    while let Some(r) = runner {
        if r == cfg.exit {
            break;
        }
        entry[r as usize] = true;
        runner = ipdom[r as usize];
    }
    ControlDependencyGraph { deps, ipdom, entry }
}
