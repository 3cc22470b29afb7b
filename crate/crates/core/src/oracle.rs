//! Brute-force reference solvers.
//!
//! Everything here enumerates edge subsets directly and exists to check the
//! branching algorithms; none of it is meant to be fast.

use itertools::Itertools;

use crate::error::{MafError, Result};
use crate::forest::{is_agreement_forest, pieces_after_cut, Instance};
use crate::phylo::{NodeId, PhyloTree, Taxon, TaxonSet};
use crate::split_core::{is_splitting_cut, Bipartition};

/// Default cap on the number of edge subsets examined by one oracle call.
pub const DEFAULT_NODE_LIMIT: u64 = 20_000_000;

#[derive(Clone, Copy, Debug)]
pub struct OracleBudget {
    pub max_cuts: usize,
    pub node_limit: u64,
}

impl OracleBudget {
    pub fn new(max_cuts: usize) -> Self {
        OracleBudget { max_cuts, node_limit: DEFAULT_NODE_LIMIT }
    }
}

/// A minimum agreement forest found by enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteResult {
    pub cuts: usize,
    pub blocks: Vec<TaxonSet>,
}

/// Smallest agreement forest reachable by cutting at most `budget.max_cuts`
/// edges of `t2`; `None` if none exists within the budget.
pub fn brute_maf(t1: &PhyloTree, t2: &PhyloTree, budget: OracleBudget) -> Result<Option<BruteResult>> {
    if t1.kind() != t2.kind() {
        return Err(MafError::KindMismatch);
    }
    if !t1.same_taxa(t2) {
        return Err(MafError::TaxaMismatch);
    }
    let edges: Vec<NodeId> = t2.edge_nodes().collect();
    let mut examined = 0u64;
    for size in 0..=budget.max_cuts.min(edges.len()) {
        for k in edges.iter().copied().combinations(size) {
            examined += 1;
            if examined > budget.node_limit {
                return Err(MafError::NodeLimit(budget.node_limit));
            }
            let blocks = pieces_after_cut(t2, &k);
            if blocks.len() != size + 1 {
                // some cut edge was redundant; a smaller subset covers this partition
                continue;
            }
            if is_agreement_forest(t1, t2, &blocks)? {
                return Ok(Some(BruteResult { cuts: size, blocks }));
            }
        }
    }
    Ok(None)
}

/// Exact solve to depth `t`: tries every way of cutting at most `t` edges.
pub fn depth_limited_solve(t1: &PhyloTree, t2: &PhyloTree, t: usize) -> Result<Option<BruteResult>> {
    brute_maf(t1, t2, OracleBudget::new(t))
}

/// Minimum number of further cuts that turn the forest of `inst` into an
/// agreement forest for its host and component trees, up to `max_cuts`.
/// Blocks are over live taxa.
pub fn brute_instance(inst: &Instance, budget: OracleBudget) -> Result<Option<BruteResult>> {
    let Some(host) = &inst.host else {
        return Ok(Some(BruteResult { cuts: 0, blocks: Vec::new() }));
    };
    let edges: Vec<(usize, NodeId)> =
        inst.comps.iter().enumerate().flat_map(|(i, c)| c.tree.edge_nodes().map(move |v| (i, v))).collect();
    let base = inst.comps.len();
    let mut examined = 0u64;
    for size in 0..=budget.max_cuts.min(edges.len()) {
        for k in edges.iter().copied().combinations(size) {
            examined += 1;
            if examined > budget.node_limit {
                return Err(MafError::NodeLimit(budget.node_limit));
            }
            let mut blocks = Vec::new();
            for (i, c) in inst.comps.iter().enumerate() {
                let mine: Vec<NodeId> = k.iter().filter(|e| e.0 == i).map(|e| e.1).collect();
                blocks.extend(pieces_after_cut(&c.tree, &mine).into_iter().map(|p| (i, p)));
            }
            if blocks.len() != base + size {
                continue;
            }
            let ok = blocks.iter().all(|(i, b)| {
                let c = &inst.comps[*i];
                host.restrict(b).unwrap().same_shape(&c.tree.restrict(b).unwrap())
            }) && {
                let mut used = crate::phylo::BitSet::new();
                blocks.iter().all(|(_, b)| {
                    let e = host.embed(b).unwrap();
                    let free = !e.vertices.intersects(&used);
                    used.union_with(&e.vertices);
                    free
                })
            };
            if ok {
                let mut out: Vec<TaxonSet> = blocks.into_iter().map(|(_, b)| b).collect();
                out.sort();
                return Ok(Some(BruteResult { cuts: size, blocks: out }));
            }
        }
    }
    Ok(None)
}

/// All cuts of at most `max_size` edges that split `tree` with respect to `bip`.
pub fn enumerate_splitting_cuts(tree: &PhyloTree, bip: &Bipartition, max_size: usize) -> Vec<Vec<NodeId>> {
    let edges: Vec<NodeId> = tree.edge_nodes().collect();
    let mut out = Vec::new();
    for size in 1..=max_size.min(edges.len()) {
        for k in edges.iter().copied().combinations(size) {
            if is_splitting_cut(tree, bip, &k) {
                out.push(k);
            }
        }
    }
    out
}

/// Smallest number of edges whose removal leaves no piece with two different
/// states, by enumeration.
pub fn min_separating_cut(tree: &PhyloTree, state: &dyn Fn(Taxon) -> usize) -> usize {
    let edges: Vec<NodeId> = tree.edge_nodes().collect();
    for size in 0..=edges.len() {
        for k in edges.iter().copied().combinations(size) {
            let ok = pieces_after_cut(tree, &k).iter().all(|p| p.iter().map(state).all_equal());
            if ok {
                return size;
            }
        }
    }
    unreachable!("cutting every edge separates all states")
}
