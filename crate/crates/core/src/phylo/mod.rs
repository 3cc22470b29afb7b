//! Binary phylogenetic trees and the structural queries used by the solvers.

mod bitset;
mod newick;
mod tree;

pub use bitset::BitSet;
pub use newick::{parse_newick, parse_pair, read_tree_lines, tree_lines};
pub use tree::{EdgeRef, Embedding, NodeId, PhyloTree, Taxon, TaxonSet, TreeKind};

use crate::error::{MafError, Result};

/// How a common pendant subtree is compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommonMode {
    /// `T|X* = T'|X*`.
    IgnoringRooting,
    /// `T|(X* + y) = T'|(X* + y)` for a witness taxon `y` outside `X*`.
    IncludingRooting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pendancy {
    pub pendant_in_first: bool,
    pub pendant_in_second: bool,
    pub common: bool,
}

/// Pendancy of `set` in both trees and whether it induces a common pendant
/// subtree under `mode`.
pub fn pendancy_and_common(t1: &PhyloTree, t2: &PhyloTree, set: &TaxonSet, mode: CommonMode) -> Result<Pendancy> {
    if t1.kind() != t2.kind() {
        return Err(MafError::KindMismatch);
    }
    if !t1.same_taxa(t2) {
        return Err(MafError::TaxaMismatch);
    }
    if set.is_empty() || !set.is_subset(t1.taxa()) {
        return Err(MafError::TaxonSet("pendancy of an empty or foreign set".into()));
    }
    if set == t1.taxa() {
        return Err(MafError::TaxonSet("pendancy of the full taxon set".into()));
    }
    let p1 = t1.is_pendant(set);
    let p2 = t2.is_pendant(set);
    let common = p1
        && p2
        && match mode {
            CommonMode::IgnoringRooting => t1.restrict(set)?.same_shape(&t2.restrict(set)?),
            CommonMode::IncludingRooting => {
                let y = t1.taxa().difference(set).first().expect("proper subset");
                let mut with_y = set.clone();
                with_y.insert(y);
                t1.restrict(&with_y)?.same_shape(&t2.restrict(&with_y)?)
            }
        };
    Ok(Pendancy { pendant_in_first: p1, pendant_in_second: p2, common })
}
