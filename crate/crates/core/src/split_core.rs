//! Splitting cores and the SPLIT branching rule.
//!
//! A cut `K` *splits* a tree with respect to a label bipartition `(Y, Z)` when
//! no piece of `T \ K` holds labels from both sides. A splitting core is a
//! list of cuts such that every splitting cut refines one of them. The
//! construction below keeps `sum 2^-|K| <= 1/2`.

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{MafError, Result};
use crate::forest::{pieces_after_cut, Instance};
use crate::phylo::{BitSet, EdgeRef, NodeId, PhyloTree, TaxonSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    pub y: TaxonSet,
    pub z: TaxonSet,
}

impl Bipartition {
    pub fn new(tree: &PhyloTree, y: TaxonSet) -> Result<Bipartition> {
        if !y.is_subset(tree.taxa()) {
            return Err(MafError::TaxonSet("bipartition side outside the tree".into()));
        }
        let z = tree.taxa().difference(&y);
        if y.is_empty() || z.is_empty() {
            return Err(MafError::TrivialBipartition);
        }
        Ok(Bipartition { y, z })
    }
}

/// Cuts over one tree, each a list of edge lower endpoints.
#[derive(Clone, Debug, Default)]
pub struct SplittingCore {
    pub cuts: Vec<Vec<NodeId>>,
}

#[derive(Serialize)]
pub struct CoreCutJson {
    /// Each edge as the taxon labels on its lower side.
    pub edges: Vec<Vec<String>>,
}

impl SplittingCore {
    pub fn edge_refs(&self, tree: &PhyloTree) -> Vec<Vec<EdgeRef>> {
        self.cuts.iter().map(|k| k.iter().map(|&v| tree.edge_ref(v)).collect()).collect()
    }

    /// `sum 2^-|K| <= 1/2`, in exact integer arithmetic.
    pub fn weight_ok(&self) -> bool {
        weight_at_most_half(self.cuts.iter().map(Vec::len))
    }

    pub fn to_json(&self, tree: &PhyloTree) -> Vec<CoreCutJson> {
        self.cuts
            .iter()
            .map(|k| CoreCutJson { edges: k.iter().map(|&v| tree.label_set(tree.cluster(v))).collect() })
            .collect()
    }
}

/// Exact check of `sum 2^-s <= 1/2` over the given sizes (all at least 1).
pub fn weight_at_most_half(sizes: impl Iterator<Item = usize> + Clone) -> bool {
    let Some(m) = sizes.clone().max() else { return true };
    if sizes.clone().any(|s| s == 0) {
        return false;
    }
    let one = BigUint::from(1u32);
    let total: BigUint = sizes.map(|s| &one << (m - s)).sum();
    total <= &one << (m - 1)
}

/// Undirected view of a tree restricted to a set of alive vertices.
struct View<'a> {
    tree: &'a PhyloTree,
    alive: BitSet,
}

impl View<'_> {
    fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.tree.neighbors(v).filter(|&u| self.alive.contains(u))
    }

    /// Vertices and labels reachable from `start` without passing `from`.
    fn side(&self, start: NodeId, from: NodeId) -> (BitSet, TaxonSet) {
        let mut verts = BitSet::singleton(start);
        let mut labels = TaxonSet::new();
        let mut stack = vec![(start, from)];
        while let Some((v, p)) = stack.pop() {
            if let Some(t) = self.tree.taxon(v) {
                labels.insert(t);
            }
            for u in self.neighbors(v) {
                if u != p {
                    verts.insert(u);
                    stack.push((u, v));
                }
            }
        }
        (verts, labels)
    }

    fn edge_name(&self, u: NodeId, v: NodeId) -> NodeId {
        if self.tree.parent(u) == Some(v) {
            u
        } else {
            v
        }
    }
}

/// Build a splitting core for `bip` over `tree`. Cuts with more than
/// `max_size` edges are not generated (their branches could never fit a
/// budget of that size).
pub fn build_core(tree: &PhyloTree, bip: &Bipartition, max_size: Option<usize>) -> Result<SplittingCore> {
    if bip.y.is_empty() || bip.z.is_empty() || bip.y.intersects(&bip.z) || bip.y.union(&bip.z) != *tree.taxa() {
        return Err(MafError::TrivialBipartition);
    }
    let view = View { tree, alive: BitSet::full(tree.node_count()) };
    let mut core = SplittingCore::default();
    let mut prefix = Vec::new();
    core_rec(view, &bip.y, &bip.z, max_size.unwrap_or(usize::MAX), &mut prefix, &mut core.cuts)?;
    Ok(core)
}

fn core_rec(
    view: View<'_>,
    y: &TaxonSet,
    z: &TaxonSet,
    max_size: usize,
    prefix: &mut Vec<NodeId>,
    out: &mut Vec<Vec<NodeId>>,
) -> Result<()> {
    if prefix.len() + 1 > max_size {
        return Ok(());
    }
    // base case: a single edge separates Y from Z
    for v in view.alive.iter() {
        let Some(p) = view.tree.parent(v) else { continue };
        if !view.alive.contains(p) {
            continue;
        }
        let (_, labels) = view.side(v, p);
        if labels == *y || labels == *z {
            let mut k = prefix.clone();
            k.push(v);
            out.push(k);
            return Ok(());
        }
    }
    // a degree-3 vertex with a pure-Y side, a pure-Z side and a mixed side
    for v in view.alive.iter() {
        let nb: Vec<NodeId> = view.neighbors(v).collect();
        if nb.len() != 3 {
            continue;
        }
        let sides: Vec<(BitSet, TaxonSet)> = nb.iter().map(|&u| view.side(u, v)).collect();
        let pure_y = (0..3).find(|&i| !sides[i].1.is_empty() && sides[i].1.is_subset(y));
        let pure_z = (0..3).find(|&i| !sides[i].1.is_empty() && sides[i].1.is_subset(z));
        let (Some(i), Some(j)) = (pure_y, pure_z) else { continue };
        let mixed = 3 - i - j;
        if !sides[mixed].1.intersects(y) || !sides[mixed].1.intersects(z) {
            continue;
        }
        for (drop, e) in [(i, view.edge_name(nb[i], v)), (j, view.edge_name(nb[j], v))] {
            let alive = view.alive.difference(&sides[drop].0);
            let y2 = y.difference(&sides[drop].1);
            let z2 = z.difference(&sides[drop].1);
            prefix.push(e);
            core_rec(View { tree: view.tree, alive }, &y2, &z2, max_size, prefix, out)?;
            prefix.pop();
        }
        return Ok(());
    }
    Err(MafError::Internal("no splitting vertex found while building a splitting core".into()))
}

/// Whether cut `k` splits `tree` with respect to `bip`.
pub fn is_splitting_cut(tree: &PhyloTree, bip: &Bipartition, k: &[NodeId]) -> bool {
    pieces_after_cut(tree, k).iter().all(|p| !p.intersects(&bip.y) || !p.intersects(&bip.z))
}

/// Whether cut `k1` refines cut `k2`: labels connected after removing `k1`
/// stay connected after removing `k2`.
pub fn refines(tree: &PhyloTree, k1: &[NodeId], k2: &[NodeId]) -> bool {
    let coarse = pieces_after_cut(tree, k2);
    pieces_after_cut(tree, k1).iter().all(|p| coarse.iter().any(|q| p.is_subset(q)))
}

/// One child of the SPLIT rule.
pub struct SplitChild {
    pub inst: Instance,
    pub charge: usize,
    pub core_size: usize,
}

/// Children of the SPLIT rule on the overlapping components `i < j`: for
/// each side, a splitting core of its component tree with respect to the
/// bipartition induced by the shared host edge. Returns the children and the
/// core-cut sizes per side (for auditing).
pub fn split_branches(inst: &Instance, i: usize, j: usize) -> Result<(Vec<SplitChild>, [Vec<usize>; 2])> {
    let host = inst.host.as_ref().ok_or(MafError::NoOverlap)?;
    let emb_i = host.embed(&inst.comps[i].block)?;
    let emb_j = host.embed(&inst.comps[j].block)?;
    if !emb_i.shares_vertex(&emb_j) {
        return Err(MafError::NoOverlap);
    }
    let shared = emb_i.shared_edges(&emb_j);
    let e = shared
        .iter()
        .min_by(|&a, &b| host.cluster(a).cmp(host.cluster(b)))
        .ok_or_else(|| MafError::Internal("overlapping components share no edge".into()))?;
    let below = host.cluster(e);
    let mut children = Vec::new();
    let mut sizes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (side, c) in [i, j].into_iter().enumerate() {
        let comp = &inst.comps[c];
        let bip = Bipartition { y: comp.block.intersection(below), z: comp.block.difference(below) };
        let core = build_core(&comp.tree, &bip, Some(inst.budget))?;
        for k in core.cuts {
            sizes[side].push(k.len());
            let (child, charge) = inst.cut_nodes(c, &k);
            children.push(SplitChild { inst: child, charge, core_size: k.len() });
        }
    }
    Ok((children, sizes))
}
