//! Tree–forest instances of the branching search.
//!
//! An [`Instance`] pairs a host tree with a forest obtained by cutting the
//! other input tree. The host always stays connected; it is the restriction
//! of its input tree to the taxa that are still live. Taxa leave the live set
//! when they form singleton components or when a whole block is certified
//! final; collapsed common cherries keep the smaller taxon id and record the
//! absorbed original taxa in `origin`.

use std::sync::Arc;

use crate::error::{MafError, Result};
use crate::phylo::{BitSet, EdgeRef, Embedding, NodeId, PhyloTree, Taxon, TaxonSet, TreeKind};

/// A forest component: a block of live taxa and the other tree restricted to it.
#[derive(Clone, Debug)]
pub struct Component {
    pub block: TaxonSet,
    pub tree: PhyloTree,
}

impl Component {
    pub fn new(tree: PhyloTree) -> Component {
        Component { block: tree.taxa().clone(), tree }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    /// `None` once every taxon has been finalized.
    pub host: Option<PhyloTree>,
    pub comps: Vec<Component>,
    /// Final blocks over original taxa.
    pub finalized: Vec<TaxonSet>,
    /// Original taxa represented by each live taxon id.
    pub origin: Arc<Vec<TaxonSet>>,
    pub budget: usize,
}

/// The result of [`Instance::overlap_analysis`].
#[derive(Clone, Debug)]
pub struct Overlap {
    pub disjoint: bool,
    /// Pairs `(i, j)` with `i < j` whose host embeddings share a vertex.
    pub pairs: Vec<(usize, usize)>,
    /// Shared host edges per pair, in canonical order.
    pub shared_edges: Vec<Vec<EdgeRef>>,
}

/// Edges hanging off the path between two taxa of one component.
#[derive(Clone, Debug)]
pub struct CherryPath {
    pub same_component: bool,
    pub comp: usize,
    pub t: usize,
    /// Lower endpoints (in the component tree) of the incident edges, ordered
    /// from `a` towards `b`.
    pub edges: Vec<NodeId>,
    /// Taxa beyond each incident edge, aligned with `edges`.
    pub pendant: Vec<TaxonSet>,
}

impl Instance {
    /// The starting instance for the pair `(host, other)`.
    pub fn new(host: &PhyloTree, other: &PhyloTree, budget: usize) -> Result<Instance> {
        if host.kind() != other.kind() {
            return Err(MafError::KindMismatch);
        }
        if !host.same_taxa(other) {
            return Err(MafError::TaxaMismatch);
        }
        let origin = (0..host.labels().len()).map(BitSet::singleton).collect();
        Ok(Instance {
            host: Some(host.clone()),
            comps: vec![Component::new(other.clone())],
            finalized: Vec::new(),
            origin: Arc::new(origin),
            budget,
        })
    }

    /// A tree–tree instance over an existing origin map.
    pub(crate) fn pair(host: PhyloTree, other: PhyloTree, origin: Arc<Vec<TaxonSet>>, budget: usize) -> Instance {
        Instance { host: Some(host), comps: vec![Component::new(other)], finalized: Vec::new(), origin, budget }
    }

    pub fn kind(&self) -> Option<TreeKind> {
        self.host.as_ref().map(|h| h.kind())
    }

    pub fn live_taxa(&self) -> TaxonSet {
        self.host.as_ref().map(|h| h.taxa().clone()).unwrap_or_default()
    }

    pub fn is_tree_tree(&self) -> bool {
        self.comps.len() == 1
    }

    /// Index of the component holding each live taxon.
    pub fn comp_of(&self) -> Vec<usize> {
        let n = self.origin.len();
        let mut out = vec![usize::MAX; n];
        for (i, c) in self.comps.iter().enumerate() {
            for t in c.block.iter() {
                out[t] = i;
            }
        }
        out
    }

    /// Original taxa of a set of live taxa.
    pub fn expand(&self, set: &TaxonSet) -> TaxonSet {
        let mut out = TaxonSet::new();
        for t in set.iter() {
            out.union_with(&self.origin[t]);
        }
        out
    }

    /// The host and the single component exchange roles.
    pub fn swapped(&self) -> Instance {
        debug_assert!(self.is_tree_tree());
        let host = self.host.clone().expect("tree-tree instance has a host");
        let other = self.comps[0].tree.clone();
        Instance {
            host: Some(other),
            comps: vec![Component::new(host)],
            finalized: self.finalized.clone(),
            origin: self.origin.clone(),
            budget: self.budget,
        }
    }

    /// Cut one edge of a component.
    pub fn cut(&self, comp: usize, edge: &EdgeRef) -> Result<Instance> {
        if self.budget == 0 {
            return Err(MafError::BudgetExhausted);
        }
        let c = self.comps.get(comp).ok_or(MafError::EdgeNotInTree)?;
        let v = c.tree.edge_node(edge).ok_or(MafError::EdgeNotInTree)?;
        let (child, _) = self.cut_nodes(comp, &[v]);
        Ok(child)
    }

    /// Cut several edges (lower endpoints in the component tree) of one
    /// component at once. Returns the child and the number of extra
    /// components created; the budget is reduced by that number, saturating.
    pub fn cut_nodes(&self, comp: usize, nodes: &[NodeId]) -> (Instance, usize) {
        let pieces = pieces_after_cut(&self.comps[comp].tree, nodes);
        let added = pieces.len().saturating_sub(1);
        let mut child = self.clone();
        let old = child.comps.remove(comp);
        for (offset, p) in pieces.into_iter().enumerate() {
            let tree = if p == old.block { old.tree.clone() } else { old.tree.restrict(&p).expect("piece of a component") };
            child.comps.insert(comp + offset, Component { block: p, tree });
        }
        child.comps.sort_by(|x, y| x.block.cmp(&y.block));
        child.budget = child.budget.saturating_sub(added);
        (child, added)
    }

    /// Replace components `which` by the given blocks (each inside one of
    /// them). Returns the child and the number of extra components.
    pub(crate) fn refine(&self, which: &[usize], blocks: Vec<TaxonSet>) -> (Instance, usize) {
        let mut child = self.clone();
        let mut sources: Vec<Component> = Vec::new();
        let mut keep = Vec::new();
        for (i, c) in child.comps.drain(..).enumerate() {
            if which.contains(&i) {
                sources.push(c);
            } else {
                keep.push(c);
            }
        }
        let added = blocks.len().saturating_sub(sources.len());
        for b in blocks {
            let src = sources.iter().find(|c| b.is_subset(&c.block)).expect("refining block inside a component");
            let tree = src.tree.restrict(&b).expect("block inside component");
            keep.push(Component { block: b, tree });
        }
        keep.sort_by(|x, y| x.block.cmp(&y.block));
        child.comps = keep;
        child.budget = child.budget.saturating_sub(added);
        (child, added)
    }

    /// Remove a whole block from the live instance and record it as final.
    /// The block must be a union of whole components or equal one component;
    /// components it intersects are restricted to the remainder.
    pub(crate) fn finalize_block(&mut self, block: &TaxonSet) {
        self.finalized.push(self.expand(block));
        self.remove_taxa(block);
    }

    fn remove_taxa(&mut self, gone: &TaxonSet) {
        let Some(host) = &self.host else { return };
        let rest = host.taxa().difference(gone);
        self.host = if rest.is_empty() { None } else { Some(host.restrict(&rest).expect("subset of host taxa")) };
        let mut comps = Vec::with_capacity(self.comps.len());
        for c in self.comps.drain(..) {
            if !c.block.intersects(gone) {
                comps.push(c);
                continue;
            }
            let b = c.block.difference(gone);
            if !b.is_empty() {
                let tree = c.tree.restrict(&b).expect("subset of component");
                comps.push(Component { block: b, tree });
            }
        }
        comps.sort_by(|x, y| x.block.cmp(&y.block));
        self.comps = comps;
    }

    /// Apply the tidy-up reductions to exhaustion: singleton components are
    /// finalized and removed, then common cherries are collapsed, until
    /// nothing changes. Degree-2 vertices never exist, since every tree is
    /// kept in restricted form.
    pub fn tidy(&mut self) {
        loop {
            let singles: TaxonSet = self.comps.iter().filter(|c| c.block.len() == 1).map(|c| c.block.first().unwrap()).collect();
            if !singles.is_empty() {
                for t in singles.iter() {
                    self.finalized.push(self.origin[t].clone());
                }
                self.remove_taxa(&singles);
                continue;
            }
            let Some(host) = &self.host else { return };
            let comp_of = self.comp_of();
            let common = host.cherries().into_iter().find(|&(a, b)| {
                let i = comp_of[a];
                i == comp_of[b] && self.comps[i].tree.is_cherry(a, b)
            });
            match common {
                Some((a, b)) => self.collapse(a, b),
                None => return,
            }
        }
    }

    /// Merge taxon `b` into `a` (a common cherry).
    fn collapse(&mut self, a: Taxon, b: Taxon) {
        let origin = Arc::make_mut(&mut self.origin);
        let moved = std::mem::take(&mut origin[b]);
        origin[a].union_with(&moved);
        self.remove_taxa(&BitSet::singleton(b));
    }

    /// Host embeddings of all components.
    pub fn embeddings(&self) -> Vec<Embedding> {
        let host = self.host.as_ref().expect("live instance");
        self.comps.iter().map(|c| host.embed(&c.block).expect("block inside host")).collect()
    }

    pub fn overlap_analysis(&self) -> Overlap {
        let Some(host) = &self.host else {
            return Overlap { disjoint: true, pairs: Vec::new(), shared_edges: Vec::new() };
        };
        let emb = self.embeddings();
        let mut pairs = Vec::new();
        let mut shared_edges = Vec::new();
        for i in 0..emb.len() {
            for j in i + 1..emb.len() {
                if emb[i].shares_vertex(&emb[j]) {
                    pairs.push((i, j));
                    let mut edges: Vec<EdgeRef> = emb[i].shared_edges(&emb[j]).iter().map(|v| host.edge_ref(v)).collect();
                    edges.sort();
                    shared_edges.push(edges);
                }
            }
        }
        Overlap { disjoint: pairs.is_empty(), pairs, shared_edges }
    }

    /// Whether component `i` is homeomorphic to the host restricted to its block.
    pub fn is_homeomorphic(&self, i: usize) -> bool {
        let host = self.host.as_ref().expect("live instance");
        let c = &self.comps[i];
        c.block.len() <= 1 || host.restrict(&c.block).map(|h| h.same_shape(&c.tree)).unwrap_or(false)
    }

    /// No further cuts are needed: the live blocks already form an agreement
    /// forest for the host and the component trees.
    pub fn is_terminal(&self) -> bool {
        self.host.is_none() || ((0..self.comps.len()).all(|i| self.is_homeomorphic(i)) && self.overlap_analysis().disjoint)
    }

    /// The forest over original taxa if the live blocks are kept as they are.
    pub fn forest(&self) -> Vec<TaxonSet> {
        let mut out = self.finalized.clone();
        out.extend(self.comps.iter().map(|c| self.expand(&c.block)));
        out.sort();
        out
    }

    /// Edges incident to the `a`–`b` path of the component holding both.
    ///
    /// Unrooted: edges with exactly one endpoint on the path. Rooted: arcs
    /// whose tail is on the path and whose head is not; the arc entering the
    /// top of the path is excluded.
    pub fn cherry_path(&self, a: Taxon, b: Taxon) -> Result<CherryPath> {
        let host = self.host.as_ref().ok_or_else(|| MafError::TaxonSet("empty instance".into()))?;
        if !host.is_cherry(a, b) {
            return Err(MafError::NotACherry(host.label(a).to_string(), host.label(b).to_string()));
        }
        let comp_of = self.comp_of();
        let i = comp_of[a];
        if i != comp_of[b] {
            return Ok(CherryPath { same_component: false, comp: i, t: 0, edges: Vec::new(), pendant: Vec::new() });
        }
        let (edges, pendant) = path_attachments(&self.comps[i].tree, a, b)?;
        Ok(CherryPath { same_component: true, comp: i, t: edges.len(), edges, pendant })
    }
}

/// Edges hanging off the path between leaves `a` and `b` of `tree`, ordered
/// from `a`, with the taxa beyond each.
pub(crate) fn path_attachments(tree: &PhyloTree, a: Taxon, b: Taxon) -> Result<(Vec<NodeId>, Vec<TaxonSet>)> {
    let path = tree.path(a, b)?;
    let top = path.iter().copied().min_by_key(|&v| tree.depth(v)).unwrap();
    let mut edges = Vec::new();
    let mut pendant = Vec::new();
    for w in path.windows(3) {
        let v = w[1];
        if tree.is_rooted() && v == top {
            continue;
        }
        for u in tree.neighbors(v) {
            if u == w[0] || u == w[2] {
                continue;
            }
            if tree.parent(v) == Some(u) {
                edges.push(v);
                pendant.push(tree.taxa().difference(tree.cluster(v)));
            } else {
                edges.push(u);
                pendant.push(tree.cluster(u).clone());
            }
        }
    }
    Ok((edges, pendant))
}

/// Label sets of the pieces left after deleting edges (lower endpoints) from a
/// tree; pieces without taxa are dropped. Sorted canonically.
pub fn pieces_after_cut(tree: &PhyloTree, cut: &[NodeId]) -> Vec<TaxonSet> {
    let n = tree.node_count();
    let mut is_cut = vec![false; n];
    for &v in cut {
        is_cut[v] = true;
    }
    // union by walking down: each node joins its parent's piece unless cut
    let mut piece = vec![usize::MAX; n];
    let mut sets: Vec<TaxonSet> = Vec::new();
    for v in 0..n {
        let id = match tree.parent(v) {
            Some(p) if !is_cut[v] => piece[p],
            _ => {
                sets.push(TaxonSet::new());
                sets.len() - 1
            }
        };
        piece[v] = id;
        if let Some(t) = tree.taxon(v) {
            sets[id].insert(t);
        }
    }
    sets.retain(|s| !s.is_empty());
    sets.sort();
    sets
}

/// Whether `partition` is an agreement forest for `t1` and `t2`: every block
/// induces the same tree in both, and the embeddings of the blocks are
/// pairwise vertex-disjoint in both trees.
pub fn is_agreement_forest(t1: &PhyloTree, t2: &PhyloTree, partition: &[TaxonSet]) -> Result<bool> {
    if t1.kind() != t2.kind() {
        return Err(MafError::KindMismatch);
    }
    if !t1.same_taxa(t2) {
        return Err(MafError::TaxaMismatch);
    }
    let mut seen = TaxonSet::new();
    for b in partition {
        if b.is_empty() || b.intersects(&seen) {
            return Err(MafError::NotAPartition);
        }
        seen.union_with(b);
    }
    if &seen != t1.taxa() {
        return Err(MafError::NotAPartition);
    }
    for b in partition {
        if !t1.restrict(b)?.same_shape(&t2.restrict(b)?) {
            return Ok(false);
        }
    }
    Ok(blocks_disjoint(t1, partition)? && blocks_disjoint(t2, partition)?)
}

fn blocks_disjoint(t: &PhyloTree, partition: &[TaxonSet]) -> Result<bool> {
    let mut used = BitSet::new();
    for b in partition {
        let e = t.embed(b)?;
        if e.vertices.intersects(&used) {
            return Ok(false);
        }
        used.union_with(&e.vertices);
    }
    Ok(true)
}
