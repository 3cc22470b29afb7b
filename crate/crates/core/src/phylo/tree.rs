//! Immutable binary phylogenetic trees.
//!
//! Both kinds share one representation. A rooted tree is stored from its
//! root. An unrooted tree is *planted* at the leaf carrying its smallest
//! taxon: node 0 is that leaf and has a single child, and every other
//! internal node has two children. Either way, every non-root node `v`
//! stands for exactly one edge (the edge between `v` and its parent), and
//! that edge is named by the taxon cluster below `v`. For unrooted trees this
//! is the side of the split that avoids the smallest taxon.
//!
//! Nodes are kept in a canonical preorder (children sorted by the smallest
//! taxon below them), so two trees are homeomorphic exactly when their node
//! arrays coincide.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::bitset::BitSet;
use crate::error::{MafError, Result};

/// Taxon identifier: the rank of the label within the tree's label universe.
pub type Taxon = usize;

/// A set of taxa.
pub type TaxonSet = BitSet;

/// Node index inside one [`PhyloTree`].
pub type NodeId = usize;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Rooted,
    Unrooted,
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeKind::Rooted => f.write_str("rooted"),
            TreeKind::Unrooted => f.write_str("unrooted"),
        }
    }
}

/// Identity of an edge: the taxon cluster on its canonical side.
///
/// Stable under restriction-free edits such as suppression of degree-2
/// vertices, since it never mentions vertex ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef(pub TaxonSet);

impl EdgeRef {
    pub fn cluster(&self) -> &TaxonSet {
        &self.0
    }
}

#[derive(Clone, Debug)]
struct Node {
    parent: u32,
    children: SmallVec<[u32; 2]>,
    taxon: u32,
    cluster: TaxonSet,
    /// One past the last preorder index of this node's subtree.
    end: u32,
    depth: u32,
}

/// The vertex and edge sets of the minimal subtree spanning a taxon set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    /// Highest vertex of the embedding in the stored orientation.
    pub top: NodeId,
    pub vertices: BitSet,
    /// Edges, each given by its lower endpoint.
    pub edges: BitSet,
}

impl Embedding {
    pub fn shares_vertex(&self, other: &Embedding) -> bool {
        self.vertices.intersects(&other.vertices)
    }

    pub fn shared_edges(&self, other: &Embedding) -> BitSet {
        self.edges.intersection(&other.edges)
    }
}

#[derive(Clone)]
pub struct PhyloTree {
    kind: TreeKind,
    labels: Arc<[String]>,
    taxa: TaxonSet,
    nodes: Vec<Node>,
    leaf: Vec<u32>,
}

/// Intermediate tree produced while compressing a source structure.
struct Draft {
    taxon: Vec<Option<Taxon>>,
    children: Vec<SmallVec<[usize; 2]>>,
}

impl Draft {
    fn new() -> Self {
        Draft { taxon: Vec::new(), children: Vec::new() }
    }

    fn push(&mut self, taxon: Option<Taxon>, children: SmallVec<[usize; 2]>) -> usize {
        self.taxon.push(taxon);
        self.children.push(children);
        self.taxon.len() - 1
    }
}

impl PhyloTree {
    /// Build a tree from an undirected adjacency structure.
    ///
    /// Vertices whose taxon is rejected by `keep` are treated as unlabeled;
    /// unlabeled leaves are pruned and unlabeled degree-2 vertices (for rooted
    /// trees: unlabeled nodes left with one child) are suppressed. `root` is
    /// required for rooted trees and ignored for unrooted ones.
    pub(crate) fn from_graph<N, I>(
        kind: TreeKind,
        labels: Arc<[String]>,
        vertex_count: usize,
        neighbors: N,
        taxon_of: &dyn Fn(usize) -> Option<Taxon>,
        keep: &dyn Fn(Taxon) -> bool,
        root: Option<usize>,
    ) -> Result<PhyloTree>
    where
        N: Fn(usize) -> I,
        I: Iterator<Item = usize>,
    {
        let label_of = |v: usize| taxon_of(v).filter(|&t| keep(t));
        let mut draft = Draft::new();

        fn compress<N, I>(
            v: usize,
            from: Option<usize>,
            neighbors: &N,
            label_of: &dyn Fn(usize) -> Option<Taxon>,
            draft: &mut Draft,
        ) -> Result<Option<usize>>
        where
            N: Fn(usize) -> I,
            I: Iterator<Item = usize>,
        {
            let mut kids: SmallVec<[usize; 2]> = SmallVec::new();
            for w in neighbors(v) {
                if Some(w) == from {
                    continue;
                }
                if let Some(d) = compress(w, Some(v), neighbors, label_of, draft)? {
                    kids.push(d);
                }
            }
            match (label_of(v), kids.len()) {
                (Some(t), 0) => Ok(Some(draft.push(Some(t), SmallVec::new()))),
                (Some(_), _) => Err(MafError::Degree("labelled vertex is not a leaf".into())),
                (None, 0) => Ok(None),
                (None, 1) => Ok(Some(kids[0])),
                (None, 2) => Ok(Some(draft.push(None, kids))),
                (None, d) => Err(MafError::Degree(format!("vertex with {} child subtrees", d))),
            }
        }

        let top = match kind {
            TreeKind::Rooted => {
                let root = root.ok_or_else(|| MafError::Internal("rooted build without root".into()))?;
                compress(root, None, &neighbors, &label_of, &mut draft)?
            }
            TreeKind::Unrooted => {
                // plant at the leaf carrying the smallest kept taxon
                let anchor = (0..vertex_count)
                    .filter_map(|v| label_of(v).map(|t| (t, v)))
                    .min()
                    .map(|(_, v)| v);
                match anchor {
                    None => None,
                    Some(a) => {
                        let mut kids: SmallVec<[usize; 2]> = SmallVec::new();
                        for w in neighbors(a) {
                            if let Some(d) = compress(w, Some(a), &neighbors, &label_of, &mut draft)? {
                                kids.push(d);
                            }
                        }
                        if kids.len() > 1 {
                            return Err(MafError::Degree("labelled vertex is not a leaf".into()));
                        }
                        Some(draft.push(label_of(a), kids))
                    }
                }
            }
        };
        let top = top.ok_or_else(|| MafError::TaxonSet("no taxa".into()))?;
        Ok(Self::from_draft(kind, labels, &draft, top))
    }

    fn from_draft(kind: TreeKind, labels: Arc<[String]>, draft: &Draft, top: usize) -> PhyloTree {
        let n = draft.taxon.len();
        let mut min_below = vec![usize::MAX; n];
        // draft children always precede their parents
        for v in 0..n {
            let mut m = draft.taxon[v].unwrap_or(usize::MAX);
            for &c in &draft.children[v] {
                m = m.min(min_below[c]);
            }
            min_below[v] = m;
        }
        let mut nodes: Vec<Node> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, u32, u32)> = vec![(top, NONE, 0)];
        while let Some((d, parent, depth)) = stack.pop() {
            let id = nodes.len() as u32;
            nodes.push(Node {
                parent,
                children: SmallVec::new(),
                taxon: draft.taxon[d].map(|t| t as u32).unwrap_or(NONE),
                cluster: TaxonSet::new(),
                end: 0,
                depth,
            });
            if parent != NONE {
                nodes[parent as usize].children.push(id);
            }
            let mut kids: SmallVec<[usize; 2]> = draft.children[d].clone();
            kids.sort_by_key(|&c| min_below[c]);
            for &c in kids.iter().rev() {
                stack.push((c, id, depth + 1));
            }
        }
        let mut leaf = vec![NONE; labels.len()];
        for v in (0..nodes.len()).rev() {
            let mut cl = TaxonSet::new();
            if nodes[v].taxon != NONE {
                cl.insert(nodes[v].taxon as usize);
                leaf[nodes[v].taxon as usize] = v as u32;
            }
            let mut end = v as u32 + 1;
            for i in 0..nodes[v].children.len() {
                let c = nodes[v].children[i] as usize;
                cl.union_with(&nodes[c].cluster);
                end = end.max(nodes[c].end);
            }
            nodes[v].cluster = cl;
            nodes[v].end = end;
        }
        let taxa = nodes[0].cluster.clone();
        PhyloTree { kind, labels, taxa, nodes, leaf }
    }

    /// A tree with a single leaf.
    pub fn single_leaf(kind: TreeKind, labels: Arc<[String]>, taxon: Taxon) -> PhyloTree {
        let mut d = Draft::new();
        let top = d.push(Some(taxon), SmallVec::new());
        Self::from_draft(kind, labels, &d, top)
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn is_rooted(&self) -> bool {
        self.kind == TreeKind::Rooted
    }

    /// The label universe shared by all trees derived from the same input.
    pub fn labels(&self) -> &Arc<[String]> {
        &self.labels
    }

    pub fn label(&self, t: Taxon) -> &str {
        &self.labels[t]
    }

    pub fn taxa(&self) -> &TaxonSet {
        &self.taxa
    }

    pub fn num_taxa(&self) -> usize {
        self.taxa.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.nodes[v].parent;
        (p != NONE).then_some(p as usize)
    }

    pub fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[v].children.iter().map(|&c| c as usize)
    }

    pub fn child_count(&self, v: NodeId) -> usize {
        self.nodes[v].children.len()
    }

    /// Undirected neighbours.
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.parent(v).into_iter().chain(self.children(v))
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.nodes[v].children.len() + usize::from(self.nodes[v].parent != NONE)
    }

    pub fn taxon(&self, v: NodeId) -> Option<Taxon> {
        let t = self.nodes[v].taxon;
        (t != NONE).then_some(t as usize)
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.nodes[v].taxon != NONE
    }

    pub fn cluster(&self, v: NodeId) -> &TaxonSet {
        &self.nodes[v].cluster
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.nodes[v].depth as usize
    }

    pub fn leaf_node(&self, t: Taxon) -> Option<NodeId> {
        match self.leaf.get(t) {
            Some(&v) if v != NONE => Some(v as usize),
            _ => None,
        }
    }

    fn leaf_of(&self, t: Taxon) -> Result<NodeId> {
        self.leaf_node(t)
            .ok_or_else(|| MafError::TaxonSet(format!("taxon {} is not in the tree", t)))
    }

    /// `true` if `v` lies in the subtree of `u` (stored orientation).
    pub fn is_descendant(&self, v: NodeId, u: NodeId) -> bool {
        u <= v && (v as u32) < self.nodes[u].end
    }

    /// All edges, each named by its lower endpoint (every non-root node).
    pub fn edge_nodes(&self) -> std::ops::Range<NodeId> {
        1..self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn edge_ref(&self, v: NodeId) -> EdgeRef {
        EdgeRef(self.nodes[v].cluster.clone())
    }

    pub fn edge_refs(&self) -> Vec<EdgeRef> {
        self.edge_nodes().map(|v| self.edge_ref(v)).collect()
    }

    /// Lower endpoint of the edge named by `e`.
    pub fn edge_node(&self, e: &EdgeRef) -> Option<NodeId> {
        let m = e.0.first()?;
        let mut v = self.leaf_node(m)?;
        // the cluster is found on the path from its smallest leaf upwards
        loop {
            if v == 0 {
                return None;
            }
            let c = &self.nodes[v].cluster;
            if *c == e.0 {
                return Some(v);
            }
            if !e.0.is_subset(c) && c.len() >= e.0.len() {
                return None;
            }
            v = self.nodes[v].parent as usize;
        }
    }

    /// The edge whose removal detaches exactly `side` (either side for
    /// unrooted trees; the lower side for rooted ones).
    pub fn edge_separating(&self, side: &TaxonSet) -> Option<EdgeRef> {
        let direct = EdgeRef(side.clone());
        if self.edge_node(&direct).is_some() {
            return Some(direct);
        }
        if self.kind == TreeKind::Unrooted {
            let other = EdgeRef(self.taxa.difference(side));
            if self.edge_node(&other).is_some() {
                return Some(other);
            }
        }
        None
    }

    /// `side` is pendant: detachable by deleting a single edge.
    pub fn is_pendant(&self, side: &TaxonSet) -> bool {
        !side.is_empty() && *side != self.taxa && self.edge_separating(side).is_some()
    }

    /// Both sides of the edge: `(lower, upper)` taxa.
    pub fn edge_sides(&self, v: NodeId) -> (TaxonSet, TaxonSet) {
        let lower = self.nodes[v].cluster.clone();
        let upper = self.taxa.difference(&lower);
        (lower, upper)
    }

    /// Lowest common ancestor in the stored orientation.
    pub fn lca(&self, set: &TaxonSet) -> Result<NodeId> {
        let m = set.first().ok_or_else(|| MafError::TaxonSet("empty set".into()))?;
        if !set.is_subset(&self.taxa) {
            return Err(MafError::TaxonSet("unknown taxa".into()));
        }
        let mut v = self.leaf_of(m)?;
        while !set.is_subset(&self.nodes[v].cluster) {
            v = self.nodes[v].parent as usize;
        }
        Ok(v)
    }

    /// Embedding `T[set]`: the minimal subtree connecting `set`.
    pub fn embed(&self, set: &TaxonSet) -> Result<Embedding> {
        if set.is_empty() || !set.is_subset(&self.taxa) {
            return Err(MafError::TaxonSet("embedding of an empty or foreign taxon set".into()));
        }
        let planted_at_member = self.kind == TreeKind::Unrooted && self.taxon(0).is_some_and(|m| set.contains(m));
        let top = if planted_at_member { 0 } else { self.lca(set)? };
        let mut vertices = BitSet::new();
        let mut edges = BitSet::new();
        vertices.insert(top);
        let end = self.nodes[top].end as usize;
        for v in top + 1..end {
            if self.nodes[v].cluster.intersects(set) {
                vertices.insert(v);
                edges.insert(v);
            }
        }
        Ok(Embedding { top, vertices, edges })
    }

    /// Nodes on the path between two leaves, from `a` to `b`.
    pub fn path(&self, a: Taxon, b: Taxon) -> Result<Vec<NodeId>> {
        let (mut u, mut v) = (self.leaf_of(a)?, self.leaf_of(b)?);
        let mut left = Vec::new();
        let mut right = Vec::new();
        while self.depth(u) > self.depth(v) {
            left.push(u);
            u = self.nodes[u].parent as usize;
        }
        while self.depth(v) > self.depth(u) {
            right.push(v);
            v = self.nodes[v].parent as usize;
        }
        while u != v {
            left.push(u);
            right.push(v);
            u = self.nodes[u].parent as usize;
            v = self.nodes[v].parent as usize;
        }
        left.push(u);
        left.extend(right.into_iter().rev());
        Ok(left)
    }

    /// Restriction `T|set`: embed, then suppress.
    pub fn restrict(&self, set: &TaxonSet) -> Result<PhyloTree> {
        if set.is_empty() {
            return Err(MafError::TaxonSet("restriction to the empty set".into()));
        }
        if !set.is_subset(&self.taxa) {
            return Err(MafError::TaxonSet("restriction to unknown taxa".into()));
        }
        if *set == self.taxa {
            return Ok(self.clone());
        }
        PhyloTree::from_graph(
            self.kind,
            self.labels.clone(),
            self.nodes.len(),
            |v| self.neighbors(v),
            &|v| self.taxon(v),
            &|t| set.contains(t),
            Some(0),
        )
    }

    /// Same kind and same taxa, in the same label universe.
    pub fn same_taxa(&self, other: &PhyloTree) -> bool {
        self.taxa == other.taxa && (Arc::ptr_eq(&self.labels, &other.labels) || self.labels == other.labels)
    }

    /// Homeomorphism under the identity on taxa.
    pub fn is_homeomorphic(&self, other: &PhyloTree) -> Result<bool> {
        if self.kind != other.kind {
            return Err(MafError::KindMismatch);
        }
        if !self.same_taxa(other) {
            return Err(MafError::TaxaMismatch);
        }
        Ok(self.same_shape(other))
    }

    /// Homeomorphism test without the precondition checks.
    pub(crate) fn same_shape(&self, other: &PhyloTree) -> bool {
        self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(other.nodes.iter())
                .all(|(x, y)| x.parent == y.parent && x.taxon == y.taxon)
    }

    /// Unordered leaf pairs adjacent to a common vertex, in canonical order.
    pub fn cherries(&self) -> Vec<(Taxon, Taxon)> {
        let mut out = Vec::new();
        let n = self.nodes.len();
        if n == 1 {
            return out;
        }
        if self.kind == TreeKind::Unrooted && n == 2 {
            // two leaves joined by an edge form the only pair
            let (a, b) = (self.taxon(0).unwrap(), self.taxon(1).unwrap());
            out.push((a.min(b), a.max(b)));
            return out;
        }
        for v in 0..n {
            if self.is_leaf(v) {
                continue;
            }
            let mut leaves: SmallVec<[Taxon; 3]> = self.children(v).filter_map(|c| self.taxon(c)).collect();
            if let Some(p) = self.parent(v) {
                if self.kind == TreeKind::Unrooted {
                    if let Some(t) = self.taxon(p) {
                        leaves.push(t);
                    }
                }
            }
            leaves.sort_unstable();
            for i in 0..leaves.len() {
                for j in i + 1..leaves.len() {
                    out.push((leaves[i], leaves[j]));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_cherry(&self, a: Taxon, b: Taxon) -> bool {
        let (Some(u), Some(v)) = (self.leaf_node(a), self.leaf_node(b)) else {
            return false;
        };
        if u == v {
            return false;
        }
        match self.kind {
            TreeKind::Rooted => self.parent(u).is_some() && self.parent(u) == self.parent(v),
            TreeKind::Unrooted => {
                if self.nodes.len() == 2 {
                    return true;
                }
                let nu: SmallVec<[NodeId; 3]> = self.neighbors(u).collect();
                self.neighbors(v).any(|w| nu.contains(&w))
            }
        }
    }

    /// All pendant taxon sets: clusters, plus their complements when unrooted.
    pub fn pendant_sets(&self) -> Vec<TaxonSet> {
        let mut out: Vec<TaxonSet> = self.edge_nodes().map(|v| self.nodes[v].cluster.clone()).collect();
        if self.kind == TreeKind::Unrooted {
            let extra: Vec<TaxonSet> = out.iter().map(|c| self.taxa.difference(c)).collect();
            out.extend(extra);
        }
        out.retain(|s| !s.is_empty() && *s != self.taxa);
        out.sort();
        out.dedup();
        out
    }

    /// Newick text with canonical child order; internal labels and branch
    /// lengths are not written.
    pub fn to_newick(&self) -> String {
        let mut s = String::new();
        match self.kind {
            TreeKind::Rooted => self.write_rooted(0, &mut s),
            TreeKind::Unrooted => {
                let n = self.nodes.len();
                if n == 1 {
                    s.push_str(&quote(self.label(self.taxon(0).unwrap())));
                } else {
                    let c = self.nodes[0].children[0] as usize;
                    s.push('(');
                    s.push_str(&quote(self.label(self.taxon(0).unwrap())));
                    if self.is_leaf(c) {
                        s.push(',');
                        self.write_rooted(c, &mut s);
                    } else {
                        for k in self.children(c) {
                            s.push(',');
                            self.write_rooted(k, &mut s);
                        }
                    }
                    s.push(')');
                }
            }
        }
        s.push(';');
        s
    }

    fn write_rooted(&self, v: NodeId, s: &mut String) {
        if let Some(t) = self.taxon(v) {
            s.push_str(&quote(self.label(t)));
            return;
        }
        s.push('(');
        for (i, c) in self.children(v).enumerate() {
            if i > 0 {
                s.push(',');
            }
            self.write_rooted(c, s);
        }
        s.push(')');
    }

    /// Labels of a taxon set, sorted.
    pub fn label_set(&self, set: &TaxonSet) -> Vec<String> {
        set.iter().map(|t| self.labels[t].clone()).collect()
    }
}

fn quote(label: &str) -> String {
    let plain = label.chars().all(|c| !c.is_whitespace() && !"()[]':;,".contains(c));
    if plain {
        label.to_string()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

impl fmt::Debug for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.kind, self.to_newick())
    }
}

impl PartialEq for PhyloTree {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.same_taxa(other) && self.same_shape(other)
    }
}

impl Eq for PhyloTree {}
