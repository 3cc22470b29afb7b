//! Seeded random instances: a random tree and a copy perturbed by SPR moves.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{MafError, Result};
use crate::phylo::{PhyloTree, Taxon, TreeKind};

/// Labels `t0 .. t{n-1}`, zero-padded so that lexicographic order is numeric.
pub fn labels(n: usize) -> Arc<[String]> {
    let w = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("t{:0w$}", i, w = w)).collect::<Vec<_>>().into()
}

/// Mutable rooted binary tree used while generating.
#[derive(Clone, Debug)]
struct Shape {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    taxon: Vec<Option<Taxon>>,
    root: usize,
}

impl Shape {
    fn leaf(&mut self, t: Taxon) -> usize {
        self.parent.push(None);
        self.children.push(Vec::new());
        self.taxon.push(Some(t));
        self.parent.len() - 1
    }

    /// Attach the detached subtree `v` above `w` through the free internal
    /// node `mid`.
    fn attach(&mut self, v: usize, w: usize, mid: usize) {
        let up = self.parent[w];
        self.parent[mid] = up;
        self.children[mid] = vec![w, v];
        self.parent[w] = Some(mid);
        self.parent[v] = Some(mid);
        match up {
            Some(p) => {
                for c in self.children[p].iter_mut() {
                    if *c == w {
                        *c = mid;
                    }
                }
            }
            None => self.root = mid,
        }
    }

    fn new_internal(&mut self) -> usize {
        self.parent.push(None);
        self.children.push(Vec::new());
        self.taxon.push(None);
        self.parent.len() - 1
    }

    /// Live nodes in preorder.
    fn nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        out
    }

    fn build(&self, kind: TreeKind, labels: Arc<[String]>) -> Result<PhyloTree> {
        PhyloTree::from_graph(
            kind,
            labels,
            self.parent.len(),
            |v| self.parent[v].into_iter().chain(self.children[v].iter().copied()),
            &|v| self.taxon[v],
            &|_| true,
            Some(self.root),
        )
    }
}

/// Stepwise addition: each new leaf goes above a uniformly chosen node
/// (possibly the root).
fn random_shape(rng: &mut ChaCha8Rng, n: usize) -> Shape {
    let mut s = Shape { parent: Vec::new(), children: Vec::new(), taxon: Vec::new(), root: 0 };
    s.root = s.leaf(0);
    for t in 1..n {
        let live = s.nodes();
        let w = live[rng.gen_range(0..live.len())];
        let v = s.leaf(t);
        let mid = s.new_internal();
        s.attach(v, w, mid);
    }
    s
}

/// One rooted SPR move: prune a non-root subtree and regraft it above a
/// node outside it (possibly above the new root).
fn spr(rng: &mut ChaCha8Rng, s: &mut Shape) {
    let live = s.nodes();
    if live.len() < 5 {
        return;
    }
    let candidates: Vec<usize> = live.iter().copied().filter(|&v| v != s.root).collect();
    let v = candidates[rng.gen_range(0..candidates.len())];
    let p = s.parent[v].expect("non-root node");
    let sib = s.children[p].iter().copied().find(|&c| c != v).expect("binary parent");
    // detach v together with p; the sibling takes p's place
    let gp = s.parent[p];
    s.parent[sib] = gp;
    match gp {
        Some(g) => {
            for c in s.children[g].iter_mut() {
                if *c == p {
                    *c = sib;
                }
            }
        }
        None => s.root = sib,
    }
    s.parent[v] = None;
    s.children[p].clear();
    s.parent[p] = None;
    let targets = s.nodes();
    let w = targets[rng.gen_range(0..targets.len())];
    s.attach(v, w, p);
}

/// A random tree on `n` taxa.
pub fn random_tree(kind: TreeKind, n: usize, seed: u64) -> Result<PhyloTree> {
    if n == 0 {
        return Err(MafError::TaxonSet("a tree needs at least one taxon".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_shape(&mut rng, n).build(kind, labels(n))
}

/// A random tree on `n` taxa and a copy after `moves` random SPR moves.
/// Both share one label universe.
pub fn random_pair(kind: TreeKind, n: usize, moves: usize, seed: u64) -> Result<(PhyloTree, PhyloTree)> {
    if n == 0 {
        return Err(MafError::TaxonSet("a tree needs at least one taxon".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = random_shape(&mut rng, n);
    let labels = labels(n);
    let first = s.build(kind, labels.clone())?;
    for _ in 0..moves {
        spr(&mut rng, &mut s);
    }
    Ok((first, s.build(kind, labels)?))
}

/// One reproducible corpus entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CorpusItem {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub moves: usize,
}

impl CorpusItem {
    pub fn pair(&self, kind: TreeKind) -> Result<(PhyloTree, PhyloTree)> {
        random_pair(kind, self.n, self.moves, self.seed)
    }
}

/// `count` entries with sizes and move counts drawn uniformly from the given
/// inclusive ranges; each entry carries its own seed.
pub fn corpus(count: usize, n: (usize, usize), moves: (usize, usize), seed: u64) -> Result<Vec<CorpusItem>> {
    if n.0 > n.1 || moves.0 > moves.1 {
        return Err(MafError::TaxonSet("empty size or move range".into()));
    }
    if n.0 == 0 {
        return Err(MafError::TaxonSet("a tree needs at least one taxon".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|index| CorpusItem {
            index,
            seed: rng.gen(),
            n: rng.gen_range(n.0..=n.1),
            moves: rng.gen_range(moves.0..=moves.1),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_binary() {
        let (a, b) = random_pair(TreeKind::Rooted, 12, 3, 7).unwrap();
        let (c, d) = random_pair(TreeKind::Rooted, 12, 3, 7).unwrap();
        assert_eq!(a, c);
        assert_eq!(b, d);
        assert_eq!(a.num_taxa(), 12);
        assert_eq!(a.node_count(), 23);
        assert_eq!(b.node_count(), 23);
        let (u, _) = random_pair(TreeKind::Unrooted, 12, 3, 7).unwrap();
        assert_eq!(u.edge_count(), 2 * 12 - 3);
    }

    #[test]
    fn zero_moves_gives_equal_trees() {
        let (a, b) = random_pair(TreeKind::Unrooted, 9, 0, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_sort_numerically() {
        let l = labels(11);
        assert_eq!(l[0], "t00");
        assert_eq!(l[10], "t10");
    }
}
