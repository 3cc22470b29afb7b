//! Unrooted agreement forests: Chen's branching and the improved
//! tree–tree rules (common pendant subtrees, three blocks, strengthened
//! cherry branching).

use std::collections::HashSet;

use crate::error::{MafError, Result};
use crate::forest::{CherryPath, Instance};
use crate::phylo::{BitSet, NodeId, PhyloTree, Taxon, TaxonSet};
use crate::search::{Child, Step};

pub use crate::search::{solve_umaf, Algorithm, SolveResult};

/// Lower endpoint of the edge attaching leaf `t`.
pub(crate) fn leaf_edge(tree: &PhyloTree, t: Taxon) -> NodeId {
    let side = tree.edge_separating(&BitSet::singleton(t)).expect("leaf of the tree");
    tree.edge_node(&side).expect("edge of the tree")
}

/// A host cherry together with its path in the component tree, in one of the
/// two orientations of a tree–tree instance.
pub(crate) struct Locus {
    pub orient: usize,
    pub a: Taxon,
    pub b: Taxon,
    pub path: CherryPath,
}

pub(crate) fn loci(orients: &[Instance]) -> Result<Vec<Locus>> {
    let mut out = Vec::new();
    for (orient, o) in orients.iter().enumerate() {
        let host = o.host.as_ref().expect("live instance");
        for (a, b) in host.cherries() {
            let path = o.cherry_path(a, b)?;
            if path.same_component {
                out.push(Locus { orient, a, b, path });
            }
        }
    }
    Ok(out)
}

pub(crate) fn cut_leaf(o: &Instance, comp: usize, t: Taxon) -> Child {
    Child::new(o.cut_nodes(comp, &[leaf_edge(&o.comps[comp].tree, t)]))
}

/// Cut every path edge except the `keep`-th.
fn all_but(o: &Instance, l: &Locus, keep: usize) -> Child {
    let edges: Vec<NodeId> = l.path.edges.iter().enumerate().filter(|&(i, _)| i != keep).map(|(_, &e)| e).collect();
    Child::new(o.cut_nodes(l.path.comp, &edges))
}

/// Classical branching at the first host cherry.
pub(crate) fn chen_step(inst: &Instance) -> Result<Step> {
    let host = inst.host.as_ref().expect("live instance");
    let &(a, b) = host.cherries().first().ok_or_else(|| MafError::Internal("host without a cherry".into()))?;
    let p = inst.cherry_path(a, b)?;
    if !p.same_component {
        let comp_of = inst.comp_of();
        return Ok(Step::branch(
            "different_components",
            0,
            vec![cut_leaf(inst, comp_of[a], a), cut_leaf(inst, comp_of[b], b)],
        ));
    }
    let l = Locus { orient: 0, a, b, path: p };
    match l.path.t {
        2 => Ok(Step::branch(
            "chen_t2",
            2,
            vec![
                cut_leaf(inst, l.path.comp, a),
                Child::new(inst.cut_nodes(l.path.comp, &[l.path.edges[0]])),
                Child::new(inst.cut_nodes(l.path.comp, &[l.path.edges[1]])),
            ],
        )),
        t if t >= 3 => {
            let mut children = vec![cut_leaf(inst, l.path.comp, a), cut_leaf(inst, l.path.comp, b)];
            children.extend((0..t).map(|i| all_but(inst, &l, i)));
            Ok(Step::branch("chen_t_ge3", t, children))
        }
        t => Err(MafError::Internal(format!("cherry path with t = {} after tidying", t))),
    }
}

/// The first applicable improved rule on a tidied tree–tree instance.
pub(crate) fn improved_step(inst: &Instance) -> Result<Step> {
    if let Some(s) = rule_subtree(inst) {
        return Ok(s);
    }
    let orients = [inst.clone(), inst.swapped()];
    let loci = loci(&orients)?;
    let find = |pred: &dyn Fn(&Locus) -> bool| loci.iter().find(|l| pred(l));
    if find(&|l| l.path.t == 2).is_none() {
        if let Some(s) = rule_three_blocks(&orients) {
            return Ok(s);
        }
    }
    if let Some(l) = find(&|l| l.path.t == 2) {
        let o = &orients[l.orient];
        let children = l.path.edges.iter().map(|&e| Child::new(o.cut_nodes(l.path.comp, &[e]))).collect();
        return Ok(Step::branch("chen_t2_strong", 2, children));
    }
    if let Some(l) = find(&|l| l.path.t >= 4) {
        return Ok(chen_full("chen_t_ge4", &orients[l.orient], l, None));
    }
    for l in loci.iter().filter(|l| l.path.t == 3) {
        if let Some(drop) = two_singletons_drop(&orients[l.orient], l) {
            return Ok(chen_full("chen_t3_two_singletons", &orients[l.orient], l, Some(drop)));
        }
    }
    if let Some(l) = find(&|l| l.path.t == 3) {
        return Ok(chen_full("chen_t3", &orients[l.orient], l, None));
    }
    Err(MafError::Internal("no branching rule applies to a tree-tree instance".into()))
}

fn chen_full(rule: &'static str, o: &Instance, l: &Locus, drop: Option<usize>) -> Step {
    let mut children = vec![cut_leaf(o, l.path.comp, l.a), cut_leaf(o, l.path.comp, l.b)];
    children.extend((0..l.path.t).filter(|&i| Some(i) != drop).map(|i| all_but(o, l, i)));
    Step::branch(rule, l.path.t, children)
}

/// For `t = 3` with exactly two singleton pendant sets: a singleton `c`
/// adjacent to `a` (or `b`) on the path, four edges from that leaf in the
/// host. Returns the index of the "all but one" child to drop: the one that
/// keeps the other singleton.
fn two_singletons_drop(o: &Instance, l: &Locus) -> Option<usize> {
    let single: Vec<bool> = l.path.pendant.iter().map(|p| p.len() == 1).collect();
    let count = single.iter().filter(|&&s| s).count();
    if count != 2 {
        return None;
    }
    let host = o.host.as_ref()?;
    let dist = |x: Taxon, y: Taxon| host.path(x, y).map(|p| p.len() - 1).unwrap_or(0);
    for (near, leaf) in [(0usize, l.a), (2, l.b)] {
        if !single[near] {
            continue;
        }
        let c = l.path.pendant[near].first()?;
        if dist(leaf, c) != 4 {
            continue;
        }
        // the other singleton
        return (0..3).find(|&i| i != near && single[i]);
    }
    None
}

/// A common pendant subtree with at least two taxa: finalize it.
fn rule_subtree(inst: &Instance) -> Option<Step> {
    let host = inst.host.as_ref()?;
    let other = &inst.comps[0].tree;
    for x in host.pendant_sets() {
        if x.len() < 2 || !other.is_pendant(&x) {
            continue;
        }
        if host.restrict(&x).ok()?.same_shape(&other.restrict(&x).ok()?) {
            let mut child = inst.clone();
            child.finalize_block(&x);
            child.budget = child.budget.saturating_sub(1);
            return Some(Step::branch("subtree", 0, vec![Child { inst: child, charge: 1, after_whidden2: false }]));
        }
    }
    None
}

/// Three blocks `A, B, C`: in `T`, `A` and `C` hang off a non-pendant `B`;
/// in `T'`, `A` is the one that is not pendant; `T|B = T'|B`. Cut the edge
/// of `A` or of `C` in `T`.
fn rule_three_blocks(orients: &[Instance]) -> Option<Step> {
    for o in orients {
        let t = o.host.as_ref()?;
        let tp = &o.comps[0].tree;
        let x = t.taxa();
        let mut sides: Vec<(TaxonSet, NodeId)> = Vec::new();
        for v in t.edge_nodes() {
            let (lo, hi) = t.edge_sides(v);
            sides.push((lo, v));
            sides.push((hi, v));
        }
        sides.sort();
        let t_pend: HashSet<TaxonSet> = t.pendant_sets().into_iter().collect();
        let tp_pend: HashSet<TaxonSet> = tp.pendant_sets().into_iter().collect();
        let a_cands: Vec<&(TaxonSet, NodeId)> = sides.iter().filter(|(s, _)| !tp_pend.contains(s)).collect();
        let c_cands: Vec<&(TaxonSet, NodeId)> = sides.iter().filter(|(s, _)| tp_pend.contains(s)).collect();
        for (a_set, ea) in &a_cands {
            for (c_set, ec) in &c_cands {
                if a_set.intersects(c_set) {
                    continue;
                }
                let ac = a_set.union(c_set);
                if ac == *x || t_pend.contains(&ac) || !tp_pend.contains(&ac) {
                    continue;
                }
                let b_set = x.difference(&ac);
                if !three_disjoint(t, [a_set, &b_set, c_set]) || !three_disjoint(tp, [a_set, &b_set, c_set]) {
                    continue;
                }
                let same = match (t.restrict(&b_set), tp.restrict(&b_set)) {
                    (Ok(p), Ok(q)) => p.same_shape(&q),
                    _ => false,
                };
                if !same {
                    continue;
                }
                let swapped = o.swapped();
                let children =
                    vec![Child::new(swapped.cut_nodes(0, &[*ea])), Child::new(swapped.cut_nodes(0, &[*ec]))];
                return Some(Step::branch("three_blocks", 0, children));
            }
        }
    }
    None
}

pub(crate) fn three_disjoint(tree: &PhyloTree, sets: [&TaxonSet; 3]) -> bool {
    let emb: Vec<_> = sets.iter().map(|s| tree.embed(s)).collect::<Result<_>>().unwrap_or_default();
    emb.len() == 3 && !emb[0].shares_vertex(&emb[1]) && !emb[0].shares_vertex(&emb[2]) && !emb[1].shares_vertex(&emb[2])
}
