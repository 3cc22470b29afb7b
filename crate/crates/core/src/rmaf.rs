//! Rooted agreement forests: Whidden's branching and the improved rules
//! (unify, two homeomorphic blocks, single-edge overlap, Fitch).

use crate::error::{MafError, Result};
use crate::forest::{path_attachments, pieces_after_cut, Instance};
use crate::oracle::{brute_maf, OracleBudget};
use crate::phylo::{BitSet, NodeId, PhyloTree, Taxon, TaxonSet};
use crate::search::{Child, Ctx, Outcome, RuleFire, Step};
use crate::umaf::{cut_leaf, leaf_edge, loci, three_disjoint, Locus};

pub use crate::search::{solve_rmaf, Algorithm, SolveResult};

/// Classical branching at the first host cherry.
pub(crate) fn whidden_step(inst: &Instance) -> Result<Step> {
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
        0 => Err(MafError::Internal("common cherry left after tidying".into())),
        1 => Ok(Step::branch("whidden_t1", 1, vec![Child::new(inst.cut_nodes(l.path.comp, &l.path.edges))])),
        t => Ok(Step::branch("whidden_t_ge2", t, whidden_children(inst, &l, false))),
    }
}

fn whidden_children(o: &Instance, l: &Locus, flag: bool) -> Vec<Child> {
    let mut all = Child::new(o.cut_nodes(l.path.comp, &l.path.edges));
    all.after_whidden2 = flag;
    vec![cut_leaf(o, l.path.comp, l.a), cut_leaf(o, l.path.comp, l.b), all]
}

/// The first applicable improved rule on a tidied tree–tree instance.
pub(crate) fn improved_step(ctx: &mut Ctx, inst: &Instance) -> Result<Step> {
    let orients = [inst.clone(), inst.swapped()];
    let loci = loci(&orients)?;
    if let Some(l) = loci.iter().find(|l| l.path.t == 1) {
        let o = &orients[l.orient];
        return Ok(Step::branch("whidden_t1", 1, vec![Child::new(o.cut_nodes(l.path.comp, &l.path.edges))]));
    }
    if let Some(l) = loci.iter().find(|l| l.path.t >= 3) {
        return Ok(Step::branch("whidden_t_ge3", l.path.t, whidden_children(&orients[l.orient], l, false)));
    }
    for l in loci.iter().filter(|l| l.path.t == 2) {
        if let Some(s) = rule_unify(&orients[l.orient], l) {
            return Ok(s);
        }
    }
    for l in loci.iter().filter(|l| l.path.t == 2) {
        if let Some(s) = rule_twohomeoroot(ctx, &orients[l.orient], l)? {
            return Ok(s);
        }
    }
    if let Some(l) = loci.iter().find(|l| l.path.t == 2) {
        return Ok(Step::branch("whidden_t2", 2, whidden_children(&orients[l.orient], l, true)));
    }
    Err(MafError::Internal("no branching rule applies to a tree-tree instance".into()))
}

/// The `a`/`b`/`X1`/`X2` view of a `t = 2` locus, optionally with `a` and
/// `b` exchanged (which also exchanges `X1` and `X2`).
struct T2 {
    a: Taxon,
    b: Taxon,
    x: [TaxonSet; 2],
    e: [NodeId; 2],
}

impl T2 {
    fn new(l: &Locus, swap: bool) -> T2 {
        let (p, e) = (&l.path.pendant, &l.path.edges);
        if swap {
            T2 { a: l.b, b: l.a, x: [p[1].clone(), p[0].clone()], e: [e[1], e[0]] }
        } else {
            T2 { a: l.a, b: l.b, x: [p[0].clone(), p[1].clone()], e: [e[0], e[1]] }
        }
    }
}

/// `X1 = {c}` forms a cherry with `a` in the component tree.
fn rule_unify(o: &Instance, l: &Locus) -> Option<Step> {
    let tp = &o.comps[0].tree;
    let t = o.host.as_ref()?;
    for swap in [false, true] {
        let v = T2::new(l, swap);
        if v.x[0].len() != 1 {
            continue;
        }
        let c = v.x[0].first()?;
        if !tp.is_cherry(v.a, c) {
            continue;
        }
        let (arcs, _) = path_attachments(t, v.a, c).ok()?;
        if arcs.len() < 2 {
            continue;
        }
        let children = vec![
            Child::new(o.cut_nodes(0, &v.e)),
            cut_leaf(o, 0, v.a),
            Child::new(o.swapped().cut_nodes(0, &arcs)),
        ];
        return Some(Step::branch("unify", 2, children));
    }
    None
}

fn homeomorphic(t: &PhyloTree, tp: &PhyloTree, set: &TaxonSet) -> bool {
    set.len() <= 1 || matches!((t.restrict(set), tp.restrict(set)), (Ok(p), Ok(q)) if p.same_shape(&q))
}

/// Leaf cuts `{x, y}` in the component tree.
fn cut_pair(o: &Instance, x: Taxon, y: Taxon) -> Child {
    let tp = &o.comps[0].tree;
    Child::new(o.cut_nodes(0, &[leaf_edge(tp, x), leaf_edge(tp, y)]))
}

fn five_way(rule: &'static str, o: &Instance, v: &T2, p: Taxon, q: Taxon) -> Step {
    let children = vec![
        Child::new(o.cut_nodes(0, &v.e)),
        cut_pair(o, p, v.a),
        cut_pair(o, p, v.b),
        cut_pair(o, q, v.a),
        cut_pair(o, q, v.b),
    ];
    Step::branch(rule, 2, children)
}

/// `T[X1]`, `T[X2]`, `T[S ∪ {a,b}]` are disjoint in the host and at least
/// two of the three blocks are homeomorphic.
fn rule_twohomeoroot(ctx: &mut Ctx, o: &Instance, l: &Locus) -> Result<Option<Step>> {
    let t = o.host.as_ref().expect("live instance");
    let tp = &o.comps[0].tree;
    let v = T2::new(l, false);
    let y = t.taxa().difference(&v.x[0].union(&v.x[1]));
    if !three_disjoint(t, [&v.x[0], &v.x[1], &y]) {
        return Ok(None);
    }
    let h = [homeomorphic(t, tp, &v.x[0]), homeomorphic(t, tp, &v.x[1])];
    let hy = homeomorphic(t, tp, &y);
    let count = h.iter().filter(|&&x| x).count() + hy as usize;
    if count < 2 {
        return Ok(None);
    }
    if count == 3 {
        return Ok(Some(Step::branch("twohomeoroot_all_homeomorphic", 2, whidden_children(o, l, false))));
    }
    for (j, &hj) in h.iter().enumerate() {
        if hj && v.x[j].len() >= 3 {
            return Ok(Some(Step::branch("twohomeoroot_case1", 2, vec![Child::new(o.cut_nodes(0, &v.e))])));
        }
    }
    for (j, &hj) in h.iter().enumerate() {
        if hj && v.x[j].len() == 2 {
            let mut it = v.x[j].iter();
            let (p, q) = (it.next().unwrap(), it.next().unwrap());
            return Ok(Some(five_way("twohomeoroot_case2", o, &v, p, q)));
        }
    }
    // one block non-homeomorphic, the other a singleton
    let Some(j) = (0..2).find(|&j| !h[j]) else {
        return Err(MafError::Internal("two homeomorphic singleton blocks reached the two-homeomorphic rule".into()));
    };
    let i = 1 - j;
    if !hy || v.x[i].len() != 1 {
        return Err(MafError::Internal("two-homeomorphic rule: configuration matches no case".into()));
    }
    let ty = t.restrict(&y)?;
    if let Some(&(p, q)) = ty.cherries().iter().find(|&&(p, q)| ![p, q].iter().any(|z| *z == v.a || *z == v.b)) {
        return Ok(Some(five_way("twohomeoroot_case3_cherry", o, &v, p, q)));
    }
    let xj = v.x[j].clone();
    let c = v.x[i].first().unwrap();
    let emb = t.embed(&xj)?;
    let mut incident = usize::from(emb.top != t.root());
    for u in emb.vertices.iter() {
        incident += t.children(u).filter(|w| !emb.vertices.contains(*w)).count();
    }
    match incident {
        1 => case_3_1(ctx, o, &xj).map(Some),
        2 => case_3_2(o, l, &xj, c).map(Some),
        n => Err(MafError::Internal(format!("non-homeomorphic block with {} incident arcs", n))),
    }
}

/// `X_j` is a common split: solve it alone and with a stand-in for the rest,
/// and the rest alone and with a stand-in for `X_j`; merge the two parts
/// when that saves a component.
fn case_3_1(ctx: &mut Ctx, o: &Instance, xj: &TaxonSet) -> Result<Step> {
    let t = o.host.as_ref().expect("live instance");
    let tp = &o.comps[0].tree;
    let k = o.budget;
    ctx.stats.record(RuleFire { rule: "twohomeoroot_case3_1", t: 2, cuts: vec![1, 1] });
    let sub = |set: &TaxonSet, budget: usize| -> Result<Instance> {
        Ok(Instance::pair(t.restrict(set)?, tp.restrict(set)?, o.origin.clone(), budget))
    };
    let Some(y) = ctx.solve(sub(xj, k - 1)?, false)? else {
        return Ok(Step::Solved(None));
    };
    let rest = t.taxa().difference(xj);
    let r = rest.first().expect("rest is non-empty");
    let x = xj.first().expect("block is non-empty");
    let y_rho = ctx.solve(sub(&xj.union(&BitSet::singleton(r)), k - 1)?, false)?;
    let small = OracleBudget::new(2);
    let z = brute_maf(&t.restrict(&rest)?, &tp.restrict(&rest)?, small)?;
    let with_gamma = rest.union(&BitSet::singleton(x));
    let z_gamma = brute_maf(&t.restrict(&with_gamma)?, &tp.restrict(&with_gamma)?, small)?;
    let (Some(z), Some(z_gamma)) = (z, z_gamma) else {
        return Err(MafError::Internal("complement of a common split needs more than two cuts".into()));
    };
    let mut forest: Vec<TaxonSet> = y.forest.clone();
    forest.extend(z.blocks.iter().map(|b| o.expand(b)));
    let mut best = forest;
    if let Some(yr) = y_rho {
        if yr.cuts + z_gamma.cuts < y.cuts + z.cuts + 1 {
            let rho = &o.origin[r];
            let mut merged: Vec<TaxonSet> = Vec::new();
            let mut joined = TaxonSet::new();
            for b in &yr.forest {
                if b.intersects(rho) {
                    joined.union_with(&b.difference(rho));
                } else {
                    merged.push(b.clone());
                }
            }
            for b in &z_gamma.blocks {
                if b.contains(x) {
                    joined.union_with(&o.expand(&b.difference(&BitSet::singleton(x))));
                } else {
                    merged.push(o.expand(b));
                }
            }
            if !joined.is_empty() {
                merged.push(joined);
            }
            best = merged;
        }
    }
    let cuts = best.len() - 1;
    if cuts > k {
        return Ok(Step::Solved(None));
    }
    best.extend(o.finalized.iter().cloned());
    best.sort();
    Ok(Step::Solved(Some(Outcome { cuts, forest: best })))
}

/// `T[X_j]` has two incident arcs. Classified by where `c` and the rest sit
/// relative to `T[X_j]` in the host.
fn case_3_2(o: &Instance, l: &Locus, xj: &TaxonSet, c: Taxon) -> Result<Step> {
    let t = o.host.as_ref().expect("live instance");
    let tp = &o.comps[0].tree;
    let swap = if tp.edge_node(&crate::phylo::EdgeRef(xj.union(&BitSet::singleton(l.a)))).is_some() {
        false
    } else if tp.edge_node(&crate::phylo::EdgeRef(xj.union(&BitSet::singleton(l.b)))).is_some() {
        true
    } else {
        return Err(MafError::Internal("non-homeomorphic block is not a sibling of the cherry".into()));
    };
    let v = T2::new(l, swap);
    let both = Child::new(o.cut_nodes(0, &v.e));
    let top = t.embed(xj)?.top;
    let c_node = t.leaf_node(c).expect("taxon of the host");
    if top == t.root() {
        // c and the rest both hang below T[X_j]
        let swapped = o.swapped();
        let ea = leaf_edge(t, v.a);
        let lca = t.lca(&[c, v.b].into_iter().collect())?;
        let interior_arcs = |leaf: NodeId| -> Vec<NodeId> {
            let mut path = vec![leaf];
            while *path.last().unwrap() != lca {
                path.push(t.parent(*path.last().unwrap()).unwrap());
            }
            let mut arcs = Vec::new();
            for w in path[1..path.len() - 1].iter() {
                arcs.extend(t.children(*w).filter(|u| !path.contains(u)));
            }
            arcs
        };
        let mut children = vec![both, cut_leaf(o, 0, v.b)];
        let to_c = interior_arcs(c_node);
        let to_b: Vec<NodeId> =
            interior_arcs(t.leaf_node(v.b).unwrap()).into_iter().filter(|&u| u != t.leaf_node(v.a).unwrap()).collect();
        if to_c.len() >= 2 {
            children.push(Child::new(swapped.cut_nodes(0, &[ea, to_c[0]])));
            children.push(Child::new(swapped.cut_nodes(0, &[ea, to_c[1]])));
        } else if !to_b.is_empty() {
            let mut k = vec![ea];
            k.extend(to_b);
            children.push(Child::new(swapped.cut_nodes(0, &k)));
        } else if lca != t.root() {
            children.push(Child::new(swapped.cut_nodes(0, &[ea, lca])));
        } else {
            return Err(MafError::Internal("two-homeomorphic rule: no third branch exists".into()));
        }
        return Ok(Step::branch("twohomeoroot_case3_2_2", 2, children));
    }
    if t.is_descendant(c_node, top) {
        return Ok(Step::branch("twohomeoroot_case3_2_1", 2, vec![both, cut_leaf(o, 0, v.a)]));
    }
    let root = t.root();
    if t.parent(top) == Some(root) && t.parent(c_node) == Some(root) {
        return Ok(Step::branch("twohomeoroot_case3_2_3", 2, vec![both, cut_leaf(o, 0, v.b)]));
    }
    Err(MafError::Internal("two-homeomorphic rule: unexpected placement of the singleton block".into()))
}

/// After the double cut of the `t = 2` rule: repair a single-edge overlap,
/// or settle a closed group of homeomorphic components with Fitch.
pub(crate) fn repair_step(inst: &Instance) -> Result<Option<Step>> {
    if inst.host.is_none() || inst.comps.len() < 2 {
        return Ok(None);
    }
    if let Some(s) = rule_weirdoverlap(inst)? {
        return Ok(Some(s));
    }
    rule_fitch(inst)
}

fn rule_weirdoverlap(inst: &Instance) -> Result<Option<Step>> {
    if inst.comps.len() != 3 {
        return Ok(None);
    }
    let host = inst.host.as_ref().unwrap();
    let emb = inst.embeddings();
    let homeo: Vec<bool> = (0..3).map(|i| inst.is_homeomorphic(i)).collect();
    for (a, b, c) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
        if !homeo[a] || homeo[b] || !homeo[c] {
            continue;
        }
        if emb[c].shares_vertex(&emb[a]) || emb[c].shares_vertex(&emb[b]) {
            continue;
        }
        let shared = emb[a].shared_edges(&emb[b]);
        if shared.len() != 1 {
            continue;
        }
        let e = shared.first().unwrap();
        let below = host.cluster(e);
        let block = &inst.comps[b].block;
        let b1 = block.intersection(below);
        let comp_tree = &inst.comps[b].tree;
        let Some(edge) = comp_tree.edge_separating(&b1) else { continue };
        let node = comp_tree.edge_node(&edge).expect("edge of the component");
        return Ok(Some(Step::branch("weirdoverlap", 0, vec![Child::new(inst.cut_nodes(b, &[node]))])));
    }
    Ok(None)
}

fn rule_fitch(inst: &Instance) -> Result<Option<Step>> {
    let host = inst.host.as_ref().unwrap();
    let ov = inst.overlap_analysis();
    if ov.disjoint {
        return Ok(None);
    }
    let n = inst.comps.len();
    // connected groups of the overlap graph
    let mut group: Vec<usize> = (0..n).collect();
    fn find(g: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while g[r] != r {
            r = g[r];
        }
        g[x] = r;
        r
    }
    for &(i, j) in &ov.pairs {
        let (ri, rj) = (find(&mut group, i), find(&mut group, j));
        group[ri.max(rj)] = ri.min(rj);
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut group, i)).collect();
    let mut chosen = Vec::new();
    for r in 0..n {
        let members: Vec<usize> = (0..n).filter(|&i| roots[i] == r).collect();
        if members.len() >= 2 && members.iter().all(|&i| inst.is_homeomorphic(i)) {
            chosen.extend(members);
        }
    }
    if chosen.len() < 2 {
        return Ok(None);
    }
    chosen.sort_unstable();
    let mut xh = TaxonSet::new();
    let mut state = vec![usize::MAX; inst.origin.len()];
    for (s, &i) in chosen.iter().enumerate() {
        xh.union_with(&inst.comps[i].block);
        for t in inst.comps[i].block.iter() {
            state[t] = s;
        }
    }
    let sub = host.restrict(&xh)?;
    let (_, cut) = fitch_min_cuts(&sub, &|t| state[t])?;
    let pieces = pieces_after_cut(&sub, &cut);
    let (child, added) = inst.refine(&chosen, pieces);
    if added == 0 {
        return Ok(None);
    }
    Ok(Some(Step::branch("fitch", 0, vec![Child { inst: child, charge: added, after_whidden2: false }])))
}

/// Fitch's small-parsimony algorithm: the minimum number of edges whose
/// removal leaves every piece with taxa of a single state, and one such edge
/// set. Works on rooted trees and on unrooted trees planted at a leaf.
pub fn fitch_min_cuts(tree: &PhyloTree, state: &dyn Fn(Taxon) -> usize) -> Result<(usize, Vec<NodeId>)> {
    let n = tree.node_count();
    let mut sets: Vec<BitSet> = vec![BitSet::new(); n];
    let mut cost = 0usize;
    for v in (0..n).rev() {
        if let Some(t) = tree.taxon(v) {
            let s = state(t);
            if s == usize::MAX {
                return Err(MafError::TaxonSet(format!("no state for taxon '{}'", tree.label(t))));
            }
            sets[v] = BitSet::singleton(s);
            if v == 0 && n > 1 {
                // planted leaf: its single child meets it across one edge
                let child = tree.children(0).next().unwrap();
                if !sets[child].contains(s) {
                    cost += 1;
                }
            }
            continue;
        }
        let kids: Vec<NodeId> = tree.children(v).collect();
        let mut inter = sets[kids[0]].clone();
        let mut uni = sets[kids[0]].clone();
        for &k in &kids[1..] {
            inter.intersect_with(&sets[k]);
            uni.union_with(&sets[k]);
        }
        if inter.is_empty() {
            // one change per extra child set beyond the first
            cost += kids.len() - 1;
            sets[v] = uni;
        } else {
            sets[v] = inter;
        }
    }
    let mut assign = vec![usize::MAX; n];
    let mut cut = Vec::new();
    for v in 0..n {
        let s = match tree.parent(v) {
            None => sets[v].first().unwrap(),
            Some(p) => {
                let ps = assign[p];
                if sets[v].contains(ps) {
                    ps
                } else {
                    sets[v].first().unwrap()
                }
            }
        };
        assign[v] = s;
        if let Some(p) = tree.parent(v) {
            if assign[p] != s {
                cut.push(v);
            }
        }
    }
    if cut.len() != cost {
        return Err(MafError::Internal(format!("fitch: {} changes counted, {} edges cut", cost, cut.len())));
    }
    Ok((cost, cut))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phylo::{parse_pair, TreeKind};

    fn whidden(host: &str, other: &str) -> (&'static str, usize, Vec<usize>) {
        let (h, o) = parse_pair(host, other, TreeKind::Rooted).unwrap();
        let inst = Instance::new(&h, &o, 10).unwrap();
        match whidden_step(&inst).unwrap() {
            Step::Branch { fire, .. } => (fire.rule, fire.t, fire.cuts),
            Step::Solved(_) => panic!("expected a branching"),
        }
    }

    #[test]
    fn whidden_profiles() {
        assert_eq!(whidden("((a,b),c);", "((a,c),b);"), ("whidden_t1", 1, vec![1]));
        assert_eq!(whidden("((a,b),(c,d));", "((a,c),(b,d));"), ("whidden_t_ge2", 2, vec![1, 1, 2]));
        assert_eq!(whidden("((a,b),(c,(d,e)));", "((a,c),((b,d),e));"), ("whidden_t_ge2", 3, vec![1, 1, 3]));
    }

    #[test]
    fn fitch_cut_matches_cost() {
        let (t, _) = parse_pair("(((a,b),(c,d)),e);", "(((a,b),(c,d)),e);", TreeKind::Rooted).unwrap();
        let states = [0, 1, 0, 1, 0];
        let (cost, cut) = fitch_min_cuts(&t, &|x| states[x]).unwrap();
        assert_eq!(cost, 2);
        assert_eq!(cut.len(), 2);
    }
}
