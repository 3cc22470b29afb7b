use maf::gen::random_tree;
use maf::phylo::{parse_newick, parse_pair, pendancy_and_common, CommonMode, PhyloTree, TaxonSet, TreeKind};
use proptest::prelude::*;

const R: TreeKind = TreeKind::Rooted;
const U: TreeKind = TreeKind::Unrooted;

fn set(t: &PhyloTree, names: &[&str]) -> TaxonSet {
    names.iter().map(|n| t.labels().iter().position(|l| l == n).expect("known label")).collect()
}

fn names(t: &PhyloTree, pairs: Vec<(usize, usize)>) -> Vec<(String, String)> {
    pairs.into_iter().map(|(a, b)| (t.label(a).to_string(), t.label(b).to_string())).collect()
}

#[test]
fn restrict_identity_and_pairs() {
    let t = parse_newick("((a,b),(c,d));", R).unwrap();
    assert_eq!(t.restrict(t.taxa()).unwrap(), t);
    let ac = t.restrict(&set(&t, &["a", "c"])).unwrap();
    assert_eq!(ac.to_newick(), "(a,c);");
    assert!(t.restrict(&TaxonSet::new()).is_err());
}

#[test]
fn unrooted_three_taxon_restrictions_agree() {
    let (t1, t2) = parse_pair("(((a,b),c),(d,e));", "((a,(d,c)),(b,e));", U).unwrap();
    for x in [["a", "b", "c"], ["a", "d", "e"], ["b", "c", "e"]] {
        let s = set(&t1, &x);
        assert!(t1.restrict(&s).unwrap().is_homeomorphic(&t2.restrict(&s).unwrap()).unwrap());
    }
}

#[test]
fn homeomorphism_examples() {
    let (p, q) = parse_pair("((a,b),c);", "((b,c),a);", R).unwrap();
    assert!(p.is_homeomorphic(&p).unwrap());
    assert!(!p.is_homeomorphic(&q).unwrap());
    let (p, q) = parse_pair("((a,b),c);", "((b,c),a);", U).unwrap();
    assert!(p.is_homeomorphic(&q).unwrap());
    let (x, y) = parse_pair("(a,b);", "(b,a);", R).unwrap();
    assert!(x.is_homeomorphic(&y).unwrap());
    let x = parse_newick("((a,b),c);", R).unwrap();
    let y = parse_newick("((a,b),d);", R).unwrap();
    assert!(x.is_homeomorphic(&y).is_err());
}

#[test]
fn cherry_examples() {
    let q = parse_newick("((a,b),(c,d));", U).unwrap();
    assert_eq!(names(&q, q.cherries()), vec![("a".into(), "b".into()), ("c".into(), "d".into())]);
    let cat = parse_newick("(((a,b),c),d);", R).unwrap();
    assert_eq!(names(&cat, cat.cherries()), vec![("a".into(), "b".into())]);
    let six = parse_newick("(((((a,b),c),d),e),f);", U).unwrap();
    let ch = six.cherries();
    assert_eq!(ch.len(), 2);
    assert!(ch[0].0 != ch[1].0 && ch[0].1 != ch[1].1 && ch[0].0 != ch[1].1);
}

#[test]
fn pendant_subtree_ignoring_but_not_including_rooting() {
    // pendant in both but shaped differently
    let (t1, t2) = parse_pair("(((a,b),c),(d,e));", "((a,(b,c)),(d,e));", R).unwrap();
    let x = set(&t1, &["a", "b", "c"]);
    let p = pendancy_and_common(&t1, &t2, &x, CommonMode::IgnoringRooting).unwrap();
    assert!(p.pendant_in_first && p.pendant_in_second && !p.common);
    // same unrooted shape, but attached at different points: T|{a,b,c,d} differs
    let (r1, r2) = parse_pair("((((a,b),c),d),e);", "(((a,c),b),(d,e));", U).unwrap();
    let x = set(&r1, &["a", "b", "c"]);
    let ignoring = pendancy_and_common(&r1, &r2, &x, CommonMode::IgnoringRooting).unwrap();
    let including = pendancy_and_common(&r1, &r2, &x, CommonMode::IncludingRooting).unwrap();
    assert!(ignoring.pendant_in_first && ignoring.pendant_in_second);
    assert!(ignoring.common && !including.common);
}

#[test]
fn pendancy_of_cherries_and_quartets() {
    let (t1, t2) = parse_pair("(((a,b),c),d);", "((c,(a,b)),d);", R).unwrap();
    let p = pendancy_and_common(&t1, &t2, &set(&t1, &["a", "b"]), CommonMode::IncludingRooting).unwrap();
    assert!(p.common);
    let (q1, q2) = parse_pair("((a,b),(c,d));", "((a,c),(b,d));", U).unwrap();
    let p = pendancy_and_common(&q1, &q2, &set(&q1, &["a", "b"]), CommonMode::IgnoringRooting).unwrap();
    assert!(p.pendant_in_first && !p.pendant_in_second && !p.common);
    assert!(pendancy_and_common(&q1, &q2, q1.taxa(), CommonMode::IgnoringRooting).is_err());
}

#[test]
fn embedding_examples() {
    let q = parse_newick("((a,b),(c,d));", U).unwrap();
    let a = q.embed(&set(&q, &["a"])).unwrap();
    assert_eq!(a.vertices.len(), 1);
    assert!(a.edges.is_empty());
    let ac = q.embed(&set(&q, &["a", "c"])).unwrap();
    let bd = q.embed(&set(&q, &["b", "d"])).unwrap();
    let shared = ac.shared_edges(&bd);
    assert_eq!(shared.len(), 1);
    let e = shared.first().unwrap();
    assert!(!q.is_leaf(e) && q.parent(e).is_some_and(|p| !q.is_leaf(p)));

    let r = parse_newick("(((a,b),c),d);", R).unwrap();
    let l = r.lca(&set(&r, &["a", "c"])).unwrap();
    assert_eq!(r.parent(l), Some(r.root()));
}

fn arb_tree(kind: TreeKind, lo: usize, hi: usize) -> impl Strategy<Value = PhyloTree> {
    (lo..=hi, any::<u64>()).prop_map(move |(n, seed)| random_tree(kind, n, seed).unwrap())
}

fn arb_kind() -> impl Strategy<Value = TreeKind> {
    prop_oneof![Just(R), Just(U)]
}

proptest! {
    #[test]
    fn newick_round_trip((kind, t) in arb_kind().prop_flat_map(|k| (Just(k), arb_tree(k, 1, 20)))) {
        let back = parse_newick(&t.to_newick(), kind).unwrap();
        prop_assert!(back.is_homeomorphic(&t).unwrap());
        prop_assert_eq!(back, t);
    }

    #[test]
    fn restriction_composes(
        (kind, t) in arb_kind().prop_flat_map(|k| (Just(k), arb_tree(k, 2, 16))),
        a_bits in any::<u32>(),
        b_bits in any::<u32>(),
    ) {
        let _ = kind;
        let a: TaxonSet = t.taxa().iter().filter(|&x| a_bits >> x & 1 == 1).collect();
        let b: TaxonSet = a.iter().filter(|&x| b_bits >> x & 1 == 1).collect();
        prop_assume!(!b.is_empty());
        let once = t.restrict(&b).unwrap();
        let twice = t.restrict(&a).unwrap().restrict(&b).unwrap();
        prop_assert!(once.is_homeomorphic(&twice).unwrap());
    }

    #[test]
    fn unrooted_trees_have_two_disjoint_cherries(t in arb_tree(U, 4, 20)) {
        let ch = t.cherries();
        let found = ch.iter().any(|&(a, b)| ch.iter().any(|&(c, d)| {
            let x: TaxonSet = [a, b].into_iter().collect();
            let y: TaxonSet = [c, d].into_iter().collect();
            !x.intersects(&y) && !t.embed(&x).unwrap().shares_vertex(&t.embed(&y).unwrap())
        }));
        prop_assert!(found);
    }

    #[test]
    fn splits_determine_unrooted_trees(t in arb_tree(U, 4, 8), s in any::<u64>()) {
        let u = random_tree(U, t.num_taxa(), s).unwrap();
        let splits = |x: &PhyloTree| {
            let mut v: Vec<TaxonSet> = x.edge_nodes().map(|e| {
                let (lo, hi) = x.edge_sides(e);
                if lo.first() == Some(0) { lo } else { hi }
            }).collect();
            v.sort();
            v
        };
        prop_assert_eq!(splits(&t) == splits(&u), t.is_homeomorphic(&u).unwrap());
    }
}
