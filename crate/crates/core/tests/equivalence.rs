use maf::gen::random_pair;
use maf::phylo::TreeKind;
use maf::{solve_min, Algorithm};

fn check(kind: TreeKind, seeds: std::ops::Range<u64>, n: (usize, usize)) {
    for seed in seeds {
        let size = n.0 + (seed as usize % (n.1 - n.0 + 1));
        let moves = (seed as usize / 7) % 5;
        let (t1, t2) = random_pair(kind, size, moves, seed).unwrap();
        let o = solve_min(&t1, &t2, Algorithm::Oracle, None).unwrap().min_cuts;
        let b = solve_min(&t1, &t2, Algorithm::Baseline, None).unwrap().min_cuts;
        let i = solve_min(&t1, &t2, Algorithm::Improved, None)
            .unwrap_or_else(|e| panic!("seed {} {} | {}: {}", seed, t1.to_newick(), t2.to_newick(), e))
            .min_cuts;
        assert_eq!((b, i), (o, o), "seed {} {} | {}", seed, t1.to_newick(), t2.to_newick());
    }
}

#[test]
fn unrooted_small_corpus_matches_oracle() {
    check(TreeKind::Unrooted, 0..150, (4, 9));
}

#[test]
fn rooted_small_corpus_matches_oracle() {
    check(TreeKind::Rooted, 0..150, (3, 9));
}
