//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use maf::cli::{bench, run_corpus, CorpusArgs, ItemResult, KindArgs};
use maf::forest::{pieces_after_cut, Instance};
use maf::gen::{random_pair, random_tree};
use maf::oracle::{brute_instance, enumerate_splitting_cuts, min_separating_cut, OracleBudget};
use maf::phylo::{parse_newick, NodeId, PhyloTree, TaxonSet, TreeKind};
use maf::rmaf::fitch_min_cuts;
use maf::split_core::{build_core, refines, Bipartition};
use maf::Algorithm;

struct Line {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn kind_args(kind: TreeKind) -> KindArgs {
    KindArgs { rooted: kind == TreeKind::Rooted, unrooted: kind == TreeKind::Unrooted }
}

fn corpus_args(kind: TreeKind, count: usize, n: (usize, usize), moves: (usize, usize), seed: u64) -> CorpusArgs {
    CorpusArgs {
        kind: kind_args(kind),
        count,
        n_min: n.0,
        n_max: n.1,
        moves_min: moves.0,
        moves_max: moves.1,
        seed,
    }
}

fn agree(r: &ItemResult) -> bool {
    r.min_cuts.values().all_equal()
}

fn oracle_equivalence(name: &'static str, kind: TreeKind, n: (usize, usize), all: &mut Vec<ItemResult>) -> Line {
    let start = Instant::now();
    let args = corpus_args(kind, 300, n, (0, 4), 20_240_601);
    let algos = [Algorithm::Improved, Algorithm::Baseline, Algorithm::Oracle];
    let results = match run_corpus(&args, &algos) {
        Ok(r) => r,
        Err(e) => return Line { name, ok: false, detail: format!("error: {e}") },
    };
    let elapsed = start.elapsed();
    let bad: Vec<&ItemResult> = results.iter().filter(|r| !agree(r)).collect();
    let detail = match bad.first() {
        None => format!("{} pairs agree in {:.1}s", results.len(), elapsed.as_secs_f64()),
        Some(r) => format!("{} mismatches; first seed {} n {} moves {}", bad.len(), r.item.seed, r.item.n, r.item.moves),
    };
    let ok = bad.is_empty() && elapsed < Duration::from_secs(300);
    all.extend(results);
    Line { name, ok, detail }
}

/// Rooted unlabeled shapes with `n` leaves, as nested strings over `L`.
fn rooted_shapes(n: usize) -> Vec<String> {
    if n == 1 {
        return vec!["L".into()];
    }
    let mut out = BTreeSet::new();
    for a in 1..=n / 2 {
        for x in rooted_shapes(a) {
            for y in rooted_shapes(n - a) {
                let (p, q) = if a == n - a && y < x { (&y, &x) } else { (&x, &y) };
                out.insert(format!("({p},{q})"));
            }
        }
    }
    out.into_iter().collect()
}

fn label_shape(shape: &str) -> String {
    let n = shape.matches('L').count();
    let w = n.saturating_sub(1).to_string().len();
    let mut i = 0;
    let mut s = String::new();
    for ch in shape.chars() {
        if ch == 'L' {
            s.push_str(&format!("t{:0w$}", i, w = w));
            i += 1;
        } else {
            s.push(ch);
        }
    }
    s + ";"
}

fn canon_from(tree: &PhyloTree, v: NodeId, from: Option<NodeId>) -> String {
    let mut parts: Vec<String> =
        tree.neighbors(v).filter(|&u| Some(u) != from).map(|u| canon_from(tree, u, Some(v))).collect();
    if parts.is_empty() {
        return "L".into();
    }
    parts.sort();
    format!("({})", parts.join(","))
}

fn unrooted_canon(tree: &PhyloTree) -> String {
    (0..tree.node_count()).map(|v| canon_from(tree, v, None)).min().unwrap_or_default()
}

/// One tree per shape with `lo..=hi` leaves.
fn all_shapes(kind: TreeKind, lo: usize, hi: usize) -> Vec<PhyloTree> {
    let mut out = Vec::new();
    for n in lo..=hi {
        let mut seen = BTreeSet::new();
        for s in rooted_shapes(n) {
            let t = parse_newick(&label_shape(&s), kind).expect("generated shape parses");
            if kind == TreeKind::Rooted || seen.insert(unrooted_canon(&t)) {
                out.push(t);
            }
        }
    }
    out
}

/// Returns (weight failures, unrefined splitting cuts, sample description).
fn check_core(tree: &PhyloTree, y: TaxonSet) -> (usize, usize, Option<String>) {
    let bip = Bipartition::new(tree, y.clone()).expect("non-trivial bipartition");
    let core = match build_core(tree, &bip, None) {
        Ok(c) => c,
        Err(e) => return (1, 0, Some(format!("{} {:?}: {e}", tree.to_newick(), tree.label_set(&y)))),
    };
    let weight_bad = usize::from(!core.weight_ok());
    let unrefined = enumerate_splitting_cuts(tree, &bip, 4)
        .iter()
        .filter(|k| !core.cuts.iter().any(|c| refines(tree, k, c)))
        .count();
    let sample = (weight_bad + unrefined > 0).then(|| format!("{} side {:?}", tree.to_newick(), tree.label_set(&y)));
    (weight_bad, unrefined, sample)
}

fn splitting_core() -> Line {
    let name = "splitting-core soundness";
    let mut cases = 0;
    let (mut weight_bad, mut unrefined, mut sample) = (0, 0, None);
    let mut tally = |(w, u, s): (usize, usize, Option<String>)| {
        cases += 1;
        weight_bad += w;
        unrefined += u;
        if sample.is_none() {
            sample = s;
        }
    };
    for tree in all_shapes(TreeKind::Unrooted, 2, 6) {
        let taxa: Vec<usize> = tree.taxa().iter().collect();
        // each unordered bipartition once: the first taxon stays on the Z side
        for mask in 1u32..(1 << (taxa.len() - 1)) {
            let y: TaxonSet = (0..taxa.len() - 1).filter(|i| mask >> i & 1 == 1).map(|i| taxa[i + 1]).collect();
            tally(check_core(&tree, y));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut sampled = 0;
    while sampled < 200 {
        let n = rng.gen_range(7..=8);
        let tree = random_tree(TreeKind::Unrooted, n, rng.gen()).expect("random tree");
        let y: TaxonSet = tree.taxa().iter().filter(|_| rng.gen_bool(0.5)).collect();
        if y.is_empty() || y == *tree.taxa() {
            continue;
        }
        tally(check_core(&tree, y));
        sampled += 1;
    }
    Line {
        name,
        ok: weight_bad == 0 && unrefined == 0,
        detail: format!(
            "{cases} cases, {weight_bad} weight failures, {unrefined} unrefined cuts{}",
            sample.map(|s| format!("; e.g. {s}")).unwrap_or_default()
        ),
    }
}

fn fitch() -> Line {
    let name = "fitch minimum";
    let mut shapes = all_shapes(TreeKind::Rooted, 2, 8);
    shapes.extend(all_shapes(TreeKind::Unrooted, 2, 8));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut runs, mut bad, mut sample) = (0, 0, None);
    for tree in &shapes {
        for _ in 0..100 {
            let q = rng.gen_range(2..=4);
            let states: Vec<usize> = (0..tree.labels().len()).map(|_| rng.gen_range(0..q)).collect();
            let state = |t: usize| states[t];
            let exact = min_separating_cut(tree, &state);
            let ok = match fitch_min_cuts(tree, &state) {
                Ok((cost, cut)) => {
                    cost == exact
                        && pieces_after_cut(tree, &cut).iter().all(|p| p.iter().map(state).all_equal())
                }
                Err(_) => false,
            };
            runs += 1;
            if !ok {
                bad += 1;
                sample.get_or_insert_with(|| format!("{} states {:?}", tree.to_newick(), states));
            }
        }
    }
    Line {
        name,
        ok: bad == 0,
        detail: format!(
            "{} shapes, {runs} labelings, {bad} wrong{}",
            shapes.len(),
            sample.map(|s| format!("; e.g. {s}")).unwrap_or_default()
        ),
    }
}

fn tidy_invariance() -> Line {
    let name = "tidy invariance";
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut bad, mut collapsed, mut sample) = (0, 0, None);
    for i in 0..200 {
        let kind = if i % 2 == 0 { TreeKind::Rooted } else { TreeKind::Unrooted };
        let n = rng.gen_range(4..=9);
        let seed = rng.gen();
        let (t1, t2) = random_pair(kind, n, rng.gen_range(0..=4), seed).expect("random pair");
        let mut inst = Instance::new(&t1, &t2, n).expect("instance");
        let edges: Vec<NodeId> = inst.comps[0].tree.edge_nodes().collect();
        let cut: Vec<NodeId> = (0..rng.gen_range(0..=3)).map(|_| edges[rng.gen_range(0..edges.len())]).collect();
        inst = inst.cut_nodes(0, &cut).0;
        let mut tidied = inst.clone();
        tidied.tidy();
        if tidied.live_taxa().len() < inst.live_taxa().len() {
            collapsed += 1;
        }
        let budget = OracleBudget::new(n);
        let before = brute_instance(&inst, budget).map(|r| r.map(|r| r.cuts));
        let after = brute_instance(&tidied, budget).map(|r| r.map(|r| r.cuts));
        let same = matches!((&before, &after), (Ok(a), Ok(b)) if a == b && a.is_some());
        if !same {
            bad += 1;
            sample.get_or_insert_with(|| format!("{kind:?} seed {seed}: {before:?} vs {after:?}"));
        }
    }
    Line {
        name,
        ok: bad == 0,
        detail: format!(
            "200 instances ({collapsed} reduced), {bad} changed optimum{}",
            sample.map(|s| format!("; e.g. {s}")).unwrap_or_default()
        ),
    }
}

fn bench_criterion(all: &mut Vec<ItemResult>) -> Line {
    let name = "bench n=50";
    let algos = [Algorithm::Improved, Algorithm::Baseline];
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in [TreeKind::Rooted, TreeKind::Unrooted] {
        let args = corpus_args(kind, 20, (50, 50), (4, 10), 2024);
        let (first, second) = match (bench(&args, &algos), bench(&args, &algos)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Line { name, ok: false, detail: format!("error: {e}") },
        };
        let deterministic = serde_json::to_string(&first).ok() == serde_json::to_string(&second).ok();
        let imp = first.summary["improved"].median_nodes;
        let base = first.summary["baseline"].median_nodes;
        let same_k = first.items.iter().all(agree);
        ok &= deterministic && same_k && imp <= base;
        parts.push(format!(
            "{kind:?} median nodes improved {imp} baseline {base}{}{}",
            if deterministic { "" } else { " (not deterministic)" },
            if same_k { "" } else { " (optimum differs)" }
        ));
        all.extend(first.items);
    }
    Line { name, ok, detail: parts.join("; ") }
}

fn main() {
    let mut lines = Vec::new();
    let mut items = Vec::new();
    lines.push(oracle_equivalence("unrooted oracle equivalence", TreeKind::Unrooted, (4, 9), &mut items));
    lines.push(oracle_equivalence("rooted oracle equivalence", TreeKind::Rooted, (3, 9), &mut items));
    lines.push(splitting_core());
    lines.push(fitch());
    lines.push(tidy_invariance());
    let bench_line = bench_criterion(&mut items);
    let violations: u64 = items.iter().map(|r| r.profile_violations).sum();
    lines.push(Line {
        name: "rule-shape audit",
        ok: violations == 0,
        detail: format!("{violations} violations over {} solved instances", items.len()),
    });
    let invalid = items.iter().filter(|r| !r.witnesses_valid).count();
    lines.push(Line {
        name: "witness validity",
        ok: invalid == 0,
        detail: format!("{}/{} instances with valid witnesses", items.len() - invalid, items.len()),
    });
    lines.push(bench_line);
    for l in &lines {
        println!("{} {}: {}", if l.ok { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    if lines.iter().any(|l| !l.ok) {
        std::process::exit(1);
    }
}
