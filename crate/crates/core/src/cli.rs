//! The `maf` command line: solve, oracle, gen, verify, bench and core.
//!
//! Exit codes: 0 feasible (or success), 2 infeasible within `--max-k`,
//! 1 error or verification mismatch.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{MafError, Result};
use crate::forest::is_agreement_forest;
use crate::gen::{corpus, random_pair, CorpusItem};
use crate::phylo::{parse_pair, read_tree_lines, BitSet, PhyloTree, TreeKind};
use crate::search::{solve_min, Algorithm, SolveResult};
use crate::split_core::{build_core, Bipartition};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "maf", version, about = "Maximum agreement forests of binary phylogenetic trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimum number of cuts and a maximum agreement forest for two trees.
    Solve(SolveArgs),
    /// Exhaustive reference solve.
    Oracle(OracleArgs),
    /// Print a random tree and an SPR-perturbed copy.
    Gen(GenArgs),
    /// Compare improved, baseline and oracle on a random corpus.
    Verify(VerifyArgs),
    /// Recursion-node counts per algorithm on a random corpus.
    Bench(BenchArgs),
    /// Splitting core of a tree for a bipartition of its taxa.
    Core(CoreArgs),
}

#[derive(Args, Debug, Clone, Copy)]
#[group(required = true, multiple = false)]
pub struct KindArgs {
    #[arg(long)]
    pub rooted: bool,
    #[arg(long)]
    pub unrooted: bool,
}

impl KindArgs {
    fn kind(&self) -> TreeKind {
        if self.rooted {
            TreeKind::Rooted
        } else {
            TreeKind::Unrooted
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgoArg {
    Improved,
    Baseline,
    Oracle,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Algorithm {
        match a {
            AlgoArg::Improved => Algorithm::Improved,
            AlgoArg::Baseline => Algorithm::Baseline,
            AlgoArg::Oracle => Algorithm::Oracle,
        }
    }
}

#[derive(Args, Debug)]
pub struct InputArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    /// Newick file with the first tree, or with both trees on two lines.
    pub first: PathBuf,
    /// Newick file with the second tree.
    pub second: Option<PathBuf>,
    /// Largest number of cuts to try (default: one less than the number of taxa).
    #[arg(long)]
    pub max_k: Option<usize>,
    /// Print a JSON report instead of a summary.
    #[arg(long)]
    pub json: bool,
    /// Include wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "improved")]
    pub algo: AlgoArg,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub moves: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 4)]
    pub n_min: usize,
    #[arg(long, default_value_t = 9)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0)]
    pub moves_min: usize,
    #[arg(long, default_value_t = 4)]
    pub moves_max: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["improved", "baseline"])]
    pub algos: Vec<AlgoArg>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct CoreArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    /// Newick file with the tree.
    pub tree: PathBuf,
    /// Comma-separated taxa of one side of the bipartition.
    #[arg(long, value_delimiter = ',', required = true)]
    pub side: Vec<String>,
    /// Largest core cut to generate.
    #[arg(long)]
    pub max_size: Option<usize>,
}

#[derive(Serialize, Debug)]
pub struct InputDigests {
    pub first_sha256: String,
    pub second_sha256: String,
}

/// The JSON report of `solve` and `oracle`.
#[derive(Serialize, Debug)]
pub struct RunReport {
    pub schema_version: u32,
    pub kind: TreeKind,
    pub inputs: InputDigests,
    pub algorithm: Algorithm,
    pub taxa: usize,
    pub feasible: bool,
    pub min_cuts: Option<usize>,
    pub components: Option<usize>,
    pub forest: Option<Vec<Vec<String>>>,
    pub recursion_nodes: u64,
    pub rule_fires: BTreeMap<&'static str, u64>,
    pub profile_violations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

fn digest(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

fn read_input(args: &InputArgs) -> Result<(String, String)> {
    let mut lines = read_tree_lines(&args.first)?;
    if let Some(second) = &args.second {
        if lines.len() != 1 {
            return Err(MafError::Parse { pos: 0, msg: format!("{}: expected one tree", args.first.display()) });
        }
        let more = read_tree_lines(second)?;
        if more.len() != 1 {
            return Err(MafError::Parse { pos: 0, msg: format!("{}: expected one tree", second.display()) });
        }
        lines.extend(more);
    } else if lines.len() != 2 {
        return Err(MafError::Parse {
            pos: 0,
            msg: format!("{}: expected two trees on separate lines", args.first.display()),
        });
    }
    let second = lines.pop().unwrap();
    Ok((lines.pop().unwrap(), second))
}

fn forest_labels(tree: &PhyloTree, forest: &[BitSet]) -> Vec<Vec<String>> {
    forest.iter().map(|b| tree.label_set(b)).collect()
}

/// Solve the pair in `args`, verify the witness and build the report.
pub fn run_solve(args: &InputArgs, algo: Algorithm) -> Result<RunReport> {
    let (s1, s2) = read_input(args)?;
    let kind = args.kind.kind();
    let (t1, t2) = parse_pair(&s1, &s2, kind)?;
    let start = Instant::now();
    let r = solve_min(&t1, &t2, algo, args.max_k)?;
    let wall = start.elapsed();
    if let Some(f) = &r.forest {
        if !is_agreement_forest(&t1, &t2, f)? {
            return Err(MafError::Internal("witness is not an agreement forest".into()));
        }
    }
    Ok(report(kind, &s1, &s2, &t1, algo, &r, args.timing.then_some(wall.as_secs_f64() * 1e3)))
}

fn report(
    kind: TreeKind,
    s1: &str,
    s2: &str,
    t1: &PhyloTree,
    algo: Algorithm,
    r: &SolveResult,
    wall_ms: Option<f64>,
) -> RunReport {
    RunReport {
        schema_version: SCHEMA_VERSION,
        kind,
        inputs: InputDigests { first_sha256: digest(s1), second_sha256: digest(s2) },
        algorithm: algo,
        taxa: t1.num_taxa(),
        feasible: r.min_cuts.is_some(),
        min_cuts: r.min_cuts,
        components: r.components(),
        forest: r.forest.as_ref().map(|f| forest_labels(t1, f)),
        recursion_nodes: r.stats.nodes,
        rule_fires: r.stats.fires.clone(),
        profile_violations: r.stats.profile_violations,
        wall_ms,
    }
}

fn print_report(out: &mut dyn Write, rep: &RunReport, json: bool) -> Result<()> {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(rep).expect("serializable report"))?;
        return Ok(());
    }
    match rep.min_cuts {
        None => writeln!(out, "infeasible: no agreement forest within the cut limit")?,
        Some(k) => {
            writeln!(out, "min_cuts: {}", k)?;
            writeln!(out, "components: {}", rep.components.unwrap_or(0))?;
            let blocks: Vec<String> =
                rep.forest.iter().flatten().map(|b| format!("{{{}}}", b.join(","))).collect();
            writeln!(out, "forest: {}", blocks.join(" "))?;
        }
    }
    writeln!(out, "recursion_nodes: {}", rep.recursion_nodes)?;
    if let Some(ms) = rep.wall_ms {
        writeln!(out, "wall_ms: {:.3}", ms)?;
    }
    Ok(())
}

/// Result of one corpus item under several algorithms.
#[derive(Serialize, Debug, Clone)]
pub struct ItemResult {
    #[serde(flatten)]
    pub item: CorpusItem,
    pub min_cuts: BTreeMap<String, Option<usize>>,
    pub nodes: BTreeMap<String, u64>,
    pub profile_violations: u64,
    pub witnesses_valid: bool,
}

fn run_item(kind: TreeKind, item: CorpusItem, algos: &[Algorithm]) -> Result<ItemResult> {
    let (t1, t2) = item.pair(kind)?;
    let mut min_cuts = BTreeMap::new();
    let mut nodes = BTreeMap::new();
    let mut violations = 0;
    let mut valid = true;
    for &a in algos {
        let r = solve_min(&t1, &t2, a, None)?;
        if let Some(f) = &r.forest {
            valid &= is_agreement_forest(&t1, &t2, f)?;
        }
        violations += r.stats.profile_violations;
        min_cuts.insert(a.to_string(), r.min_cuts);
        nodes.insert(a.to_string(), r.stats.nodes);
    }
    Ok(ItemResult { item, min_cuts, nodes, profile_violations: violations, witnesses_valid: valid })
}

/// Run every corpus item under `algos`, in parallel; results keep corpus order.
pub fn run_corpus(args: &CorpusArgs, algos: &[Algorithm]) -> Result<Vec<ItemResult>> {
    let items = corpus(args.count, (args.n_min, args.n_max), (args.moves_min, args.moves_max), args.seed)?;
    let kind = args.kind.kind();
    with_pool(|| items.par_iter().map(|&it| run_item(kind, it, algos)).collect())
}

/// Thread count from `MAF_THREADS`, else rayon's default.
fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var("MAF_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[derive(Serialize, Debug)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub kind: TreeKind,
    pub instances: usize,
    pub mismatches: Vec<ItemResult>,
    pub invalid_witnesses: usize,
    pub profile_violations: u64,
}

pub fn verify(args: &CorpusArgs) -> Result<VerifyReport> {
    let results = run_corpus(args, &[Algorithm::Improved, Algorithm::Baseline, Algorithm::Oracle])?;
    let mismatches: Vec<ItemResult> = results
        .iter()
        .filter(|r| {
            let mut v = r.min_cuts.values();
            let first = v.next().copied().flatten();
            v.any(|x| *x != first)
        })
        .cloned()
        .collect();
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        kind: args.kind.kind(),
        instances: results.len(),
        mismatches,
        invalid_witnesses: results.iter().filter(|r| !r.witnesses_valid).count(),
        profile_violations: results.iter().map(|r| r.profile_violations).sum(),
    })
}

#[derive(Serialize, Debug, PartialEq)]
pub struct AlgoSummary {
    pub median_nodes: f64,
    pub total_nodes: u64,
    /// Median node count per optimum `k`.
    pub median_nodes_by_k: BTreeMap<usize, f64>,
}

#[derive(Serialize, Debug)]
pub struct BenchReport {
    pub schema_version: u32,
    pub kind: TreeKind,
    pub seed: u64,
    pub items: Vec<ItemResult>,
    pub summary: BTreeMap<String, AlgoSummary>,
}

pub fn median(values: &mut [u64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable();
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m] as f64
    } else {
        (values[m - 1] + values[m]) as f64 / 2.0
    }
}

pub fn bench(args: &CorpusArgs, algos: &[Algorithm]) -> Result<BenchReport> {
    let items = run_corpus(args, algos)?;
    let mut summary = BTreeMap::new();
    for a in algos {
        let name = a.to_string();
        let mut all: Vec<u64> = items.iter().map(|r| r.nodes[&name]).collect();
        let total = all.iter().sum();
        let mut by_k: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for r in &items {
            if let Some(k) = r.min_cuts[&name] {
                by_k.entry(k).or_default().push(r.nodes[&name]);
            }
        }
        summary.insert(
            name,
            AlgoSummary {
                median_nodes: median(&mut all),
                total_nodes: total,
                median_nodes_by_k: by_k.into_iter().map(|(k, mut v)| (k, median(&mut v))).collect(),
            },
        );
    }
    Ok(BenchReport { schema_version: SCHEMA_VERSION, kind: args.kind.kind(), seed: args.seed, items, summary })
}

pub fn bench_csv(rep: &BenchReport, algos: &[Algorithm]) -> String {
    let mut s = String::from("index,seed,n,moves");
    for a in algos {
        s.push_str(&format!(",{a}_min_cuts,{a}_nodes"));
    }
    s.push('\n');
    for r in &rep.items {
        s.push_str(&format!("{},{},{},{}", r.item.index, r.item.seed, r.item.n, r.item.moves));
        for a in algos {
            let name = a.to_string();
            let k = r.min_cuts[&name].map(|k| k.to_string()).unwrap_or_default();
            s.push_str(&format!(",{},{}", k, r.nodes[&name]));
        }
        s.push('\n');
    }
    s
}

fn algos_of(args: &[AlgoArg]) -> Vec<Algorithm> {
    let mut out: Vec<Algorithm> = Vec::new();
    for &a in args {
        let a = Algorithm::from(a);
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

/// Run a parsed command, writing to `out`; returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Solve(a) => {
            let rep = run_solve(&a.input, a.algo.into())?;
            print_report(out, &rep, a.input.json)?;
            Ok(if rep.feasible { 0 } else { 2 })
        }
        Command::Oracle(a) => {
            let rep = run_solve(&a.input, Algorithm::Oracle)?;
            print_report(out, &rep, a.input.json)?;
            Ok(if rep.feasible { 0 } else { 2 })
        }
        Command::Gen(a) => {
            if a.n < 2 {
                return Err(MafError::TaxonSet("--n must be at least 2".into()));
            }
            let (t1, t2) = random_pair(a.kind.kind(), a.n, a.moves, a.seed)?;
            writeln!(out, "{}", t1.to_newick())?;
            writeln!(out, "{}", t2.to_newick())?;
            Ok(0)
        }
        Command::Verify(a) => {
            let rep = verify(&a.corpus)?;
            if a.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&rep).expect("serializable report"))?;
            } else {
                writeln!(out, "instances: {}", rep.instances)?;
                writeln!(out, "mismatches: {}", rep.mismatches.len())?;
                for m in &rep.mismatches {
                    writeln!(out, "  seed {} n {} moves {}: {:?}", m.item.seed, m.item.n, m.item.moves, m.min_cuts)?;
                }
                writeln!(out, "invalid_witnesses: {}", rep.invalid_witnesses)?;
                writeln!(out, "profile_violations: {}", rep.profile_violations)?;
            }
            let ok = rep.mismatches.is_empty() && rep.invalid_witnesses == 0 && rep.profile_violations == 0;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Bench(a) => {
            let algos = algos_of(&a.algos);
            let rep = bench(&a.corpus, &algos)?;
            match a.format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rep).expect("serializable report"))?,
                Format::Csv => write!(out, "{}", bench_csv(&rep, &algos))?,
            }
            Ok(0)
        }
        Command::Core(a) => {
            let lines = read_tree_lines(&a.tree)?;
            let [line] = lines.as_slice() else {
                return Err(MafError::Parse { pos: 0, msg: format!("{}: expected one tree", a.tree.display()) });
            };
            let tree = crate::phylo::parse_newick(line, a.kind.kind())?;
            let mut y = BitSet::new();
            for name in &a.side {
                let t = tree
                    .labels()
                    .iter()
                    .position(|l| l == name)
                    .ok_or_else(|| MafError::TaxonSet(format!("unknown taxon '{}'", name)))?;
                y.insert(t);
            }
            let bip = Bipartition::new(&tree, y)?;
            let core = build_core(&tree, &bip, a.max_size)?;
            #[derive(Serialize)]
            struct CoreReport {
                schema_version: u32,
                weight_ok: bool,
                cuts: Vec<crate::split_core::CoreCutJson>,
            }
            let rep = CoreReport { schema_version: SCHEMA_VERSION, weight_ok: core.weight_ok(), cuts: core.to_json(&tree) };
            writeln!(out, "{}", serde_json::to_string_pretty(&rep).expect("serializable report"))?;
            Ok(0)
        }
    }
}

/// Entry point of the binary.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {}", e);
            1
        }
    }
}
