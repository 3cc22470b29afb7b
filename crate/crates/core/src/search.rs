//! The branching driver shared by the rooted and unrooted solvers.
//!
//! Every query asks for the minimum number of further cuts, provided it is
//! at most the instance budget. Children of a branching rule are explored in
//! order; once a solution is known, later children only get the budget that
//! could still improve on it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MafError, Result};
use crate::forest::{is_agreement_forest, Instance};
use crate::oracle::{brute_maf, depth_limited_solve, OracleBudget};
use crate::phylo::{PhyloTree, TaxonSet, TreeKind};
use crate::split_core::{split_branches, weight_at_most_half};
use crate::{rmaf, umaf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// The split-or-decompose algorithms.
    Improved,
    /// Chen et al. for unrooted trees, Whidden et al. for rooted trees.
    Baseline,
    /// Exhaustive enumeration.
    Oracle,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Improved => "improved",
            Algorithm::Baseline => "baseline",
            Algorithm::Oracle => "oracle",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "improved" => Ok(Algorithm::Improved),
            "baseline" => Ok(Algorithm::Baseline),
            "oracle" => Ok(Algorithm::Oracle),
            _ => Err(format!("unknown algorithm '{}'", s)),
        }
    }
}

/// One firing of a branching rule.
#[derive(Clone, Debug, Serialize)]
pub struct RuleFire {
    pub rule: &'static str,
    /// Number of edges hanging off the cherry path, where meaningful.
    pub t: usize,
    /// Cuts charged per child, before budget pruning.
    pub cuts: Vec<usize>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Stats {
    /// Search-tree nodes visited.
    pub nodes: u64,
    pub fires: BTreeMap<&'static str, u64>,
    pub profile_violations: u64,
    /// The first few violating firings, for diagnostics.
    pub violation_samples: Vec<String>,
}

impl Stats {
    pub fn merge(&mut self, other: &Stats) {
        self.nodes += other.nodes;
        for (k, v) in &other.fires {
            *self.fires.entry(k).or_default() += v;
        }
        self.profile_violations += other.profile_violations;
        for s in &other.violation_samples {
            if self.violation_samples.len() < 16 {
                self.violation_samples.push(s.clone());
            }
        }
    }

    pub(crate) fn record(&mut self, fire: RuleFire) {
        *self.fires.entry(fire.rule).or_default() += 1;
        if !profile_ok(&fire) {
            self.profile_violations += 1;
            if self.violation_samples.len() < 16 {
                self.violation_samples.push(format!("{:?}", fire));
            }
        }
    }
}

/// Whether the per-child cut counts of a firing match the shape of its rule.
pub fn profile_ok(f: &RuleFire) -> bool {
    let c = f.cuts.as_slice();
    let t = f.t;
    match f.rule {
        "different_components" => c == [1, 1],
        "chen_t2" => c == [1, 1, 1],
        "chen_t_ge3" | "chen_t_ge4" => {
            t >= if f.rule == "chen_t_ge3" { 3 } else { 4 }
                && c.len() == t + 2
                && c[..2] == [1, 1]
                && c[2..].iter().all(|&x| x == t - 1)
        }
        "chen_t2_strong" => t == 2 && c == [1, 1],
        "chen_t3_two_singletons" => t == 3 && c == [1, 1, 2, 2],
        "chen_t3" => t == 3 && c == [1, 1, 2, 2, 2],
        "subtree" => c == [1],
        "three_blocks" => c == [1, 1],
        "whidden_t1" => t == 1 && c == [1],
        "whidden_t2" => t == 2 && c == [1, 1, 2],
        "whidden_t_ge2" | "whidden_t_ge3" => t >= 2 && c == [1, 1, t],
        "unify" => c.len() == 3 && c[0] == 2 && c[1] == 1 && c[2] >= 2,
        "twohomeoroot_all_homeomorphic" => c == [1, 1, 2],
        "twohomeoroot_case1" => c == [2],
        "twohomeoroot_case2" | "twohomeoroot_case3_cherry" => c == [2, 2, 2, 2, 2],
        "twohomeoroot_case3_1" => c == [1, 1],
        "twohomeoroot_case3_2_1" | "twohomeoroot_case3_2_3" => c == [2, 1],
        "twohomeoroot_case3_2_2" => {
            c.len() >= 3 && c[..2] == [2, 1] && (c[2..] == [2, 2] || (c.len() == 3 && c[2] >= 2))
        }
        "weirdoverlap" => c == [1],
        "fitch" => c.len() == 1 && c[0] >= 1,
        "split" => c.iter().all(|&x| x >= 1),
        "recursion" => true,
        _ => false,
    }
}

/// The minimum number of cuts and a witness forest over original taxa.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub cuts: usize,
    pub forest: Vec<TaxonSet>,
}

pub(crate) struct Ctx {
    pub algo: Algorithm,
    pub stats: Stats,
}

pub(crate) struct Child {
    pub inst: Instance,
    pub charge: usize,
    /// The double-cut child of the rooted `t = 2` rule, which gets one shot
    /// at the overlap-repair rules before splitting.
    pub after_whidden2: bool,
}

impl Child {
    pub fn new((inst, charge): (Instance, usize)) -> Child {
        Child { inst, charge, after_whidden2: false }
    }
}

pub(crate) enum Step {
    Branch { fire: RuleFire, children: Vec<Child> },
    Solved(Option<Outcome>),
}

impl Step {
    pub fn branch(rule: &'static str, t: usize, children: Vec<Child>) -> Step {
        let cuts = children.iter().map(|c| c.charge).collect();
        Step::Branch { fire: RuleFire { rule, t, cuts }, children }
    }
}

impl Ctx {
    pub fn new(algo: Algorithm) -> Ctx {
        Ctx { algo, stats: Stats::default() }
    }

    /// Solve a tidied or untidied instance to depth `inst.budget`.
    pub fn solve(&mut self, mut inst: Instance, after_whidden2: bool) -> Result<Option<Outcome>> {
        inst.tidy();
        self.stats.nodes += 1;
        if inst.is_terminal() {
            return Ok(Some(Outcome { cuts: 0, forest: inst.forest() }));
        }
        if inst.budget == 0 {
            return Ok(None);
        }
        let kind = inst.kind().expect("non-terminal instance has a host");
        let step = match (self.algo, kind) {
            (Algorithm::Baseline, TreeKind::Unrooted) => umaf::chen_step(&inst)?,
            (Algorithm::Baseline, TreeKind::Rooted) => rmaf::whidden_step(&inst)?,
            (Algorithm::Improved, _) if inst.is_tree_tree() => match kind {
                TreeKind::Unrooted => umaf::improved_step(&inst)?,
                TreeKind::Rooted => rmaf::improved_step(self, &inst)?,
            },
            (Algorithm::Improved, _) => return self.solve_forest(inst, kind, after_whidden2),
            (Algorithm::Oracle, _) => return Err(MafError::Internal("oracle has no branching step".into())),
        };
        self.run(&inst, step)
    }

    fn run(&mut self, inst: &Instance, step: Step) -> Result<Option<Outcome>> {
        match step {
            Step::Solved(out) => Ok(out),
            Step::Branch { fire, children } => {
                self.stats.record(fire);
                self.explore(inst.budget, children)
            }
        }
    }

    fn explore(&mut self, budget: usize, children: Vec<Child>) -> Result<Option<Outcome>> {
        let mut best: Option<Outcome> = None;
        for child in children {
            let limit = match &best {
                Some(b) if b.cuts == 0 => break,
                Some(b) => b.cuts - 1,
                None => budget,
            };
            if child.charge > limit {
                continue;
            }
            let mut inst = child.inst;
            inst.budget = limit - child.charge;
            if let Some(o) = self.solve(inst, child.after_whidden2)? {
                let total = o.cuts + child.charge;
                if best.as_ref().is_none_or(|b| total < b.cuts) {
                    best = Some(Outcome { cuts: total, forest: o.forest });
                }
            }
        }
        Ok(best)
    }

    /// Tree–forest stage: optional overlap repair, SPLIT while components
    /// overlap, then the recursion rule.
    fn solve_forest(&mut self, inst: Instance, kind: TreeKind, after_whidden2: bool) -> Result<Option<Outcome>> {
        if after_whidden2 && kind == TreeKind::Rooted {
            if let Some(step) = rmaf::repair_step(&inst)? {
                return self.run(&inst, step);
            }
        }
        let overlap = inst.overlap_analysis();
        if let Some(&(i, j)) = overlap.pairs.first() {
            let (children, sizes) = split_branches(&inst, i, j)?;
            let cuts: Vec<usize> = children.iter().map(|c| c.charge).collect();
            let mut fire = RuleFire { rule: "split", t: 0, cuts };
            if !sizes.iter().all(|s| weight_at_most_half(s.iter().copied())) {
                fire.rule = "split_weight";
            }
            self.stats.record(fire);
            let children = children.into_iter().map(|c| Child::new((c.inst, c.charge))).collect();
            return self.explore(inst.budget, children);
        }
        let t = if kind == TreeKind::Rooted { 1 } else { 0 };
        self.recursion_rule(&inst, t)
    }

    /// Solve a disjoint instance component by component: first to depth `t`,
    /// then the failures to the depth the others leave over.
    fn recursion_rule(&mut self, inst: &Instance, t: usize) -> Result<Option<Outcome>> {
        self.stats.record(RuleFire { rule: "recursion", t, cuts: Vec::new() });
        let host = inst.host.as_ref().expect("live instance");
        let k = inst.budget;
        let pairs: Vec<(PhyloTree, PhyloTree)> =
            inst.comps.iter().map(|c| (host.restrict(&c.block).expect("block of host"), c.tree.clone())).collect();
        let mut first = Vec::with_capacity(pairs.len());
        for (h, c) in &pairs {
            first.push(depth_limited_solve(h, c, t)?);
        }
        let r_prime: Vec<usize> = first.iter().map(|r| r.as_ref().map_or(t + 1, |x| x.cuts)).collect();
        let total_prime: usize = r_prime.iter().sum();
        let mut forest = inst.finalized.clone();
        let mut total = 0;
        for (i, (h, c)) in pairs.into_iter().enumerate() {
            match &first[i] {
                Some(r) => {
                    total += r.cuts;
                    forest.extend(r.blocks.iter().map(|b| inst.expand(b)));
                }
                None => {
                    let others = total_prime - r_prime[i];
                    if others > k {
                        return Ok(None);
                    }
                    let sub = Instance::pair(h, c, inst.origin.clone(), k - others);
                    match self.solve(sub, false)? {
                        Some(o) => {
                            total += o.cuts;
                            forest.extend(o.forest);
                        }
                        None => return Ok(None),
                    }
                }
            }
        }
        if total > k {
            return Ok(None);
        }
        forest.sort();
        Ok(Some(Outcome { cuts: total, forest }))
    }
}

/// Result of a top-level query.
#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Minimum number of cuts, if at most the budget.
    pub min_cuts: Option<usize>,
    /// A maximum agreement forest over the input taxa.
    pub forest: Option<Vec<TaxonSet>>,
    pub stats: Stats,
}

impl SolveResult {
    pub fn components(&self) -> Option<usize> {
        self.forest.as_ref().map(Vec::len)
    }
}

/// Minimum cuts turning `t2` into an agreement forest with `t1`, if at most `k`.
pub fn solve(t1: &PhyloTree, t2: &PhyloTree, k: usize, algo: Algorithm) -> Result<SolveResult> {
    let inst = Instance::new(t1, t2, k)?;
    if algo == Algorithm::Oracle {
        let r = brute_maf(t1, t2, OracleBudget::new(k))?;
        return Ok(SolveResult {
            min_cuts: r.as_ref().map(|r| r.cuts),
            forest: r.map(|r| r.blocks),
            stats: Stats::default(),
        });
    }
    let mut ctx = Ctx::new(algo);
    let out = ctx.solve(inst, false)?;
    if let Some(o) = &out {
        if !is_agreement_forest(t1, t2, &o.forest)? || o.forest.len() != o.cuts + 1 {
            return Err(MafError::Internal(format!("invalid witness forest with {} cuts", o.cuts)));
        }
    }
    Ok(SolveResult { min_cuts: out.as_ref().map(|o| o.cuts), forest: out.map(|o| o.forest), stats: ctx.stats })
}

/// Unrooted query; both trees must be unrooted.
pub fn solve_umaf(t1: &PhyloTree, t2: &PhyloTree, k: usize, algo: Algorithm) -> Result<SolveResult> {
    if t1.kind() != TreeKind::Unrooted || t2.kind() != TreeKind::Unrooted {
        return Err(MafError::KindMismatch);
    }
    solve(t1, t2, k, algo)
}

/// Rooted query; both trees must be rooted.
pub fn solve_rmaf(t1: &PhyloTree, t2: &PhyloTree, k: usize, algo: Algorithm) -> Result<SolveResult> {
    if t1.kind() != TreeKind::Rooted || t2.kind() != TreeKind::Rooted {
        return Err(MafError::KindMismatch);
    }
    solve(t1, t2, k, algo)
}

/// Iterative deepening on the budget: `k = 0, 1, ...` up to `max_k`
/// (default: one less than the number of taxa, which always suffices).
/// Statistics accumulate over all rounds.
pub fn solve_min(t1: &PhyloTree, t2: &PhyloTree, algo: Algorithm, max_k: Option<usize>) -> Result<SolveResult> {
    let cap = max_k.unwrap_or(t1.num_taxa().saturating_sub(1));
    let mut stats = Stats::default();
    for k in 0..=cap {
        let r = solve(t1, t2, k, algo)?;
        stats.merge(&r.stats);
        if r.min_cuts.is_some() {
            return Ok(SolveResult { stats, ..r });
        }
    }
    Ok(SolveResult { min_cuts: None, forest: None, stats })
}
