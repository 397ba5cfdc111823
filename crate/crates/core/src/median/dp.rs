//! Interval dynamic programming over structural partitions.
//!
//! A median tree is a structural partition of the leafset, and both the IL
//! and the RF median cost split into a constant plus one term per set of the
//! partition. `c[i, j]` is the cheapest partition of `[i, j]`; the set
//! containing `i` is either drawn from the inputs (`input` case), or is novel
//! and costs `p` (`novel` case, unconstrained only). In the novel case the
//! set is `{i, k}` plus whatever part of `[k+1, j]` is not covered by a
//! family of disjoint sub-intervals, each partitioned independently; the best
//! such family is a maximum-weight independent set of intervals, tabulated
//! here as `fill[s, j]`.

use std::collections::{HashMap, HashSet};

use super::mwis::{mwis_intervals, WeightedInterval};
use crate::error::{Error, Result};
use crate::structure::{common_leafset, InternalLeafset, RnaTree, StructuralPartition};

/// Which distance the per-set cost encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `#{t : I ∉ IL(t)} - #{t : I ∈ IL(t)}`.
    Il,
    /// The same count against the span `[min I, max I]` in `DL(t)`.
    Rf,
}

#[derive(Debug, Clone)]
struct Candidate {
    set: InternalLeafset,
    max: usize,
    cost: i64,
    gaps: Vec<(usize, usize)>,
}

/// Filled tables for one median instance.
#[derive(Debug, Clone)]
pub struct DpTables {
    lo: usize,
    hi: usize,
    p: usize,
    unconstrained: bool,
    baseline: i64,
    /// Input ILs grouped by their minimum, in (first input tree) order.
    candidates: Vec<Vec<Candidate>>,
    best: Vec<Option<i64>>,
    input: Vec<Option<i64>>,
    novel: Vec<Option<i64>>,
    fill: Vec<i64>,
    root: i64,
}

fn add(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    Some(a? + b?)
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl DpTables {
    /// Fills every table for `trees` (which must share a leafset).
    pub fn build(trees: &[RnaTree], objective: Objective, unconstrained: bool) -> Result<Self> {
        let leafset = common_leafset(trees)?;
        let (lo, hi) = (leafset.lo(), leafset.hi());
        let p = trees.len();
        let width = hi - lo + 1;

        let mut il_count: HashMap<InternalLeafset, i64> = HashMap::new();
        let mut dl_count: HashMap<(usize, usize), i64> = HashMap::new();
        let mut per_tree = Vec::with_capacity(p);
        for t in trees {
            let ils = t.internal_leafsets();
            for il in &ils {
                *il_count.entry(il.clone()).or_default() += 1;
            }
            for &node in t.internal_nodes() {
                *dl_count.entry(node).or_default() += 1;
            }
            per_tree.push(ils);
        }
        let baseline = trees.iter().map(|t| t.num_internal() as i64).sum();

        let mut candidates: Vec<Vec<Candidate>> = vec![Vec::new(); width];
        let mut seen = HashSet::new();
        for ils in per_tree {
            for il in ils {
                if !seen.insert(il.clone()) {
                    continue;
                }
                let displayed = match objective {
                    Objective::Il => il_count[&il],
                    Objective::Rf => dl_count[&(il.first(), il.last())],
                };
                let gaps = il.gap_bounds().collect();
                candidates[il.first() - lo].push(Candidate {
                    max: il.last(),
                    cost: p as i64 - 2 * displayed,
                    gaps,
                    set: il,
                });
            }
        }

        let mut tables = Self {
            lo,
            hi,
            p,
            unconstrained,
            baseline,
            candidates,
            best: vec![None; width * width],
            input: vec![None; width * width],
            novel: vec![None; width * width],
            fill: vec![0; width * width],
            root: 0,
        };
        tables.fill_tables();
        tables.root = tables
            .root_value()
            .ok_or_else(|| Error::Internal("no structural partition of the leafset".into()))?;
        Ok(tables)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        (i - self.lo) * (self.hi - self.lo + 1) + (j - self.lo)
    }

    /// Optimal cost of partitioning `[i, j]`; `Some(0)` for an empty range,
    /// `None` when no partition exists.
    pub fn cost(&self, i: usize, j: usize) -> Option<i64> {
        if j < i {
            Some(0)
        } else {
            self.best[self.idx(i, j)]
        }
    }

    /// Best cost when the set holding `i` is an input IL.
    pub fn input_cost(&self, i: usize, j: usize) -> Option<i64> {
        self.input[self.idx(i, j)]
    }

    /// Best cost when the set holding `i` is novel (unconstrained only).
    pub fn novel_cost(&self, i: usize, j: usize) -> Option<i64> {
        self.novel[self.idx(i, j)]
    }

    /// `-α` of the interval graph of sub-intervals of `[s, j]`: the cheapest
    /// family of disjoint sub-intervals, each optimally partitioned.
    pub fn fill_cost(&self, s: usize, j: usize) -> i64 {
        if j < s {
            0
        } else {
            self.fill[self.idx(s, j)]
        }
    }

    /// Optimal cost over partitions of the whole leafset that keep both of
    /// its ends in one set, i.e. over RNA trees.
    pub fn root_cost(&self) -> i64 {
        self.root
    }

    /// The term that turns a partition cost into the median cost.
    pub fn baseline(&self) -> i64 {
        self.baseline
    }

    pub fn num_trees(&self) -> usize {
        self.p
    }

    fn input_case(&self, i: usize, j: usize) -> Option<(i64, usize)> {
        let mut best: Option<(i64, usize)> = None;
        for (pos, cand) in self.candidates[i - self.lo].iter().enumerate() {
            if let Some(v) = self.candidate_value(cand, j) {
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, pos));
                }
            }
        }
        best
    }

    fn candidate_value(&self, cand: &Candidate, j: usize) -> Option<i64> {
        if cand.max > j {
            return None;
        }
        let mut total = Some(cand.cost);
        for &(x, y) in &cand.gaps {
            total = add(total, self.cost(x, y));
        }
        add(total, self.cost(cand.max + 1, j))
    }

    /// `p + c[i+1, k-1] + fill[k+1, j]` for the novel set `{i, k, ...}`.
    fn novel_value(&self, i: usize, k: usize, fill_end: usize) -> Option<i64> {
        add(
            Some(self.p as i64 + self.fill_cost(k + 1, fill_end)),
            self.cost(i + 1, k - 1),
        )
    }

    fn novel_case(&self, i: usize, j: usize) -> Option<(i64, usize)> {
        let mut best: Option<(i64, usize)> = None;
        for k in i + 1..=j {
            if let Some(v) = self.novel_value(i, k, j) {
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, k));
                }
            }
        }
        best
    }

    fn fill_tables(&mut self) {
        for i in (self.lo..=self.hi).rev() {
            for j in i..=self.hi {
                let at = self.idx(i, j);
                let input = self.input_case(i, j).map(|(v, _)| v);
                self.input[at] = input;
                if self.unconstrained {
                    let novel = self.novel_case(i, j).map(|(v, _)| v);
                    self.novel[at] = novel;
                    self.best[at] = min_opt(input, novel);
                } else {
                    self.best[at] = input;
                }
                // fill[i, j]: either j is uncovered, or some [u, j] is the
                // rightmost chosen interval.
                let mut f = if j > i { self.fill_cost(i, j - 1) } else { 0 };
                for u in i..j {
                    if let Some(c) = self.best[self.idx(u, j)] {
                        let left = if u == i { 0 } else { self.fill_cost(i, u - 1) };
                        f = f.min(left + c);
                    }
                }
                self.fill[at] = f;
            }
        }
    }

    fn root_value(&self) -> Option<i64> {
        let (lo, hi) = (self.lo, self.hi);
        // Every input IL with minimum `lo` is an input root and contains `hi`.
        let input = self.input_cost(lo, hi);
        if !self.unconstrained {
            return input;
        }
        min_opt(input, self.root_novel_case().map(|(v, _)| v))
    }

    /// Novel root set `{lo, k, hi, ...}`: leftovers come from `[k+1, hi-1]`.
    fn root_novel_case(&self) -> Option<(i64, usize)> {
        let (lo, hi) = (self.lo, self.hi);
        let mut best: Option<(i64, usize)> = None;
        for k in lo + 1..=hi {
            let fill_end = if k == hi { hi } else { hi - 1 };
            if let Some(v) = self.novel_value(lo, k, fill_end) {
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, k));
                }
            }
        }
        best
    }

    /// The sub-intervals of `[s, t]` with a finite optimum, weighted by
    /// minus that optimum.
    pub fn interval_graph(&self, s: usize, t: usize) -> Vec<WeightedInterval> {
        let mut items = Vec::new();
        for u in s..=t {
            for v in u + 1..=t {
                if let Some(c) = self.cost(u, v) {
                    items.push(WeightedInterval::new(u, v, -c));
                }
            }
        }
        items
    }

    /// Expands the novel set `{i, k}` with the leftovers of `[k+1, end]`,
    /// queueing the sub-problems it leaves behind.
    fn expand_novel(
        &self,
        i: usize,
        k: usize,
        end: usize,
        extra: Option<usize>,
        todo: &mut Vec<(usize, usize)>,
    ) -> Result<InternalLeafset> {
        let (alpha, chosen) = mwis_intervals(&self.interval_graph(k + 1, end));
        if -alpha != self.fill_cost(k + 1, end) {
            return Err(Error::Internal(format!(
                "independent set weight {alpha} disagrees with table value {} on [{}, {end}]",
                -self.fill_cost(k + 1, end),
                k + 1
            )));
        }
        let mut members = vec![i, k];
        let mut cursor = k + 1;
        for w in &chosen {
            members.extend(cursor..w.lo);
            cursor = w.hi + 1;
            todo.push((w.lo, w.hi));
        }
        if cursor <= end {
            members.extend(cursor..=end);
        }
        members.extend(extra);
        todo.push((i + 1, k - 1));
        InternalLeafset::new(members)
    }

    /// Reconstructs an optimal partition of `[i, j]` (no root condition).
    pub fn backtrace(&self, i: usize, j: usize) -> Result<StructuralPartition> {
        let mut sets = Vec::new();
        self.backtrace_into(vec![(i, j)], &mut sets)?;
        StructuralPartition::new(i, j, sets)
    }

    /// Reconstructs an optimal partition of the leafset with both ends in
    /// one set, i.e. the partition of an optimal median tree.
    pub fn backtrace_root(&self) -> Result<StructuralPartition> {
        let (lo, hi) = (self.lo, self.hi);
        let mut sets = Vec::new();
        let mut todo = Vec::new();
        if let Some((v, pos)) = self.input_case(lo, hi) {
            if v == self.root {
                let cand = &self.candidates[0][pos];
                sets.push(cand.set.clone());
                todo.extend(cand.gaps.iter().copied());
                todo.push((cand.max + 1, hi));
            }
        }
        if sets.is_empty() {
            match self.root_novel_case() {
                Some((v, k)) if self.unconstrained && v == self.root => {
                    if k == hi {
                        sets.push(InternalLeafset::new([lo, hi])?);
                        todo.push((lo + 1, hi - 1));
                    } else {
                        sets.push(self.expand_novel(lo, k, hi - 1, Some(hi), &mut todo)?);
                    }
                }
                _ => {
                    return Err(Error::Internal(
                        "root optimum not reproduced during backtrace".into(),
                    ))
                }
            }
        }
        self.backtrace_into(todo, &mut sets)?;
        StructuralPartition::new(lo, hi, sets)
    }

    fn backtrace_into(
        &self,
        mut todo: Vec<(usize, usize)>,
        sets: &mut Vec<InternalLeafset>,
    ) -> Result<()> {
        while let Some((i, j)) = todo.pop() {
            if j < i {
                continue;
            }
            let target = self.cost(i, j).ok_or_else(|| {
                Error::Internal(format!("backtrace reached infeasible range [{i}, {j}]"))
            })?;
            if let Some((v, pos)) = self.input_case(i, j) {
                if v == target {
                    let cand = &self.candidates[i - self.lo][pos];
                    sets.push(cand.set.clone());
                    todo.extend(cand.gaps.iter().copied());
                    todo.push((cand.max + 1, j));
                    continue;
                }
            }
            match self.novel_case(i, j) {
                Some((v, k)) if self.unconstrained && v == target => {
                    sets.push(self.expand_novel(i, k, j, None, &mut todo)?);
                }
                _ => {
                    return Err(Error::Internal(format!(
                        "optimum of [{i}, {j}] not reproduced during backtrace"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Result of a median computation.
#[derive(Debug, Clone)]
pub struct MedianResult {
    pub tree: RnaTree,
    /// Sum of distances from `tree` to the inputs.
    pub mcost: f64,
    /// Optimal partition cost from the DP, when one was used.
    pub dp_cost: Option<i64>,
}

pub(crate) fn solve(
    trees: &[RnaTree],
    objective: Objective,
    unconstrained: bool,
) -> Result<MedianResult> {
    let tables = DpTables::build(trees, objective, unconstrained)?;
    let partition = tables.backtrace_root()?;
    let tree = RnaTree::from_partition(&partition)?;
    Ok(MedianResult {
        tree,
        mcost: (tables.baseline() + tables.root_cost()) as f64,
        dp_cost: Some(tables.root_cost()),
    })
}

/// IL median restricted to trees whose ILs all occur in some input.
pub fn il_ilc_median(trees: &[RnaTree]) -> Result<MedianResult> {
    solve(trees, Objective::Il, false)
}

/// Unconstrained IL median.
pub fn il_nc_median(trees: &[RnaTree]) -> Result<MedianResult> {
    solve(trees, Objective::Il, true)
}

/// RF median restricted to trees whose ILs all occur in some input.
pub fn rf_ilc_median(trees: &[RnaTree]) -> Result<MedianResult> {
    solve(trees, Objective::Rf, false)
}
