//! Small parsimony: trees for the internal nodes of a phylogeny minimizing
//! the summed distance over its edges.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::distance::{distance_matrix, Metric};
use crate::error::{Error, Result};
use crate::median::{median, Constraint};
use crate::phylogeny::Phylogeny;
use crate::structure::{common_leafset, LeafInterval, RnaTree};

/// `Σ_{(u,v) ∈ E} D(T_u, T_v)`; `trees` is indexed by phylogeny node.
pub fn sp_cost(phy: &Phylogeny, trees: &[RnaTree], metric: Metric) -> Result<f64> {
    if trees.len() != phy.len() {
        return Err(Error::InvalidTree(format!(
            "assignment covers {} of {} nodes",
            trees.len(),
            phy.len()
        )));
    }
    phy.edges()
        .into_iter()
        .map(|(u, v)| metric.distance(&trees[u], &trees[v]))
        .sum()
}

/// A tree for every phylogeny node, with its SP cost.
#[derive(Debug, Clone)]
pub struct Assignment {
    trees: Vec<RnaTree>,
    sp_cost: f64,
}

impl Assignment {
    pub fn new(phy: &Phylogeny, trees: Vec<RnaTree>, metric: Metric) -> Result<Self> {
        let sp_cost = sp_cost(phy, &trees, metric)?;
        Ok(Self { trees, sp_cost })
    }

    pub fn trees(&self) -> &[RnaTree] {
        &self.trees
    }

    pub fn tree(&self, node: usize) -> &RnaTree {
        &self.trees[node]
    }

    pub fn into_trees(self) -> Vec<RnaTree> {
        self.trees
    }

    pub fn sp_cost(&self) -> f64 {
        self.sp_cost
    }
}

/// Input trees per leaf node, checked against the phylogeny's leaf ids.
pub(crate) fn leaf_inputs(
    phy: &Phylogeny,
    leaf_trees: &BTreeMap<String, RnaTree>,
) -> Result<Vec<Option<RnaTree>>> {
    let leaves = phy.leaves();
    let ids: BTreeSet<&str> = leaves.iter().filter_map(|&v| phy.label(v)).collect();
    let missing: Vec<String> = ids
        .iter()
        .filter(|id| !leaf_trees.contains_key(**id))
        .map(|id| id.to_string())
        .collect();
    let extra: Vec<String> = leaf_trees
        .keys()
        .filter(|k| !ids.contains(k.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::LeafIdMismatch { missing, extra });
    }
    let mut out = vec![None; phy.len()];
    for &v in &leaves {
        let label = phy.label(v).expect("leaves are labelled");
        out[v] = Some(leaf_trees[label].clone());
    }
    let present: Vec<RnaTree> = out.iter().flatten().cloned().collect();
    common_leafset(&present)?;
    Ok(out)
}

/// A set of states for one binary character at one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSet {
    Zero,
    One,
    Both,
}

impl StateSet {
    pub fn contains(&self, x: bool) -> bool {
        match self {
            StateSet::Zero => !x,
            StateSet::One => x,
            StateSet::Both => true,
        }
    }
}

#[derive(Debug, Clone)]
struct Column {
    bottom_up: Vec<StateSet>,
    n0: Vec<u32>,
    n1: Vec<u32>,
    fin: Vec<bool>,
    changes: usize,
}

/// Fitch–Hartigan sets for every DL shown by some leaf (the characters).
#[derive(Debug, Clone)]
pub struct CharacterTable {
    characters: Vec<LeafInterval>,
    columns: Vec<Column>,
}

impl CharacterTable {
    fn build(phy: &Phylogeny, leaves: &[Option<RnaTree>]) -> Self {
        let leaf_dls: Vec<Option<BTreeSet<LeafInterval>>> = leaves
            .iter()
            .map(|t| {
                t.as_ref()
                    .map(|t| t.descendant_leafsets().into_iter().collect())
            })
            .collect();
        let characters: Vec<LeafInterval> = leaf_dls
            .iter()
            .flatten()
            .flat_map(|s| s.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let post = phy.postorder();
        let pre = phy.preorder();
        let columns = characters
            .par_iter()
            .map(|c| {
                let n = phy.len();
                let mut bottom_up = vec![StateSet::Both; n];
                let mut n0 = vec![0; n];
                let mut n1 = vec![0; n];
                for &u in &post {
                    if let Some(dls) = &leaf_dls[u] {
                        bottom_up[u] = if dls.contains(c) {
                            StateSet::One
                        } else {
                            StateSet::Zero
                        };
                        continue;
                    }
                    for &v in phy.children(u) {
                        match bottom_up[v] {
                            StateSet::Zero => n0[u] += 1,
                            StateSet::One => n1[u] += 1,
                            StateSet::Both => {}
                        }
                    }
                    bottom_up[u] = match n0[u].cmp(&n1[u]) {
                        std::cmp::Ordering::Greater => StateSet::Zero,
                        std::cmp::Ordering::Less => StateSet::One,
                        std::cmp::Ordering::Equal => StateSet::Both,
                    };
                }
                let mut fin = vec![false; n];
                let mut changes = 0;
                for &u in &pre {
                    fin[u] = match (bottom_up[u], phy.parent(u)) {
                        (StateSet::Zero, _) => false,
                        (StateSet::One, _) => true,
                        (StateSet::Both, None) => false,
                        (StateSet::Both, Some(w)) => fin[w],
                    };
                    if let Some(w) = phy.parent(u) {
                        changes += usize::from(fin[u] != fin[w]);
                    }
                }
                Column {
                    bottom_up,
                    n0,
                    n1,
                    fin,
                    changes,
                }
            })
            .collect();
        Self {
            characters,
            columns,
        }
    }

    pub fn characters(&self) -> &[LeafInterval] {
        &self.characters
    }

    pub fn bottom_up(&self, c: usize, u: usize) -> StateSet {
        self.columns[c].bottom_up[u]
    }

    pub fn final_state(&self, c: usize, u: usize) -> bool {
        self.columns[c].fin[u]
    }

    /// Children of `u` whose set is exactly `{0}`.
    pub fn n0(&self, c: usize, u: usize) -> u32 {
        self.columns[c].n0[u]
    }

    /// Children of `u` whose set is exactly `{1}`.
    pub fn n1(&self, c: usize, u: usize) -> u32 {
        self.columns[c].n1[u]
    }

    /// Edges along which character `c` changes state.
    pub fn changes(&self, c: usize) -> usize {
        self.columns[c].changes
    }

    pub fn total_changes(&self) -> usize {
        self.columns.iter().map(|c| c.changes).sum()
    }

    /// For conflicting characters `c, d` and every node: `B(c) = {1}` forces
    /// `B(d) = {0}`, and `F(c) = 1` forces `F(d) = 0`.
    pub fn check_lemmas(&self) -> Result<()> {
        let k = self.characters.len();
        for a in 0..k {
            for b in a + 1..k {
                if !self.characters[a].conflicts_with(&self.characters[b]) {
                    continue;
                }
                let (ca, cb) = (&self.columns[a], &self.columns[b]);
                for u in 0..ca.fin.len() {
                    for (x, y) in [(ca, cb), (cb, ca)] {
                        if x.bottom_up[u] == StateSet::One && y.bottom_up[u] != StateSet::Zero {
                            return Err(Error::Internal(format!(
                                "bottom-up sets of conflicting {} and {} clash at node {u}",
                                self.characters[a], self.characters[b]
                            )));
                        }
                    }
                    if ca.fin[u] && cb.fin[u] {
                        return Err(Error::Internal(format!(
                            "final states of conflicting {} and {} clash at node {u}",
                            self.characters[a], self.characters[b]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Exact RF small parsimony, returning the character table it was built from.
pub fn rf_nc_sp_with_table(
    phy: &Phylogeny,
    leaf_trees: &BTreeMap<String, RnaTree>,
) -> Result<(Assignment, CharacterTable)> {
    let leaves = leaf_inputs(phy, leaf_trees)?;
    let leafset = common_leafset(&leaves.iter().flatten().cloned().collect::<Vec<_>>())?;
    let table = CharacterTable::build(phy, &leaves);
    if cfg!(debug_assertions) {
        table.check_lemmas()?;
    }
    let mut trees = Vec::with_capacity(phy.len());
    for (u, leaf) in leaves.into_iter().enumerate() {
        let tree = match leaf {
            Some(t) => t,
            None => {
                let dls = (0..table.characters.len())
                    .filter(|&c| table.final_state(c, u))
                    .map(|c| table.characters[c]);
                RnaTree::from_descendant_leafsets(dls, leafset)?
            }
        };
        trees.push(tree);
    }
    let assignment = Assignment {
        trees,
        sp_cost: table.total_changes() as f64,
    };
    Ok((assignment, table))
}

/// Exact small parsimony under RF with no constraint.
pub fn rf_nc_sp(phy: &Phylogeny, leaf_trees: &BTreeMap<String, RnaTree>) -> Result<Assignment> {
    rf_nc_sp_with_table(phy, leaf_trees).map(|(a, _)| a)
}

/// Best assignment in which every internal node takes one of the distinct
/// leaf trees (ordered by first appearance, left to right).
pub fn leaf_restricted_sp(
    phy: &Phylogeny,
    leaf_trees: &BTreeMap<String, RnaTree>,
    metric: Metric,
) -> Result<Assignment> {
    let leaves = leaf_inputs(phy, leaf_trees)?;
    let mut candidates: Vec<RnaTree> = Vec::new();
    let mut leaf_state = vec![usize::MAX; phy.len()];
    for v in phy.leaves() {
        let t = leaves[v].as_ref().expect("leaf has a tree");
        let idx = match candidates.iter().position(|c| c == t) {
            Some(i) => i,
            None => {
                candidates.push(t.clone());
                candidates.len() - 1
            }
        };
        leaf_state[v] = idx;
    }
    let states = restricted_states(phy, &leaf_state, &distance_matrix(&candidates, metric)?);
    let trees = states.iter().map(|&s| candidates[s].clone()).collect();
    Assignment::new(phy, trees, metric)
}

/// Sankoff over candidate states; leaves are pinned to `leaf_state`.
fn restricted_states(phy: &Phylogeny, leaf_state: &[usize], dist: &[Vec<f64>]) -> Vec<usize> {
    let m = dist.len();
    let mut cost = vec![vec![0.0; m]; phy.len()];
    for u in phy.postorder() {
        if phy.is_leaf(u) {
            continue;
        }
        for s in 0..m {
            cost[u][s] = phy
                .children(u)
                .iter()
                .map(|&v| {
                    if phy.is_leaf(v) {
                        dist[s][leaf_state[v]]
                    } else {
                        (0..m)
                            .map(|t| cost[v][t] + dist[s][t])
                            .fold(f64::INFINITY, f64::min)
                    }
                })
                .sum();
        }
    }
    let argmin = |row: &dyn Fn(usize) -> f64| {
        let mut best = 0;
        for t in 1..m {
            if row(t) < row(best) {
                best = t;
            }
        }
        best
    };
    let mut state = leaf_state.to_vec();
    for u in phy.preorder() {
        if phy.is_leaf(u) {
            continue;
        }
        state[u] = match phy.parent(u) {
            None => argmin(&|s| cost[u][s]),
            Some(w) => {
                let ps = state[w];
                argmin(&|t| cost[u][t] + dist[ps][t])
            }
        };
    }
    state
}

/// Outcome of the median-based heuristic.
#[derive(Debug, Clone)]
pub struct HeuristicResult {
    pub assignment: Assignment,
    /// SP cost of the initial assignment, then after each round.
    pub trace: Vec<f64>,
}

/// Iterative improvement: each internal node (in post-order) is offered the
/// median of its neighbors' trees, adopted only if the SP cost strictly
/// drops. The root, having no parent, uses the median of its children.
pub fn median_heuristic_sp(
    phy: &Phylogeny,
    leaf_trees: &BTreeMap<String, RnaTree>,
    metric: Metric,
    constraint: Constraint,
    init: Assignment,
    max_rounds: usize,
) -> Result<HeuristicResult> {
    match (metric, constraint) {
        (Metric::Rf | Metric::Il, Constraint::Nc | Constraint::Ilc) => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "median heuristic needs a median solver, none for {metric}/{constraint}"
            )))
        }
    }
    let leaves = leaf_inputs(phy, leaf_trees)?;
    let mut trees = init.into_trees();
    if trees.len() != phy.len() {
        return Err(Error::InvalidTree(format!(
            "assignment covers {} of {} nodes",
            trees.len(),
            phy.len()
        )));
    }
    for (u, leaf) in leaves.iter().enumerate() {
        if let Some(t) = leaf {
            if &trees[u] != t {
                return Err(Error::InvalidTree(format!(
                    "initial assignment changes leaf {}",
                    phy.node_id(u)
                )));
            }
        }
    }
    let mut current = sp_cost(phy, &trees, metric)?;
    let mut trace = vec![current];
    let order = phy.internal_nodes();
    for _ in 0..max_rounds {
        let mut changed = false;
        for &u in &order {
            let neighbors: Vec<usize> = phy
                .children(u)
                .iter()
                .copied()
                .chain(phy.parent(u))
                .collect();
            let nb_trees: Vec<RnaTree> = neighbors.iter().map(|&v| trees[v].clone()).collect();
            let proposal = median(&nb_trees, metric, constraint)?.tree;
            if proposal == trees[u] {
                continue;
            }
            let mut before = 0.0;
            let mut after = 0.0;
            for t in &nb_trees {
                before += metric.distance(&trees[u], t)?;
                after += metric.distance(&proposal, t)?;
            }
            if after < before {
                trees[u] = proposal;
                current += after - before;
                changed = true;
            }
        }
        trace.push(current);
        if !changed {
            break;
        }
    }
    let assignment = Assignment::new(phy, trees, metric)?;
    Ok(HeuristicResult { assignment, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::SecondaryStructure;

    fn t(db: &str) -> RnaTree {
        SecondaryStructure::from_dotbracket(db).unwrap().to_tree()
    }

    /// ((x,y),z)
    fn three_leaf() -> Phylogeny {
        Phylogeny::from_parents(
            vec![
                None,
                None,
                Some("x".into()),
                Some("y".into()),
                Some("z".into()),
            ],
            vec![None, Some(0), Some(1), Some(1), Some(0)],
        )
        .unwrap()
    }

    fn leaves(x: &str, y: &str, z: &str) -> BTreeMap<String, RnaTree> {
        [("x", x), ("y", y), ("z", z)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), t(v)))
            .collect()
    }

    #[test]
    fn sp_cost_examples() {
        let phy = three_leaf();
        let a = t("((..))");
        let b = t("(....)");
        let same = vec![a.clone(); 5];
        assert_eq!(sp_cost(&phy, &same, Metric::Rf).unwrap(), 0.0);
        let trees = vec![a.clone(), a.clone(), a.clone(), a.clone(), b.clone()];
        assert_eq!(sp_cost(&phy, &trees, Metric::Rf).unwrap(), 1.0);
        let trees = vec![b.clone(), b.clone(), a.clone(), a.clone(), b.clone()];
        assert_eq!(sp_cost(&phy, &trees, Metric::Rf).unwrap(), 2.0);
        assert!(sp_cost(&phy, &trees[..4], Metric::Rf).is_err());
    }

    #[test]
    fn rf_nc_hand_trace() {
        let phy = three_leaf();
        let (a, table) = rf_nc_sp_with_table(&phy, &leaves("((..))", "((..))", "(....)")).unwrap();
        let c = table
            .characters()
            .iter()
            .position(|&c| c == LeafInterval::new(2, 5).unwrap())
            .unwrap();
        assert_eq!(table.bottom_up(c, 1), StateSet::One);
        assert_eq!(table.bottom_up(c, 0), StateSet::Both);
        assert!(!table.final_state(c, 0));
        assert!(table.final_state(c, 1));
        assert_eq!(a.tree(0), &t("(....)"));
        assert_eq!(a.tree(1), &t("((..))"));
        assert_eq!(a.sp_cost(), 1.0);
        assert_eq!(sp_cost(&phy, a.trees(), Metric::Rf).unwrap(), 1.0);
        table.check_lemmas().unwrap();
    }

    #[test]
    fn rf_nc_identical_leaves() {
        let phy = three_leaf();
        let a = rf_nc_sp(&phy, &leaves("(.)(.)", "(.)(.)", "(.)(.)")).unwrap();
        assert_eq!(a.sp_cost(), 0.0);
        assert!(a.trees().iter().all(|x| x == &t("(.)(.)")));
    }

    #[test]
    fn leaf_id_mismatch_is_listed() {
        let phy = three_leaf();
        let mut map = leaves("...", "...", "...");
        map.remove("z");
        map.insert("w".into(), t("..."));
        match rf_nc_sp(&phy, &map) {
            Err(Error::LeafIdMismatch { missing, extra }) => {
                assert_eq!(missing, vec!["z"]);
                assert_eq!(extra, vec!["w"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn leaf_restricted_examples() {
        let phy = three_leaf();
        let a =
            leaf_restricted_sp(&phy, &leaves("((..))", "((..))", "(....)"), Metric::Rf).unwrap();
        assert_eq!(a.sp_cost(), 1.0);
        assert_eq!(a.tree(0), &t("((..))"));
        assert_eq!(a.tree(1), &t("((..))"));
        let a = leaf_restricted_sp(&phy, &leaves("(..)", "(..)", "(..)"), Metric::Re).unwrap();
        assert_eq!(a.sp_cost(), 0.0);
    }

    #[test]
    fn heuristic_keeps_optimal_star() {
        let phy = Phylogeny::from_parents(
            vec![None, Some("x".into()), Some("y".into()), Some("z".into())],
            vec![None, Some(0), Some(0), Some(0)],
        )
        .unwrap();
        let map = leaves("((..))", "((..))", "(....)");
        let init = leaf_restricted_sp(&phy, &map, Metric::Il).unwrap();
        let before = init.trees().to_vec();
        let r = median_heuristic_sp(&phy, &map, Metric::Il, Constraint::Ilc, init, 10).unwrap();
        assert_eq!(r.assignment.trees(), &before[..]);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(median_heuristic_sp(
            &phy,
            &map,
            Metric::Re,
            Constraint::Nc,
            r.assignment.clone(),
            1
        )
        .is_err());
    }
}
