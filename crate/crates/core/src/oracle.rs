//! Exhaustive reference solvers for small inputs. They share no code with
//! the fast solvers beyond the tree model and the distances.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::distance::{distance_matrix, Mapping, Metric, NodePair};
use crate::error::{Error, Result};
use crate::median::{mcost, Constraint};
use crate::phylogeny::Phylogeny;
use crate::smallpars::{leaf_inputs, Assignment};
use crate::structure::{common_leafset, RnaTree, SecondaryStructure};

/// Default largest structure length for [`enumerate_structures`].
pub const STRUCTURE_CAP: usize = 12;
/// Default largest number of internal nodes per tree for [`enumerate_mappings`].
pub const MAPPING_CAP: usize = 8;
/// Default largest input length for [`brute_median`].
pub const MEDIAN_CAP: usize = 8;
/// Default largest number of assignments tried by [`brute_sp`].
pub const SP_CAP: usize = 20_000_000;

fn check_cap(what: &'static str, value: usize, cap: usize) -> Result<()> {
    if value > cap {
        Err(Error::CapExceeded { what, value, cap })
    } else {
        Ok(())
    }
}

/// Every structure of length `n` whose pairs enclose at least `theta`
/// positions, in ASCII order of their dot-bracket strings.
pub fn enumerate_structures(n: usize, theta: usize, cap: usize) -> Result<Vec<SecondaryStructure>> {
    check_cap("structure length", n, cap)?;
    // by_len[L] holds every valid dot-bracket string of length L.
    let mut by_len: Vec<Vec<String>> = vec![vec![String::new()]];
    for len in 1..=n {
        let mut out: Vec<String> = by_len[len - 1].iter().map(|s| format!(".{s}")).collect();
        for inner in theta..len.saturating_sub(1) {
            for a in &by_len[inner] {
                for b in &by_len[len - 2 - inner] {
                    out.push(format!("({a}){b}"));
                }
            }
        }
        by_len.push(out);
    }
    let mut all = by_len.pop().expect("n + 1 entries");
    all.sort_unstable();
    all.iter()
        .map(|s| SecondaryStructure::from_dotbracket(s))
        .collect()
}

/// Every partial bijection between the internal nodes of `t1` and `t2`
/// that preserves both left-to-right order and nesting.
pub fn enumerate_mappings(t1: &RnaTree, t2: &RnaTree, cap: usize) -> Result<Vec<Mapping>> {
    t1.check_same_leafset(t2)?;
    check_cap("internal nodes", t1.num_internal(), cap)?;
    check_cap("internal nodes", t2.num_internal(), cap)?;
    let a = t1.internal_nodes();
    let b = t2.internal_nodes();

    fn left_of(x: (usize, usize), y: (usize, usize)) -> bool {
        x.1 < y.0
    }
    fn inside(x: (usize, usize), y: (usize, usize)) -> bool {
        y.0 < x.0 && x.1 < y.1
    }
    let compatible = |p: NodePair, q: NodePair| {
        left_of(p.0, q.0) == left_of(p.1, q.1)
            && left_of(q.0, p.0) == left_of(q.1, p.1)
            && inside(p.0, q.0) == inside(p.1, q.1)
            && inside(q.0, p.0) == inside(q.1, p.1)
    };

    let mut out = Vec::new();
    let mut current: Vec<NodePair> = Vec::new();
    let mut used = vec![false; b.len()];
    // Depth-first over the nodes of t1, each either unmapped or mapped to a
    // free node of t2.
    fn go(
        k: usize,
        a: &[(usize, usize)],
        b: &[(usize, usize)],
        used: &mut [bool],
        current: &mut Vec<NodePair>,
        out: &mut Vec<Mapping>,
        compatible: &dyn Fn(NodePair, NodePair) -> bool,
    ) {
        if k == a.len() {
            out.push(Mapping::new(current.clone()));
            return;
        }
        go(k + 1, a, b, used, current, out, compatible);
        for (idx, &y) in b.iter().enumerate() {
            if used[idx] {
                continue;
            }
            let pair = (a[k], y);
            if current.iter().all(|&q| compatible(pair, q)) {
                used[idx] = true;
                current.push(pair);
                go(k + 1, a, b, used, current, out, compatible);
                current.pop();
                used[idx] = false;
            }
        }
    }
    go(0, a, b, &mut used, &mut current, &mut out, &compatible);
    Ok(out)
}

/// Optimal median over every tree on the inputs' leafset admitted by
/// `constraint`; ties go to the first tree in dot-bracket order.
pub fn brute_median(
    trees: &[RnaTree],
    metric: Metric,
    constraint: Constraint,
    cap: usize,
) -> Result<(f64, RnaTree)> {
    let leafset = common_leafset(trees)?;
    if leafset.lo() != 0 {
        return Err(Error::Unsupported(
            "brute_median needs leafset [0, n+1]".into(),
        ));
    }
    let n = leafset.hi() - 1;
    check_cap("structure length", n, cap)?;
    let candidates: Vec<RnaTree> = enumerate_structures(n, 0, usize::MAX)?
        .iter()
        .map(SecondaryStructure::to_tree)
        .filter(|t| constraint.admits(t, trees))
        .collect();
    let costs: Vec<f64> = candidates
        .par_iter()
        .map(|c| mcost(c, trees, metric))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for k in 1..costs.len() {
        if costs[k] < costs[best] {
            best = k;
        }
    }
    // Unconstrained trees always exist; constrained ones may not.
    let tree = candidates
        .get(best)
        .cloned()
        .ok_or_else(|| Error::Internal("no tree satisfies the constraint".into()))?;
    Ok((costs[best], tree))
}

/// Which trees internal phylogeny nodes may take in [`brute_sp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidatePolicy {
    /// Every tree on the leafset.
    AllTrees,
    /// Only the distinct leaf trees.
    LeafRestricted,
}

/// Optimal assignment by trying every combination of candidates at the
/// internal nodes; ties go to the first combination in odometer order.
pub fn brute_sp(
    phy: &Phylogeny,
    leaf_trees: &BTreeMap<String, RnaTree>,
    metric: Metric,
    policy: CandidatePolicy,
    cap: usize,
) -> Result<(f64, Assignment)> {
    let leaves = leaf_inputs(phy, leaf_trees)?;
    let mut candidates: Vec<RnaTree> = Vec::new();
    match policy {
        CandidatePolicy::AllTrees => {
            let present: Vec<RnaTree> = leaves.iter().flatten().cloned().collect();
            let leafset = common_leafset(&present)?;
            if leafset.lo() != 0 {
                return Err(Error::Unsupported("brute_sp needs leafset [0, n+1]".into()));
            }
            let n = leafset.hi() - 1;
            check_cap("structure length", n, STRUCTURE_CAP)?;
            candidates = enumerate_structures(n, 0, usize::MAX)?
                .iter()
                .map(SecondaryStructure::to_tree)
                .collect();
        }
        CandidatePolicy::LeafRestricted => {
            for v in phy.leaves() {
                let t = leaves[v].as_ref().expect("leaf has a tree");
                if !candidates.contains(t) {
                    candidates.push(t.clone());
                }
            }
        }
    }
    let state_of = |t: &RnaTree| {
        candidates
            .iter()
            .position(|c| c == t)
            .expect("leaf is a candidate")
    };
    let mut state: Vec<usize> = (0..phy.len())
        .map(|v| leaves[v].as_ref().map_or(0, state_of))
        .collect();
    let internal = phy.internal_nodes();
    let m = candidates.len();
    let combos = (0..internal.len()).try_fold(1usize, |acc, _| acc.checked_mul(m));
    check_cap("assignments", combos.unwrap_or(usize::MAX), cap)?;

    let dist = distance_matrix(&candidates, metric)?;
    let edges = phy.edges();
    let total =
        |state: &[usize]| -> f64 { edges.iter().map(|&(u, v)| dist[state[u]][state[v]]).sum() };
    let mut best_cost = total(&state);
    let mut best_state = state.clone();
    loop {
        // Advance the odometer; the first internal node is the fastest digit.
        let mut k = 0;
        while k < internal.len() {
            let u = internal[k];
            state[u] += 1;
            if state[u] < m {
                break;
            }
            state[u] = 0;
            k += 1;
        }
        if k == internal.len() {
            break;
        }
        let c = total(&state);
        if c < best_cost {
            best_cost = c;
            best_state = state.clone();
        }
    }
    let trees = best_state.iter().map(|&s| candidates[s].clone()).collect();
    let assignment = Assignment::new(phy, trees, metric)?;
    Ok((best_cost, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(db: &str) -> RnaTree {
        SecondaryStructure::from_dotbracket(db).unwrap().to_tree()
    }

    fn dbs(v: &[SecondaryStructure]) -> Vec<String> {
        v.iter().map(|s| s.to_dotbracket()).collect()
    }

    #[test]
    fn structure_enumeration() {
        assert_eq!(
            dbs(&enumerate_structures(3, 0, STRUCTURE_CAP).unwrap()),
            vec!["().", "(.)", ".()", "..."]
        );
        assert_eq!(
            dbs(&enumerate_structures(5, 3, STRUCTURE_CAP).unwrap()),
            vec!["(...)", "....."]
        );
        assert_eq!(enumerate_structures(0, 0, STRUCTURE_CAP).unwrap().len(), 1);
        assert!(enumerate_structures(13, 0, STRUCTURE_CAP).is_err());
    }

    #[test]
    fn mapping_enumeration() {
        assert_eq!(
            enumerate_mappings(&t("...."), &t("...."), MAPPING_CAP)
                .unwrap()
                .len(),
            2
        );
        // Empty, four singletons, and root-to-root with (1,6)-to-(2,6).
        let maps = enumerate_mappings(&t("(....)"), &t(".(...)"), MAPPING_CAP).unwrap();
        assert_eq!(maps.len(), 6);
    }

    #[test]
    fn median_oracle_examples() {
        let one = vec![t("((..))")];
        assert_eq!(
            brute_median(&one, Metric::Il, Constraint::Nc, MEDIAN_CAP)
                .unwrap()
                .0,
            0.0
        );
        let three = vec![t("((..))"), t("(....)"), t("......")];
        assert_eq!(
            brute_median(&three, Metric::Rf, Constraint::Nc, MEDIAN_CAP)
                .unwrap()
                .0,
            2.0
        );
        let two = vec![t("((..))"), t("(....)")];
        assert_eq!(
            brute_median(&two, Metric::Il, Constraint::Ilc, MEDIAN_CAP)
                .unwrap()
                .0,
            3.0
        );
    }

    #[test]
    fn sp_oracle_examples() {
        let phy = Phylogeny::from_parents(
            vec![
                None,
                None,
                Some("x".into()),
                Some("y".into()),
                Some("z".into()),
            ],
            vec![None, Some(0), Some(1), Some(1), Some(0)],
        )
        .unwrap();
        let leaves: BTreeMap<String, RnaTree> = [("x", "((..))"), ("y", "((..))"), ("z", "(....)")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), t(v)))
            .collect();
        let (c, a) =
            brute_sp(&phy, &leaves, Metric::Rf, CandidatePolicy::AllTrees, SP_CAP).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(a.sp_cost(), 1.0);
        let same: BTreeMap<String, RnaTree> = ["x", "y", "z"]
            .into_iter()
            .map(|k| (k.to_string(), t("(..)")))
            .collect();
        let (c, _) = brute_sp(
            &phy,
            &same,
            Metric::Re,
            CandidatePolicy::LeafRestricted,
            SP_CAP,
        )
        .unwrap();
        assert_eq!(c, 0.0);
    }
}
