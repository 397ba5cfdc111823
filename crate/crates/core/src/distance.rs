//! Distances between RNA trees sharing a leafset.
//!
//! `rf_distance` and `il_distance` are symmetric differences of the DL and
//! IL collections. The tree edit distance works on internal nodes only: a
//! valid mapping is an order- and ancestry-preserving partial bijection
//! between internal nodes, and unmapped nodes cost 1 each. That is exactly
//! the ordered tree edit distance between the trees of internal nodes, which
//! `te_distance` computes with the Zhang-Shasha keyroot recursion.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::structure::{RnaTree, SecondaryStructure};

/// Counts the elements in exactly one of two sorted, duplicate-free slices.
pub(crate) fn sorted_symmetric_difference<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut x, mut y, mut shared) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                x += 1;
                y += 1;
            }
        }
    }
    a.len() + b.len() - 2 * shared
}

/// Size of the symmetric difference of the two pair sets.
pub fn bp_distance(s1: &SecondaryStructure, s2: &SecondaryStructure) -> Result<usize> {
    if s1.len() != s2.len() {
        return Err(Error::LengthMismatch {
            left: s1.len(),
            right: s2.len(),
        });
    }
    Ok(sorted_symmetric_difference(s1.pairs(), s2.pairs()))
}

/// Robinson-Foulds distance: `|DL(t1) Δ DL(t2)|`.
pub fn rf_distance(t1: &RnaTree, t2: &RnaTree) -> Result<usize> {
    t1.check_same_leafset(t2)?;
    // Preorder node lists are sorted by (lo, hi), so they compare directly.
    Ok(sorted_symmetric_difference(
        t1.internal_nodes(),
        t2.internal_nodes(),
    ))
}

/// Internal-leafset distance: `|IL(t1) Δ IL(t2)|`.
pub fn il_distance(t1: &RnaTree, t2: &RnaTree) -> Result<usize> {
    t1.check_same_leafset(t2)?;
    let mut a = t1.internal_leafsets();
    let mut b = t2.internal_leafsets();
    a.sort_unstable();
    b.sort_unstable();
    Ok(sorted_symmetric_difference(&a, &b))
}

/// Cost of mapping an internal node of one tree onto one of another.
///
/// Implementations must return 0 for identical pairs and a non-negative
/// value otherwise.
pub trait CostFunction {
    fn cost(&self, a: (usize, usize), b: (usize, usize)) -> f64;
}

impl<F> CostFunction for F
where
    F: Fn((usize, usize), (usize, usize)) -> f64,
{
    fn cost(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        self(a, b)
    }
}

/// 0 for identical pairs, +inf otherwise. Under this cost the tree edit
/// distance is the base pair distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatchCost;

impl CostFunction for ExactMatchCost {
    fn cost(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// `|i1 - i2| + |j1 - j2|`, the cost behind the relaxed edit distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct ManhattanCost;

impl CostFunction for ManhattanCost {
    fn cost(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        (a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as f64
    }
}

/// An internal node of the first tree matched to one of the second, each
/// given by its `(lo, hi)` descendant leafset.
pub type NodePair = ((usize, usize), (usize, usize));

/// A set of mapped internal node pairs, sorted by the first tree's pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Mapping {
    pairs: Vec<NodePair>,
}

impl Mapping {
    pub fn new(mut pairs: Vec<NodePair>) -> Self {
        pairs.sort_unstable();
        Self { pairs }
    }

    pub fn pairs(&self) -> &[NodePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `Σ c(x1, x2) + |I(t1)| + |I(t2)| - 2|M|`.
    pub fn cost(&self, t1: &RnaTree, t2: &RnaTree, c: &impl CostFunction) -> f64 {
        let relabel: f64 = self.pairs.iter().map(|&(a, b)| c.cost(a, b)).sum();
        relabel + (t1.num_internal() + t2.num_internal() - 2 * self.pairs.len()) as f64
    }
}

/// Postorder view of the internal nodes of an RNA tree.
struct PostorderForest {
    /// Tree node index at each postorder position.
    node: Vec<usize>,
    /// Postorder position of the leftmost internal-node leaf below each position.
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl PostorderForest {
    fn new(t: &RnaTree) -> Self {
        let m = t.num_internal();
        let mut node = Vec::with_capacity(m);
        let mut leftmost = Vec::with_capacity(m);
        // Iterative postorder: (node, next child cursor, leftmost so far).
        let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(0, 0, None)];
        while let Some((x, cursor, lm)) = stack.pop() {
            let kids = t.node_children(x);
            if cursor < kids.len() {
                stack.push((x, cursor + 1, lm));
                stack.push((kids[cursor], 0, None));
            } else {
                let pos = node.len();
                node.push(x);
                let own = lm.unwrap_or(pos);
                leftmost.push(own);
                if let Some(parent) = stack.last_mut() {
                    if parent.2.is_none() {
                        parent.2 = Some(own);
                    }
                }
            }
        }
        let mut keyroots = Vec::new();
        let mut seen = vec![false; m];
        for pos in (0..m).rev() {
            if !seen[leftmost[pos]] {
                seen[leftmost[pos]] = true;
                keyroots.push(pos);
            }
        }
        keyroots.reverse();
        Self {
            node,
            leftmost,
            keyroots,
        }
    }
}

struct ZhangShasha<'a, C: CostFunction> {
    t1: &'a RnaTree,
    t2: &'a RnaTree,
    f1: PostorderForest,
    f2: PostorderForest,
    cost: &'a C,
    treedist: Vec<f64>,
}

impl<'a, C: CostFunction> ZhangShasha<'a, C> {
    fn new(t1: &'a RnaTree, t2: &'a RnaTree, cost: &'a C) -> Self {
        let f1 = PostorderForest::new(t1);
        let f2 = PostorderForest::new(t2);
        let treedist = vec![0.0; f1.node.len() * f2.node.len()];
        Self {
            t1,
            t2,
            f1,
            f2,
            cost,
            treedist,
        }
    }

    fn relabel(&self, x: usize, y: usize) -> f64 {
        let a = self.t1.internal_nodes()[self.f1.node[x]];
        let b = self.t2.internal_nodes()[self.f2.node[y]];
        self.cost.cost(a, b)
    }

    /// Fills the forest-distance table for the subtree pair `(i, j)`,
    /// recording subtree distances into `treedist` when `record` is set.
    fn forest_dist(&mut self, i: usize, j: usize, record: bool) -> Vec<Vec<f64>> {
        let (li, lj) = (self.f1.leftmost[i], self.f2.leftmost[j]);
        let rows = i - li + 2;
        let cols = j - lj + 2;
        let width = self.f2.node.len();
        let mut fd = vec![vec![0.0_f64; cols]; rows];
        for a in 1..rows {
            fd[a][0] = fd[a - 1][0] + 1.0;
        }
        for b in 1..cols {
            fd[0][b] = fd[0][b - 1] + 1.0;
        }
        for a in 1..rows {
            let x = li + a - 1;
            let lx = self.f1.leftmost[x];
            for b in 1..cols {
                let y = lj + b - 1;
                let ly = self.f2.leftmost[y];
                let indel = (fd[a - 1][b] + 1.0).min(fd[a][b - 1] + 1.0);
                if lx == li && ly == lj {
                    let v = indel.min(fd[a - 1][b - 1] + self.relabel(x, y));
                    fd[a][b] = v;
                    if record {
                        self.treedist[x * width + y] = v;
                    }
                } else {
                    let sub = fd[lx - li][ly - lj] + self.treedist[x * width + y];
                    fd[a][b] = indel.min(sub);
                }
            }
        }
        fd
    }

    fn run(&mut self) -> f64 {
        let k1 = self.f1.keyroots.clone();
        let k2 = self.f2.keyroots.clone();
        for &i in &k1 {
            for &j in &k2 {
                self.forest_dist(i, j, true);
            }
        }
        let width = self.f2.node.len();
        self.treedist[(self.f1.node.len() - 1) * width + width - 1]
    }

    fn mapping(&mut self) -> Mapping {
        let mut pairs = Vec::new();
        let mut todo = vec![(self.f1.node.len() - 1, self.f2.node.len() - 1)];
        while let Some((i, j)) = todo.pop() {
            let fd = self.forest_dist(i, j, false);
            let (li, lj) = (self.f1.leftmost[i], self.f2.leftmost[j]);
            let (mut a, mut b) = (i - li + 1, j - lj + 1);
            while a > 0 || b > 0 {
                if a > 0 && fd[a][b] == fd[a - 1][b] + 1.0 {
                    a -= 1;
                } else if b > 0 && fd[a][b] == fd[a][b - 1] + 1.0 {
                    b -= 1;
                } else {
                    let x = li + a - 1;
                    let y = lj + b - 1;
                    let (lx, ly) = (self.f1.leftmost[x], self.f2.leftmost[y]);
                    if lx == li && ly == lj {
                        pairs.push((
                            self.t1.internal_nodes()[self.f1.node[x]],
                            self.t2.internal_nodes()[self.f2.node[y]],
                        ));
                        a -= 1;
                        b -= 1;
                    } else {
                        todo.push((x, y));
                        a = lx - li;
                        b = ly - lj;
                    }
                }
            }
        }
        Mapping::new(pairs)
    }
}

/// Tree edit distance under `c`: the minimum of [`Mapping::cost`] over all
/// valid mappings, together with one optimal mapping.
pub fn te_distance(t1: &RnaTree, t2: &RnaTree, c: &impl CostFunction) -> Result<(f64, Mapping)> {
    t1.check_same_leafset(t2)?;
    let mut zs = ZhangShasha::new(t1, t2, c);
    let value = zs.run();
    let mapping = zs.mapping();
    Ok((value, mapping))
}

/// Tree edit distance value only.
pub fn te_distance_value(t1: &RnaTree, t2: &RnaTree, c: &impl CostFunction) -> Result<f64> {
    t1.check_same_leafset(t2)?;
    Ok(ZhangShasha::new(t1, t2, c).run())
}

/// Relaxed edit distance: the tree edit distance under [`ManhattanCost`].
pub fn re_distance(t1: &RnaTree, t2: &RnaTree) -> Result<f64> {
    te_distance_value(t1, t2, &ManhattanCost)
}

/// The tree distances that medians and small parsimony are defined over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Rf,
    Il,
    Re,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rf, Metric::Il, Metric::Re];

    pub fn distance(&self, t1: &RnaTree, t2: &RnaTree) -> Result<f64> {
        match self {
            Metric::Rf => rf_distance(t1, t2).map(|d| d as f64),
            Metric::Il => il_distance(t1, t2).map(|d| d as f64),
            Metric::Re => re_distance(t1, t2),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Rf => "rf",
            Metric::Il => "il",
            Metric::Re => "re",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(Metric::Rf),
            "il" => Ok(Metric::Il),
            "re" => Ok(Metric::Re),
            other => Err(Error::Unsupported(format!("unknown metric {other:?}"))),
        }
    }
}

/// Symmetric matrix of pairwise distances, computed in parallel.
pub fn distance_matrix(trees: &[RnaTree], metric: Metric) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    let m = trees.len();
    let upper: Vec<(usize, usize)> = (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .collect();
    let values = upper
        .par_iter()
        .map(|&(a, b)| metric.distance(&trees[a], &trees[b]))
        .collect::<Result<Vec<f64>>>()?;
    let mut matrix = vec![vec![0.0; m]; m];
    for (&(a, b), v) in upper.iter().zip(values) {
        matrix[a][b] = v;
        matrix[b][a] = v;
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(db: &str) -> SecondaryStructure {
        SecondaryStructure::from_dotbracket(db).unwrap()
    }

    fn t(db: &str) -> RnaTree {
        s(db).to_tree()
    }

    #[test]
    fn bp_examples() {
        assert_eq!(bp_distance(&s("((..))"), &s("(....)")).unwrap(), 1);
        assert_eq!(bp_distance(&s("((..))"), &s("((..))")).unwrap(), 0);
        assert_eq!(bp_distance(&s("(....)"), &s("(.)(.)")).unwrap(), 3);
        assert!(matches!(
            bp_distance(&s("(..)"), &s("(...)")),
            Err(Error::LengthMismatch { left: 4, right: 5 })
        ));
    }

    #[test]
    fn rf_examples() {
        assert_eq!(rf_distance(&t("((..))"), &t("(....)")).unwrap(), 1);
        assert_eq!(rf_distance(&t("((..))"), &t("......")).unwrap(), 2);
        assert_eq!(rf_distance(&t("(.)(.)"), &t("(.)(.)")).unwrap(), 0);
        assert!(rf_distance(&t("(..)"), &t("(...)")).is_err());
    }

    #[test]
    fn il_examples() {
        assert_eq!(il_distance(&t("((..))"), &t("(....)")).unwrap(), 3);
        assert_eq!(il_distance(&t("((..))"), &t("......")).unwrap(), 4);
        assert_eq!(il_distance(&t("(.)(.)"), &t("(.)(.)")).unwrap(), 0);
    }

    #[test]
    fn te_examples() {
        let a = t("(....)");
        let b = t(".(...)");
        let (d, _) = te_distance(&a, &a, &ManhattanCost).unwrap();
        assert_eq!(d, 0.0);
        let (d, m) = te_distance(&a, &b, &ExactMatchCost).unwrap();
        assert_eq!(d, 2.0);
        assert_eq!(m.cost(&a, &b, &ExactMatchCost), 2.0);
        let (d, m) = te_distance(&a, &b, &ManhattanCost).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(m.pairs(), &[((0, 7), (0, 7)), ((1, 6), (2, 6))]);
    }

    #[test]
    fn re_examples() {
        assert_eq!(re_distance(&t("(....)"), &t(".(...)")).unwrap(), 1.0);
        assert_eq!(re_distance(&t("((..))"), &t("((..))")).unwrap(), 0.0);
        assert_eq!(re_distance(&t("((..))"), &t("......")).unwrap(), 2.0);
        // Shifting a pair by more than two positions is worse than delete + insert.
        assert_eq!(re_distance(&t("(...)...."), &t("....(...)")).unwrap(), 2.0);
    }

    #[test]
    fn closure_cost_function() {
        let flat = |_: (usize, usize), _: (usize, usize)| 0.5;
        let (d, m) = te_distance(&t("((..))"), &t("(....)"), &flat).unwrap();
        // Roots map at 0.5 each pair; best is mapping both nodes of the
        // smaller tree: 2 * 0.5 + 3 + 2 - 4 = 2.0
        assert_eq!(d, 2.0);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn metric_parse_and_matrix() {
        assert_eq!("IL".parse::<Metric>().unwrap(), Metric::Il);
        assert!("bp".parse::<Metric>().is_err());
        let trees = vec![t("((..))"), t("(....)"), t("......")];
        let m = distance_matrix(&trees, Metric::Rf).unwrap();
        assert_eq!(
            m,
            vec![
                vec![0.0, 1.0, 2.0],
                vec![1.0, 0.0, 1.0],
                vec![2.0, 1.0, 0.0]
            ]
        );
    }
}
