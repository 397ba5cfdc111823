//! Secondary structures, RNA trees and the leafset views used by every solver.
//!
//! A structure of length `n` is a non-crossing set of base pairs over the
//! positions `1..=n`. Its tree has the ordered leafset `[0, n+1]`: the two
//! fictive positions `0` and `n+1` close the root pair `(0, n+1)`, every base
//! pair is an internal node, and every position is a leaf hanging from the
//! innermost pair enclosing it.
//!
//! Two equivalent views of a tree drive the algorithms:
//!
//! - the *descendant leafsets* (DLs): the interval `[i, j]` below each node;
//! - the *internal leafsets* (ILs): the leaf children of each node, which
//!   together form a structural partition of the leafset.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};

/// A length plus a non-crossing set of base pairs `(i, j)` with `1 <= i < j <= n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SecondaryStructure {
    len: usize,
    pairs: Vec<(usize, usize)>,
}

impl SecondaryStructure {
    /// Builds a structure from explicit pairs, checking bounds, uniqueness of
    /// positions and the non-crossing condition.
    pub fn new(len: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
        for &(i, j) in &pairs {
            if !(1 <= i && i < j && j <= len) {
                return Err(Error::InvalidStructure(format!(
                    "pair ({i}, {j}) out of range for length {len}"
                )));
            }
        }
        pairs.sort_unstable();
        check_nested(0, len + 1, &pairs).map_err(Error::InvalidStructure)?;
        Ok(Self { len, pairs })
    }

    /// The structure of length `len` without any pair.
    pub fn unpaired(len: usize) -> Self {
        Self {
            len,
            pairs: Vec::new(),
        }
    }

    /// Parses a dot-bracket string over `(`, `)` and `.`.
    pub fn from_dotbracket(text: &str) -> Result<Self> {
        let mut stack = Vec::new();
        let mut pairs = Vec::new();
        let mut len = 0;
        for (idx, ch) in text.chars().enumerate() {
            let position = idx + 1;
            len = position;
            match ch {
                '(' => stack.push(position),
                ')' => match stack.pop() {
                    Some(open) => pairs.push((open, position)),
                    None => return Err(Error::Unbalanced { position }),
                },
                '.' => {}
                '[' | ']' | '{' | '}' | '<' | '>' => {
                    return Err(Error::PseudoknotBracket { ch, position })
                }
                _ => return Err(Error::IllegalCharacter { ch, position }),
            }
        }
        if let Some(open) = stack.pop() {
            return Err(Error::Unbalanced { position: open });
        }
        pairs.sort_unstable();
        Ok(Self { len, pairs })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Base pairs sorted by their left position.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Whether every hairpin encloses at least `theta` unpaired positions,
    /// i.e. `j - i > theta` for every pair.
    pub fn satisfies_min_hairpin(&self, theta: usize) -> bool {
        self.pairs.iter().all(|&(i, j)| j - i > theta)
    }

    pub fn to_dotbracket(&self) -> String {
        let mut out = vec![b'.'; self.len];
        for &(i, j) in &self.pairs {
            out[i - 1] = b'(';
            out[j - 1] = b')';
        }
        String::from_utf8(out).expect("dot-bracket is ASCII")
    }

    /// The RNA tree of this structure, with leafset `[0, n+1]`.
    pub fn to_tree(&self) -> RnaTree {
        RnaTree::from_structure(self)
    }
}

impl fmt::Display for SecondaryStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dotbracket())
    }
}

impl FromStr for SecondaryStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_dotbracket(s)
    }
}

/// Checks that sorted `pairs` are strictly inside `(lo, hi)`, use every
/// position at most once and do not cross.
fn check_nested(lo: usize, hi: usize, pairs: &[(usize, usize)]) -> std::result::Result<(), String> {
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut last_left = None;
    for &(i, j) in pairs {
        if !(lo < i && i < j && j < hi) {
            return Err(format!("pair ({i}, {j}) not strictly inside ({lo}, {hi})"));
        }
        if last_left == Some(i) {
            return Err(format!("position {i} is paired twice"));
        }
        last_left = Some(i);
        while let Some(&(_, top_j)) = stack.last() {
            if top_j < i {
                stack.pop();
            } else {
                break;
            }
        }
        if let Some(&(top_i, top_j)) = stack.last() {
            if top_j == i {
                return Err(format!("position {i} is paired twice"));
            }
            if j == top_j {
                return Err(format!("position {j} is paired twice"));
            }
            if j > top_j {
                return Err(format!("pairs ({top_i}, {top_j}) and ({i}, {j}) cross"));
            }
        }
        stack.push((i, j));
    }
    Ok(())
}

/// A descendant leafset: the integer interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafInterval {
    lo: usize,
    hi: usize,
}

impl LeafInterval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidTree(format!(
                "leaf interval [{lo}, {hi}] needs at least two leaves"
            )))
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    // Never empty: `lo <= hi` is checked on construction.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, x: usize) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &LeafInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Whether two DLs cannot be displayed by one RNA tree.
    ///
    /// Distinct intervals conflict when they overlap without containment, or
    /// when they share an endpoint: an endpoint leaf is the leftmost (or
    /// rightmost) child of exactly one node, so `[1,6]` and `[1,4]` can never
    /// coexist even though one contains the other.
    pub fn conflicts_with(&self, other: &LeafInterval) -> bool {
        if self == other {
            return false;
        }
        let overlap = self.lo <= other.hi && other.lo <= self.hi;
        let nested = self.contains_interval(other) || other.contains_interval(self);
        (overlap && !nested) || self.lo == other.lo || self.hi == other.hi
    }
}

impl fmt::Display for LeafInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// An internal leafset: a sorted, duplicate-free set of at least two leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InternalLeafset(Vec<usize>);

impl InternalLeafset {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPartition(format!(
                "internal leafset {members:?} has duplicates"
            )));
        }
        if members.len() < 2 {
            return Err(Error::InvalidPartition(format!(
                "internal leafset {members:?} has fewer than two leaves"
            )));
        }
        Ok(Self(members))
    }

    pub(crate) fn from_sorted_unchecked(members: Vec<usize>) -> Self {
        debug_assert!(members.len() >= 2 && members.windows(2).all(|w| w[0] < w[1]));
        Self(members)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    /// The interval spanned by the set, i.e. the DL of the node owning it.
    pub fn span(&self) -> LeafInterval {
        LeafInterval {
            lo: self.first(),
            hi: self.last(),
        }
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    /// Maximal runs of non-members strictly between consecutive members,
    /// left to right.
    pub fn gaps(&self) -> Vec<LeafInterval> {
        self.gap_bounds()
            .map(|(lo, hi)| LeafInterval { lo, hi })
            .collect()
    }

    /// Gap bounds as raw pairs; a gap may be a single leaf, which is not a
    /// valid `LeafInterval`, so this is what the DP consumes.
    pub(crate) fn gap_bounds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0
            .windows(2)
            .filter(|w| w[1] > w[0] + 1)
            .map(|w| (w[0] + 1, w[1] - 1))
    }

    /// Two distinct ILs conflict if they intersect or interleave.
    pub fn conflicts_with(&self, other: &InternalLeafset) -> bool {
        if self == other {
            return false;
        }
        let (a, b) = (&self.0, &other.0);
        let (mut x, mut y) = (0, 0);
        let mut runs = 0;
        let mut last = None;
        while x < a.len() || y < b.len() {
            let from_a = match (a.get(x), b.get(y)) {
                (Some(u), Some(v)) => match u.cmp(v) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => return true,
                },
                (Some(_), None) => true,
                _ => false,
            };
            if from_a {
                x += 1;
            } else {
                y += 1;
            }
            if last != Some(from_a) {
                runs += 1;
                last = Some(from_a);
            }
        }
        runs >= 4
    }
}

impl fmt::Display for InternalLeafset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, x) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("}")
    }
}

/// A partition of `[lo, hi]` into pairwise non-conflicting sets of size at
/// least two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralPartition {
    lo: usize,
    hi: usize,
    sets: Vec<InternalLeafset>,
}

impl StructuralPartition {
    /// Validates the partition; sets are stored sorted by their minimum.
    pub fn new(lo: usize, hi: usize, mut sets: Vec<InternalLeafset>) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidPartition(format!("empty range [{lo}, {hi}]")));
        }
        sets.sort_by_key(InternalLeafset::first);
        let width = hi - lo + 1;
        let mut owner = vec![usize::MAX; width];
        for (s, set) in sets.iter().enumerate() {
            if set.len() < 2 {
                return Err(Error::InvalidPartition(format!(
                    "{set} has fewer than two leaves"
                )));
            }
            for &x in set.members() {
                if x < lo || x > hi {
                    return Err(Error::InvalidPartition(format!(
                        "{set} is not inside [{lo}, {hi}]"
                    )));
                }
                if owner[x - lo] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("leaf {x} covered twice")));
                }
                owner[x - lo] = s;
            }
        }
        if let Some(missing) = owner.iter().position(|&s| s == usize::MAX) {
            return Err(Error::InvalidPartition(format!(
                "leaf {} is not covered",
                missing + lo
            )));
        }
        // Scan left to right with a stack of open sets: a set may only
        // reappear once every set opened after it has been exhausted.
        let mut stack: Vec<usize> = Vec::new();
        let mut seen = vec![false; sets.len()];
        for (offset, &s) in owner.iter().enumerate() {
            let x = lo + offset;
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
                continue;
            }
            while let Some(&top) = stack.last() {
                if top == s {
                    break;
                }
                if sets[top].last() > x {
                    return Err(Error::InvalidPartition(format!(
                        "{} and {} conflict",
                        sets[top], sets[s]
                    )));
                }
                stack.pop();
            }
        }
        Ok(Self { lo, hi, sets })
    }

    pub fn range(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn sets(&self) -> &[InternalLeafset] {
        &self.sets
    }

    pub fn into_sets(self) -> Vec<InternalLeafset> {
        self.sets
    }
}

/// An ordered child of an internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Leaf(usize),
    Node(usize),
}

/// An ordered rooted tree on the leafset `[lo, hi]` whose internal nodes are
/// pairs `(i, j)`: the leftmost and rightmost children of every internal
/// node are the leaves `i` and `j`.
///
/// Internal nodes are indexed in preorder, so index `0` is the root
/// `(lo, hi)`.
#[derive(Debug, Clone)]
pub struct RnaTree {
    lo: usize,
    hi: usize,
    nodes: Vec<(usize, usize)>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Node whose left endpoint is `lo + offset`, if any.
    opener: Vec<Option<usize>>,
}

impl PartialEq for RnaTree {
    fn eq(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.nodes == other.nodes
    }
}

impl Eq for RnaTree {}

impl Hash for RnaTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.lo.hash(state);
        self.hi.hash(state);
        self.nodes.hash(state);
    }
}

impl RnaTree {
    /// Builds the tree on `[lo, hi]` whose non-root internal nodes are `pairs`.
    pub fn from_pairs(
        lo: usize,
        hi: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidTree(format!(
                "leafset [{lo}, {hi}] needs at least two leaves"
            )));
        }
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        check_nested(lo, hi, &pairs).map_err(Error::InvalidTree)?;
        Ok(Self::from_sorted_pairs(lo, hi, &pairs))
    }

    /// `pairs` must already be sorted and valid for `(lo, hi)`.
    fn from_sorted_pairs(lo: usize, hi: usize, pairs: &[(usize, usize)]) -> Self {
        let count = pairs.len() + 1;
        let mut nodes = Vec::with_capacity(count);
        let mut parent = Vec::with_capacity(count);
        let mut children = vec![Vec::new(); count];
        let mut opener = vec![None; hi - lo + 1];
        nodes.push((lo, hi));
        parent.push(None);
        opener[0] = Some(0);
        let mut stack = vec![0usize];
        for &(i, j) in pairs {
            while nodes[*stack.last().expect("root stays on the stack")].1 < i {
                stack.pop();
            }
            let idx = nodes.len();
            let up = *stack.last().expect("root stays on the stack");
            nodes.push((i, j));
            parent.push(Some(up));
            children[up].push(idx);
            opener[i - lo] = Some(idx);
            stack.push(idx);
        }
        Self {
            lo,
            hi,
            nodes,
            parent,
            children,
            opener,
        }
    }

    /// The tree of a secondary structure, on leafset `[0, n+1]`.
    pub fn from_structure(s: &SecondaryStructure) -> Self {
        Self::from_sorted_pairs(0, s.len() + 1, s.pairs())
    }

    /// The root-only tree on `[lo, hi]`.
    pub fn unpaired(lo: usize, hi: usize) -> Result<Self> {
        Self::from_pairs(lo, hi, [])
    }

    /// Inverse of [`RnaTree::from_structure`]; requires leafset `[0, n+1]`.
    pub fn to_structure(&self) -> Result<SecondaryStructure> {
        if self.lo != 0 {
            return Err(Error::InvalidTree(format!(
                "leafset [{}, {}] does not start at 0",
                self.lo, self.hi
            )));
        }
        Ok(SecondaryStructure {
            len: self.hi - 1,
            pairs: self.nodes[1..].to_vec(),
        })
    }

    /// Dot-bracket string of the positions strictly inside the root.
    pub fn to_dotbracket(&self) -> String {
        let mut out = vec![b'.'; self.hi - self.lo - 1];
        for &(i, j) in &self.nodes[1..] {
            out[i - self.lo - 1] = b'(';
            out[j - self.lo - 1] = b')';
        }
        String::from_utf8(out).expect("dot-bracket is ASCII")
    }

    /// Builds the unique tree displaying exactly the given DLs.
    ///
    /// The leafset must be among `dls` and the DLs must be pairwise
    /// non-conflicting.
    pub fn from_descendant_leafsets(
        dls: impl IntoIterator<Item = LeafInterval>,
        leafset: LeafInterval,
    ) -> Result<Self> {
        let mut dls: Vec<LeafInterval> = dls.into_iter().collect();
        dls.sort_unstable_by(|a, b| a.lo.cmp(&b.lo).then(b.hi.cmp(&a.hi)));
        dls.dedup();
        if !dls.contains(&leafset) {
            return Err(Error::InvalidTree(format!(
                "leafset {leafset} missing from DLs"
            )));
        }
        let mut pairs = Vec::with_capacity(dls.len() - 1);
        let mut stack: Vec<LeafInterval> = Vec::new();
        for dl in dls {
            if !leafset.contains_interval(&dl) {
                return Err(Error::InvalidTree(format!("{dl} is outside {leafset}")));
            }
            while let Some(top) = stack.last() {
                if top.hi < dl.lo {
                    stack.pop();
                } else {
                    break;
                }
            }
            if let Some(top) = stack.last() {
                if top.conflicts_with(&dl) {
                    return Err(Error::Conflict(format!("{top} and {dl}")));
                }
            }
            stack.push(dl);
            if dl != leafset {
                pairs.push((dl.lo, dl.hi));
            }
        }
        Ok(Self::from_sorted_pairs(leafset.lo, leafset.hi, &pairs))
    }

    /// Builds the unique tree whose ILs are the sets of `partition`; the two
    /// ends of the range must share a set.
    pub fn from_partition(partition: &StructuralPartition) -> Result<Self> {
        let (lo, hi) = partition.range();
        let root_set = partition
            .sets()
            .iter()
            .find(|s| s.contains(lo))
            .ok_or_else(|| Error::InvalidPartition(format!("leaf {lo} is not covered")))?;
        if !root_set.contains(hi) {
            return Err(Error::InvalidPartition(format!(
                "endpoints {lo} and {hi} are in different sets"
            )));
        }
        let spans = partition.sets().iter().map(InternalLeafset::span);
        let tree = Self::from_descendant_leafsets(spans, LeafInterval { lo, hi })?;
        let mut expected = partition.sets().to_vec();
        expected.sort();
        let mut built = tree.internal_leafsets();
        built.sort();
        if built != expected {
            return Err(Error::Internal(
                "tree built from a structural partition does not reproduce it".into(),
            ));
        }
        Ok(tree)
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn leafset(&self) -> LeafInterval {
        LeafInterval {
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// Internal nodes as `(i, j)` pairs in preorder; index 0 is the root.
    pub fn internal_nodes(&self) -> &[(usize, usize)] {
        &self.nodes
    }

    pub fn num_internal(&self) -> usize {
        self.nodes.len()
    }

    /// Number of base pairs, i.e. internal nodes other than the root.
    pub fn num_base_pairs(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Internal children of `node`, left to right.
    pub fn node_children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// All children of `node` (leaves and internal nodes), left to right.
    pub fn children(&self, node: usize) -> Vec<Child> {
        let (a, b) = self.nodes[node];
        let mut out = vec![Child::Leaf(a)];
        let mut pos = a + 1;
        while pos < b {
            match self.opener[pos - self.lo] {
                Some(child) => {
                    out.push(Child::Node(child));
                    pos = self.nodes[child].1 + 1;
                }
                None => {
                    out.push(Child::Leaf(pos));
                    pos += 1;
                }
            }
        }
        out.push(Child::Leaf(b));
        out
    }

    /// Whether internal node `a` is a proper ancestor of internal node `b`.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let (x, y) = self.nodes[a];
        let (u, v) = self.nodes[b];
        x < u && v < y
    }

    pub fn internal_leafset(&self, node: usize) -> InternalLeafset {
        let members = self
            .children(node)
            .into_iter()
            .filter_map(|c| match c {
                Child::Leaf(x) => Some(x),
                Child::Node(_) => None,
            })
            .collect();
        InternalLeafset::from_sorted_unchecked(members)
    }

    /// One IL per internal node, in preorder.
    pub fn internal_leafsets(&self) -> Vec<InternalLeafset> {
        (0..self.nodes.len())
            .map(|x| self.internal_leafset(x))
            .collect()
    }

    /// One DL per internal node, in preorder (which is sorted order).
    pub fn descendant_leafsets(&self) -> Vec<LeafInterval> {
        self.nodes
            .iter()
            .map(|&(lo, hi)| LeafInterval { lo, hi })
            .collect()
    }

    pub(crate) fn check_same_leafset(&self, other: &RnaTree) -> Result<()> {
        if self.lo != other.lo || self.hi != other.hi {
            return Err(Error::LeafsetMismatch {
                left: (self.lo, self.hi),
                right: (other.lo, other.hi),
            });
        }
        Ok(())
    }
}

impl fmt::Display for RnaTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dotbracket())
    }
}

/// Checks that all trees share one leafset and returns it.
pub(crate) fn common_leafset(trees: &[RnaTree]) -> Result<LeafInterval> {
    let first = trees
        .first()
        .ok_or_else(|| Error::EmptyInput("no input trees".into()))?;
    for t in &trees[1..] {
        first.check_same_leafset(t)?;
    }
    Ok(first.leafset())
}
