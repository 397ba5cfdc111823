//! Rooted phylogenies with arbitrary out-degree, stored as an arena.

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    label: Option<String>,
    parent: Option<usize>,
    children: Vec<usize>,
}

/// A rooted tree whose leaves carry unique string ids.
///
/// Children keep the order in which they were given, which fixes the
/// traversal orders used by every solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phylogeny {
    nodes: Vec<Node>,
    root: usize,
}

impl Phylogeny {
    /// Builds a phylogeny from per-node labels and parent links. Exactly one
    /// node must lack a parent; every leaf needs a label, and leaf labels
    /// must be unique.
    pub fn from_parents(labels: Vec<Option<String>>, parents: Vec<Option<usize>>) -> Result<Self> {
        if labels.len() != parents.len() {
            return Err(Error::InvalidTree(format!(
                "{} labels for {} nodes",
                labels.len(),
                parents.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::InvalidTree("phylogeny has no nodes".into()));
        }
        let mut nodes: Vec<Node> = labels
            .into_iter()
            .zip(&parents)
            .map(|(label, &parent)| Node {
                label,
                parent,
                children: Vec::new(),
            })
            .collect();
        let mut root = None;
        for (v, &p) in parents.iter().enumerate() {
            match p {
                None if root.is_some() => {
                    return Err(Error::InvalidTree(
                        "phylogeny has more than one root".into(),
                    ))
                }
                None => root = Some(v),
                Some(p) if p >= nodes.len() || p == v => {
                    return Err(Error::InvalidTree(format!(
                        "node {v} has invalid parent {p}"
                    )))
                }
                Some(p) => nodes[p].children.push(v),
            }
        }
        let root = root.ok_or_else(|| Error::InvalidTree("phylogeny has no root".into()))?;
        let phy = Self { nodes, root };

        let reached = phy.preorder().len();
        if reached != phy.nodes.len() {
            return Err(Error::InvalidTree("phylogeny contains a cycle".into()));
        }
        let mut seen = HashSet::new();
        for v in phy.leaves() {
            let label = phy.nodes[v]
                .label
                .as_deref()
                .ok_or_else(|| Error::InvalidTree(format!("leaf node {v} has no label")))?;
            if !seen.insert(label) {
                return Err(Error::InvalidTree(format!("duplicate leaf id {label:?}")));
            }
        }
        Ok(phy)
    }

    /// Complete binary tree of the given height whose leaves, left to right,
    /// are labelled by `leaf_label(k)`.
    pub fn complete_binary(height: u32, leaf_label: impl Fn(usize) -> String) -> Result<Self> {
        let total = (1usize << (height + 1)) - 1;
        let first_leaf = (1usize << height) - 1;
        let labels = (0..total)
            .map(|v| (v >= first_leaf).then(|| leaf_label(v - first_leaf)))
            .collect();
        let parents = (0..total).map(|v| (v > 0).then(|| (v - 1) / 2)).collect();
        Self::from_parents(labels, parents)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.nodes[v].parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.nodes[v].children
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].children.is_empty()
    }

    pub fn label(&self, v: usize) -> Option<&str> {
        self.nodes[v].label.as_deref()
    }

    /// The label of `v`, or `n<index>` for unlabelled internal nodes.
    pub fn node_id(&self, v: usize) -> String {
        match &self.nodes[v].label {
            Some(l) => l.clone(),
            None => format!("n{v}"),
        }
    }

    /// Nodes with every parent before its children, children in order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.nodes[v].children.iter().rev());
        }
        out
    }

    /// Nodes with every child before its parent, children in order.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                out.push(v);
            } else {
                stack.push((v, true));
                stack.extend(self.nodes[v].children.iter().rev().map(|&c| (c, false)));
            }
        }
        out
    }

    /// Leaves in preorder, i.e. left to right.
    pub fn leaves(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&v| self.is_leaf(v))
            .collect()
    }

    /// Internal nodes in postorder.
    pub fn internal_nodes(&self) -> Vec<usize> {
        self.postorder()
            .into_iter()
            .filter(|&v| !self.is_leaf(v))
            .collect()
    }

    /// `(parent, child)` pairs in preorder of the child.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.preorder()
            .into_iter()
            .filter_map(|v| self.nodes[v].parent.map(|p| (p, v)))
            .collect()
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of edges from the root.
    pub fn depth(&self, v: usize) -> usize {
        let mut d = 0;
        let mut cur = v;
        while let Some(p) = self.nodes[cur].parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// Length of the longest downward path to a leaf, for every node.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![0; self.nodes.len()];
        for v in self.postorder() {
            h[v] = self.nodes[v]
                .children
                .iter()
                .map(|&c| h[c] + 1)
                .max()
                .unwrap_or(0);
        }
        h
    }

    /// Index of the leaf labelled `id`.
    pub fn find_leaf(&self, id: &str) -> Option<usize> {
        self.leaves()
            .into_iter()
            .find(|&v| self.nodes[v].label.as_deref() == Some(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Option<String> {
        Some(x.to_string())
    }

    #[test]
    fn small_tree() {
        // ((x,y),z)
        let phy = Phylogeny::from_parents(
            vec![None, None, s("x"), s("y"), s("z")],
            vec![None, Some(0), Some(1), Some(1), Some(0)],
        )
        .unwrap();
        assert_eq!(phy.leaves(), vec![2, 3, 4]);
        assert_eq!(phy.postorder(), vec![2, 3, 1, 4, 0]);
        assert_eq!(phy.internal_nodes(), vec![1, 0]);
        assert_eq!(phy.edges(), vec![(0, 1), (1, 2), (1, 3), (0, 4)]);
        assert_eq!(phy.heights(), vec![2, 1, 0, 0, 0]);
        assert_eq!(phy.depth(3), 2);
        assert_eq!(phy.node_id(1), "n1");
        assert_eq!(phy.find_leaf("z"), Some(4));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Phylogeny::from_parents(vec![None, s("a")], vec![None, None]).is_err());
        assert!(Phylogeny::from_parents(vec![None, None], vec![None, Some(0)]).is_err());
        assert!(
            Phylogeny::from_parents(vec![None, s("a"), s("a")], vec![None, Some(0), Some(0)])
                .is_err()
        );
        assert!(Phylogeny::from_parents(
            vec![None, s("a"), s("b")],
            vec![Some(1), Some(2), Some(1)]
        )
        .is_err());
    }

    #[test]
    fn complete_binary_sizes() {
        let phy = Phylogeny::complete_binary(1, |k| format!("l{k}")).unwrap();
        assert_eq!(phy.leaves().len(), 2);
        let phy = Phylogeny::complete_binary(5, |k| format!("l{k}")).unwrap();
        assert_eq!(phy.leaves().len(), 32);
        assert_eq!(phy.len(), 63);
        assert_eq!(phy.heights()[phy.root()], 5);
        assert_eq!(phy.label(phy.leaves()[0]), Some("l0"));
    }
}
