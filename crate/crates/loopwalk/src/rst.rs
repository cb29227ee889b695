//! Rewrite sequence trees: finitely-branching trees whose nodes carry a
//! probability and a term, and whose edges are probabilistic rewrite steps.
//! Only finite trees are materialized. `expand` is a pure operation that
//! returns a new tree, so snapshots for certificates are plain clones.
//!
//! Node handles are stable path addresses: the sequence of 0-based child
//! indices from the root.

use num::{BigRational, One};
use thiserror::Error;

use crate::ptrs::{Ptrs, format_rational};
use crate::term::{match_term, Position, Term};

/// Path from the root to a node: 0-based child indices.
pub type NodePath = Vec<usize>;

/// Record of one expansion: which node was expanded, with which rule, at
/// which position. Replaying the records from the root reproduces the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionRecord {
    pub path: NodePath,
    pub rule: usize,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RstNode {
    prob: BigRational,
    term: Term,
    children: Vec<RstNode>,
    /// The rewrite step that produced the children, if any.
    step: Option<(usize, Position)>,
}

impl RstNode {
    pub fn prob(&self) -> &BigRational {
        &self.prob
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn children(&self) -> &[RstNode] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A leaf of the tree, as returned by [`Rst::leaves`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub prob: BigRational,
    pub term: Term,
    pub path: NodePath,
    pub depth: usize,
}

/// A finite rewrite sequence tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rst {
    root: RstNode,
}

impl Rst {
    /// The single-node tree (1 : t).
    pub fn new(term: Term) -> Self {
        Rst {
            root: RstNode {
                prob: BigRational::one(),
                term,
                children: Vec::new(),
                step: None,
            },
        }
    }

    pub fn root(&self) -> &RstNode {
        &self.root
    }

    pub fn root_term(&self) -> &Term {
        &self.root.term
    }

    pub fn node(&self, path: &[usize]) -> Result<&RstNode, RstError> {
        let mut cur = &self.root;
        for &i in path {
            cur = cur.children.get(i).ok_or(RstError::InvalidPath {
                path: path.to_vec(),
            })?;
        }
        Ok(cur)
    }

    /// Expands a leaf by rewriting its term at `pos` with the given rule.
    /// The leaf gains one child per branch, in the rule's branch order, with
    /// probabilities scaled by the leaf's probability. Returns the new tree.
    pub fn expand(
        &self,
        leaf: &[usize],
        pos: &Position,
        rule_index: usize,
        ptrs: &Ptrs,
    ) -> Result<Rst, RstError> {
        let rule = ptrs
            .rules()
            .get(rule_index)
            .ok_or(RstError::BadRuleIndex { rule: rule_index })?;
        let node = self.node(leaf)?;
        if !node.is_leaf() {
            return Err(RstError::NotALeaf {
                path: leaf.to_vec(),
            });
        }
        let subterm = node
            .term
            .subterm_at(pos)
            .map_err(|_| RstError::InvalidPosition {
                pos: pos.clone(),
                term: node.term.to_string(),
            })?;
        let matcher = match_term(rule.lhs(), subterm).ok_or_else(|| RstError::NoMatch {
            rule: rule_index,
            pos: pos.clone(),
            term: node.term.to_string(),
        })?;

        let children: Vec<RstNode> = rule
            .rhs()
            .branches()
            .iter()
            .map(|(p, rhs)| RstNode {
                prob: &node.prob * p,
                term: node.term.replace_at(pos, matcher.apply(rhs)).unwrap(),
                children: Vec::new(),
                step: None,
            })
            .collect();

        let mut new_tree = self.clone();
        let mut cur = &mut new_tree.root;
        for &i in leaf {
            cur = &mut cur.children[i];
        }
        cur.children = children;
        cur.step = Some((rule_index, pos.clone()));
        Ok(new_tree)
    }

    /// All leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        collect_leaves(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// |T| = Σ p_v over the leaves. Always 1 for the finite trees built here;
    /// kept as an explicit operation so certificates can assert it.
    pub fn termination_probability(&self) -> BigRational {
        self.leaves().into_iter().map(|l| l.prob).sum()
    }

    /// edl(T) = Σ d(v)·p_v over the leaves.
    pub fn expected_derivation_length(&self) -> BigRational {
        self.leaves()
            .into_iter()
            .map(|l| BigRational::from_integer(l.depth.into()) * l.prob)
            .sum()
    }

    /// h(T): the maximal node depth.
    pub fn height(&self) -> usize {
        fn depth(node: &RstNode) -> usize {
            node.children.iter().map(depth).max().map_or(0, |d| d + 1)
        }
        depth(&self.root)
    }

    /// Non-variable-decreasing: every variable occurs at least as often in
    /// every leaf term as in the root term.
    pub fn is_nvd(&self) -> bool {
        let root_vars = self.root.term.variables();
        if root_vars.is_empty() {
            return true;
        }
        let leaves = self.leaves();
        root_vars.iter().all(|v| {
            let n = self.root.term.var_count(v);
            leaves.iter().all(|l| l.term.var_count(v) >= n)
        })
    }

    /// The expansion records of all inner nodes, in pre-order. Replaying
    /// them from the root term reproduces the tree bit-exactly.
    pub fn expansion_records(&self) -> Vec<ExpansionRecord> {
        let mut out = Vec::new();
        fn walk(node: &RstNode, path: &mut NodePath, out: &mut Vec<ExpansionRecord>) {
            if let Some((rule, pos)) = &node.step {
                out.push(ExpansionRecord {
                    path: path.clone(),
                    rule: *rule,
                    pos: pos.clone(),
                });
            }
            for (i, child) in node.children.iter().enumerate() {
                path.push(i);
                walk(child, path, out);
                path.pop();
            }
        }
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// Rebuilds a tree from a root term and expansion records.
    pub fn replay(
        root: Term,
        records: &[ExpansionRecord],
        ptrs: &Ptrs,
    ) -> Result<Rst, RstError> {
        let mut tree = Rst::new(root);
        for rec in records {
            tree = tree.expand(&rec.path, &rec.pos, rec.rule, ptrs)?;
        }
        Ok(tree)
    }

    /// Asserts probability conservation at every inner node. Holds by
    /// construction; used by tests and the certificate checker.
    pub fn check_probability_conservation(&self) -> bool {
        fn check(node: &RstNode) -> bool {
            if node.children.is_empty() {
                return true;
            }
            let sum: BigRational = node.children.iter().map(|c| c.prob.clone()).sum();
            sum == node.prob && node.children.iter().all(check)
        }
        check(&self.root) && self.termination_probability().is_one()
    }
}

fn collect_leaves(node: &RstNode, path: &mut NodePath, out: &mut Vec<Leaf>) {
    if node.children.is_empty() {
        out.push(Leaf {
            prob: node.prob.clone(),
            term: node.term.clone(),
            path: path.clone(),
            depth: path.len(),
        });
        return;
    }
    for (i, child) in node.children.iter().enumerate() {
        path.push(i);
        collect_leaves(child, path, out);
        path.pop();
    }
}

impl std::fmt::Display for Rst {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn walk(
            node: &RstNode,
            indent: usize,
            f: &mut std::fmt::Formatter<'_>,
        ) -> std::fmt::Result {
            writeln!(
                f,
                "{}({} : {})",
                "  ".repeat(indent),
                format_rational(&node.prob),
                node.term
            )?;
            for child in &node.children {
                walk(child, indent + 1, f)?;
            }
            Ok(())
        }
        walk(&self.root, 0, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RstError {
    #[error("no node at path {path:?}")]
    InvalidPath { path: NodePath },
    #[error("node at path {path:?} is not a leaf")]
    NotALeaf { path: NodePath },
    #[error("position {pos} is not valid in {term}")]
    InvalidPosition { pos: Position, term: String },
    #[error("rule {rule} does not match {term} at {pos}")]
    NoMatch {
        rule: usize,
        pos: Position,
        term: String,
    },
    #[error("no rule with index {rule}")]
    BadRuleIndex { rule: usize },
}
