//! Pattern terms ⟨t,σ⟩: a base term together with a pumping substitution
//! whose iterates t, tσ, tσ², … are pairwise distinct. Detection works on
//! the variable transition graph: ⟨t,σ⟩ is a pattern term iff some cycle
//! reachable from V(t) contains a variable whose image under σ is not a
//! variable.
//!
//! This module also extracts pattern candidates from loops (by dividing the
//! loop terms by the loop substitution), decides commutation of
//! substitutions, and checks the pattern-tree side conditions that make the
//! pattern sum argument sound.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use petgraph::graph::DiGraph;
use petgraph::algo::tarjan_scc;
use thiserror::Error;

use crate::counting::occurs_at;
use crate::rst::{NodePath, Rst};
use crate::term::{match_term, Context, Position, Substitution, Term};

/// The variable transition graph of σ w.r.t. t: nodes are the variables
/// reachable from V(t), with an edge x → y whenever y ∈ V(xσ). Variables
/// outside the domain of σ map to themselves, giving them a self-loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarGraph {
    edges: BTreeMap<Arc<str>, BTreeSet<Arc<str>>>,
}

impl VarGraph {
    pub fn nodes(&self) -> impl Iterator<Item = &Arc<str>> {
        self.edges.keys()
    }

    pub fn successors(&self, var: &str) -> impl Iterator<Item = &Arc<str>> {
        self.edges.get(var).into_iter().flatten()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges
            .get(from)
            .is_some_and(|s| s.iter().any(|v| &**v == to))
    }

    pub fn node_count(&self) -> usize {
        self.edges.len()
    }

    /// Variables lying on some cycle: members of a non-trivial strongly
    /// connected component, or nodes with a self-loop.
    pub fn cycle_variables(&self) -> BTreeSet<Arc<str>> {
        let names: Vec<Arc<str>> = self.edges.keys().cloned().collect();
        let index: BTreeMap<Arc<str>, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut graph = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = names.iter().map(|_| graph.add_node(())).collect();
        for (from, tos) in &self.edges {
            for to in tos {
                graph.add_edge(nodes[index[from]], nodes[index[to]], ());
            }
        }
        let mut out = BTreeSet::new();
        for scc in tarjan_scc(&graph) {
            let cyclic = scc.len() > 1
                || graph.contains_edge(scc[0], scc[0]);
            if cyclic {
                for node in scc {
                    out.insert(names[node.index()].clone());
                }
            }
        }
        out
    }
}

/// Builds G_{σ,t}: the subgraph of the full variable transition graph of σ
/// induced by reachability from V(t).
pub fn var_transition_graph(t: &Term, sigma: &Substitution) -> VarGraph {
    let mut edges: BTreeMap<Arc<str>, BTreeSet<Arc<str>>> = BTreeMap::new();
    let mut queue: Vec<Arc<str>> = t.variables().into_iter().collect();
    let mut seen: BTreeSet<Arc<str>> = queue.iter().cloned().collect();
    while let Some(var) = queue.pop() {
        let image = sigma.apply_var(&var);
        let targets = image.variables();
        for next in &targets {
            if seen.insert(next.clone()) {
                queue.push(next.clone());
            }
        }
        edges.insert(var, targets);
    }
    VarGraph { edges }
}

/// Is ⟨t,σ⟩ a pattern term, i.e. are the iterates tσ^m pairwise distinct?
pub fn is_pattern_term(t: &Term, sigma: &Substitution) -> bool {
    let graph = var_transition_graph(t, sigma);
    graph
        .cycle_variables()
        .iter()
        .any(|x| !sigma.apply_var(x).is_var())
}

/// A validated pattern term: base ∉ V and the iterates are pairwise
/// distinct. The base is what gets counted; the pumping substitution is
/// what gets iterated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternTerm {
    base: Term,
    pumping: Substitution,
}

impl PatternTerm {
    pub fn new(base: Term, pumping: Substitution) -> Result<Self, PatternError> {
        if base.is_var() {
            return Err(PatternError::VariableBase);
        }
        if !is_pattern_term(&base, &pumping) {
            return Err(PatternError::NotAPattern);
        }
        Ok(PatternTerm { base, pumping })
    }

    pub fn base(&self) -> &Term {
        &self.base
    }

    pub fn pumping(&self) -> &Substitution {
        &self.pumping
    }

    /// base·σ, the root of any pattern tree for this pattern.
    pub fn pumped_once(&self) -> Term {
        self.pumping.apply(&self.base)
    }
}

impl std::fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "<{}, [", self.base)?;
        for (i, (v, t)) in self.pumping.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}/{t}")?;
        }
        write!(f, "]>")
    }
}

/// Do σ and κ commute: xσκ = xκσ for every variable of interest? Outside
/// the domains and range variables of both, both compositions are the
/// identity, so only that finite set needs checking.
pub fn commutes(sigma: &Substitution, kappa: &Substitution) -> bool {
    let mut vars: BTreeSet<Arc<str>> = BTreeSet::new();
    for s in [sigma, kappa] {
        for (v, t) in s.iter() {
            vars.insert(v.clone());
            vars.extend(t.variables());
        }
    }
    vars.iter().all(|x| {
        kappa.apply(&sigma.apply_var(x)) == sigma.apply(&kappa.apply_var(x))
    })
}

/// Extracts pattern-term candidates from a loop t →⁺ C[t·σ]. Candidates are
/// terms b with b·σ equal to a subterm of the loop's start term or of
/// C[t·σ], paired with σ itself as the pumping substitution (restricted to
/// the variables reachable from b). Deterministic order, at most `bound`
/// results, every result validated.
pub fn extract_pattern_candidates(
    start: &Term,
    context: &Context,
    loop_subst: &Substitution,
    bound: usize,
) -> Vec<PatternTerm> {
    let mut targets: Vec<Term> = Vec::new();
    let looped = context.fill(loop_subst.apply(start));
    for source in [start, &looped] {
        for pos in source.positions() {
            let sub = source.subterm_at(&pos).unwrap().clone();
            if !targets.contains(&sub) {
                targets.push(sub);
            }
        }
    }

    let mut out: Vec<PatternTerm> = Vec::new();
    for target in &targets {
        if out.len() >= bound {
            break;
        }
        for base in divide(target, loop_subst, bound) {
            if base.is_var() {
                continue;
            }
            let pumping = restrict_reachable(loop_subst, &base);
            if let Ok(pat) = PatternTerm::new(base, pumping) {
                if !out.contains(&pat) {
                    out.push(pat);
                    if out.len() >= bound {
                        break;
                    }
                }
            }
        }
    }
    out
}

/// All terms b with b·σ = target, in a deterministic order: variable
/// divisions first (sorted), then decompositions through the root symbol.
fn divide(target: &Term, sigma: &Substitution, bound: usize) -> Vec<Term> {
    let mut out = Vec::new();
    // a variable v divides the target if vσ = target
    for v in sigma.domain() {
        if &sigma.apply_var(v) == target {
            out.push(Term::var(v));
        }
    }
    if let Some(v) = target.as_var() {
        // vσ = v holds only outside the domain
        if sigma.get(v).is_none() {
            out.push(Term::var(v));
        }
    }
    if let Some(sym) = target.root_symbol() {
        let arg_divisions: Vec<Vec<Term>> = target
            .args()
            .iter()
            .map(|arg| divide(arg, sigma, bound))
            .collect();
        if arg_divisions.iter().all(|d| !d.is_empty()) {
            let mut stack: Vec<Vec<Term>> = vec![Vec::new()];
            for options in &arg_divisions {
                let mut next = Vec::new();
                for partial in &stack {
                    for option in options {
                        if next.len() + out.len() > bound * 4 {
                            break;
                        }
                        let mut extended = partial.clone();
                        extended.push(option.clone());
                        next.push(extended);
                    }
                }
                stack = next;
            }
            for args in stack {
                if args.len() == target.args().len() {
                    out.push(Term::app(sym.clone(), args));
                }
            }
        }
    }
    out
}

/// Restricts σ to the variables reachable from V(t) in its transition
/// graph; the rest cannot influence any iterate of t.
fn restrict_reachable(sigma: &Substitution, t: &Term) -> Substitution {
    let graph = var_transition_graph(t, sigma);
    let mut out = Substitution::new();
    for v in graph.nodes() {
        if let Some(image) = sigma.get(v) {
            out.bind(v, image.clone());
        }
    }
    out
}

/// Why a tree failed the pattern-tree check.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternTreeIssue {
    #[error("root is {root}, expected the pumped base {expected}")]
    RootMismatch { root: String, expected: String },
    #[error("leaf at {path:?} contains no occurrence of the base term")]
    LeafWithoutOccurrence { path: NodePath },
    #[error("pumping substitution does not commute with the matcher at leaf {path:?}, position {pos}, power {power}")]
    CommutationFails {
        path: NodePath,
        pos: Position,
        power: usize,
    },
}

/// Checks whether `tree` is a pattern tree for `pat`: the root is base·σ,
/// every leaf contains an occurrence of the base, and for every occurrence
/// and every power q with base·σ^q matching there, the matcher commutes
/// with σ. Returns the first violated condition.
pub fn check_pattern_tree(tree: &Rst, pat: &PatternTerm) -> Result<(), PatternTreeIssue> {
    let expected_root = pat.pumped_once();
    if *tree.root_term() != expected_root {
        return Err(PatternTreeIssue::RootMismatch {
            root: tree.root_term().to_string(),
            expected: expected_root.to_string(),
        });
    }
    for leaf in tree.leaves() {
        let mut found = false;
        for pos in leaf.term.positions() {
            if !occurs_at(pat.base(), &leaf.term, &pos).unwrap_or(false) {
                continue;
            }
            found = true;
            // every power q >= 0 with base·σ^q matching must commute;
            // matching is monotone downwards, so stop at the first failure
            let bound = leaf.term.size();
            let subject = leaf.term.subterm_at(&pos).unwrap();
            let mut iterate = pat.base().clone();
            let mut q = 0;
            while let Some(kappa) = match_term(&iterate, subject) {
                if !commutes(pat.pumping(), &kappa) {
                    return Err(PatternTreeIssue::CommutationFails {
                        path: leaf.path.clone(),
                        pos: pos.clone(),
                        power: q,
                    });
                }
                if q >= bound {
                    break;
                }
                iterate = pat.pumping().apply(&iterate);
                q += 1;
            }
        }
        if !found {
            return Err(PatternTreeIssue::LeafWithoutOccurrence {
                path: leaf.path.clone(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("pattern base terms must not be variables")]
    VariableBase,
    #[error("the iterates of the pumping substitution repeat")]
    NotAPattern,
}
