//! The disproof pipeline. For each candidate loop found on the
//! non-probabilistic variant np(P):
//!
//! 1. build the rewrite sequence tree along the loop's derivation and check
//!    whether the looping term reappears in every leaf (the strongest and
//!    cheapest argument);
//! 2. otherwise expand the tree, leaf by leaf, tracking the occurrence sums
//!    of the applicable counting theorems until one exceeds 1 (not AST),
//!    reaches 1 (not PAST), or the budget runs out;
//! 3. otherwise extract pattern-term candidates from the loop and try the
//!    same with pattern multiplicities on a pattern tree.
//!
//! Sums use exact rational arithmetic throughout. Every verdict carries a
//! certificate that `verify_certificate` re-checks independently.
//!
//! Candidate exploration is a pure function of (system, loop, budget), so
//! results are memoized by candidate key and can be evaluated in parallel;
//! the selection order is fixed, making single- and multi-threaded runs
//! byte-identical.

mod certificate;

pub use certificate::{
    cert_walk, verify_certificate, CertLeaf, CertPattern, CertRelation, CertStep, CertVerdict,
    CertWalk, Certificate, TheoremId, VerifyError,
};

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::time::{Duration, Instant};

use num::{BigRational, One};
use rayon::prelude::*;

use crate::counting::{max_no, max_oo, max_opo, occurs_at, CountResult};
use crate::patterns::{check_pattern_tree, extract_pattern_candidates, PatternTerm};
use crate::ptrs::{build_symbol_graph, format_rational, np, NpRule, Ptrs, SymbolGraph};
use crate::rst::{NodePath, Rst};
use crate::term::{match_term, Context, Position, Substitution, Term};
use crate::walks::walk_from_counts;

/// A loop t →⁺ C[tσ] in the non-probabilistic variant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Loop {
    pub start: Term,
    /// Steps of the derivation, as indices into np(P) plus positions.
    pub derivation: Vec<NpStep>,
    pub context: Context,
    pub subst: Substitution,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NpStep {
    pub rule: usize,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    /// Maximal derivation length when searching for loops.
    pub max_loop_len: usize,
    /// Maximal number of tree expansions per candidate.
    pub max_expansions: usize,
    /// Maximal number of candidate loops.
    pub max_loops: usize,
    /// Wall-clock limit per goal. Purely a safety stop: when it is not hit,
    /// results are deterministic.
    pub time_limit: Duration,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_loop_len: 8,
            max_expansions: 64,
            max_loops: 32,
            time_limit: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    DisproveAst,
    DisprovePast,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    NotAst,
    NotPast,
    Unknown,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::NotAst => "not_AST",
            VerdictKind::NotPast => "not_PAST",
            VerdictKind::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub certificate: Option<Certificate>,
}

impl Verdict {
    fn unknown() -> Self {
        Verdict {
            kind: VerdictKind::Unknown,
            certificate: None,
        }
    }

    fn from_certificate(cert: Certificate) -> Self {
        Verdict {
            kind: match cert.verdict {
                CertVerdict::NotAst => VerdictKind::NotAst,
                CertVerdict::NotPast => VerdictKind::NotPast,
            },
            certificate: Some(cert),
        }
    }
}

/// Nodes explored per start term during loop search.
const LOOP_SEARCH_NODE_CAP: usize = 4096;
/// Pattern candidates considered per loop.
const PATTERN_CANDIDATES_PER_LOOP: usize = 8;
/// Leaves whose terms exceed this node count are not expanded further.
/// Keeps duplicating rules from blowing up terms exponentially within the
/// expansion budget.
const MAX_EXPANDABLE_TERM_SIZE: usize = 2000;

/// All rewrites of a term under np(P), leftmost-outermost positions first,
/// rules in order within a position.
fn np_rewrites(np_rules: &[NpRule], term: &Term) -> Vec<(NpStep, Term)> {
    let mut out = Vec::new();
    for pos in term.positions() {
        let sub = term.subterm_at(&pos).unwrap();
        for (i, rule) in np_rules.iter().enumerate() {
            if let Some(m) = match_term(&rule.lhs, sub) {
                let next = term.replace_at(&pos, m.apply(&rule.rhs)).unwrap();
                out.push((
                    NpStep {
                        rule: i,
                        pos: pos.clone(),
                    },
                    next,
                ));
            }
        }
    }
    out
}

/// Breadth-first forward search for loops: starting from each distinct rule
/// left-hand side, derive terms and report a loop whenever a derived term
/// contains an instance of one of its ancestors. Deterministic order: start
/// rule, then derivation length, then discovery order, then the position of
/// the instance.
pub fn find_loops(np_rules: &[NpRule], budget: &SearchBudget) -> Vec<Loop> {
    let mut loops: Vec<Loop> = Vec::new();
    let mut seen_loops: BTreeSet<Loop> = BTreeSet::new();
    let mut starts_done: BTreeSet<Term> = BTreeSet::new();

    for rule in np_rules {
        if loops.len() >= budget.max_loops {
            break;
        }
        if !starts_done.insert(rule.lhs.clone()) {
            continue;
        }
        let start = rule.lhs.clone();
        let mut visited: HashSet<Term> = HashSet::new();
        visited.insert(start.clone());
        let mut queue: VecDeque<(Term, Vec<(NpStep, Term)>)> = VecDeque::new();
        queue.push_back((start.clone(), Vec::new()));
        let mut explored = 0;

        'bfs: while let Some((term, path)) = queue.pop_front() {
            if explored >= LOOP_SEARCH_NODE_CAP {
                break;
            }
            explored += 1;
            for (step, next) in np_rewrites(np_rules, &term) {
                let mut new_path = path.clone();
                new_path.push((step, next.clone()));

                // ancestors, oldest first: the start term, then the terms
                // along the path except the new one
                let ancestors =
                    std::iter::once(&start).chain(path.iter().map(|(_, t)| t));
                for (anc_idx, anc) in ancestors.enumerate() {
                    if anc.is_var() {
                        continue;
                    }
                    for pos in next.positions() {
                        if let Some(sigma) = match_term(anc, next.subterm_at(&pos).unwrap()) {
                            let lp = Loop {
                                start: anc.clone(),
                                derivation: new_path[anc_idx..]
                                    .iter()
                                    .map(|(s, _)| s.clone())
                                    .collect(),
                                context: Context::cut(&next, &pos).unwrap(),
                                subst: sigma,
                            };
                            if seen_loops.insert(lp.clone()) {
                                loops.push(lp);
                                if loops.len() >= budget.max_loops {
                                    break 'bfs;
                                }
                            }
                        }
                    }
                }

                if new_path.len() < budget.max_loop_len && visited.insert(next.clone()) {
                    queue.push_back((next, new_path));
                }
            }
        }
    }
    loops
}

/// Builds the probabilistic tree along a loop's derivation: each step
/// expands the node that continues the derivation, so the tree contains the
/// derivation as one branch and all sibling outcomes as the rest.
fn initial_tree(ptrs: &Ptrs, np_rules: &[NpRule], lp: &Loop) -> Option<Rst> {
    let mut tree = Rst::new(lp.start.clone());
    let mut path: NodePath = Vec::new();
    for step in &lp.derivation {
        let (rule, branch) = np_rules[step.rule].origin;
        tree = tree.expand(&path, &step.pos, rule, ptrs).ok()?;
        path.push(branch);
    }
    Some(tree)
}

fn assemble_certificate(
    theorem: TheoremId,
    tree: &Rst,
    rows: &[(BigRational, usize, Vec<Position>)],
    sum: Option<BigRational>,
    relation: Option<CertRelation>,
    verdict: CertVerdict,
    pattern: Option<&PatternTerm>,
) -> Certificate {
    let counts: Vec<(BigRational, usize)> =
        rows.iter().map(|(p, c, _)| (p.clone(), *c)).collect();
    let walk = walk_from_counts(&counts).expect("leaf probabilities sum to 1");
    Certificate {
        theorem,
        term: tree.root_term().to_string(),
        pattern: pattern.map(|pat| CertPattern {
            base: pat.base().to_string(),
            pumping: pat
                .pumping()
                .iter()
                .map(|(v, t)| (v.to_string(), t.to_string()))
                .collect(),
        }),
        rst: tree
            .expansion_records()
            .into_iter()
            .map(|r| CertStep {
                path: r.path,
                rule: r.rule,
                pos: r.pos.indices().to_vec(),
            })
            .collect(),
        leaves: rows
            .iter()
            .map(|(p, c, w)| CertLeaf {
                prob: format_rational(p),
                count: *c,
                witness: w.iter().map(|pos| pos.indices().to_vec()).collect(),
            })
            .collect(),
        sum: sum.as_ref().map(format_rational),
        relation,
        verdict,
        walk: cert_walk(&walk),
    }
}

/// Disproof via a tree whose every leaf contains an instance of the root:
/// immediately not AST and not PAST.
pub fn apply_thm_loop_everywhere(
    ptrs: &Ptrs,
    np_rules: &[NpRule],
    lp: &Loop,
) -> Option<Certificate> {
    let tree = initial_tree(ptrs, np_rules, lp)?;
    let mut rows = Vec::new();
    for leaf in tree.leaves() {
        let found = leaf
            .term
            .positions()
            .into_iter()
            .find(|pos| occurs_at(&lp.start, &leaf.term, pos).unwrap_or(false))?;
        rows.push((leaf.prob.clone(), 1, vec![found]));
    }
    Some(assemble_certificate(
        TheoremId::LoopEverywhere,
        &tree,
        &rows,
        None,
        None,
        CertVerdict::NotAst,
        None,
    ))
}

/// Outcome of one candidate phase: at most one certificate per verdict.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhaseOutcome {
    pub not_ast: Option<Certificate>,
    pub not_past: Option<Certificate>,
}

struct OccEval {
    theorem: TheoremId,
    sum: BigRational,
    rows: Vec<(BigRational, usize, Vec<Position>)>,
}

/// Expands the loop's tree and tracks the occurrence sums of every
/// applicable counting theorem. The orthogonal count applies always; the
/// non-overlapping count applies when the looping term is linear (one
/// theorem) or the current tree is non-variable-decreasing (another). When
/// several certify the same verdict on the same tree, the one with the
/// weakest side conditions is emitted.
pub fn apply_occurrence_theorems(
    ptrs: &Ptrs,
    graph: &SymbolGraph,
    np_rules: &[NpRule],
    lp: &Loop,
    budget: &SearchBudget,
    deadline: Option<Instant>,
) -> PhaseOutcome {
    let Some(mut tree) = initial_tree(ptrs, np_rules, lp) else {
        return PhaseOutcome::default();
    };
    let t = &lp.start;
    let linear = t.is_linear();
    let mut expansions = tree.expansion_records().len();
    let mut snapshot: Option<Certificate> = None;
    let mut cache: HashMap<Term, (CountResult, CountResult)> = HashMap::new();
    let mut scheduler = LeafScheduler::new(ptrs, graph, t.clone());

    loop {
        let leaves = tree.leaves();
        let mut rows_no = Vec::with_capacity(leaves.len());
        let mut rows_oo = Vec::with_capacity(leaves.len());
        let mut sum_no = BigRational::from_integer(0.into());
        let mut sum_oo = BigRational::from_integer(0.into());
        for leaf in &leaves {
            let (no, oo) = cache
                .entry(leaf.term.clone())
                .or_insert_with(|| {
                    (
                        max_no(t, &leaf.term).expect("loop starts are not variables"),
                        max_oo(t, &leaf.term).expect("loop starts are not variables"),
                    )
                })
                .clone();
            sum_no += BigRational::from_integer(no.count.into()) * &leaf.prob;
            sum_oo += BigRational::from_integer(oo.count.into()) * &leaf.prob;
            rows_no.push((leaf.prob.clone(), no.count, no.witness));
            rows_oo.push((leaf.prob.clone(), oo.count, oo.witness));
        }

        // weakest side conditions first
        let mut evals: Vec<OccEval> = vec![OccEval {
            theorem: TheoremId::Orthogonal,
            sum: sum_oo,
            rows: rows_oo,
        }];
        if linear {
            evals.push(OccEval {
                theorem: TheoremId::NonOverlappingLinear,
                sum: sum_no.clone(),
                rows: rows_no.clone(),
            });
        }
        if tree.is_nvd() {
            evals.push(OccEval {
                theorem: TheoremId::NonOverlappingNvd,
                sum: sum_no.clone(),
                rows: rows_no.clone(),
            });
        }

        let one = BigRational::one();
        if let Some(eval) = evals.iter().find(|e| e.sum > one) {
            let cert = assemble_certificate(
                eval.theorem,
                &tree,
                &eval.rows,
                Some(eval.sum.clone()),
                Some(CertRelation::GreaterThanOne),
                CertVerdict::NotAst,
                None,
            );
            return PhaseOutcome {
                not_ast: Some(cert),
                not_past: snapshot,
            };
        }
        if snapshot.is_none() {
            if let Some(eval) = evals.iter().find(|e| e.sum >= one) {
                snapshot = Some(assemble_certificate(
                    eval.theorem,
                    &tree,
                    &eval.rows,
                    Some(eval.sum.clone()),
                    Some(CertRelation::AtLeastOne),
                    CertVerdict::NotPast,
                    None,
                ));
            }
        }

        if expansions >= budget.max_expansions || past_deadline(deadline) {
            break;
        }
        let Some(leaf) = scheduler.pick(&leaves) else {
            break;
        };
        let (pos, rule) = ptrs.redexes(&leaf.term)[0].clone();
        tree = tree
            .expand(&leaf.path, &pos, rule, ptrs)
            .expect("redex positions expand");
        expansions += 1;
    }

    PhaseOutcome {
        not_ast: None,
        not_past: snapshot,
    }
}

/// Per-candidate cache of leaf-term facts consulted by the scheduler.
struct LeafScheduler<'a> {
    ptrs: &'a Ptrs,
    graph: &'a SymbolGraph,
    target: Term,
    expandable: HashMap<Term, bool>,
}

impl<'a> LeafScheduler<'a> {
    fn new(ptrs: &'a Ptrs, graph: &'a SymbolGraph, target: Term) -> Self {
        LeafScheduler {
            ptrs,
            graph,
            target,
            expandable: HashMap::new(),
        }
    }

    fn expandable(&mut self, term: &Term) -> bool {
        if let Some(&known) = self.expandable.get(term) {
            return known;
        }
        let value = term.size() <= MAX_EXPANDABLE_TERM_SIZE
            && self.graph.may_reach_occurrence(term, &self.target)
            && !self.ptrs.is_normal_form(term);
        self.expandable.insert(term.clone(), value);
        value
    }

    /// Expansion scheduling: the highest-probability leaf that is not a
    /// normal form, is not oversized, and may still produce an occurrence
    /// of the target, ties broken left to right.
    fn pick<'b>(&mut self, leaves: &'b [crate::rst::Leaf]) -> Option<&'b crate::rst::Leaf> {
        let mut best: Option<&crate::rst::Leaf> = None;
        for leaf in leaves {
            if best.is_some_and(|b| leaf.prob <= b.prob) {
                continue;
            }
            if self.expandable(&leaf.term) {
                best = Some(leaf);
            }
        }
        best
    }
}

fn past_deadline(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Grows a pattern tree for the candidate and evaluates the multiplicity
/// sum whenever the pattern-tree conditions hold. Stops early when a leaf
/// can never contain an occurrence of the base again.
pub fn apply_pattern_theorem(
    ptrs: &Ptrs,
    graph: &SymbolGraph,
    pat: &PatternTerm,
    budget: &SearchBudget,
    deadline: Option<Instant>,
) -> PhaseOutcome {
    let mut tree = Rst::new(pat.pumped_once());
    let mut expansions = 0;
    let mut snapshot: Option<Certificate> = None;
    let mut cache: HashMap<Term, CountResult> = HashMap::new();
    let mut occurrence_cache: HashMap<Term, bool> = HashMap::new();
    let mut scheduler = LeafScheduler::new(ptrs, graph, pat.base().clone());

    loop {
        let leaves = tree.leaves();
        let mut dead = false;
        for leaf in &leaves {
            let has_occurrence = *occurrence_cache
                .entry(leaf.term.clone())
                .or_insert_with(|| {
                    leaf.term
                        .positions()
                        .into_iter()
                        .any(|pos| occurs_at(pat.base(), &leaf.term, &pos).unwrap_or(false))
                });
            if !has_occurrence && !scheduler.expandable(&leaf.term) {
                dead = true;
                break;
            }
        }
        if dead {
            break;
        }

        if expansions > 0 && check_pattern_tree(&tree, pat).is_ok() {
            let mut rows = Vec::with_capacity(leaves.len());
            let mut sum = BigRational::from_integer(0.into());
            for leaf in &leaves {
                let result = cache
                    .entry(leaf.term.clone())
                    .or_insert_with(|| {
                        max_opo(pat.base(), pat.pumping(), &leaf.term)
                            .expect("validated pattern term")
                    })
                    .clone();
                sum += BigRational::from_integer(result.count.into()) * &leaf.prob;
                rows.push((leaf.prob.clone(), result.count, result.witness));
            }
            let one = BigRational::one();
            if sum > one {
                let cert = assemble_certificate(
                    TheoremId::Pattern,
                    &tree,
                    &rows,
                    Some(sum),
                    Some(CertRelation::GreaterThanOne),
                    CertVerdict::NotAst,
                    Some(pat),
                );
                return PhaseOutcome {
                    not_ast: Some(cert),
                    not_past: snapshot,
                };
            }
            if sum >= one && snapshot.is_none() {
                snapshot = Some(assemble_certificate(
                    TheoremId::Pattern,
                    &tree,
                    &rows,
                    Some(sum),
                    Some(CertRelation::AtLeastOne),
                    CertVerdict::NotPast,
                    Some(pat),
                ));
            }
        }

        if expansions >= budget.max_expansions || past_deadline(deadline) {
            break;
        }
        let Some(leaf) = scheduler.pick(&leaves) else {
            break;
        };
        let (pos, rule) = ptrs.redexes(&leaf.term)[0].clone();
        tree = tree
            .expand(&leaf.path, &pos, rule, ptrs)
            .expect("redex positions expand");
        expansions += 1;
    }

    PhaseOutcome {
        not_ast: None,
        not_past: snapshot,
    }
}

/// Result of fully exploring one candidate loop.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct OccOutcome {
    loop_everywhere: Option<Certificate>,
    occurrences: PhaseOutcome,
}

/// Runs the full pipeline and returns the verdict for the requested goal.
/// Deterministic for a fixed budget whenever the time limit is not hit,
/// regardless of `parallel`.
pub fn prove_with(ptrs: &Ptrs, goal: Goal, budget: &SearchBudget, parallel: bool) -> Verdict {
    assert!(
        budget.max_loop_len > 0 && budget.max_expansions > 0 && budget.max_loops > 0,
        "search budgets must be positive"
    );
    let deadline = Some(Instant::now() + budget.time_limit);
    let graph = build_symbol_graph(ptrs);
    let np_rules = np(ptrs);
    let loops = find_loops(&np_rules, budget);

    // Candidate keys: the occurrence phase depends only on (start,
    // derivation); pattern candidates only on the pattern term. Sharing the
    // results keeps repeated work down and makes parallel evaluation easy.
    let mut occ_keys: Vec<(Term, Vec<NpStep>)> = Vec::new();
    let mut occ_of_loop: Vec<usize> = Vec::new();
    let mut pattern_keys: Vec<PatternTerm> = Vec::new();
    let mut patterns_of_loop: Vec<Vec<usize>> = Vec::new();
    for lp in &loops {
        let key = (lp.start.clone(), lp.derivation.clone());
        let occ_idx = match occ_keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                occ_keys.push(key);
                occ_keys.len() - 1
            }
        };
        occ_of_loop.push(occ_idx);
        let mut idxs = Vec::new();
        for pat in
            extract_pattern_candidates(&lp.start, &lp.context, &lp.subst, PATTERN_CANDIDATES_PER_LOOP)
        {
            let idx = match pattern_keys.iter().position(|k| *k == pat) {
                Some(i) => i,
                None => {
                    pattern_keys.push(pat);
                    pattern_keys.len() - 1
                }
            };
            if !idxs.contains(&idx) {
                idxs.push(idx);
            }
        }
        patterns_of_loop.push(idxs);
    }

    let eval_occ = |key: &(Term, Vec<NpStep>)| -> OccOutcome {
        let lp = loops
            .iter()
            .find(|l| l.start == key.0 && l.derivation == key.1)
            .expect("key came from this loop set");
        OccOutcome {
            loop_everywhere: apply_thm_loop_everywhere(ptrs, &np_rules, lp),
            occurrences: apply_occurrence_theorems(ptrs, &graph, &np_rules, lp, budget, deadline),
        }
    };
    let eval_pattern = |pat: &PatternTerm| -> PhaseOutcome {
        apply_pattern_theorem(ptrs, &graph, pat, budget, deadline)
    };

    let mut occ_results: Vec<Option<OccOutcome>> = vec![None; occ_keys.len()];
    let mut pattern_results: Vec<Option<PhaseOutcome>> = vec![None; pattern_keys.len()];
    if parallel {
        occ_results = occ_keys.par_iter().map(|k| Some(eval_occ(k))).collect();
        pattern_results = pattern_keys
            .par_iter()
            .map(|p| Some(eval_pattern(p)))
            .collect();
    }

    // Selection: candidates in discovery order; a not-AST certificate wins
    // immediately; otherwise the best not-PAST candidate is kept, ordered by
    // fewer expansion records, then candidate order, then phase order.
    let mut best_not_past: Option<(usize, usize, usize, Certificate)> = None;
    let consider = |slot: &mut Option<(usize, usize, usize, Certificate)>,
                        cert: &Option<Certificate>,
                        loop_idx: usize,
                        phase: usize| {
        if let Some(cert) = cert {
            let key = (cert.rst.len(), loop_idx, phase);
            let better = match slot {
                None => true,
                Some((r, l, p, _)) => key < (*r, *l, *p),
            };
            if better {
                *slot = Some((key.0, key.1, key.2, cert.clone()));
            }
        }
    };

    for (loop_idx, _) in loops.iter().enumerate() {
        if past_deadline(deadline) {
            break;
        }
        let occ_idx = occ_of_loop[loop_idx];
        if occ_results[occ_idx].is_none() {
            occ_results[occ_idx] = Some(eval_occ(&occ_keys[occ_idx]));
        }
        let occ = occ_results[occ_idx].as_ref().unwrap();
        if let Some(cert) = &occ.loop_everywhere {
            return Verdict::from_certificate(cert.clone());
        }
        if let Some(cert) = &occ.occurrences.not_ast {
            return Verdict::from_certificate(cert.clone());
        }
        consider(&mut best_not_past, &occ.occurrences.not_past, loop_idx, 0);

        for (rank, &pat_idx) in patterns_of_loop[loop_idx].iter().enumerate() {
            if pattern_results[pat_idx].is_none() {
                pattern_results[pat_idx] = Some(eval_pattern(&pattern_keys[pat_idx]));
            }
            let outcome = pattern_results[pat_idx].as_ref().unwrap();
            if let Some(cert) = &outcome.not_ast {
                return Verdict::from_certificate(cert.clone());
            }
            consider(&mut best_not_past, &outcome.not_past, loop_idx, 1 + rank);
        }
    }

    match goal {
        Goal::DisproveAst => Verdict::unknown(),
        Goal::DisprovePast | Goal::Auto => best_not_past
            .map(|(_, _, _, cert)| Verdict::from_certificate(cert))
            .unwrap_or_else(Verdict::unknown),
    }
}

/// Single-threaded entry point.
pub fn prove(ptrs: &Ptrs, goal: Goal, budget: &SearchBudget) -> Verdict {
    prove_with(ptrs, goal, budget, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptrs::parse_ptrs;

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    #[test]
    fn loops_of_p1() {
        let p1 = parse_ptrs("(VAR x) (RULES g(x) -> { 2/3 : x , 1/3 : g(g(x)) })").unwrap();
        let loops = find_loops(&np(&p1), &budget());
        assert!(!loops.is_empty());
        // the first loop is the one-step g(x) -> g(g(x)) with the instance
        // at the root: C = hole, sigma = [x/g(x)]
        let first = &loops[0];
        assert_eq!(first.start.to_string(), "g(x)");
        assert_eq!(first.derivation.len(), 1);
        assert!(first.context.is_trivial());
        assert_eq!(first.subst.apply_var("x").to_string(), "g(x)");
        // and the instance below the context root follows
        let second = &loops[1];
        assert_eq!(second.context.to_string(), "g(\u{25a1})");
        assert!(second.subst.is_identity());
    }

    #[test]
    fn loops_of_geo() {
        let geo = parse_ptrs("(VAR x) (RULES geo(x) -> { 1/2 : geo(s(x)) , 1/2 : x })").unwrap();
        let loops = find_loops(&np(&geo), &budget());
        let first = &loops[0];
        assert_eq!(first.start.to_string(), "geo(x)");
        assert!(first.context.is_trivial());
        assert_eq!(first.subst.apply_var("x").to_string(), "s(x)");
    }

    #[test]
    fn terminating_system_has_no_loops() {
        let p = parse_ptrs("(VAR x) (RULES f(s(x)) -> { 1 : f(x) })").unwrap();
        assert!(find_loops(&np(&p), &budget()).is_empty());
    }

    #[test]
    fn loop_derivation_replays() {
        let p3 = parse_ptrs(
            "(VAR x) (RULES g(x) -> { 1/2 : x , 1/2 : f(x) } f(x) -> { 1 : g(g(x)) })",
        )
        .unwrap();
        let np_rules = np(&p3);
        for lp in find_loops(&np_rules, &budget()) {
            // replaying the derivation from the start reaches C[start·subst]
            let mut term = lp.start.clone();
            for step in &lp.derivation {
                let rule = &np_rules[step.rule];
                let sub = term.subterm_at(&step.pos).unwrap();
                let m = match_term(&rule.lhs, sub).expect("derivation step matches");
                term = term.replace_at(&step.pos, m.apply(&rule.rhs)).unwrap();
            }
            assert_eq!(term, lp.context.fill(lp.subst.apply(&lp.start)));
        }
    }

    #[test]
    fn loop_everywhere_fires_on_definite_loop() {
        let p = parse_ptrs("(VAR x) (RULES g(x) -> { 1/2 : g(g(x)) , 1/2 : g(x) })").unwrap();
        let np_rules = np(&p);
        let loops = find_loops(&np_rules, &budget());
        let cert = apply_thm_loop_everywhere(&p, &np_rules, &loops[0]).unwrap();
        assert_eq!(cert.theorem, TheoremId::LoopEverywhere);
        assert_eq!(cert.verdict, CertVerdict::NotAst);
        assert!(cert.sum.is_none());
        assert_eq!(cert.walk.class, "loop");
        assert_eq!(verify_certificate(&p, &cert), Ok(()));
    }

    #[test]
    fn loop_everywhere_rejects_p1_and_geo() {
        for text in [
            "(VAR x) (RULES g(x) -> { 2/3 : x , 1/3 : g(g(x)) })",
            "(VAR x) (RULES geo(x) -> { 1/2 : geo(s(x)) , 1/2 : x })",
        ] {
            let p = parse_ptrs(text).unwrap();
            let np_rules = np(&p);
            for lp in find_loops(&np_rules, &budget()) {
                assert!(apply_thm_loop_everywhere(&p, &np_rules, &lp).is_none());
            }
        }
    }

    #[test]
    fn occurrence_theorems_on_p3() {
        let p3 = parse_ptrs(
            "(VAR x) (RULES g(x) -> { 1/2 : x , 1/2 : f(x) } f(x) -> { 1 : g(g(x)) })",
        )
        .unwrap();
        let graph = build_symbol_graph(&p3);
        let np_rules = np(&p3);
        let loops = find_loops(&np_rules, &budget());
        let lp = loops
            .iter()
            .find(|l| l.start.to_string() == "g(x)")
            .unwrap();
        let outcome = apply_occurrence_theorems(&p3, &graph, &np_rules, lp, &budget(), None);
        assert!(outcome.not_ast.is_none());
        let cert = outcome.not_past.unwrap();
        assert_eq!(cert.theorem, TheoremId::NonOverlappingLinear);
        assert_eq!(cert.sum.as_deref(), Some("1"));
        assert_eq!(verify_certificate(&p3, &cert), Ok(()));
    }

    #[test]
    fn occurrence_theorems_quiet_on_p4() {
        let p4 = parse_ptrs("(VAR x) (RULES g(g(x)) -> { 1/3 : x , 2/3 : g(g(g(x))) })").unwrap();
        let graph = build_symbol_graph(&p4);
        let np_rules = np(&p4);
        for lp in find_loops(&np_rules, &budget()) {
            let outcome = apply_occurrence_theorems(&p4, &graph, &np_rules, &lp, &budget(), None);
            assert_eq!(outcome, PhaseOutcome::default());
        }
    }

    #[test]
    fn pattern_theorem_on_p6() {
        let p6 =
            parse_ptrs("(VAR x) (RULES f(g(x)) -> { 1/3 : f(x) , 2/3 : f(g(g(x))) })").unwrap();
        let graph = build_symbol_graph(&p6);
        let base = p6.parse_term("f(x)").unwrap();
        let mut pumping = Substitution::new();
        pumping.bind("x", p6.parse_term("g(x)").unwrap());
        let pat = PatternTerm::new(base, pumping).unwrap();
        let outcome = apply_pattern_theorem(&p6, &graph, &pat, &budget(), None);
        let cert = outcome.not_ast.unwrap();
        assert_eq!(cert.theorem, TheoremId::Pattern);
        assert_eq!(cert.sum.as_deref(), Some("4/3"));
        assert_eq!(verify_certificate(&p6, &cert), Ok(()));
    }

    #[test]
    fn pattern_theorem_quiet_on_p6_prime() {
        let p6p =
            parse_ptrs("(VAR x) (RULES f(g(x)) -> { 1/3 : x , 2/3 : f(g(g(x))) })").unwrap();
        let graph = build_symbol_graph(&p6p);
        let base = p6p.parse_term("f(x)").unwrap();
        let mut pumping = Substitution::new();
        pumping.bind("x", p6p.parse_term("g(x)").unwrap());
        let pat = PatternTerm::new(base, pumping).unwrap();
        let outcome = apply_pattern_theorem(&p6p, &graph, &pat, &budget(), None);
        assert_eq!(outcome, PhaseOutcome::default());
    }

    #[test]
    fn prove_fixture_smoke() {
        let p2 = parse_ptrs("(VAR x) (RULES g(x) -> { 2/3 : x , 1/3 : g(g(g(x))) })").unwrap();
        let verdict = prove(&p2, Goal::Auto, &budget());
        assert_eq!(verdict.kind, VerdictKind::NotPast);
        let cert = verdict.certificate.unwrap();
        assert_eq!(cert.theorem, TheoremId::NonOverlappingLinear);
        assert_eq!(verify_certificate(&p2, &cert), Ok(()));

        let p1 = parse_ptrs("(VAR x) (RULES g(x) -> { 2/3 : x , 1/3 : g(g(x)) })").unwrap();
        assert_eq!(prove(&p1, Goal::Auto, &budget()).kind, VerdictKind::Unknown);
    }

    #[test]
    fn goal_ast_ignores_not_past() {
        let p2 = parse_ptrs("(VAR x) (RULES g(x) -> { 2/3 : x , 1/3 : g(g(g(x))) })").unwrap();
        let verdict = prove(&p2, Goal::DisproveAst, &budget());
        assert_eq!(verdict.kind, VerdictKind::Unknown);
        assert!(verdict.certificate.is_none());
    }

    #[test]
    fn goal_past_accepts_the_stronger_verdict() {
        // not AST implies not PAST, so the past goal reports it
        let p6 =
            parse_ptrs("(VAR x) (RULES f(g(x)) -> { 1/3 : f(x) , 2/3 : f(g(g(x))) })").unwrap();
        let verdict = prove(&p6, Goal::DisprovePast, &budget());
        assert_eq!(verdict.kind, VerdictKind::NotAst);
        assert!(verdict.certificate.is_some());
    }

    #[test]
    fn parallel_matches_sequential() {
        let p8 = parse_ptrs("(VAR) (RULES g -> { 1/2 : a , 1/2 : c(g,g) })").unwrap();
        let seq = prove_with(&p8, Goal::Auto, &budget(), false);
        let par = prove_with(&p8, Goal::Auto, &budget(), true);
        assert_eq!(seq, par);
        let a = seq.certificate.unwrap().to_json();
        let b = par.certificate.unwrap().to_json();
        assert_eq!(a, b);
    }
}
