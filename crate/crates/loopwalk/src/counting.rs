//! Occurrence counting. The central question: how many instantiations of a
//! term `t` occur in a term `s` at positions that can be counted together?
//!
//! Three variants share one bottom-up dynamic program over the subterms of
//! `s`. For every subterm s' two numbers are computed: `beta`, the best
//! count ignoring an occurrence at the root of s', and `alpha`, the best
//! count overall.
//!
//! * `max_no` counts pairwise non-overlapping occurrences: two positions
//!   overlap w.r.t. `t` when one extends the other through a non-variable
//!   position of `t`. At a root match, alpha is the maximum of beta and
//!   1 plus the counts at the subterms below the variable positions of `t`.
//! * `max_oo` counts pairwise orthogonal occurrences: choosing a root match
//!   discards everything below it, so alpha is max(beta, 1).
//! * `max_opo` counts pattern occurrences of ⟨t,σ⟩ weighted by multiplicity
//!   (the largest m such that tσ^m still matches). It runs the same program
//!   with pattern tσ and takes max(beta, m) at a match.
//!
//! Each variant also reconstructs a witness set of positions realizing the
//! count, so certificates can be re-checked without rerunning the program.
//! Brute-force oracles over explicit occurrence subsets are provided for
//! testing; they are exponential and only meant for small terms.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::term::{match_term, Position, PositionRelation, Substitution, Term};

/// Does `t` occur in `s` at `pos`, i.e. is s|π an instance of t?
pub fn occurs_at(t: &Term, s: &Term, pos: &Position) -> Result<bool, CountError> {
    if t.is_var() {
        return Err(CountError::PatternIsVariable);
    }
    let sub = s.subterm_at(pos).map_err(|_| CountError::InvalidPosition {
        pos: pos.clone(),
        term: s.to_string(),
    })?;
    Ok(match_term(t, sub).is_some())
}

/// Are two positions overlapping w.r.t. `t`: is one equal to the other
/// extended by a non-variable position of `t`?
pub fn overlapping(t: &Term, p1: &Position, p2: &Position) -> bool {
    let (above, below) = match p1.relation(p2) {
        PositionRelation::Orthogonal => return false,
        PositionRelation::Equal => return true, // τ = ε is a position of t
        PositionRelation::Above => (p1, p2),
        PositionRelation::Below => (p2, p1),
    };
    let tau = above.strip_prefix(below).unwrap();
    match t.subterm_at(&tau) {
        Ok(sub) => !sub.is_var(),
        Err(_) => false, // τ is not a position of t at all
    }
}

/// Table of per-subterm values computed by the dynamic program, addressed by
/// position in `s`. After completion, alpha at the root is the result and
/// `beta <= alpha` holds everywhere.
#[derive(Debug, Clone)]
pub struct OccurrenceTable {
    entries: BTreeMap<Position, TableEntry>,
}

#[derive(Debug, Clone)]
pub struct TableEntry {
    pub alpha: usize,
    pub beta: usize,
    /// Processing flag; all entries are processed once the program returns.
    pub processed: bool,
    /// Whether alpha was realized by taking the occurrence at this node.
    took_root: bool,
}

impl OccurrenceTable {
    pub fn alpha(&self, pos: &Position) -> Option<usize> {
        self.entries.get(pos).map(|e| e.alpha)
    }

    pub fn beta(&self, pos: &Position) -> Option<usize> {
        self.entries.get(pos).map(|e| e.beta)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Position, &TableEntry)> {
        self.entries.iter()
    }
}

/// Count plus a witness set of positions realizing it. For the pattern
/// variant the count is the sum of the multiplicities at the witness
/// positions; otherwise it is the witness cardinality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountResult {
    pub count: usize,
    pub witness: Vec<Position>,
}

enum Mode<'a> {
    NonOverlapping,
    Orthogonal,
    /// Pattern counting by the pumping substitution. The DP pattern is
    /// base·σ; multiplicities extend from there.
    Pattern(&'a Substitution),
}

/// maxNO(t, s): the maximal number of pairwise non-overlapping occurrences.
pub fn max_no(t: &Term, s: &Term) -> Result<CountResult, CountError> {
    max_no_with_table(t, s).map(|(r, _)| r)
}

/// maxNO with the full (alpha, beta) table, for inspection and tests.
pub fn max_no_with_table(t: &Term, s: &Term) -> Result<(CountResult, OccurrenceTable), CountError> {
    if t.is_var() {
        return Err(CountError::PatternIsVariable);
    }
    Ok(run_dp(t, s, &Mode::NonOverlapping))
}

/// maxOO(t, s): the maximal number of pairwise orthogonal occurrences.
pub fn max_oo(t: &Term, s: &Term) -> Result<CountResult, CountError> {
    if t.is_var() {
        return Err(CountError::PatternIsVariable);
    }
    Ok(run_dp(t, s, &Mode::Orthogonal).0)
}

/// The multiplicity of the pattern term ⟨t,σ⟩ at an occurrence position:
/// the maximal m with tσ^m matching s|π. Matching is monotone in m, and m
/// is bounded by the size of s, so the search is finite.
pub fn multiplicity(
    t: &Term,
    sigma: &Substitution,
    s: &Term,
    pos: &Position,
) -> Result<usize, CountError> {
    if !crate::patterns::is_pattern_term(t, sigma) {
        return Err(CountError::NotAPatternTerm);
    }
    if !occurs_at(t, s, pos)? {
        return Err(CountError::NotAnOccurrence {
            pos: pos.clone(),
            term: s.to_string(),
        });
    }
    let sub = s.subterm_at(pos).unwrap();
    Ok(multiplicity_below(t, sigma, sub, s.size()))
}

/// Multiplicity of ⟨t,σ⟩ at the root of `sub`, assuming t matches there.
fn multiplicity_below(t: &Term, sigma: &Substitution, sub: &Term, bound: usize) -> usize {
    let mut iterate = t.clone();
    let mut m = 0;
    while m < bound {
        iterate = sigma.apply(&iterate);
        if iterate.size() > sub.size() || match_term(&iterate, sub).is_none() {
            break;
        }
        m += 1;
    }
    m
}

/// maxOPO(t, σ, s): the maximal sum of multiplicities over a set of pairwise
/// orthogonal occurrences of the pattern term ⟨t,σ⟩.
pub fn max_opo(t: &Term, sigma: &Substitution, s: &Term) -> Result<CountResult, CountError> {
    if !crate::patterns::is_pattern_term(t, sigma) {
        return Err(CountError::NotAPatternTerm);
    }
    Ok(run_dp(&sigma.apply(t), s, &Mode::Pattern(sigma)).0)
}

fn run_dp(pattern: &Term, s: &Term, mode: &Mode) -> (CountResult, OccurrenceTable) {
    let pattern_var_positions = pattern.var_positions();
    let s_size = s.size();
    let mut entries: BTreeMap<Position, TableEntry> = BTreeMap::new();

    // children before parents: iterate positions in reverse pre-order
    let mut positions = s.positions();
    positions.reverse();
    for pos in positions {
        let sub = s.subterm_at(&pos).unwrap();
        let beta: usize = sub
            .args()
            .iter()
            .enumerate()
            .map(|(i, _)| entries[&pos.child(i + 1)].alpha)
            .sum();
        let (alpha, took_root) = match match_term(pattern, sub) {
            None => (beta, false),
            Some(_) => {
                let root_val = match mode {
                    Mode::NonOverlapping => {
                        1 + pattern_var_positions
                            .iter()
                            .map(|vp| entries[&pos.join(vp)].alpha)
                            .sum::<usize>()
                    }
                    Mode::Orthogonal => 1,
                    Mode::Pattern(sigma) => {
                        // pattern = base·σ already matched, so m >= 1
                        1 + multiplicity_below(pattern, sigma, sub, s_size)
                    }
                };
                if root_val >= beta {
                    (root_val, true)
                } else {
                    (beta, false)
                }
            }
        };
        entries.insert(
            pos,
            TableEntry {
                alpha,
                beta,
                processed: true,
                took_root,
            },
        );
    }

    let table = OccurrenceTable { entries };
    let mut witness = Vec::new();
    collect_witness(s, &Position::root(), &table, mode, &pattern_var_positions, &mut witness);
    witness.sort();
    let count = table.alpha(&Position::root()).unwrap();
    (CountResult { count, witness }, table)
}

fn collect_witness(
    s: &Term,
    pos: &Position,
    table: &OccurrenceTable,
    mode: &Mode,
    pattern_var_positions: &[Position],
    out: &mut Vec<Position>,
) {
    let entry = &table.entries[pos];
    if entry.alpha == 0 {
        return;
    }
    if entry.took_root {
        out.push(pos.clone());
        if let Mode::NonOverlapping = mode {
            for vp in pattern_var_positions {
                collect_witness(s, &pos.join(vp), table, mode, pattern_var_positions, out);
            }
        }
        return;
    }
    let sub = s.subterm_at(pos).unwrap();
    for i in 1..=sub.args().len() {
        collect_witness(s, &pos.child(i), table, mode, pattern_var_positions, out);
    }
}

// --- brute-force oracles ---

/// All positions at which `t` occurs in `s`.
pub fn occurrence_positions(t: &Term, s: &Term) -> Result<Vec<Position>, CountError> {
    if t.is_var() {
        return Err(CountError::PatternIsVariable);
    }
    Ok(s.positions()
        .into_iter()
        .filter(|p| match_term(t, s.subterm_at(p).unwrap()).is_some())
        .collect())
}

/// Exhaustive maxNO: maximize over all subsets of occurrence positions whose
/// members are pairwise non-overlapping. Exponential; test use only.
pub fn oracle_max_no(t: &Term, s: &Term) -> Result<usize, CountError> {
    let occ = occurrence_positions(t, s)?;
    let compatible =
        |a: &Position, b: &Position| !overlapping(t, a, b);
    Ok(best_subset(&occ, &vec![1; occ.len()], &compatible))
}

/// Exhaustive maxOO: as above, but members must be pairwise orthogonal.
pub fn oracle_max_oo(t: &Term, s: &Term) -> Result<usize, CountError> {
    let occ = occurrence_positions(t, s)?;
    let compatible =
        |a: &Position, b: &Position| a.relation(b) == PositionRelation::Orthogonal;
    Ok(best_subset(&occ, &vec![1; occ.len()], &compatible))
}

/// Exhaustive maxOPO: orthogonal occurrence subsets of the base term,
/// maximizing the sum of multiplicities.
pub fn oracle_max_opo(t: &Term, sigma: &Substitution, s: &Term) -> Result<usize, CountError> {
    if !crate::patterns::is_pattern_term(t, sigma) {
        return Err(CountError::NotAPatternTerm);
    }
    let occ = occurrence_positions(t, s)?;
    let weights: Vec<usize> = occ
        .iter()
        .map(|p| multiplicity_below(t, sigma, s.subterm_at(p).unwrap(), s.size()))
        .collect();
    let compatible =
        |a: &Position, b: &Position| a.relation(b) == PositionRelation::Orthogonal;
    Ok(best_subset(&occ, &weights, &compatible))
}

/// Branch-and-bound search for the heaviest pairwise-compatible subset.
fn best_subset(
    positions: &[Position],
    weights: &[usize],
    compatible: &dyn Fn(&Position, &Position) -> bool,
) -> usize {
    fn go(
        idx: usize,
        chosen: &mut Vec<usize>,
        current: usize,
        best: &mut usize,
        positions: &[Position],
        weights: &[usize],
        compatible: &dyn Fn(&Position, &Position) -> bool,
    ) {
        if idx == positions.len() {
            *best = (*best).max(current);
            return;
        }
        let remaining: usize = weights[idx..].iter().sum();
        if current + remaining <= *best {
            return; // cannot beat the best found so far
        }
        if chosen
            .iter()
            .all(|&c| compatible(&positions[c], &positions[idx]))
        {
            chosen.push(idx);
            go(idx + 1, chosen, current + weights[idx], best, positions, weights, compatible);
            chosen.pop();
        }
        go(idx + 1, chosen, current, best, positions, weights, compatible);
    }
    let mut best = 0;
    go(0, &mut Vec::new(), 0, &mut best, positions, weights, compatible);
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("the counted term must not be a variable")]
    PatternIsVariable,
    #[error("position {pos} is not valid in {term}")]
    InvalidPosition { pos: Position, term: String },
    #[error("no occurrence at position {pos} in {term}")]
    NotAnOccurrence { pos: Position, term: String },
    #[error("not a pattern term: some iterate of the pumping substitution repeats")]
    NotAPatternTerm,
}
