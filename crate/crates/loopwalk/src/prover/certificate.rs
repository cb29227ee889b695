//! Serialized disproof certificates and their independent re-verification.
//!
//! A certificate is self-contained relative to the input system: it names
//! the theorem, the root term (and the pattern, for the pattern theorem),
//! the expansion records of the rewrite sequence tree, per-leaf counts with
//! witness positions, the exact sum, the claimed inequality, and the induced
//! random walk. The verifier replays the tree, validates every witness
//! position against the pairwise condition of the theorem, recomputes counts
//! from the witnesses alone (they are a lower bound, which is all the
//! inequality needs), re-checks the side conditions, and confirms the
//! claimed relation and verdict.

use std::collections::BTreeMap;

use num::{BigRational, One};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting::{multiplicity, occurs_at, overlapping};
use crate::patterns::{check_pattern_tree, PatternTerm};
use crate::ptrs::{format_rational, parse_rational, Ptrs};
use crate::rst::{ExpansionRecord, Rst};
use crate::term::{Position, PositionRelation, Substitution, Term};
use crate::walks::{walk_from_counts, RandomWalk, WalkKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "T3.1")]
    LoopEverywhere,
    #[serde(rename = "T4.2")]
    NonOverlappingLinear,
    #[serde(rename = "T4.7")]
    NonOverlappingNvd,
    #[serde(rename = "T4.8")]
    Orthogonal,
    #[serde(rename = "T5.10")]
    Pattern,
}

impl TheoremId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::LoopEverywhere => "T3.1",
            TheoremId::NonOverlappingLinear => "T4.2",
            TheoremId::NonOverlappingNvd => "T4.7",
            TheoremId::Orthogonal => "T4.8",
            TheoremId::Pattern => "T5.10",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertRelation {
    #[serde(rename = ">1")]
    GreaterThanOne,
    #[serde(rename = ">=1")]
    AtLeastOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CertVerdict {
    #[serde(rename = "not_AST")]
    NotAst,
    #[serde(rename = "not_PAST")]
    NotPast,
}

impl CertVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertVerdict::NotAst => "not_AST",
            CertVerdict::NotPast => "not_PAST",
        }
    }
}

/// One tree expansion: the node at `path` was rewritten with rule `rule`
/// at position `pos`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertStep {
    pub path: Vec<usize>,
    pub rule: usize,
    pub pos: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertLeaf {
    pub prob: String,
    pub count: usize,
    pub witness: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertPattern {
    pub base: String,
    pub pumping: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertWalk {
    /// Step distribution as offset -> probability.
    pub steps: BTreeMap<String, String>,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub theorem: TheoremId,
    /// Root term of the rewrite sequence tree. For the loop and occurrence
    /// theorems this is the looping term itself; for the pattern theorem it
    /// is the pumped base.
    pub term: String,
    pub pattern: Option<CertPattern>,
    pub rst: Vec<CertStep>,
    pub leaves: Vec<CertLeaf>,
    /// Σ p_v · count_v, absent for the loop theorem.
    pub sum: Option<String>,
    pub relation: Option<CertRelation>,
    pub verdict: CertVerdict,
    pub walk: CertWalk,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    pub fn from_json(text: &str) -> Result<Certificate, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Expansion records, validated: position entries are 1-indexed.
    pub fn expansion_records(&self) -> Result<Vec<ExpansionRecord>, VerifyError> {
        self.rst
            .iter()
            .map(|s| {
                Ok(ExpansionRecord {
                    path: s.path.clone(),
                    rule: s.rule,
                    pos: checked_position(&s.pos)?,
                })
            })
            .collect()
    }
}

fn checked_position(raw: &[usize]) -> Result<Position, VerifyError> {
    if raw.contains(&0) {
        return Err(VerifyError::BadPosition {
            pos: format!("{raw:?}"),
        });
    }
    Ok(Position::from_indices(raw.to_vec()))
}

pub fn cert_walk(walk: &RandomWalk) -> CertWalk {
    CertWalk {
        steps: walk
            .steps()
            .iter()
            .map(|(x, p)| (x.to_string(), format_rational(p)))
            .collect(),
        class: walk.classify().kind.as_str().to_string(),
    }
}

/// Why verification rejected a certificate. The first failure encountered
/// is reported.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("term does not parse: {0}")]
    BadTerm(String),
    #[error("position {pos} has a zero entry; positions are 1-indexed")]
    BadPosition { pos: String },
    #[error("pattern field must be present exactly for theorem T5.10")]
    PatternPresence,
    #[error("pattern is invalid: {0}")]
    BadPattern(String),
    #[error("root {root} is not the pumped base {expected}")]
    RootNotPumpedBase { root: String, expected: String },
    #[error("looping term {term} is not linear")]
    NotLinear { term: String },
    #[error("tree replay failed: {0}")]
    Replay(String),
    #[error("tree has height 0; the theorems need at least one step")]
    EmptyTree,
    #[error("certificate lists {cert} leaves, tree has {tree}")]
    LeafCountMismatch { cert: usize, tree: usize },
    #[error("leaf {index}: probability {cert}, tree says {tree}")]
    LeafProbMismatch {
        index: usize,
        cert: String,
        tree: String,
    },
    #[error("leaf {index}: witness position {pos} is not an occurrence")]
    WitnessNotOccurrence { index: usize, pos: String },
    #[error("leaf {index}: witness positions {a} and {b} violate the pairwise condition")]
    WitnessConflict { index: usize, a: String, b: String },
    #[error("leaf {index}: count {count} does not match the witness value {witness}")]
    CountMismatch {
        index: usize,
        count: usize,
        witness: usize,
    },
    #[error("leaf {index}: the loop theorem needs an occurrence in every leaf")]
    LeafWithoutLoop { index: usize },
    #[error("tree is not non-variable-decreasing")]
    NotNvd,
    #[error("pattern tree condition violated: {0}")]
    PatternTree(String),
    #[error("sum field: {0}")]
    BadSum(String),
    #[error("sum mismatch: certificate says {cert}, leaves give {computed}")]
    SumMismatch { cert: String, computed: String },
    #[error("claimed relation {relation} does not hold for sum {sum}")]
    RelationViolated { relation: String, sum: String },
    #[error("verdict {verdict} does not follow from the certificate")]
    VerdictMismatch { verdict: String },
    #[error("embedded walk does not match the leaf counts")]
    WalkMismatch,
    #[error("embedded walk class {class} is inconsistent with the verdict")]
    WalkClassInconsistent { class: String },
}

/// Independently re-checks a certificate against a system. Returns the
/// first failure, or `Ok(())` if the certificate is valid.
pub fn verify_certificate(ptrs: &Ptrs, cert: &Certificate) -> Result<(), VerifyError> {
    let root = ptrs
        .parse_term(&cert.term)
        .map_err(|e| VerifyError::BadTerm(e.to_string()))?;

    // term-level side conditions first
    if (cert.theorem == TheoremId::Pattern) != cert.pattern.is_some() {
        return Err(VerifyError::PatternPresence);
    }
    let pattern = match &cert.pattern {
        None => None,
        Some(p) => {
            let base = ptrs
                .parse_term(&p.base)
                .map_err(|e| VerifyError::BadTerm(e.to_string()))?;
            let mut pumping = Substitution::new();
            for (v, t) in &p.pumping {
                let image = ptrs
                    .parse_term(t)
                    .map_err(|e| VerifyError::BadTerm(e.to_string()))?;
                pumping.bind(v, image);
            }
            let pat = PatternTerm::new(base, pumping)
                .map_err(|e| VerifyError::BadPattern(e.to_string()))?;
            if pat.pumped_once() != root {
                return Err(VerifyError::RootNotPumpedBase {
                    root: root.to_string(),
                    expected: pat.pumped_once().to_string(),
                });
            }
            Some(pat)
        }
    };
    if cert.theorem == TheoremId::NonOverlappingLinear && !root.is_linear() {
        return Err(VerifyError::NotLinear {
            term: root.to_string(),
        });
    }

    // replay the tree from the records
    let tree = Rst::replay(root.clone(), &cert.expansion_records()?, ptrs)
        .map_err(|e| VerifyError::Replay(e.to_string()))?;
    if tree.height() == 0 {
        return Err(VerifyError::EmptyTree);
    }

    // leaves: probabilities, witnesses, counts
    let leaves = tree.leaves();
    if leaves.len() != cert.leaves.len() {
        return Err(VerifyError::LeafCountMismatch {
            cert: cert.leaves.len(),
            tree: leaves.len(),
        });
    }
    for (index, (cert_leaf, leaf)) in cert.leaves.iter().zip(leaves.iter()).enumerate() {
        let prob = parse_rational(&cert_leaf.prob).map_err(|e| VerifyError::BadSum(e.to_string()))?;
        if prob != leaf.prob {
            return Err(VerifyError::LeafProbMismatch {
                index,
                cert: cert_leaf.prob.clone(),
                tree: format_rational(&leaf.prob),
            });
        }
        let positions: Vec<Position> = cert_leaf
            .witness
            .iter()
            .map(|raw| checked_position(raw))
            .collect::<Result<_, _>>()?;
        let witness_value =
            check_witness(cert.theorem, &root, pattern.as_ref(), &leaf.term, &positions, index)?;
        if cert_leaf.count != witness_value {
            return Err(VerifyError::CountMismatch {
                index,
                count: cert_leaf.count,
                witness: witness_value,
            });
        }
        if cert.theorem == TheoremId::LoopEverywhere && positions.is_empty() {
            return Err(VerifyError::LeafWithoutLoop { index });
        }
    }

    // tree-level side conditions
    if cert.theorem == TheoremId::NonOverlappingNvd && !tree.is_nvd() {
        return Err(VerifyError::NotNvd);
    }
    if let Some(pat) = &pattern {
        check_pattern_tree(&tree, pat).map_err(|e| VerifyError::PatternTree(e.to_string()))?;
    }

    // sum, relation, verdict
    let computed: BigRational = cert
        .leaves
        .iter()
        .zip(leaves.iter())
        .map(|(c, l)| BigRational::from_integer(c.count.into()) * &l.prob)
        .sum();
    match cert.theorem {
        TheoremId::LoopEverywhere => {
            if cert.sum.is_some() || cert.relation.is_some() {
                return Err(VerifyError::BadSum(
                    "the loop theorem carries no sum".to_string(),
                ));
            }
            if cert.verdict != CertVerdict::NotAst {
                return Err(VerifyError::VerdictMismatch {
                    verdict: cert.verdict.as_str().to_string(),
                });
            }
        }
        _ => {
            let sum_text = cert
                .sum
                .as_ref()
                .ok_or_else(|| VerifyError::BadSum("sum is missing".to_string()))?;
            let sum =
                parse_rational(sum_text).map_err(|e| VerifyError::BadSum(e.to_string()))?;
            if sum != computed {
                return Err(VerifyError::SumMismatch {
                    cert: sum_text.clone(),
                    computed: format_rational(&computed),
                });
            }
            let relation = cert
                .relation
                .ok_or_else(|| VerifyError::BadSum("relation is missing".to_string()))?;
            let one = BigRational::one();
            let holds = match relation {
                CertRelation::GreaterThanOne => sum > one,
                CertRelation::AtLeastOne => sum >= one,
            };
            if !holds {
                return Err(VerifyError::RelationViolated {
                    relation: match relation {
                        CertRelation::GreaterThanOne => ">1",
                        CertRelation::AtLeastOne => ">=1",
                    }
                    .to_string(),
                    sum: format_rational(&sum),
                });
            }
            let expected_verdict = match relation {
                CertRelation::GreaterThanOne => CertVerdict::NotAst,
                CertRelation::AtLeastOne => CertVerdict::NotPast,
            };
            if cert.verdict != expected_verdict {
                return Err(VerifyError::VerdictMismatch {
                    verdict: cert.verdict.as_str().to_string(),
                });
            }
        }
    }

    // the embedded walk must match the counts and support the verdict
    let counts: Vec<(BigRational, usize)> = cert
        .leaves
        .iter()
        .zip(leaves.iter())
        .map(|(c, l)| (l.prob.clone(), c.count))
        .collect();
    let walk = walk_from_counts(&counts).map_err(|_| VerifyError::WalkMismatch)?;
    if cert_walk(&walk).steps != cert.walk.steps {
        return Err(VerifyError::WalkMismatch);
    }
    let class = walk.classify();
    let class_name = class.kind.as_str();
    if WalkKind::parse(&cert.walk.class) != Some(class.kind) {
        return Err(VerifyError::WalkMismatch);
    }
    let consistent = match cert.verdict {
        CertVerdict::NotAst => !class.is_ast,
        CertVerdict::NotPast => !class.is_past,
    };
    if !consistent {
        return Err(VerifyError::WalkClassInconsistent {
            class: class_name.to_string(),
        });
    }

    Ok(())
}

/// Validates witness positions under the theorem's pairwise condition and
/// returns the count value they certify.
fn check_witness(
    theorem: TheoremId,
    root: &Term,
    pattern: Option<&PatternTerm>,
    leaf: &Term,
    positions: &[Position],
    index: usize,
) -> Result<usize, VerifyError> {
    let counted = match pattern {
        Some(pat) => pat.base(),
        None => root,
    };
    for pos in positions {
        let ok = occurs_at(counted, leaf, pos).map_err(|_| VerifyError::WitnessNotOccurrence {
            index,
            pos: pos.to_string(),
        })?;
        if !ok {
            return Err(VerifyError::WitnessNotOccurrence {
                index,
                pos: pos.to_string(),
            });
        }
    }
    for (i, a) in positions.iter().enumerate() {
        for b in &positions[i + 1..] {
            let conflict = match theorem {
                TheoremId::LoopEverywhere
                | TheoremId::NonOverlappingLinear
                | TheoremId::NonOverlappingNvd => overlapping(counted, a, b),
                TheoremId::Orthogonal | TheoremId::Pattern => {
                    a.relation(b) != PositionRelation::Orthogonal
                }
            };
            if conflict {
                return Err(VerifyError::WitnessConflict {
                    index,
                    a: a.to_string(),
                    b: b.to_string(),
                });
            }
        }
    }
    match pattern {
        None => Ok(positions.len()),
        Some(pat) => {
            let mut total = 0;
            for pos in positions {
                total += multiplicity(pat.base(), pat.pumping(), leaf, pos).map_err(|_| {
                    VerifyError::WitnessNotOccurrence {
                        index,
                        pos: pos.to_string(),
                    }
                })?;
            }
            Ok(total)
        }
    }
}
