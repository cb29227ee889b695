//! First-order terms over a finite signature, plus the syntactic toolbox
//! everything else is built from: positions, subterm access and replacement,
//! substitutions, syntactic matching, and one-hole contexts.
//!
//! Terms are immutable values with structural equality. Subterms are shared
//! via `Arc`, so cloning a term and rebuilding spines after a replacement are
//! cheap. Positions follow the 1-indexed convention: the root is the empty
//! sequence, `1.2` is the second argument of the first argument.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A function symbol: a name with a fixed arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    name: Arc<str>,
    arity: usize,
}

impl Symbol {
    pub fn new(name: &str, arity: usize) -> Self {
        Symbol {
            name: Arc::from(name),
            arity,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum TermNode {
    Var(Arc<str>),
    App(Symbol, Vec<Term>),
}

/// A first-order term: a variable or a symbol applied to argument terms.
#[derive(Debug, Clone, Eq, PartialOrd, Ord)]
pub struct Term(Arc<TermNode>);

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term(Arc::new(TermNode::Var(Arc::from(name))))
    }

    /// Builds a symbol application. Panics if the argument count does not
    /// match the symbol's arity; well-formedness is a structural invariant.
    pub fn app(symbol: Symbol, args: Vec<Term>) -> Self {
        assert_eq!(
            symbol.arity(),
            args.len(),
            "symbol {} applied to {} arguments",
            symbol,
            args.len()
        );
        Term(Arc::new(TermNode::App(symbol, args)))
    }

    /// Nullary application, for constants.
    pub fn constant(name: &str) -> Self {
        Term::app(Symbol::new(name, 0), vec![])
    }

    pub fn is_var(&self) -> bool {
        matches!(&*self.0, TermNode::Var(_))
    }

    pub fn as_var(&self) -> Option<&Arc<str>> {
        match &*self.0 {
            TermNode::Var(v) => Some(v),
            TermNode::App(..) => None,
        }
    }

    pub fn root_symbol(&self) -> Option<&Symbol> {
        match &*self.0 {
            TermNode::Var(_) => None,
            TermNode::App(sym, _) => Some(sym),
        }
    }

    pub fn args(&self) -> &[Term] {
        match &*self.0 {
            TermNode::Var(_) => &[],
            TermNode::App(_, args) => args,
        }
    }

    /// Number of nodes, written |t|.
    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }

    /// All positions of the term, in pre-order (root first, then the
    /// arguments left to right).
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        self.collect_positions(&mut Vec::new(), &mut out);
        out
    }

    fn collect_positions(&self, prefix: &mut Vec<usize>, out: &mut Vec<Position>) {
        out.push(Position(prefix.clone()));
        for (i, arg) in self.args().iter().enumerate() {
            prefix.push(i + 1);
            arg.collect_positions(prefix, out);
            prefix.pop();
        }
    }

    /// Positions of function symbols (Pos_Σ).
    pub fn fn_positions(&self) -> Vec<Position> {
        self.positions()
            .into_iter()
            .filter(|p| !self.subterm_at(p).unwrap().is_var())
            .collect()
    }

    /// Positions of variables (Pos_V).
    pub fn var_positions(&self) -> Vec<Position> {
        self.positions()
            .into_iter()
            .filter(|p| self.subterm_at(p).unwrap().is_var())
            .collect()
    }

    /// The subterm t|π.
    pub fn subterm_at(&self, pos: &Position) -> Result<&Term, TermError> {
        let mut cur = self;
        for &i in &pos.0 {
            cur = cur
                .args()
                .get(i - 1)
                .ok_or_else(|| TermError::InvalidPosition {
                    pos: pos.clone(),
                    term: self.to_string(),
                })?;
        }
        Ok(cur)
    }

    /// The term t[r]π: `self` with the subterm at `pos` replaced by
    /// `replacement`. All other nodes are shared with the original.
    pub fn replace_at(&self, pos: &Position, replacement: Term) -> Result<Term, TermError> {
        self.subterm_at(pos)?;
        Ok(self.replace_rec(&pos.0, replacement))
    }

    fn replace_rec(&self, path: &[usize], replacement: Term) -> Term {
        match path {
            [] => replacement,
            [i, rest @ ..] => {
                let (sym, args) = match &*self.0 {
                    TermNode::App(sym, args) => (sym.clone(), args),
                    TermNode::Var(_) => unreachable!("path validated"),
                };
                let mut new_args = args.clone();
                new_args[i - 1] = args[i - 1].replace_rec(rest, replacement);
                Term::app(sym, new_args)
            }
        }
    }

    /// The set of variables V(t).
    pub fn variables(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<Arc<str>>) {
        match &*self.0 {
            TermNode::Var(v) => {
                out.insert(v.clone());
            }
            TermNode::App(_, args) => {
                for a in args {
                    a.collect_variables(out);
                }
            }
        }
    }

    /// Every function symbol occurring in the term.
    pub fn function_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        if let TermNode::App(sym, args) = &*self.0 {
            out.insert(sym.clone());
            for a in args {
                a.collect_symbols(out);
            }
        }
    }

    /// |t|x: the number of positions where the variable occurs.
    pub fn var_count(&self, var: &str) -> usize {
        match &*self.0 {
            TermNode::Var(v) => usize::from(&**v == var),
            TermNode::App(_, args) => args.iter().map(|a| a.var_count(var)).sum(),
        }
    }

    /// A term is linear if no variable occurs more than once.
    pub fn is_linear(&self) -> bool {
        fn walk(t: &Term, seen: &mut BTreeSet<Arc<str>>) -> bool {
            match &*t.0 {
                TermNode::Var(v) => seen.insert(v.clone()),
                TermNode::App(_, args) => args.iter().all(|a| walk(a, seen)),
            }
        }
        walk(self, &mut BTreeSet::new())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            TermNode::Var(v) => write!(f, "{v}"),
            TermNode::App(sym, args) => {
                write!(f, "{}", sym.name())?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// A position in a term: a sequence of 1-indexed argument steps. The empty
/// sequence ε addresses the root. The derived order is pre-order, so sorting
/// positions gives the leftmost-outermost traversal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    /// Builds a position from raw 1-indexed steps. Panics on a zero entry.
    pub fn from_indices(indices: Vec<usize>) -> Self {
        assert!(indices.iter().all(|&i| i >= 1), "positions are 1-indexed");
        Position(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The position of the i-th argument (1-indexed) below `self`.
    pub fn child(&self, i: usize) -> Self {
        assert!(i >= 1);
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    /// Concatenation π.τ.
    pub fn join(&self, tail: &Position) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        Position(v)
    }

    /// Is `self` a (not necessarily proper) prefix of `other`?
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// The remainder τ with `self`.τ = `other`, if `self` is a prefix.
    pub fn strip_prefix(&self, other: &Position) -> Option<Position> {
        if self.is_prefix_of(other) {
            Some(Position(other.0[self.0.len()..].to_vec()))
        } else {
            None
        }
    }

    /// Relates two positions: equal, above (proper prefix), below, or
    /// orthogonal (neither is a prefix of the other).
    pub fn relation(&self, other: &Position) -> PositionRelation {
        if self == other {
            PositionRelation::Equal
        } else if self.is_prefix_of(other) {
            PositionRelation::Above
        } else if other.is_prefix_of(self) {
            PositionRelation::Below
        } else {
            PositionRelation::Orthogonal
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "ε")
        } else {
            let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionRelation {
    Equal,
    Above,
    Below,
    Orthogonal,
}

/// A substitution: a finite mapping from variables to terms, the identity
/// everywhere else. Identity bindings are dropped, so the domain is exactly
/// the set of variables the substitution moves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Substitution(std::collections::BTreeMap<Arc<str>, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, Term)>>(pairs: I) -> Self {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            s.bind(&v, t);
        }
        s
    }

    pub fn bind(&mut self, var: &str, term: Term) {
        if term.as_var().map(|v| &**v) == Some(var) {
            self.0.remove(var);
        } else {
            self.0.insert(Arc::from(var), term);
        }
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Arc<str>> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, &Term)> {
        self.0.iter()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// xσ as a term: σ(x) if bound, the variable itself otherwise.
    pub fn apply_var(&self, var: &str) -> Term {
        self.0.get(var).cloned().unwrap_or_else(|| Term::var(var))
    }

    /// tσ: homomorphic application to a term.
    pub fn apply(&self, term: &Term) -> Term {
        match &*term.0 {
            TermNode::Var(v) => self.apply_var(v),
            TermNode::App(sym, args) => {
                if self.0.is_empty() {
                    return term.clone();
                }
                let new_args = args.iter().map(|a| self.apply(a)).collect();
                Term::app(sym.clone(), new_args)
            }
        }
    }

    /// tσ^n.
    pub fn apply_iterated(&self, term: &Term, n: usize) -> Term {
        let mut t = term.clone();
        for _ in 0..n {
            t = self.apply(&t);
        }
        t
    }
}

/// Syntactic matching: finds σ with pattern·σ = subject, treating only the
/// pattern's variables as bindable. Returns `None` if no such σ exists.
pub fn match_term(pattern: &Term, subject: &Term) -> Option<Substitution> {
    let mut bindings = std::collections::BTreeMap::new();
    if match_rec(pattern, subject, &mut bindings) {
        let mut s = Substitution::new();
        for (v, t) in bindings {
            s.bind(&v, t);
        }
        Some(s)
    } else {
        None
    }
}

fn match_rec(
    pattern: &Term,
    subject: &Term,
    bindings: &mut std::collections::BTreeMap<Arc<str>, Term>,
) -> bool {
    match &*pattern.0 {
        TermNode::Var(v) => match bindings.get(v) {
            Some(bound) => bound == subject,
            None => {
                bindings.insert(v.clone(), subject.clone());
                true
            }
        },
        TermNode::App(sym, args) => match &*subject.0 {
            TermNode::App(ssym, sargs) if sym == ssym => args
                .iter()
                .zip(sargs.iter())
                .all(|(p, s)| match_rec(p, s, bindings)),
            _ => false,
        },
    }
}

/// Name of the hole constant used in contexts. Not a legal identifier in the
/// input syntax, so it can never collide with a parsed symbol.
const HOLE_NAME: &str = "\u{25a1}";

fn hole_symbol() -> Symbol {
    Symbol::new(HOLE_NAME, 0)
}

fn hole_term() -> Term {
    Term::app(hole_symbol(), vec![])
}

fn is_hole(t: &Term) -> bool {
    t.root_symbol().map(Symbol::name) == Some(HOLE_NAME)
}

/// A one-hole context C: a term over the signature extended with the hole
/// constant □, containing exactly one hole occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context {
    term: Term,
    hole: Position,
}

impl Context {
    /// The trivial context □.
    pub fn hole() -> Self {
        Context {
            term: hole_term(),
            hole: Position::root(),
        }
    }

    /// A term with exactly one hole occurrence.
    pub fn from_term(term: Term) -> Result<Self, TermError> {
        let holes: Vec<Position> = term
            .positions()
            .into_iter()
            .filter(|p| is_hole(term.subterm_at(p).unwrap()))
            .collect();
        match holes.as_slice() {
            [hole] => Ok(Context {
                hole: hole.clone(),
                term,
            }),
            _ => Err(TermError::NotAContext {
                holes: holes.len(),
                term: term.to_string(),
            }),
        }
    }

    /// The context obtained from `term` by cutting out the subterm at `pos`.
    pub fn cut(term: &Term, pos: &Position) -> Result<Self, TermError> {
        let with_hole = term.replace_at(pos, hole_term())?;
        Ok(Context {
            term: with_hole,
            hole: pos.clone(),
        })
    }

    /// C[s]: plugs a term into the hole.
    pub fn fill(&self, subterm: Term) -> Term {
        self.term.replace_at(&self.hole, subterm).unwrap()
    }

    pub fn hole_position(&self) -> &Position {
        &self.hole
    }

    pub fn is_trivial(&self) -> bool {
        self.hole.is_root()
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("position {pos} is not valid in {term}")]
    InvalidPosition { pos: Position, term: String },
    #[error("expected exactly one hole, found {holes} in {term}")]
    NotAContext { holes: usize, term: String },
}
