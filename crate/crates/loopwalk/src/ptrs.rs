//! Probabilistic term rewrite systems: rules with multi-distribution
//! right-hand sides, the `.ptrs` input format, the non-probabilistic variant
//! np(P), and the symbol transition graph used to prune unreachable goals.
//!
//! All probabilities are exact rationals. The parser rejects anything whose
//! branch probabilities do not sum to exactly 1.
//!
//! Input grammar (comments run from `;` to end of line):
//!
//! ```text
//! file   := "(VAR" ident* ")" "(RULES" rule* ")"
//! rule   := term "->" "{" branch ("," branch)* "}"
//! branch := rational ":" term
//! term   := ident | ident "(" term ("," term)* ")"
//! rational := nat | nat "/" nat
//! ```

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use num::{BigRational, One, Zero};
use thiserror::Error;

use crate::term::{match_term, Position, Symbol, Term};

/// A finite multi-distribution over terms: ordered (probability, term) pairs
/// whose probabilities lie in (0,1] and sum to exactly 1. Repeated terms are
/// kept as distinct entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiDistribution {
    branches: Vec<(BigRational, Term)>,
}

impl MultiDistribution {
    pub fn new(branches: Vec<(BigRational, Term)>) -> Result<Self, PtrsError> {
        let mut sum = BigRational::zero();
        for (p, _) in &branches {
            if *p <= BigRational::zero() || *p > BigRational::one() {
                return Err(PtrsError::ProbabilityRange {
                    prob: format_rational(p),
                });
            }
            sum += p;
        }
        if !sum.is_one() {
            return Err(PtrsError::ProbabilitySum {
                sum: format_rational(&sum),
            });
        }
        Ok(MultiDistribution { branches })
    }

    pub fn branches(&self) -> &[(BigRational, Term)] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// The support: the terms with positive probability, in branch order.
    pub fn support(&self) -> impl Iterator<Item = &Term> {
        self.branches.iter().map(|(_, t)| t)
    }
}

/// A probabilistic rewrite rule ℓ → {p₁:r₁, …, p_k:r_k}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbRule {
    lhs: Term,
    rhs: MultiDistribution,
}

impl ProbRule {
    pub fn new(lhs: Term, rhs: MultiDistribution) -> Result<Self, PtrsError> {
        if lhs.is_var() {
            return Err(PtrsError::VariableLhs {
                lhs: lhs.to_string(),
            });
        }
        let lhs_vars = lhs.variables();
        for r in rhs.support() {
            for v in r.variables() {
                if !lhs_vars.contains(&v) {
                    return Err(PtrsError::FreshRhsVariable {
                        var: v.to_string(),
                        lhs: lhs.to_string(),
                    });
                }
            }
        }
        Ok(ProbRule { lhs, rhs })
    }

    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &MultiDistribution {
        &self.rhs
    }
}

/// A probabilistic TRS: a signature, the declared variables, and an ordered
/// list of rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ptrs {
    symbols: BTreeMap<Arc<str>, Symbol>,
    variables: BTreeSet<Arc<str>>,
    rules: Vec<ProbRule>,
}

impl Ptrs {
    pub fn rules(&self) -> &[ProbRule] {
        &self.rules
    }

    pub fn variables(&self) -> &BTreeSet<Arc<str>> {
        &self.variables
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }

    pub fn symbol(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }

    /// All (position, rule index) pairs at which some rule applies, in
    /// leftmost-outermost position order, rules in file order.
    pub fn redexes(&self, term: &Term) -> Vec<(Position, usize)> {
        let mut out = Vec::new();
        for pos in term.positions() {
            let sub = term.subterm_at(&pos).unwrap();
            for (i, rule) in self.rules.iter().enumerate() {
                if match_term(rule.lhs(), sub).is_some() {
                    out.push((pos.clone(), i));
                }
            }
        }
        out
    }

    /// True if no rule applies anywhere in the term.
    pub fn is_normal_form(&self, term: &Term) -> bool {
        self.redexes(term).is_empty()
    }

    /// Parses a term over this system's signature and variables, e.g. for
    /// terms embedded in certificates.
    pub fn parse_term(&self, text: &str) -> Result<Term, PtrsError> {
        let tokens = lex(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            vars: self.variables.iter().map(|v| v.to_string()).collect(),
            arities: self
                .symbols
                .iter()
                .map(|(name, sym)| (name.to_string(), sym.arity()))
                .collect(),
            allow_new_symbols: false,
        };
        let term = parser.parse_term()?;
        parser.expect_end()?;
        Ok(term)
    }
}

/// One rule of the non-probabilistic variant np(P), with the probabilistic
/// rule and branch it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpRule {
    pub lhs: Term,
    pub rhs: Term,
    /// (rule index, branch index) in the originating PTRS.
    pub origin: (usize, usize),
}

/// np(P): one non-probabilistic rule per support element of each rule,
/// duplicate (lhs, rhs) pairs removed (first origin kept).
pub fn np(ptrs: &Ptrs) -> Vec<NpRule> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, rule) in ptrs.rules().iter().enumerate() {
        for (j, (_, rhs)) in rule.rhs().branches().iter().enumerate() {
            if seen.insert((rule.lhs().clone(), rhs.clone())) {
                out.push(NpRule {
                    lhs: rule.lhs().clone(),
                    rhs: rhs.clone(),
                    origin: (i, j),
                });
            }
        }
    }
    out
}

/// Node of the symbol transition graph: a signature symbol or the "any"
/// sink that stands for right-hand sides that are bare variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SymbolNode {
    Sym(Arc<str>),
    Any,
}

/// The symbol transition graph: a rule whose left-hand side is rooted at f
/// can fire only where f occurs, and firing brings every function symbol of
/// the chosen right-hand side into the term. So the graph has an edge from
/// root(ℓ) to every function symbol of every support element, and to the
/// "any" sink for bare-variable right-hand sides. A coarse but sound
/// reachability over-approximation: false answers are definitive.
#[derive(Debug, Clone)]
pub struct SymbolGraph {
    edges: BTreeMap<Arc<str>, BTreeSet<SymbolNode>>,
}

pub fn build_symbol_graph(ptrs: &Ptrs) -> SymbolGraph {
    let mut edges: BTreeMap<Arc<str>, BTreeSet<SymbolNode>> = BTreeMap::new();
    for rule in ptrs.rules() {
        let from = rule
            .lhs()
            .root_symbol()
            .expect("rule lhs is never a variable")
            .name();
        for r in rule.rhs().support() {
            let targets = edges.entry(Arc::from(from)).or_default();
            if r.is_var() {
                targets.insert(SymbolNode::Any);
            } else {
                for sym in r.function_symbols() {
                    targets.insert(SymbolNode::Sym(Arc::from(sym.name())));
                }
            }
        }
    }
    SymbolGraph { edges }
}

impl SymbolGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }

    /// Sound over-approximation of "some rewrite descendant of `from` can
    /// contain an instance of `target`". Seeds the search with every function
    /// symbol of `from`; reaching "any" means every symbol is reachable.
    /// Returns false only if no descendant can contain such an instance.
    pub fn may_reach_occurrence(&self, from: &Term, target: &Term) -> bool {
        let target_root = match target.root_symbol() {
            Some(sym) => sym.name().to_string(),
            None => return true, // a variable target occurs everywhere
        };
        let mut reached: BTreeSet<Arc<str>> = BTreeSet::new();
        let mut queue: VecDeque<Arc<str>> = VecDeque::new();
        for sym in from.function_symbols() {
            let name: Arc<str> = Arc::from(sym.name());
            if reached.insert(name.clone()) {
                queue.push_back(name);
            }
        }
        while let Some(name) = queue.pop_front() {
            if &*name == target_root.as_str() {
                return true;
            }
            if let Some(next) = self.edges.get(&name) {
                for node in next {
                    match node {
                        SymbolNode::Any => return true,
                        SymbolNode::Sym(n) => {
                            if reached.insert(n.clone()) {
                                queue.push_back(n.clone());
                            }
                        }
                    }
                }
            }
        }
        false
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(text: &str) -> Result<BigRational, PtrsError> {
    let parse_nat = |s: &str| -> Result<num::BigInt, PtrsError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(PtrsError::BadRational {
                text: text.to_string(),
            });
        }
        s.parse().map_err(|_| PtrsError::BadRational {
            text: text.to_string(),
        })
    };
    match text.split_once('/') {
        None => Ok(BigRational::from_integer(parse_nat(text)?)),
        Some((n, d)) => {
            let denom = parse_nat(d)?;
            if denom.is_zero() {
                return Err(PtrsError::BadRational {
                    text: text.to_string(),
                });
            }
            Ok(BigRational::new(parse_nat(n)?, denom))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PtrsError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: String },
    #[error("probability {prob} is outside (0,1]")]
    ProbabilityRange { prob: String },
    #[error("left-hand side {lhs} is a variable")]
    VariableLhs { lhs: String },
    #[error("right-hand side of rule for {lhs} uses fresh variable {var}")]
    FreshRhsVariable { var: String, lhs: String },
    #[error("symbol {name} used with arity {found}, expected {expected}")]
    ArityClash {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("variable {name} used as a function symbol")]
    VariableApplied { name: String },
    #[error("unknown symbol {name}")]
    UnknownSymbol { name: String },
    #[error("malformed rational {text}")]
    BadRational { text: String },
}

// --- lexer ---

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Slash,
    Arrow,
    Ident(String),
    Nat(String),
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    col: usize,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> char {
        let c = self.chars[self.pos];
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }
}

fn lex(text: &str) -> Result<Vec<Token>, PtrsError> {
    let mut lx = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    while let Some(c) = lx.peek() {
        let (tl, tc) = (lx.line, lx.col);
        match c {
            ';' => {
                while let Some(c) = lx.peek() {
                    lx.bump();
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                lx.bump();
            }
            '(' | ')' | '{' | '}' | ',' | ':' | '/' => {
                lx.bump();
                let kind = match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    ',' => TokenKind::Comma,
                    ':' => TokenKind::Colon,
                    _ => TokenKind::Slash,
                };
                tokens.push(Token {
                    kind,
                    line: tl,
                    col: tc,
                });
            }
            '-' => {
                lx.bump();
                if lx.peek() == Some('>') {
                    lx.bump();
                    tokens.push(Token {
                        kind: TokenKind::Arrow,
                        line: tl,
                        col: tc,
                    });
                } else {
                    return Err(PtrsError::Syntax {
                        line: tl,
                        col: tc,
                        msg: "expected '->'".to_string(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(c) = lx.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        ident.push(lx.bump());
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(ident),
                    line: tl,
                    col: tc,
                });
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(c) = lx.peek() {
                    if c.is_ascii_digit() {
                        digits.push(lx.bump());
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Nat(digits),
                    line: tl,
                    col: tc,
                });
            }
            c => {
                return Err(PtrsError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character {c:?}"),
                });
            }
        }
    }
    Ok(tokens)
}

// --- parser ---

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    vars: BTreeSet<String>,
    arities: BTreeMap<String, usize>,
    allow_new_symbols: bool,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: &str) -> PtrsError {
        let (line, col) = self
            .tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1));
        PtrsError::Syntax {
            line,
            col,
            msg: msg.to_string(),
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), PtrsError> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_here(&format!("expected {what}")))
            }
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, PtrsError> {
        match self.next() {
            Some(Token {
                kind: TokenKind::Ident(name),
                ..
            }) => Ok(name),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_here(&format!("expected {what}")))
            }
        }
    }

    fn expect_end(&mut self) -> Result<(), PtrsError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(self.err_here("trailing input"))
        }
    }

    fn register_arity(&mut self, name: &str, arity: usize) -> Result<(), PtrsError> {
        if self.vars.contains(name) {
            if arity > 0 {
                return Err(PtrsError::VariableApplied {
                    name: name.to_string(),
                });
            }
            return Ok(());
        }
        match self.arities.get(name) {
            Some(&known) if known != arity => Err(PtrsError::ArityClash {
                name: name.to_string(),
                expected: known,
                found: arity,
            }),
            Some(_) => Ok(()),
            None if self.allow_new_symbols => {
                self.arities.insert(name.to_string(), arity);
                Ok(())
            }
            None => Err(PtrsError::UnknownSymbol {
                name: name.to_string(),
            }),
        }
    }

    fn parse_term(&mut self) -> Result<Term, PtrsError> {
        let name = self.expect_ident("a term")?;
        let applied = matches!(
            self.peek(),
            Some(Token {
                kind: TokenKind::LParen,
                ..
            })
        );
        if !applied {
            return if self.vars.contains(&name) {
                Ok(Term::var(&name))
            } else {
                self.register_arity(&name, 0)?;
                Ok(Term::constant(&name))
            };
        }
        self.expect(TokenKind::LParen, "'('")?;
        let mut args = vec![self.parse_term()?];
        loop {
            match self.peek().map(|t| t.kind.clone()) {
                Some(TokenKind::Comma) => {
                    self.next();
                    args.push(self.parse_term()?);
                }
                Some(TokenKind::RParen) => {
                    self.next();
                    break;
                }
                _ => return Err(self.err_here("expected ',' or ')'")),
            }
        }
        self.register_arity(&name, args.len())?;
        Ok(Term::app(Symbol::new(&name, args.len()), args))
    }

    fn parse_rational(&mut self) -> Result<BigRational, PtrsError> {
        let numer = match self.next() {
            Some(Token {
                kind: TokenKind::Nat(n),
                ..
            }) => n,
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return Err(self.err_here("expected a probability"));
            }
        };
        let text = if matches!(
            self.peek(),
            Some(Token {
                kind: TokenKind::Slash,
                ..
            })
        ) {
            self.next();
            match self.next() {
                Some(Token {
                    kind: TokenKind::Nat(d),
                    ..
                }) => format!("{numer}/{d}"),
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    return Err(self.err_here("expected a denominator"));
                }
            }
        } else {
            numer
        };
        parse_rational(&text)
    }
}

/// Parses and validates a complete `.ptrs` file.
pub fn parse_ptrs(text: &str) -> Result<Ptrs, PtrsError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        vars: BTreeSet::new(),
        arities: BTreeMap::new(),
        allow_new_symbols: true,
    };

    parser.expect(TokenKind::LParen, "'(VAR'")?;
    let kw = parser.expect_ident("'VAR'")?;
    if kw != "VAR" {
        return Err(parser.err_here("expected 'VAR'"));
    }
    while let Some(Token {
        kind: TokenKind::Ident(_),
        ..
    }) = parser.peek()
    {
        let name = parser.expect_ident("a variable")?;
        parser.vars.insert(name);
    }
    parser.expect(TokenKind::RParen, "')'")?;

    parser.expect(TokenKind::LParen, "'(RULES'")?;
    let kw = parser.expect_ident("'RULES'")?;
    if kw != "RULES" {
        return Err(parser.err_here("expected 'RULES'"));
    }
    let mut rules = Vec::new();
    while !matches!(
        parser.peek(),
        Some(Token {
            kind: TokenKind::RParen,
            ..
        }) | None
    ) {
        let lhs = parser.parse_term()?;
        parser.expect(TokenKind::Arrow, "'->'")?;
        parser.expect(TokenKind::LBrace, "'{'")?;
        let mut branches = Vec::new();
        loop {
            let p = parser.parse_rational()?;
            parser.expect(TokenKind::Colon, "':'")?;
            let t = parser.parse_term()?;
            branches.push((p, t));
            match parser.next().map(|t| t.kind) {
                Some(TokenKind::Comma) => continue,
                Some(TokenKind::RBrace) => break,
                _ => {
                    parser.pos = parser.pos.saturating_sub(1);
                    return Err(parser.err_here("expected ',' or '}'"));
                }
            }
        }
        rules.push(ProbRule::new(lhs, MultiDistribution::new(branches)?)?);
    }
    parser.expect(TokenKind::RParen, "')'")?;
    parser.expect_end()?;

    let symbols = parser
        .arities
        .iter()
        .map(|(name, &arity)| (Arc::from(name.as_str()), Symbol::new(name, arity)))
        .collect();
    let variables = parser
        .vars
        .iter()
        .map(|name| Arc::from(name.as_str()))
        .collect();
    Ok(Ptrs {
        symbols,
        variables,
        rules,
    })
}

impl fmt::Display for Ptrs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(VAR")?;
        for v in &self.variables {
            write!(f, " {v}")?;
        }
        writeln!(f, ")")?;
        writeln!(f, "(RULES")?;
        for rule in &self.rules {
            write!(f, "  {} -> {{ ", rule.lhs())?;
            for (i, (p, t)) in rule.rhs().branches().iter().enumerate() {
                if i > 0 {
                    write!(f, " , ")?;
                }
                write!(f, "{} : {}", format_rational(p), t)?;
            }
            writeln!(f, " }}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rational(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_p2() {
        let p = parse_ptrs("(VAR x) (RULES g(x) -> { 2/3 : x , 1/3 : g(g(g(x))) })").unwrap();
        assert_eq!(p.rules().len(), 1);
        let rule = &p.rules()[0];
        assert_eq!(rule.lhs().to_string(), "g(x)");
        assert_eq!(rule.rhs().branches()[0].0, rational("2/3"));
        assert_eq!(rule.rhs().branches()[1].1.to_string(), "g(g(g(x)))");
        assert!(rule.rhs().branches()[1].1.subterm_at(&Position::root()).is_ok());
    }

    #[test]
    fn parses_geo() {
        let p = parse_ptrs("(VAR x) (RULES geo(x) -> { 1/2 : geo(s(x)) , 1/2 : x })").unwrap();
        assert_eq!(p.rules().len(), 1);
        assert_eq!(p.symbol("geo").unwrap().arity(), 1);
        assert_eq!(p.symbol("s").unwrap().arity(), 1);
    }

    #[test]
    fn rejects_bad_probability_sum() {
        let err = parse_ptrs("(VAR x) (RULES g(x) -> { 1/2 : x , 1/3 : g(x) })").unwrap_err();
        assert!(matches!(err, PtrsError::ProbabilitySum { .. }), "{err}");
    }

    #[test]
    fn rejects_variable_lhs() {
        let err = parse_ptrs("(VAR x) (RULES x -> { 1 : x })").unwrap_err();
        assert!(matches!(err, PtrsError::VariableLhs { .. }), "{err}");
    }

    #[test]
    fn rejects_fresh_rhs_variable() {
        let err = parse_ptrs("(VAR x y) (RULES g(x) -> { 1 : g(y) })").unwrap_err();
        assert!(matches!(err, PtrsError::FreshRhsVariable { .. }), "{err}");
    }

    #[test]
    fn rejects_arity_clash() {
        let err = parse_ptrs("(VAR x) (RULES f(x) -> { 1 : f(x,x) })").unwrap_err();
        assert!(matches!(err, PtrsError::ArityClash { .. }), "{err}");
    }

    #[test]
    fn syntax_error_carries_location() {
        let err = parse_ptrs("(VAR x)\n(RULES g(x) -> 1 : x })").unwrap_err();
        match err {
            PtrsError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn comments_are_skipped() {
        let p = parse_ptrs("; a system\n(VAR x) ; vars\n(RULES g(x) -> { 1 : x })").unwrap();
        assert_eq!(p.rules().len(), 1);
    }

    #[test]
    fn np_of_p1() {
        let p = parse_ptrs("(VAR x) (RULES g(x) -> { 2/3 : x , 1/3 : g(g(x)) })").unwrap();
        let rules = np(&p);
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].rhs.to_string(), "x");
        assert_eq!(rules[1].rhs.to_string(), "g(g(x))");
        assert_eq!(rules[0].origin, (0, 0));
        assert_eq!(rules[1].origin, (0, 1));
    }

    #[test]
    fn np_dedups_and_dirac() {
        let p = parse_ptrs("(VAR x) (RULES g(x) -> { 1/2 : x , 1/2 : x })").unwrap();
        let rules = np(&p);
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].rhs.to_string(), "x");

        let p = parse_ptrs("(VAR x) (RULES g(x) -> { 1 : g(g(x)) })").unwrap();
        assert_eq!(np(&p).len(), 1);
    }

    #[test]
    fn np_of_p6() {
        let p = parse_ptrs("(VAR x) (RULES f(g(x)) -> { 1/3 : f(x) , 2/3 : f(g(g(x))) })").unwrap();
        let rules = np(&p);
        let rendered: Vec<String> = rules
            .iter()
            .map(|r| format!("{} -> {}", r.lhs, r.rhs))
            .collect();
        assert_eq!(rendered, vec!["f(g(x)) -> f(x)", "f(g(x)) -> f(g(g(x)))"]);
    }

    #[test]
    fn np_size_bound() {
        let p = parse_ptrs(
            "(VAR x) (RULES g(x) -> { 1/2 : x , 1/2 : x } f(x) -> { 1/3 : x , 2/3 : f(f(x)) })",
        )
        .unwrap();
        let support_total: usize = p.rules().iter().map(|r| r.rhs().len()).sum();
        assert!(np(&p).len() <= support_total);
    }

    #[test]
    fn symbol_graph_edges() {
        // P6: f -> f from the first branch, f -> {f, g} from the second
        let p = parse_ptrs("(VAR x) (RULES f(g(x)) -> { 1/3 : f(x) , 2/3 : f(g(g(x))) })").unwrap();
        let g = build_symbol_graph(&p);
        assert_eq!(g.edge_count(), 2); // f -> f and f -> g, deduplicated

        // geo -> {geo, s} and geo -> any
        let p = parse_ptrs("(VAR x) (RULES geo(x) -> { 1/2 : geo(s(x)) , 1/2 : x })").unwrap();
        let g = build_symbol_graph(&p);
        assert_eq!(g.edge_count(), 3);

        // a symbol introduced only below a right-hand-side root still gets
        // an edge; pruning must see it
        let p = parse_ptrs("(VAR x) (RULES f(x) -> { 1 : g(h(b)) } a -> { 1 : a })").unwrap();
        let g = build_symbol_graph(&p);
        let from = p.parse_term("f(a)").unwrap();
        let target = p.parse_term("b").unwrap();
        assert!(g.may_reach_occurrence(&from, &target));

        // no rules, no edges
        let p = parse_ptrs("(VAR x) (RULES)").unwrap();
        assert_eq!(build_symbol_graph(&p).edge_count(), 0);
    }

    #[test]
    fn may_reach_examples() {
        let p6 = parse_ptrs("(VAR x) (RULES f(g(x)) -> { 1/3 : f(x) , 2/3 : f(g(g(x))) })").unwrap();
        let g = build_symbol_graph(&p6);
        let from = p6.parse_term("f(x)").unwrap();
        let target = p6.parse_term("f(g(x))").unwrap();
        assert!(g.may_reach_occurrence(&from, &target));

        // a normal-form constant with no rules reaches nothing
        let gt = parse_ptrs(
            "(VAR x y) (RULES gt(s(x),s(y)) -> { 1 : gt(x,y) } gt(s(x),z0) -> { 1 : t } gt(z0,y) -> { 1 : f })",
        )
        .unwrap();
        let graph = build_symbol_graph(&gt);
        let from = gt.parse_term("t").unwrap();
        let target = gt.parse_term("gt(x,y)").unwrap();
        assert!(!graph.may_reach_occurrence(&from, &target));

        // P8: `a` has no rules, so it cannot reach g
        let p8 = parse_ptrs("(VAR) (RULES g -> { 1/2 : a , 1/2 : c(g,g) })").unwrap();
        let graph = build_symbol_graph(&p8);
        let from = p8.parse_term("a").unwrap();
        let target = p8.parse_term("g").unwrap();
        assert!(!graph.may_reach_occurrence(&from, &target));
        // but c(g,g) can
        let from = p8.parse_term("c(g,g)").unwrap();
        assert!(graph.may_reach_occurrence(&from, &target));
    }

    #[test]
    fn variable_from_term_seeds_nothing() {
        let p = parse_ptrs("(VAR x) (RULES g(x) -> { 1 : g(g(x)) })").unwrap();
        let graph = build_symbol_graph(&p);
        let from = p.parse_term("x").unwrap();
        let target = p.parse_term("g(x)").unwrap();
        assert!(!graph.may_reach_occurrence(&from, &target));
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(format_rational(&rational("2/4")), "1/2");
        assert_eq!(format_rational(&rational("3/1")), "3");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn redex_order_is_leftmost_outermost() {
        let p = parse_ptrs("(VAR x) (RULES g(x) -> { 1 : x })").unwrap();
        let term = p.parse_term("g(g(g(x)))").unwrap();
        let redexes = p.redexes(&term);
        let positions: Vec<String> = redexes.iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(positions, vec!["ε", "1", "1.1"]);
    }
}
