//! Seeded random generators shared by the integration suites. Everything is
//! driven by ChaCha12 so failures reproduce exactly.

#![allow(dead_code)]

use num::BigRational;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use loopwalk::ptrs::{parse_ptrs, Ptrs};
use loopwalk::term::{Substitution, Symbol, Term};

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn rational(s: &str) -> BigRational {
    loopwalk::ptrs::parse_rational(s).unwrap()
}

/// The stock signature for randomized tests: at most four symbols.
pub fn signature() -> Vec<Symbol> {
    vec![
        Symbol::new("f", 2),
        Symbol::new("g", 1),
        Symbol::new("a", 0),
        Symbol::new("b", 0),
    ]
}

/// A random term over the given symbols and variables, biased toward
/// smaller terms as depth grows.
pub fn gen_term(
    rng: &mut ChaCha12Rng,
    symbols: &[Symbol],
    vars: &[&str],
    max_depth: usize,
) -> Term {
    let leafy = max_depth == 0 || rng.gen_bool(0.3);
    if leafy {
        let leaf_symbols: Vec<&Symbol> = symbols.iter().filter(|s| s.arity() == 0).collect();
        let choices = vars.len() + leaf_symbols.len();
        let pick = rng.gen_range(0..choices.max(1));
        if pick < vars.len() {
            return Term::var(vars[pick]);
        }
        return Term::app(leaf_symbols[pick - vars.len()].clone(), vec![]);
    }
    let inner: Vec<&Symbol> = symbols.iter().filter(|s| s.arity() > 0).collect();
    let sym = inner[rng.gen_range(0..inner.len())].clone();
    let args = (0..sym.arity())
        .map(|_| gen_term(rng, symbols, vars, max_depth - 1))
        .collect();
    Term::app(sym, args)
}

/// A random non-variable term with at most `max_size` nodes.
pub fn gen_term_sized(
    rng: &mut ChaCha12Rng,
    symbols: &[Symbol],
    vars: &[&str],
    max_depth: usize,
    max_size: usize,
) -> Term {
    loop {
        let t = gen_term(rng, symbols, vars, max_depth);
        if !t.is_var() && t.size() <= max_size {
            return t;
        }
    }
}

/// A random substitution that qualifies as a pumping substitution for any
/// term containing x: x maps to a proper term containing x.
pub fn gen_pumping(rng: &mut ChaCha12Rng, symbols: &[Symbol]) -> Substitution {
    let image = loop {
        let candidate = gen_term(rng, symbols, &["x"], 2);
        if !candidate.is_var() && candidate.var_count("x") >= 1 {
            break candidate;
        }
    };
    let mut s = Substitution::new();
    s.bind("x", image);
    if rng.gen_bool(0.3) {
        s.bind("y", gen_term(rng, symbols, &["y"], 1));
    }
    s
}

/// A random system of at most `max_rules` rules over the stock signature,
/// rendered through the text format so the parser is exercised too.
pub fn gen_ptrs(rng: &mut ChaCha12Rng, max_rules: usize) -> Ptrs {
    let symbols = signature();
    let vars = ["x", "y"];
    let rule_count = rng.gen_range(1..=max_rules);
    let mut text = String::from("(VAR x y) (RULES ");
    for _ in 0..rule_count {
        let lhs = gen_term_sized(rng, &symbols, &vars, 2, 7);
        let lhs_vars: Vec<String> = lhs.variables().iter().map(|v| v.to_string()).collect();
        let lhs_var_refs: Vec<&str> = lhs_vars.iter().map(|s| s.as_str()).collect();
        let branches = rng.gen_range(1..=3usize);
        let weights: Vec<u32> = (0..branches).map(|_| rng.gen_range(1..=4)).collect();
        let total: u32 = weights.iter().sum();
        text.push_str(&format!("{lhs} -> {{ "));
        for (i, w) in weights.iter().enumerate() {
            if i > 0 {
                text.push_str(" , ");
            }
            let rhs = gen_term(rng, &symbols, &lhs_var_refs, 3);
            text.push_str(&format!("{w}/{total} : {rhs}"));
        }
        text.push_str(" } ");
    }
    text.push(')');
    parse_ptrs(&text).expect("generated systems are valid")
}
