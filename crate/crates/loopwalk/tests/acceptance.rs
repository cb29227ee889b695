//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see them on success).

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::time::{Duration, Instant};

use num::{BigRational, One, ToPrimitive};

use loopwalk::counting::{
    max_no, max_no_with_table, max_oo, max_opo, oracle_max_no, oracle_max_oo, oracle_max_opo,
};
use loopwalk::patterns::is_pattern_term;
use loopwalk::prover::{
    prove, prove_with, verify_certificate, CertVerdict, Certificate, Goal, SearchBudget,
    TheoremId, VerdictKind,
};
use loopwalk::ptrs::{parse_ptrs, Ptrs};
use loopwalk::term::{Position, Substitution, Symbol, Term};
use loopwalk::walks::{simulate, RandomWalk, WalkKind, SIMULATOR_RNG};

use common::{gen_pumping, gen_term, gen_term_sized, gen_ptrs, rational, rng, signature};
use rand::Rng;

fn criterion(name: &str, body: impl FnOnce() + UnwindSafe) {
    match catch_unwind(body) {
        Ok(()) => println!("[acceptance] {name}: PASS"),
        Err(cause) => {
            println!("[acceptance] {name}: FAIL");
            resume_unwind(cause);
        }
    }
}

fn fixture(name: &str) -> Ptrs {
    let path = format!("{}/tests/fixtures/{name}.ptrs", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_ptrs(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn pos(idx: &[usize]) -> Position {
    Position::from_indices(idx.to_vec())
}

/// Criterion 1: exact verdicts on the named systems, default budget, under
/// five seconds in total.
#[test]
fn c1_fixture_verdicts() {
    criterion("C1 fixture verdicts", || {
        let started = Instant::now();
        let budget = SearchBudget::default();

        let verdict = |name: &str| {
            let system = fixture(name);
            let v = prove(&system, Goal::Auto, &budget);
            if let Some(cert) = &v.certificate {
                assert_eq!(verify_certificate(&system, cert), Ok(()), "{name} certificate");
            }
            v
        };

        let v = verdict("p2");
        assert_eq!(v.kind, VerdictKind::NotPast, "p2");

        let v = verdict("p3");
        assert_eq!(v.kind, VerdictKind::NotPast, "p3");

        let v = verdict("p5p");
        assert_eq!(v.kind, VerdictKind::NotAst, "p5p");
        assert_eq!(v.certificate.unwrap().sum.as_deref(), Some("11/9"), "p5p sum");

        let v = verdict("p6");
        assert_eq!(v.kind, VerdictKind::NotAst, "p6");
        assert_eq!(v.certificate.unwrap().theorem, TheoremId::Pattern, "p6 theorem");

        let v = verdict("p7");
        assert_eq!(v.kind, VerdictKind::NotAst, "p7");
        assert_eq!(v.certificate.unwrap().theorem, TheoremId::Pattern, "p7 theorem");

        let v = verdict("p8");
        assert_eq!(v.kind, VerdictKind::NotPast, "p8");
        let cert = v.certificate.unwrap();
        assert_eq!(cert.theorem, TheoremId::Orthogonal, "p8 theorem");
        assert_eq!(cert.sum.as_deref(), Some("1"), "p8 sum");

        for name in ["geo", "p1", "p4", "p5", "p6p"] {
            assert_eq!(verdict(name).kind, VerdictKind::Unknown, "{name}");
        }

        let elapsed = started.elapsed();
        println!("[acceptance] C1 runtime: {elapsed:?}");
        assert!(elapsed < Duration::from_secs(5), "fixtures took {elapsed:?}");
    });
}

/// Criterion 2: the dynamic-programming table on the 17-subterm example is
/// reproduced entry for entry.
#[test]
fn c2_algorithm_table() {
    criterion("C2 occurrence-count table", || {
        let a = || Term::constant("a");
        let f = |l: Term, r: Term| Term::app(Symbol::new("f", 2), vec![l, r]);
        let t = f(a(), f(a(), Term::var("x")));
        let deep = f(a(), f(a(), a()));
        let s = f(a(), f(a(), f(a(), f(deep.clone(), deep))));

        let (result, table) = max_no_with_table(&t, &s).unwrap();
        assert_eq!(result.count, 3);

        // s1..s11: every proper subterm at or below the a-leaves and the two
        // f(a,a) nodes, plus the three shallow a's
        let zero_positions = [
            pos(&[1]),
            pos(&[2, 1]),
            pos(&[2, 2, 1]),
            pos(&[2, 2, 2, 1, 1]),
            pos(&[2, 2, 2, 1, 2]),
            pos(&[2, 2, 2, 1, 2, 1]),
            pos(&[2, 2, 2, 1, 2, 2]),
            pos(&[2, 2, 2, 2, 1]),
            pos(&[2, 2, 2, 2, 2]),
            pos(&[2, 2, 2, 2, 2, 1]),
            pos(&[2, 2, 2, 2, 2, 2]),
        ];
        for p in &zero_positions {
            assert_eq!(table.alpha(p), Some(0), "alpha at {p}");
            assert_eq!(table.beta(p), Some(0), "beta at {p}");
        }
        // s12, s13: single occurrences at the root
        for p in [pos(&[2, 2, 2, 1]), pos(&[2, 2, 2, 2])] {
            assert_eq!(table.alpha(&p), Some(1), "alpha at {p}");
            assert_eq!(table.beta(&p), Some(0), "beta at {p}");
        }
        // s14, s15: two occurrences below, none at the root
        for p in [pos(&[2, 2, 2]), pos(&[2, 2])] {
            assert_eq!(table.alpha(&p), Some(2), "alpha at {p}");
            assert_eq!(table.beta(&p), Some(2), "beta at {p}");
        }
        // s16: a root occurrence beats the two below
        assert_eq!(table.alpha(&pos(&[2])), Some(3));
        assert_eq!(table.beta(&pos(&[2])), Some(2));
        // s17: the root occurrence overlaps, alpha stays 3
        assert_eq!(table.alpha(&Position::root()), Some(3));
        assert_eq!(table.beta(&Position::root()), Some(3));
    });
}

/// Criterion 3: the dynamic programs agree with exhaustive oracles on 1000+
/// random instances, and the measured growth of max_no is at most n^2.3.
#[test]
fn c3_oracle_equivalence_and_runtime() {
    criterion("C3 oracle equivalence", || {
        let symbols = signature();
        let mut r = rng(0x0c3);
        let mut opo_checked = 0;
        for i in 0..1000 {
            let t = gen_term_sized(&mut r, &symbols, &["x", "y"], 2, 7);
            let s = gen_term_sized(&mut r, &symbols, &["x", "y"], 4, 25);
            let no = max_no(&t, &s).unwrap();
            let oo = max_oo(&t, &s).unwrap();
            assert_eq!(no.count, oracle_max_no(&t, &s).unwrap(), "maxNO #{i}: t={t}, s={s}");
            assert_eq!(oo.count, oracle_max_oo(&t, &s).unwrap(), "maxOO #{i}: t={t}, s={s}");
            assert!(oo.count <= no.count);

            // pattern variant on instances whose base mentions the pumped
            // variable
            if t.var_count("x") >= 1 {
                let sigma = gen_pumping(&mut r, &symbols);
                if is_pattern_term(&t, &sigma) {
                    let opo = max_opo(&t, &sigma, &s).unwrap();
                    assert_eq!(
                        opo.count,
                        oracle_max_opo(&t, &sigma, &s).unwrap(),
                        "maxOPO #{i}: t={t}, s={s}"
                    );
                    opo_checked += 1;
                }
            }
        }
        assert!(opo_checked >= 200, "only {opo_checked} pattern instances checked");

        // doubling test on complete binary trees
        let dp_time = |depth: u32| {
            let mut subject = Term::constant("a");
            for _ in 0..depth {
                subject = Term::app(Symbol::new("c", 2), vec![subject.clone(), subject]);
            }
            let t = Term::app(
                Symbol::new("c", 2),
                vec![
                    Term::app(Symbol::new("c", 2), vec![Term::var("x"), Term::var("y")]),
                    Term::app(Symbol::new("c", 2), vec![Term::var("z"), Term::var("w")]),
                ],
            );
            let mut best = Duration::MAX;
            for _ in 0..5 {
                let start = Instant::now();
                let result = max_no(&t, &subject).unwrap();
                best = best.min(start.elapsed());
                assert!(result.count > 0);
            }
            best
        };
        let small = dp_time(15);
        let large = dp_time(16);
        let exponent = (large.as_secs_f64() / small.as_secs_f64()).log2();
        println!("[acceptance] C3 doubling: {small:?} -> {large:?}, exponent {exponent:.2}");
        assert!(exponent <= 2.3, "doubling exponent {exponent:.2} exceeds 2.3");
    });
}

/// Criterion 4: pattern multiplicities on the worked examples, and the
/// pattern-term detector on the worked graph plus random renamings.
#[test]
fn c4_pattern_values() {
    criterion("C4 pattern multiplicities", || {
        let g = |t: Term| Term::app(Symbol::new("g", 1), vec![t]);
        let f1 = |t: Term| Term::app(Symbol::new("f", 1), vec![t]);
        let c = |l: Term, r: Term| Term::app(Symbol::new("c", 2), vec![l, r]);
        let x = Term::var("x");

        // maxOPO(f(x), [x/g(x)], c(f(g(x)), f(g(g(x))))) = 1 + 2 = 3
        let sigma = Substitution::from_pairs(vec![("x".to_string(), g(x.clone()))]);
        let s = c(f1(g(x.clone())), f1(g(g(x.clone()))));
        assert_eq!(max_opo(&f1(x.clone()), &sigma, &s).unwrap().count, 3);

        // maxOPO(f(a,x), [x/f(a,x)], 17-node example) = 2
        let a = Term::constant("a");
        let f2 = |l: Term, r: Term| Term::app(Symbol::new("f", 2), vec![l, r]);
        let base = f2(a.clone(), x.clone());
        let sigma2 = Substitution::from_pairs(vec![("x".to_string(), f2(a.clone(), x.clone()))]);
        let deep = f2(a.clone(), f2(a.clone(), a.clone()));
        let big = f2(
            a.clone(),
            f2(a.clone(), f2(a.clone(), f2(deep.clone(), deep))),
        );
        assert_eq!(max_opo(&base, &sigma2, &big).unwrap().count, 2);

        // the worked variable-transition-graph example is a pattern term
        let fxy = f2(x.clone(), Term::var("y"));
        let swap = Substitution::from_pairs(vec![
            ("x".to_string(), f2(Term::var("z"), Term::var("y"))),
            ("y".to_string(), x.clone()),
        ]);
        assert!(is_pattern_term(&fxy, &swap));

        // variable renamings never are, whatever the base term
        let symbols = signature();
        let names = ["x", "y", "z"];
        let mut r = rng(0x0c4);
        for _ in 0..100 {
            let t = gen_term(&mut r, &symbols, &names, 3);
            let renaming = Substitution::from_pairs(names.iter().map(|v| {
                (
                    v.to_string(),
                    Term::var(names[r.gen_range(0..names.len())]),
                )
            }));
            assert!(
                !is_pattern_term(&t, &renaming),
                "renaming {renaming:?} on {t}"
            );
        }
    });
}

/// Criterion 5: the classification table for the four reference walks, and
/// the seeded simulator against the gambler's-ruin value.
#[test]
fn c5_random_walks() {
    criterion("C5 random walks", || {
        let walk = |pairs: &[(i64, &str)]| {
            RandomWalk::new(
                pairs
                    .iter()
                    .map(|(x, p)| (*x, rational(p)))
                    .collect::<BTreeMap<_, _>>(),
            )
            .unwrap()
        };
        let mu1 = walk(&[(0, "1")]);
        let mu2 = walk(&[(-1, "1/3"), (0, "1/3"), (1, "1/3")]);
        let mu3 = walk(&[(-1, "1/3"), (1, "2/3")]);
        let mu4 = walk(&[(-1, "2/3"), (1, "1/3")]);

        let expect = |w: &RandomWalk, kind: WalkKind, ast: bool, past: bool| {
            let c = w.classify();
            assert_eq!(c.kind, kind);
            assert_eq!((c.is_ast, c.is_past), (ast, past));
        };
        expect(&mu1, WalkKind::Loop, false, false);
        expect(&mu2, WalkKind::Symmetric, true, false);
        expect(&mu3, WalkKind::PositivelyBiased, false, false);
        expect(&mu4, WalkKind::NegativelyBiased, true, true);

        // gambler's ruin from 1 for mu3: ruin probability (1/3)/(2/3) = 1/2
        let sim = simulate(&mu3, 1, 10_000, 100_000, 2024);
        let freq = sim.termination_frequency.to_f64().unwrap();
        println!("[acceptance] C5 mu3 frequency {freq:.4} ({SIMULATOR_RNG})");
        assert!((freq - 0.5).abs() <= 0.02, "mu3 frequency {freq}");

        let sim = simulate(&mu4, 1, 10_000, 100_000, 2024);
        let freq = sim.termination_frequency.to_f64().unwrap();
        println!("[acceptance] C5 mu4 frequency {freq:.4} ({SIMULATOR_RNG})");
        assert!(freq >= 0.99, "mu4 frequency {freq}");
    });
}

/// Criterion 6: every emitted certificate re-verifies, survives a JSON
/// round trip, and three mutation classes are each rejected.
#[test]
fn c6_certificate_tamper_resistance() {
    criterion("C6 certificate round-trip and tampering", || {
        let budget = SearchBudget::default();
        let mut checked = 0;
        for name in ["p2", "p3", "p5p", "p6", "p7", "p8"] {
            let system = fixture(name);
            let verdict = prove(&system, Goal::Auto, &budget);
            let cert = verdict.certificate.unwrap_or_else(|| panic!("{name} finds a verdict"));
            assert_eq!(verify_certificate(&system, &cert), Ok(()), "{name}");

            // lossless JSON round trip
            let reparsed = Certificate::from_json(&cert.to_json()).unwrap();
            assert_eq!(reparsed, cert, "{name} round trip");
            assert_eq!(verify_certificate(&system, &reparsed), Ok(()), "{name} reparse");

            // probability edit
            let mut tampered = cert.clone();
            tampered.leaves[0].prob = "1/7".to_string();
            assert!(
                verify_certificate(&system, &tampered).is_err(),
                "{name}: probability edit accepted"
            );

            // witness-position edit
            let mut tampered = cert.clone();
            let target = tampered
                .leaves
                .iter_mut()
                .find(|l| !l.witness.is_empty())
                .expect("some leaf has a witness");
            target.witness[0] = vec![9, 9, 9];
            assert!(
                verify_certificate(&system, &tampered).is_err(),
                "{name}: witness edit accepted"
            );

            // side-condition break: reduce the tree to its root, so the
            // height requirement shared by all theorems fails
            let mut tampered = cert.clone();
            tampered.rst.clear();
            tampered.leaves = vec![loopwalk::prover::CertLeaf {
                prob: "1".to_string(),
                count: 1,
                witness: vec![vec![]],
            }];
            assert!(
                verify_certificate(&system, &tampered).is_err(),
                "{name}: empty tree accepted"
            );

            checked += 1;
        }
        assert_eq!(checked, 6);
    });
}

/// Criterion 7: on 200 random systems every verdict is justified by its
/// certificate, and single- and multi-threaded searches agree byte for
/// byte.
#[test]
fn c7_soundness_stress() {
    criterion("C7 randomized soundness and determinism", || {
        let budget = SearchBudget {
            max_loop_len: 4,
            max_expansions: 16,
            max_loops: 8,
            time_limit: Duration::from_secs(20),
        };
        let mut r = rng(0x0c7);
        let mut found = [0usize; 2];
        for i in 0..200 {
            // every fifth system is a balanced chain, whose occurrence sum
            // is exactly 1: the not-PAST relation must hold on those
            let system = if i % 5 == 0 {
                let k = r.gen_range(1..=4usize);
                let chain = "g(".repeat(k + 1) + "x" + &")".repeat(k + 1);
                parse_ptrs(&format!(
                    "(VAR x) (RULES g(x) -> {{ {k}/{} : x , 1/{} : {chain} }})",
                    k + 1,
                    k + 1
                ))
                .unwrap()
            } else {
                gen_ptrs(&mut r, 4)
            };
            let sequential = prove_with(&system, Goal::Auto, &budget, false);
            let parallel = prove_with(&system, Goal::Auto, &budget, true);
            assert_eq!(sequential, parallel, "determinism on system #{i}\n{system}");
            match (&sequential.certificate, &parallel.certificate) {
                (Some(a), Some(b)) => assert_eq!(a.to_json(), b.to_json(), "bytes on #{i}"),
                (None, None) => {}
                _ => panic!("certificate presence differs on #{i}"),
            }

            let Some(cert) = sequential.certificate else {
                continue;
            };
            assert_eq!(
                verify_certificate(&system, &cert),
                Ok(()),
                "system #{i}:\n{system}\n{}",
                cert.to_json()
            );
            let one = BigRational::one();
            match sequential.kind {
                VerdictKind::NotAst => {
                    found[0] += 1;
                    assert_eq!(cert.verdict, CertVerdict::NotAst);
                    match cert.theorem {
                        TheoremId::LoopEverywhere => assert!(cert.sum.is_none()),
                        _ => assert!(rational(cert.sum.as_ref().unwrap()) > one, "#{i}"),
                    }
                }
                VerdictKind::NotPast => {
                    found[1] += 1;
                    assert_eq!(cert.verdict, CertVerdict::NotPast);
                    assert!(rational(cert.sum.as_ref().unwrap()) >= one, "#{i}");
                }
                VerdictKind::Unknown => unreachable!(),
            }
        }
        println!(
            "[acceptance] C7 verdicts on 200 random systems: {} not-AST, {} not-PAST",
            found[0], found[1]
        );
        assert!(
            found[0] > 0 && found[1] > 0,
            "stress corpus must exercise both verdicts, got {found:?}"
        );
    });
}
