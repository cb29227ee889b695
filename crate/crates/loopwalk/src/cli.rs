//! Command-line front end.
//!
//! Exit codes: 0 when a verdict was found or a certificate is valid, 1 for
//! unknown or invalid, 2 for input or usage errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::counting::{max_no, max_oo, max_opo};
use crate::patterns::is_pattern_term;
use crate::prover::{
    prove, verify_certificate, Certificate, Goal, SearchBudget, VerdictKind,
};
use crate::ptrs::{parse_ptrs, parse_rational, Ptrs, PtrsError};
use crate::term::{Substitution, Term};
use crate::walks::{simulate, RandomWalk, SIMULATOR_RNG};

#[derive(Parser)]
#[command(
    name = "loopwalk",
    version,
    about = "Disproves almost-sure termination of probabilistic term rewrite systems"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a disproof of (positive) almost-sure termination.
    Disprove {
        /// Input system (.ptrs).
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = GoalArg::Auto)]
        goal: GoalArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the certificate to this path.
        #[arg(long)]
        cert: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Re-check a certificate against a system.
    Verify {
        /// Input system (.ptrs).
        file: PathBuf,
        /// Certificate (.json).
        cert: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Count occurrences of a term in another, for debugging.
    Count {
        /// Count problem file, see the README for the format.
        file: PathBuf,
    },
    /// Run the random-walk simulator oracle.
    Simulate {
        /// Step distribution, e.g. "-1:1/3,1:2/3".
        #[arg(long, allow_hyphen_values = true)]
        walk: String,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        start: i64,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Seed for the simulator; never affects verdicts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GoalArg {
    Ast,
    Past,
    Auto,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct BudgetArgs {
    /// Maximal loop derivation length.
    #[arg(long, value_name = "N")]
    max_loop_len: Option<usize>,
    /// Maximal tree expansions per candidate.
    #[arg(long, value_name = "N")]
    max_expansions: Option<usize>,
    /// Maximal number of candidate loops.
    #[arg(long, value_name = "N")]
    max_loops: Option<usize>,
    /// Time limit in seconds.
    #[arg(long, value_name = "SECONDS")]
    timeout: Option<u64>,
}

impl BudgetArgs {
    fn to_budget(&self) -> SearchBudget {
        let mut budget = SearchBudget::default();
        if let Some(n) = self.max_loop_len {
            budget.max_loop_len = n.max(1);
        }
        if let Some(n) = self.max_expansions {
            budget.max_expansions = n.max(1);
        }
        if let Some(n) = self.max_loops {
            budget.max_loops = n.max(1);
        }
        if let Some(s) = self.timeout {
            budget.time_limit = Duration::from_secs(s.max(1));
        }
        budget
    }
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Disprove {
            file,
            goal,
            format,
            cert,
            budget,
        } => {
            let ptrs = match load_system(&file) {
                Ok(p) => p,
                Err(code) => return code,
            };
            let goal = match goal {
                GoalArg::Ast => Goal::DisproveAst,
                GoalArg::Past => Goal::DisprovePast,
                GoalArg::Auto => Goal::Auto,
            };
            let verdict = prove(&ptrs, goal, &budget.to_budget());
            if let (Some(path), Some(certificate)) = (&cert, &verdict.certificate) {
                if let Err(e) = std::fs::write(path, certificate.to_json() + "\n") {
                    eprintln!("cannot write {}: {e}", path.display());
                    return 2;
                }
            }
            match format {
                Format::Json => {
                    #[derive(serde::Serialize)]
                    struct Output<'a> {
                        verdict: &'a str,
                        certificate: &'a Option<Certificate>,
                    }
                    let out = Output {
                        verdict: verdict.kind.as_str(),
                        certificate: &verdict.certificate,
                    };
                    println!("{}", serde_json::to_string_pretty(&out).unwrap());
                }
                Format::Text => print_verdict_text(&verdict.kind, verdict.certificate.as_ref()),
            }
            match verdict.kind {
                VerdictKind::Unknown => 1,
                _ => 0,
            }
        }
        Command::Verify { file, cert, format } => {
            let ptrs = match load_system(&file) {
                Ok(p) => p,
                Err(code) => return code,
            };
            let text = match std::fs::read_to_string(&cert) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", cert.display());
                    return 2;
                }
            };
            let certificate = match Certificate::from_json(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("cannot parse certificate: {e}");
                    return 2;
                }
            };
            match verify_certificate(&ptrs, &certificate) {
                Ok(()) => {
                    match format {
                        Format::Json => println!("{}", serde_json::json!({"valid": true})),
                        Format::Text => println!(
                            "valid: {} certificate for verdict {}",
                            certificate.theorem.as_str(),
                            certificate.verdict.as_str()
                        ),
                    }
                    0
                }
                Err(e) => {
                    match format {
                        Format::Json => println!(
                            "{}",
                            serde_json::json!({"valid": false, "reason": e.to_string()})
                        ),
                        Format::Text => println!("invalid: {e}"),
                    }
                    1
                }
            }
        }
        Command::Count { file } => match run_count(&file) {
            Ok(()) => 0,
            Err(code) => code,
        },
        Command::Simulate {
            walk,
            start,
            horizon,
            trials,
            seed,
        } => {
            if horizon == 0 || trials == 0 {
                eprintln!("horizon and trials must be positive");
                return 2;
            }
            let walk = match parse_walk(&walk) {
                Ok(w) => w,
                Err(e) => {
                    eprintln!("bad walk: {e}");
                    return 2;
                }
            };
            let class = walk.classify();
            let sim = simulate(&walk, start, horizon, trials, seed);
            println!("class: {}", class.kind.as_str());
            println!("rng: {SIMULATOR_RNG} seed {seed}");
            println!(
                "terminated: {}/{} (frequency {})",
                sim.terminated,
                sim.trials,
                crate::ptrs::format_rational(&sim.termination_frequency)
            );
            match sim.mean_steps_terminated {
                Some(mean) => println!(
                    "mean steps among terminated: {}",
                    crate::ptrs::format_rational(&mean)
                ),
                None => println!("mean steps among terminated: n/a"),
            }
            0
        }
    }
}

fn load_system(path: &PathBuf) -> Result<Ptrs, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        2
    })?;
    parse_ptrs(&text).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        2
    })
}

fn print_verdict_text(kind: &VerdictKind, cert: Option<&Certificate>) {
    match kind {
        VerdictKind::Unknown => println!("unknown"),
        kind => {
            let cert = cert.expect("non-unknown verdicts carry a certificate");
            println!("{} (theorem {})", kind.as_str(), cert.theorem.as_str());
            match &cert.pattern {
                Some(p) => {
                    let pumping: Vec<String> =
                        p.pumping.iter().map(|(v, t)| format!("{v}/{t}")).collect();
                    println!("pattern: <{}, [{}]>", p.base, pumping.join(", "));
                }
                None => println!("looping term: {}", cert.term),
            }
            println!("tree: {} expansions, {} leaves", cert.rst.len(), cert.leaves.len());
            if let Some(sum) = &cert.sum {
                let relation = match cert.relation {
                    Some(crate::prover::CertRelation::GreaterThanOne) => "> 1",
                    Some(crate::prover::CertRelation::AtLeastOne) => ">= 1",
                    None => "",
                };
                println!("sum: {sum} {relation}");
            }
            println!("walk: {}", cert.walk.class);
        }
    }
}

/// Count problem file: `(VAR ...)` then `(TERM t)` and `(IN s)`, optionally
/// `(PUMPING (x t) ...)` to also compute the pattern multiplicity count.
struct CountProblem {
    term: Term,
    subject: Term,
    pumping: Option<Substitution>,
}

fn parse_count_file(text: &str) -> Result<CountProblem, String> {
    let vars = extract_block(text, "VAR").unwrap_or_default();
    let term_text = extract_block(text, "TERM").ok_or("missing (TERM ...)")?;
    let subject_text = extract_block(text, "IN").ok_or("missing (IN ...)")?;
    let system = build_count_system(&vars, &[&term_text, &subject_text])
        .map_err(|e| e.to_string())?;
    let term = system.parse_term(&term_text).map_err(|e| e.to_string())?;
    let subject = system.parse_term(&subject_text).map_err(|e| e.to_string())?;
    let pumping = match extract_block(text, "PUMPING") {
        None => None,
        Some(block) => {
            let mut subst = Substitution::new();
            for (var, image) in parse_pumping_pairs(&block)? {
                let image = system.parse_term(&image).map_err(|e| e.to_string())?;
                subst.bind(&var, image);
            }
            Some(subst)
        }
    };
    Ok(CountProblem {
        term,
        subject,
        pumping,
    })
}

/// Builds a throwaway system whose signature covers all terms in the count
/// problem, so the shared term parser can be reused.
fn build_count_system(vars: &str, term_texts: &[&str]) -> Result<Ptrs, PtrsError> {
    let mut rules = String::new();
    for (i, text) in term_texts.iter().enumerate() {
        if !text.is_empty() {
            rules.push_str(&format!("probe_{i}_({text}) -> {{ 1 : probe_{i}_({text}) }} "));
        }
    }
    parse_ptrs(&format!("(VAR {vars}) (RULES {rules})"))
}

fn extract_block(text: &str, keyword: &str) -> Option<String> {
    let without_comments: String = text
        .lines()
        .map(|l| l.split(';').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n");
    let open = without_comments.find(&format!("({keyword}"))?;
    let rest = &without_comments[open + keyword.len() + 1..];
    let mut depth = 1;
    for (i, c) in rest.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(rest[..i].trim().to_string());
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_pumping_pairs(block: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut rest = block.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or("expected (var term) in PUMPING")?;
        let mut depth = 0;
        let mut end = None;
        for (i, c) in rest[open..].char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(open + i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let end = end.ok_or("unbalanced parentheses in PUMPING")?;
        let inner = &rest[open + 1..end];
        let var_end = inner
            .find(|c: char| c.is_whitespace())
            .ok_or("expected (var term) in PUMPING")?;
        out.push((
            inner[..var_end].to_string(),
            inner[var_end..].trim().to_string(),
        ));
        rest = rest[end + 1..].trim();
    }
    Ok(out)
}

fn run_count(path: &PathBuf) -> Result<(), i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        2
    })?;
    let problem = parse_count_file(&text).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        2
    })?;
    let report = |label: &str, result: &crate::counting::CountResult| {
        let witness: Vec<String> = result.witness.iter().map(|p| p.to_string()).collect();
        println!("{label}: {} (witness: {})", result.count, witness.join(" "));
    };
    let no = max_no(&problem.term, &problem.subject).map_err(|e| {
        eprintln!("{e}");
        2
    })?;
    report("maxNO", &no);
    let oo = max_oo(&problem.term, &problem.subject).map_err(|e| {
        eprintln!("{e}");
        2
    })?;
    report("maxOO", &oo);
    if let Some(pumping) = &problem.pumping {
        if !is_pattern_term(&problem.term, pumping) {
            eprintln!("the PUMPING substitution does not make the term a pattern term");
            return Err(2);
        }
        let opo = max_opo(&problem.term, pumping, &problem.subject).map_err(|e| {
            eprintln!("{e}");
            2
        })?;
        report("maxOPO", &opo);
    }
    Ok(())
}

fn parse_walk(text: &str) -> Result<RandomWalk, String> {
    let mut steps: BTreeMap<i64, num::BigRational> = BTreeMap::new();
    for part in text.split(',') {
        let (offset, prob) = part
            .split_once(':')
            .ok_or_else(|| format!("expected offset:probability, got {part:?}"))?;
        let offset: i64 = offset
            .trim()
            .parse()
            .map_err(|_| format!("bad offset {offset:?}"))?;
        let prob = parse_rational(prob.trim()).map_err(|e| e.to_string())?;
        if steps.insert(offset, prob).is_some() {
            return Err(format!("offset {offset} given twice"));
        }
    }
    RandomWalk::new(steps).map_err(|e| e.to_string())
}
