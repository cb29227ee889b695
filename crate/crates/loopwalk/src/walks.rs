//! Finite-support random walks on the integers, stopped at values <= 0.
//! A walk is classified by its step distribution alone: a loop walk stays
//! put with probability 1; otherwise the sign of the expected step decides
//! between symmetric, positively biased, and negatively biased. The
//! classification determines almost-sure termination and positive
//! almost-sure termination exactly:
//!
//! * loop walk: neither AST nor PAST
//! * positively biased: neither AST nor PAST
//! * symmetric: AST but not PAST
//! * negatively biased: AST and PAST
//!
//! A Monte-Carlo simulator is included as a test oracle only; verdicts never
//! depend on it. It uses the ChaCha12 generator with one stream per trial,
//! so results are reproducible and trials can run in parallel.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use rand::distributions::uniform::SampleUniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ptrs::format_rational;

/// Identifier of the simulator's random number generator, for test logs.
pub const SIMULATOR_RNG: &str = "ChaCha12";

/// A finite-support step distribution on the integers: exact positive
/// rationals summing to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomWalk {
    steps: BTreeMap<i64, BigRational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkKind {
    Loop,
    Symmetric,
    PositivelyBiased,
    NegativelyBiased,
}

impl WalkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            WalkKind::Loop => "loop",
            WalkKind::Symmetric => "symmetric",
            WalkKind::PositivelyBiased => "positively_biased",
            WalkKind::NegativelyBiased => "negatively_biased",
        }
    }

    pub fn parse(s: &str) -> Option<WalkKind> {
        match s {
            "loop" => Some(WalkKind::Loop),
            "symmetric" => Some(WalkKind::Symmetric),
            "positively_biased" => Some(WalkKind::PositivelyBiased),
            "negatively_biased" => Some(WalkKind::NegativelyBiased),
            _ => None,
        }
    }
}

/// A walk kind together with the termination facts it implies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkClass {
    pub kind: WalkKind,
    pub is_ast: bool,
    pub is_past: bool,
}

impl RandomWalk {
    pub fn new(steps: BTreeMap<i64, BigRational>) -> Result<Self, WalkError> {
        if steps.is_empty() {
            return Err(WalkError::EmptySupport);
        }
        let mut sum = BigRational::zero();
        for p in steps.values() {
            if *p <= BigRational::zero() {
                return Err(WalkError::NonPositiveMass);
            }
            sum += p;
        }
        if !sum.is_one() {
            return Err(WalkError::MassSum {
                sum: format_rational(&sum),
            });
        }
        Ok(RandomWalk { steps })
    }

    pub fn steps(&self) -> &BTreeMap<i64, BigRational> {
        &self.steps
    }

    /// E(μ) = Σ x·μ(x).
    pub fn expected_value(&self) -> BigRational {
        self.steps
            .iter()
            .map(|(x, p)| BigRational::from_integer(BigInt::from(*x)) * p)
            .sum()
    }

    /// Probability of the zero step.
    pub fn mass_at_zero(&self) -> BigRational {
        self.steps.get(&0).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn classify(&self) -> WalkClass {
        if self.mass_at_zero().is_one() {
            return WalkClass {
                kind: WalkKind::Loop,
                is_ast: false,
                is_past: false,
            };
        }
        let e = self.expected_value();
        if e.is_zero() {
            WalkClass {
                kind: WalkKind::Symmetric,
                is_ast: true,
                is_past: false,
            }
        } else if e.is_positive() {
            WalkClass {
                kind: WalkKind::PositivelyBiased,
                is_ast: false,
                is_past: false,
            }
        } else {
            WalkClass {
                kind: WalkKind::NegativelyBiased,
                is_ast: true,
                is_past: true,
            }
        }
    }
}

/// Builds the walk induced by per-leaf occurrence counts: a leaf with
/// probability p and count c contributes mass p to the step c - 1.
pub fn walk_from_counts(leaves: &[(BigRational, usize)]) -> Result<RandomWalk, WalkError> {
    let total: BigRational = leaves.iter().map(|(p, _)| p.clone()).sum();
    if !total.is_one() {
        return Err(WalkError::MassSum {
            sum: format_rational(&total),
        });
    }
    let mut steps: BTreeMap<i64, BigRational> = BTreeMap::new();
    for (p, count) in leaves {
        let offset = *count as i64 - 1;
        *steps.entry(offset).or_insert_with(BigRational::zero) += p;
    }
    RandomWalk::new(steps)
}

/// Result of a simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub trials: u64,
    pub terminated: u64,
    /// terminated / trials.
    pub termination_frequency: BigRational,
    /// Mean number of steps among the terminated trials, if any terminated.
    pub mean_steps_terminated: Option<BigRational>,
}

/// Runs `trials` independent walks from `x0`, each stopped on reaching a
/// value <= 0 or after `horizon` steps. Deterministic for a given seed:
/// trial i uses ChaCha12 stream i. Trials that provably cannot reach 0
/// within the remaining steps are cut short; this never changes the outcome.
pub fn simulate(
    walk: &RandomWalk,
    x0: i64,
    horizon: u64,
    trials: u64,
    seed: u64,
) -> Simulation {
    assert!(horizon > 0 && trials > 0, "horizon and trials must be positive");
    let sampler = StepSampler::new(walk);
    let max_drop: Option<i64> = walk.steps.keys().next().copied().filter(|&m| m < 0).map(|m| -m);

    let outcomes: Vec<Option<u64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            run_trial(&sampler, x0, horizon, max_drop, &mut rng)
        })
        .collect();

    let terminated = outcomes.iter().filter(|o| o.is_some()).count() as u64;
    let total_steps: u128 = outcomes.iter().flatten().map(|&s| s as u128).sum();
    Simulation {
        trials,
        terminated,
        termination_frequency: BigRational::new(terminated.into(), trials.into()),
        mean_steps_terminated: (terminated > 0).then(|| {
            BigRational::new(BigInt::from(total_steps), BigInt::from(terminated))
        }),
    }
}

/// Steps one trial; returns the number of steps on termination.
fn run_trial(
    sampler: &StepSampler,
    x0: i64,
    horizon: u64,
    max_drop: Option<i64>,
    rng: &mut ChaCha12Rng,
) -> Option<u64> {
    let mut value = x0;
    for step in 0..=horizon {
        if value <= 0 {
            return Some(step);
        }
        if step == horizon {
            break;
        }
        let remaining = horizon - step;
        // no negative step exists: a positive value never terminates
        let drop = max_drop?;
        // value can fall by at most drop per step
        if value > drop.saturating_mul(remaining.min(i64::MAX as u64) as i64) {
            return None;
        }
        value += sampler.sample(rng);
    }
    None
}

/// Samples steps by a single uniform draw against cumulative thresholds
/// over the common denominator of all step probabilities.
struct StepSampler {
    thresholds: Vec<(u128, i64)>,
    denom: u128,
    /// Denominator when it fits a single word; one draw instead of two.
    denom_small: Option<u64>,
    big: Option<BigSampler>,
}

struct BigSampler {
    thresholds: Vec<(BigInt, i64)>,
    denom: BigInt,
}

impl StepSampler {
    fn new(walk: &RandomWalk) -> Self {
        let mut denom = BigInt::one();
        for p in walk.steps.values() {
            denom = num::integer::lcm(denom, p.denom().clone());
        }
        let mut acc = BigInt::zero();
        let mut big_thresholds = Vec::new();
        for (x, p) in &walk.steps {
            acc += p.numer() * (&denom / p.denom());
            big_thresholds.push((acc.clone(), *x));
        }
        match denom.to_u128() {
            Some(d) => StepSampler {
                thresholds: big_thresholds
                    .iter()
                    .map(|(t, x)| (t.to_u128().unwrap(), *x))
                    .collect(),
                denom: d,
                denom_small: denom.to_u64(),
                big: None,
            },
            None => StepSampler {
                thresholds: Vec::new(),
                denom: 0,
                denom_small: None,
                big: Some(BigSampler {
                    thresholds: big_thresholds,
                    denom,
                }),
            },
        }
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> i64 {
        match &self.big {
            None => {
                let draw: u128 = match self.denom_small {
                    Some(d) => u128::from(sample_below::<u64>(rng, d)),
                    None => sample_below(rng, self.denom),
                };
                self.thresholds
                    .iter()
                    .find(|(t, _)| draw < *t)
                    .expect("thresholds cover the denominator")
                    .1
            }
            Some(big) => {
                // denominators beyond u128 are outside any realistic input;
                // fall back to rejection-free sampling on the big integers
                let bits = big.denom.bits();
                let draw = loop {
                    let mut candidate = BigInt::zero();
                    for _ in 0..bits.div_ceil(64) {
                        candidate = (candidate << 64) | BigInt::from(rng.gen::<u64>());
                    }
                    candidate &= (BigInt::one() << bits) - 1;
                    if candidate < big.denom {
                        break candidate;
                    }
                };
                big.thresholds
                    .iter()
                    .find(|(t, _)| draw < *t)
                    .expect("thresholds cover the denominator")
                    .1
            }
        }
    }
}

fn sample_below<T: SampleUniform + Copy + PartialOrd + From<u8>>(
    rng: &mut ChaCha12Rng,
    bound: T,
) -> T {
    rng.gen_range(T::from(0u8)..bound)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("step masses sum to {sum}, expected 1")]
    MassSum { sum: String },
    #[error("empty support")]
    EmptySupport,
    #[error("step masses must be positive")]
    NonPositiveMass,
}
