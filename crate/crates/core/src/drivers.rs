//! End-to-end solvers.
//!
//! * SCSC runs SPG on `f` over the block simplices and rounds the result.
//! * SCP runs SPG on the quadratic-penalty objective over the nonnegative
//!   orthant and rounds the result.
//! * [`solve_exact`] enumerates every assignment; it is the oracle the
//!   relaxation-based solvers are checked against.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::energy::{self, PenalizedEnergy, PenaltyParams, QuadraticEnergy};
use crate::error::{Error, Result};
use crate::model::{BlockVector, DiscreteAssignment, InstanceSpec, SUPPORT_TOL};
use crate::projection::FeasibleSetKind;
use crate::rounding::{self, RoundingRule};
use crate::spg::{spg_minimize, IterationRecord, SpgConfig, TerminationReason};

/// Largest search space [`solve_exact`] agrees to enumerate.
pub const EXACT_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Scsc,
    Scp,
    Exact,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Scsc => "scsc",
            Algorithm::Scp => "scp",
            Algorithm::Exact => "exact",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "scsc" => Ok(Algorithm::Scsc),
            "scp" => Ok(Algorithm::Scp),
            "exact" => Ok(Algorithm::Exact),
            other => Err(format!(
                "unknown algorithm '{other}' (expected scsc|scp|exact)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitPolicy {
    /// `x^{(i)}_r = 1 / l_i`.
    UniformCenter,
    /// A uniformly random point of each block simplex.
    RandomDirichlet(u64),
    Given(BlockVector),
}

impl InitPolicy {
    pub fn seed(&self) -> Option<u64> {
        match self {
            InitPolicy::RandomDirichlet(seed) => Some(*seed),
            _ => None,
        }
    }

    pub fn starting_point(&self, spec: &InstanceSpec) -> Result<BlockVector> {
        match self {
            InitPolicy::UniformCenter => Ok(BlockVector::uniform_center(Arc::clone(spec.layout()))),
            InitPolicy::RandomDirichlet(seed) => Ok(random_simplex_point(spec, *seed)),
            InitPolicy::Given(x) => {
                spec.check_conformal(x)?;
                Ok(x.clone())
            }
        }
    }
}

/// Samples each block from the flat Dirichlet distribution (normalized
/// exponentials).
pub fn random_simplex_point(spec: &InstanceSpec, seed: u64) -> BlockVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = spec.zeros();
    for i in 0..x.num_blocks() {
        let block = x.block_mut(i);
        for v in block.iter_mut() {
            let e: f64 = Exp1.sample(&mut rng);
            *v = e;
        }
        let total: f64 = block.iter().sum();
        block.iter_mut().for_each(|v| *v /= total);
    }
    x
}

/// Settings shared by the relaxation-based drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub spg: SpgConfig,
    pub penalty: PenaltyParams,
    pub rounding: RoundingRule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            spg: SpgConfig::default(),
            penalty: PenaltyParams::default(),
            rounding: RoundingRule::GreedyEnergy,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub instance: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub m: usize,
    /// `f` at the final relaxed iterate (the unpenalized energy for SCP).
    pub relaxed_objective: f64,
    /// Penalized objective at the final iterate; SCP only.
    pub penalized_objective: Option<f64>,
    /// `f(expand(choice))`.
    pub rounded_objective: f64,
    pub choice: DiscreteAssignment,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    /// `None` for exhaustive enumeration.
    pub termination: Option<TerminationReason>,
    pub seed: u64,
    /// Largest `|Σ_r x^{(i)}_r − 1|` at the final iterate.
    pub block_sum_violation: f64,
    pub options: SolverOptions,
    pub relaxed: Option<BlockVector>,
    pub trace: Vec<IterationRecord>,
}

impl SolveReport {
    pub fn termination_label(&self) -> &'static str {
        self.termination
            .map_or("enumerated", TerminationReason::as_str)
    }
}

pub fn solve_scsc(
    spec: &InstanceSpec,
    cfg: &SpgConfig,
    init: &InitPolicy,
    rule: RoundingRule,
) -> Result<(DiscreteAssignment, SolveReport)> {
    let options = SolverOptions {
        spg: cfg.clone(),
        rounding: rule,
        ..SolverOptions::default()
    };
    solve_relaxed(spec, Algorithm::Scsc, &options, init)
}

pub fn solve_scp(
    spec: &InstanceSpec,
    cfg: &SpgConfig,
    penalty: PenaltyParams,
    init: &InitPolicy,
    rule: RoundingRule,
) -> Result<(DiscreteAssignment, SolveReport)> {
    let options = SolverOptions {
        spg: cfg.clone(),
        penalty,
        rounding: rule,
    };
    solve_relaxed(spec, Algorithm::Scp, &options, init)
}

/// Dispatches to SCSC, SCP or exhaustive enumeration.
pub fn solve(
    spec: &InstanceSpec,
    algorithm: Algorithm,
    options: &SolverOptions,
    init: &InitPolicy,
) -> Result<(DiscreteAssignment, SolveReport)> {
    match algorithm {
        Algorithm::Exact => solve_exact(spec),
        relaxed => solve_relaxed(spec, relaxed, options, init),
    }
}

fn solve_relaxed(
    spec: &InstanceSpec,
    algorithm: Algorithm,
    options: &SolverOptions,
    init: &InitPolicy,
) -> Result<(DiscreteAssignment, SolveReport)> {
    let x0 = init.starting_point(spec)?;
    let started = Instant::now();

    let mut probe = |x: &BlockVector| {
        rounding::round_with_tol(x, spec, RoundingRule::MaxValue, SUPPORT_TOL)
            .expect("iterates stay conformal and nonnegative")
    };
    let outcome = match algorithm {
        Algorithm::Scsc => spg_minimize(
            &QuadraticEnergy::new(spec),
            FeasibleSetKind::BlockSimplex,
            x0,
            &options.spg,
            Some(&mut probe),
        )?,
        Algorithm::Scp => spg_minimize(
            &PenalizedEnergy::new(spec, options.penalty),
            FeasibleSetKind::NonnegativeOrthant,
            x0,
            &options.spg,
            Some(&mut probe),
        )?,
        Algorithm::Exact => unreachable!("exact enumeration is not a relaxation"),
    };
    let choice = rounding::round(&outcome.x, spec, options.rounding)?;
    let wall_time_seconds = started.elapsed().as_secs_f64();

    let relaxed_objective = energy::objective(spec, &outcome.x)?;
    let rounded_objective = energy::objective(spec, &choice.expand(spec)?)?;
    let block_sum_violation = outcome
        .x
        .block_sums()
        .into_iter()
        .fold(0.0_f64, |m, s| m.max((s - 1.0).abs()));
    let report = SolveReport {
        instance: spec.name().to_string(),
        algorithm,
        n: spec.n(),
        m: spec.m(),
        relaxed_objective,
        penalized_objective: (algorithm == Algorithm::Scp).then_some(outcome.f),
        rounded_objective,
        choice: choice.clone(),
        iterations: outcome.iterations,
        wall_time_seconds,
        termination: Some(outcome.termination),
        seed: init.seed().unwrap_or(0),
        block_sum_violation,
        options: options.clone(),
        relaxed: Some(outcome.x),
        trace: outcome.trace,
    };
    Ok((choice, report))
}

/// Exhaustive enumeration; ties go to the lexicographically smallest choice.
pub fn solve_exact(spec: &InstanceSpec) -> Result<(DiscreteAssignment, SolveReport)> {
    let size = spec.search_space_size();
    if size > EXACT_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: EXACT_LIMIT,
        });
    }
    let started = Instant::now();
    let n = spec.n();
    let sizes = spec.block_sizes();
    let layout = spec.layout();

    // depth-first over positions; partial[i] is the energy of the prefix 0..i
    let mut current = vec![0usize; n];
    let mut partial = vec![0.0f64; n + 1];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut depth = 0;
    loop {
        let i = depth;
        let r = current[i];
        let mut e = partial[i] + spec.unary()[layout.offset(i) + r];
        for (p, &cp) in current[..i].iter().enumerate() {
            if let Some(b) = spec.pair(p, i) {
                e += b.get(cp, r);
            }
        }
        if i + 1 == n {
            if best.as_ref().is_none_or(|(bv, _)| e < *bv) {
                best = Some((e, current.clone()));
            }
        } else {
            partial[i + 1] = e;
            depth += 1;
            current[depth] = 0;
            continue;
        }
        // advance the odometer
        loop {
            current[depth] += 1;
            if current[depth] < sizes[depth] {
                break;
            }
            if depth == 0 {
                let (_, choice) = best.expect("at least one assignment exists");
                return exact_report(spec, DiscreteAssignment::new(choice), started);
            }
            depth -= 1;
        }
    }
}

fn exact_report(
    spec: &InstanceSpec,
    choice: DiscreteAssignment,
    started: Instant,
) -> Result<(DiscreteAssignment, SolveReport)> {
    let wall_time_seconds = started.elapsed().as_secs_f64();
    let value = energy::objective(spec, &choice.expand(spec)?)?;
    let report = SolveReport {
        instance: spec.name().to_string(),
        algorithm: Algorithm::Exact,
        n: spec.n(),
        m: spec.m(),
        relaxed_objective: value,
        penalized_objective: None,
        rounded_objective: value,
        choice: choice.clone(),
        iterations: 0,
        wall_time_seconds,
        termination: None,
        seed: 0,
        block_sum_violation: 0.0,
        options: SolverOptions::default(),
        relaxed: None,
        trace: Vec::new(),
    };
    Ok((choice, report))
}

/// Seed of restart `run` derived from `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, run: usize) -> u64 {
    let mut z = base.wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultistartPlan {
    pub restarts: usize,
    pub base_seed: u64,
    /// Start the first run from the uniform center instead of a random point.
    pub center_first: bool,
}

impl MultistartPlan {
    pub fn new(restarts: usize, base_seed: u64) -> Self {
        Self {
            restarts,
            base_seed,
            center_first: true,
        }
    }

    pub fn inits(&self) -> Vec<(u64, InitPolicy)> {
        (0..self.restarts)
            .map(|run| {
                if run == 0 && self.center_first {
                    (self.base_seed, InitPolicy::UniformCenter)
                } else {
                    let seed = derive_seed(self.base_seed, run);
                    (seed, InitPolicy::RandomDirichlet(seed))
                }
            })
            .collect()
    }
}

/// Runs the driver from every start of `plan` and keeps the lowest rounded
/// objective, breaking ties by run order.
pub fn multistart(
    spec: &InstanceSpec,
    algorithm: Algorithm,
    options: &SolverOptions,
    plan: MultistartPlan,
) -> Result<SolveReport> {
    if plan.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    if algorithm == Algorithm::Exact {
        return solve_exact(spec).map(|(_, r)| r);
    }
    let runs: Vec<Result<SolveReport>> = plan
        .inits()
        .into_par_iter()
        .map(|(seed, init)| {
            solve_relaxed(spec, algorithm, options, &init).map(|(_, mut report)| {
                report.seed = seed;
                report
            })
        })
        .collect();
    let mut best: Option<SolveReport> = None;
    for run in runs {
        let report = run?;
        if best
            .as_ref()
            .is_none_or(|b| report.rounded_objective < b.rounded_objective)
        {
            best = Some(report);
        }
    }
    Ok(best.expect("restarts >= 1"))
}
