//! Collapse a relaxed, nonnegative block vector to one rotamer per position.
//!
//! Blocks whose support already holds a single index keep it and are set to
//! that indicator before anything else is decided. Blocks with a
//! larger support are resolved one at a time in position order, each being
//! replaced by an indicator before the next block is examined, so that the
//! greedy rule sees the effect of earlier decisions. Blocks with an empty
//! support (possible for penalized iterates) take the rotamer with the
//! smallest unary energy.

use std::fmt;
use std::str::FromStr;

use crate::energy;
use crate::error::{Error, Result};
use crate::model::{BlockVector, DiscreteAssignment, InstanceSpec, SUPPORT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundingRule {
    /// Largest entry of the block's support.
    MaxValue,
    /// Support index giving the lowest energy with the other blocks held fixed.
    #[default]
    GreedyEnergy,
}

impl fmt::Display for RoundingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundingRule::MaxValue => "max",
            RoundingRule::GreedyEnergy => "greedy",
        })
    }
}

impl FromStr for RoundingRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "max" | "max-value" => Ok(RoundingRule::MaxValue),
            "greedy" | "greedy-energy" => Ok(RoundingRule::GreedyEnergy),
            other => Err(format!(
                "unknown rounding rule '{other}' (expected max|greedy)"
            )),
        }
    }
}

/// Rounds with the default support tolerance.
pub fn round(
    x: &BlockVector,
    spec: &InstanceSpec,
    rule: RoundingRule,
) -> Result<DiscreteAssignment> {
    round_with_tol(x, spec, rule, SUPPORT_TOL)
}

pub fn round_with_tol(
    x: &BlockVector,
    spec: &InstanceSpec,
    rule: RoundingRule,
    tol: f64,
) -> Result<DiscreteAssignment> {
    spec.check_conformal(x)?;
    if let Some((k, v)) = x
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -tol || v.is_nan())
    {
        return Err(Error::InvalidInput(format!(
            "entry {k} of the relaxed point is {v}, below -{tol}"
        )));
    }

    let n = spec.n();
    let supports: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            x.block(j)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > tol)
                .map(|(s, _)| s)
                .collect()
        })
        .collect();

    // Blocks with a single support entry are already decided; snap them to
    // their vertex first so greedy choices elsewhere see their final value.
    let mut work = x.clone();
    let mut choice: Vec<Option<usize>> = vec![None; n];
    for (j, support) in supports.iter().enumerate() {
        if let [s] = support[..] {
            let block = work.block_mut(j);
            block.fill(0.0);
            block[s] = 1.0;
            choice[j] = Some(s);
        }
    }

    for (j, support) in supports.iter().enumerate() {
        if support.len() < 2 {
            continue;
        }
        let pick = match rule {
            RoundingRule::MaxValue => argmax_over(work.block(j), support),
            RoundingRule::GreedyEnergy => {
                // B_jj = 0, so block j of ∇f does not depend on x^{(j)}
                // and f(x with block j = e_s) = const + ∇_j f(x)_s.
                argmin_over(&energy::block_gradient(spec, &work, j), support)
            }
        };
        let block = work.block_mut(j);
        block.fill(0.0);
        block[pick] = 1.0;
        choice[j] = Some(pick);
    }

    let choice = choice
        .into_iter()
        .enumerate()
        .map(|(j, c)| c.unwrap_or_else(|| argmin_over(spec.unary_block(j), &all(spec, j))))
        .collect();
    Ok(DiscreteAssignment::new(choice))
}

fn all(spec: &InstanceSpec, j: usize) -> Vec<usize> {
    (0..spec.block_sizes()[j]).collect()
}

/// First index of `candidates` attaining the maximum of `values`.
fn argmax_over(values: &[f64], candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &s in &candidates[1..] {
        if values[s] > values[best] {
            best = s;
        }
    }
    best
}

fn argmin_over(values: &[f64], candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &s in &candidates[1..] {
        if values[s] < values[best] {
            best = s;
        }
    }
    best
}
