//! Euclidean projections onto the two feasible sets used by the solvers:
//! the product of unit simplices (one per block) and the nonnegative orthant.

use std::fmt;
use std::str::FromStr;

use crate::model::BlockVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeasibleSetKind {
    /// `{x : Σ_r x^{(i)}_r = 1, x ≥ 0}` for every block `i`.
    BlockSimplex,
    /// `{x : x ≥ 0}`.
    NonnegativeOrthant,
}

impl FeasibleSetKind {
    pub fn project(self, x: &BlockVector) -> BlockVector {
        match self {
            FeasibleSetKind::BlockSimplex => project_block_simplex(x),
            FeasibleSetKind::NonnegativeOrthant => project_nonneg(x),
        }
    }

    pub fn project_in_place(self, x: &mut BlockVector) {
        match self {
            FeasibleSetKind::BlockSimplex => {
                for i in 0..x.num_blocks() {
                    project_simplex_in_place(x.block_mut(i));
                }
            }
            FeasibleSetKind::NonnegativeOrthant => {
                x.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
    }

    /// Membership test with absolute tolerance `tol` on signs and block sums.
    pub fn contains(self, x: &BlockVector, tol: f64) -> bool {
        let nonneg = x.as_slice().iter().all(|&v| v >= -tol);
        match self {
            FeasibleSetKind::NonnegativeOrthant => nonneg,
            FeasibleSetKind::BlockSimplex => {
                nonneg
                    && x.blocks()
                        .all(|b| (b.iter().sum::<f64>() - 1.0).abs() <= tol)
            }
        }
    }
}

impl fmt::Display for FeasibleSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeasibleSetKind::BlockSimplex => "block-simplex",
            FeasibleSetKind::NonnegativeOrthant => "nonnegative-orthant",
        })
    }
}

impl FromStr for FeasibleSetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "block-simplex" | "simplex" => Ok(FeasibleSetKind::BlockSimplex),
            "nonnegative-orthant" | "nonneg" => Ok(FeasibleSetKind::NonnegativeOrthant),
            other => Err(format!("unknown feasible set '{other}'")),
        }
    }
}

/// Projects every block onto its unit simplex independently.
pub fn project_block_simplex(x: &BlockVector) -> BlockVector {
    let mut out = x.clone();
    for i in 0..out.num_blocks() {
        project_simplex_in_place(out.block_mut(i));
    }
    out
}

/// Componentwise `max(x, 0)`.
pub fn project_nonneg(x: &BlockVector) -> BlockVector {
    let mut out = x.clone();
    out.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// The shift `t̂` such that `(v - t̂)_+` lies on the unit simplex.
///
/// Values are sorted descending `u_1 ≥ … ≥ u_l`. For `k = 1, …, l-1` the
/// candidate `t = (u_1 + … + u_k − 1) / k` is accepted as soon as
/// `t ≥ u_{k+1}`; otherwise all `l` entries stay active. With `k = l − i`
/// this is the ascending scan `i = l−1, …, 1` over `t_i`, visiting the
/// same candidates in the same order.
pub fn simplex_threshold(v: &[f64]) -> f64 {
    assert!(!v.is_empty(), "cannot project an empty block");
    let mut sorted = v.to_vec();
    // stable, so equal values keep their original order
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut head = 0.0;
    for k in 1..sorted.len() {
        head += sorted[k - 1];
        let t = (head - 1.0) / k as f64;
        if t >= sorted[k] {
            return t;
        }
    }
    (head + sorted[sorted.len() - 1] - 1.0) / sorted.len() as f64
}

pub fn project_simplex_in_place(block: &mut [f64]) {
    let t = simplex_threshold(block);
    block.iter_mut().for_each(|v| *v = (*v - t).max(0.0));
}

/// `‖P_Ω(x − g) − x‖_∞`, zero exactly at stationary points.
pub fn stationarity_residual(x: &BlockVector, g: &BlockVector, set: FeasibleSetKind) -> f64 {
    let mut trial = x.add_scaled(-1.0, g);
    set.project_in_place(&mut trial);
    trial
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .fold(0.0, |m, (p, xi)| m.max((p - xi).abs()))
}
