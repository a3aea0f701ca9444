//! The quadratic energy `f(x) = ½ xᵀBx + aᵀx` and its quadratic-penalty
//! variant, evaluated block-sparsely from the stored upper triangle of `B`.

use crate::error::{Error, Result};
use crate::model::{dot, BlockVector, DiscreteAssignment, InstanceSpec};
use crate::spg::SmoothObjective;

/// Weight `σ` of the block-sum penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    sigma: f64,
}

impl PenaltyParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self { sigma })
        } else {
            Err(Error::InvalidConfig(format!(
                "penalty weight must be positive and finite, got {sigma}"
            )))
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self { sigma: 1e7 }
    }
}

pub fn objective(spec: &InstanceSpec, x: &BlockVector) -> Result<f64> {
    spec.check_conformal(x)?;
    Ok(quadratic_value(spec, x))
}

pub fn gradient(spec: &InstanceSpec, x: &BlockVector) -> Result<BlockVector> {
    spec.check_conformal(x)?;
    let mut g = spec.zeros();
    gradient_into(spec, x, &mut g);
    Ok(g)
}

pub fn penalized_objective(spec: &InstanceSpec, x: &BlockVector, p: PenaltyParams) -> Result<f64> {
    spec.check_conformal(x)?;
    Ok(quadratic_value(spec, x) + penalty_value(x, p.sigma))
}

pub fn penalized_gradient(
    spec: &InstanceSpec,
    x: &BlockVector,
    p: PenaltyParams,
) -> Result<BlockVector> {
    spec.check_conformal(x)?;
    let mut g = spec.zeros();
    gradient_into(spec, x, &mut g);
    add_penalty_gradient(x, p.sigma, &mut g);
    Ok(g)
}

/// `Σ_i a_{i,c_i} + Σ_{i<j} b^{ij}_{c_i c_j}` summed directly over the choices.
pub fn discrete_energy(spec: &InstanceSpec, d: &DiscreteAssignment) -> Result<f64> {
    d.validate(spec)?;
    let c = d.choices();
    let layout = spec.layout();
    let mut total: f64 = c
        .iter()
        .enumerate()
        .map(|(i, &ci)| spec.unary()[layout.offset(i) + ci])
        .sum();
    for (&(i, j), block) in spec.pairwise() {
        total += block.get(c[i], c[j]);
    }
    Ok(total)
}

/// `½ xᵀBx + aᵀx` with `xᵀBx = 2 Σ_{i<j} x^{(i)ᵀ} B_ij x^{(j)}`.
pub(crate) fn quadratic_value(spec: &InstanceSpec, x: &BlockVector) -> f64 {
    let mut quad = 0.0;
    for (&(i, j), block) in spec.pairwise() {
        let xi = x.block(i);
        let xj = x.block(j);
        for (r, &xr) in xi.iter().enumerate() {
            if xr != 0.0 {
                quad += xr * dot(block.row(r), xj);
            }
        }
    }
    quad + dot(spec.unary(), x.as_slice())
}

/// Writes `Bx + a` into `out` in a single pass over the stored blocks.
pub(crate) fn gradient_into(spec: &InstanceSpec, x: &BlockVector, out: &mut BlockVector) {
    out.as_mut_slice().copy_from_slice(spec.unary());
    let layout = spec.layout();
    let (xs, gs) = (x.as_slice(), out.as_mut_slice());
    for (&(i, j), block) in spec.pairwise() {
        let ri = layout.range(i);
        let rj = layout.range(j);
        // i < j so the two output ranges are disjoint
        let (head, tail) = gs.split_at_mut(rj.start);
        let gi = &mut head[ri.clone()];
        let gj = &mut tail[..rj.len()];
        let xi = &xs[ri];
        let xj = &xs[rj];
        for (r, &xr) in xi.iter().enumerate() {
            let row = block.row(r);
            let mut acc = 0.0;
            for ((&b, &xs_), gjs) in row.iter().zip(xj).zip(gj.iter_mut()) {
                acc += b * xs_;
                *gjs += b * xr;
            }
            gi[r] += acc;
        }
    }
}

/// Block `j` of `Bx + a`, touching only the pairs that involve `j`.
pub(crate) fn block_gradient(spec: &InstanceSpec, x: &BlockVector, j: usize) -> Vec<f64> {
    let mut g = spec.unary_block(j).to_vec();
    for (&(p, q), block) in spec.pairwise() {
        if p == j {
            let xq = x.block(q);
            for (r, gr) in g.iter_mut().enumerate() {
                *gr += dot(block.row(r), xq);
            }
        } else if q == j {
            for (r, &xr) in x.block(p).iter().enumerate() {
                if xr != 0.0 {
                    for (gs, &b) in g.iter_mut().zip(block.row(r)) {
                        *gs += b * xr;
                    }
                }
            }
        }
    }
    g
}

fn penalty_value(x: &BlockVector, sigma: f64) -> f64 {
    let sq: f64 = x
        .blocks()
        .map(|b| {
            let r = b.iter().sum::<f64>() - 1.0;
            r * r
        })
        .sum();
    0.5 * sigma * sq
}

fn add_penalty_gradient(x: &BlockVector, sigma: f64, g: &mut BlockVector) {
    for i in 0..x.num_blocks() {
        let r = sigma * (x.block(i).iter().sum::<f64>() - 1.0);
        g.block_mut(i).iter_mut().for_each(|v| *v += r);
    }
}

/// `f` over the block simplices, as consumed by the SPG engine.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticEnergy<'a> {
    spec: &'a InstanceSpec,
}

impl<'a> QuadraticEnergy<'a> {
    pub fn new(spec: &'a InstanceSpec) -> Self {
        Self { spec }
    }
}

impl SmoothObjective for QuadraticEnergy<'_> {
    fn value(&self, x: &BlockVector) -> f64 {
        quadratic_value(self.spec, x)
    }

    fn gradient_into(&self, x: &BlockVector, out: &mut BlockVector) {
        gradient_into(self.spec, x, out);
    }
}

/// `f(x) + (σ/2) Σ_i (Σ_r x^{(i)}_r − 1)²`.
#[derive(Debug, Clone, Copy)]
pub struct PenalizedEnergy<'a> {
    spec: &'a InstanceSpec,
    sigma: f64,
}

impl<'a> PenalizedEnergy<'a> {
    pub fn new(spec: &'a InstanceSpec, params: PenaltyParams) -> Self {
        Self {
            spec,
            sigma: params.sigma,
        }
    }
}

impl SmoothObjective for PenalizedEnergy<'_> {
    fn value(&self, x: &BlockVector) -> f64 {
        quadratic_value(self.spec, x) + penalty_value(x, self.sigma)
    }

    fn gradient_into(&self, x: &BlockVector, out: &mut BlockVector) {
        gradient_into(self.spec, x, out);
        add_penalty_gradient(x, self.sigma, out);
    }
}
