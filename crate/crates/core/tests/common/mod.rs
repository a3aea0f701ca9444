//! Helpers shared by the integration tests: random instances and
//! independent reference implementations used as oracles.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use cpdqs_core::model::{BlockLayout, BlockVector, InstanceSpec, PairBlock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with `1..=max_n` positions, `1..=max_l` rotamers each,
/// every pair block present with probability `density`, energies drawn
/// uniformly from `[lo, hi)`.
pub fn random_instance(
    rng: &mut impl Rng,
    max_n: usize,
    max_l: usize,
    lo: f64,
    hi: f64,
    density: f64,
) -> InstanceSpec {
    let n = rng.random_range(1..=max_n);
    let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..=max_l)).collect();
    let m = sizes.iter().sum();
    let unary = (0..m).map(|_| rng.random_range(lo..hi)).collect();
    let mut pairs = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                let data = (0..sizes[i] * sizes[j])
                    .map(|_| rng.random_range(lo..hi))
                    .collect();
                pairs.insert(
                    (i, j),
                    PairBlock::from_row_major(sizes[i], sizes[j], data).unwrap(),
                );
            }
        }
    }
    InstanceSpec::new("random", sizes, unary, pairs).unwrap()
}

/// Random point of the nonnegative orthant with the layout of `spec`.
pub fn random_point(rng: &mut impl Rng, spec: &InstanceSpec, lo: f64, hi: f64) -> BlockVector {
    let values = (0..spec.m()).map(|_| rng.random_range(lo..hi)).collect();
    BlockVector::from_values(spec.layout().clone(), values).unwrap()
}

pub fn single_block(values: Vec<f64>) -> BlockVector {
    let layout = Arc::new(BlockLayout::single(values.len()));
    BlockVector::from_values(layout, values).unwrap()
}

/// Projection onto the unit simplex by searching every candidate support.
///
/// For a support `S`, the KKT conditions give `x_i = v_i − τ` on `S` with
/// `τ = (Σ_S v − 1)/|S|`, and require `x_i ≥ 0` on `S` and `v_j ≤ τ` off
/// `S`. The projection is unique, so any support passing the checks yields
/// it; the one with the smallest residual against the checks is returned.
pub fn kkt_projection(v: &[f64]) -> Vec<f64> {
    let l = v.len();
    assert!((1..=16).contains(&l));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << l) {
        let support: Vec<usize> = (0..l).filter(|&i| mask & (1 << i) != 0).collect();
        let tau = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut violation = 0.0_f64;
        let mut x = vec![0.0; l];
        for i in 0..l {
            if mask & (1 << i) != 0 {
                x[i] = v[i] - tau;
                violation = violation.max(-x[i]);
            } else {
                violation = violation.max(v[i] - tau);
            }
        }
        if best.as_ref().is_none_or(|(b, _)| violation < *b) {
            best = Some((violation, x));
        }
    }
    let (violation, x) = best.unwrap();
    assert!(violation <= 1e-12, "no KKT support found for {v:?}");
    x
}

/// The ascending-sort threshold scan: sort `v` ascending, walk `i` from
/// `l − 1` down to 1 and stop at the first `t_i = (Σ_{j>i} v_j − 1)/(l − i)`
/// with `t_i ≥ v_i`; otherwise use `t = (Σ v − 1)/l`. Result `(v − t)_+`.
pub fn ascending_scan_projection(v: &[f64]) -> Vec<f64> {
    let l = v.len();
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    // 1-based indexing to mirror the scan
    let at = |i: usize| sorted[i - 1];
    let mut t_hat = None;
    let mut i = l - 1;
    while i >= 1 {
        let tail: f64 = (i + 1..=l).map(at).sum();
        let t = (tail - 1.0) / (l - i) as f64;
        if t >= at(i) {
            t_hat = Some(t);
            break;
        }
        i -= 1;
    }
    let t_hat = t_hat.unwrap_or_else(|| (sorted.iter().sum::<f64>() - 1.0) / l as f64);
    v.iter().map(|&x| (x - t_hat).max(0.0)).collect()
}

/// Central finite-difference gradient with step `h`.
pub fn central_difference(f: impl Fn(&BlockVector) -> f64, x: &BlockVector, h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[k] += h;
            minus[k] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(1.0)
}
