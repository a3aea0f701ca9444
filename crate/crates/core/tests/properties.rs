mod common;

use std::sync::Arc;

use cpdqs_core::drivers::solve_exact;
use cpdqs_core::energy::{
    discrete_energy, gradient, objective, penalized_gradient, penalized_objective, PenaltyParams,
};
use cpdqs_core::io::canonical::{parse_instance_str, to_canonical_string};
use cpdqs_core::model::{BlockLayout, BlockVector, DiscreteAssignment, InstanceSpec, PairBlock};
use cpdqs_core::projection::{project_block_simplex, project_nonneg};
use cpdqs_core::rounding::{round, RoundingRule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{ascending_scan_projection, central_difference, kkt_projection, relative_error};

fn block_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 1..=6)
}

fn multi_block_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(block_strategy(), 1..=5)
}

fn to_block_vector(blocks: &[Vec<f64>]) -> BlockVector {
    let sizes = blocks.iter().map(Vec::len).collect();
    let layout = Arc::new(BlockLayout::new(sizes).unwrap());
    BlockVector::from_values(layout, blocks.concat()).unwrap()
}

fn instance_strategy() -> impl Strategy<Value = InstanceSpec> {
    any::<u64>().prop_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_instance(&mut rng, 5, 4, -5.0, 5.0, 0.7)
    })
}

fn instance_and_assignment() -> impl Strategy<Value = (InstanceSpec, DiscreteAssignment)> {
    (instance_strategy(), any::<u64>()).prop_map(|(spec, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let choice = spec
            .block_sizes()
            .iter()
            .map(|&l| rng.random_range(0..l))
            .collect();
        (spec, DiscreteAssignment::new(choice))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_lands_on_every_block_simplex(blocks in multi_block_strategy()) {
        let p = project_block_simplex(&to_block_vector(&blocks));
        for i in 0..p.num_blocks() {
            let b = p.block(i);
            prop_assert!(b.iter().all(|&v| v >= 0.0));
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent(blocks in multi_block_strategy()) {
        let p = project_block_simplex(&to_block_vector(&blocks));
        let pp = project_block_simplex(&p);
        prop_assert!(pp.sub(&p).norm_inf() <= 1e-12);
    }

    #[test]
    fn projection_is_nonexpansive(a in block_strategy(), shift in prop::collection::vec(-3.0..3.0f64, 6)) {
        let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let (pa, pb) = (
            project_block_simplex(&common::single_block(a.clone())),
            project_block_simplex(&common::single_block(b.clone())),
        );
        let dist = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dist(pa.as_slice(), pb.as_slice()) <= dist(&a, &b) + 1e-12);
    }

    #[test]
    fn projection_matches_support_search(v in block_strategy()) {
        let p = project_block_simplex(&common::single_block(v.clone()));
        let oracle = kkt_projection(&v);
        for (x, y) in p.as_slice().iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-10, "{:?} vs {:?}", p.as_slice(), oracle);
        }
    }

    #[test]
    fn projection_matches_ascending_scan(v in block_strategy()) {
        let p = project_block_simplex(&common::single_block(v.clone()));
        let oracle = ascending_scan_projection(&v);
        for (x, y) in p.as_slice().iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-10, "{:?} vs {:?}", p.as_slice(), oracle);
        }
    }

    #[test]
    fn nonneg_projection_clips_only_negatives(blocks in multi_block_strategy()) {
        let x = to_block_vector(&blocks);
        let p = project_nonneg(&x);
        for (pi, xi) in p.as_slice().iter().zip(x.as_slice()) {
            prop_assert_eq!(*pi, xi.max(0.0));
        }
    }

    #[test]
    fn rounding_a_vertex_returns_it((spec, d) in instance_and_assignment()) {
        let x = d.expand(&spec).unwrap();
        prop_assert_eq!(&round(&x, &spec, RoundingRule::MaxValue).unwrap(), &d);
        prop_assert_eq!(&round(&x, &spec, RoundingRule::GreedyEnergy).unwrap(), &d);
    }

    #[test]
    fn objective_at_vertex_is_discrete_energy((spec, d) in instance_and_assignment()) {
        let x = d.expand(&spec).unwrap();
        let f = objective(&spec, &x).unwrap();
        let e = discrete_energy(&spec, &d).unwrap();
        prop_assert!((f - e).abs() <= 1e-9 * e.abs().max(1.0));
    }

    #[test]
    fn canonical_format_round_trips(spec in instance_strategy()) {
        let text = to_canonical_string(&spec);
        prop_assert_eq!(parse_instance_str(&text, spec.name()).unwrap(), spec);
    }

    #[test]
    fn gradient_matches_central_differences(spec in instance_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = common::random_point(&mut rng, &spec, 0.0, 1.0);
        let g = gradient(&spec, &x).unwrap();
        let fd = central_difference(|y| objective(&spec, y).unwrap(), &x, 1e-5);
        for (a, b) in fd.iter().zip(g.as_slice()) {
            prop_assert!(relative_error(*a, *b) <= 1e-6, "fd {a} vs {b}");
        }
        let p = PenaltyParams::new(50.0).unwrap();
        let gp = penalized_gradient(&spec, &x, p).unwrap();
        let fdp = central_difference(|y| penalized_objective(&spec, y, p).unwrap(), &x, 1e-5);
        for (a, b) in fdp.iter().zip(gp.as_slice()) {
            prop_assert!(relative_error(*a, *b) <= 1e-6, "fd {a} vs {b}");
        }
    }

    /// Relabelling the positions permutes the optimum but not its energy.
    #[test]
    fn exact_optimum_is_invariant_under_position_relabelling(spec in instance_strategy(), seed in any::<u64>()) {
        let n = spec.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in (1..n).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        // position i of the original becomes position perm[i]
        let mut sizes = vec![0; n];
        for i in 0..n {
            sizes[perm[i]] = spec.block_sizes()[i];
        }
        let layout = BlockLayout::new(sizes.clone()).unwrap();
        let mut unary = vec![0.0; spec.m()];
        for i in 0..n {
            unary[layout.range(perm[i])].copy_from_slice(spec.unary_block(i));
        }
        let mut pairs = std::collections::BTreeMap::new();
        for (&(i, j), block) in spec.pairwise() {
            let (pi, pj) = (perm[i], perm[j]);
            let stored = if pi < pj { block.clone() } else { block.transpose() };
            pairs.insert((pi.min(pj), pi.max(pj)), stored);
        }
        let relabelled = InstanceSpec::new("relabelled", sizes, unary, pairs).unwrap();
        let (_, a) = solve_exact(&spec).unwrap();
        let (choice_b, b) = solve_exact(&relabelled).unwrap();
        prop_assert!((a.rounded_objective - b.rounded_objective).abs() <= 1e-9 * a.rounded_objective.abs().max(1.0));
        let back = DiscreteAssignment::new((0..n).map(|i| choice_b.choices()[perm[i]]).collect());
        let e = discrete_energy(&spec, &back).unwrap();
        prop_assert!((e - a.rounded_objective).abs() <= 1e-9 * e.abs().max(1.0));
    }
}

#[test]
fn objective_is_quadratic_along_lines() {
    // f(x + t d) is a quadratic polynomial in t, so third differences vanish
    let mut rng = common::rng(7);
    for _ in 0..50 {
        let spec = common::random_instance(&mut rng, 4, 4, -3.0, 3.0, 1.0);
        let x = common::random_point(&mut rng, &spec, 0.0, 1.0);
        let d = common::random_point(&mut rng, &spec, -1.0, 1.0);
        let f = |t: f64| objective(&spec, &x.add_scaled(t, &d)).unwrap();
        let third = f(3.0) - 3.0 * f(2.0) + 3.0 * f(1.0) - f(0.0);
        assert!(
            third.abs() <= 1e-9 * f(3.0).abs().max(1.0),
            "third difference {third}"
        );
    }
}

#[test]
fn pair_block_transpose_is_involutive() {
    let b = PairBlock::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    assert_eq!(b.transpose().transpose(), b);
    assert_eq!(b.transpose().get(2, 1), 6.0);
}
