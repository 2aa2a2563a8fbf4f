mod common;

use common::*;
use liegram::diversity::{diversity_check, gramian_increment, propagated_subspace, IncrementVerdict};
use liegram::linalg::{numerical_rank, RankTolerance};
use liegram::{Channel, ErrorSystem, FactorStructure, Schedule};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn unimodular_system(seed: u64, horizon: usize) -> (ErrorSystem, Vec<DMatrix<f64>>) {
    let mut r = rng(seed);
    // SE(2) adjoints with a planted zero-motion stretch keep some directions hidden
    let f: Vec<_> = (0..horizon)
        .map(|t| {
            if t % 3 == 0 {
                DMatrix::identity(3, 3)
            } else {
                let v = random_algebra(&mut r, &liegram::lie::GroupKind::SE2, 0.5);
                liegram::lie::adjoint(&liegram::lie::exp_map(&v, &liegram::lie::GroupKind::SE2).unwrap())
            }
        })
        .collect();
    let fs = FactorStructure::new(vec![1, 2]).unwrap();
    let sys = ErrorSystem::new(
        fs,
        Schedule::PerStep(f.clone()),
        Schedule::Constant(DMatrix::zeros(3, 3)),
        horizon,
    )
    .unwrap();
    (sys, f)
}

fn channel(name: &str, h: Vec<DMatrix<f64>>) -> Channel {
    let p = h[0].nrows();
    Channel::new(name, Schedule::PerStep(h), DMatrix::identity(p, p)).unwrap()
}

#[test]
fn propagated_span_matches_stacked_svd() {
    let tol = RankTolerance::default();
    for seed in 0..20 {
        let (sys, f) = unimodular_system(seed, 6);
        let mut r = rng(1000 + seed);
        let hs: Vec<DMatrix<f64>> = (0..6).map(|_| random_matrix(&mut r, 1, 3)).collect();
        let span = propagated_subspace(&sys, &[channel("a", hs.clone())], 6, tol).unwrap();
        let mut stacked = DMatrix::zeros(6, 3);
        for (t, h) in hs.iter().enumerate() {
            stacked.row_mut(t).copy_from(&(h * brute_transition(&f, t, 0)).row(0));
        }
        let svd = stacked.clone().svd(false, true);
        let rank = numerical_rank(&stacked, tol);
        assert_eq!(span.dim(), rank);
        let vt = svd.v_t.unwrap();
        // sort singular directions: nalgebra does not promise an order
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let v = DMatrix::from_fn(3, rank, |i, k| vt[(idx[k], i)]);
        let oracle = &v * v.transpose();
        assert!((span.subspace.projector() - oracle).norm() < 1e-8);
    }
}

#[test]
fn recombined_existing_rows_are_redundant() {
    let tol = RankTolerance::default();
    for seed in 0..20 {
        let (sys, _) = unimodular_system(seed, 8);
        let mut r = rng(2000 + seed);
        let base_h: Vec<_> = (0..8).map(|_| random_matrix(&mut r, 2, 3)).collect();
        let base = channel("base", base_h.clone());
        let mixed: Vec<_> = base_h.iter().map(|h| random_matrix(&mut r, 3, 2) * h).collect();
        let cand = channel("mix", mixed);
        let span = propagated_subspace(&sys, std::slice::from_ref(&base), 8, tol).unwrap();
        let check = diversity_check(&sys, &span, &cand, None).unwrap();
        assert!(check.is_redundant(), "seed {seed}: {}", check.innovation_norm);
        let inc = gramian_increment(&sys, &[base], &cand, 8, tol).unwrap();
        assert_eq!(inc.verdict, IncrementVerdict::Unchanged);
        assert_eq!(inc.rank_before, inc.rank_after);
    }
}

#[test]
fn sensor_on_hidden_direction_adds_rank() {
    // standing still: only the static measurement directions are ever seen
    let sys = ErrorSystem::constant(FactorStructure::new(vec![1, 2]).unwrap(), DMatrix::identity(3, 3), 5).unwrap();
    let tol = RankTolerance::default();
    let pos = Channel::factor_local(
        "pos",
        sys.factors(),
        1,
        Schedule::Constant(DMatrix::identity(2, 2)),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let head = Channel::factor_local(
        "head",
        sys.factors(),
        0,
        Schedule::Constant(DMatrix::identity(1, 1)),
        DMatrix::identity(1, 1),
    )
    .unwrap();
    let span = propagated_subspace(&sys, std::slice::from_ref(&pos), 5, tol).unwrap();
    let check = diversity_check(&sys, &span, &head, None).unwrap();
    assert_eq!(check.innovation_dim(), 1);
    let inc = gramian_increment(&sys, &[pos], &head, 5, tol).unwrap();
    assert_eq!(inc.verdict, IncrementVerdict::RankIncrease);
    assert_eq!((inc.rank_before, inc.rank_after), (2, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// The projection test and the kernel test agree on random instances,
    /// redundant or not.
    #[test]
    fn projection_and_kernel_tests_agree(seed in 0u64..10_000, redundant in any::<bool>(), horizon in 1usize..7) {
        let tol = RankTolerance::default();
        let (sys, _) = unimodular_system(seed, horizon);
        let mut r = rng(seed ^ 0x5eed);
        let base_h: Vec<_> = (0..horizon).map(|_| random_matrix(&mut r, 1, 3)).collect();
        let cand_h: Vec<_> = if redundant {
            base_h.iter().map(|h| h * 2.5).collect()
        } else {
            (0..horizon).map(|_| random_matrix(&mut r, 1, 3)).collect()
        };
        let base = channel("b", base_h);
        let cand = channel("c", cand_h);
        let span = propagated_subspace(&sys, std::slice::from_ref(&base), horizon, tol).unwrap();
        let check = diversity_check(&sys, &span, &cand, None).unwrap();
        let inc = gramian_increment(&sys, &[base], &cand, horizon, tol).unwrap();
        prop_assert_eq!(check.is_redundant(), inc.verdict == IncrementVerdict::Unchanged);
        if redundant {
            prop_assert!(check.is_redundant());
        }
    }
}
