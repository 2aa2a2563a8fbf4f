#![allow(dead_code)]

use liegram::lie::{adjoint, exp_map, GroupKind};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_spd(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
    let a = random_matrix(rng, n, n);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Random PSD matrix of the given rank (rank 0 gives zero).
pub fn random_psd(rng: &mut StdRng, n: usize, rank: usize) -> DMatrix<f64> {
    let a = random_matrix(rng, n, rank);
    &a * a.transpose()
}

pub fn random_orthogonal(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
    random_matrix(rng, n, n).qr().q()
}

pub fn random_algebra(rng: &mut StdRng, kind: &GroupKind, scale: f64) -> Vec<f64> {
    (0..kind.dim()).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Adjoint of a random SE(2) or SE(3) element (determinant one).
pub fn random_adjoint(rng: &mut StdRng) -> DMatrix<f64> {
    let kind = if rng.gen_bool(0.5) {
        GroupKind::SE2
    } else {
        GroupKind::SE3
    };
    let v = random_algebra(rng, &kind, 1.5);
    adjoint(&exp_map(&v, &kind).unwrap())
}

/// Independent product `F_{t-1} ... F_tau` from an explicit list.
pub fn brute_transition(fs: &[DMatrix<f64>], t: usize, tau: usize) -> DMatrix<f64> {
    let n = fs[0].nrows();
    let mut phi = DMatrix::identity(n, n);
    for f in &fs[tau..t] {
        phi = f * phi;
    }
    phi
}

/// Scaling-and-squaring Taylor series for the matrix exponential.
pub fn series_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
