mod common;

use common::*;
use liegram::filter::{information_step, predict, step_with_decomposition, update, BeliefState};
use nalgebra::DMatrix;
use rand::Rng;

fn joseph_update(p: &DMatrix<f64>, h: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let s = h * p * h.transpose() + r;
    let k = p * h.transpose() * s.try_inverse().unwrap();
    let a = DMatrix::identity(n, n) - &k * h;
    &a * p * a.transpose() + &k * r * k.transpose()
}

#[test]
fn update_matches_joseph_form() {
    let mut r = rng(1);
    for _ in 0..200 {
        let n = r.gen_range(1..7);
        let m = r.gen_range(1..4);
        let p = random_spd(&mut r, n);
        let h = random_matrix(&mut r, m, n);
        let noise = random_spd(&mut r, m);
        let s = h.transpose() * noise.clone().try_inverse().unwrap() * &h;
        let got = update(&BeliefState::new(p.clone(), 0).unwrap(), &s).unwrap();
        let oracle = joseph_update(&p, &h, &noise);
        assert!((got.covariance() - &oracle).norm() < 1e-10 * oracle.norm().max(1.0));
    }
}

#[test]
fn covariance_and_information_recursions_agree() {
    let mut r = rng(2);
    for _ in 0..20 {
        let n = r.gen_range(2..6);
        let mut belief = BeliefState::new(random_spd(&mut r, n), 0).unwrap();
        let mut info = belief.information().unwrap();
        for _ in 0..50 {
            let f = random_adjoint_sized(&mut r, n);
            let k = r.gen_range(0..=n);
            let q = random_psd(&mut r, n, k) * 0.01;
            let h = random_matrix(&mut r, 1, n);
            let s = h.transpose() * &h * 2.0;
            belief = update(&predict(&belief, &f, &q).unwrap(), &s).unwrap();
            info = information_step(&info, &f, &q, &s).unwrap();
            let back = belief.information().unwrap();
            assert!((&back - &info).norm() < 1e-7 * back.norm().max(1.0));
        }
    }
}

/// Unit-determinant transition of size n: rotation times a shear.
fn random_adjoint_sized(r: &mut rand::rngs::StdRng, n: usize) -> DMatrix<f64> {
    let mut q = random_orthogonal(r, n);
    if q.clone().lu().determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    let mut shear = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            shear[(i, j)] = r.gen_range(-0.5..0.5);
        }
    }
    q * shear
}

#[test]
fn decomposition_closes_over_ten_thousand_steps() {
    let mut r = rng(3);
    let mut belief = BeliefState::new(DMatrix::identity(6, 6), 0).unwrap();
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let f = random_adjoint(&mut r);
        let n = f.nrows();
        if belief.dim() != n {
            belief = BeliefState::new(DMatrix::identity(n, n), 0).unwrap();
        }
        let q = random_psd(&mut r, n, 2) * 1e-3 + DMatrix::identity(n, n) * 1e-6;
        let h = random_matrix(&mut r, 2, n);
        let s = h.transpose() * &h;
        let (post, rec) = step_with_decomposition(&belief, &f, &q, &s).unwrap();
        assert!(!rec.approximate);
        assert!(rec.temporal >= 0.0 && rec.spatial >= 0.0);
        worst = worst.max(rec.residual().abs());
        belief = post;
    }
    assert!(worst < 1e-8, "worst residual {worst}");
}

#[test]
fn literal_process_term_is_exact_for_rotations_with_isotropic_noise() {
    let mut r = rng(4);
    for _ in 0..500 {
        let n = r.gen_range(1..6);
        let f = random_orthogonal(&mut r, n);
        let b = BeliefState::new(random_spd(&mut r, n), 0).unwrap();
        let q = DMatrix::identity(n, n) * r.gen_range(0.0..2.0);
        let s = random_psd(&mut r, n, 1);
        let (_, rec) = step_with_decomposition(&b, &f, &q, &s).unwrap();
        assert!((rec.temporal - rec.temporal_statement).abs() < 1e-9);
    }
}

#[test]
fn literal_process_term_differs_under_a_shear() {
    // SE(3) adjoint of a pure translation
    let mut f = DMatrix::identity(6, 6);
    f[(4, 2)] = -1.0;
    f[(5, 1)] = 1.0;
    let b = BeliefState::new(DMatrix::identity(6, 6), 0).unwrap();
    let q = DMatrix::identity(6, 6) * 0.1;
    let (_, rec) = step_with_decomposition(&b, &f, &q, &DMatrix::zeros(6, 6)).unwrap();
    assert!(rec.residual().abs() < 1e-12);
    assert!((rec.temporal_statement - 6.0 * 1.1_f64.ln()).abs() < 1e-12);
    assert!((rec.temporal - rec.temporal_statement).abs() > 0.1);
}

#[test]
fn noiseless_motion_and_no_measurement_preserve_volume() {
    let mut r = rng(5);
    for _ in 0..200 {
        let f = random_adjoint(&mut r);
        let n = f.nrows();
        let b = BeliefState::new(random_spd(&mut r, n), 0).unwrap();
        let (post, rec) = step_with_decomposition(&b, &f, &DMatrix::zeros(n, n), &DMatrix::zeros(n, n)).unwrap();
        assert!(rec.temporal.abs() < 1e-12);
        assert!(rec.spatial.abs() < 1e-12);
        assert!((post.log_det() - b.log_det()).abs() < 1e-9);
    }
}
