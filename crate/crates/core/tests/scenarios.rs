use liegram::gramian::{cross_factor_analysis, gramian, reachable_profile, unobservable_subspace, CouplingVerdict};
use liegram::linalg::RankTolerance;
use liegram::scenarios::{
    preset, run_scenario, table2_reproduction, Motion, PRESET_NAMES, ROTATION_FACTOR, TRANSLATION_FACTOR,
};
use nalgebra::DVector;

fn tol() -> RankTolerance {
    RankTolerance::default()
}

#[test]
fn every_preset_runs_to_its_horizon() {
    for name in PRESET_NAMES {
        let config = preset(name).unwrap();
        let trace = run_scenario(&config, tol()).unwrap();
        assert!(trace.failure.is_none(), "{name}");
        assert_eq!(trace.steps.len(), config.horizon);
        for step in &trace.steps {
            assert!(step.record.residual().abs() < 1e-9, "{name} t={}", step.t);
            assert!(step.min_eig_p > 0.0);
        }
    }
}

#[test]
fn se2_rank_profiles() {
    let a = run_scenario(&preset("se2-A").unwrap(), tol()).unwrap();
    let b = run_scenario(&preset("se2-B").unwrap(), tol()).unwrap();
    assert_eq!(a.steps[0].rank_wo, 2);
    assert!(a.steps[1..].iter().all(|s| s.rank_wo == 3));
    assert!(b.steps.iter().all(|s| s.rank_wo == 3));
}

#[test]
fn heading_sensor_lowers_first_update_by_log_101() {
    let a = run_scenario(&preset("se2-A").unwrap(), tol()).unwrap();
    let b = run_scenario(&preset("se2-B").unwrap(), tol()).unwrap();
    let gap = a.steps[0].log_det_p - b.steps[0].log_det_p;
    assert!((gap - 101.0_f64.ln()).abs() < 1e-12);
    assert!((b.steps[0].record.spatial - a.steps[0].record.spatial - 101.0_f64.ln()).abs() < 1e-12);
    for (sa, sb) in a.steps.iter().zip(&b.steps) {
        assert!(sb.log_det_p < sa.log_det_p);
    }
}

#[test]
fn redundant_position_sensor_shrinks_but_adds_no_rank() {
    let a = run_scenario(&preset("se2-A").unwrap(), tol()).unwrap();
    let c = run_scenario(&preset("se2-C").unwrap(), tol()).unwrap();
    for (sa, sc) in a.steps.iter().zip(&c.steps) {
        assert_eq!(sa.rank_wo, sc.rank_wo);
        assert!(sc.trace_p <= sa.trace_p + 1e-12);
    }
}

#[test]
fn hovering_gps_leaves_attitude_hidden() {
    let config = preset("se3-gps").unwrap().with_motion(Motion::Hover).unwrap();
    let sys = config.build_system().unwrap();
    let w = gramian(&sys, &config.sensors, config.horizon).unwrap();
    let hidden = unobservable_subspace(&w, tol());
    assert_eq!(hidden.dim(), 3);
    for k in 0..3 {
        let mut e = DVector::zeros(6);
        e[k] = 1.0;
        assert!(hidden.contains(&e));
    }
    let report = cross_factor_analysis(&sys, &config.sensors[0], ROTATION_FACTOR, config.horizon, tol()).unwrap();
    assert_eq!(report.verdict, CouplingVerdict::None);
}

#[test]
fn translating_gps_sees_two_attitude_directions() {
    let config = preset("se3-gps").unwrap().with_motion(Motion::Translate).unwrap();
    let sys = config.build_system().unwrap();
    let report = cross_factor_analysis(&sys, &config.sensors[0], ROTATION_FACTOR, config.horizon, tol()).unwrap();
    assert_eq!(report.verdict, CouplingVerdict::Partial);
    assert_eq!(report.reachable.dim(), 2);
    // roll about the direction of travel stays hidden
    assert!(!report.reachable.contains(&DVector::from_vec(vec![1.0, 0.0, 0.0])));
    assert!(report.positive_on_reachable);
    let own = cross_factor_analysis(&sys, &config.sensors[0], TRANSLATION_FACTOR, config.horizon, tol()).unwrap();
    assert_eq!(own.verdict, CouplingVerdict::Full);
}

#[test]
fn architecture_table() {
    let rows = table2_reproduction(tol()).unwrap();
    let dims: Vec<_> = rows.iter().map(|r| r.unobservable_dim).collect();
    assert_eq!(dims, vec![3, 1, 0, 1]);
    let verdicts: Vec<_> = rows.iter().map(|r| r.rotation_verdict).collect();
    assert_eq!(
        verdicts,
        vec![
            CouplingVerdict::None,
            CouplingVerdict::Partial,
            CouplingVerdict::None,
            CouplingVerdict::Partial
        ]
    );
}

#[test]
fn turning_onto_a_second_axis_completes_attitude() {
    let config = preset("se3-gps")
        .unwrap()
        .with_motion(Motion::Switch { at: 4 })
        .unwrap();
    let sys = config.build_system().unwrap();
    let profile = reachable_profile(&sys, &config.sensors[0], ROTATION_FACTOR, 10, tol()).unwrap();
    assert_eq!(profile, vec![0, 2, 2, 2, 2, 3, 3, 3, 3, 3]);
}
