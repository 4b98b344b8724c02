use gatenav::dataio::*;
use gatenav::domain::align_poses;
use gatenav::filter::*;
use gatenav::{Error, MotionLabel, Sequence, Vec3};
use nalgebra::Matrix3;
use proptest::prelude::*;

fn profile(segments: Vec<(f64, SegmentKind)>) -> MotionProfile {
    MotionProfile::new(
        segments
            .into_iter()
            .map(|(duration, kind)| Segment { duration, kind })
            .collect(),
    )
}

fn noisy(seed: u64) -> SensorNoiseSpec {
    SensorNoiseSpec {
        accel_noise_sigma: 0.05,
        accel_bias: Vec3::new(0.1, -0.08, 0.05),
        seed,
        ..SensorNoiseSpec::noiseless()
    }
}

fn final_error(seq: &Sequence, out: &NavOutput) -> f64 {
    let last = out.trajectory.last().unwrap();
    let gt = align_poses(&seq.gt, &[last.t]).unwrap();
    (last.position - gt[0].position).norm()
}

#[test]
fn huge_measurement_noise_leaves_state_unchanged() {
    let s = FilterState::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.5, -0.5, 0.0), 0.3);
    let c = correct(&s, &Vec3::new(9.0, 9.0, 9.0), &(Matrix3::identity() * 1e15)).unwrap();
    assert!((c.state.mean - s.mean).norm() < 1e-12);
    assert!((c.state.covariance - s.covariance).norm() < 1e-12);
    assert_eq!(c.innovation, Vec3::new(8.5, 9.5, 9.0));
}

#[test]
fn exact_measurement_overrides_velocity_and_is_idempotent() {
    let s = FilterState::new(Vec3::zeros(), Vec3::new(0.2, 0.0, -1.0), 1.0);
    let v = Vec3::new(1.0, 2.0, 3.0);
    let once = correct(&s, &v, &Matrix3::zeros()).unwrap().state;
    assert!((once.velocity() - v).norm() < 1e-12);
    let twice = correct(&once, &v, &Matrix3::zeros()).unwrap().state;
    assert!((twice.mean - once.mean).norm() < 1e-12);
}

#[test]
fn correction_also_moves_correlated_position() {
    // After a prediction, position and velocity are correlated, so a
    // velocity measurement shifts the position too.
    let s = FilterState::new(Vec3::zeros(), Vec3::zeros(), 1.0);
    let p = predict(&s, &Vec3::zeros(), 0.5, &Matrix3::zeros()).unwrap();
    let c = correct(&p, &Vec3::new(1.0, 0.0, 0.0), &Matrix3::identity()).unwrap();
    assert!(c.state.position().x > 0.0);
    assert_eq!(c.state.position().y, 0.0);
}

#[test]
fn nonpositive_dt_is_rejected() {
    let s = FilterState::new(Vec3::zeros(), Vec3::zeros(), 1.0);
    assert!(matches!(predict(&s, &Vec3::zeros(), 0.0, &Matrix3::zeros()), Err(Error::Numeric(_))));
}

proptest! {
    #[test]
    fn predict_correct_keep_covariance_psd(
        var in 1e-6f64..10.0,
        dt in 1e-4f64..0.1,
        q in 0.0f64..5.0,
        r in 0.0f64..5.0,
        steps in 1usize..40,
    ) {
        let mut s = FilterState::new(Vec3::zeros(), Vec3::zeros(), var);
        for k in 0..steps {
            s = predict(&s, &Vec3::new(0.1, -0.2, 0.3), dt, &(Matrix3::identity() * q)).unwrap();
            if k % 3 == 0 {
                s = correct(&s, &Vec3::new(1.0, 0.0, -1.0), &(Matrix3::identity() * r + Matrix3::identity() * 1e-12)).unwrap().state;
            }
            prop_assert!(s.min_eigenvalue() >= -1e-9);
        }
    }
}

#[test]
fn covariance_stays_psd_over_a_noisy_twelve_second_run() {
    let p = profile(vec![
        (3.0, SegmentKind::Still),
        (
            5.0,
            SegmentKind::Walk {
                velocity: Vec3::new(1.2, 0.3, 0.0),
                bob_amplitude: 0.03,
                step_frequency: 2.0,
            },
        ),
        (4.0, SegmentKind::TurnInPlace { yaw_rate: 0.8 }),
    ]);
    let seq = generate_sequence("psd", &p, &noisy(4), 500.0, 125.0).unwrap();
    let labels = seq.label_values().unwrap();
    let cfg = NavConfig {
        gate_mode: GateMode::Oracle,
        gate_scope: GateScope::Always,
        ..NavConfig::default()
    };
    let fw = FailureWindow::new(4.0, 6.0).unwrap();
    let out = run_navigation(&seq, &cfg, Some(&fw), Some(&labels)).unwrap();
    assert!(out.stats.min_eigenvalue >= -1e-9, "{}", out.stats.min_eigenvalue);
    assert!(out.stats.pseudo_corrections > 0);
}

#[test]
fn noise_free_constant_velocity_tracks_ground_truth() {
    let v = Vec3::new(1.0, -0.5, 0.2);
    let p = profile(vec![(10.0, SegmentKind::ConstVel { velocity: v })]);
    // Already at speed at t = 0, so there is no start-up blend.
    let kin = ProfileTrajectory::with_initial(&p, Vec3::new(0.5, 0.0, 1.6), v, 0.3).unwrap();
    let seq = generate_from_kinematics("cv", &kin, &SensorNoiseSpec::noiseless(), 500.0, 125.0).unwrap();
    let cfg = NavConfig {
        gate_mode: GateMode::Off,
        ..NavConfig::default()
    };
    let out = run_navigation(&seq, &cfg, None, None).unwrap();
    assert_eq!(out.trajectory.len(), seq.imu.len());
    assert!(final_error(&seq, &out) < 1e-3, "{}", final_error(&seq, &out));
    // One correction per ground-truth sample after the first.
    assert_eq!(out.stats.corrections, seq.gt.len() - 1);
    assert_eq!(out.stats.predictions, seq.imu.len() - 1);
}

fn still_with_failure() -> (Sequence, FailureWindow) {
    let p = profile(vec![(8.0, SegmentKind::Still)]);
    let seq = generate_sequence("still", &p, &noisy(11), 500.0, 125.0).unwrap();
    (seq, FailureWindow::new(2.0, 4.0).unwrap())
}

#[test]
fn oracle_gate_pins_a_still_sequence() {
    let (seq, fw) = still_with_failure();
    let labels = seq.label_values().unwrap();
    assert!(labels.iter().all(|l| *l == MotionLabel::Stillness));
    let cfg = NavConfig {
        gate_mode: GateMode::Oracle,
        ..NavConfig::default()
    };
    let out = run_navigation(&seq, &cfg, Some(&fw), Some(&labels)).unwrap();
    for p in out.trajectory.iter().filter(|p| fw.contains(p.t)) {
        assert!(p.velocity.norm() < 0.05, "speed {} at {}", p.velocity.norm(), p.t);
    }
    assert!(final_error(&seq, &out) < 0.01);
    assert_eq!(out.stats.corrections + out.stats.pseudo_corrections, seq.gt.len() - 1);
}

#[test]
fn ungated_failure_drifts_further_than_gated() {
    let (seq, fw) = still_with_failure();
    let labels = seq.label_values().unwrap();
    let gated = NavConfig {
        gate_mode: GateMode::Oracle,
        ..NavConfig::default()
    };
    let ungated = NavConfig {
        gate_mode: GateMode::Off,
        ..NavConfig::default()
    };
    let g = run_navigation(&seq, &gated, Some(&fw), Some(&labels)).unwrap();
    let u = run_navigation(&seq, &ungated, Some(&fw), None).unwrap();
    let at_end_of_failure = |out: &NavOutput| {
        let i = out.trajectory.iter().position(|p| p.t >= fw.end()).unwrap() - 1;
        out.trajectory[i].position.norm()
    };
    assert!(at_end_of_failure(&u) > 5.0 * at_end_of_failure(&g));
    assert!(final_error(&seq, &u) > final_error(&seq, &g));
}

#[test]
fn empty_failure_window_with_failure_only_scope_changes_nothing() {
    let p = profile(vec![
        (2.0, SegmentKind::Still),
        (
            4.0,
            SegmentKind::ConstVel {
                velocity: Vec3::new(1.0, 0.0, 0.0),
            },
        ),
        (2.0, SegmentKind::Still),
    ]);
    let seq = generate_sequence("z", &p, &noisy(2), 500.0, 125.0).unwrap();
    let labels = seq.label_values().unwrap();
    let cfg = NavConfig {
        gate_mode: GateMode::Oracle,
        gate_scope: GateScope::FailureOnly,
        ..NavConfig::default()
    };
    let off = NavConfig {
        gate_mode: GateMode::Off,
        ..NavConfig::default()
    };
    let fw = FailureWindow::new(3.0, 0.0).unwrap();
    let a = run_navigation(&seq, &cfg, Some(&fw), Some(&labels)).unwrap();
    let b = run_navigation(&seq, &off, None, None).unwrap();
    for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
        assert!((x.position - y.position).norm() < 1e-6);
    }
}

#[test]
fn always_scope_overrides_the_tracker_on_stillness() {
    let (seq, _) = still_with_failure();
    let labels = seq.label_values().unwrap();
    let cfg = NavConfig {
        gate_mode: GateMode::Oracle,
        gate_scope: GateScope::Always,
        ..NavConfig::default()
    };
    let out = run_navigation(&seq, &cfg, None, Some(&labels)).unwrap();
    assert_eq!(out.stats.corrections, 0);
    assert_eq!(out.stats.pseudo_corrections, seq.gt.len() - 1);
}

#[test]
fn gated_modes_need_labels_of_matching_length() {
    let (seq, _) = still_with_failure();
    let cfg = NavConfig {
        gate_mode: GateMode::Pluto,
        ..NavConfig::default()
    };
    assert!(matches!(run_navigation(&seq, &cfg, None, None), Err(Error::Config(_))));
    let short = vec![MotionLabel::Motion; 3];
    assert!(matches!(
        run_navigation(&seq, &cfg, None, Some(&short)),
        Err(Error::Validation(_))
    ));
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("nav.cfg");
    std::fs::write(&p, "gate_mode = oracle\nhighpass_cutoff = 0.1\n").unwrap();
    let cfg = NavConfig::load(&p).unwrap();
    assert_eq!(cfg.gate_mode, GateMode::Oracle);
    assert_eq!(cfg.highpass_cutoff, 0.1);
    assert_eq!(cfg.q_window, NavConfig::default().q_window);
    std::fs::write(&p, "q_window = -4\n").unwrap();
    assert!(NavConfig::load(&p).is_err());
}
