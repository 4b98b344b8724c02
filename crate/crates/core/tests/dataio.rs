use std::fs;

use gatenav::dataio::*;
use gatenav::{Error, MotionLabel, Sequence, TrajectoryPoint, Vec3};

fn sample_sequence() -> Sequence {
    let subjects = synthetic_subjects(1, 30.0, 5);
    let s = &subjects[0];
    generate_sequence("subject1", &s.profile, &s.noise, 500.0, 125.0).unwrap()
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn sequence_round_trip_is_exact() {
    let seq = sample_sequence();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("subject1");
    write_sequence(&seq, &path).unwrap();
    let back = read_sequence(&path).unwrap();
    assert_eq!(back.name, "subject1");
    assert_eq!(back.imu.len(), seq.imu.len());
    for (a, b) in seq.imu.iter().zip(&back.imu) {
        assert!(rel_close(a.t, b.t));
        for k in 0..3 {
            assert!(rel_close(a.accel[k], b.accel[k]));
        }
    }
    for (a, b) in seq.gt.iter().zip(&back.gt) {
        assert!(rel_close(a.t, b.t));
        assert!((a.position - b.position).norm() <= 1e-12 * a.position.norm().max(1.0));
        assert!((a.orientation.coords - b.orientation.coords).norm() <= 1e-12);
        let (va, vb) = (a.velocity.unwrap(), b.velocity.unwrap());
        assert!((va - vb).norm() <= 1e-12 * va.norm().max(1.0));
    }
    assert_eq!(seq.label_values(), back.label_values());
}

#[test]
fn trajectory_round_trip_is_exact() {
    let traj: Vec<TrajectoryPoint> = (0..50)
        .map(|k| {
            let t = k as f64 * 0.002;
            TrajectoryPoint {
                t,
                position: Vec3::new(t.sin() * 1e3, -t / 3.0, 1.0 / (1.0 + t)),
                velocity: Vec3::new(0.1, t.cos(), -7.25e-7),
            }
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("trajectory.csv");
    write_trajectory(&p, &traj).unwrap();
    assert_eq!(read_trajectory(&p).unwrap(), traj);
}

#[test]
fn out_of_order_row_names_its_line() {
    let seq = sample_sequence();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s");
    write_sequence(&seq, &path).unwrap();
    let imu_path = path.join(IMU_FILE);
    let text = fs::read_to_string(&imu_path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(10, 11);
    fs::write(&imu_path, lines.join("\n") + "\n").unwrap();
    let err = read_sequence(&path).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err.root(), Error::Validation(_)), "{msg}");
    assert!(msg.contains("11") && msg.contains("12"), "{msg}");
}

#[test]
fn bad_field_reports_parse_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("imu.csv");
    fs::write(&p, "t,ax,ay,az\n0.000000,0,0,9.81\n0.002000,0,zero,9.81\n").unwrap();
    match read_imu(&p).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 3),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn wrong_header_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("labels.csv");
    fs::write(&p, "time,label\n0.000000,motion\n").unwrap();
    assert!(matches!(read_labels(&p).unwrap_err(), Error::Parse { line: 1, .. }));
}

#[test]
fn dataset_reads_sorted_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let seq = sample_sequence();
    for name in ["b", "a"] {
        let mut s = seq.clone();
        s.name = name.into();
        write_sequence(&s, &dir.path().join(name)).unwrap();
    }
    let all = read_dataset(dir.path()).unwrap();
    let names: Vec<&str> = all.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["a", "b"]);
}

#[test]
fn split_yields_disjoint_rezeroed_cuts_in_range() {
    let seq = sample_sequence();
    let long = {
        let subjects = synthetic_subjects(1, 240.0, 9);
        generate_sequence("long", &subjects[0].profile, &subjects[0].noise, 500.0, 125.0).unwrap()
    };
    let cuts = split_test_sequences(&long, 16, DEFAULT_LENGTH_RANGE, 3).unwrap();
    assert_eq!(cuts.len(), 16);
    let mut last_end = f64::NEG_INFINITY;
    for (k, c) in cuts.iter().enumerate() {
        assert_eq!(c.name, format!("long_{:02}", k + 1));
        assert_eq!(c.gt[0].t, 0.0);
        let len = c.duration();
        assert!((5.0 - 0.01..=12.0 + 0.01).contains(&len), "{len}");
        // Cuts come from increasing, non-overlapping parts of the source.
        let start = long.gt.iter().position(|p| p.position == c.gt[0].position).unwrap();
        let start_t = long.gt[start].t;
        assert!(start_t >= last_end - 1e-9);
        last_end = start_t + len;
    }
    let err = split_test_sequences(&seq, 16, DEFAULT_LENGTH_RANGE, 3).unwrap_err();
    match err {
        Error::Capacity { requested, max_feasible, .. } => {
            assert_eq!(requested, 16);
            assert_eq!(max_feasible, 6);
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn split_is_deterministic() {
    let subjects = synthetic_subjects(1, 240.0, 9);
    let long = generate_sequence("long", &subjects[0].profile, &subjects[0].noise, 500.0, 125.0).unwrap();
    let a = split_test_sequences(&long, 16, DEFAULT_LENGTH_RANGE, 3).unwrap();
    let b = split_test_sequences(&long, 16, DEFAULT_LENGTH_RANGE, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn failure_windows_fit_inside_the_sequence() {
    let seq = sample_sequence();
    let cut_seq = cut(&seq, "c", 2.0, 9.0).unwrap();
    for seed in 0..50 {
        let f = make_failure_window(&cut_seq, DEFAULT_FAILURE_RANGE, seed).unwrap();
        assert!(f.duration >= 2.0 && f.duration <= 7.0 + 1e-9, "{f:?}");
        assert!(f.start >= 0.0 && f.end() <= 7.0 + 1e-9, "{f:?}");
        assert!(f.contains(f.start) && !f.contains(f.end()));
    }
    let tiny = cut(&seq, "tiny", 0.0, 1.0).unwrap();
    assert!(matches!(
        make_failure_window(&tiny, DEFAULT_FAILURE_RANGE, 0),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn cut_keeps_labels_aligned_with_imu() {
    let seq = sample_sequence();
    let c = cut(&seq, "c", 1.0, 4.0).unwrap();
    let labels = c.labels.as_ref().unwrap();
    assert_eq!(labels.len(), c.imu.len());
    for (l, s) in labels.iter().zip(&c.imu) {
        assert_eq!(l.0, s.t);
    }
    assert!(labels.iter().all(|(_, m)| matches!(m, MotionLabel::Motion | MotionLabel::Stillness)));
}

#[test]
fn generated_imu_stays_inside_the_pose_stream() {
    for (k, s) in synthetic_subjects(4, 40.0, 2).iter().enumerate() {
        let seq = generate_sequence(&s.name, &s.profile, &s.noise, 500.0, 125.0).unwrap();
        let end = seq.gt.last().unwrap().t;
        assert!(seq.imu.last().unwrap().t <= end, "subject {k}");
        gatenav::domain::align_poses(&seq.gt, &seq.imu_times()).unwrap();
    }
}
