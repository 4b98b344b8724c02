use gatenav::dataio::{generate_sequence, synthetic_subjects};
use gatenav::detector::*;
use gatenav::filter::NavConfig;
use gatenav::{Error, MotionLabel, Vec3};
use gatenav_nn::Checkpoint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_tcn() -> TcnConfig {
    TcnConfig {
        hidden: 8,
        ..TcnConfig::default()
    }
}

fn small_smoother() -> SmootherConfig {
    SmootherConfig {
        hidden: 6,
        cells: 1,
        ..SmootherConfig::default()
    }
}

fn subject_streams(count: usize, seconds: f64, seed: u64) -> Vec<LabeledStream> {
    let cfg = NavConfig::default();
    synthetic_subjects(count, seconds, seed)
        .iter()
        .map(|s| {
            let seq = generate_sequence(&s.name, &s.profile, &s.noise, 500.0, 125.0).unwrap();
            LabeledStream::from_sequence(&seq, &cfg).unwrap()
        })
        .collect()
}

fn train_loss(log: &[EpochLog], epoch: usize) -> f64 {
    log.iter().find(|r| r.epoch == epoch && r.split == "train").unwrap().loss
}

#[test]
fn one_small_run_lowers_the_training_loss() {
    let full = &subject_streams(1, 20.0, 3)[0];
    // 10 windows, all in the training part.
    let n = WINDOW + 9;
    let start = full.labels.iter().position(|l| *l == MotionLabel::Motion).unwrap().saturating_sub(n / 2);
    let stream = LabeledStream::new("ten", full.accel[start..start + n].to_vec(), full.labels[start..start + n].to_vec()).unwrap();
    let tc = TcnTrainConfig {
        epochs: 1,
        lr: 1e-4,
        windows_per_epoch: 10,
        batch_size: 10,
        val_fraction: 0.0,
        ..TcnTrainConfig::default()
    };
    let (_, log) = train_tcn(small_tcn(), &[stream], &tc).unwrap();
    assert!(train_loss(&log, 1) < train_loss(&log, 0), "{log:?}");
}

/// Mean of the per-class recalls of the classifier on every window end of
/// `stream`, stepping by `stride`.
fn balanced_accuracy(model: &TcnClassifier, stream: &LabeledStream, stride: usize) -> f64 {
    let w = model.config.window;
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for end in (w - 1..stream.len()).step_by(stride) {
        let window: Vec<[f64; 3]> = stream.accel[end + 1 - w..=end].iter().map(|a| [a.x, a.y, a.z]).collect();
        let logits = model.infer(&window).unwrap();
        let target = stream.labels[end].class_index();
        totals[target] += 1;
        if usize::from(logits[1] > logits[0]) == target {
            hits[target] += 1;
        }
    }
    assert!(totals[0] > 0 && totals[1] > 0);
    (hits[0] as f64 / totals[0] as f64 + hits[1] as f64 / totals[1] as f64) / 2.0
}

#[test]
fn shuffled_labels_teach_nothing() {
    let mut streams = subject_streams(3, 60.0, 21);
    let held_out = streams.pop().unwrap();
    let tc = TcnTrainConfig {
        epochs: 2,
        windows_per_epoch: 480,
        val_windows: 50,
        ..TcnTrainConfig::default()
    };
    let (real, _) = train_tcn(small_tcn(), &streams, &tc).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in &mut streams {
        s.labels.shuffle(&mut rng);
    }
    let (shuffled, _) = train_tcn(small_tcn(), &streams, &tc).unwrap();
    let real_acc = balanced_accuracy(&real, &held_out, 25);
    let shuffled_acc = balanced_accuracy(&shuffled, &held_out, 25);
    assert!((0.35..=0.65).contains(&shuffled_acc), "shuffled {shuffled_acc}");
    assert!(real_acc > shuffled_acc + 0.2, "real {real_acc} shuffled {shuffled_acc}");
}

/// Blocks of constant labels with confident logits, corrupted by isolated
/// single-tick reversals.
fn jitter_stream(ticks: usize, seed: u64) -> LogitStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = Vec::with_capacity(ticks);
    let mut label = 0;
    while targets.len() < ticks {
        let len = rng.random_range(20..60);
        targets.extend(std::iter::repeat_n(label, len));
        label = 1 - label;
    }
    targets.truncate(ticks);
    let logits = targets
        .iter()
        .map(|&t| {
            let sign = if rng.random_bool(0.12) { -1.0 } else { 1.0 };
            let margin = sign * rng.random_range(2.0..6.0);
            if t == 1 {
                [0.0, margin]
            } else {
                [margin, 0.0]
            }
        })
        .collect();
    LogitStream { logits, targets }
}

fn flips(labels: &[usize]) -> usize {
    labels.windows(2).filter(|w| w[0] != w[1]).count()
}

#[test]
fn smoother_suppresses_single_tick_jitter() {
    let train: Vec<LogitStream> = (0..4).map(|k| jitter_stream(600, k)).collect();
    let tc = SmootherTrainConfig {
        epochs: 12,
        ..SmootherTrainConfig::default()
    };
    let (mut sm, _) = train_smoother_on_logits(&train, small_smoother(), &tc).unwrap();
    let test = jitter_stream(600, 99);
    let raw: Vec<usize> = test.logits.iter().map(|l| usize::from(l[1] > l[0])).collect();
    let smoothed: Vec<usize> = test.logits.iter().map(|l| sm.step(l).unwrap().0.class_index()).collect();
    let accuracy = |p: &[usize]| p.iter().zip(&test.targets).filter(|(a, b)| a == b).count() as f64 / p.len() as f64;
    assert!(flips(&smoothed) * 2 < flips(&raw), "smoothed {} raw {}", flips(&smoothed), flips(&raw));
    assert!(accuracy(&smoothed) > accuracy(&raw), "{} vs {}", accuracy(&smoothed), accuracy(&raw));
}

fn random_window(seed: u64, len: usize) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect()
}

#[test]
fn checkpoint_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let tcn = TcnClassifier::new(small_tcn(), 17).unwrap();
    let path = dir.path().join("tcn.json");
    tcn.to_checkpoint().save(&path).unwrap();
    let back = TcnClassifier::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
    assert_eq!(back.config, tcn.config);
    for seed in 0..3 {
        let w = random_window(seed, WINDOW);
        let (a, b) = (tcn.infer(&w).unwrap(), back.infer(&w).unwrap());
        assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
    }

    let mut sm = LstmSmoother::new(SmootherConfig::default(), 4).unwrap();
    let path = dir.path().join("smoother.json");
    sm.to_checkpoint().save(&path).unwrap();
    let mut sm_back = LstmSmoother::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
    for l in jitter_stream(50, 3).logits {
        let (a, b) = (sm.step(&l).unwrap().1, sm_back.step(&l).unwrap().1);
        assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
    }
}

#[test]
fn checkpoint_of_the_wrong_model_is_rejected() {
    let sm = LstmSmoother::new(SmootherConfig::default(), 4).unwrap();
    assert!(TcnClassifier::from_checkpoint(&sm.to_checkpoint()).is_err());
}

#[test]
fn training_is_deterministic() {
    let streams = subject_streams(2, 30.0, 8);
    let tc = TcnTrainConfig {
        epochs: 1,
        windows_per_epoch: 96,
        val_windows: 20,
        ..TcnTrainConfig::default()
    };
    let (a, log_a) = train_tcn(small_tcn(), &streams, &tc).unwrap();
    let (b, log_b) = train_tcn(small_tcn(), &streams, &tc).unwrap();
    assert_eq!(a.to_checkpoint().to_json().unwrap(), b.to_checkpoint().to_json().unwrap());
    assert_eq!(log_a, log_b);

    let logits = logit_streams(&a, &streams, 50).unwrap();
    let sc = SmootherTrainConfig {
        epochs: 2,
        ..SmootherTrainConfig::default()
    };
    let (s1, _) = train_smoother_on_logits(&logits, small_smoother(), &sc).unwrap();
    let (s2, _) = train_smoother_on_logits(&logits, small_smoother(), &sc).unwrap();
    assert_eq!(s1.to_checkpoint().to_json().unwrap(), s2.to_checkpoint().to_json().unwrap());

    let accel: Vec<Vec3> = streams[0].accel.clone();
    let d1 = detect_stream(Pipeline::Pluto(&a, &s1), &accel, 50).unwrap();
    let d2 = detect_stream(Pipeline::Pluto(&b, &s2), &accel, 50).unwrap();
    assert_eq!(d1, d2);
}

#[test]
fn detector_rate_above_imu_rate_is_rejected() {
    assert_eq!(decimation_for(10.0, 0.002).unwrap(), 50);
    assert!(matches!(decimation_for(1000.0, 0.002), Err(Error::Config(_))));
    assert!(matches!(decimation_for(0.0, 0.002), Err(Error::Config(_))));
}

#[test]
fn tcn_that_cannot_see_its_window_is_rejected() {
    let cfg = TcnConfig {
        kernel: 2,
        blocks: 2,
        ..TcnConfig::default()
    };
    assert!(matches!(TcnClassifier::new(cfg, 0), Err(Error::Config(_))));
}
