use nalgebra::Matrix3;

use super::config::{GateMode, GateScope, NavConfig};
use super::kalman::{correct, predict, CovarianceWindow, FilterState};
use super::preprocess::Preprocessor;
use crate::dataio::{FailureWindow, STANDARD_GRAVITY};
use crate::domain::{align_poses, ensure_velocity, interpolate_pose, MotionLabel, Sequence, TrajectoryPoint, Vec3};
use crate::error::{Error, Result};

/// Inputs handed to the filter for one IMU step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateDecision {
    pub accel: Vec3,
    /// Velocity to correct with, when a correction runs this step.
    pub velocity: Option<Vec3>,
    /// True when both inputs were replaced by zero pseudo-updates.
    pub pseudo: bool,
}

/// Pseudo-update gate.
///
/// In stillness (restricted to tracker outages when `scope` is
/// failure-only) the acceleration becomes zero and, on correction ticks,
/// a zero velocity is issued even if the tracker is down. Otherwise the
/// inputs pass through; `velocity` is `None` when the tracker is down or
/// when this step has no tracker sample.
pub fn gate(
    accel: Vec3,
    velocity: Option<Vec3>,
    tracker_down: bool,
    correction_tick: bool,
    label: MotionLabel,
    scope: GateScope,
) -> GateDecision {
    let active = label == MotionLabel::Stillness && (scope == GateScope::Always || tracker_down);
    if active {
        GateDecision {
            accel: Vec3::zeros(),
            velocity: correction_tick.then(Vec3::zeros),
            pseudo: true,
        }
    } else {
        GateDecision {
            accel,
            velocity: if correction_tick && !tracker_down { velocity } else { None },
            pseudo: false,
        }
    }
}

/// Filtered world-frame accelerations for every IMU sample, using
/// orientations interpolated from ground truth.
pub fn world_accelerations(seq: &Sequence, cfg: &NavConfig) -> Result<Vec<Vec3>> {
    let mut pre = Preprocessor::new(Vec3::new(0.0, 0.0, -STANDARD_GRAVITY), cfg.highpass_cutoff, cfg.imu_dt);
    let poses = imu_poses(seq)?;
    seq.imu
        .iter()
        .zip(&poses)
        .map(|(s, p)| pre.step(s, &p.orientation))
        .collect()
}

fn imu_poses(seq: &Sequence) -> Result<Vec<crate::domain::PoseSample>> {
    let (g0, g1) = (seq.gt[0].t, seq.gt[seq.gt.len() - 1].t);
    let times: Vec<f64> = seq.imu.iter().map(|s| s.t.clamp(g0, g1)).collect();
    align_poses(&seq.gt, &times)
}

/// Diagnostics of one navigation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NavStats {
    pub predictions: usize,
    pub corrections: usize,
    pub pseudo_corrections: usize,
    pub pseudo_steps: usize,
    /// Smallest covariance eigenvalue observed after any update.
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct NavOutput {
    pub trajectory: Vec<TrajectoryPoint>,
    pub stats: NavStats,
}

/// Runs the filter over a sequence.
///
/// `labels` holds one detector label per IMU sample and is required unless
/// the gate is off. Predictions run at every IMU sample; a correction runs
/// at IMU step `i` whenever a ground-truth sample falls in `(t[i-1], t[i]]`,
/// using the ground-truth velocity interpolated at `t[i]` unless the tracker
/// is inside `failure`. The state starts from ground truth at the first IMU
/// sample.
pub fn run_navigation(
    seq: &Sequence,
    cfg: &NavConfig,
    failure: Option<&FailureWindow>,
    labels: Option<&[MotionLabel]>,
) -> Result<NavOutput> {
    cfg.validate()?;
    seq.validate()?;
    let labels = match (cfg.gate_mode, labels) {
        (GateMode::Off, _) => None,
        (mode, None) => {
            return Err(Error::Config(format!("gate mode '{mode}' needs detector labels")));
        }
        (_, Some(l)) if l.len() != seq.imu.len() => {
            return Err(Error::Validation(format!(
                "{} gate labels for {} IMU samples",
                l.len(),
                seq.imu.len()
            )));
        }
        (_, Some(l)) => Some(l),
    };
    let gt = ensure_velocity(&seq.gt)?;
    let seq_gt = Sequence {
        gt: gt.clone(),
        ..seq.clone()
    };
    let poses = imu_poses(&seq_gt)?;
    let mut pre = Preprocessor::new(Vec3::new(0.0, 0.0, -STANDARD_GRAVITY), cfg.highpass_cutoff, cfg.imu_dt);
    let mut q_win = CovarianceWindow::new(cfg.q_window, cfg.cov_epsilon, Matrix3::identity() * cfg.q_prior);
    let mut r_win = CovarianceWindow::new(cfg.r_window, cfg.cov_epsilon, Matrix3::identity() * cfg.r_prior);
    let floor = Matrix3::identity() * cfg.r_floor;
    let pseudo_r = floor + Matrix3::identity() * cfg.cov_epsilon;

    let start = &poses[0];
    let mut state = FilterState::new(start.position, start.velocity.unwrap_or_default(), cfg.initial_variance);
    let mut stats = NavStats {
        min_eigenvalue: state.min_eigenvalue(),
        ..NavStats::default()
    };
    let mut trajectory = Vec::with_capacity(seq.imu.len());
    let (g0, g1) = (gt[0].t, gt[gt.len() - 1].t);
    let mut gt_cursor = gt.partition_point(|p| p.t <= seq.imu[0].t);

    for (i, sample) in seq.imu.iter().enumerate() {
        let a = pre.step(sample, &poses[i].orientation)?;
        let q = q_win.push(a);
        if i > 0 {
            let t = sample.t;
            let tick = gt_cursor < gt.len() && gt[gt_cursor].t <= t;
            while gt_cursor < gt.len() && gt[gt_cursor].t <= t {
                gt_cursor += 1;
            }
            let tracker_down = failure.is_some_and(|f| f.contains(t));
            let label = labels.map(|l| l[i]).unwrap_or(MotionLabel::Motion);
            let measured = if tick && !tracker_down && (g0..=g1).contains(&t) {
                interpolate_pose(&gt, t)?.velocity
            } else {
                None
            };
            let decision = gate(a, measured, tracker_down, tick, label, cfg.gate_scope);
            let dt = t - seq.imu[i - 1].t;
            state = predict(&state, &decision.accel, dt, &q)?;
            stats.predictions += 1;
            if decision.pseudo {
                stats.pseudo_steps += 1;
            }
            if let Some(v) = decision.velocity {
                if decision.pseudo {
                    state = correct(&state, &v, &pseudo_r)?.state;
                    stats.pseudo_corrections += 1;
                } else {
                    let r = r_win.covariance() + floor;
                    let c = correct(&state, &v, &r)?;
                    r_win.push(c.innovation);
                    state = c.state;
                    stats.corrections += 1;
                }
            }
            stats.min_eigenvalue = stats.min_eigenvalue.min(state.min_eigenvalue());
        }
        trajectory.push(TrajectoryPoint {
            t: sample.t,
            position: state.position(),
            velocity: state.velocity(),
        });
    }
    Ok(NavOutput { trajectory, stats })
}
