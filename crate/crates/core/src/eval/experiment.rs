//! Tracking-failure experiment and detector evaluation over a suite of
//! sequences.

use serde::{Deserialize, Serialize};

use super::classification::{classification_metrics, ClassificationReport};
use super::drift::{relative_drift, DriftColumn, DriftReport};
use super::temporal::{count_flips, extract_events, temporal_metrics, Matcher, TemporalReport};
use crate::dataio::FailureWindow;
use crate::detector::{decimation_for, detect_stream, LstmSmoother, Pipeline, TcnClassifier};
use crate::domain::{imu_labels, MotionLabel, Sequence, TrajectoryPoint, Vec3, DEFAULT_VELOCITY_THRESHOLD};
use crate::error::{Error, Result};
use crate::filter::{run_navigation, world_accelerations, GateMode, NavConfig, NavStats};

/// Trained models available to the gate.
#[derive(Debug, Clone, Copy, Default)]
pub struct Detectors<'a> {
    pub tcn: Option<&'a TcnClassifier>,
    pub smoother: Option<&'a LstmSmoother>,
}

impl<'a> Detectors<'a> {
    pub fn pluto(tcn: &'a TcnClassifier, smoother: &'a LstmSmoother) -> Self {
        Self {
            tcn: Some(tcn),
            smoother: Some(smoother),
        }
    }
}

/// Ground-truth labels per IMU sample: the stored labels if present,
/// otherwise thresholded ground-truth speed.
pub fn reference_labels(seq: &Sequence) -> Result<Vec<MotionLabel>> {
    match seq.label_values() {
        Some(l) => Ok(l),
        None => Ok(imu_labels(seq, DEFAULT_VELOCITY_THRESHOLD)?.into_iter().map(|(_, l)| l).collect()),
    }
}

/// Labels feeding the gate for `mode`, one per IMU sample. `None` when the
/// gate is off.
pub fn gate_labels(seq: &Sequence, cfg: &NavConfig, mode: GateMode, det: Detectors<'_>) -> Result<Option<Vec<MotionLabel>>> {
    let decimation = decimation_for(cfg.detector_rate_hz, cfg.imu_dt)?;
    let pipeline_labels = |p: Pipeline<'_>| -> Result<Vec<MotionLabel>> {
        let accel = world_accelerations(seq, cfg)?;
        Ok(detect_stream(p, &accel, decimation)?.labels)
    };
    let labels = match mode {
        GateMode::Off => return Ok(None),
        GateMode::Oracle => reference_labels(seq)?,
        GateMode::Otsu => pipeline_labels(Pipeline::Otsu)?,
        GateMode::Pluto => match (det.tcn, det.smoother) {
            (Some(t), Some(s)) => pipeline_labels(Pipeline::Pluto(t, s))?,
            _ => return Err(Error::Config("gate mode 'pluto' needs a trained classifier and smoother".into())),
        },
    };
    Ok(Some(labels))
}

/// One filter configuration of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentColumn {
    pub name: String,
    pub gate: GateMode,
    pub failure: bool,
}

impl ExperimentColumn {
    pub fn new(name: &str, gate: GateMode, failure: bool) -> Self {
        Self {
            name: name.to_string(),
            gate,
            failure,
        }
    }

    /// Plain filter without failures, gated filter with failures, plain
    /// filter with failures.
    pub fn standard() -> Vec<Self> {
        vec![
            Self::new("no-failure", GateMode::Off, false),
            Self::new("pluto+failure", GateMode::Pluto, true),
            Self::new("kf+failure", GateMode::Off, true),
        ]
    }
}

/// A test sequence with its tracking-failure window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCase {
    pub sequence: Sequence,
    pub failure: FailureWindow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRun {
    pub sequence: String,
    pub column: String,
    pub failure: Option<FailureWindow>,
    pub drift: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub stats: NavStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub report: DriftReport,
    /// Ordered by sequence, then column.
    pub runs: Vec<SequenceRun>,
}

/// Runs every column on every case and aggregates relative drift over
/// sequences. `cfg.gate_mode` is overridden per column.
pub fn run_failure_experiment(
    cases: &[ExperimentCase],
    columns: &[ExperimentColumn],
    cfg: &NavConfig,
    det: Detectors<'_>,
    path_len: f64,
) -> Result<ExperimentResult> {
    if cases.is_empty() || columns.is_empty() {
        return Err(Error::InsufficientData("experiment needs at least one sequence and one column".into()));
    }
    let mut runs = Vec::with_capacity(cases.len() * columns.len());
    for case in cases {
        let name = &case.sequence.name;
        runs.extend(run_case(case, columns, cfg, det, path_len).map_err(|e| e.in_sequence(name))?);
    }
    let report = DriftReport {
        sequences: cases.iter().map(|c| c.sequence.name.clone()).collect(),
        columns: columns
            .iter()
            .map(|col| {
                let values = runs.iter().filter(|r| r.column == col.name).map(|r| r.drift).collect();
                DriftColumn::new(&col.name, values)
            })
            .collect(),
    };
    Ok(ExperimentResult { report, runs })
}

/// All columns for one sequence. Detector labels are computed once per
/// gate mode.
pub fn run_case(
    case: &ExperimentCase,
    columns: &[ExperimentColumn],
    cfg: &NavConfig,
    det: Detectors<'_>,
    path_len: f64,
) -> Result<Vec<SequenceRun>> {
    let seq = &case.sequence;
    let gt_positions: Vec<Vec3> = crate::domain::align_poses(&seq.gt, &seq.imu_times())?
        .iter()
        .map(|p| p.position)
        .collect();
    let mut cached: Vec<(GateMode, Option<Vec<MotionLabel>>)> = Vec::new();
    let mut out = Vec::with_capacity(columns.len());
    for col in columns {
        let col_cfg = NavConfig {
            gate_mode: col.gate,
            ..cfg.clone()
        };
        let labels = match cached.iter().find(|(m, _)| *m == col.gate) {
            Some((_, l)) => l.clone(),
            None => {
                let l = gate_labels(seq, &col_cfg, col.gate, det)?;
                cached.push((col.gate, l.clone()));
                l
            }
        };
        let failure = col.failure.then_some(case.failure);
        let nav = run_navigation(seq, &col_cfg, failure.as_ref(), labels.as_deref())?;
        let est: Vec<Vec3> = nav.trajectory.iter().map(|p| p.position).collect();
        let drift = relative_drift(&est, &gt_positions, path_len)?;
        out.push(SequenceRun {
            sequence: seq.name.clone(),
            column: col.name.clone(),
            failure,
            drift,
            trajectory: nav.trajectory,
            stats: nav.stats,
        });
    }
    Ok(out)
}

/// Classification and event-timing scores of one detector on one or more
/// streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub pipeline: String,
    pub classification: ClassificationReport,
    pub temporal: TemporalReport,
    pub flips: usize,
    pub gt_flips: usize,
}

impl DetectionSummary {
    pub fn evaluate(
        pipeline: &str,
        times: &[f64],
        pred: &[MotionLabel],
        gt: &[MotionLabel],
        horizon: f64,
        matcher: Matcher,
    ) -> Result<Self> {
        if times.len() != pred.len() {
            return Err(Error::Validation(format!("{} timestamps for {} labels", times.len(), pred.len())));
        }
        let classification = classification_metrics(pred, gt)?;
        let zip = |l: &[MotionLabel]| -> Vec<(f64, MotionLabel)> { times.iter().copied().zip(l.iter().copied()).collect() };
        let temporal = temporal_metrics(&extract_events(&zip(pred)), &extract_events(&zip(gt)), horizon, matcher);
        Ok(Self {
            pipeline: pipeline.to_string(),
            classification,
            temporal,
            flips: count_flips(pred),
            gt_flips: count_flips(gt),
        })
    }

    /// Pools counts, delays and intervals; flips add up.
    pub fn merge(&mut self, other: &DetectionSummary) {
        self.classification = self.classification.merge(&other.classification);
        self.temporal.merge(&other.temporal);
        self.flips += other.flips;
        self.gt_flips += other.gt_flips;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{generate_sequence, MotionProfile, Segment, SegmentKind, SensorNoiseSpec};

    fn still_case(seconds: f64) -> ExperimentCase {
        let profile = MotionProfile::new(vec![
            Segment {
                duration: 2.0,
                kind: SegmentKind::ConstVel {
                    velocity: Vec3::new(1.0, 0.0, 0.0),
                },
            },
            Segment {
                duration: seconds,
                kind: SegmentKind::Still,
            },
        ]);
        let mut noise = SensorNoiseSpec::noiseless();
        noise.accel_bias = Vec3::new(0.05, -0.04, 0.02);
        let seq = generate_sequence("walk_then_stand", &profile, &noise, 500.0, 125.0).unwrap();
        ExperimentCase {
            sequence: seq,
            failure: FailureWindow::new(3.0, 6.0).unwrap(),
        }
    }

    #[test]
    fn oracle_gate_contains_drift_while_tracker_is_down() {
        let case = still_case(8.0);
        let cols = vec![
            ExperimentColumn::new("no-failure", GateMode::Off, false),
            ExperimentColumn::new("oracle+failure", GateMode::Oracle, true),
            ExperimentColumn::new("kf+failure", GateMode::Off, true),
        ];
        let cfg = NavConfig::default();
        let r = run_failure_experiment(&[case], &cols, &cfg, Detectors::default(), 1.0).unwrap();
        let d: Vec<f64> = r.report.columns.iter().map(|c| c.mean).collect();
        assert!(d[1] < d[2], "{d:?}");
        assert_eq!(r.runs.len(), 3);
    }

    #[test]
    fn pluto_without_models_is_a_config_error() {
        let case = still_case(3.0);
        let err = run_failure_experiment(&[case], &ExperimentColumn::standard(), &NavConfig::default(), Detectors::default(), 1.0)
            .unwrap_err();
        assert!(matches!(err.root(), Error::Config(_)), "{err}");
        assert!(err.to_string().contains("walk_then_stand"));
    }

    #[test]
    fn summary_counts_match_stream() {
        let times: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let s = MotionLabel::Stillness;
        let m = MotionLabel::Motion;
        let gt = [s, s, m, m, m, m, s, s, s, s];
        let pred = [s, s, s, m, m, m, m, s, m, s];
        let d = DetectionSummary::evaluate("x", &times, &pred, &gt, 5.0, Matcher::Optimal).unwrap();
        assert_eq!(d.classification.total(), 10);
        assert_eq!((d.flips, d.gt_flips), (4, 2));
        assert_eq!(d.temporal.combined().matched, 2);
        assert_eq!(d.temporal.combined().false_positives, 2);
    }
}
