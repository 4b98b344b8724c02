//! Evaluation: classification scores, event timing, relative drift and the
//! tracking-failure experiment.

mod classification;
mod drift;
mod experiment;
mod temporal;

pub use classification::{classification_metrics, classification_metrics_timed, f1_score, ClassificationReport};
pub use experiment::{
    gate_labels, reference_labels, run_case, run_failure_experiment, DetectionSummary, Detectors, ExperimentCase,
    ExperimentColumn, ExperimentResult, SequenceRun,
};
pub use drift::{relative_drift, DriftColumn, DriftReport, DEFAULT_PATH_LENGTH};
pub use temporal::{
    count_flips, delay_histogram, extract_events, match_events, mean_std, temporal_metrics, EventKind, KindStats,
    Matcher, MeanStd, MotionEvent, TemporalReport, DEFAULT_MATCH_HORIZON,
};
