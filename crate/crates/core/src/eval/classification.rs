use serde::{Deserialize, Serialize};

use crate::domain::MotionLabel;
use crate::error::{Error, Result};

/// Confusion counts and derived scores with Motion as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl ClassificationReport {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let total = tp + fp + tn + fn_;
        let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy: ratio(tp + tn, total),
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Pools the confusion counts of two reports.
    pub fn merge(&self, other: &Self) -> Self {
        Self::from_counts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn_ + other.fn_,
        )
    }
}

pub fn classification_metrics(pred: &[MotionLabel], gt: &[MotionLabel]) -> Result<ClassificationReport> {
    if pred.len() != gt.len() {
        return Err(Error::Validation(format!(
            "{} predicted labels for {} ground-truth labels",
            pred.len(),
            gt.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (p, g) in pred.iter().zip(gt) {
        match (p, g) {
            (MotionLabel::Motion, MotionLabel::Motion) => tp += 1,
            (MotionLabel::Motion, MotionLabel::Stillness) => fp += 1,
            (MotionLabel::Stillness, MotionLabel::Stillness) => tn += 1,
            (MotionLabel::Stillness, MotionLabel::Motion) => fn_ += 1,
        }
    }
    Ok(ClassificationReport::from_counts(tp, fp, tn, fn_))
}

/// Same as [`classification_metrics`] on timestamped labels, additionally
/// requiring the timestamps to agree.
pub fn classification_metrics_timed(
    pred: &[(f64, MotionLabel)],
    gt: &[(f64, MotionLabel)],
) -> Result<ClassificationReport> {
    if pred.len() == gt.len() {
        if let Some(k) = pred.iter().zip(gt).position(|(a, b)| (a.0 - b.0).abs() > 1e-9) {
            return Err(Error::Validation(format!(
                "label {k}: predicted at t={} but ground truth at t={}",
                pred[k].0, gt[k].0
            )));
        }
    }
    let p: Vec<MotionLabel> = pred.iter().map(|x| x.1).collect();
    let g: Vec<MotionLabel> = gt.iter().map(|x| x.1).collect();
    classification_metrics(&p, &g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use MotionLabel::{Motion as M, Stillness as S};

    #[test]
    fn perfect_prediction_scores_one() {
        let gt = [S, M, M, S, M];
        let r = classification_metrics(&gt, &gt).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
        let all_still = [S; 4];
        let r = classification_metrics(&all_still, &all_still).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn constant_motion_on_balanced_stream() {
        let gt = [M, S, M, S, M, S, M, S];
        let r = classification_metrics(&[M; 8], &gt).unwrap();
        assert_eq!((r.tp, r.fp, r.tn, r.fn_), (4, 4, 0, 0));
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.total(), 8);
    }

    #[test]
    fn f1_of_reported_precision_and_recall() {
        let f1 = f1_score(0.825, 0.960);
        assert_eq!((f1 * 1000.0).round() / 1000.0, 0.887);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(classification_metrics(&[M], &[M, S]).is_err());
    }
}
