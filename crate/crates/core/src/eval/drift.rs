use serde::{Deserialize, Serialize};

use super::temporal::mean_std;
use crate::domain::Vec3;
use crate::error::{Error, Result};

pub const DEFAULT_PATH_LENGTH: f64 = 1.0;

/// Mean relative drift in percent.
///
/// For every sample `t` at which the ground-truth polyline has covered at
/// least `path_len` metres, the reference point `r` is where the arc length
/// up to `t` equals exactly `path_len` (interpolated along the polyline, the
/// latest such point when the path pauses). The drift at `t` is
/// `|(est(t) - est(r)) - (gt(t) - gt(r))| / path_len * 100`.
pub fn relative_drift(est: &[Vec3], gt: &[Vec3], path_len: f64) -> Result<f64> {
    if est.len() != gt.len() {
        return Err(Error::Validation(format!(
            "{} estimated positions for {} ground-truth positions",
            est.len(),
            gt.len()
        )));
    }
    if !(path_len > 0.0) {
        return Err(Error::Validation(format!("path length must be positive, got {path_len}")));
    }
    let mut arc = Vec::with_capacity(gt.len());
    let mut s = 0.0;
    for (k, p) in gt.iter().enumerate() {
        if k > 0 {
            s += (p - gt[k - 1]).norm();
        }
        arc.push(s);
    }
    if gt.is_empty() || s < path_len {
        return Err(Error::UndefinedDrift(format!(
            "ground-truth path is {s:.4} m, shorter than the {path_len} m reference"
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for k in 0..gt.len() {
        let target = arc[k] - path_len;
        if target < 0.0 {
            continue;
        }
        // Latest index j with arc[j] <= target; the reference lies on the
        // segment j..j+1.
        let j = arc.partition_point(|&a| a <= target).saturating_sub(1);
        let (est_r, gt_r) = if j + 1 < arc.len() && arc[j + 1] > arc[j] {
            let f = ((target - arc[j]) / (arc[j + 1] - arc[j])).clamp(0.0, 1.0);
            (est[j] + (est[j + 1] - est[j]) * f, gt[j] + (gt[j + 1] - gt[j]) * f)
        } else {
            (est[j], gt[j])
        };
        let err = (est[k] - est_r) - (gt[k] - gt_r);
        total += err.norm() / path_len * 100.0;
        count += 1;
    }
    Ok(total / count as f64)
}

/// Per-sequence drift for one filter configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftColumn {
    pub config: String,
    pub per_sequence: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over sequences.
    pub std: f64,
}

impl DriftColumn {
    pub fn new(config: &str, per_sequence: Vec<f64>) -> Self {
        let s = mean_std(&per_sequence).map(|m| (m.mean, m.std)).unwrap_or((f64::NAN, f64::NAN));
        Self {
            config: config.to_string(),
            per_sequence,
            mean: s.0,
            std: s.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub sequences: Vec<String>,
    pub columns: Vec<DriftColumn>,
}

impl DriftReport {
    pub fn column(&self, config: &str) -> Option<&DriftColumn> {
        self.columns.iter().find(|c| c.config == config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, speed: f64, dt: f64) -> Vec<Vec3> {
        (0..n).map(|k| Vec3::new(speed * k as f64 * dt, 0.0, 0.0)).collect()
    }

    #[test]
    fn perfect_estimate_has_zero_drift() {
        let gt = line(500, 1.0, 0.01);
        assert_eq!(relative_drift(&gt, &gt, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_cancels() {
        let gt = line(500, 1.0, 0.01);
        let est: Vec<Vec3> = gt.iter().map(|p| p + Vec3::new(3.0, -2.0, 1.0)).collect();
        assert!(relative_drift(&est, &gt, 1.0).unwrap() < 1e-9);
    }

    #[test]
    fn five_percent_speed_error_gives_five_percent() {
        let gt = line(1000, 1.0, 0.01);
        let est = line(1000, 1.05, 0.01);
        assert!((relative_drift(&est, &gt, 1.0).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn short_path_is_undefined() {
        let gt = line(50, 1.0, 0.01);
        assert!(matches!(relative_drift(&gt, &gt, 1.0), Err(Error::UndefinedDrift(_))));
    }

    #[test]
    fn error_accumulated_while_paused_counts_as_drift() {
        // 1 m of walking, a pause during which the estimate jumps by 0.5 m,
        // then 1 m more. Every sample after the jump has a reference before
        // it, except the very last, whose reference is the end of the pause.
        let mut gt = line(101, 1.0, 0.01);
        let mut est = gt.clone();
        for _ in 0..50 {
            gt.push(Vec3::new(1.0, 0.0, 0.0));
            est.push(Vec3::new(1.5, 0.0, 0.0));
        }
        for k in 1..=100 {
            let x = 1.0 + k as f64 * 0.01;
            gt.push(Vec3::new(x, 0.0, 0.0));
            est.push(Vec3::new(x + 0.5, 0.0, 0.0));
        }
        let d = relative_drift(&est, &gt, 1.0).unwrap();
        // 50 % everywhere except at most two boundary samples out of ~150.
        assert!(d > 49.0 && d <= 50.0 + 1e-9, "{d}");
    }
}
