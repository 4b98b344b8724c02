//! Test-protocol construction: cutting a long recording into test
//! sequences and drawing simulated tracking-failure windows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Sequence;
use crate::error::{Error, Result};

pub const DEFAULT_TEST_SEQUENCES: usize = 16;
pub const DEFAULT_LENGTH_RANGE: (f64, f64) = (5.0, 12.0);
pub const DEFAULT_FAILURE_RANGE: (f64, f64) = (2.0, 8.0);

/// Interval `[start, start + duration)` during which the tracker delivers
/// no velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureWindow {
    pub start: f64,
    pub duration: f64,
}

impl FailureWindow {
    pub fn new(start: f64, duration: f64) -> Result<Self> {
        if !start.is_finite() || !(duration >= 0.0) || !duration.is_finite() {
            return Err(Error::Validation(format!(
                "failure window needs finite start and duration >= 0 (start {start}, duration {duration})"
            )));
        }
        Ok(Self { start, duration })
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end()
    }
}

fn check_range(range: (f64, f64), what: &str) -> Result<()> {
    let (lo, hi) = range;
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::Validation(format!("{what} range ({lo}, {hi}) must satisfy 0 < lo <= hi")));
    }
    Ok(())
}

/// Common time span of the IMU and ground-truth streams.
fn common_span(seq: &Sequence) -> Result<(f64, f64)> {
    seq.validate()?;
    let a = seq.imu[0].t.max(seq.gt[0].t);
    let b = seq.imu[seq.imu.len() - 1].t.min(seq.gt[seq.gt.len() - 1].t);
    Ok((a, b))
}

/// Cuts `n` non-overlapping sub-sequences with lengths drawn uniformly from
/// `len_range` (upper bound lowered to `span / n` when needed), separated by
/// random gaps. Cut points snap to ground-truth sample times and every
/// sub-sequence is re-timed to start at zero.
pub fn split_test_sequences(seq: &Sequence, n: usize, len_range: (f64, f64), seed: u64) -> Result<Vec<Sequence>> {
    check_range(len_range, "length")?;
    if n == 0 {
        return Err(Error::Validation("number of test sequences must be positive".into()));
    }
    let (t0, t1) = common_span(seq)?;
    let span = t1 - t0;
    let (lo, hi) = len_range;
    let per = span / n as f64;
    if per + 1e-9 < lo {
        return Err(Error::Capacity {
            requested: n,
            max_feasible: (span / lo + 1e-9).floor() as usize,
            detail: format!("sequence '{}' spans {span:.3} s and each cut needs at least {lo} s", seq.name),
        });
    }
    let hi = hi.min(per).max(lo);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lengths: Vec<f64> = (0..n)
        .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect();
    let slack = (span - lengths.iter().sum::<f64>()).max(0.0);
    let weights: Vec<f64> = (0..=n).map(|_| rng.random::<f64>()).collect();
    let wsum: f64 = weights.iter().sum();
    let gaps: Vec<f64> = weights
        .iter()
        .map(|w| if wsum > 0.0 { slack * w / wsum } else { 0.0 })
        .collect();

    let gt_times: Vec<f64> = seq.gt.iter().map(|p| p.t).collect();
    let nearest = |t: f64| -> usize {
        let i = gt_times.partition_point(|&x| x < t);
        if i == 0 {
            0
        } else if i >= gt_times.len() {
            gt_times.len() - 1
        } else if t - gt_times[i - 1] <= gt_times[i] - t {
            i - 1
        } else {
            i
        }
    };

    let mut out = Vec::with_capacity(n);
    let mut cursor = t0;
    let mut prev_end_idx: Option<usize> = None;
    for k in 0..n {
        cursor += gaps[k];
        let mut s = nearest(cursor);
        if let Some(p) = prev_end_idx {
            s = s.max(p);
        }
        while gt_times[s] < t0 - 1e-12 {
            s += 1;
        }
        let target = gt_times[s] + lengths[k];
        let mut e = nearest(target).max(s);
        while e > s && gt_times[e] > t1 + 1e-12 {
            e -= 1;
        }
        let (a, b) = (gt_times[s], gt_times[e]);
        out.push(cut(seq, &format!("{}_{:02}", seq.name, k + 1), a, b)?);
        prev_end_idx = Some(e);
        cursor += lengths[k];
        cursor = cursor.max(b);
    }
    Ok(out)
}

/// Sub-sequence on `[a, b]` with timestamps shifted so that `a` becomes 0.
pub fn cut(seq: &Sequence, name: &str, a: f64, b: f64) -> Result<Sequence> {
    let eps = 1e-9;
    let imu_range = seq.imu.partition_point(|s| s.t < a - eps)..seq.imu.partition_point(|s| s.t <= b + eps);
    let gt_range = seq.gt.partition_point(|p| p.t < a - eps)..seq.gt.partition_point(|p| p.t <= b + eps);
    let imu = seq.imu[imu_range.clone()]
        .iter()
        .map(|s| {
            let mut s = *s;
            s.t -= a;
            s
        })
        .collect();
    let gt = seq.gt[gt_range]
        .iter()
        .map(|p| {
            let mut p = *p;
            p.t -= a;
            p
        })
        .collect();
    let labels = seq
        .labels
        .as_ref()
        .map(|l| l[imu_range].iter().map(|(t, m)| (t - a, *m)).collect());
    let sub = Sequence {
        name: name.to_string(),
        imu,
        gt,
        labels,
    };
    sub.validate().map_err(|e| e.in_sequence(name))?;
    Ok(sub)
}

/// Draws a failure window with duration uniform in `dur_range` (the upper
/// bound clipped to the sequence span) at a uniform offset that keeps it
/// inside the sequence.
pub fn make_failure_window(seq: &Sequence, dur_range: (f64, f64), seed: u64) -> Result<FailureWindow> {
    check_range(dur_range, "failure duration")?;
    let (t0, t1) = common_span(seq)?;
    let span = t1 - t0;
    let (lo, hi) = dur_range;
    if span + 1e-9 < lo {
        return Err(Error::InsufficientData(format!(
            "sequence '{}' spans {span:.3} s, shorter than the minimum failure duration {lo} s",
            seq.name
        )));
    }
    let hi = hi.min(span).max(lo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let room = (span - duration).max(0.0);
    let offset = if room > 0.0 { rng.random_range(0.0..=room) } else { 0.0 };
    FailureWindow::new(t0 + offset, duration)
}
