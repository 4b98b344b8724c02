//! Motion start/stop events, detection delays and false-positive intervals.

use serde::{Deserialize, Serialize};

use crate::domain::MotionLabel;

pub const DEFAULT_MATCH_HORIZON: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Start,
    Stop,
}

impl EventKind {
    pub const BOTH: [EventKind; 2] = [EventKind::Start, EventKind::Stop];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Start => "start",
            EventKind::Stop => "stop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionEvent {
    pub kind: EventKind,
    pub t: f64,
}

/// Start at each stillness→motion transition, Stop at each
/// motion→stillness transition. The first label produces no event.
pub fn extract_events(labels: &[(f64, MotionLabel)]) -> Vec<MotionEvent> {
    labels
        .windows(2)
        .filter_map(|w| match (w[0].1, w[1].1) {
            (MotionLabel::Stillness, MotionLabel::Motion) => Some(MotionEvent {
                kind: EventKind::Start,
                t: w[1].0,
            }),
            (MotionLabel::Motion, MotionLabel::Stillness) => Some(MotionEvent {
                kind: EventKind::Stop,
                t: w[1].0,
            }),
            _ => None,
        })
        .collect()
}

/// Number of label changes in a stream.
pub fn count_flips(labels: &[MotionLabel]) -> usize {
    labels.windows(2).filter(|w| w[0] != w[1]).count()
}

/// How ground-truth events are paired with predicted events of the same
/// kind. A prediction `p` may match a ground-truth event `g` only when
/// `g.t <= p.t < g.t + horizon`; each event is used at most once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    /// Most matched pairs, ties broken by least total delay.
    #[default]
    Optimal,
    /// Each ground-truth event in time order takes the earliest unused
    /// admissible prediction.
    Greedy,
}

/// `(gt index, pred index)` pairs, sorted by ground-truth index.
pub fn match_events(gt: &[f64], pred: &[f64], horizon: f64, matcher: Matcher) -> Vec<(usize, usize)> {
    let admissible = |g: f64, p: f64| p >= g && p < g + horizon;
    match matcher {
        Matcher::Greedy => {
            let mut used = vec![false; pred.len()];
            let mut pairs = Vec::new();
            for (i, &g) in gt.iter().enumerate() {
                if let Some(j) = (0..pred.len()).find(|&j| !used[j] && admissible(g, pred[j])) {
                    used[j] = true;
                    pairs.push((i, j));
                }
            }
            pairs
        }
        Matcher::Optimal => {
            // With both lists sorted, some optimal matching is non-crossing:
            // swapping two crossed admissible pairs keeps them admissible and
            // leaves the delay sum unchanged. A prefix DP therefore suffices.
            let (n, m) = (gt.len(), pred.len());
            let better = |a: (usize, f64), b: (usize, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
            let mut dp = vec![vec![(0usize, 0.0f64); m + 1]; n + 1];
            for i in 1..=n {
                for j in 1..=m {
                    let mut best = dp[i - 1][j];
                    if better(dp[i][j - 1], best) {
                        best = dp[i][j - 1];
                    }
                    if admissible(gt[i - 1], pred[j - 1]) {
                        let prev = dp[i - 1][j - 1];
                        let cand = (prev.0 + 1, prev.1 + (pred[j - 1] - gt[i - 1]));
                        if better(cand, best) {
                            best = cand;
                        }
                    }
                    dp[i][j] = best;
                }
            }
            let mut pairs = Vec::new();
            let (mut i, mut j) = (n, m);
            while i > 0 && j > 0 {
                if dp[i][j] == dp[i - 1][j] {
                    i -= 1;
                } else if dp[i][j] == dp[i][j - 1] {
                    j -= 1;
                } else {
                    pairs.push((i - 1, j - 1));
                    i -= 1;
                    j -= 1;
                }
            }
            pairs.reverse();
            pairs
        }
    }
}

/// Raw per-kind outcomes, pooled over any number of sequences.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub gt_events: usize,
    pub pred_events: usize,
    pub matched: usize,
    pub false_positives: usize,
    pub delays: Vec<f64>,
    /// Gaps between consecutive false positives within one sequence.
    pub fp_intervals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Mean and sample standard deviation; `None` for an empty slice. The
/// deviation of a single value is 0.
pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(MeanStd { mean, std, n })
}

impl KindStats {
    pub fn merge(&mut self, other: &KindStats) {
        self.gt_events += other.gt_events;
        self.pred_events += other.pred_events;
        self.matched += other.matched;
        self.false_positives += other.false_positives;
        self.delays.extend_from_slice(&other.delays);
        self.fp_intervals.extend_from_slice(&other.fp_intervals);
    }

    pub fn delay(&self) -> Option<MeanStd> {
        mean_std(&self.delays)
    }

    /// `None` when fewer than two false positives occurred in every
    /// sequence, so that no interval exists.
    pub fn fp_interval(&self) -> Option<MeanStd> {
        mean_std(&self.fp_intervals)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalReport {
    pub horizon: f64,
    pub matcher: Matcher,
    pub start: KindStats,
    pub stop: KindStats,
}

impl TemporalReport {
    pub fn empty(horizon: f64, matcher: Matcher) -> Self {
        Self {
            horizon,
            matcher,
            start: KindStats::default(),
            stop: KindStats::default(),
        }
    }

    pub fn kind(&self, kind: EventKind) -> &KindStats {
        match kind {
            EventKind::Start => &self.start,
            EventKind::Stop => &self.stop,
        }
    }

    pub fn merge(&mut self, other: &TemporalReport) {
        self.start.merge(&other.start);
        self.stop.merge(&other.stop);
    }

    /// Both kinds pooled.
    pub fn combined(&self) -> KindStats {
        let mut all = self.start.clone();
        all.merge(&self.stop);
        all
    }
}

/// Matches the events of one sequence kind by kind.
pub fn temporal_metrics(
    pred: &[MotionEvent],
    gt: &[MotionEvent],
    horizon: f64,
    matcher: Matcher,
) -> TemporalReport {
    let mut report = TemporalReport::empty(horizon, matcher);
    for kind in EventKind::BOTH {
        let g: Vec<f64> = gt.iter().filter(|e| e.kind == kind).map(|e| e.t).collect();
        let p: Vec<f64> = pred.iter().filter(|e| e.kind == kind).map(|e| e.t).collect();
        let pairs = match_events(&g, &p, horizon, matcher);
        let mut matched_pred = vec![false; p.len()];
        let mut stats = KindStats {
            gt_events: g.len(),
            pred_events: p.len(),
            matched: pairs.len(),
            ..KindStats::default()
        };
        for &(i, j) in &pairs {
            matched_pred[j] = true;
            stats.delays.push(p[j] - g[i]);
        }
        let fps: Vec<f64> = p.iter().zip(&matched_pred).filter(|(_, m)| !**m).map(|(t, _)| *t).collect();
        stats.false_positives = fps.len();
        stats.fp_intervals = fps.windows(2).map(|w| w[1] - w[0]).collect();
        match kind {
            EventKind::Start => report.start = stats,
            EventKind::Stop => report.stop = stats,
        }
    }
    report
}

/// Delay histogram with fixed-width bins starting at 0; the last bin
/// collects everything at or above its lower edge.
pub fn delay_histogram(delays: &[f64], bin_width: f64, bins: usize) -> Vec<(f64, usize)> {
    let mut counts = vec![0usize; bins.max(1)];
    for &d in delays {
        let k = ((d / bin_width).floor().max(0.0) as usize).min(counts.len() - 1);
        counts[k] += 1;
    }
    counts.into_iter().enumerate().map(|(k, c)| (k as f64 * bin_width, c)).collect()
}
