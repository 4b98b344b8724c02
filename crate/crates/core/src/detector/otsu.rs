use crate::domain::{MotionLabel, Vec3};

pub const OTSU_BINS: usize = 256;

/// Adaptive threshold on the acceleration norm.
///
/// Keeps a histogram over the running value range; when a sample falls
/// outside, the range grows (with a 10 % margin) and existing counts are
/// re-binned by their bin centres. The threshold is the bin boundary that
/// maximizes the between-class variance.
#[derive(Debug, Clone)]
pub struct OtsuDetector {
    bins: Vec<f64>,
    lo: f64,
    hi: f64,
    count: u64,
    threshold: Option<f64>,
}

impl Default for OtsuDetector {
    fn default() -> Self {
        Self::new(OTSU_BINS)
    }
}

impl OtsuDetector {
    pub fn new(bins: usize) -> Self {
        Self {
            bins: vec![0.0; bins.max(2)],
            lo: 0.0,
            hi: 0.0,
            count: 0,
            threshold: None,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins.len() as f64
    }

    fn bin_of(&self, v: f64) -> usize {
        let w = self.width();
        if w <= 0.0 {
            return 0;
        }
        (((v - self.lo) / w).floor().max(0.0) as usize).min(self.bins.len() - 1)
    }

    fn expand(&mut self, v: f64) {
        let margin = 0.1 * (self.hi.max(v) - self.lo.min(v));
        let new_lo = if v < self.lo { v - margin } else { self.lo };
        let new_hi = if v > self.hi { v + margin } else { self.hi };
        let (old_lo, old_w) = (self.lo, self.width());
        let n = self.bins.len();
        let old = std::mem::replace(&mut self.bins, vec![0.0; n]);
        self.lo = new_lo;
        self.hi = new_hi;
        for (k, c) in old.into_iter().enumerate() {
            if c > 0.0 {
                let centre = if old_w > 0.0 { old_lo + (k as f64 + 0.5) * old_w } else { old_lo };
                let b = self.bin_of(centre);
                self.bins[b] += c;
            }
        }
    }

    /// Adds a value to the histogram and recomputes the threshold.
    pub fn update(&mut self, v: f64) {
        if !v.is_finite() {
            return;
        }
        if self.count == 0 {
            self.lo = v;
            self.hi = v;
        } else if v < self.lo || v > self.hi {
            self.expand(v);
        }
        let b = self.bin_of(v);
        self.bins[b] += 1.0;
        self.count += 1;
        self.threshold = otsu_threshold(&self.bins).map(|k| self.lo + k as f64 * self.width());
    }

    /// Motion iff `v` exceeds the current threshold; Stillness while fewer
    /// than two bins are populated.
    pub fn classify(&self, v: f64) -> MotionLabel {
        match self.threshold {
            Some(t) if v > t => MotionLabel::Motion,
            _ => MotionLabel::Stillness,
        }
    }

    pub fn update_classify(&mut self, accel: &Vec3) -> MotionLabel {
        let v = accel.norm();
        self.update(v);
        self.classify(v)
    }
}

/// Index `k` of the boundary between bins `k-1` and `k` maximizing the
/// between-class variance `w0 w1 (μ0 - μ1)²`, or `None` when fewer than two
/// bins are populated. Ties keep the lowest boundary.
pub fn otsu_threshold(hist: &[f64]) -> Option<usize> {
    if hist.iter().filter(|c| **c > 0.0).count() < 2 {
        return None;
    }
    let total: f64 = hist.iter().sum();
    let sum_all: f64 = hist.iter().enumerate().map(|(i, c)| i as f64 * c).sum();
    let (mut w0, mut s0) = (0.0, 0.0);
    let mut best: Option<(usize, f64)> = None;
    for k in 1..hist.len() {
        w0 += hist[k - 1];
        s0 += (k - 1) as f64 * hist[k - 1];
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = s0 / w0;
        let m1 = (sum_all - s0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if best.is_none_or(|(_, b)| var > b) {
            best = Some((k, var));
        }
    }
    best.map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over every boundary with explicit class sums.
    fn brute(hist: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for k in 1..hist.len() {
            let (a, b) = hist.split_at(k);
            let (wa, wb): (f64, f64) = (a.iter().sum(), b.iter().sum());
            if wa == 0.0 || wb == 0.0 {
                continue;
            }
            let ma = a.iter().enumerate().map(|(i, c)| i as f64 * c).sum::<f64>() / wa;
            let mb = b.iter().enumerate().map(|(i, c)| (i + k) as f64 * c).sum::<f64>() / wb;
            let v = wa * wb * (ma - mb).powi(2);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((k, v));
            }
        }
        best.map(|x| x.0)
    }

    #[test]
    fn incremental_search_matches_brute_force() {
        let hists = [
            vec![3.0, 0.0, 0.0, 5.0],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 1.0, 9.0],
            vec![0.0, 7.0, 7.0, 0.0, 0.0, 1.0],
        ];
        for h in &hists {
            assert_eq!(otsu_threshold(h), brute(h), "{h:?}");
        }
    }

    #[test]
    fn bimodal_threshold_separates_modes() {
        let mut d = OtsuDetector::default();
        for k in 0..400 {
            let jitter = ((k * 7919) % 13) as f64 * 0.002;
            d.update(if k % 2 == 0 { 0.1 + jitter } else { 1.0 + jitter });
        }
        let t = d.threshold().unwrap();
        // Above every low-mode sample, below every high-mode sample.
        assert!(t > 0.124 && t < 1.0, "{t}");
        assert_eq!(d.classify(0.9), MotionLabel::Motion);
        assert_eq!(d.classify(0.12), MotionLabel::Stillness);
    }

    #[test]
    fn identical_samples_are_stillness() {
        let mut d = OtsuDetector::default();
        for _ in 0..50 {
            assert_eq!(d.update_classify(&Vec3::new(0.0, 0.0, 0.3)), MotionLabel::Stillness);
        }
        assert!(d.threshold().is_none());
    }

    #[test]
    fn classification_is_consistent_with_threshold() {
        let mut d = OtsuDetector::default();
        for k in 0..300 {
            d.update((k as f64 * 0.7).sin().abs() * 2.0);
        }
        let t = d.threshold().unwrap();
        for k in 0..100 {
            let v = k as f64 * 0.03;
            let expected = if v > t { MotionLabel::Motion } else { MotionLabel::Stillness };
            assert_eq!(d.classify(v), expected);
        }
    }

    #[test]
    fn counts_survive_range_growth() {
        let mut d = OtsuDetector::default();
        for k in 0..100 {
            d.update(k as f64 * 0.01);
        }
        d.update(50.0);
        d.update(-0.0);
        let total: f64 = d.bins.iter().sum();
        assert_eq!(total as u64, d.count());
        assert!(d.range().0 <= 0.0 && d.range().1 >= 50.0);
    }
}
