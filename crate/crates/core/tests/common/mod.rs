//! Independent oracles shared by the integration tests.


use gatenav::eval::{extract_events, EventKind, MotionEvent};
use gatenav::MotionLabel;

/// Best one-to-one matching by exhaustive search: most pairs, then least
/// total delay. A prediction `p` may pair with ground truth `g` when
/// `g <= p < g + horizon`. Returns `(pairs, total delay)`.
pub fn brute_force_match(gt: &[f64], pred: &[f64], horizon: f64) -> (usize, f64) {
    fn go(i: usize, gt: &[f64], pred: &[f64], used: &mut Vec<bool>, horizon: f64) -> (usize, f64) {
        if i == gt.len() {
            return (0, 0.0);
        }
        // Leave gt[i] unmatched.
        let mut best = go(i + 1, gt, pred, used, horizon);
        for j in 0..pred.len() {
            if !used[j] && pred[j] >= gt[i] && pred[j] < gt[i] + horizon {
                used[j] = true;
                let (n, d) = go(i + 1, gt, pred, used, horizon);
                used[j] = false;
                let cand = (n + 1, d + pred[j] - gt[i]);
                if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1 - 1e-12) {
                    best = cand;
                }
            }
        }
        best
    }
    go(0, gt, pred, &mut vec![false; pred.len()], horizon)
}

/// Event times of one kind.
pub fn times_of(events: &[MotionEvent], kind: EventKind) -> Vec<f64> {
    events.iter().filter(|e| e.kind == kind).map(|e| e.t).collect()
}

/// Label stream from the bits of `code`, one sample per `dt` seconds.
pub fn stream_from_bits(code: u32, len: usize, dt: f64) -> Vec<(f64, MotionLabel)> {
    (0..len)
        .map(|k| {
            let l = if code >> k & 1 == 1 { MotionLabel::Motion } else { MotionLabel::Stillness };
            (k as f64 * dt, l)
        })
        .collect()
}

pub fn events_of(code: u32, len: usize, dt: f64) -> Vec<MotionEvent> {
    extract_events(&stream_from_bits(code, len, dt))
}
