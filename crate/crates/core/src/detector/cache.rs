use std::collections::VecDeque;

use crate::domain::Vec3;

/// Samples per classifier window.
pub const WINDOW: usize = 100;

/// Sliding window over the most recent accelerations; consecutive windows
/// are shifted by exactly one sample.
#[derive(Debug, Clone)]
pub struct WindowCache {
    capacity: usize,
    buf: VecDeque<[f64; 3]>,
    seen: usize,
}

impl Default for WindowCache {
    fn default() -> Self {
        Self::new(WINDOW)
    }
}

impl WindowCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            buf: VecDeque::with_capacity(capacity.max(1)),
            seen: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    /// Total samples pushed since construction or the last reset.
    pub fn seen(&self) -> usize {
        self.seen
    }

    /// Adds a sample without materializing a window.
    pub fn push_sample(&mut self, accel: &Vec3) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back([accel.x, accel.y, accel.z]);
        self.seen += 1;
    }

    /// Adds a sample and returns the window once full, oldest first.
    pub fn push(&mut self, accel: &Vec3) -> Option<Vec<[f64; 3]>> {
        self.push_sample(accel);
        self.window()
    }

    pub fn window(&self) -> Option<Vec<[f64; 3]>> {
        self.is_full().then(|| self.buf.iter().copied().collect())
    }

    pub fn reset(&mut self) {
        self.buf.clear();
        self.seen = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(k: usize) -> Vec3 {
        Vec3::new(k as f64, 0.0, 0.0)
    }

    #[test]
    fn fill_and_shift() {
        let mut c = WindowCache::default();
        for k in 1..=99 {
            assert!(c.push(&sample(k)).is_none());
        }
        let w = c.push(&sample(100)).unwrap();
        assert_eq!(w.len(), 100);
        assert_eq!((w[0][0], w[99][0]), (1.0, 100.0));
        let w2 = c.push(&sample(101)).unwrap();
        assert_eq!((w2[0][0], w2[99][0]), (2.0, 101.0));
        assert_eq!(&w[1..], &w2[..99]);
    }
}
