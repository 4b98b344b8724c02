use super::cache::WindowCache;
use super::otsu::OtsuDetector;
use super::smoother::LstmSmoother;
use super::tcn::TcnClassifier;
use crate::domain::{MotionLabel, Vec3};
use crate::error::{Error, Result};

/// Default detector rate, Hz.
pub const DEFAULT_DETECTOR_RATE: f64 = 10.0;

/// A motion detector applied to an acceleration stream.
#[derive(Debug, Clone, Copy)]
pub enum Pipeline<'a> {
    /// Labels passed through unchanged.
    Oracle(&'a [MotionLabel]),
    Otsu,
    Tcn(&'a TcnClassifier),
    /// Classifier followed by the smoother; the smoother starts from a
    /// fresh state for each stream.
    Pluto(&'a TcnClassifier, &'a LstmSmoother),
}

impl Pipeline<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Oracle(_) => "oracle",
            Pipeline::Otsu => "otsu",
            Pipeline::Tcn(_) => "tcn",
            Pipeline::Pluto(..) => "pluto",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// One label per input sample.
    pub labels: Vec<MotionLabel>,
    /// Samples at which the detector was consulted: `⌈N / decimation⌉`.
    pub ticks: usize,
    /// Ticks at which a full window reached the classifier; earlier ticks
    /// are answered by the warm-up rule (Stillness).
    pub model_calls: usize,
}

/// Decimation factor for running a detector at `rate_hz` on an IMU stream
/// sampled with period `imu_dt`.
pub fn decimation_for(rate_hz: f64, imu_dt: f64) -> Result<usize> {
    let imu_rate = 1.0 / imu_dt;
    if !(rate_hz > 0.0) || rate_hz > imu_rate * (1.0 + 1e-9) {
        return Err(Error::Config(format!(
            "detector rate {rate_hz} Hz must be in (0, {imu_rate}] Hz (the IMU rate)"
        )));
    }
    Ok(((imu_rate / rate_hz).round() as usize).max(1))
}

/// Runs a pipeline over world-frame accelerations.
///
/// The detector is consulted at samples `i` with `i % decimation == 0` and
/// its label is held until the next consultation. Every sample still enters
/// the window cache (and the Otsu histogram). While the window is not yet
/// full the label is Stillness.
pub fn detect_stream(pipeline: Pipeline<'_>, accel: &[Vec3], decimation: usize) -> Result<Detection> {
    if decimation == 0 {
        return Err(Error::Config("decimation must be at least 1".into()));
    }
    let n = accel.len();
    if let Pipeline::Oracle(labels) = pipeline {
        if labels.len() != n {
            return Err(Error::Validation(format!(
                "{} oracle labels for {n} samples",
                labels.len()
            )));
        }
        return Ok(Detection {
            labels: labels.to_vec(),
            ticks: n.div_ceil(decimation),
            model_calls: 0,
        });
    }
    let mut cache = match pipeline {
        Pipeline::Tcn(m) | Pipeline::Pluto(m, _) => WindowCache::new(m.config.window),
        _ => WindowCache::default(),
    };
    let mut otsu = OtsuDetector::default();
    let mut smoother = match pipeline {
        Pipeline::Pluto(_, s) => {
            let mut s = s.clone();
            s.reset();
            Some(s)
        }
        _ => None,
    };
    let mut labels = Vec::with_capacity(n);
    let mut current = MotionLabel::Stillness;
    let (mut ticks, mut calls) = (0, 0);
    for (i, a) in accel.iter().enumerate() {
        cache.push_sample(a);
        let otsu_label = matches!(pipeline, Pipeline::Otsu).then(|| otsu.update_classify(a));
        if i % decimation == 0 {
            ticks += 1;
            current = match pipeline {
                Pipeline::Otsu => otsu_label.unwrap_or(MotionLabel::Stillness),
                Pipeline::Tcn(m) | Pipeline::Pluto(m, _) => match cache.window() {
                    None => MotionLabel::Stillness,
                    Some(w) => {
                        calls += 1;
                        let logits = m.infer(&w)?;
                        match smoother.as_mut() {
                            Some(s) => s.step(&logits)?.0,
                            None => MotionLabel::from_class_index(usize::from(logits[1] > logits[0])),
                        }
                    }
                },
                Pipeline::Oracle(_) => unreachable!("handled above"),
            };
        }
        labels.push(current);
    }
    Ok(Detection {
        labels,
        ticks,
        model_calls: calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::tcn::TcnConfig;

    #[test]
    fn oracle_passes_labels_through() {
        let gt: Vec<MotionLabel> = (0..300)
            .map(|k| if (k / 40) % 2 == 0 { MotionLabel::Stillness } else { MotionLabel::Motion })
            .collect();
        let accel = vec![Vec3::zeros(); 300];
        let d = detect_stream(Pipeline::Oracle(&gt), &accel, 50).unwrap();
        assert_eq!(d.labels, gt);
    }

    #[test]
    fn decimated_ticks_and_hold() {
        let m = TcnClassifier::new(TcnConfig::default(), 1).unwrap();
        let accel: Vec<Vec3> = (0..1234).map(|k| Vec3::new((k as f64 * 0.1).sin(), 0.0, 0.0)).collect();
        let d = detect_stream(Pipeline::Tcn(&m), &accel, 50).unwrap();
        assert_eq!(d.ticks, 1234usize.div_ceil(50));
        // Ticks at 0 and 50 precede a full window.
        assert_eq!(d.model_calls, d.ticks - 2);
        assert_eq!(d.labels.len(), 1234);
        for (i, l) in d.labels.iter().enumerate() {
            if i % 50 != 0 {
                assert_eq!(*l, d.labels[i - 1]);
            }
            if i < 100 {
                assert_eq!(*l, MotionLabel::Stillness);
            }
        }
    }

    #[test]
    fn rate_above_imu_rate_is_rejected() {
        assert_eq!(decimation_for(10.0, 0.002).unwrap(), 50);
        assert!(decimation_for(600.0, 0.002).is_err());
        assert!(decimation_for(0.0, 0.002).is_err());
    }
}
