//! Motion-detection-gated inertial navigation.
//!
//! A Kalman filter predicts translation and velocity from world-frame
//! accelerations and corrects with tracker velocities. A two-class motion
//! detector (a dilated causal convolution classifier followed by a stateful
//! LSTM smoother over its logits) decides when the wearer stands still; in
//! that state both filter inputs are replaced by zero pseudo-updates, which
//! bounds drift while the tracker is unavailable.
//!
//! Modules:
//! - [`domain`]: samples, labels, time alignment and ground-truth labelling;
//! - [`dataio`]: CSV persistence, the synthetic trajectory/IMU generator and
//!   the test-protocol helpers (sequence splitting, failure windows);
//! - [`detector`]: window cache, classifier, smoother, Otsu baseline, training;
//! - [`filter`]: preprocessing, Kalman predict/correct, gating, navigation runs;
//! - [`eval`]: classification, temporal and drift metrics and the failure
//!   experiment.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod detector;
pub mod domain;
pub mod error;
pub mod eval;
pub mod filter;

pub use domain::{ImuSample, MotionLabel, PoseSample, Sequence, TrajectoryPoint, Vec3};
pub use error::{Error, Result};
