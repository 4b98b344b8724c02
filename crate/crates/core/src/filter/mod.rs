//! Navigation filter: preprocessing, Kalman predict/correct with empirical
//! noise windows, the stillness gate and whole-sequence runs.

mod config;
mod kalman;
mod nav;
mod preprocess;

pub use config::{GateMode, GateScope, NavConfig, CONFIG_KEYS};
pub use kalman::{correct, predict, Correction, CovarianceWindow, FilterState, Mat6, Vec6};
pub use nav::{gate, run_navigation, world_accelerations, GateDecision, NavOutput, NavStats};
pub use preprocess::{HighPass, Preprocessor};
