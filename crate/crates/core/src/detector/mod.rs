//! Motion detector: sliding-window cache, dilated causal convolution
//! classifier, stateful LSTM logit smoother, Otsu baseline, training and
//! streaming inference.

mod cache;
mod otsu;
mod smoother;
mod stream;
mod tcn;
mod train;

pub use cache::{WindowCache, WINDOW};
pub use otsu::{otsu_threshold, OtsuDetector, OTSU_BINS};
pub use smoother::{LstmSmoother, SmootherConfig, SMOOTHER_MODEL};
pub use stream::{decimation_for, detect_stream, Detection, Pipeline, DEFAULT_DETECTOR_RATE};
pub use tcn::{TcnClassifier, TcnConfig, TCN_MODEL};
pub use train::{
    evaluate_windows, logit_streams, tcn_logit_stream, train_smoother, train_smoother_on_logits, train_tcn,
    write_training_log, EpochLog, LabeledStream, LogitStream, SmootherTrainConfig, TcnTrainConfig,
};
