//! Sequence persistence, the synthetic data generator and the test
//! protocol.

mod csvio;
mod protocol;
mod synth;

pub use csvio::{
    format_time, list_sequence_dirs, read_dataset, read_gt, read_imu, read_labels, read_sequence, read_trajectory,
    write_gt, write_imu, write_labels, write_sequence, write_trajectory, GT_FILE, IMU_FILE, LABELS_FILE,
};
pub use protocol::{
    cut, make_failure_window, split_test_sequences, FailureWindow, DEFAULT_FAILURE_RANGE, DEFAULT_LENGTH_RANGE,
    DEFAULT_TEST_SEQUENCES,
};
pub use synth::{
    generate_from_kinematics, generate_sequence, synthetic_subjects, yaw_quat, Kinematics, MotionProfile,
    ProfileTrajectory, Segment, SegmentKind, SensorNoiseSpec, SubjectSpec, BLEND_TIME, DEFAULT_GT_RATE,
    DEFAULT_IMU_RATE, STANDARD_GRAVITY,
};
