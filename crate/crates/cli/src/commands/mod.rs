pub mod detect;
pub mod nav;
pub mod report;
pub mod synth;
pub mod train;
