//! `gatenav`: synthesize data, train the motion detector, run detection and
//! gated navigation, and aggregate the results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod common;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{detect, nav, report, synth, train};

#[derive(Debug, Parser)]
#[command(name = "gatenav", version, about = "Motion-detection-gated inertial navigation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic subjects from a profile spec.
    Synth(synth::SynthArgs),
    /// Train the window classifier and/or the logit smoother.
    Train(train::TrainArgs),
    /// Label sequences with a motion detector.
    Detect(detect::DetectArgs),
    /// Run the navigation filter, optionally with tracking failures.
    Nav(nav::NavArgs),
    /// Aggregate detection and navigation results into tables.
    Report(report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => synth::run(a),
        Command::Train(a) => train::run(a),
        Command::Detect(a) => detect::run(a),
        Command::Nav(a) => nav::run(a),
        Command::Report(a) => report::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
