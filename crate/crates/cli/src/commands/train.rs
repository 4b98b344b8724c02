//! `gatenav train`: staged training of the classifier and the smoother.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use gatenav::detector::{
    logit_streams, train_smoother_on_logits, train_tcn, write_training_log, LabeledStream, SmootherConfig,
    SmootherTrainConfig, TcnConfig, TcnTrainConfig,
};
use gatenav::Error;
use serde::Serialize;

use crate::common::{load_sequences, load_tcn, save_checkpoint, ConfigArgs, JobsArgs, SMOOTHER_FILE, TCN_FILE};
use crate::error::{CliError, CliResult};
use crate::manifest::{atomic, create_dir, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Tcn,
    Smoother,
    Both,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory (one labelled sequence per subject).
    pub dataset: PathBuf,
    /// Output directory for checkpoints and training logs.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Stage::Both)]
    pub stage: Stage,
    /// Subject left out of training.
    #[arg(long)]
    pub held_out_subject: Option<String>,
    /// Classifier checkpoint for `--stage smoother`; defaults to the one in
    /// the output directory.
    #[arg(long)]
    pub tcn: Option<PathBuf>,
    /// Seed of the classifier; the smoother uses seed + 1.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub windows_per_epoch: Option<usize>,
    #[arg(long)]
    pub smoother_epochs: Option<usize>,
    #[arg(long)]
    pub smoother_lr: Option<f64>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

#[derive(Serialize)]
struct TrainSnapshot<'a> {
    stage: Stage,
    held_out_subject: Option<&'a str>,
    training_subjects: Vec<&'a str>,
    tcn_model: TcnConfig,
    tcn_training: &'a TcnTrainConfig,
    smoother_model: SmootherConfig,
    smoother_training: &'a SmootherTrainConfig,
    nav: &'a gatenav::filter::NavConfig,
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = args.config.load()?;
    let sequences = load_sequences(&args.dataset)?;
    if let Some(h) = &args.held_out_subject {
        if !sequences.iter().any(|s| &s.name == h) {
            let names: Vec<&str> = sequences.iter().map(|s| s.name.as_str()).collect();
            return Err(Error::Validation(format!(
                "held-out subject '{h}' not found; available: {}",
                names.join(", ")
            ))
            .into());
        }
    }
    let training: Vec<_> = sequences
        .iter()
        .filter(|s| Some(&s.name) != args.held_out_subject.as_ref())
        .collect();
    if training.is_empty() {
        return Err(Error::InsufficientData("no subjects left for training".into()).into());
    }
    let corpus: Vec<LabeledStream> = args.jobs.map(&training, |s| Ok(LabeledStream::from_sequence(s, &cfg)?))?;

    let defaults = TcnTrainConfig::default();
    let tc = TcnTrainConfig {
        epochs: args.epochs.unwrap_or(defaults.epochs),
        lr: args.lr.unwrap_or(defaults.lr),
        windows_per_epoch: args.windows_per_epoch.unwrap_or(defaults.windows_per_epoch),
        seed: args.seed,
        ..defaults
    };
    let sd = SmootherTrainConfig::default();
    let sc = SmootherTrainConfig {
        epochs: args.smoother_epochs.unwrap_or(sd.epochs),
        lr: args.smoother_lr.unwrap_or(sd.lr),
        seed: args.seed.wrapping_add(1),
        decimation: gatenav::detector::decimation_for(cfg.detector_rate_hz, cfg.imu_dt)?,
        ..sd
    };
    create_dir(&args.out)?;
    let mut outputs = Vec::new();
    let mut manifest = RunManifest::new("train").input(&args.dataset);

    let tcn = if matches!(args.stage, Stage::Tcn | Stage::Both) {
        let (model, log) = train_tcn(TcnConfig::default(), &corpus, &tc)?;
        let ck = args.out.join(TCN_FILE);
        save_checkpoint(&ck, &model.to_checkpoint())?;
        let log_path = args.out.join("tcn_log.csv");
        atomic(&log_path, |tmp| Ok(write_training_log(tmp, &log)?))?;
        report_last("classifier", &log);
        outputs.extend([ck, log_path]);
        manifest = manifest.seed("tcn", tc.seed);
        model
    } else {
        let path = args.tcn.clone().unwrap_or_else(|| args.out.join(TCN_FILE));
        if !path.is_file() {
            return Err(CliError::Core(Error::Config(format!(
                "stage 'smoother' needs a trained classifier; {} does not exist (pass --tcn)",
                path.display()
            ))));
        }
        manifest = manifest.input(&path);
        load_tcn(&path)?
    };

    if matches!(args.stage, Stage::Smoother | Stage::Both) {
        let streams = logit_streams(&tcn, &corpus, sc.decimation)?;
        let (model, log) = train_smoother_on_logits(&streams, SmootherConfig::default(), &sc)?;
        let ck = args.out.join(SMOOTHER_FILE);
        save_checkpoint(&ck, &model.to_checkpoint())?;
        let log_path = args.out.join("smoother_log.csv");
        atomic(&log_path, |tmp| Ok(write_training_log(tmp, &log)?))?;
        report_last("smoother", &log);
        outputs.extend([ck, log_path]);
        manifest = manifest.seed("smoother", sc.seed);
    }

    let snapshot = TrainSnapshot {
        stage: args.stage,
        held_out_subject: args.held_out_subject.as_deref(),
        training_subjects: training.iter().map(|s| s.name.as_str()).collect(),
        tcn_model: tcn.config,
        tcn_training: &tc,
        smoother_model: SmootherConfig::default(),
        smoother_training: &sc,
        nav: &cfg,
    };
    manifest.config(&snapshot).finish(&args.out, outputs, started)?;
    Ok(())
}

fn report_last(what: &str, log: &[gatenav::detector::EpochLog]) {
    for row in log.iter().rev().take_while(|r| r.epoch == log[log.len() - 1].epoch).collect::<Vec<_>>().iter().rev() {
        println!(
            "{what} epoch {} {}: accuracy {:.4}, loss {:.4}",
            row.epoch, row.split, row.accuracy, row.loss
        );
    }
}
