//! `gatenav detect`: streaming motion detection over recorded sequences.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use gatenav::dataio::{write_labels, LABELS_FILE};
use gatenav::detector::{decimation_for, detect_stream, Pipeline};
use gatenav::eval::{reference_labels, DetectionSummary, Matcher, DEFAULT_MATCH_HORIZON};
use gatenav::filter::world_accelerations;
use gatenav::Error;
use serde::{Deserialize, Serialize};

use crate::common::{load_sequences, load_smoother, load_tcn, ConfigArgs, JobsArgs, RESULTS_FILE, SMOOTHER_FILE, TCN_FILE};
use crate::error::{CliError, CliResult};
use crate::manifest::{atomic, create_dir, write_json, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineKind {
    /// Classifier followed by the smoother.
    Pluto,
    /// Classifier alone.
    Tcn,
    /// Adaptive threshold baseline; needs no models.
    Otsu,
}

impl PipelineKind {
    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::Pluto => "pluto",
            PipelineKind::Tcn => "tcn",
            PipelineKind::Otsu => "otsu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherKind {
    Optimal,
    Greedy,
}

impl From<MatcherKind> for Matcher {
    fn from(m: MatcherKind) -> Self {
        match m {
            MatcherKind::Optimal => Matcher::Optimal,
            MatcherKind::Greedy => Matcher::Greedy,
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// A sequence directory or a dataset of them.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = PipelineKind::Pluto)]
    pub pipeline: PipelineKind,
    /// Directory holding the checkpoints written by `train`.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Detector rate, Hz; overrides `detector_rate_hz`.
    #[arg(long)]
    pub rate_hz: Option<f64>,
    /// Largest delay, s, at which a prediction may match a reference event.
    #[arg(long, default_value_t = DEFAULT_MATCH_HORIZON)]
    pub match_horizon: f64,
    #[arg(long, value_enum, default_value_t = MatcherKind::Optimal)]
    pub matcher: MatcherKind,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

/// Contents of `results.json` in a detection output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectResults {
    pub kind: String,
    pub pipeline: String,
    pub sequences: Vec<String>,
    /// Pooled over all sequences that carry reference labels.
    pub summary: Option<DetectionSummary>,
}

pub fn run(args: &DetectArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = args.config.load()?;
    if let Some(r) = args.rate_hz {
        cfg.detector_rate_hz = r;
    }
    let decimation = decimation_for(cfg.detector_rate_hz, cfg.imu_dt)?;
    if !(args.match_horizon > 0.0) {
        return Err(CliError::Usage("--match-horizon must be positive".into()));
    }
    let models = match args.pipeline {
        PipelineKind::Otsu => None,
        kind => {
            let dir = args
                .models
                .as_ref()
                .ok_or_else(|| Error::Config(format!("pipeline '{}' needs --models", kind.name())))?;
            let tcn = load_tcn(&dir.join(TCN_FILE))?;
            let smoother = match kind {
                PipelineKind::Pluto => Some(load_smoother(&dir.join(SMOOTHER_FILE))?),
                _ => None,
            };
            Some((tcn, smoother))
        }
    };
    let pipeline = match &models {
        None => Pipeline::Otsu,
        Some((t, None)) => Pipeline::Tcn(t),
        Some((t, Some(s))) => Pipeline::Pluto(t, s),
    };
    let sequences = load_sequences(&args.input)?;
    create_dir(&args.out)?;
    let per_sequence = args.jobs.map(&sequences, |seq| {
        let run = || -> CliResult<(PathBuf, Option<DetectionSummary>)> {
            let accel = world_accelerations(seq, &cfg)?;
            let detection = detect_stream(pipeline, &accel, decimation)?;
            let times = seq.imu_times();
            let dir = args.out.join(&seq.name);
            create_dir(&dir)?;
            let path = dir.join(LABELS_FILE);
            let rows: Vec<_> = times.iter().copied().zip(detection.labels.iter().copied()).collect();
            atomic(&path, |tmp| Ok(write_labels(tmp, &rows)?))?;
            let summary = match seq.labels {
                Some(_) => {
                    let gt = reference_labels(seq)?;
                    let s = DetectionSummary::evaluate(
                        pipeline.name(),
                        &times,
                        &detection.labels,
                        &gt,
                        args.match_horizon,
                        args.matcher.into(),
                    )?;
                    write_json(&dir.join("detection.json"), &s)?;
                    Some(s)
                }
                None => None,
            };
            Ok((path, summary))
        };
        run().map_err(|e| match e {
            CliError::Core(c) => CliError::Core(c.in_sequence(&seq.name)),
            other => other,
        })
    })?;

    let mut pooled: Option<DetectionSummary> = None;
    for (seq, (_, s)) in sequences.iter().zip(&per_sequence) {
        if let Some(s) = s {
            let c = &s.classification;
            println!(
                "{}: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} flips {}",
                seq.name, c.accuracy, c.precision, c.recall, c.f1, s.flips
            );
            match &mut pooled {
                Some(p) => p.merge(s),
                None => pooled = Some(s.clone()),
            }
        }
    }
    let results = DetectResults {
        kind: "detect".into(),
        pipeline: pipeline.name().into(),
        sequences: sequences.iter().map(|s| s.name.clone()).collect(),
        summary: pooled,
    };
    let results_path = args.out.join(RESULTS_FILE);
    write_json(&results_path, &results)?;
    let mut outputs: Vec<PathBuf> = per_sequence.into_iter().map(|(p, _)| p).collect();
    outputs.push(results_path);
    let mut manifest = RunManifest::new("detect")
        .config(&serde_json::json!({
            "pipeline": args.pipeline,
            "decimation": decimation,
            "match_horizon": args.match_horizon,
            "matcher": args.matcher,
            "nav": cfg,
        }))
        .input(&args.input);
    if let Some(m) = &args.models {
        manifest = manifest.input(m);
    }
    manifest.finish(&args.out, outputs, started)?;
    Ok(())
}
