//! `gatenav nav`: gated navigation with injected tracking failures.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use gatenav::dataio::{
    make_failure_window, split_test_sequences, write_trajectory, FailureWindow, DEFAULT_FAILURE_RANGE,
    DEFAULT_LENGTH_RANGE,
};
use gatenav::detector::{LstmSmoother, TcnClassifier};
use gatenav::eval::{run_case, Detectors, DriftColumn, ExperimentCase, ExperimentColumn, DEFAULT_PATH_LENGTH};
use gatenav::filter::{GateMode, GateScope};
use gatenav::{Error, Sequence};
use serde::{Deserialize, Serialize};

use crate::common::{load_sequences, load_smoother, load_tcn, ConfigArgs, JobsArgs, RESULTS_FILE, SMOOTHER_FILE, TCN_FILE};
use crate::error::{CliError, CliResult};
use crate::manifest::{atomic, create_dir, write_json, RunManifest};

#[derive(Debug, Args)]
pub struct NavArgs {
    /// A sequence directory or a dataset of them.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Gate mode; overrides `gate_mode` from the configuration.
    #[arg(long)]
    pub gate: Option<GateMode>,
    /// Directory holding the checkpoints written by `train`.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Draw one failure window per sequence, seeded with this value plus
    /// the sequence index.
    #[arg(long, conflicts_with = "failure")]
    pub failure_seed: Option<u64>,
    /// Fixed failure window `START:DURATION` in seconds.
    #[arg(long, value_parser = parse_window)]
    pub failure: Option<FailureWindow>,
    /// Cut every input sequence into this many test sequences first.
    #[arg(long)]
    pub split: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Column name in reports; defaults to the gate and failure setting.
    #[arg(long)]
    pub name: Option<String>,
    /// Ground-truth arc length of the drift window, m.
    #[arg(long, default_value_t = DEFAULT_PATH_LENGTH)]
    pub path_length: f64,
    /// Detector rate, Hz; overrides `detector_rate_hz`.
    #[arg(long)]
    pub rate_hz: Option<f64>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

fn parse_window(s: &str) -> Result<FailureWindow, String> {
    let (a, b) = s.split_once(':').ok_or("expected START:DURATION")?;
    let start: f64 = a.trim().parse().map_err(|_| format!("bad start '{a}'"))?;
    let duration: f64 = b.trim().parse().map_err(|_| format!("bad duration '{b}'"))?;
    FailureWindow::new(start, duration).map_err(|e| e.to_string())
}

/// Contents of `results.json` in a navigation output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NavResults {
    pub kind: String,
    pub gate: GateMode,
    pub gate_scope: GateScope,
    pub path_length: f64,
    pub sequences: Vec<String>,
    pub failures: Vec<Option<FailureWindow>>,
    pub drift: DriftColumn,
}

pub fn run(args: &NavArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = args.config.load()?;
    if let Some(g) = args.gate {
        cfg.gate_mode = g;
    }
    if let Some(r) = args.rate_hz {
        cfg.detector_rate_hz = r;
    }
    if !(args.path_length > 0.0) {
        return Err(CliError::Usage("--path-length must be positive".into()));
    }
    let models: Option<(TcnClassifier, LstmSmoother)> = match cfg.gate_mode {
        GateMode::Pluto => {
            let dir = args
                .models
                .as_ref()
                .ok_or_else(|| Error::Config("gate mode 'pluto' needs --models".into()))?;
            Some((load_tcn(&dir.join(TCN_FILE))?, load_smoother(&dir.join(SMOOTHER_FILE))?))
        }
        _ => None,
    };
    let det = match &models {
        Some((t, s)) => Detectors::pluto(t, s),
        None => Detectors::default(),
    };

    let mut sequences: Vec<Sequence> = Vec::new();
    for seq in load_sequences(&args.input)? {
        match args.split {
            Some(n) => sequences.extend(split_test_sequences(&seq, n, DEFAULT_LENGTH_RANGE, args.split_seed)?),
            None => sequences.push(seq),
        }
    }
    let failures: Vec<Option<FailureWindow>> = sequences
        .iter()
        .enumerate()
        .map(|(k, seq)| match (args.failure, args.failure_seed) {
            (Some(w), _) => Ok(Some(w)),
            (None, Some(seed)) => Ok(Some(
                make_failure_window(seq, DEFAULT_FAILURE_RANGE, seed.wrapping_add(k as u64))
                    .map_err(|e| e.in_sequence(&seq.name))?,
            )),
            (None, None) => Ok(None),
        })
        .collect::<gatenav::Result<_>>()?;
    let name = args.name.clone().unwrap_or_else(|| {
        let gate = match cfg.gate_mode {
            GateMode::Off => "kf".to_string(),
            other => other.to_string(),
        };
        if args.failure.is_some() || args.failure_seed.is_some() {
            format!("{gate}+failure")
        } else {
            gate
        }
    });
    let column = ExperimentColumn::new(&name, cfg.gate_mode, args.failure.is_some() || args.failure_seed.is_some());

    create_dir(&args.out)?;
    let jobs: Vec<(&Sequence, Option<FailureWindow>)> = sequences.iter().zip(failures.iter().copied()).collect();
    let runs = args.jobs.map(&jobs, |(seq, failure)| {
        let case = ExperimentCase {
            sequence: (*seq).clone(),
            // Unused when the column has no failure.
            failure: failure.unwrap_or(FailureWindow { start: 0.0, duration: 0.0 }),
        };
        let mut r = run_case(&case, std::slice::from_ref(&column), &cfg, det, args.path_length)
            .map_err(|e| e.in_sequence(&seq.name))?;
        let run = r.remove(0);
        let dir = args.out.join(&seq.name);
        create_dir(&dir)?;
        let path = dir.join("trajectory.csv");
        atomic(&path, |tmp| Ok(write_trajectory(tmp, &run.trajectory)?))?;
        println!("{}: drift {:.3} (failure {:?})", seq.name, run.drift, run.failure.map(|f| (f.start, f.duration)));
        Ok((path, run.drift))
    })?;

    let results = NavResults {
        kind: "nav".into(),
        gate: cfg.gate_mode,
        gate_scope: cfg.gate_scope,
        path_length: args.path_length,
        sequences: sequences.iter().map(|s| s.name.clone()).collect(),
        failures,
        drift: DriftColumn::new(&name, runs.iter().map(|r| r.1).collect()),
    };
    println!("{name}: mean drift {:.3} ± {:.3} over {} sequences", results.drift.mean, results.drift.std, sequences.len());
    let results_path = args.out.join(RESULTS_FILE);
    write_json(&results_path, &results)?;
    let mut outputs: Vec<PathBuf> = runs.into_iter().map(|r| r.0).collect();
    outputs.push(results_path);
    let mut manifest = RunManifest::new("nav")
        .config(&serde_json::json!({
            "column": name,
            "split": args.split,
            "path_length": args.path_length,
            "failure": args.failure,
            "nav": cfg,
        }))
        .input(&args.input);
    if let Some(s) = args.failure_seed {
        manifest = manifest.seed("failure", s);
    }
    if args.split.is_some() {
        manifest = manifest.seed("split", args.split_seed);
    }
    if let Some(m) = &args.models {
        manifest = manifest.input(m);
    }
    manifest.finish(&args.out, outputs, started)?;
    Ok(())
}
