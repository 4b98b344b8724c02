use std::path::{Path, PathBuf};

use clap::Args;
use gatenav::dataio::{read_dataset, read_sequence, IMU_FILE};
use gatenav::detector::{LstmSmoother, TcnClassifier};
use gatenav::filter::NavConfig;
use gatenav::Sequence;
use gatenav_nn::Checkpoint;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub const TCN_FILE: &str = "tcn.json";
pub const SMOOTHER_FILE: &str = "smoother.json";
pub const RESULTS_FILE: &str = "results.json";

/// Navigation settings shared by every command that touches the filter or
/// the detector input.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Key/value configuration file; missing keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set highpass_cutoff=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> CliResult<NavConfig> {
        let mut cfg = match &self.config {
            Some(p) => NavConfig::load(p)?,
            None => NavConfig::default(),
        };
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{o}'")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct JobsArgs {
    /// Sequences processed concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl JobsArgs {
    /// Maps `f` over `items` on at most `jobs` threads. Results keep the
    /// input order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> CliResult<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> CliResult<R> + Sync + Send,
    {
        if self.jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
        pool.install(|| items.par_iter().map(&f).collect())
    }
}

/// Reads either one sequence directory or every sequence directory below
/// `path`, in name order.
pub fn load_sequences(path: &Path) -> CliResult<Vec<Sequence>> {
    if path.join(IMU_FILE).is_file() {
        return Ok(vec![read_sequence(path)?]);
    }
    Ok(read_dataset(path)?)
}

pub fn load_tcn(path: &Path) -> CliResult<TcnClassifier> {
    Ok(TcnClassifier::from_checkpoint(&Checkpoint::load(path)?)?)
}

pub fn load_smoother(path: &Path) -> CliResult<LstmSmoother> {
    Ok(LstmSmoother::from_checkpoint(&Checkpoint::load(path)?)?)
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> CliResult<()> {
    crate::manifest::write_text(path, &ck.to_json()?)
}
