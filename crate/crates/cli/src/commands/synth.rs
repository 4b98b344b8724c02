//! `gatenav synth`: synthetic subjects from a TOML profile spec.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use gatenav::dataio::{
    generate_sequence, synthetic_subjects, write_sequence, MotionProfile, Segment, SensorNoiseSpec, SubjectSpec,
    DEFAULT_GT_RATE, DEFAULT_IMU_RATE, STANDARD_GRAVITY,
};
use gatenav::{Error, Vec3};
use serde::{Deserialize, Serialize};

use crate::common::JobsArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::{create_dir, RunManifest};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Profile spec (TOML).
    pub spec: PathBuf,
    /// Output dataset directory; one subdirectory per subject.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

/// Randomly generated subjects.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub count: usize,
    /// Seconds per subject.
    pub duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub accel_noise_sigma: f64,
    #[serde(default = "zero_vec")]
    pub accel_bias: Vec3,
    #[serde(default = "gravity")]
    pub gravity: Vec3,
    /// Defaults to a value derived from the command seed.
    pub seed: Option<u64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            accel_noise_sigma: 0.0,
            accel_bias: zero_vec(),
            gravity: gravity(),
            seed: None,
        }
    }
}

fn zero_vec() -> Vec3 {
    Vec3::zeros()
}

fn gravity() -> Vec3 {
    Vec3::new(0.0, 0.0, -STANDARD_GRAVITY)
}

fn default_imu_rate() -> f64 {
    DEFAULT_IMU_RATE
}

fn default_gt_rate() -> f64 {
    DEFAULT_GT_RATE
}

/// A hand-written subject.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub name: String,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default = "default_imu_rate")]
    pub imu_rate: f64,
    #[serde(default = "default_gt_rate")]
    pub gt_rate: f64,
    pub generate: Option<GenerateSpec>,
    #[serde(default)]
    pub subjects: Vec<SubjectEntry>,
}

fn line_of(text: &str, offset: usize) -> u64 {
    text[..offset.min(text.len())].matches('\n').count() as u64 + 1
}

impl ProfileSpec {
    pub fn parse(text: &str, origin: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
            CliError::Core(Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: e.message().to_string(),
            })
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Every subject the profile file describes: generated ones first, then the
    /// hand-written ones in file order.
    pub fn resolve(&self, seed: u64) -> CliResult<Vec<SubjectSpec>> {
        let mut out = match &self.generate {
            Some(g) => {
                if g.count == 0 || !(g.duration > 0.0) {
                    return Err(Error::Validation(format!(
                        "generate: count must be >= 1 and duration > 0 (got {} and {})",
                        g.count, g.duration
                    ))
                    .into());
                }
                synthetic_subjects(g.count, g.duration, seed)
            }
            None => Vec::new(),
        };
        for (k, s) in self.subjects.iter().enumerate() {
            let profile = MotionProfile::new(s.segments.clone());
            profile
                .validate()
                .map_err(|e| Error::Validation(format!("subject '{}': {e}", s.name)))?;
            out.push(SubjectSpec {
                name: s.name.clone(),
                profile,
                noise: SensorNoiseSpec {
                    accel_noise_sigma: s.noise.accel_noise_sigma,
                    accel_bias: s.noise.accel_bias,
                    gravity: s.noise.gravity,
                    seed: s.noise.seed.unwrap_or(seed.wrapping_mul(1_000_003).wrapping_add(k as u64)),
                },
            });
        }
        if out.is_empty() {
            return Err(Error::Validation("spec describes no subjects".into()).into());
        }
        let mut names: Vec<&str> = out.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!("duplicate subject name '{}'", w[0])).into());
        }
        if let Some(bad) = out.iter().find(|s| s.name.is_empty() || s.name.contains(['/', '\\'])) {
            return Err(Error::Validation(format!("subject name '{}' is not a valid directory name", bad.name)).into());
        }
        Ok(out)
    }
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let started = Instant::now();
    let spec = ProfileSpec::load(&args.spec)?;
    let subjects = spec.resolve(args.seed)?;
    create_dir(&args.out)?;
    let dirs = args.jobs.map(&subjects, |s| {
        let seq = generate_sequence(&s.name, &s.profile, &s.noise, spec.imu_rate, spec.gt_rate)
            .map_err(|e| e.in_sequence(&s.name))?;
        let dir = args.out.join(&s.name);
        write_sequence(&seq, &dir)?;
        Ok(dir)
    })?;
    for d in &dirs {
        println!("{}", d.display());
    }
    let config = serde_json::json!({
        "imu_rate": spec.imu_rate,
        "gt_rate": spec.gt_rate,
        "subjects": subjects,
    });
    RunManifest::new("synth")
        .config(&config)
        .seed("seed", args.seed)
        .input(&args.spec)
        .finish(&args.out, dirs, started)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
imu_rate = 500.0

[[subjects]]
name = "walker"
noise = { accel_noise_sigma = 0.05, accel_bias = [0.1, 0.0, -0.05] }

[[subjects.segments]]
kind = "still"
duration = 2

[[subjects.segments]]
kind = "walk"
duration = 3.5
velocity = [1.0, 0.0, 0.0]
bob_amplitude = 0.03
step_frequency = 2.0
"#;

    #[test]
    fn hand_written_subject_parses() {
        let spec = ProfileSpec::parse(SPEC, Path::new("spec.toml")).unwrap();
        let subjects = spec.resolve(3).unwrap();
        assert_eq!(subjects.len(), 1);
        assert_eq!(subjects[0].profile.segments.len(), 2);
        assert_eq!(subjects[0].profile.duration(), 5.5);
        assert_eq!(subjects[0].noise.accel_bias, Vec3::new(0.1, 0.0, -0.05));
        assert_eq!(spec.gt_rate, DEFAULT_GT_RATE);
    }

    #[test]
    fn syntax_error_reports_its_line() {
        let text = "imu_rate = 500.0\n\n[generate]\ncount = four\n";
        match ProfileSpec::parse(text, Path::new("x.toml")) {
            Err(CliError::Core(Error::Parse { line, .. })) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_duration_segment_is_named() {
        let text = SPEC.replace("duration = 3.5", "duration = 0.0");
        let spec = ProfileSpec::parse(&text, Path::new("spec.toml")).unwrap();
        let msg = spec.resolve(1).unwrap_err().to_string();
        assert!(msg.contains("walker") && msg.contains("segment 1 (walk)"), "{msg}");
    }

    #[test]
    fn generated_and_written_names_must_differ() {
        let text = format!("{}\n[generate]\ncount = 1\nduration = 10.0\n", SPEC.replace("walker", "subject1"));
        let spec = ProfileSpec::parse(&text, Path::new("spec.toml")).unwrap();
        assert!(spec.resolve(1).unwrap_err().to_string().contains("duplicate"));
    }
}
