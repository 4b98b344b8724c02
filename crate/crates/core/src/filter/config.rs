use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source of the stillness labels that drive pseudo-updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateMode {
    /// No gating: a plain Kalman filter.
    Off,
    /// Ground-truth labels.
    Oracle,
    Otsu,
    /// TCN classifier followed by the LSTM smoother.
    Pluto,
}

/// When pseudo-updates may replace the filter inputs. With `Always`, a
/// Stillness label also overrides a valid tracker velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateScope {
    Always,
    FailureOnly,
}

impl GateMode {
    pub const ALL: [GateMode; 4] = [GateMode::Off, GateMode::Oracle, GateMode::Otsu, GateMode::Pluto];

    pub fn as_str(self) -> &'static str {
        match self {
            GateMode::Off => "off",
            GateMode::Oracle => "oracle",
            GateMode::Otsu => "otsu",
            GateMode::Pluto => "pluto",
        }
    }
}

impl GateScope {
    pub fn as_str(self) -> &'static str {
        match self {
            GateScope::Always => "always",
            GateScope::FailureOnly => "failure-only",
        }
    }
}

impl fmt::Display for GateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for GateScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GateMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown gate mode '{s}' (expected off, oracle, otsu or pluto)")))
    }
}

impl FromStr for GateScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "always" => Ok(GateScope::Always),
            "failure-only" | "failure_only" => Ok(GateScope::FailureOnly),
            _ => Err(Error::Config(format!("unknown gate scope '{s}' (expected always or failure-only)"))),
        }
    }
}

/// Navigation filter settings.
///
/// Loadable from a `key = value` text file (`#` starts a comment); every key
/// can be overridden individually with [`NavConfig::set`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavConfig {
    /// Nominal IMU period, s. Sets the high-pass coefficient.
    pub imu_dt: f64,
    /// High-pass cutoff, Hz; 0 disables the filter.
    pub highpass_cutoff: f64,
    /// Accelerations in the process-noise window.
    pub q_window: usize,
    /// Velocity innovations in the measurement-noise window.
    pub r_window: usize,
    pub gate_mode: GateMode,
    pub gate_scope: GateScope,
    /// Added to every measurement covariance; also the full covariance of a
    /// zero-velocity pseudo-measurement, (m/s)².
    pub r_floor: f64,
    /// Initial state variance for positions and velocities.
    pub initial_variance: f64,
    /// Process-noise covariance used until the window holds 2 samples.
    pub q_prior: f64,
    /// Measurement-noise covariance used until the window holds 2 samples.
    pub r_prior: f64,
    /// Diagonal regularizer of the empirical covariances.
    pub cov_epsilon: f64,
    /// Detector inference rate for learned gates, Hz.
    pub detector_rate_hz: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            imu_dt: 0.002,
            highpass_cutoff: 0.05,
            q_window: 500,
            r_window: 125,
            gate_mode: GateMode::Pluto,
            gate_scope: GateScope::FailureOnly,
            r_floor: 1e-4,
            initial_variance: 1e-4,
            q_prior: 1.0,
            r_prior: 1e-2,
            cov_epsilon: 1e-9,
            detector_rate_hz: 10.0,
        }
    }
}

pub const CONFIG_KEYS: [&str; 12] = [
    "imu_dt",
    "highpass_cutoff",
    "q_window",
    "r_window",
    "gate_mode",
    "gate_scope",
    "r_floor",
    "initial_variance",
    "q_prior",
    "r_prior",
    "cov_epsilon",
    "detector_rate_hz",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

impl NavConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("imu_dt", self.imu_dt),
            ("r_floor", self.r_floor),
            ("initial_variance", self.initial_variance),
            ("q_prior", self.q_prior),
            ("r_prior", self.r_prior),
            ("detector_rate_hz", self.detector_rate_hz),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{k} must be positive and finite, got {v}")));
            }
        }
        if !(self.highpass_cutoff >= 0.0) || !self.highpass_cutoff.is_finite() {
            return Err(Error::Config(format!(
                "highpass_cutoff must be >= 0, got {}",
                self.highpass_cutoff
            )));
        }
        if !(self.cov_epsilon >= 0.0) {
            return Err(Error::Config(format!("cov_epsilon must be >= 0, got {}", self.cov_epsilon)));
        }
        if self.q_window == 0 || self.r_window == 0 {
            return Err(Error::Config("q_window and r_window must be positive".into()));
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "imu_dt" => self.imu_dt = parse_num(key, value)?,
            "highpass_cutoff" => self.highpass_cutoff = parse_num(key, value)?,
            "q_window" => self.q_window = parse_num(key, value)?,
            "r_window" => self.r_window = parse_num(key, value)?,
            "gate_mode" => self.gate_mode = value.parse()?,
            "gate_scope" => self.gate_scope = value.parse()?,
            "r_floor" => self.r_floor = parse_num(key, value)?,
            "initial_variance" => self.initial_variance = parse_num(key, value)?,
            "q_prior" => self.q_prior = parse_num(key, value)?,
            "r_prior" => self.r_prior = parse_num(key, value)?,
            "cov_epsilon" => self.cov_epsilon = parse_num(key, value)?,
            "detector_rate_hz" => self.detector_rate_hz = parse_num(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key '{other}' (known keys: {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults.
    pub fn parse_kv(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i as u64 + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected 'key = value', found '{line}'")))?;
            cfg.set(k, v).map_err(|e| parse_err(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_kv(&text, path)
    }

    /// Renders the configuration in the file format accepted by
    /// [`NavConfig::parse_kv`].
    pub fn to_kv(&self) -> String {
        format!(
            "imu_dt = {}\nhighpass_cutoff = {}\nq_window = {}\nr_window = {}\ngate_mode = {}\ngate_scope = {}\n\
             r_floor = {}\ninitial_variance = {}\nq_prior = {}\nr_prior = {}\ncov_epsilon = {}\ndetector_rate_hz = {}\n",
            self.imu_dt,
            self.highpass_cutoff,
            self.q_window,
            self.r_window,
            self.gate_mode,
            self.gate_scope,
            self.r_floor,
            self.initial_variance,
            self.q_prior,
            self.r_prior,
            self.cov_epsilon,
            self.detector_rate_hz
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let cfg = NavConfig {
            gate_mode: GateMode::Otsu,
            gate_scope: GateScope::Always,
            highpass_cutoff: 0.0,
            r_window: 77,
            ..NavConfig::default()
        };
        let back = NavConfig::parse_kv(&cfg.to_kv(), Path::new("x.cfg")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = NavConfig::parse_kv("# header\n\nq_window = 250 # half\n", Path::new("a")).unwrap();
        assert_eq!(cfg.q_window, 250);
    }

    #[test]
    fn bad_lines_report_their_number() {
        let err = NavConfig::parse_kv("q_window = 3\nnonsense\n", Path::new("c.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = NavConfig::parse_kv("\nspeed = 3\n", Path::new("c.cfg")).unwrap_err();
        assert!(err.to_string().contains("unknown key 'speed'"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(NavConfig::parse_kv("imu_dt = 0", Path::new("c")).is_err());
        assert!(NavConfig::parse_kv("gate_mode = sometimes", Path::new("c")).is_err());
        assert!(NavConfig::parse_kv("q_window = 0", Path::new("c")).is_err());
    }
}
