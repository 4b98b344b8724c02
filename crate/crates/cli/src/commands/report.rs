//! `gatenav report`: aggregate tables from `detect` and `nav` result
//! directories.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use gatenav::eval::{delay_histogram, DetectionSummary, DriftColumn, DriftReport, KindStats, MeanStd};
use serde::{Deserialize, Serialize};

use super::detect::DetectResults;
use super::nav::NavResults;
use crate::common::RESULTS_FILE;
use crate::error::{CliError, CliResult};
use crate::manifest::{create_dir, read_json, write_json, write_text, RunManifest};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directories of `detect` or `nav` runs.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Width of the delay histogram bins, s.
    #[arg(long, default_value_t = 0.1)]
    pub bin_width: f64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub drift: Option<DriftReport>,
    pub detection: Vec<DetectionSummary>,
}

enum Loaded {
    Nav(NavResults),
    Detect(DetectResults),
}

fn load(dir: &Path) -> CliResult<Loaded> {
    let path = dir.join(RESULTS_FILE);
    let value: serde_json::Value = read_json(&path)?;
    let kind = value.get("kind").and_then(|k| k.as_str()).unwrap_or_default().to_string();
    let parse_err = |e: serde_json::Error| CliError::Schema(format!("{}: {e}", path.display()));
    match kind.as_str() {
        "nav" => Ok(Loaded::Nav(serde_json::from_value(value).map_err(parse_err)?)),
        "detect" => Ok(Loaded::Detect(serde_json::from_value(value).map_err(parse_err)?)),
        other => Err(CliError::Schema(format!("{}: unknown results kind '{other}'", path.display()))),
    }
}

/// Combines the loaded results. Navigation runs must cover the same
/// sequences with the same drift window so that their columns line up.
pub fn build(dirs: &[PathBuf]) -> CliResult<Report> {
    let mut nav: Vec<(PathBuf, NavResults)> = Vec::new();
    let mut detection = Vec::new();
    for d in dirs {
        match load(d)? {
            Loaded::Nav(n) => nav.push((d.clone(), n)),
            Loaded::Detect(r) => match r.summary {
                Some(s) => detection.push(s),
                None => {
                    return Err(CliError::Schema(format!(
                        "{}: detection results carry no reference labels to score against",
                        d.display()
                    )))
                }
            },
        }
    }
    let drift = match nav.first() {
        None => None,
        Some((first_dir, first)) => {
            let mut columns: Vec<DriftColumn> = Vec::new();
            for (d, n) in &nav {
                if n.sequences != first.sequences {
                    return Err(CliError::Schema(format!(
                        "{} covers sequences {:?} but {} covers {:?}",
                        d.display(),
                        n.sequences,
                        first_dir.display(),
                        first.sequences
                    )));
                }
                if n.path_length != first.path_length {
                    return Err(CliError::Schema(format!(
                        "{} uses a {} m drift window but {} uses {} m",
                        d.display(),
                        n.path_length,
                        first_dir.display(),
                        first.path_length
                    )));
                }
                if columns.iter().any(|c| c.config == n.drift.config) {
                    return Err(CliError::Schema(format!(
                        "column '{}' appears twice (rename with nav --name)",
                        n.drift.config
                    )));
                }
                columns.push(n.drift.clone());
            }
            Some(DriftReport {
                sequences: first.sequences.clone(),
                columns,
            })
        }
    };
    Ok(Report { drift, detection })
}

fn ms(m: Option<MeanStd>) -> String {
    match m {
        Some(m) => format!("{:.3} ± {:.3}", m.mean, m.std),
        None => "n/a".into(),
    }
}

fn csv_opt(m: Option<MeanStd>) -> (String, String) {
    match m {
        Some(m) => (m.mean.to_string(), m.std.to_string()),
        None => (String::new(), String::new()),
    }
}

pub fn drift_csv(r: &DriftReport) -> String {
    let mut out = String::from("sequence");
    for c in &r.columns {
        out.push(',');
        out.push_str(&c.config);
    }
    out.push('\n');
    for (i, s) in r.sequences.iter().enumerate() {
        out.push_str(s);
        for c in &r.columns {
            let _ = write!(out, ",{}", c.per_sequence[i]);
        }
        out.push('\n');
    }
    for (label, std) in [("mean", false), ("std", true)] {
        out.push_str(label);
        for c in &r.columns {
            let _ = write!(out, ",{}", if std { c.std } else { c.mean });
        }
        out.push('\n');
    }
    out
}

pub fn detection_csv(d: &[DetectionSummary]) -> String {
    let mut out = String::from(
        "pipeline,accuracy,precision,recall,f1,delay_mean,delay_std,fp_interval_mean,fp_interval_std,false_positives,flips,gt_flips\n",
    );
    for s in d {
        let all = s.temporal.combined();
        let (dm, ds) = csv_opt(all.delay());
        let (fm, fs) = csv_opt(all.fp_interval());
        let c = &s.classification;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{dm},{ds},{fm},{fs},{},{},{}",
            s.pipeline, c.accuracy, c.precision, c.recall, c.f1, all.false_positives, s.flips, s.gt_flips
        );
    }
    out
}

pub fn histogram_csv(d: &[DetectionSummary], bin_width: f64, bins: usize) -> String {
    let hists: Vec<Vec<(f64, usize)>> = d
        .iter()
        .map(|s| delay_histogram(&s.temporal.combined().delays, bin_width, bins))
        .collect();
    let mut out = String::from("bin_start");
    for s in d {
        out.push(',');
        out.push_str(&s.pipeline);
    }
    out.push('\n');
    for k in 0..bins.max(1) {
        let _ = write!(out, "{}", k as f64 * bin_width);
        for h in &hists {
            let _ = write!(out, ",{}", h[k].1);
        }
        out.push('\n');
    }
    out
}

fn kind_row(name: &str, k: &KindStats) -> String {
    format!(
        "  {name:<6} delay {:<18} fp interval {:<18} matched {}/{} false positives {}",
        ms(k.delay()),
        ms(k.fp_interval()),
        k.matched,
        k.gt_events,
        k.false_positives
    )
}

pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    if !r.detection.is_empty() {
        out.push_str("Motion detection\n");
        let _ = writeln!(out, "  {:<10} {:>9} {:>9} {:>9} {:>9}", "pipeline", "accuracy", "precision", "recall", "f1");
        for s in &r.detection {
            let c = &s.classification;
            let _ = writeln!(
                out,
                "  {:<10} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
                s.pipeline, c.accuracy, c.precision, c.recall, c.f1
            );
        }
        out.push_str("\nEvent timing (s)\n");
        for s in &r.detection {
            let _ = writeln!(
                out,
                "{} (horizon {} s, flips {} vs {} in the reference)",
                s.pipeline, s.temporal.horizon, s.flips, s.gt_flips
            );
            let _ = writeln!(out, "{}", kind_row("start", &s.temporal.start));
            let _ = writeln!(out, "{}", kind_row("stop", &s.temporal.stop));
        }
    }
    if let Some(d) = &r.drift {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "Relative drift over {} sequences", d.sequences.len());
        for c in &d.columns {
            let _ = writeln!(out, "  {:<18} {:>8.3} ± {:.3}", c.config, c.mean, c.std);
        }
    }
    out
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    let started = Instant::now();
    if !(args.bin_width > 0.0) || args.bins == 0 {
        return Err(CliError::Usage("--bin-width must be positive and --bins at least 1".into()));
    }
    let report = build(&args.results)?;
    create_dir(&args.out)?;
    let mut outputs = Vec::new();
    let mut put = |name: &str, text: String| -> CliResult<()> {
        let p = args.out.join(name);
        write_text(&p, &text)?;
        outputs.push(p);
        Ok(())
    };
    if let Some(d) = &report.drift {
        put("drift.csv", drift_csv(d))?;
    }
    if !report.detection.is_empty() {
        put("detection.csv", detection_csv(&report.detection))?;
        put("delay_histogram.csv", histogram_csv(&report.detection, args.bin_width, args.bins))?;
    }
    let text = render_text(&report);
    put("report.txt", text.clone())?;
    let json = args.out.join("report.json");
    write_json(&json, &report)?;
    outputs.push(json);
    print!("{text}");
    let mut manifest = RunManifest::new("report").config(&serde_json::json!({
        "bin_width": args.bin_width,
        "bins": args.bins,
    }));
    for r in &args.results {
        manifest = manifest.input(r);
    }
    manifest.finish(&args.out, outputs, started)?;
    Ok(())
}
