//! Canonical on-disk layout: one directory per sequence holding `imu.csv`,
//! `gt.csv` and optionally `labels.csv`.
//!
//! ```text
//! imu.csv     t,ax,ay,az
//! gt.csv      t,px,py,pz,qw,qx,qy,qz[,vx,vy,vz]
//! labels.csv  t,label            (label is motion or stillness)
//! ```
//!
//! Values are written in shortest round-trip decimal form; timestamps always
//! carry at least six fractional digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord};

use crate::domain::{ImuSample, MotionLabel, PoseSample, Quat, Sequence, TrajectoryPoint, Vec3};
use crate::error::{Error, Result};

pub const IMU_FILE: &str = "imu.csv";
pub const GT_FILE: &str = "gt.csv";
pub const LABELS_FILE: &str = "labels.csv";

const IMU_HEADER: [&str; 4] = ["t", "ax", "ay", "az"];
const GT_HEADER: [&str; 8] = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz"];
const GT_VEL_HEADER: [&str; 3] = ["vx", "vy", "vz"];
const LABEL_HEADER: [&str; 2] = ["t", "label"];
const TRAJ_HEADER: [&str; 7] = ["t", "px", "py", "pz", "vx", "vy", "vz"];

/// Formats a timestamp with at least six fractional digits while keeping
/// the exact shortest representation when it needs more.
pub fn format_time(t: f64) -> String {
    let s = format!("{t}");
    let decimals = s.split_once('.').map(|(_, f)| f.len());
    match decimals {
        Some(d) if d >= 6 => s,
        Some(d) => format!("{s}{}", "0".repeat(6 - d)),
        None => format!("{s}.000000"),
    }
}

fn push_values(line: &mut String, values: &[f64]) {
    for v in values {
        line.push(',');
        line.push_str(&v.to_string());
    }
}

fn write_file(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut out = String::with_capacity(64 * 1024);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_imu(path: &Path, imu: &[ImuSample]) -> Result<()> {
    write_file(
        path,
        &IMU_HEADER.join(","),
        imu.iter().map(|s| {
            let mut line = format_time(s.t);
            push_values(&mut line, s.accel.as_slice());
            line
        }),
    )
}

pub fn write_gt(path: &Path, gt: &[PoseSample]) -> Result<()> {
    let with_vel = gt.iter().all(|p| p.velocity.is_some());
    let mut header = GT_HEADER.join(",");
    if with_vel {
        header.push(',');
        header.push_str(&GT_VEL_HEADER.join(","));
    }
    write_file(
        path,
        &header,
        gt.iter().map(|p| {
            let mut line = format_time(p.t);
            push_values(&mut line, p.position.as_slice());
            let q = &p.orientation;
            push_values(&mut line, &[q.w, q.i, q.j, q.k]);
            if let (true, Some(v)) = (with_vel, p.velocity) {
                push_values(&mut line, v.as_slice());
            }
            line
        }),
    )
}

pub fn write_labels(path: &Path, labels: &[(f64, MotionLabel)]) -> Result<()> {
    write_file(
        path,
        &LABEL_HEADER.join(","),
        labels.iter().map(|(t, l)| format!("{},{}", format_time(*t), l.as_str())),
    )
}

/// Writes an estimated trajectory as `t,px,py,pz,vx,vy,vz`.
pub fn write_trajectory(path: &Path, traj: &[TrajectoryPoint]) -> Result<()> {
    write_file(
        path,
        &TRAJ_HEADER.join(","),
        traj.iter().map(|p| {
            let mut line = format_time(p.t);
            push_values(&mut line, p.position.as_slice());
            push_values(&mut line, p.velocity.as_slice());
            line
        }),
    )
}

/// Writes `imu.csv`, `gt.csv` and, when present, `labels.csv` into `dir`,
/// creating it if needed.
pub fn write_sequence(seq: &Sequence, dir: &Path) -> Result<()> {
    seq.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_imu(&dir.join(IMU_FILE), &seq.imu)?;
    write_gt(&dir.join(GT_FILE), &seq.gt)?;
    if let Some(labels) = &seq.labels {
        write_labels(&dir.join(LABELS_FILE), labels)?;
    }
    Ok(())
}

struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<(u64, StringRecord)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec));
    }
    Ok(Table {
        path: path.to_path_buf(),
        header,
        rows,
    })
}

impl Table {
    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header.len() != expected.len() || self.header.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(Error::Parse {
                path: self.path.clone(),
                line: 1,
                message: format!("expected header '{}', found '{}'", expected.join(","), self.header.join(",")),
            });
        }
        Ok(())
    }

    fn floats(&self, line: u64, rec: &StringRecord) -> Result<Vec<f64>> {
        if rec.len() != self.header.len() {
            return Err(Error::Parse {
                path: self.path.clone(),
                line,
                message: format!("expected {} fields, found {}", self.header.len(), rec.len()),
            });
        }
        rec.iter()
            .enumerate()
            .map(|(i, field)| {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    path: self.path.clone(),
                    line,
                    message: format!("column '{}': cannot parse '{field}' as a number", self.header[i]),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse {
                        path: self.path.clone(),
                        line,
                        message: format!("column '{}': non-finite value '{field}'", self.header[i]),
                    })
                }
            })
            .collect()
    }

    fn check_monotone(&self, times: &[(u64, f64)]) -> Result<()> {
        for w in times.windows(2) {
            if w[1].1 <= w[0].1 {
                return Err(Error::Validation(format!(
                    "{}: line {}: timestamp {} does not increase over {} on line {}",
                    self.path.display(),
                    w[1].0,
                    w[1].1,
                    w[0].1,
                    w[0].0
                )));
            }
        }
        Ok(())
    }
}

pub fn read_imu(path: &Path) -> Result<Vec<ImuSample>> {
    let table = read_table(path)?;
    table.expect_header(&IMU_HEADER)?;
    if table.rows.is_empty() {
        return Err(Error::InsufficientData(format!("{}: no IMU samples", path.display())));
    }
    let mut out = Vec::with_capacity(table.rows.len());
    let mut times = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let v = table.floats(*line, rec)?;
        times.push((*line, v[0]));
        out.push(ImuSample {
            t: v[0],
            accel: Vec3::new(v[1], v[2], v[3]),
        });
    }
    table.check_monotone(&times)?;
    Ok(out)
}

pub fn read_gt(path: &Path) -> Result<Vec<PoseSample>> {
    let table = read_table(path)?;
    let with_vel = table.header.len() == GT_HEADER.len() + GT_VEL_HEADER.len();
    if with_vel {
        let full: Vec<&str> = GT_HEADER.iter().chain(GT_VEL_HEADER.iter()).copied().collect();
        table.expect_header(&full)?;
    } else {
        table.expect_header(&GT_HEADER)?;
    }
    if table.rows.is_empty() {
        return Err(Error::InsufficientData(format!("{}: no ground-truth poses", path.display())));
    }
    let mut out = Vec::with_capacity(table.rows.len());
    let mut times = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let v = table.floats(*line, rec)?;
        times.push((*line, v[0]));
        out.push(PoseSample {
            t: v[0],
            position: Vec3::new(v[1], v[2], v[3]),
            orientation: Quat::new(v[4], v[5], v[6], v[7]),
            velocity: with_vel.then(|| Vec3::new(v[8], v[9], v[10])),
        });
    }
    table.check_monotone(&times)?;
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<Vec<(f64, MotionLabel)>> {
    let table = read_table(path)?;
    table.expect_header(&LABEL_HEADER)?;
    let mut out = Vec::with_capacity(table.rows.len());
    let mut times = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let parse = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: *line,
            message,
        };
        if rec.len() != 2 {
            return Err(parse(format!("expected 2 fields, found {}", rec.len())));
        }
        let t: f64 = rec[0]
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| parse(format!("cannot parse timestamp '{}'", &rec[0])))?;
        let label = MotionLabel::parse(&rec[1])
            .ok_or_else(|| parse(format!("unknown label '{}', expected motion or stillness", &rec[1])))?;
        times.push((*line, t));
        out.push((t, label));
    }
    table.check_monotone(&times)?;
    Ok(out)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryPoint>> {
    let table = read_table(path)?;
    table.expect_header(&TRAJ_HEADER)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let v = table.floats(*line, rec)?;
        out.push(TrajectoryPoint {
            t: v[0],
            position: Vec3::new(v[1], v[2], v[3]),
            velocity: Vec3::new(v[4], v[5], v[6]),
        });
    }
    Ok(out)
}

/// Reads a sequence directory; the sequence is named after the directory.
pub fn read_sequence(dir: &Path) -> Result<Sequence> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    let imu = read_imu(&dir.join(IMU_FILE))?;
    let gt = read_gt(&dir.join(GT_FILE))?;
    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.exists() {
        Some(read_labels(&labels_path)?)
    } else {
        None
    };
    let seq = Sequence { name, imu, gt, labels };
    seq.validate()?;
    Ok(seq)
}

/// Sequence directories directly under `root` (those containing `imu.csv`),
/// sorted by name.
pub fn list_sequence_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.is_dir() && path.join(IMU_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Reads every sequence directory under `root`, sorted by name.
pub fn read_dataset(root: &Path) -> Result<Vec<Sequence>> {
    let dirs = list_sequence_dirs(root)?;
    if dirs.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{}: no sequence directories (expected subdirectories containing {IMU_FILE})",
            root.display()
        )));
    }
    dirs.iter().map(|d| read_sequence(d)).collect()
}
