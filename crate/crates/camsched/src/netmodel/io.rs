//! Trajectory and network file I/O.
//!
//! Trajectory files store one row per visible detection:
//! `t,target_id,camera,x,y,w,h` with 1-based camera ids. Hidden steps are
//! implicit: any gap between consecutive rows of one target is filled with
//! hidden observations on load. The same schema is supported as JSON lines.
//! Saving writes rows sorted by (target_id, t), so canonical files round-trip
//! byte-identically.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BBox, CameraId, CameraNetwork, Observation, Trajectory, TrajectorySet};
use crate::error::{Error, Result};

const CSV_HEADER: &str = "t,target_id,camera,x,y,w,h";

/// On-disk trajectory encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Csv,
    JsonLines,
}

impl TrajectoryFormat {
    /// Picks the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => TrajectoryFormat::JsonLines,
            _ => TrajectoryFormat::Csv,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: i64,
    target_id: u64,
    camera: u32,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

/// Loads a trajectory file and validates it against `network`.
pub fn load_trajectories(
    path: &Path,
    format: TrajectoryFormat,
    network: &CameraNetwork,
) -> Result<TrajectorySet> {
    let rows = match format {
        TrajectoryFormat::Csv => read_csv_rows(path)?,
        TrajectoryFormat::JsonLines => read_jsonl_rows(path)?,
    };
    assemble(path, rows, network)
}

/// Writes every trajectory in canonical row order.
pub fn save_trajectories(set: &TrajectorySet, path: &Path, format: TrajectoryFormat) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>, row: &Row| -> std::io::Result<()> {
        match format {
            TrajectoryFormat::Csv => writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.t, row.target_id, row.camera, row.x, row.y, row.w, row.h
            ),
            TrajectoryFormat::JsonLines => {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string(row).expect("row serializes")
                )
            }
        }
    };
    let io_err = |e| Error::io(path, e);
    if format == TrajectoryFormat::Csv {
        writeln!(out, "{CSV_HEADER}").map_err(io_err)?;
    }
    for traj in set.trajectories.values() {
        for (i, obs) in traj.obs.iter().enumerate() {
            let t = traj.start_t + i as i64;
            if let Observation::Visible { camera, bbox } = obs {
                let row = Row {
                    t,
                    target_id: traj.target_id,
                    camera: camera.0,
                    x: bbox.x,
                    y: bbox.y,
                    w: bbox.w,
                    h: bbox.h,
                };
                write(&mut out, &row).map_err(io_err)?;
            }
            if let Some(alts) = traj.alt.get(&t) {
                for (camera, bbox) in alts {
                    let row = Row {
                        t,
                        target_id: traj.target_id,
                        camera: camera.0,
                        x: bbox.x,
                        y: bbox.y,
                        w: bbox.w,
                        h: bbox.h,
                    };
                    write(&mut out, &row).map_err(io_err)?;
                }
            }
        }
    }
    out.flush().map_err(io_err)
}

/// Loads a camera network description from JSON.
pub fn load_network(path: &Path) -> Result<CameraNetwork> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let net: CameraNetwork = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))?;
    net.validate()?;
    Ok(net)
}

/// Writes a camera network description as JSON.
pub fn save_network(net: &CameraNetwork, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(net).expect("network serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_csv_rows(path: &Path) -> Result<Vec<(u64, Row)>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.len() == 0 {
        return Ok(Vec::new());
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(path, e))?,
        None => return Ok(Vec::new()),
    };
    if header.trim_end() != CSV_HEADER {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{CSV_HEADER}`"),
        ));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i as u64 + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 7 fields, got {}", fields.len()),
            ));
        }
        let field = |idx: usize, name: &str| -> Result<f64> {
            fields[idx].trim().parse::<f64>().map_err(|_| {
                Error::parse(path, line_no, format!("bad {name} value `{}`", fields[idx]))
            })
        };
        let t = fields[0]
            .trim()
            .parse::<i64>()
            .map_err(|_| Error::parse(path, line_no, format!("bad t value `{}`", fields[0])))?;
        let target_id = fields[1].trim().parse::<u64>().map_err(|_| {
            Error::parse(
                path,
                line_no,
                format!("bad target_id value `{}`", fields[1]),
            )
        })?;
        let camera = fields[2].trim().parse::<u32>().map_err(|_| {
            Error::parse(path, line_no, format!("bad camera value `{}`", fields[2]))
        })?;
        let row = Row {
            t,
            target_id,
            camera,
            x: field(3, "x")?,
            y: field(4, "y")?,
            w: field(5, "w")?,
            h: field(6, "h")?,
        };
        rows.push((line_no, row));
    }
    Ok(rows)
}

fn read_jsonl_rows(path: &Path) -> Result<Vec<(u64, Row)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        rows.push((line_no, row));
    }
    Ok(rows)
}

/// Groups rows per target, fills hidden gaps, and validates the result.
fn assemble(path: &Path, rows: Vec<(u64, Row)>, network: &CameraNetwork) -> Result<TrajectorySet> {
    let mut per_target: BTreeMap<u64, Vec<(u64, Row)>> = BTreeMap::new();
    for (line, row) in rows {
        per_target
            .entry(row.target_id)
            .or_default()
            .push((line, row));
    }
    let mut trajectories = Vec::new();
    for (target_id, mut rows) in per_target {
        rows.sort_by_key(|(_, r)| r.t);
        for pair in rows.windows(2) {
            let (ref a, ref b) = (&pair[0].1, &pair[1].1);
            if a.t == b.t && a.camera == b.camera {
                return Err(Error::parse(
                    path,
                    pair[1].0,
                    format!(
                        "duplicate detection for target {target_id} at t={} camera {}",
                        b.t, b.camera
                    ),
                ));
            }
        }
        let start_t = rows[0].1.t;
        let end_t = rows[rows.len() - 1].1.t;
        let len = (end_t - start_t + 1) as usize;
        let mut obs = vec![Observation::Hidden; len];
        let mut alt: BTreeMap<i64, Vec<(CameraId, BBox)>> = BTreeMap::new();
        for (_, row) in &rows {
            let bbox = BBox {
                x: row.x,
                y: row.y,
                w: row.w,
                h: row.h,
            };
            let slot = &mut obs[(row.t - start_t) as usize];
            match slot {
                Observation::Hidden => {
                    *slot = Observation::Visible {
                        camera: CameraId(row.camera),
                        bbox,
                    }
                }
                Observation::Visible { .. } => {
                    alt.entry(row.t)
                        .or_default()
                        .push((CameraId(row.camera), bbox));
                }
            }
        }
        let mut traj = Trajectory::new(target_id, start_t, obs)?;
        traj.alt = alt;
        trajectories.push(traj);
    }
    TrajectorySet::new(network.clone(), trajectories)
}
