//! Tracking quality metrics over poll logs and predicted trajectories.
//!
//! Sequences under test are the per-step ground-truth camera g (the dummy
//! entry when the target is in transit) and the polled camera p. Accuracy
//! counts exact agreement including dummy steps, precision restricts to steps
//! where something was polled, recall to steps where the target was visible.
//! F counts wastefully polled frames: every frame polled during a transit
//! step plus every frame polled on the wrong camera while the target was
//! visible. The combined MCTA score multiplies a detection F1 with
//! within-camera continuity and cross-camera handover factors.
//!
//! Empty denominators never produce NaN: the value becomes 0 (or 1 for the
//! handover factor) and the report carries a flag naming the degenerate term.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{PollLog, PredictedTrajectory};
use crate::error::{Error, Result};
use crate::netmodel::{CameraId, Trajectory};

/// Aligned per-step camera selections for one target.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub target_id: u64,
    /// Ground-truth camera per decision step; `None` is the dummy camera.
    pub g: Vec<Option<CameraId>>,
    /// Polled camera per decision step; `None` means nothing polled.
    pub p: Vec<Option<CameraId>>,
    /// Frames actually fetched per step (baselines poll several).
    pub poll_counts: Vec<u32>,
}

impl SelectionOutcome {
    /// Builds the aligned sequences from a poll log.
    pub fn from_poll_log(traj: &Trajectory, log: &PollLog) -> Self {
        let mut g = Vec::with_capacity(log.len());
        let mut p = Vec::with_capacity(log.len());
        let mut poll_counts = Vec::with_capacity(log.len());
        for rec in log {
            g.push(traj.camera_at(rec.t));
            p.push(rec.polled_camera);
            poll_counts.push(rec.frames_polled);
        }
        SelectionOutcome {
            target_id: traj.target_id,
            g,
            p,
            poll_counts,
        }
    }
}

/// Which timesteps a metric covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    /// Every decision step.
    Full,
    /// Only transitions: maximal dummy-camera runs plus the first
    /// re-acquisition step after each.
    Ict,
}

impl std::str::FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "sct+ict" => Ok(MetricMode::Full),
            "ict" => Ok(MetricMode::Ict),
            other => Err(Error::config(format!("unknown metric mode '{other}'"))),
        }
    }
}

/// Steps included under a mode: all, or the transition windows.
fn mode_mask(g: &[Option<CameraId>], mode: MetricMode) -> Vec<bool> {
    match mode {
        MetricMode::Full => vec![true; g.len()],
        MetricMode::Ict => {
            let mut mask = vec![false; g.len()];
            let mut in_gap = false;
            for (i, cam) in g.iter().enumerate() {
                if cam.is_none() {
                    mask[i] = true;
                    in_gap = true;
                } else if in_gap {
                    // First re-acquisition step closes the window.
                    mask[i] = true;
                    in_gap = false;
                }
            }
            mask
        }
    }
}

/// Accuracy, precision, recall; flags name any empty denominator.
#[derive(Debug, Clone, Serialize)]
pub struct Apr {
    pub a: f64,
    pub p: f64,
    pub r: f64,
    pub flags: Vec<String>,
}

fn ratio(num: u64, den: u64, name: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(format!("empty denominator: {name}"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Evaluates selection accuracy, precision, and recall.
pub fn apr(outcome: &SelectionOutcome, mode: MetricMode) -> Result<Apr> {
    if outcome.g.len() != outcome.p.len() {
        return Err(Error::config(
            "ground-truth and polled sequences differ in length",
        ));
    }
    let mask = mode_mask(&outcome.g, mode);
    let mut steps = 0u64;
    let mut agree = 0u64;
    let mut polled = 0u64;
    let mut polled_correct = 0u64;
    let mut visible = 0u64;
    let mut visible_correct = 0u64;
    for ((g, p), _) in outcome
        .g
        .iter()
        .zip(&outcome.p)
        .zip(&mask)
        .filter(|(_, &m)| m)
    {
        steps += 1;
        let hit = g == p;
        if hit {
            agree += 1;
        }
        if p.is_some() {
            polled += 1;
            if hit {
                polled_correct += 1;
            }
        }
        if g.is_some() {
            visible += 1;
            if hit {
                visible_correct += 1;
            }
        }
    }
    let mut flags = Vec::new();
    let a = ratio(agree, steps, "accuracy steps", &mut flags);
    let p = ratio(polled_correct, polled, "precision polls", &mut flags);
    let r = ratio(visible_correct, visible, "recall visible steps", &mut flags);
    Ok(Apr { a, p, r, flags })
}

/// Count of wastefully polled frames.
///
/// Every frame fetched on a transit step counts, and on visible steps every
/// fetched frame except a correct-camera hit counts.
pub fn frames_polled(outcome: &SelectionOutcome) -> u64 {
    let mut f = 0u64;
    for ((g, p), &c) in outcome.g.iter().zip(&outcome.p).zip(&outcome.poll_counts) {
        let correct_hit = g.is_some() && g == p;
        f += c as u64 - u64::from(correct_hit && c > 0);
    }
    f
}

/// Row-normalized camera selection confusion matrix.
#[derive(Debug, Clone, Serialize)]
pub struct ConfusionMatrix {
    pub num_cameras: u32,
    /// (N+1) x (N+1); row/column N is the dummy camera.
    pub rows: Vec<Vec<f64>>,
    /// Ground-truth rows that never occurred.
    pub empty_rows: Vec<u32>,
}

fn slot(cam: Option<CameraId>, n: u32) -> usize {
    match cam {
        Some(c) => c.0 as usize - 1,
        None => n as usize,
    }
}

/// Builds the confusion matrix over all outcomes' full sequences.
pub fn confusion_matrix(outcomes: &[SelectionOutcome], num_cameras: u32) -> ConfusionMatrix {
    let side = num_cameras as usize + 1;
    let mut counts = vec![vec![0u64; side]; side];
    for o in outcomes {
        for (g, p) in o.g.iter().zip(&o.p) {
            counts[slot(*g, num_cameras)][slot(*p, num_cameras)] += 1;
        }
    }
    let mut rows = Vec::with_capacity(side);
    let mut empty_rows = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        if total == 0 {
            empty_rows.push(i as u32);
            rows.push(vec![0.0; side]);
        } else {
            rows.push(row.iter().map(|&c| c as f64 / total as f64).collect());
        }
    }
    ConfusionMatrix {
        num_cameras,
        rows,
        empty_rows,
    }
}

/// MCTA factors for one target.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Mcta {
    pub detection_f1: f64,
    pub within_camera: f64,
    pub cross_camera: f64,
    pub value: f64,
}

/// Scores one predicted track against its ground truth.
///
/// Detection F1 compares the predicted camera to the truth per timestep.
/// The within-camera factor penalizes breaks across consecutive same-camera
/// truth frames; the cross-camera factor penalizes handovers (a camera
/// change, with or without a gap) after which the target is never picked up
/// in the correct next camera during that dwell.
pub fn mcta(pred: &PredictedTrajectory, traj: &Trajectory) -> Result<Mcta> {
    let span = (traj.end_t() - traj.start_t + 1) as usize;
    if pred.entries.len() != span || pred.start_t != traj.start_t {
        return Err(Error::config(
            "predicted trajectory does not align with ground truth",
        ));
    }
    let pred_cam = |i: usize| pred.entries[i].map(|(c, _)| c);
    let truth_cam = |i: usize| traj.camera_at(traj.start_t + i as i64);

    let mut matches = 0u64;
    let mut pred_visible = 0u64;
    let mut truth_visible = 0u64;
    for i in 0..span {
        let (p, g) = (pred_cam(i), truth_cam(i));
        if p.is_some() {
            pred_visible += 1;
        }
        if g.is_some() {
            truth_visible += 1;
        }
        if p.is_some() && p == g {
            matches += 1;
        }
    }
    let detection_f1 = if pred_visible == 0 || truth_visible == 0 || matches == 0 {
        0.0
    } else {
        let p = matches as f64 / pred_visible as f64;
        let r = matches as f64 / truth_visible as f64;
        2.0 * p * r / (p + r)
    };

    let mut tp_within = 0u64;
    let mut miss_within = 0u64;
    for i in 0..span.saturating_sub(1) {
        if let (Some(a), Some(b)) = (truth_cam(i), truth_cam(i + 1)) {
            if a == b {
                tp_within += 1;
                if pred_cam(i) != Some(a) || pred_cam(i + 1) != Some(a) {
                    miss_within += 1;
                }
            }
        }
    }
    let within_camera = if tp_within == 0 {
        1.0
    } else {
        1.0 - miss_within as f64 / tp_within as f64
    };

    // Handovers: consecutive sightings in different cameras, however long
    // the gap between them. Each is bridged if the correct next camera is
    // predicted at least once during the dwell it opens.
    let mut tp_cross = 0u64;
    let mut miss_cross = 0u64;
    let mut i = 0;
    while i < span {
        let Some(cam) = truth_cam(i) else {
            i += 1;
            continue;
        };
        // i opens a dwell in cam; find its extent.
        let mut end = i;
        while end + 1 < span && truth_cam(end + 1) == Some(cam) {
            end += 1;
        }
        let had_predecessor = (0..i).rev().find_map(truth_cam);
        if let Some(prev) = had_predecessor {
            if prev != cam {
                tp_cross += 1;
                let bridged = (i..=end).any(|j| pred_cam(j) == Some(cam));
                if !bridged {
                    miss_cross += 1;
                }
            }
        }
        i = end + 1;
    }
    let cross_camera = if tp_cross == 0 {
        1.0
    } else {
        1.0 - miss_cross as f64 / tp_cross as f64
    };

    let value = (detection_f1 * within_camera * cross_camera).clamp(0.0, 1.0);
    Ok(Mcta {
        detection_f1,
        within_camera,
        cross_camera,
        value,
    })
}

/// Metrics for one target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub target_id: u64,
    pub a: f64,
    pub p: f64,
    pub r: f64,
    pub f: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcta: Option<Mcta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Per-target metrics and their cross-target aggregate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub mode: MetricMode,
    pub targets: Vec<TargetMetrics>,
    pub mean_a: f64,
    pub mean_p: f64,
    pub mean_r: f64,
    /// F aggregates by sum.
    pub total_f: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_mcta: Option<f64>,
}

/// Averages A/P/R and MCTA over targets; sums F.
pub fn aggregate(mode: MetricMode, targets: Vec<TargetMetrics>) -> Result<MetricReport> {
    if targets.is_empty() {
        return Err(Error::config("no per-target metrics to aggregate"));
    }
    let n = targets.len() as f64;
    let mean_a = targets.iter().map(|t| t.a).sum::<f64>() / n;
    let mean_p = targets.iter().map(|t| t.p).sum::<f64>() / n;
    let mean_r = targets.iter().map(|t| t.r).sum::<f64>() / n;
    let total_f = targets.iter().map(|t| t.f).sum();
    let scored: Vec<f64> = targets
        .iter()
        .filter_map(|t| t.mcta.map(|m| m.value))
        .collect();
    let mean_mcta = if scored.is_empty() {
        None
    } else {
        Some(scored.iter().sum::<f64>() / scored.len() as f64)
    };
    Ok(MetricReport {
        mode,
        targets,
        mean_a,
        mean_p,
        mean_r,
        total_f,
        mean_mcta,
    })
}

/// Serializes a report as JSON with a trailing newline.
pub fn write_report_json(report: &MetricReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Human-readable aligned-column report.
pub fn report_text(report: &MetricReport) -> String {
    let mode = match report.mode {
        MetricMode::Full => "full",
        MetricMode::Ict => "ict",
    };
    let mut out = format!("mode: {mode}\n");
    out.push_str(&format!(
        "{:>10} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "target", "A", "P", "R", "F", "MCTA"
    ));
    let fmt_mcta = |m: &Option<f64>| m.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    for t in &report.targets {
        out.push_str(&format!(
            "{:>10} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>8}\n",
            t.target_id,
            t.a,
            t.p,
            t.r,
            t.f,
            fmt_mcta(&t.mcta.map(|m| m.value)),
        ));
    }
    out.push_str(&format!(
        "{:>10} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>8}\n",
        "mean",
        report.mean_a,
        report.mean_p,
        report.mean_r,
        report.total_f,
        fmt_mcta(&report.mean_mcta),
    ));
    let mut flagged: BTreeMap<u64, &Vec<String>> = BTreeMap::new();
    for t in &report.targets {
        if !t.flags.is_empty() {
            flagged.insert(t.target_id, &t.flags);
        }
    }
    for (id, flags) in flagged {
        for flag in flags {
            out.push_str(&format!("note: target {id}: {flag}\n"));
        }
    }
    out
}

pub fn write_report_text(report: &MetricReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_text(report)).map_err(|e| Error::io(path, e))
}

/// Confusion matrix as CSV, dummy camera labeled Cx.
pub fn write_confusion_csv(m: &ConfusionMatrix, path: &Path) -> Result<()> {
    let label = |i: usize| {
        if i == m.num_cameras as usize {
            "Cx".to_string()
        } else {
            format!("{}", i + 1)
        }
    };
    let mut out = String::from("g");
    for j in 0..m.rows.len() {
        out.push(',');
        out.push_str(&label(j));
    }
    out.push('\n');
    for (i, row) in m.rows.iter().enumerate() {
        out.push_str(&label(i));
        for v in row {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
