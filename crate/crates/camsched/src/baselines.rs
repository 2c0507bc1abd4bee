//! Non-learning comparison schedulers.
//!
//! All three resolve presence directly against ground truth (no simulated
//! re-identification error) and share a tracking loop: while the target is
//! confirmed in a camera they poll only that camera; once it reports absent
//! they search according to their strategy until the target is re-acquired.
//!
//! - exhaustive: search polls every camera every step.
//! - neighbor: search polls only the link-neighbors of the last confirmed
//!   camera; cameras with no links fall back to exhaustive search.
//! - gaussian: on losing the target, sample a transit duration from the last
//!   camera's pooled exit distribution, poll nothing while it elapses, then
//!   search the neighbors.

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::env::{PollLog, PollRecord, PredictedTrajectory};
use crate::error::{Error, Result};
use crate::netmodel::{infer_links, BBox, CameraId, CameraNetwork, Trajectory, TrajectorySet};

/// Transit-duration statistics for one ordered camera pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussStat {
    pub count: u32,
    pub mean: f64,
    pub std: f64,
}

/// Per-pair Gaussian transit-time model fitted from training trajectories.
#[derive(Debug, Clone)]
pub struct TransitionGaussians {
    pub pairs: BTreeMap<(u32, u32), GaussStat>,
}

impl TransitionGaussians {
    /// Pooled statistics over every transition leaving `cam`.
    pub fn pooled_exit(&self, cam: CameraId) -> Option<GaussStat> {
        let outgoing: Vec<&GaussStat> = self
            .pairs
            .iter()
            .filter(|((from, _), _)| *from == cam.0)
            .map(|(_, s)| s)
            .collect();
        let total: u32 = outgoing.iter().map(|s| s.count).sum();
        if total == 0 {
            return None;
        }
        let mean = outgoing
            .iter()
            .map(|s| s.count as f64 * s.mean)
            .sum::<f64>()
            / total as f64;
        let std = if total == 1 {
            0.0
        } else {
            let within: f64 = outgoing
                .iter()
                .map(|s| (s.count - 1) as f64 * s.std * s.std)
                .sum();
            let between: f64 = outgoing
                .iter()
                .map(|s| s.count as f64 * (s.mean - mean) * (s.mean - mean))
                .sum();
            ((within + between) / (total - 1) as f64).sqrt()
        };
        Some(GaussStat {
            count: total,
            mean,
            std,
        })
    }
}

/// Fits per-ordered-pair transit Gaussians from observed gap lengths.
pub fn fit_transition_gaussians(train: &TrajectorySet) -> TransitionGaussians {
    let inferred = infer_links(train);
    let mut pairs = BTreeMap::new();
    for (pair, samples) in &inferred.transit_samples {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / n;
        let std = if samples.len() < 2 {
            0.0
        } else {
            let ss: f64 = samples
                .iter()
                .map(|&s| (s as f64 - mean) * (s as f64 - mean))
                .sum();
            (ss / (n - 1.0)).sqrt()
        };
        pairs.insert(
            *pair,
            GaussStat {
                count: samples.len() as u32,
                mean,
                std,
            },
        );
    }
    TransitionGaussians { pairs }
}

/// Lowest-index camera the target is visible in at `t`, with its box.
fn visible_camera(traj: &Trajectory, net: &CameraNetwork, t: i64) -> Option<(CameraId, BBox)> {
    for c in 1..=net.num_cameras {
        let cam = CameraId(c);
        if let Some(b) = traj.bbox_in(cam, t) {
            return Some((cam, *b));
        }
    }
    None
}

enum Search {
    /// Poll every camera.
    All,
    /// Poll a fixed sorted camera set.
    Set(Vec<CameraId>),
    /// Poll nothing for the counted steps, then switch to the set.
    WaitThen { remaining: u32, set: Vec<CameraId> },
}

/// Strategy hook: what to do when the target is lost at `cam`.
trait SearchPlan {
    fn on_lost(&mut self, cam: CameraId, warnings: &mut Vec<String>) -> Search;
}

/// Shared tracking loop over one trajectory.
fn run_baseline(
    traj: &Trajectory,
    net: &CameraNetwork,
    plan: &mut dyn SearchPlan,
) -> (PredictedTrajectory, PollLog, Vec<String>) {
    let first = traj.obs[0];
    let mut predicted = PredictedTrajectory {
        target_id: traj.target_id,
        start_t: traj.start_t,
        entries: vec![Some((first.camera().unwrap(), *first.bbox().unwrap()))],
    };
    let mut log = PollLog::new();
    let mut warnings = Vec::new();
    let mut tracking = first.camera().unwrap();
    let mut search: Option<Search> = None;
    let mut tau = 0u32;
    for t in traj.start_t + 1..=traj.end_t() {
        let found = visible_camera(traj, net, t);
        let (polled, frames, present) = match &mut search {
            None => {
                // Tracking: poll the confirmed camera alone.
                if traj.visible_in(tracking, t) {
                    (tracking, 1, true)
                } else {
                    search = Some(plan.on_lost(tracking, &mut warnings));
                    match search.as_mut().unwrap() {
                        Search::WaitThen { .. } => (tracking, 1, false),
                        Search::All => match found {
                            Some((cam, _)) => (cam, net.num_cameras, true),
                            None => (CameraId(1), net.num_cameras, false),
                        },
                        Search::Set(set) => {
                            let mut polled_set = vec![tracking];
                            polled_set.extend(set.iter().cloned());
                            polled_set.sort();
                            polled_set.dedup();
                            let hit = polled_set.iter().find(|c| traj.visible_in(**c, t));
                            match hit {
                                Some(&cam) => (cam, polled_set.len() as u32, true),
                                None => (polled_set[0], polled_set.len() as u32, false),
                            }
                        }
                    }
                }
            }
            Some(Search::All) => match found {
                Some((cam, _)) => (cam, net.num_cameras, true),
                None => (CameraId(1), net.num_cameras, false),
            },
            Some(Search::Set(set)) => {
                let hit = set.iter().find(|c| traj.visible_in(**c, t)).cloned();
                match hit {
                    Some(cam) => (cam, set.len() as u32, true),
                    None => (set[0], set.len() as u32, false),
                }
            }
            Some(Search::WaitThen { remaining, set }) => {
                if *remaining > 0 {
                    *remaining -= 1;
                    tau += 1;
                    predicted.entries.push(None);
                    log.push(PollRecord {
                        t,
                        polled_camera: None,
                        frames_polled: 0,
                        present: false,
                        corrupted: false,
                        tau,
                    });
                    continue;
                }
                let hit = set.iter().find(|c| traj.visible_in(**c, t)).cloned();
                match hit {
                    Some(cam) => (cam, set.len() as u32, true),
                    None => (set[0], set.len() as u32, false),
                }
            }
        };
        if present {
            tracking = polled;
            search = None;
            tau = 0;
            let bbox = *traj.bbox_in(polled, t).unwrap();
            predicted.entries.push(Some((polled, bbox)));
        } else {
            tau += 1;
            predicted.entries.push(None);
        }
        log.push(PollRecord {
            t,
            polled_camera: Some(polled),
            frames_polled: frames,
            present,
            corrupted: false,
            tau,
        });
    }
    (predicted, log, warnings)
}

struct ExhaustivePlan;

impl SearchPlan for ExhaustivePlan {
    fn on_lost(&mut self, _cam: CameraId, _warnings: &mut Vec<String>) -> Search {
        Search::All
    }
}

/// Polls every camera each step until the target is found, then tracks it.
pub fn exhaustive_policy(traj: &Trajectory, net: &CameraNetwork) -> (PredictedTrajectory, PollLog) {
    let (predicted, log, _) = run_baseline(traj, net, &mut ExhaustivePlan);
    (predicted, log)
}

struct NeighborPlan<'a> {
    net: &'a CameraNetwork,
    warned: BTreeSet<u32>,
}

impl SearchPlan for NeighborPlan<'_> {
    fn on_lost(&mut self, cam: CameraId, warnings: &mut Vec<String>) -> Search {
        let nb = self.net.neighbors(cam);
        if nb.is_empty() {
            if self.warned.insert(cam.0) {
                warnings.push(format!(
                    "camera {cam} has no links; searching exhaustively for this transition"
                ));
            }
            Search::All
        } else {
            Search::Set(nb)
        }
    }
}

/// Searches only the link-neighbors of the last confirmed camera.
pub fn neighbor_policy(
    traj: &Trajectory,
    net: &CameraNetwork,
) -> Result<(PredictedTrajectory, PollLog, Vec<String>)> {
    if net.links.is_none() {
        return Err(Error::config("neighbor baseline needs a camera link set"));
    }
    let mut plan = NeighborPlan {
        net,
        warned: BTreeSet::new(),
    };
    Ok(run_baseline(traj, net, &mut plan))
}

struct GaussianPlan<'a> {
    net: &'a CameraNetwork,
    gauss: &'a TransitionGaussians,
    rng: &'a mut ChaCha8Rng,
    warned_stats: BTreeSet<u32>,
    warned_links: BTreeSet<u32>,
}

impl SearchPlan for GaussianPlan<'_> {
    fn on_lost(&mut self, cam: CameraId, warnings: &mut Vec<String>) -> Search {
        let delta = match self.gauss.pooled_exit(cam) {
            Some(stat) => {
                let normal = Normal::new(stat.mean, stat.std).expect("valid gaussian");
                normal.sample(self.rng).round().max(1.0) as u32
            }
            None => {
                if self.warned_stats.insert(cam.0) {
                    warnings.push(format!(
                        "no transit samples leaving camera {cam}; assuming a 1-step transit"
                    ));
                }
                1
            }
        };
        let set = self.net.neighbors(cam);
        let set = if set.is_empty() {
            if self.warned_links.insert(cam.0) {
                warnings.push(format!(
                    "camera {cam} has no links; searching all cameras after the wait"
                ));
            }
            (1..=self.net.num_cameras).map(CameraId).collect()
        } else {
            set
        };
        // The sampled duration counts the loss-detection step, already spent.
        Search::WaitThen {
            remaining: delta - 1,
            set,
        }
    }
}

/// Waits out a sampled transit time, then searches the neighbors.
pub fn gaussian_policy(
    traj: &Trajectory,
    net: &CameraNetwork,
    gauss: &TransitionGaussians,
    rng: &mut ChaCha8Rng,
) -> Result<(PredictedTrajectory, PollLog, Vec<String>)> {
    if net.links.is_none() {
        return Err(Error::config("gaussian baseline needs a camera link set"));
    }
    let mut plan = GaussianPlan {
        net,
        gauss,
        rng,
        warned_stats: BTreeSet::new(),
        warned_links: BTreeSet::new(),
    };
    Ok(run_baseline(traj, net, &mut plan))
}
