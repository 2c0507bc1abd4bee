//! Camera network and trajectory data model.
//!
//! A [`CameraNetwork`] describes the physical sensor layout: camera count,
//! per-camera frame geometry, and (optionally) which cameras are linked by
//! walkable paths. A [`Trajectory`] is one target's ground-truth track through
//! the network, stored densely over its lifespan with explicit "not visible
//! anywhere" entries for inter-camera transits.

mod io;
mod links;
mod synth;

pub use io::{load_network, load_trajectories, save_network, save_trajectories, TrajectoryFormat};
pub use links::{infer_links, split_train_test, InferredLinks};
pub use synth::{generate_synthetic, SynthConfig, Topology};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based camera index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CameraId(pub u32);

impl std::fmt::Display for CameraId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Axis-aligned bounding box in pixel coordinates of one camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Where a target is at one timestep: a camera detection, or nowhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Visible {
        camera: CameraId,
        bbox: BBox,
    },
    /// Not visible in any camera (in transit, occluded, or exited).
    Hidden,
}

impl Observation {
    pub fn is_visible(&self) -> bool {
        matches!(self, Observation::Visible { .. })
    }

    pub fn camera(&self) -> Option<CameraId> {
        match self {
            Observation::Visible { camera, .. } => Some(*camera),
            Observation::Hidden => None,
        }
    }

    pub fn bbox(&self) -> Option<&BBox> {
        match self {
            Observation::Visible { bbox, .. } => Some(bbox),
            Observation::Hidden => None,
        }
    }
}

/// Sensor layout shared by every trajectory in a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraNetwork {
    pub num_cameras: u32,
    /// Frame width per camera, indexed by camera id - 1.
    pub frame_width: Vec<u32>,
    /// Frame height per camera, indexed by camera id - 1.
    pub frame_height: Vec<u32>,
    pub fps: f64,
    /// Unordered camera links, each stored as (low id, high id).
    /// `None` means the link structure is unknown.
    pub links: Option<BTreeSet<(u32, u32)>>,
}

impl CameraNetwork {
    /// Builds a network where every camera shares one frame geometry.
    pub fn uniform(num_cameras: u32, frame_width: u32, frame_height: u32, fps: f64) -> Self {
        CameraNetwork {
            num_cameras,
            frame_width: vec![frame_width; num_cameras as usize],
            frame_height: vec![frame_height; num_cameras as usize],
            fps,
            links: None,
        }
    }

    pub fn contains(&self, camera: CameraId) -> bool {
        camera.0 >= 1 && camera.0 <= self.num_cameras
    }

    pub fn width(&self, camera: CameraId) -> u32 {
        self.frame_width[(camera.0 - 1) as usize]
    }

    pub fn height(&self, camera: CameraId) -> u32 {
        self.frame_height[(camera.0 - 1) as usize]
    }

    pub fn with_links(mut self, links: BTreeSet<(u32, u32)>) -> Self {
        self.links = Some(links);
        self
    }

    /// Cameras reachable from `camera` in one hop, sorted ascending.
    /// Empty when the link structure is unknown or the camera is isolated.
    pub fn neighbors(&self, camera: CameraId) -> Vec<CameraId> {
        let mut out = Vec::new();
        if let Some(links) = &self.links {
            for &(a, b) in links {
                if a == camera.0 {
                    out.push(CameraId(b));
                } else if b == camera.0 {
                    out.push(CameraId(a));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_cameras == 0 {
            return Err(Error::validation("network must have at least one camera"));
        }
        if self.frame_width.len() != self.num_cameras as usize
            || self.frame_height.len() != self.num_cameras as usize
        {
            return Err(Error::validation(format!(
                "frame geometry arrays must have {} entries",
                self.num_cameras
            )));
        }
        if self.frame_width.iter().any(|&w| w == 0) || self.frame_height.iter().any(|&h| h == 0) {
            return Err(Error::validation("frame dimensions must be positive"));
        }
        if let Some(links) = &self.links {
            for &(a, b) in links {
                if a == b {
                    return Err(Error::validation(format!("self-link on camera {a}")));
                }
                if a > b {
                    return Err(Error::validation(format!(
                        "link ({a}, {b}) must be stored as (low, high)"
                    )));
                }
                if !self.contains(CameraId(a)) || !self.contains(CameraId(b)) {
                    return Err(Error::validation(format!(
                        "link ({a}, {b}) references a camera outside 1..={}",
                        self.num_cameras
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One target's dense ground-truth track over `[start_t, end_t]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub target_id: u64,
    pub start_t: i64,
    /// Observation at `start_t + i`. First and last entries are visible.
    pub obs: Vec<Observation>,
    /// Extra simultaneous detections (overlapping fields of view), keyed by
    /// timestep. Rarely populated; the entry in `obs` is the primary one.
    pub alt: BTreeMap<i64, Vec<(CameraId, BBox)>>,
}

impl Trajectory {
    pub fn new(target_id: u64, start_t: i64, obs: Vec<Observation>) -> Result<Self> {
        let traj = Trajectory {
            target_id,
            start_t,
            obs,
            alt: BTreeMap::new(),
        };
        traj.check_shape()?;
        Ok(traj)
    }

    fn check_shape(&self) -> Result<()> {
        if self.obs.is_empty() {
            return Err(Error::validation(format!(
                "target {}: empty trajectory",
                self.target_id
            )));
        }
        if !self.obs[0].is_visible() || !self.obs[self.obs.len() - 1].is_visible() {
            return Err(Error::validation(format!(
                "target {}: trajectory must start and end with a visible observation",
                self.target_id
            )));
        }
        Ok(())
    }

    pub fn end_t(&self) -> i64 {
        self.start_t + self.obs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Observation at absolute time `t`, or `None` outside the lifespan.
    pub fn obs_at(&self, t: i64) -> Option<&Observation> {
        if t < self.start_t {
            return None;
        }
        self.obs.get((t - self.start_t) as usize)
    }

    /// Primary camera the target occupies at `t`. `None` when hidden or
    /// outside the lifespan.
    pub fn camera_at(&self, t: i64) -> Option<CameraId> {
        self.obs_at(t).and_then(|o| o.camera())
    }

    /// True if the target shows up in `camera` at time `t`, counting
    /// overlapping-view alternates.
    pub fn visible_in(&self, camera: CameraId, t: i64) -> bool {
        self.bbox_in(camera, t).is_some()
    }

    /// Bounding box of the target in `camera` at `t`, if visible there.
    pub fn bbox_in(&self, camera: CameraId, t: i64) -> Option<&BBox> {
        match self.obs_at(t) {
            Some(Observation::Visible { camera: c, bbox }) if *c == camera => return Some(bbox),
            _ => {}
        }
        self.alt
            .get(&t)
            .and_then(|alts| alts.iter().find(|(c, _)| *c == camera))
            .map(|(_, b)| b)
    }

    /// Earliest `t` in `[from, to]` where the target is visible in `camera`.
    pub fn next_visible_in(&self, camera: CameraId, from: i64, to: i64) -> Option<i64> {
        let lo = from.max(self.start_t);
        let hi = to.min(self.end_t());
        (lo..=hi).find(|&t| self.visible_in(camera, t))
    }

    /// Checks camera indices and frame bounds against the network.
    pub fn validate(&self, net: &CameraNetwork) -> Result<()> {
        self.check_shape()?;
        for (i, obs) in self.obs.iter().enumerate() {
            if let Observation::Visible { camera, bbox } = obs {
                self.validate_one(net, *camera, bbox, self.start_t + i as i64)?;
            }
        }
        for (&t, alts) in &self.alt {
            for (camera, bbox) in alts {
                self.validate_one(net, *camera, bbox, t)?;
            }
        }
        Ok(())
    }

    fn validate_one(
        &self,
        net: &CameraNetwork,
        camera: CameraId,
        bbox: &BBox,
        t: i64,
    ) -> Result<()> {
        if !net.contains(camera) {
            return Err(Error::validation(format!(
                "target {} at t={}: camera {} outside 1..={}",
                self.target_id, t, camera, net.num_cameras
            )));
        }
        let (w, h) = (net.width(camera) as f64, net.height(camera) as f64);
        let ok = bbox.x >= 0.0
            && bbox.x < w
            && bbox.y >= 0.0
            && bbox.y < h
            && bbox.w >= 1.0
            && bbox.h >= 1.0;
        if !ok {
            return Err(Error::validation(format!(
                "target {} at t={}: bbox ({}, {}, {}, {}) outside {}x{} frame of camera {}",
                self.target_id, t, bbox.x, bbox.y, bbox.w, bbox.h, w, h, camera
            )));
        }
        Ok(())
    }
}

/// A camera network together with every target tracked in it.
#[derive(Debug, Clone)]
pub struct TrajectorySet {
    pub network: CameraNetwork,
    /// Keyed by target id; ordered so iteration is deterministic.
    pub trajectories: BTreeMap<u64, Trajectory>,
}

impl TrajectorySet {
    pub fn new(network: CameraNetwork, trajectories: Vec<Trajectory>) -> Result<Self> {
        network.validate()?;
        let mut map = BTreeMap::new();
        for traj in trajectories {
            traj.validate(&network)?;
            let id = traj.target_id;
            if map.insert(id, traj).is_some() {
                return Err(Error::validation(format!("duplicate target id {id}")));
            }
        }
        Ok(TrajectorySet {
            network,
            trajectories: map,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn target_ids(&self) -> Vec<u64> {
        self.trajectories.keys().copied().collect()
    }

    pub fn get(&self, target_id: u64) -> Option<&Trajectory> {
        self.trajectories.get(&target_id)
    }

    /// Targets other than `target_id` visible in `camera` at `t`, in id order.
    pub fn others_visible_in(&self, camera: CameraId, t: i64, target_id: u64) -> Vec<&Trajectory> {
        self.trajectories
            .values()
            .filter(|tr| tr.target_id != target_id && tr.visible_in(camera, t))
            .collect()
    }
}
