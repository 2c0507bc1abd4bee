//! Synthetic trajectory generation.
//!
//! Targets walk the camera graph with Gaussian dwell and transit durations
//! (rounded, clamped to at least one step). Within a dwell the bounding box
//! sweeps across the frame from the side the target entered toward the side
//! it will leave, so the exit direction is observable from the last detection
//! before a transit.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::{BBox, CameraId, CameraNetwork, Observation, Trajectory, TrajectorySet};
use crate::error::{Error, Result};
use crate::seed;

/// Shape of the camera graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Cameras 1..N in a row; targets bounce at the ends.
    Chain,
    /// Chain plus a link between camera N and camera 1.
    Ring,
    /// Random graph, regenerated until connected.
    RandomGraph,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Topology::Chain),
            "ring" => Ok(Topology::Ring),
            "random-graph" => Ok(Topology::RandomGraph),
            other => Err(Error::config(format!(
                "unknown topology `{other}` (expected chain, ring, or random-graph)"
            ))),
        }
    }
}

/// Parameters for [`generate_synthetic`].
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub num_cameras: u32,
    pub num_targets: u32,
    pub topology: Topology,
    pub frame_width: u32,
    pub frame_height: u32,
    pub fps: f64,
    /// Mean dwell duration in steps while visible in one camera.
    pub dwell_mean: f64,
    pub dwell_std: f64,
    /// Default transit duration between linked cameras.
    pub transit_mean: f64,
    pub transit_std: f64,
    /// Per ordered camera pair overrides of (transit_mean, transit_std).
    pub transit_overrides: BTreeMap<(u32, u32), (f64, f64)>,
    /// Probability of leaving the network after each dwell.
    pub exit_prob: f64,
    /// Hard cap on trajectory length in steps.
    pub max_steps: u32,
    /// Edge probability for the random-graph topology.
    pub edge_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_cameras: 4,
            num_targets: 10,
            topology: Topology::Chain,
            frame_width: 320,
            frame_height: 240,
            fps: 20.0,
            dwell_mean: 30.0,
            dwell_std: 5.0,
            transit_mean: 10.0,
            transit_std: 3.0,
            transit_overrides: BTreeMap::new(),
            exit_prob: 0.3,
            max_steps: 2000,
            edge_prob: 0.35,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.num_cameras == 0 {
            return Err(Error::config("num_cameras must be at least 1"));
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::config("frame dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&self.exit_prob) {
            return Err(Error::config("exit_prob must be in [0, 1]"));
        }
        if self.dwell_mean < 1.0 || self.transit_mean < 0.0 {
            return Err(Error::config(
                "dwell_mean must be >= 1 and transit_mean >= 0",
            ));
        }
        if self.dwell_std < 0.0 || self.transit_std < 0.0 {
            return Err(Error::config("duration std must be non-negative"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be positive"));
        }
        if self.topology == Topology::RandomGraph && !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::config("edge_prob must be in [0, 1]"));
        }
        Ok(())
    }

    fn transit_params(&self, from: u32, to: u32) -> (f64, f64) {
        self.transit_overrides
            .get(&(from, to))
            .copied()
            .unwrap_or((self.transit_mean, self.transit_std))
    }
}

/// Generates a network and `num_targets` trajectories, deterministically in
/// the config seed.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<TrajectorySet> {
    cfg.validate()?;
    let links = build_links(cfg)?;
    let network =
        CameraNetwork::uniform(cfg.num_cameras, cfg.frame_width, cfg.frame_height, cfg.fps)
            .with_links(links);
    let mut trajectories = Vec::new();
    for target_id in 1..=cfg.num_targets as u64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed::derive_indexed(cfg.seed, "synth-target", target_id));
        trajectories.push(walk_target(cfg, &network, target_id, &mut rng));
    }
    TrajectorySet::new(network, trajectories)
}

fn build_links(cfg: &SynthConfig) -> Result<BTreeSet<(u32, u32)>> {
    let n = cfg.num_cameras;
    let mut links = BTreeSet::new();
    match cfg.topology {
        Topology::Chain => {
            for i in 1..n {
                links.insert((i, i + 1));
            }
        }
        Topology::Ring => {
            for i in 1..n {
                links.insert((i, i + 1));
            }
            if n > 2 {
                links.insert((1, n));
            }
        }
        Topology::RandomGraph => {
            if n == 1 {
                return Ok(links);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, "synth-graph"));
            for attempt in 0..100 {
                let _ = attempt;
                links.clear();
                for a in 1..=n {
                    for b in (a + 1)..=n {
                        if rng.gen_bool(cfg.edge_prob) {
                            links.insert((a, b));
                        }
                    }
                }
                if is_connected(n, &links) {
                    return Ok(links);
                }
            }
            return Err(Error::config(format!(
                "failed to sample a connected graph over {n} cameras in 100 attempts (edge_prob = {})",
                cfg.edge_prob
            )));
        }
    }
    Ok(links)
}

fn is_connected(n: u32, links: &BTreeSet<(u32, u32)>) -> bool {
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n as usize + 1];
    let mut queue = VecDeque::from([1u32]);
    seen[1] = true;
    while let Some(c) = queue.pop_front() {
        for &(a, b) in links {
            let other = if a == c {
                b
            } else if b == c {
                a
            } else {
                continue;
            };
            if !seen[other as usize] {
                seen[other as usize] = true;
                queue.push_back(other);
            }
        }
    }
    (1..=n).all(|c| seen[c as usize])
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Left,
    Right,
}

/// Walk state while generating one trajectory.
struct Walker {
    current: u32,
    /// +1 walks toward higher camera ids, -1 toward lower (chain and ring).
    direction: i32,
    previous: Option<u32>,
}

impl Walker {
    /// Picks the next camera, or `None` when there is nowhere to go.
    fn advance(
        &mut self,
        cfg: &SynthConfig,
        net: &CameraNetwork,
        rng: &mut ChaCha8Rng,
    ) -> Option<u32> {
        let n = cfg.num_cameras;
        let next = match cfg.topology {
            Topology::Chain => {
                if n == 1 {
                    return None;
                }
                let mut cand = self.current as i64 + self.direction as i64;
                if cand < 1 || cand > n as i64 {
                    self.direction = -self.direction;
                    cand = self.current as i64 + self.direction as i64;
                }
                cand as u32
            }
            Topology::Ring => {
                if n == 1 {
                    return None;
                }
                let cand = self.current as i64 - 1 + self.direction as i64;
                (cand.rem_euclid(n as i64) + 1) as u32
            }
            Topology::RandomGraph => {
                let mut nbrs = net.neighbors(CameraId(self.current));
                if nbrs.len() > 1 {
                    if let Some(prev) = self.previous {
                        nbrs.retain(|c| c.0 != prev);
                    }
                }
                if nbrs.is_empty() {
                    return None;
                }
                nbrs[rng.gen_range(0..nbrs.len())].0
            }
        };
        self.previous = Some(self.current);
        self.current = next;
        Some(next)
    }
}

fn exit_side(cfg: &SynthConfig, from: u32, to: u32, direction: i32) -> Side {
    match cfg.topology {
        Topology::Ring => {
            if direction > 0 {
                Side::Right
            } else {
                Side::Left
            }
        }
        _ => {
            if to > from {
                Side::Right
            } else {
                Side::Left
            }
        }
    }
}

fn walk_target(
    cfg: &SynthConfig,
    net: &CameraNetwork,
    target_id: u64,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    let mut walker = Walker {
        current: rng.gen_range(1..=cfg.num_cameras),
        direction: if rng.gen_bool(0.5) { 1 } else { -1 },
        previous: None,
    };
    let mut obs: Vec<Observation> = Vec::new();
    let mut enter = Side::Left;
    loop {
        let camera = walker.current;
        let dwell = sample_duration(rng, cfg.dwell_mean, cfg.dwell_std);
        let exiting = obs.len() as u32 + dwell >= cfg.max_steps
            || (cfg.exit_prob > 0.0 && rng.gen_bool(cfg.exit_prob));
        let next = if exiting {
            None
        } else {
            walker.advance(cfg, net, rng)
        };
        let exit = match next {
            Some(to) => exit_side(cfg, camera, to, walker.direction),
            // Walks straight through on the way out of the network.
            None => {
                if enter == Side::Left {
                    Side::Right
                } else {
                    Side::Left
                }
            }
        };
        emit_dwell(cfg, camera, dwell, enter, exit, &mut obs);
        let Some(to) = next else { break };
        let (mean, std) = cfg.transit_params(camera, to);
        let transit = sample_duration(rng, mean.max(1.0), std);
        for _ in 0..transit {
            obs.push(Observation::Hidden);
        }
        // Entering the new camera from the side facing the old one.
        enter = match exit {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
    }
    Trajectory::new(target_id, 0, obs).expect("generated trajectory starts and ends visible")
}

/// Gaussian duration, rounded and clamped to at least one step.
fn sample_duration(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> u32 {
    let dist = Normal::new(mean, std).expect("validated std");
    (dist.sample(rng).round().max(1.0)) as u32
}

fn emit_dwell(
    cfg: &SynthConfig,
    camera: u32,
    dwell: u32,
    enter: Side,
    exit: Side,
    obs: &mut Vec<Observation>,
) {
    let fw = cfg.frame_width as f64;
    let fh = cfg.frame_height as f64;
    let w = (0.08 * fw).round().max(1.0);
    let h = (0.30 * fh).round().max(1.0);
    let y = ((fh - h) / 2.0).floor();
    let span = fw - w;
    let side_x = |s: Side| match s {
        Side::Left => 0.0,
        Side::Right => span,
    };
    let (x0, x1) = (side_x(enter), side_x(exit));
    for i in 0..dwell {
        let frac = if dwell == 1 {
            0.5
        } else {
            i as f64 / (dwell - 1) as f64
        };
        let x = (x0 + (x1 - x0) * frac).round().clamp(0.0, span);
        obs.push(Observation::Visible {
            camera: CameraId(camera),
            bbox: BBox { x, y, w, h },
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_camera_single_target_is_one_dwell() {
        let cfg = SynthConfig {
            num_cameras: 1,
            num_targets: 1,
            exit_prob: 1.0,
            dwell_mean: 5.0,
            dwell_std: 0.0,
            ..SynthConfig::default()
        };
        let set = generate_synthetic(&cfg).unwrap();
        assert_eq!(set.len(), 1);
        let traj = set.get(1).unwrap();
        assert_eq!(traj.len(), 5);
        assert!(traj.obs.iter().all(|o| o.camera() == Some(CameraId(1))));
    }

    #[test]
    fn zero_std_transits_have_exact_length() {
        let cfg = SynthConfig {
            num_cameras: 3,
            num_targets: 20,
            exit_prob: 0.0,
            max_steps: 200,
            dwell_mean: 4.0,
            dwell_std: 0.0,
            transit_mean: 5.0,
            transit_std: 0.0,
            seed: 11,
            ..SynthConfig::default()
        };
        let set = generate_synthetic(&cfg).unwrap();
        for traj in set.trajectories.values() {
            let mut gap = 0u32;
            for o in &traj.obs {
                match o {
                    Observation::Hidden => gap += 1,
                    Observation::Visible { .. } => {
                        if gap > 0 {
                            assert_eq!(gap, 5, "target {}", traj.target_id);
                        }
                        gap = 0;
                    }
                }
            }
        }
    }

    #[test]
    fn chain_transitions_follow_chain_links() {
        let cfg = SynthConfig {
            num_cameras: 4,
            num_targets: 30,
            exit_prob: 0.1,
            max_steps: 400,
            seed: 3,
            ..SynthConfig::default()
        };
        let set = generate_synthetic(&cfg).unwrap();
        for traj in set.trajectories.values() {
            let cams: Vec<CameraId> = traj.obs.iter().filter_map(|o| o.camera()).collect();
            for pair in cams.windows(2) {
                let (a, b) = (pair[0].0, pair[1].0);
                assert!(a == b || a.abs_diff(b) == 1, "jump {a}->{b}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let cfg = SynthConfig {
            num_targets: 5,
            seed: 99,
            ..SynthConfig::default()
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        for (x, y) in a.trajectories.values().zip(b.trajectories.values()) {
            assert_eq!(x.obs, y.obs);
        }
        let c = generate_synthetic(&SynthConfig { seed: 100, ..cfg }).unwrap();
        let differs = a
            .trajectories
            .values()
            .zip(c.trajectories.values())
            .any(|(x, y)| x.obs != y.obs);
        assert!(differs);
    }

    #[test]
    fn random_graph_is_connected() {
        let cfg = SynthConfig {
            num_cameras: 6,
            num_targets: 3,
            topology: Topology::RandomGraph,
            edge_prob: 0.4,
            seed: 5,
            ..SynthConfig::default()
        };
        let set = generate_synthetic(&cfg).unwrap();
        let links = set.network.links.clone().unwrap();
        assert!(is_connected(6, &links));
    }

    #[test]
    fn impossible_graph_density_errors_out() {
        let cfg = SynthConfig {
            num_cameras: 5,
            num_targets: 1,
            topology: Topology::RandomGraph,
            edge_prob: 0.0,
            seed: 5,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }

    #[test]
    fn last_dwell_observation_sits_on_the_exit_side() {
        let cfg = SynthConfig {
            num_cameras: 4,
            num_targets: 15,
            exit_prob: 0.0,
            max_steps: 300,
            dwell_mean: 6.0,
            dwell_std: 0.0,
            seed: 21,
            ..SynthConfig::default()
        };
        let set = generate_synthetic(&cfg).unwrap();
        let fw = 320.0;
        let w = (0.08f64 * fw).round();
        for traj in set.trajectories.values() {
            let mut idx = 0;
            while idx < traj.obs.len() {
                if let (Some(cur), None) = (
                    traj.obs[idx].camera(),
                    traj.obs.get(idx + 1).map(|o| o.camera()).flatten(),
                ) {
                    if idx + 1 >= traj.obs.len() {
                        break;
                    }
                    // Find the camera after the gap.
                    let next_cam = traj.obs[idx + 1..]
                        .iter()
                        .find_map(|o| o.camera())
                        .expect("trajectory ends visible");
                    let bbox = traj.obs[idx].bbox().unwrap();
                    if next_cam.0 > cur.0 {
                        assert_eq!(bbox.x, fw - w, "exit right expected");
                    } else {
                        assert_eq!(bbox.x, 0.0, "exit left expected");
                    }
                }
                idx += 1;
            }
        }
    }
}
