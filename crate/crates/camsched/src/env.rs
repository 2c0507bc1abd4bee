//! The camera-polling decision process.
//!
//! At each step the agent either polls one camera for the target or polls
//! nothing (the dummy action). Polling runs a presence query against ground
//! truth, optionally corrupted by a simulated re-identification error
//! channel. The agent state tracks the last three confirmed observations, a
//! bounded history of past actions, and the time elapsed since the last
//! confirmed sighting.
//!
//! Timing convention: an action chosen in the state at time `t` polls frame
//! `t + 1` (or `t + jump` during training, where random jumps simulate
//! occlusions and missed detections).

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netmodel::{BBox, CameraId, CameraNetwork, Observation, Trajectory, TrajectorySet};

/// Reward for correctly polling nothing while the target is hidden.
pub const WAIT_REWARD: f64 = 0.1;
/// Reward for a poll that never pays off within the reward horizon.
pub const MISS_REWARD: f64 = -1.0;
/// Largest random jump used to simulate occlusions during training.
pub const MAX_TRAIN_JUMP: u32 = 20;

/// 1-based action index: `1..=N` polls that camera, `N + 1` polls nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(pub u32);

impl Action {
    pub fn dummy(num_cameras: u32) -> Action {
        Action(num_cameras + 1)
    }

    pub fn is_dummy(self, num_cameras: u32) -> bool {
        self.0 == num_cameras + 1
    }

    /// The polled camera, or `None` for the dummy action.
    pub fn camera(self, num_cameras: u32) -> Option<CameraId> {
        (self.0 <= num_cameras).then_some(CameraId(self.0))
    }

    /// Zero-based index into Q-value vectors.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

/// Environment parameters.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    /// Probability that a presence query is corrupted.
    pub err_rate: f64,
    /// Steps without a confirmed sighting before the state is randomized.
    /// `None` disables the limit.
    pub time_limit: Option<u32>,
    /// Lookahead window for camera-poll rewards. Defaults to `time_limit`.
    pub reward_horizon: Option<u32>,
    /// Normalization constant for the elapsed-time feature. Defaults to
    /// `time_limit`, then `reward_horizon`.
    pub tau_norm: Option<u32>,
    /// Number of past actions kept in the agent state.
    pub history_len: usize,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            err_rate: 0.0,
            time_limit: Some(800),
            reward_horizon: None,
            tau_norm: None,
            history_len: 20,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.err_rate) {
            return Err(Error::config("err_rate must be in [0, 1]"));
        }
        if self.history_len == 0 {
            return Err(Error::config("history_len must be at least 1"));
        }
        if self.time_limit == Some(0) || self.reward_horizon == Some(0) || self.tau_norm == Some(0)
        {
            return Err(Error::config(
                "time_limit, reward_horizon, and tau_norm must be positive",
            ));
        }
        if self.time_limit.is_none() && self.reward_horizon.is_none() {
            return Err(Error::config(
                "one of time_limit or reward_horizon must be set",
            ));
        }
        Ok(())
    }

    /// Effective reward lookahead in steps.
    pub fn reward_horizon(&self) -> u32 {
        self.reward_horizon.or(self.time_limit).expect("validated")
    }

    /// Effective normalization constant for the elapsed-time feature.
    pub fn tau_norm(&self) -> u32 {
        self.tau_norm
            .or(self.time_limit)
            .or(self.reward_horizon)
            .expect("validated")
    }
}

/// Agent-visible state of one tracking episode.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub target_id: u64,
    /// Current absolute time.
    pub t: i64,
    /// Steps since the last confirmed sighting (or state randomization).
    pub tau: u32,
    /// Last three confirmed observations, oldest first.
    pub x: [Observation; 3],
    /// Last `history_len` actions, oldest first. `None` entries are the
    /// "no action yet" sentinel from episode start.
    pub history: VecDeque<Option<Action>>,
}

/// Dense state encoding fed to the Q-network.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Outcome of one presence query.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceResult {
    pub present: bool,
    pub bbox: Option<BBox>,
    /// True when the error channel fired, whatever it reported.
    pub corrupted: bool,
}

/// One line of the per-step poll log.
#[derive(Debug, Clone, PartialEq)]
pub struct PollRecord {
    /// Frame that was polled (the time after the step).
    pub t: i64,
    /// `None` when nothing was polled.
    pub polled_camera: Option<CameraId>,
    /// Frames fetched this step (baselines may poll several).
    pub frames_polled: u32,
    pub present: bool,
    pub corrupted: bool,
    /// Elapsed-time counter after the step.
    pub tau: u32,
}

pub type PollLog = Vec<PollRecord>;

/// Where a policy believed the target to be, step by step.
#[derive(Debug, Clone)]
pub struct PredictedTrajectory {
    pub target_id: u64,
    pub start_t: i64,
    /// Entry `i` is the prediction for time `start_t + i`: a camera and
    /// bounding box, or `None` for "nowhere".
    pub entries: Vec<Option<(CameraId, BBox)>>,
}

/// Whether a step uses training dynamics (random jumps) or plain stepping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Train,
    Eval,
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: AgentState,
    pub reward: f64,
    pub terminal: bool,
    pub record: PollRecord,
}

/// Feature dimension for a network of `n` cameras and history length `l`.
pub fn feature_dim(n: u32, l: usize) -> usize {
    3 * (n as usize + 4) + l * (n as usize + 1) + 1
}

/// Occlusion-simulating jump length: uniform in `1..=20` with probability
/// one half, otherwise 1.
pub fn sample_train_jump(rng: &mut ChaCha8Rng) -> u32 {
    if rng.gen_bool(0.5) {
        rng.gen_range(1..=MAX_TRAIN_JUMP)
    } else {
        1
    }
}

/// The decision process over one trajectory set.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub set: &'a TrajectorySet,
    pub cfg: &'a EnvConfig,
}

impl<'a> Env<'a> {
    pub fn new(set: &'a TrajectorySet, cfg: &'a EnvConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Env { set, cfg })
    }

    pub fn network(&self) -> &CameraNetwork {
        &self.set.network
    }

    pub fn num_actions(&self) -> u32 {
        self.network().num_cameras + 1
    }

    pub fn feature_dim(&self) -> usize {
        feature_dim(self.network().num_cameras, self.cfg.history_len)
    }

    /// Initial state: first observation replicated across the window, no
    /// actions taken, zero elapsed time.
    pub fn init_episode(&self, traj: &Trajectory) -> AgentState {
        let first = traj.obs[0];
        AgentState {
            target_id: traj.target_id,
            t: traj.start_t,
            tau: 0,
            x: [first, first, first],
            history: std::iter::repeat(None).take(self.cfg.history_len).collect(),
        }
    }

    /// Encodes a state as `[obs1 | obs2 | obs3 | history | tau]` where each
    /// observation is a camera one-hot plus the frame-normalized bounding
    /// box, each history slot is an action one-hot, and tau is normalized and
    /// clamped to 1. Hidden observations and sentinel history slots encode as
    /// zero blocks.
    pub fn encode_state(&self, s: &AgentState) -> FeatureVector {
        let n = self.network().num_cameras as usize;
        let mut v = Vec::with_capacity(self.feature_dim());
        for obs in &s.x {
            match obs {
                Observation::Visible { camera, bbox } => {
                    for c in 0..n {
                        v.push(if c + 1 == camera.0 as usize { 1.0 } else { 0.0 });
                    }
                    let (w, h) = (
                        self.network().width(*camera) as f64,
                        self.network().height(*camera) as f64,
                    );
                    v.push(bbox.x / w);
                    v.push(bbox.y / h);
                    v.push(bbox.w / w);
                    v.push(bbox.h / h);
                }
                Observation::Hidden => v.extend(std::iter::repeat(0.0).take(n + 4)),
            }
        }
        for slot in &s.history {
            match slot {
                Some(a) => {
                    for i in 0..n + 1 {
                        v.push(if i + 1 == a.0 as usize { 1.0 } else { 0.0 });
                    }
                }
                None => v.extend(std::iter::repeat(0.0).take(n + 1)),
            }
        }
        v.push((s.tau as f64 / self.cfg.tau_norm() as f64).min(1.0));
        FeatureVector(v)
    }

    /// Asks whether `target_id` is visible in `camera` at time `t`.
    ///
    /// With probability `err_rate` the query is corrupted: it reports a
    /// uniformly chosen other target visible in that camera, or absence when
    /// no other target is there.
    pub fn presence_query(
        &self,
        camera: CameraId,
        t: i64,
        target_id: u64,
        rng: &mut ChaCha8Rng,
    ) -> PresenceResult {
        if self.cfg.err_rate > 0.0 && rng.gen_bool(self.cfg.err_rate) {
            let victims = self.set.others_visible_in(camera, t, target_id);
            if victims.is_empty() {
                return PresenceResult {
                    present: false,
                    bbox: None,
                    corrupted: true,
                };
            }
            let victim = victims[rng.gen_range(0..victims.len())];
            let bbox = *victim.bbox_in(camera, t).expect("victim visible in camera");
            return PresenceResult {
                present: true,
                bbox: Some(bbox),
                corrupted: true,
            };
        }
        match self.set.get(target_id).and_then(|tr| tr.bbox_in(camera, t)) {
            Some(bbox) => PresenceResult {
                present: true,
                bbox: Some(*bbox),
                corrupted: false,
            },
            None => PresenceResult {
                present: false,
                bbox: None,
                corrupted: false,
            },
        }
    }

    /// Dense reward for taking `a` in state `s`.
    ///
    /// Polling camera `c`: `1 / T_c` where `T_c` is the steps until the
    /// target's earliest ground-truth appearance in `c` within the reward
    /// horizon, or -1 if it never appears in the window. Polling nothing:
    /// 0.1 when the target is truly hidden at the next step, else -1.
    pub fn compute_reward(&self, s: &AgentState, a: Action, traj: &Trajectory) -> f64 {
        let n = self.network().num_cameras;
        match a.camera(n) {
            Some(camera) => {
                let horizon = self.cfg.reward_horizon() as i64;
                match traj.next_visible_in(camera, s.t + 1, s.t + horizon) {
                    Some(t_hit) => 1.0 / (t_hit - s.t) as f64,
                    None => MISS_REWARD,
                }
            }
            None => {
                if traj.camera_at(s.t + 1).is_none() {
                    WAIT_REWARD
                } else {
                    MISS_REWARD
                }
            }
        }
    }

    /// Advances one step. Training mode advances time by a random jump on
    /// camera polls; the dummy action always advances by one step.
    pub fn step(
        &self,
        s: &AgentState,
        a: Action,
        traj: &Trajectory,
        rng: &mut ChaCha8Rng,
        mode: StepMode,
    ) -> Result<StepOutcome> {
        let n = self.network().num_cameras;
        if a.0 < 1 || a.0 > n + 1 {
            return Err(Error::config(format!(
                "action {} outside 1..={}",
                a.0,
                n + 1
            )));
        }
        if s.t > traj.end_t() {
            return Err(Error::config("cannot step a terminal state"));
        }
        let reward = self.compute_reward(s, a, traj);
        let mut next = s.clone();
        let record = match a.camera(n) {
            Some(camera) => {
                let advance = match mode {
                    StepMode::Train => sample_train_jump(rng),
                    StepMode::Eval => 1,
                };
                next.t = s.t + advance as i64;
                let result = self.presence_query(camera, next.t, s.target_id, rng);
                if result.present {
                    next.x = [
                        s.x[1],
                        s.x[2],
                        Observation::Visible {
                            camera,
                            bbox: result.bbox.expect("present query carries a bbox"),
                        },
                    ];
                    next.tau = 0;
                } else {
                    next.tau = s.tau + advance;
                }
                PollRecord {
                    t: next.t,
                    polled_camera: Some(camera),
                    frames_polled: 1,
                    present: result.present,
                    corrupted: result.corrupted,
                    tau: next.tau,
                }
            }
            None => {
                next.t = s.t + 1;
                next.tau = s.tau + 1;
                PollRecord {
                    t: next.t,
                    polled_camera: None,
                    frames_polled: 0,
                    present: false,
                    corrupted: false,
                    tau: next.tau,
                }
            }
        };
        next.history.pop_front();
        next.history.push_back(Some(a));
        let terminal = next.t > traj.end_t();
        Ok(StepOutcome {
            next,
            reward,
            terminal,
            record,
        })
    }

    /// Once tau reaches the time limit, replaces the newest observation with
    /// a uniformly random camera and a centered default bounding box, and
    /// resets tau. No-op below the limit or when the limit is disabled.
    pub fn apply_time_limit(&self, s: &AgentState, rng: &mut ChaCha8Rng) -> AgentState {
        let Some(limit) = self.cfg.time_limit else {
            return s.clone();
        };
        if s.tau < limit {
            return s.clone();
        }
        let camera = CameraId(rng.gen_range(1..=self.network().num_cameras));
        let (w, h) = (
            self.network().width(camera) as f64,
            self.network().height(camera) as f64,
        );
        let bbox = BBox {
            x: 0.5 * w,
            y: 0.5 * h,
            w: 0.1 * w,
            h: 0.1 * h,
        };
        let mut next = s.clone();
        next.x[2] = Observation::Visible { camera, bbox };
        next.tau = 0;
        next
    }
}

/// Writes a poll log as CSV (`polled_camera` 0 means nothing polled;
/// booleans as 0/1).
pub fn write_polllog(log: &PollLog, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(out, "t,polled_camera,frames_polled,present,corrupted,tau").map_err(io_err)?;
    for r in log {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t,
            r.polled_camera.map_or(0, |c| c.0),
            r.frames_polled,
            r.present as u8,
            r.corrupted as u8,
            r.tau
        )
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::Trajectory;

    fn obs(cam: u32, x: f64) -> Observation {
        Observation::Visible {
            camera: CameraId(cam),
            bbox: BBox {
                x,
                y: 120.0,
                w: 32.0,
                h: 24.0,
            },
        }
    }

    /// cam1 for 2 steps, hidden for 2, cam2 for 2.
    fn tiny_set() -> TrajectorySet {
        let traj = Trajectory::new(
            1,
            0,
            vec![
                obs(1, 0.0),
                obs(1, 10.0),
                Observation::Hidden,
                Observation::Hidden,
                obs(2, 5.0),
                obs(2, 15.0),
            ],
        )
        .unwrap();
        TrajectorySet::new(CameraNetwork::uniform(2, 320, 240, 20.0), vec![traj]).unwrap()
    }

    fn cfg() -> EnvConfig {
        EnvConfig {
            time_limit: Some(50),
            history_len: 4,
            ..EnvConfig::default()
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn feature_dim_matches_layout() {
        assert_eq!(feature_dim(8, 20), 217);
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let s = env.init_episode(set.get(1).unwrap());
        assert_eq!(env.encode_state(&s).len(), env.feature_dim());
    }

    #[test]
    fn bbox_normalizes_against_frame_geometry() {
        let traj = Trajectory::new(
            1,
            0,
            vec![Observation::Visible {
                camera: CameraId(1),
                bbox: BBox {
                    x: 160.0,
                    y: 120.0,
                    w: 32.0,
                    h: 24.0,
                },
            }],
        )
        .unwrap();
        let set =
            TrajectorySet::new(CameraNetwork::uniform(8, 320, 240, 20.0), vec![traj]).unwrap();
        let c = EnvConfig {
            time_limit: Some(50),
            ..EnvConfig::default()
        };
        let env = Env::new(&set, &c).unwrap();
        let s = env.init_episode(set.get(1).unwrap());
        let v = env.encode_state(&s);
        // First observation block: one-hot(8) then the normalized bbox.
        assert_eq!(&v.0[..8], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(&v.0[8..12], &[0.5, 0.5, 0.1, 0.1]);
    }

    #[test]
    fn hidden_observations_and_sentinel_history_encode_as_zeros() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let mut s = env.init_episode(set.get(1).unwrap());
        s.x[0] = Observation::Hidden;
        let v = env.encode_state(&s);
        let n = 2usize;
        assert!(v.0[..n + 4].iter().all(|&x| x == 0.0));
        // All history slots are sentinel at episode start.
        let h_start = 3 * (n + 4);
        assert!(v.0[h_start..h_start + 4 * (n + 1)]
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn tau_feature_clamps_at_one() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let mut s = env.init_episode(set.get(1).unwrap());
        s.tau = 25;
        assert_eq!(*env.encode_state(&s).0.last().unwrap(), 0.5);
        s.tau = 500;
        assert_eq!(*env.encode_state(&s).0.last().unwrap(), 1.0);
    }

    #[test]
    fn reward_is_inverse_time_to_appearance() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let traj = set.get(1).unwrap();
        let s = env.init_episode(traj);
        // From t=0: cam1 visible at t=1, cam2 first visible at t=4.
        assert_eq!(env.compute_reward(&s, Action(1), traj), 1.0);
        assert_eq!(env.compute_reward(&s, Action(2), traj), 0.25);
        assert_eq!(env.compute_reward(&s, Action::dummy(2), traj), MISS_REWARD);
        let mut s1 = s.clone();
        s1.t = 1;
        // From t=1: next step is hidden, so waiting is correct.
        assert_eq!(env.compute_reward(&s1, Action::dummy(2), traj), WAIT_REWARD);
        assert_eq!(env.compute_reward(&s1, Action(2), traj), 1.0 / 3.0);
        // Beyond the horizon the poll never pays off.
        let short = EnvConfig {
            reward_horizon: Some(2),
            ..cfg()
        };
        let env_short = Env::new(&set, &short).unwrap();
        assert_eq!(env_short.compute_reward(&s, Action(2), traj), MISS_REWARD);
    }

    #[test]
    fn reward_after_trajectory_end_treats_target_as_gone() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let traj = set.get(1).unwrap();
        let mut s = env.init_episode(traj);
        s.t = traj.end_t();
        assert_eq!(env.compute_reward(&s, Action(1), traj), MISS_REWARD);
        assert_eq!(env.compute_reward(&s, Action(2), traj), MISS_REWARD);
        assert_eq!(env.compute_reward(&s, Action::dummy(2), traj), WAIT_REWARD);
    }

    #[test]
    fn eval_miss_advances_tau_by_one() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let traj = set.get(1).unwrap();
        let s = env.init_episode(traj);
        let mut r = rng();
        // Polling cam2 at t=1 misses (the target is still in cam1).
        let mut out = env
            .step(&s, Action(2), traj, &mut r, StepMode::Eval)
            .unwrap();
        assert!(!out.record.present);
        assert_eq!(out.next.tau, 1);
        assert_eq!(out.next.t, 1);
        assert!(!out.terminal);
        // Misses through the hidden window keep incrementing tau by one.
        for expected_tau in 2..=3 {
            out = env
                .step(&out.next, Action(2), traj, &mut r, StepMode::Eval)
                .unwrap();
            assert!(!out.record.present);
            assert_eq!(out.next.tau, expected_tau);
        }
        // The hit at t=4 shifts the new observation in and resets tau.
        let out2 = env
            .step(&out.next, Action(2), traj, &mut r, StepMode::Eval)
            .unwrap();
        assert!(out2.record.present);
        assert_eq!(out2.next.tau, 0);
        assert_eq!(out2.next.x[2].camera(), Some(CameraId(2)));
        assert_eq!(out2.next.history.back().unwrap(), &Some(Action(2)));
    }

    #[test]
    fn dummy_action_polls_no_frames() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let traj = set.get(1).unwrap();
        let s = env.init_episode(traj);
        let mut r = rng();
        let out = env
            .step(&s, Action::dummy(2), traj, &mut r, StepMode::Train)
            .unwrap();
        assert_eq!(out.record.frames_polled, 0);
        assert_eq!(out.record.polled_camera, None);
        assert_eq!(out.next.t, 1);
        assert_eq!(out.next.tau, 1);
    }

    #[test]
    fn stepping_past_the_end_is_terminal_and_then_rejected() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let traj = set.get(1).unwrap();
        let mut s = env.init_episode(traj);
        s.t = traj.end_t();
        let mut r = rng();
        let out = env
            .step(&s, Action(1), traj, &mut r, StepMode::Eval)
            .unwrap();
        assert!(out.terminal);
        assert!(env
            .step(&out.next, Action(1), traj, &mut r, StepMode::Eval)
            .is_err());
    }

    #[test]
    fn out_of_range_action_is_rejected() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let traj = set.get(1).unwrap();
        let s = env.init_episode(traj);
        assert!(env
            .step(&s, Action(0), traj, &mut rng(), StepMode::Eval)
            .is_err());
        assert!(env
            .step(&s, Action(4), traj, &mut rng(), StepMode::Eval)
            .is_err());
    }

    #[test]
    fn presence_error_channel_reports_other_targets() {
        let a = Trajectory::new(1, 0, vec![obs(1, 0.0), obs(1, 10.0)]).unwrap();
        let b = Trajectory::new(2, 0, vec![obs(1, 50.0), obs(1, 60.0)]).unwrap();
        let set =
            TrajectorySet::new(CameraNetwork::uniform(2, 320, 240, 20.0), vec![a, b]).unwrap();
        let always_err = EnvConfig {
            err_rate: 1.0,
            time_limit: Some(50),
            ..EnvConfig::default()
        };
        let env = Env::new(&set, &always_err).unwrap();
        let mut r = rng();
        // Target 2 is in cam1 at t=0, so the corrupted query returns its box.
        let res = env.presence_query(CameraId(1), 0, 1, &mut r);
        assert!(res.present && res.corrupted);
        assert_eq!(res.bbox.unwrap().x, 50.0);
        // No other target in cam2: the corrupted query reports absence.
        let res = env.presence_query(CameraId(2), 0, 1, &mut r);
        assert!(!res.present && res.corrupted);
        // With err_rate 0 the query always matches ground truth.
        let clean = EnvConfig {
            time_limit: Some(50),
            ..EnvConfig::default()
        };
        let env = Env::new(&set, &clean).unwrap();
        let res = env.presence_query(CameraId(1), 0, 1, &mut r);
        assert!(res.present && !res.corrupted);
        assert_eq!(res.bbox.unwrap().x, 0.0);
    }

    #[test]
    fn time_limit_randomizes_head_and_resets_tau() {
        let set = tiny_set();
        let c = EnvConfig {
            time_limit: Some(10),
            history_len: 4,
            ..EnvConfig::default()
        };
        let env = Env::new(&set, &c).unwrap();
        let mut s = env.init_episode(set.get(1).unwrap());
        s.history.pop_front();
        s.history.push_back(Some(Action(2)));

        s.tau = 9;
        let same = env.apply_time_limit(&s, &mut rng());
        assert_eq!(same.tau, 9);
        assert_eq!(same.x[2], s.x[2]);

        s.tau = 10;
        let reset = env.apply_time_limit(&s, &mut rng());
        assert_eq!(reset.tau, 0);
        let Observation::Visible { camera, bbox } = reset.x[2] else {
            panic!("head must be visible")
        };
        assert!(camera.0 >= 1 && camera.0 <= 2);
        assert_eq!((bbox.x, bbox.y, bbox.w, bbox.h), (160.0, 120.0, 32.0, 24.0));
        assert_eq!(reset.history, s.history);

        let disabled = EnvConfig {
            time_limit: None,
            reward_horizon: Some(10),
            ..c.clone()
        };
        let env = Env::new(&set, &disabled).unwrap();
        let same = env.apply_time_limit(&s, &mut rng());
        assert_eq!(same.tau, 10);
    }

    #[test]
    fn train_jump_is_one_at_least_half_the_time() {
        let mut r = rng();
        let trials = 100_000;
        let mut ones = 0u32;
        for _ in 0..trials {
            let j = sample_train_jump(&mut r);
            assert!((1..=MAX_TRAIN_JUMP).contains(&j));
            if j == 1 {
                ones += 1;
            }
        }
        // P(jump = 1) = 0.5 + 0.5 / 20 = 0.525.
        let frac = ones as f64 / trials as f64;
        assert!((0.51..=0.54).contains(&frac), "frac = {frac}");
    }

    #[test]
    fn reward_codomain_is_bounded_inverse_times() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let traj = set.get(1).unwrap();
        let horizon = c.reward_horizon() as i64;
        for t in 0..=traj.end_t() {
            for a in 1..=3u32 {
                let mut s = env.init_episode(traj);
                s.t = t;
                let r = env.compute_reward(&s, Action(a), traj);
                let valid = r == MISS_REWARD
                    || r == WAIT_REWARD
                    || (1..=horizon).any(|k| r == 1.0 / k as f64);
                assert!(valid, "reward {r} at t={t} a={a}");
            }
        }
    }

    #[test]
    fn episodes_replay_identically_under_one_seed() {
        let set = tiny_set();
        let c = cfg();
        let env = Env::new(&set, &c).unwrap();
        let traj = set.get(1).unwrap();
        let run = |seed: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let mut s = env.init_episode(traj);
            let mut log = Vec::new();
            loop {
                let a = Action(r.gen_range(1..=3));
                let out = env.step(&s, a, traj, &mut r, StepMode::Train).unwrap();
                log.push((a, out.record.clone(), out.reward));
                s = out.next;
                if out.terminal {
                    break;
                }
            }
            log
        };
        assert_eq!(run(42), run(42));
    }

    proptest::proptest! {
        #[test]
        fn encoded_features_stay_normalized(
            seed in proptest::prelude::any::<u64>(),
            actions in proptest::collection::vec(1u32..=3, 1..40),
        ) {
            let set = tiny_set();
            let c = cfg();
            let env = Env::new(&set, &c).unwrap();
            let traj = set.get(1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = env.init_episode(traj);
            for &a in &actions {
                let fv = env.encode_state(&s);
                proptest::prop_assert_eq!(fv.as_slice().len(), feature_dim(2, c.history_len));
                proptest::prop_assert!(
                    fv.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v))
                );
                let out = env.step(&s, Action(a), traj, &mut rng, StepMode::Train).unwrap();
                s = out.next;
                if out.terminal {
                    break;
                }
            }
        }
    }
}
