//! Deep Q-learning agent: replay memory, epsilon schedule, n-step targets,
//! the training loop, and greedy inference with time limits.
//!
//! Training runs one episode per epoch on a round-robin training target,
//! collecting transitions into a bounded FIFO replay memory. At each episode
//! end a random minibatch is drawn and every sampled transition becomes an
//! n-step target: the discounted sum of up to `n` consecutive rewards plus a
//! discounted bootstrap from the network's own value of the last next-state,
//! dropped when the window ends at a terminal transition.

pub mod tabular;

use std::collections::VecDeque;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::env::{
    feature_dim, Action, Env, EnvConfig, FeatureVector, PollLog, PredictedTrajectory, StepMode,
};
use crate::error::{Error, Result};
use crate::mlp::{load_model, save_model, AdamState, ModelSignature, QNetwork, DEFAULT_HIDDEN};
use crate::netmodel::{CameraNetwork, Trajectory, TrajectorySet};
use crate::seed::{derive, derive_indexed};

/// One stored environment step.
#[derive(Debug, Clone)]
pub struct Transition {
    pub s: FeatureVector,
    pub a: Action,
    pub s_next: FeatureVector,
    pub r: f64,
    pub terminal: bool,
    pub episode_id: u64,
    pub step_index: u32,
}

/// Bounded FIFO of transitions; overflow evicts the oldest entry.
#[derive(Debug)]
pub struct ReplayMemory {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        ReplayMemory {
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.buf[i]
    }

    /// Uniform sample of distinct indices, `min(count, len)` of them.
    pub fn sample_indices(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let k = count.min(self.buf.len());
        rand::seq::index::sample(rng, self.buf.len(), k).into_vec()
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub gamma: f64,
    pub n_step: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub epochs: u32,
    pub eps_floor: f64,
    pub hidden: [usize; 3],
    /// Adam steps taken per episode.
    pub updates_per_episode: u32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.99,
            n_step: 3,
            lr: 1e-3,
            batch_size: 64,
            replay_capacity: 100_000,
            epochs: 1000,
            eps_floor: 0.05,
            hidden: DEFAULT_HIDDEN,
            updates_per_episode: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma must be in (0, 1)"));
        }
        if self.n_step == 0 {
            return Err(Error::config("n_step must be at least 1"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.batch_size == 0 || self.replay_capacity == 0 {
            return Err(Error::config(
                "batch size and replay capacity must be positive",
            ));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.eps_floor) {
            return Err(Error::config("epsilon floor must be in [0, 1]"));
        }
        if self.hidden.contains(&0) || self.updates_per_episode == 0 {
            return Err(Error::config(
                "hidden widths and updates per episode must be positive",
            ));
        }
        Ok(())
    }
}

/// Exploration rate for an epoch: clamp(1/ln(epoch), floor, 1).
pub fn epsilon_schedule(epoch: u32, floor: f64) -> f64 {
    let ln = (epoch as f64).ln();
    let eps = if ln <= 1.0 { 1.0 } else { 1.0 / ln };
    eps.clamp(floor, 1.0)
}

/// A trained Q-network plus the dimensions it was trained against.
#[derive(Debug, Clone)]
pub struct Policy {
    pub net: QNetwork,
    pub adam: AdamState,
    pub signature: ModelSignature,
}

impl Policy {
    pub fn num_actions(&self) -> u32 {
        self.net.output_dim as u32
    }

    /// Greedy action: argmax Q, lowest index on ties.
    pub fn greedy(&self, fv: &FeatureVector) -> Result<Action> {
        Ok(Action(self.net.argmax(fv.as_slice())? as u32 + 1))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_model(&self.net, &self.adam, &self.signature, path)
    }

    pub fn load(path: &Path) -> Result<Policy> {
        let (net, adam, signature) = load_model(path)?;
        Ok(Policy {
            net,
            adam,
            signature,
        })
    }

    /// Rejects a policy trained against different dimensions.
    pub fn validate_for(&self, network: &CameraNetwork, cfg: &EnvConfig) -> Result<()> {
        let expect = ModelSignature {
            num_cameras: network.num_cameras,
            history_len: cfg.history_len,
            feature_dim: feature_dim(network.num_cameras, cfg.history_len),
        };
        if self.signature != expect {
            return Err(Error::config(format!(
                "model signature {:?} does not match environment {:?}",
                self.signature, expect
            )));
        }
        if self.net.output_dim != network.num_cameras as usize + 1 {
            return Err(Error::config("model output width must be num_cameras + 1"));
        }
        Ok(())
    }
}

/// Epsilon-greedy action selection over the N+1 actions.
pub fn select_action(
    policy: &Policy,
    fv: &FeatureVector,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Action> {
    if eps > 0.0 && rng.gen_bool(eps) {
        Ok(Action(rng.gen_range(1..=policy.num_actions())))
    } else {
        policy.greedy(fv)
    }
}

/// n-step bootstrapped target for a window of consecutive transitions.
///
/// y = sum_k gamma^k r_{k+1} + gamma^m max_a Q(s'_last, a); the bootstrap is
/// dropped when the window ends at a terminal transition.
pub fn nstep_target(window: &[&Transition], gamma: f64, net: &QNetwork) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::config("n-step window is empty"));
    }
    for pair in window.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.episode_id != b.episode_id || b.step_index != a.step_index + 1 {
            return Err(Error::config(
                "n-step window transitions are not consecutive",
            ));
        }
        if a.terminal {
            return Err(Error::config(
                "n-step window continues past a terminal transition",
            ));
        }
    }
    let mut y = 0.0;
    let mut discount = 1.0;
    for t in window {
        y += discount * t.r;
        discount *= gamma;
    }
    let last = window[window.len() - 1];
    if !last.terminal {
        y += discount * net.max_q(last.s_next.as_slice())?;
    }
    Ok(y)
}

/// One row of the per-epoch training log.
#[derive(Debug, Clone)]
pub struct TrainLogRow {
    pub epoch: u32,
    pub epsilon: f64,
    pub episode_reward: f64,
    /// Mean episode reward over the trailing window.
    pub running_reward: f64,
}

/// Writes the training log as CSV.
pub fn write_train_log(rows: &[TrainLogRow], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,epsilon,episode_reward,running_reward\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch, r.epsilon, r.episode_reward, r.running_reward
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

const RUNNING_WINDOW: usize = 100;

/// Builds an n-step window forward from `start`, staying inside one episode
/// and stopping after a terminal transition.
fn window_from<'m>(mem: &'m ReplayMemory, start: usize, n: usize) -> Vec<&'m Transition> {
    let mut window = vec![mem.get(start)];
    while window.len() < n {
        let last = window[window.len() - 1];
        if last.terminal {
            break;
        }
        let next_idx = start + window.len();
        if next_idx >= mem.len() {
            break;
        }
        let next = mem.get(next_idx);
        if next.episode_id != last.episode_id {
            break;
        }
        window.push(next);
    }
    window
}

/// Runs one epsilon-greedy training episode and appends its transitions.
fn run_train_episode(
    env: &Env,
    traj: &Trajectory,
    policy: &Policy,
    mem: &mut ReplayMemory,
    eps: f64,
    episode_id: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut s = env.init_episode(traj);
    let mut episode_reward = 0.0;
    let mut step_index = 0u32;
    loop {
        s = env.apply_time_limit(&s, rng);
        let fv = env.encode_state(&s);
        let a = select_action(policy, &fv, eps, rng)?;
        let out = env.step(&s, a, traj, rng, StepMode::Train)?;
        let fv_next = env.encode_state(&out.next);
        episode_reward += out.reward;
        mem.push(Transition {
            s: fv,
            a,
            s_next: fv_next,
            r: out.reward,
            terminal: out.terminal,
            episode_id,
            step_index,
        });
        step_index += 1;
        s = out.next;
        if out.terminal {
            return Ok(episode_reward);
        }
    }
}

/// Trains a Q-network over the training set, one episode per epoch.
pub fn train(
    set: &TrajectorySet,
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
) -> Result<(Policy, Vec<TrainLogRow>)> {
    cfg.validate()?;
    let env = Env::new(set, env_cfg)?;
    let ids = set.target_ids();
    if ids.is_empty() {
        return Err(Error::config("training set has no trajectories"));
    }
    let n = env.network().num_cameras;
    let fd = env.feature_dim();
    let net = QNetwork::new(fd, cfg.hidden, n as usize + 1, derive(cfg.seed, "net-init"))?;
    let adam = AdamState::new(&net, cfg.lr);
    let signature = ModelSignature {
        num_cameras: n,
        history_len: env_cfg.history_len,
        feature_dim: fd,
    };
    let mut policy = Policy {
        net,
        adam,
        signature,
    };
    let mut mem = ReplayMemory::new(cfg.replay_capacity);
    let mut log = Vec::with_capacity(cfg.epochs as usize);
    let mut recent = VecDeque::with_capacity(RUNNING_WINDOW);

    for epoch in 1..=cfg.epochs {
        let eps = epsilon_schedule(epoch, cfg.eps_floor);
        let traj = set.get(ids[(epoch as usize - 1) % ids.len()]).unwrap();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_indexed(cfg.seed, "train-epoch", epoch as u64));
        let episode_reward =
            run_train_episode(&env, traj, &policy, &mut mem, eps, epoch as u64, &mut rng)?;

        for _ in 0..cfg.updates_per_episode {
            let picks = mem.sample_indices(cfg.batch_size, &mut rng);
            let mut targets = Vec::with_capacity(picks.len());
            for &i in &picks {
                let window = window_from(&mem, i, cfg.n_step);
                let y = nstep_target(&window, cfg.gamma, &policy.net)?;
                targets.push((i, y));
            }
            let samples: Vec<(&[f64], usize, f64)> = targets
                .iter()
                .map(|&(i, y)| {
                    let t = mem.get(i);
                    (t.s.as_slice(), t.a.index(), y)
                })
                .collect();
            let (_, grads) = policy.net.backward_batch(&samples)?;
            policy.net.adam_step(&mut policy.adam, &grads)?;
        }

        if recent.len() == RUNNING_WINDOW {
            recent.pop_front();
        }
        recent.push_back(episode_reward);
        let running_reward = recent.iter().sum::<f64>() / recent.len() as f64;
        log.push(TrainLogRow {
            epoch,
            epsilon: eps,
            episode_reward,
            running_reward,
        });
    }
    Ok((policy, log))
}

/// Greedy rollout over one trajectory, applying time-limit resets.
///
/// The prediction holds one entry per timestep of the trajectory's span; the
/// first entry is the given initial observation, and each later entry is the
/// camera and box reported by that step's poll, or `None` when nothing was
/// polled or the poll came back empty.
pub fn run_policy(
    policy: &Policy,
    env: &Env,
    traj: &Trajectory,
    rng: &mut ChaCha8Rng,
) -> Result<(PredictedTrajectory, PollLog)> {
    policy.validate_for(env.network(), env.cfg)?;
    let mut s = env.init_episode(traj);
    let first = traj.obs[0];
    let mut predicted = PredictedTrajectory {
        target_id: traj.target_id,
        start_t: traj.start_t,
        entries: vec![Some((first.camera().unwrap(), *first.bbox().unwrap()))],
    };
    let mut log = PollLog::new();
    while s.t < traj.end_t() {
        s = env.apply_time_limit(&s, rng);
        let fv = env.encode_state(&s);
        let a = policy.greedy(&fv)?;
        let out = env.step(&s, a, traj, rng, StepMode::Eval)?;
        let entry = if out.record.present {
            let obs = out.next.x[2];
            Some((obs.camera().unwrap(), *obs.bbox().unwrap()))
        } else {
            None
        };
        predicted.entries.push(entry);
        log.push(out.record);
        s = out.next;
    }
    Ok((predicted, log))
}
