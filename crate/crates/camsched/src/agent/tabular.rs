//! Tabular Q-learning over a discretized state space.
//!
//! Serves as an exact-method counterpart to the network agent on small
//! problems. The discretizer keys a state by the camera of its newest
//! observation, a quantized elapsed-time bucket, the most recent actions, and
//! a horizontal position bin of the newest bounding box. The key space is
//! computed up front and refused beyond a fixed budget, turning the method's
//! inherent memory blow-up on large networks into a clean error.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::agent::{epsilon_schedule, TrainConfig};
use crate::env::{Action, AgentState, Env, EnvConfig, PollLog, PredictedTrajectory, StepMode};
use crate::error::{Error, Result};
use crate::netmodel::{Trajectory, TrajectorySet};
use crate::seed::derive_indexed;

/// Key budget; discretizations above this are refused.
pub const KEY_BUDGET: u64 = 1_000_000;

/// Maps agent states to small integer keys.
#[derive(Debug, Clone)]
pub struct Discretizer {
    /// Number of elapsed-time buckets; bucket width is the tau scale / 10.
    pub tau_buckets: u32,
    /// Horizontal bins for the newest bounding box position.
    pub x_bins: u32,
    /// How many recent actions enter the key.
    pub history_depth: usize,
}

impl Default for Discretizer {
    fn default() -> Self {
        Discretizer {
            tau_buckets: 11,
            x_bins: 8,
            history_depth: 1,
        }
    }
}

impl Discretizer {
    pub fn validate(&self) -> Result<()> {
        if self.tau_buckets == 0 || self.x_bins == 0 {
            return Err(Error::config("discretizer bucket counts must be positive"));
        }
        Ok(())
    }

    /// Total number of distinct keys for an N-camera network.
    pub fn key_space(&self, num_cameras: u32, history_len: usize) -> u128 {
        let cam = num_cameras as u128 + 1;
        let act = num_cameras as u128 + 2;
        let depth = self.history_depth.min(history_len) as u32;
        cam * self.tau_buckets as u128 * self.x_bins as u128 * act.saturating_pow(depth)
    }

    /// Mixed-radix key for a state.
    pub fn key(&self, s: &AgentState, env: &Env) -> u64 {
        let n = env.network().num_cameras;
        let head = &s.x[2];
        let (cam_slot, x_bin) = match head.camera() {
            Some(cam) => {
                let b = head.bbox().unwrap();
                let frac = b.x / env.network().width(cam) as f64;
                let bin = ((frac * self.x_bins as f64) as u32).min(self.x_bins - 1);
                (cam.0, bin)
            }
            None => (0, 0),
        };
        let width = (env.cfg.tau_norm() / 10).max(1);
        let tau_bucket = (s.tau / width).min(self.tau_buckets - 1);
        let mut key = cam_slot as u64;
        key = key * self.tau_buckets as u64 + tau_bucket as u64;
        key = key * self.x_bins as u64 + x_bin as u64;
        let depth = self.history_depth.min(s.history.len());
        for i in 0..depth {
            let slot = match s.history[s.history.len() - 1 - i] {
                Some(a) => a.0 as u64,
                None => 0,
            };
            key = key * (n as u64 + 2) + slot;
        }
        key
    }
}

/// Action-value table; missing keys read as all zeros.
#[derive(Debug, Clone)]
pub struct QTable {
    pub values: BTreeMap<u64, Vec<f64>>,
    pub num_actions: usize,
}

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        QTable {
            values: BTreeMap::new(),
            num_actions,
        }
    }

    pub fn q(&self, key: u64) -> Vec<f64> {
        self.values
            .get(&key)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.num_actions])
    }

    pub fn max_q(&self, key: u64) -> f64 {
        match self.values.get(&key) {
            Some(v) => v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            None => 0.0,
        }
    }

    /// Greedy action, lowest index on ties.
    pub fn greedy(&self, key: u64) -> Action {
        let q = self.q(key);
        let mut best = 0;
        for (i, &v) in q.iter().enumerate() {
            if v > q[best] {
                best = i;
            }
        }
        Action(best as u32 + 1)
    }

    fn update(&mut self, key: u64, a: Action, target: f64, alpha: f64) {
        let q = self
            .values
            .entry(key)
            .or_insert_with(|| vec![0.0; self.num_actions]);
        q[a.index()] += alpha * (target - q[a.index()]);
    }
}

/// One-step Q-learning on discretized keys, one episode per epoch.
///
/// Episodes use plain stepping (no training-mode jumps): a tabular key only
/// sees elapsed time through its bucket, and jump-sized advances would leave
/// most buckets unvisited on the small problems this method is for.
pub fn tabular_train(
    set: &TrajectorySet,
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    disc: &Discretizer,
) -> Result<QTable> {
    cfg.validate()?;
    disc.validate()?;
    let env = Env::new(set, env_cfg)?;
    let ids = set.target_ids();
    if ids.is_empty() {
        return Err(Error::config("training set has no trajectories"));
    }
    let space = disc.key_space(env.network().num_cameras, env_cfg.history_len);
    if space > KEY_BUDGET as u128 {
        return Err(Error::Capacity {
            required: space.min(u64::MAX as u128) as u64,
            budget: KEY_BUDGET,
        });
    }
    let mut table = QTable::new(env.num_actions() as usize);
    for epoch in 1..=cfg.epochs {
        let eps = epsilon_schedule(epoch, cfg.eps_floor);
        let traj = set.get(ids[(epoch as usize - 1) % ids.len()]).unwrap();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_indexed(cfg.seed, "tabular-epoch", epoch as u64));
        let mut s = env.init_episode(traj);
        loop {
            s = env.apply_time_limit(&s, &mut rng);
            let key = disc.key(&s, &env);
            let a = if rng.gen_bool(eps) {
                Action(rng.gen_range(1..=env.num_actions()))
            } else {
                table.greedy(key)
            };
            let out = env.step(&s, a, traj, &mut rng, StepMode::Eval)?;
            let target = if out.terminal {
                out.reward
            } else {
                out.reward + cfg.gamma * table.max_q(disc.key(&out.next, &env))
            };
            table.update(key, a, target, cfg.lr);
            s = out.next;
            if out.terminal {
                break;
            }
        }
    }
    Ok(table)
}

/// Greedy table rollout, mirroring the network policy's inference loop.
pub fn run_table_policy(
    table: &QTable,
    disc: &Discretizer,
    env: &Env,
    traj: &Trajectory,
    rng: &mut ChaCha8Rng,
) -> Result<(PredictedTrajectory, PollLog)> {
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
        let a = table.greedy(disc.key(&s, env));
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
