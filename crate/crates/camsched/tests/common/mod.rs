//! Independent oracles and helpers the integration tests score the library
//! against. Everything here recomputes results from first principles instead
//! of calling the code under test.

use camsched::env::{feature_dim, Action};
use camsched::netmodel::Trajectory;

/// Right-fold evaluation of the n-step return: y(i) = r_i + gamma * y(i+1),
/// bottoming out at the bootstrap value (or 0 on terminal cutoffs).
pub fn recursive_nstep(rewards: &[f64], gamma: f64, bootstrap: Option<f64>) -> f64 {
    match rewards.split_first() {
        None => bootstrap.unwrap_or(0.0),
        Some((r, rest)) => r + gamma * recursive_nstep(rest, gamma, bootstrap),
    }
}

/// One-step reward recomputed from ground truth: a camera poll pays the
/// reciprocal of the earliest appearance within `horizon` steps, the dummy
/// action pays 0.1 exactly when the target is hidden at the next frame, and
/// everything else costs 1.
pub fn oracle_reward(
    traj: &Trajectory,
    step: usize,
    action: u32,
    num_cameras: u32,
    horizon: u32,
) -> f64 {
    let frames = traj.obs.len();
    let cam_at = |i: usize| traj.obs[i].camera().map(|c| c.0);
    if action == num_cameras + 1 {
        return if cam_at(step + 1).is_none() {
            0.1
        } else {
            -1.0
        };
    }
    for dt in 1..=horizon as usize {
        if step + dt >= frames {
            break;
        }
        if cam_at(step + dt) == Some(action) {
            return 1.0 / dt as f64;
        }
    }
    -1.0
}

/// Finite-horizon value iteration over the deterministic single-trajectory
/// MDP: every action advances one step, so backward induction over the step
/// index enumerates the whole reachable state space. Returns the optimal
/// action per decision step, lowest index on ties.
pub fn optimal_actions(
    traj: &Trajectory,
    num_cameras: u32,
    horizon: u32,
    gamma: f64,
) -> Vec<Action> {
    let frames = traj.obs.len();
    let decisions = frames - 1;
    let mut value = vec![0.0; frames];
    let mut pi = vec![Action(0); decisions];
    for i in (0..decisions).rev() {
        let mut best = f64::NEG_INFINITY;
        let mut best_a = 1;
        for a in 1..=num_cameras + 1 {
            let q = oracle_reward(traj, i, a, num_cameras, horizon) + gamma * value[i + 1];
            if q > best {
                best = q;
                best_a = a;
            }
        }
        value[i] = best;
        pi[i] = Action(best_a);
    }
    pi
}

/// Median of a sample, averaging the middle pair on even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Asserts the expected feature layout so oracle tests fail loudly if the
/// encoding ever changes shape.
pub fn expect_feature_dim(num_cameras: u32, history_len: usize) -> usize {
    let dim = 3 * (num_cameras as usize + 4) + history_len * (num_cameras as usize + 1) + 1;
    assert_eq!(dim, feature_dim(num_cameras, history_len));
    dim
}
