//! Dataset splitting and link inference from observed transitions.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::TrajectorySet;

/// Camera links recovered from trajectories, with the transit durations that
/// support them.
#[derive(Debug, Clone, Default)]
pub struct InferredLinks {
    /// Unordered links as (low id, high id).
    pub links: BTreeSet<(u32, u32)>,
    /// Gap lengths observed per ordered (from, to) camera pair.
    pub transit_samples: BTreeMap<(u32, u32), Vec<u32>>,
}

/// Splits targets into train and test subsets of fixed sizes
/// (ceil(fraction * K) train), selected at random but deterministic in the
/// seed. Returns any warnings about degenerate splits.
pub fn split_train_test(
    set: &TrajectorySet,
    fraction: f64,
    seed: u64,
) -> (TrajectorySet, TrajectorySet, Vec<String>) {
    let mut ids = set.target_ids();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_train = (fraction * ids.len() as f64).ceil() as usize;
    let n_train = n_train.min(ids.len());
    let train_ids: BTreeSet<u64> = ids[..n_train].iter().copied().collect();

    let mut warnings = Vec::new();
    if !set.is_empty() && n_train == set.len() && fraction < 1.0 {
        warnings.push(format!(
            "split left the test set empty ({} targets, fraction {fraction})",
            set.len()
        ));
    }

    let pick = |keep: &dyn Fn(u64) -> bool| TrajectorySet {
        network: set.network.clone(),
        trajectories: set
            .trajectories
            .iter()
            .filter(|(id, _)| keep(**id))
            .map(|(id, tr)| (*id, tr.clone()))
            .collect(),
    };
    let train = pick(&|id| train_ids.contains(&id));
    let test = pick(&|id| !train_ids.contains(&id));
    (train, test, warnings)
}

/// Recovers camera links from consecutive sightings around visibility gaps.
///
/// A pair of consecutive detections in cameras i then j (i != j) yields the
/// unordered link {i, j} and records the gap length as a transit sample for
/// the ordered pair (i, j). Gaps that return to the same camera are treated
/// as occlusions and contribute nothing.
pub fn infer_links(set: &TrajectorySet) -> InferredLinks {
    let mut out = InferredLinks::default();
    for traj in set.trajectories.values() {
        let mut prev: Option<(u32, usize)> = None;
        for (idx, obs) in traj.obs.iter().enumerate() {
            let Some(cam) = obs.camera() else { continue };
            if let Some((prev_cam, prev_idx)) = prev {
                if prev_cam != cam.0 {
                    let gap = (idx - prev_idx - 1) as u32;
                    let (a, b) = (prev_cam.min(cam.0), prev_cam.max(cam.0));
                    out.links.insert((a, b));
                    out.transit_samples
                        .entry((prev_cam, cam.0))
                        .or_default()
                        .push(gap);
                }
            }
            prev = Some((cam.0, idx));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{BBox, CameraId, CameraNetwork, Observation, Trajectory};

    fn obs(cam: u32) -> Observation {
        Observation::Visible {
            camera: CameraId(cam),
            bbox: BBox {
                x: 0.0,
                y: 0.0,
                w: 5.0,
                h: 5.0,
            },
        }
    }

    fn set_of(trajs: Vec<Trajectory>) -> TrajectorySet {
        TrajectorySet::new(CameraNetwork::uniform(5, 320, 240, 20.0), trajs).unwrap()
    }

    fn simple_set(n: u64) -> TrajectorySet {
        let trajs = (1..=n)
            .map(|id| Trajectory::new(id, 0, vec![obs(1), Observation::Hidden, obs(2)]).unwrap())
            .collect();
        set_of(trajs)
    }

    #[test]
    fn split_sizes_follow_ceil_rule() {
        let set = simple_set(5);
        let (train, test, _) = split_train_test(&set, 0.5, 7);
        assert_eq!(train.len(), 3);
        assert_eq!(test.len(), 2);

        let set = simple_set(14);
        let (train, test, _) = split_train_test(&set, 0.5, 7);
        assert_eq!(train.len(), 7);
        assert_eq!(test.len(), 7);
    }

    #[test]
    fn split_is_disjoint_and_deterministic() {
        let set = simple_set(9);
        let (train_a, test_a, _) = split_train_test(&set, 0.4, 3);
        let (train_b, _, _) = split_train_test(&set, 0.4, 3);
        assert_eq!(train_a.target_ids(), train_b.target_ids());
        for id in train_a.target_ids() {
            assert!(test_a.get(id).is_none());
        }
        assert_eq!(train_a.len() + test_a.len(), 9);
    }

    #[test]
    fn single_target_split_warns_and_keeps_it_in_train() {
        let set = simple_set(1);
        let (train, test, warnings) = split_train_test(&set, 0.5, 0);
        assert_eq!(train.len(), 1);
        assert_eq!(test.len(), 0);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn links_come_from_cross_camera_gaps_only() {
        let traj = Trajectory::new(
            1,
            0,
            vec![
                obs(1),
                Observation::Hidden,
                Observation::Hidden,
                obs(3),
                Observation::Hidden,
                obs(3),
                Observation::Hidden,
                obs(2),
            ],
        )
        .unwrap();
        let inferred = infer_links(&set_of(vec![traj]));
        assert_eq!(
            inferred.links.iter().copied().collect::<Vec<_>>(),
            vec![(1, 3), (2, 3)]
        );
        assert_eq!(inferred.transit_samples[&(1, 3)], vec![2]);
        assert_eq!(inferred.transit_samples[&(3, 2)], vec![1]);
        assert!(inferred.transit_samples.get(&(3, 3)).is_none());
    }

    #[test]
    fn adjacent_camera_switch_records_zero_gap() {
        let traj = Trajectory::new(1, 0, vec![obs(1), obs(2)]).unwrap();
        let inferred = infer_links(&set_of(vec![traj]));
        assert_eq!(inferred.transit_samples[&(1, 2)], vec![0]);
    }
}
