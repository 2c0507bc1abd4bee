//! End-to-end subcommand tests against the compiled binary: artifact
//! layout, exit codes, and cross-command plumbing on tiny synthetic runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use camsched::netmodel::{load_network, save_network};

const CONFIG: &str = "\
num_cameras = 2
num_targets = 4
topology = \"chain\"
dwell_mean = 4.0
dwell_std = 1.0
transit_mean = 2.0
transit_std = 0.5
exit_prob = 0.3
max_steps = 80
time_limit = 20
reward_horizon = 4
epochs = 15
batch_size = 8
replay_capacity = 500
hidden = [12, 12, 6]
err_rates = [0.0, 0.1]
";

fn run(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    if !cfg.is_file() {
        std::fs::write(&cfg, CONFIG).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_camsched"))
        .args(["--config", cfg.to_str().unwrap(), "--seed", "9"])
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Generates a dataset under `dir/data` and returns (net.json, traj.csv).
fn gen_data(dir: &Path) -> (String, String) {
    ok(dir, &["--out", &p(dir, "data"), "generate"]);
    (p(dir, "data/net.json"), p(dir, "data/traj.csv"))
}

#[test]
fn generate_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let stdout = ok(dir, &["--out", &p(dir, "a"), "generate"]);
    assert!(stdout.contains("net.json"));
    ok(dir, &["--out", &p(dir, "b"), "generate"]);
    for name in ["net.json", "traj.csv"] {
        let a = std::fs::read(dir.join("a").join(name)).unwrap();
        let b = std::fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }
}

#[test]
fn invalid_topology_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("run.toml"),
        CONFIG.replace("\"chain\"", "\"spiral\""),
    )
    .unwrap();
    let out = run(dir, &["--out", &p(dir, "data"), "generate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("topology"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let blocker = dir.join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = run(dir, &["--out", &p(dir, "blocker/data"), "generate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn split_partitions_the_targets() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (net, traj) = gen_data(dir);
    let stdout = ok(
        dir,
        &[
            "--out",
            &p(dir, "data"),
            "split",
            "--net",
            &net,
            "--traj",
            &traj,
            "--fraction",
            "0.5",
        ],
    );
    assert!(stdout.contains("train"));
    let count = |name: &str| {
        let text = std::fs::read_to_string(dir.join("data").join(name)).unwrap();
        text.lines().count() - 1
    };
    let total = count("traj.csv");
    assert_eq!(count("train.csv") + count("test.csv"), total);
    let bad = run(
        dir,
        &[
            "--out",
            &p(dir, "data"),
            "split",
            "--net",
            &net,
            "--traj",
            &traj,
            "--fraction",
            "1.5",
        ],
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn train_saves_model_and_log() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (net, traj) = gen_data(dir);
    let stdout = ok(
        dir,
        &[
            "--out",
            &p(dir, "run"),
            "train",
            "--net",
            &net,
            "--traj",
            &traj,
        ],
    );
    assert!(stdout.contains("mean episode reward over last"));
    assert!(dir.join("run/model.json").is_file());
    let log = std::fs::read_to_string(dir.join("run/train_log.csv")).unwrap();
    assert!(log.starts_with("epoch,epsilon,episode_reward,running_reward\n"));
    assert_eq!(log.lines().count(), 16);

    let zero = run(
        dir,
        &[
            "--out",
            &p(dir, "run"),
            "train",
            "--net",
            &net,
            "--traj",
            &traj,
            "--epochs",
            "0",
        ],
    );
    assert_eq!(zero.status.code(), Some(1));
}

#[test]
fn eval_emits_the_error_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (net, traj) = gen_data(dir);
    ok(
        dir,
        &[
            "--out",
            &p(dir, "run"),
            "train",
            "--net",
            &net,
            "--traj",
            &traj,
        ],
    );
    ok(
        dir,
        &[
            "--out",
            &p(dir, "eval"),
            "eval",
            "--net",
            &net,
            "--traj",
            &traj,
            "--model",
            &p(dir, "run/model.json"),
            "--mode",
            "ict",
            "--targets",
            "2",
        ],
    );
    for pct in [0, 10] {
        assert!(dir
            .join("eval")
            .join(format!("report_err{pct}.json"))
            .is_file());
        assert!(dir
            .join("eval")
            .join(format!("report_err{pct}.txt"))
            .is_file());
        assert!(dir
            .join("eval")
            .join(format!("confusion_err{pct}.csv"))
            .is_file());
        let logs: Vec<PathBuf> =
            std::fs::read_dir(dir.join("eval").join(format!("polllogs_err{pct}")))
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
        assert_eq!(logs.len(), 2, "expected one poll log per requested target");
    }
    let sweep = std::fs::read_to_string(dir.join("eval/mcta_vs_err.csv")).unwrap();
    assert!(sweep.starts_with("err_pct,mean_mcta\n"));
    assert_eq!(sweep.lines().count(), 3);
    let text = std::fs::read_to_string(dir.join("eval/report_err0.txt")).unwrap();
    assert!(text.starts_with("mode: ict\n"));
}

#[test]
fn eval_rejects_a_mismatched_network() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (net, traj) = gen_data(dir);
    ok(
        dir,
        &[
            "--out",
            &p(dir, "run"),
            "train",
            "--net",
            &net,
            "--traj",
            &traj,
        ],
    );
    std::fs::write(
        dir.join("run.toml"),
        CONFIG.replace("num_cameras = 2", "num_cameras = 3"),
    )
    .unwrap();
    ok(dir, &["--out", &p(dir, "wide"), "generate"]);
    let out = run(
        dir,
        &[
            "--out",
            &p(dir, "eval"),
            "eval",
            "--net",
            &p(dir, "wide/net.json"),
            "--traj",
            &p(dir, "wide/traj.csv"),
            "--model",
            &p(dir, "run/model.json"),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
}

#[test]
fn baseline_all_writes_reports_and_f_table() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (net, traj) = gen_data(dir);
    ok(
        dir,
        &[
            "--out",
            &p(dir, "data"),
            "split",
            "--net",
            &net,
            "--traj",
            &traj,
        ],
    );
    let stdout = ok(
        dir,
        &[
            "--out",
            &p(dir, "base"),
            "baseline",
            "--which",
            "all",
            "--net",
            &net,
            "--test",
            &p(dir, "data/test.csv"),
            "--train",
            &p(dir, "data/train.csv"),
        ],
    );
    assert!(stdout.contains("exhaustive: mean R 1"));
    for method in ["exhaustive", "neighbor", "gaussian"] {
        assert!(dir
            .join("base")
            .join(format!("report_{method}.json"))
            .is_file());
        assert!(dir
            .join("base")
            .join(format!("report_{method}.txt"))
            .is_file());
    }
    let table = std::fs::read_to_string(dir.join("base/f_compare.csv")).unwrap();
    assert!(table.starts_with("target_id,method,f\n"));
    let test_rows = std::fs::read_to_string(dir.join("data/test.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    let targets = test_rows > 0;
    assert!(targets);
    let methods_per_target = 3;
    let ids: std::collections::BTreeSet<&str> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(table.lines().count() - 1, ids.len() * methods_per_target);
}

#[test]
fn gaussian_baseline_requires_a_train_split() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (net, traj) = gen_data(dir);
    let out = run(
        dir,
        &[
            "--out",
            &p(dir, "base"),
            "baseline",
            "--which",
            "gaussian",
            "--net",
            &net,
            "--test",
            &traj,
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train"));
}

#[test]
fn neighbor_on_full_mesh_links_matches_exhaustive() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("run.toml"),
        CONFIG.replace("num_cameras = 2", "num_cameras = 3"),
    )
    .unwrap();
    let (net, traj) = gen_data(dir);
    let mut network = load_network(Path::new(&net)).unwrap();
    network.links = Some([(1, 2), (1, 3), (2, 3)].into_iter().collect());
    save_network(&network, &dir.join("data/meshed.json")).unwrap();
    for which in ["exhaustive", "neighbor"] {
        ok(
            dir,
            &[
                "--out",
                &p(dir, which),
                "baseline",
                "--which",
                which,
                "--net",
                &p(dir, "data/meshed.json"),
                "--test",
                &traj,
            ],
        );
    }
    // Neighbor search skips the camera the target just left, so per lost
    // step it polls one frame fewer than exhaustive; every accuracy-type
    // value must still coincide.
    let read = |path: PathBuf| -> (serde_json::Value, Vec<u64>) {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let mut fs = vec![v["total_f"].as_u64().unwrap()];
        v["total_f"] = 0.into();
        for t in v["targets"].as_array_mut().unwrap() {
            fs.push(t["f"].as_u64().unwrap());
            t["f"] = 0.into();
        }
        (v, fs)
    };
    let (a, fa) = read(dir.join("exhaustive/report_exhaustive.json"));
    let (b, fb) = read(dir.join("neighbor/report_neighbor.json"));
    assert_eq!(
        a, b,
        "full-mesh neighbor must match exhaustive on all non-F values"
    );
    for (x, n) in fa.iter().zip(&fb) {
        assert!(
            n <= x,
            "neighbor may never poll more frames than exhaustive"
        );
    }
}

#[test]
fn report_renders_stored_json() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (net, traj) = gen_data(dir);
    ok(
        dir,
        &[
            "--out",
            &p(dir, "base"),
            "baseline",
            "--which",
            "exhaustive",
            "--net",
            &net,
            "--test",
            &traj,
        ],
    );
    let stdout = ok(
        dir,
        &["report", "--input", &p(dir, "base/report_exhaustive.json")],
    );
    assert!(stdout.starts_with("mode: full\n"));
    assert!(stdout.contains("MCTA"));
    let missing = run(dir, &["report", "--input", &p(dir, "base/nope.json")]);
    assert_eq!(missing.status.code(), Some(2));
}
