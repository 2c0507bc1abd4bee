//! Command-line driver: synthetic data generation, train/test splitting,
//! policy training, error-sweep evaluation, fixed baselines, and report
//! rendering. One top-level `--seed` fans out to per-stage seeds through
//! `seed::derive`, so every subcommand is reproducible on its own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use camsched::agent::{run_policy, train, Policy, TrainConfig};
use camsched::baselines::{
    exhaustive_policy, fit_transition_gaussians, gaussian_policy, neighbor_policy,
};
use camsched::env::{write_polllog, Env, EnvConfig, PollLog, PredictedTrajectory};
use camsched::error::{Error, Result};
use camsched::metrics::{
    aggregate, apr, confusion_matrix, frames_polled, mcta, report_text, write_confusion_csv,
    write_report_json, write_report_text, MetricMode, MetricReport, SelectionOutcome,
    TargetMetrics,
};
use camsched::netmodel::{
    generate_synthetic, infer_links, load_network, load_trajectories, save_network,
    save_trajectories, split_train_test, SynthConfig, Topology, TrajectoryFormat, TrajectorySet,
};
use camsched::seed::{derive, derive_indexed};

/// Default evaluation error-rate sweep.
const DEFAULT_ERR_GRID: [f64; 5] = [0.0, 0.05, 0.10, 0.15, 0.20];

#[derive(Parser)]
#[command(
    name = "camsched",
    version,
    about = "Camera-polling scheduler experiments"
)]
struct Cli {
    /// Flat TOML config file (key = value, no sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed; overrides the config file's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Print per-stage progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic camera network and trajectory set.
    Generate,
    /// Split a trajectory file into train and test targets.
    Split {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        /// Fraction of targets assigned to the train split.
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Train a polling policy on a trajectory file.
    Train {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        /// Overrides the config file's `epochs`.
        #[arg(long)]
        epochs: Option<u32>,
    },
    /// Evaluate a trained model over an error-rate sweep.
    Eval {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Metric mode: full (default) or ict.
        #[arg(long)]
        mode: Option<String>,
        /// Evaluate only the first K targets (by id).
        #[arg(long)]
        targets: Option<usize>,
    },
    /// Run fixed polling baselines on a trajectory file.
    Baseline {
        /// exhaustive, neighbor, gaussian, or all.
        #[arg(long)]
        which: String,
        #[arg(long)]
        net: PathBuf,
        /// Test split the baselines run on.
        #[arg(long)]
        test: PathBuf,
        /// Train split for link inference and transit statistics.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Metric mode: full (default) or ict.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Render a stored report JSON file as text.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    init_thread_pool()?;
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.get_u64("seed")?).unwrap_or(0);
    let out = &cli.out;
    let verbose = cli.verbose;
    match cli.cmd {
        Cmd::Generate => cmd_generate(&cfg, seed, out, verbose),
        Cmd::Split {
            net,
            traj,
            fraction,
        } => cmd_split(&cfg, seed, out, &net, &traj, fraction),
        Cmd::Train { net, traj, epochs } => {
            cmd_train(&cfg, seed, out, &net, &traj, epochs, verbose)
        }
        Cmd::Eval {
            net,
            traj,
            model,
            mode,
            targets,
        } => cmd_eval(
            &cfg,
            seed,
            out,
            &net,
            &traj,
            &model,
            mode.as_deref(),
            targets,
            verbose,
        ),
        Cmd::Baseline {
            which,
            net,
            test,
            train,
            mode,
        } => cmd_baseline(
            &cfg,
            seed,
            out,
            &which,
            &net,
            &test,
            train.as_deref(),
            mode.as_deref(),
        ),
        Cmd::Report { input } => cmd_report(&input),
    }
}

/// Caps the rayon pool at `CAMSCHED_THREADS` when the variable is set.
fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var("CAMSCHED_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::config("CAMSCHED_THREADS must be a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::config(format!("worker pool setup failed: {e}")))
}

fn cmd_generate(cfg: &RunConfig, seed: u64, out: &Path, verbose: bool) -> Result<()> {
    let mut sc = cfg.synth_config()?;
    sc.seed = derive(seed, "synth");
    let set = generate_synthetic(&sc)?;
    ensure_dir(out)?;
    save_network(&set.network, &out.join("net.json"))?;
    save_trajectories(&set, &out.join("traj.csv"), TrajectoryFormat::Csv)?;
    if verbose {
        let steps: usize = set.trajectories.values().map(|t| t.obs.len()).sum();
        eprintln!("generated {steps} observation rows");
    }
    println!(
        "wrote {} ({} cameras) and {} ({} targets)",
        out.join("net.json").display(),
        set.network.num_cameras,
        out.join("traj.csv").display(),
        set.len()
    );
    Ok(())
}

fn cmd_split(
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    net: &Path,
    traj: &Path,
    fraction: Option<f64>,
) -> Result<()> {
    let network = load_network(net)?;
    let set = load_trajectories(traj, TrajectoryFormat::Csv, &network)?;
    let fraction = match fraction.or(cfg.get_f64("fraction")?) {
        Some(f) if (0.0..=1.0).contains(&f) => f,
        Some(f) => return Err(Error::config(format!("fraction {f} is outside [0, 1]"))),
        None => 0.5,
    };
    let (train_set, test_set, warnings) = split_train_test(&set, fraction, derive(seed, "split"));
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    ensure_dir(out)?;
    save_trajectories(&train_set, &out.join("train.csv"), TrajectoryFormat::Csv)?;
    save_trajectories(&test_set, &out.join("test.csv"), TrajectoryFormat::Csv)?;
    println!(
        "split {} targets into {} train / {} test",
        set.len(),
        train_set.len(),
        test_set.len()
    );
    Ok(())
}

fn cmd_train(
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    net: &Path,
    traj: &Path,
    epochs: Option<u32>,
    verbose: bool,
) -> Result<()> {
    let network = load_network(net)?;
    let set = load_trajectories(traj, TrajectoryFormat::Csv, &network)?;
    let env_cfg = cfg.env_config(derive(seed, "env"))?;
    let mut tcfg = cfg.train_config(derive(seed, "train"))?;
    if let Some(e) = epochs {
        tcfg.epochs = e;
    }
    if verbose {
        eprintln!(
            "training on {} targets for {} epochs (n_step {}, gamma {})",
            set.len(),
            tcfg.epochs,
            tcfg.n_step,
            tcfg.gamma
        );
    }
    let (policy, rows) = train(&set, &env_cfg, &tcfg)?;
    ensure_dir(out)?;
    policy.save(&out.join("model.json"))?;
    camsched::agent::write_train_log(&rows, &out.join("train_log.csv"))?;
    let tail = (rows.len() / 10).max(1).min(rows.len());
    let mean: f64 = rows[rows.len() - tail..]
        .iter()
        .map(|r| r.episode_reward)
        .sum::<f64>()
        / tail as f64;
    println!("mean episode reward over last {tail} epochs: {mean}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    net: &Path,
    traj: &Path,
    model: &Path,
    mode: Option<&str>,
    targets: Option<usize>,
    verbose: bool,
) -> Result<()> {
    let network = load_network(net)?;
    let set = load_trajectories(traj, TrajectoryFormat::Csv, &network)?;
    let policy = Policy::load(model)?;
    let base_cfg = cfg.env_config(0)?;
    policy.validate_for(&network, &base_cfg)?;
    let mode = resolve_mode(cfg, mode)?;
    let ids = select_targets(&set, targets, cfg.get_usize("targets")?)?;
    let rates = cfg.err_rates()?;
    ensure_dir(out)?;

    let mut sweep = Vec::new();
    for &rate in &rates {
        let pct = (rate * 100.0).round() as u32;
        let mut env_cfg = base_cfg.clone();
        env_cfg.err_rate = rate;
        env_cfg.seed = derive(seed, &format!("eval-err{pct}"));
        let env = Env::new(&set, &env_cfg)?;
        let rollouts: Vec<(u64, PredictedTrajectory, PollLog)> = ids
            .par_iter()
            .map(|&id| {
                let traj = &set.trajectories[&id];
                let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed(env_cfg.seed, "target", id));
                run_policy(&policy, &env, traj, &mut rng).map(|(p, l)| (id, p, l))
            })
            .collect::<Result<_>>()?;

        let dir = out.join(format!("polllogs_err{pct}"));
        ensure_dir(&dir)?;
        let mut outcomes = Vec::new();
        let mut per_target = Vec::new();
        for (id, pred, log) in &rollouts {
            write_polllog(log, &dir.join(format!("target_{id}.csv")))?;
            let traj = &set.trajectories[id];
            let outcome = SelectionOutcome::from_poll_log(traj, log);
            let scores = apr(&outcome, mode)?;
            per_target.push(TargetMetrics {
                target_id: *id,
                a: scores.a,
                p: scores.p,
                r: scores.r,
                f: frames_polled(&outcome),
                mcta: Some(mcta(pred, traj)?),
                flags: scores.flags,
            });
            outcomes.push(outcome);
        }
        let report = aggregate(mode, per_target)?;
        write_report_json(&report, &out.join(format!("report_err{pct}.json")))?;
        write_report_text(&report, &out.join(format!("report_err{pct}.txt")))?;
        let matrix = confusion_matrix(&outcomes, network.num_cameras);
        write_confusion_csv(&matrix, &out.join(format!("confusion_err{pct}.csv")))?;
        if verbose {
            eprintln!("err {pct}%: mean A {} F {}", report.mean_a, report.total_f);
        }
        sweep.push((pct, report.mean_mcta));
    }

    let mut csv = String::from("err_pct,mean_mcta\n");
    for (pct, value) in &sweep {
        match value {
            Some(v) => csv.push_str(&format!("{pct},{v}\n")),
            None => csv.push_str(&format!("{pct},\n")),
        }
    }
    let path = out.join("mcta_vs_err.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    println!(
        "evaluated {} targets at {} error rates into {}",
        ids.len(),
        rates.len(),
        out.display()
    );
    Ok(())
}

fn cmd_baseline(
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
    which: &str,
    net: &Path,
    test: &Path,
    train: Option<&Path>,
    mode: Option<&str>,
) -> Result<()> {
    let methods: Vec<&str> = match which {
        "all" => vec!["exhaustive", "neighbor", "gaussian"],
        "exhaustive" | "neighbor" | "gaussian" => vec![which],
        other => {
            return Err(Error::config(format!(
                "unknown baseline `{other}` (expected exhaustive, neighbor, gaussian, or all)"
            )))
        }
    };
    let network = load_network(net)?;
    let test_set = load_trajectories(test, TrajectoryFormat::Csv, &network)?;
    let train_set = train
        .map(|p| load_trajectories(p, TrajectoryFormat::Csv, &network))
        .transpose()?;
    if methods.contains(&"gaussian") && train_set.is_none() {
        return Err(Error::config(
            "gaussian baseline needs a train split (--train)",
        ));
    }
    let mode = resolve_mode(cfg, mode)?;

    // Neighbor and gaussian search need links; recover them from the train
    // split when the network file does not carry any.
    let linked = if network.links.is_some() {
        network.clone()
    } else if let Some(ts) = &train_set {
        let mut with_links = network.clone();
        with_links.links = Some(infer_links(ts).links);
        with_links
    } else {
        network.clone()
    };

    ensure_dir(out)?;
    let ids = test_set.target_ids();
    let mut f_rows: BTreeMap<u64, Vec<(String, u64)>> = BTreeMap::new();
    for method in &methods {
        let mut warnings = Vec::new();
        let mut rollouts: Vec<(u64, PredictedTrajectory, PollLog)> = Vec::new();
        match *method {
            "exhaustive" => {
                for &id in &ids {
                    let (pred, log) = exhaustive_policy(&test_set.trajectories[&id], &network);
                    rollouts.push((id, pred, log));
                }
            }
            "neighbor" => {
                for &id in &ids {
                    let (pred, log, w) = neighbor_policy(&test_set.trajectories[&id], &linked)?;
                    warnings.extend(w);
                    rollouts.push((id, pred, log));
                }
            }
            "gaussian" => {
                let gauss = fit_transition_gaussians(train_set.as_ref().unwrap());
                let base = derive(seed, "baseline-gaussian");
                for &id in &ids {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed(base, "target", id));
                    let (pred, log, w) =
                        gaussian_policy(&test_set.trajectories[&id], &linked, &gauss, &mut rng)?;
                    warnings.extend(w);
                    rollouts.push((id, pred, log));
                }
            }
            _ => unreachable!(),
        }
        warnings.sort();
        warnings.dedup();
        for w in &warnings {
            eprintln!("warning: {method}: {w}");
        }

        let mut per_target = Vec::new();
        for (id, pred, log) in &rollouts {
            let traj = &test_set.trajectories[id];
            let outcome = SelectionOutcome::from_poll_log(traj, log);
            let scores = apr(&outcome, mode)?;
            let f = frames_polled(&outcome);
            f_rows.entry(*id).or_default().push((method.to_string(), f));
            per_target.push(TargetMetrics {
                target_id: *id,
                a: scores.a,
                p: scores.p,
                r: scores.r,
                f,
                mcta: Some(mcta(pred, traj)?),
                flags: scores.flags,
            });
        }
        let report = aggregate(mode, per_target)?;
        write_report_json(&report, &out.join(format!("report_{method}.json")))?;
        write_report_text(&report, &out.join(format!("report_{method}.txt")))?;
        println!(
            "{method}: mean R {} total F {}",
            report.mean_r, report.total_f
        );
    }

    let mut csv = String::from("target_id,method,f\n");
    for (id, rows) in &f_rows {
        for (method, f) in rows {
            csv.push_str(&format!("{id},{method},{f}\n"));
        }
    }
    let path = out.join("f_compare.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn cmd_report(input: &Path) -> Result<()> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let report: MetricReport = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("{}: {e}", input.display())))?;
    print!("{}", report_text(&report));
    Ok(())
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Metric mode from the flag, then the config file, then `full`.
fn resolve_mode(cfg: &RunConfig, flag: Option<&str>) -> Result<MetricMode> {
    match flag.map(str::to_string).or(cfg.get_str("mode")?) {
        Some(s) => MetricMode::from_str(&s),
        None => Ok(MetricMode::Full),
    }
}

/// First `k` target ids in canonical order, or all of them.
fn select_targets(
    set: &TrajectorySet,
    flag: Option<usize>,
    from_config: Option<usize>,
) -> Result<Vec<u64>> {
    let ids = set.target_ids();
    match flag.or(from_config) {
        None => Ok(ids),
        Some(0) => Err(Error::config("target count must be at least 1")),
        Some(k) if k > ids.len() => Err(Error::config(format!(
            "asked for {k} targets but the trajectory file has {}",
            ids.len()
        ))),
        Some(k) => Ok(ids[..k].to_vec()),
    }
}

/// Flat TOML `key = value` configuration with unknown keys rejected.
#[derive(Debug)]
struct RunConfig {
    table: toml::Table,
}

/// Non-override keys any subcommand may consume.
const KNOWN_KEYS: &[&str] = &[
    "seed",
    // synthetic data
    "num_cameras",
    "num_targets",
    "topology",
    "frame_width",
    "frame_height",
    "fps",
    "dwell_mean",
    "dwell_std",
    "transit_mean",
    "transit_std",
    "exit_prob",
    "max_steps",
    "edge_prob",
    // environment
    "err_rate",
    "time_limit",
    "reward_horizon",
    "tau_norm",
    "history_len",
    // training
    "gamma",
    "n_step",
    "lr",
    "batch_size",
    "replay_capacity",
    "epochs",
    "eps_floor",
    "hidden",
    "updates_per_episode",
    // evaluation and splitting
    "err_rates",
    "mode",
    "targets",
    "fraction",
];

/// Parses `transit_mean_2_3` / `transit_std_2_3` style override keys.
fn transit_override_key(key: &str) -> Option<(bool, u32, u32)> {
    let (is_mean, rest) = if let Some(r) = key.strip_prefix("transit_mean_") {
        (true, r)
    } else if let Some(r) = key.strip_prefix("transit_std_") {
        (false, r)
    } else {
        return None;
    };
    let (a, b) = rest.split_once('_')?;
    Some((is_mean, a.parse().ok()?, b.parse().ok()?))
}

impl RunConfig {
    fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig {
                table: toml::Table::new(),
            });
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        if table.values().any(|v| v.is_table()) {
            return Err(Error::config(format!(
                "{}: config must be flat key = value pairs",
                path.display()
            )));
        }
        for key in table.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) && transit_override_key(key).is_none() {
                return Err(Error::config(format!(
                    "{}: unknown config key `{key}`",
                    path.display()
                )));
            }
        }
        Ok(RunConfig { table })
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .map(Some)
                .ok_or_else(|| Error::config(format!("config key `{key}` must be a number"))),
        }
    }

    fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .filter(|&i| i >= 0)
                .map(|i| Some(i as u64))
                .ok_or_else(|| {
                    Error::config(format!("config key `{key}` must be a non-negative integer"))
                }),
        }
    }

    fn get_u32(&self, key: &str) -> Result<Option<u32>> {
        match self.get_u64(key)? {
            None => Ok(None),
            Some(v) => u32::try_from(v)
                .map(Some)
                .map_err(|_| Error::config(format!("config key `{key}` is too large"))),
        }
    }

    fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.get_u64(key)?.map(|v| v as usize))
    }

    fn get_str(&self, key: &str) -> Result<Option<String>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| Error::config(format!("config key `{key}` must be a string"))),
        }
    }

    fn get_f64_array(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.table.get(key) else {
            return Ok(None);
        };
        let arr = v
            .as_array()
            .ok_or_else(|| Error::config(format!("config key `{key}` must be an array")))?;
        let mut out = Vec::with_capacity(arr.len());
        for item in arr {
            let x = item
                .as_float()
                .or_else(|| item.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::config(format!("config key `{key}` must hold numbers")))?;
            out.push(x);
        }
        Ok(Some(out))
    }

    fn synth_config(&self) -> Result<SynthConfig> {
        let mut sc = SynthConfig::default();
        if let Some(v) = self.get_u32("num_cameras")? {
            sc.num_cameras = v;
        }
        if let Some(v) = self.get_u32("num_targets")? {
            sc.num_targets = v;
        }
        if let Some(v) = self.get_str("topology")? {
            sc.topology = Topology::from_str(&v)?;
        }
        if let Some(v) = self.get_u32("frame_width")? {
            sc.frame_width = v;
        }
        if let Some(v) = self.get_u32("frame_height")? {
            sc.frame_height = v;
        }
        if let Some(v) = self.get_f64("fps")? {
            sc.fps = v;
        }
        if let Some(v) = self.get_f64("dwell_mean")? {
            sc.dwell_mean = v;
        }
        if let Some(v) = self.get_f64("dwell_std")? {
            sc.dwell_std = v;
        }
        if let Some(v) = self.get_f64("transit_mean")? {
            sc.transit_mean = v;
        }
        if let Some(v) = self.get_f64("transit_std")? {
            sc.transit_std = v;
        }
        if let Some(v) = self.get_f64("exit_prob")? {
            sc.exit_prob = v;
        }
        if let Some(v) = self.get_u32("max_steps")? {
            sc.max_steps = v;
        }
        if let Some(v) = self.get_f64("edge_prob")? {
            sc.edge_prob = v;
        }
        for key in self.table.keys() {
            let Some((is_mean, from, to)) = transit_override_key(key) else {
                continue;
            };
            let value = self.get_f64(key)?.unwrap();
            let entry = sc
                .transit_overrides
                .entry((from, to))
                .or_insert((sc.transit_mean, sc.transit_std));
            if is_mean {
                entry.0 = value;
            } else {
                entry.1 = value;
            }
        }
        Ok(sc)
    }

    /// Zero for `time_limit`, `reward_horizon`, or `tau_norm` disables the
    /// field (maps to `None`).
    fn env_config(&self, seed: u64) -> Result<EnvConfig> {
        let mut ec = EnvConfig {
            seed,
            ..EnvConfig::default()
        };
        if let Some(v) = self.get_f64("err_rate")? {
            ec.err_rate = v;
        }
        if let Some(v) = self.get_u32("time_limit")? {
            ec.time_limit = (v > 0).then_some(v);
        }
        if let Some(v) = self.get_u32("reward_horizon")? {
            ec.reward_horizon = (v > 0).then_some(v);
        }
        if let Some(v) = self.get_u32("tau_norm")? {
            ec.tau_norm = (v > 0).then_some(v);
        }
        if let Some(v) = self.get_usize("history_len")? {
            ec.history_len = v;
        }
        Ok(ec)
    }

    fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let mut tc = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        if let Some(v) = self.get_f64("gamma")? {
            tc.gamma = v;
        }
        if let Some(v) = self.get_usize("n_step")? {
            tc.n_step = v;
        }
        if let Some(v) = self.get_f64("lr")? {
            tc.lr = v;
        }
        if let Some(v) = self.get_usize("batch_size")? {
            tc.batch_size = v;
        }
        if let Some(v) = self.get_usize("replay_capacity")? {
            tc.replay_capacity = v;
        }
        if let Some(v) = self.get_u32("epochs")? {
            tc.epochs = v;
        }
        if let Some(v) = self.get_f64("eps_floor")? {
            tc.eps_floor = v;
        }
        if let Some(arr) = self.get_f64_array("hidden")? {
            if arr.len() != 3 || arr.iter().any(|&x| x < 1.0 || x.fract() != 0.0) {
                return Err(Error::config(
                    "config key `hidden` must be three positive integers",
                ));
            }
            tc.hidden = [arr[0] as usize, arr[1] as usize, arr[2] as usize];
        }
        if let Some(v) = self.get_u32("updates_per_episode")? {
            tc.updates_per_episode = v;
        }
        Ok(tc)
    }

    fn err_rates(&self) -> Result<Vec<f64>> {
        let Some(rates) = self.get_f64_array("err_rates")? else {
            return Ok(DEFAULT_ERR_GRID.to_vec());
        };
        if rates.is_empty() || rates.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::config(
                "err_rates must be a non-empty list within [0, 1]",
            ));
        }
        Ok(rates)
    }
}
