//! Executes every (arm, seed) run of an experiment and writes the artifacts:
//! one streamed CSV per run at `<out>/<arm>/seed-<seed>.csv`, the canonical
//! config at `<out>/config.txt`, and `<out>/manifest.txt`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use super::config::{env_descriptor, AgentKind, ArmKind, ArmSpec, ExperimentConfig};
use super::curve::{CurveCsvWriter, EpisodeSink, LearningCurve};
use super::HarnessError;
use crate::augmentation::{build_augmentation, identity_similarity, AugmentedEnv};
use crate::dqn::{train_dqn_with, DqnConfig};
use crate::qcore::{train_tabular_with, AgentHyperparams};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub arm: String,
    pub seed: u64,
    /// CSV path relative to the output directory.
    pub path: PathBuf,
    pub status: RunStatus,
    pub curve: Option<LearningCurve>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    pub config_hash: String,
    /// Ordered by arm (config order) then seed (config order).
    pub runs: Vec<RunRecord>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| r.status != RunStatus::Ok)
    }

    /// Curves of the successful runs of `arm`, in seed order.
    pub fn curves(&self, arm: &str) -> Vec<&LearningCurve> {
        self.runs.iter().filter(|r| r.arm == arm).filter_map(|r| r.curve.as_ref()).collect()
    }
}

fn run_path(arm: &str, seed: u64) -> PathBuf {
    Path::new(arm).join(format!("seed-{seed}.csv"))
}

/// Trains one (arm, seed) run, streaming finished episodes to `sink`.
pub fn run_single(
    config: &ExperimentConfig,
    arm: &ArmSpec,
    seed: u64,
    sink: &mut dyn EpisodeSink,
) -> Result<LearningCurve, HarnessError> {
    let run_err = |e: &dyn std::fmt::Display| HarnessError::Run(format!("arm `{}` seed {seed}: {e}", arm.name));
    let base = config.env.build().map_err(|e| run_err(&e))?;
    let (table, k) = build_augmentation(&arm.augmentation, base.spec().base_action_count).map_err(|e| run_err(&e))?;
    let mut env = AugmentedEnv::new(base, table, seed).map_err(|e| run_err(&e))?;
    let oracle = arm.arm == ArmKind::Oracle;
    match config.agent {
        AgentKind::Tabular => {
            let hp = AgentHyperparams {
                alpha: config.tabular.alpha,
                gamma: config.gamma,
                epsilon_start: config.epsilon_start,
                epsilon_end: config.epsilon_end,
                epsilon_decay_steps: decay_steps(config.budget, config.tabular.epsilon_fraction),
            };
            let k = if oracle { k } else { identity_similarity(k.size()) };
            train_tabular_with(&mut env, &k, &hp, config.budget, seed, sink, &mut |_| {})
                .map(|o| o.curve)
                .map_err(|e| run_err(&e))
        }
        AgentKind::Dqn => {
            let dqn = dqn_config(config, k, oracle);
            train_dqn_with(&mut env, &dqn, config.budget, seed, sink).map(|o| o.curve).map_err(|e| run_err(&e))
        }
    }
}

fn decay_steps(budget: u64, fraction: f64) -> u64 {
    ((budget as f64 * fraction).round() as u64).max(1)
}

/// The DQN settings of `config` for one arm.
pub fn dqn_config(config: &ExperimentConfig, k: crate::augmentation::SimilarityMatrix, oracle: bool) -> DqnConfig {
    let d = &config.dqn;
    let mut c = DqnConfig::new(k, oracle, config.budget);
    c.hyperparams = AgentHyperparams {
        alpha: d.learning_rate,
        gamma: config.gamma,
        epsilon_start: config.epsilon_start,
        epsilon_end: config.epsilon_end,
        epsilon_decay_steps: decay_steps(config.budget, d.epsilon_fraction),
    };
    c.hidden = d.hidden.clone();
    c.batch_size = d.batch_size;
    c.replay_capacity = d.replay_capacity;
    c.learning_starts = d.learning_starts;
    c.target_sync_interval = d.target_sync;
    c.train_interval = d.train_interval;
    c.grad_clip = d.grad_clip;
    c.normalize_by_clique = d.normalize_by_clique;
    c.tie_similar_heads = d.tie_similar_heads;
    c
}

/// Runs every (arm, seed) pair on `workers` threads. The config is validated
/// and the output directory prepared before any run starts; individual run
/// failures are recorded in the manifest without stopping the others.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    if config.sweep.is_some() {
        return Err(HarnessError::InvalidConfig(
            "a sweep config must be expanded into one experiment per value before running".into(),
        ));
    }
    if workers == 0 {
        return Err(HarnessError::InvalidConfig("workers must be at least 1".into()));
    }
    for arm in &config.arms {
        let dir = out_dir.join(&arm.name);
        fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    }
    let config_path = out_dir.join(CONFIG_FILE);
    fs::write(&config_path, config.canonical_text()).map_err(|e| HarnessError::io(&config_path, e))?;

    let tasks: Vec<(&ArmSpec, u64)> =
        config.arms.iter().flat_map(|arm| config.seeds.iter().map(move |&seed| (arm, seed))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::InvalidConfig(format!("worker pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(arm, seed)| {
                let rel = run_path(&arm.name, seed);
                let result = execute(config, arm, seed, &out_dir.join(&rel));
                let (status, curve) = match result {
                    Ok(curve) => (RunStatus::Ok, Some(curve)),
                    Err(e) => (RunStatus::Failed(e.to_string()), None),
                };
                RunRecord { arm: arm.name.clone(), seed, path: rel, status, curve }
            })
            .collect()
    });

    let outcome = ExperimentOutcome { out_dir: out_dir.to_path_buf(), config_hash: config.config_hash(), runs };
    let manifest = Manifest::from_outcome(config, &outcome, workers);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest.to_text()).map_err(|e| HarnessError::io(&manifest_path, e))?;
    Ok(outcome)
}

fn execute(config: &ExperimentConfig, arm: &ArmSpec, seed: u64, path: &Path) -> Result<LearningCurve, HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut sink = CurveCsvWriter::new(file)?;
    run_single(config, arm, seed, &mut sink)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRun {
    pub arm: String,
    pub seed: u64,
    pub status: RunStatus,
    pub path: String,
}

/// The experiment index written next to the run CSVs. Everything above the
/// `[metadata]` block is a deterministic function of the config and results.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config_hash: String,
    pub name: String,
    pub environment: String,
    pub agent: String,
    pub budget: u64,
    pub arms: Vec<String>,
    pub seeds: Vec<u64>,
    pub runs: Vec<ManifestRun>,
    pub metadata: Vec<(String, String)>,
}

impl Manifest {
    fn from_outcome(config: &ExperimentConfig, outcome: &ExperimentOutcome, workers: usize) -> Self {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Manifest {
            config_hash: outcome.config_hash.clone(),
            name: config.name.clone(),
            environment: env_descriptor(config.env),
            agent: config.agent.name().into(),
            budget: config.budget,
            arms: config.arms.iter().map(|a| a.name.clone()).collect(),
            seeds: config.seeds.clone(),
            runs: outcome
                .runs
                .iter()
                .map(|r| ManifestRun {
                    arm: r.arm.clone(),
                    seed: r.seed,
                    status: r.status.clone(),
                    path: r.path.to_string_lossy().replace('\\', "/"),
                })
                .collect(),
            metadata: vec![("created_unix".into(), created.to_string()), ("workers".into(), workers.to_string())],
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# experiment manifest\n");
        let join = |v: Vec<String>| v.join(",");
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "environment = {}", self.environment);
        let _ = writeln!(s, "agent = {}", self.agent);
        let _ = writeln!(s, "budget = {}", self.budget);
        let _ = writeln!(s, "arms = {}", join(self.arms.clone()));
        let _ = writeln!(s, "seeds = {}", join(self.seeds.iter().map(u64::to_string).collect()));
        let _ = writeln!(s, "config = {CONFIG_FILE}");
        s.push_str("\n[runs]\n");
        for r in &self.runs {
            match &r.status {
                RunStatus::Ok => {
                    let _ = writeln!(s, "{} {} ok {}", r.arm, r.seed, r.path);
                }
                RunStatus::Failed(msg) => {
                    let _ = writeln!(s, "{} {} failed {} {}", r.arm, r.seed, r.path, msg.replace('\n', " "));
                }
            }
        }
        s.push_str("\n[metadata]\n");
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let err = |line: usize, m: &str| HarnessError::Manifest(format!("line {line}: {m}"));
        let mut m = Manifest {
            config_hash: String::new(),
            name: String::new(),
            environment: String::new(),
            agent: String::new(),
            budget: 0,
            arms: Vec::new(),
            seeds: Vec::new(),
            runs: Vec::new(),
            metadata: Vec::new(),
        };
        let mut section = "";
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name {
                    "runs" => "runs",
                    "metadata" => "metadata",
                    _ => return Err(err(line_no, &format!("unknown section `{name}`"))),
                };
                continue;
            }
            if section == "runs" {
                let mut parts = line.splitn(5, ' ');
                let (Some(arm), Some(seed), Some(status), Some(path)) =
                    (parts.next(), parts.next(), parts.next(), parts.next())
                else {
                    return Err(err(line_no, "run lines need arm, seed, status and path"));
                };
                let seed = seed.parse().map_err(|_| err(line_no, "seed is not an integer"))?;
                let status = match status {
                    "ok" => RunStatus::Ok,
                    "failed" => RunStatus::Failed(parts.next().unwrap_or("").to_string()),
                    other => return Err(err(line_no, &format!("unknown run status `{other}`"))),
                };
                m.runs.push(ManifestRun { arm: arm.into(), seed, status, path: path.into() });
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(line_no, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if section == "metadata" {
                m.metadata.push((key.into(), value.into()));
                continue;
            }
            let list =
                |v: &str| -> Vec<String> { v.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect() };
            match key {
                "config_hash" => m.config_hash = value.into(),
                "name" => m.name = value.into(),
                "environment" => m.environment = value.into(),
                "agent" => m.agent = value.into(),
                "budget" => m.budget = value.parse().map_err(|_| err(line_no, "budget is not an integer"))?,
                "arms" => m.arms = list(value),
                "seeds" => {
                    m.seeds = list(value)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err(line_no, "seeds must be integers"))?
                }
                "config" => {}
                other => return Err(err(line_no, &format!("unknown key `{other}`"))),
            }
        }
        if m.config_hash.is_empty() || m.environment.is_empty() {
            return Err(HarnessError::Manifest("missing config_hash or environment".into()));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display())))
    }
}
