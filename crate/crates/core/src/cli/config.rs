//! `key = value` experiment files.
//!
//! Keys before the first `[section]` are global. Each `[name]` section defines
//! one arm and may only set `arm`, `augmentation`, `n`, `h` and `random_k`;
//! the same keys at global level are defaults for every arm. A file without
//! sections describes a single arm named after its `arm` value. A baseline arm
//! that does not set `augmentation` itself always uses `none`.
//!
//! | key | default |
//! |-----|---------|
//! | `env` | mandatory: `cartpole`, `pendulum` or `chain` |
//! | `name` | `experiment` |
//! | `chain_n` / `pendulum_torques` | 10 / 3 |
//! | `agent` | `dqn` (or `tabular`) |
//! | `seeds` | `0..10` (comma list or half-open range) |
//! | `budget` | 50000 |
//! | `gamma`, `epsilon_start`, `epsilon_end` | 0.99, 1.0, 0.05 |
//! | `threshold` | the environment's solve threshold |
//! | `window` | 20 |
//! | `tabular.alpha`, `tabular.epsilon_fraction` | 0.1, 0.5 |
//! | `dqn.learning_rate`, `dqn.hidden` | 0.001, `128,128` |
//! | `dqn.batch_size`, `dqn.replay_capacity`, `dqn.learning_starts` | 64, 50000, 1000 |
//! | `dqn.target_sync`, `dqn.train_interval`, `dqn.grad_clip` | 500, 1, 10 |
//! | `dqn.epsilon_fraction`, `dqn.normalize_by_clique` | 0.1, false |
//! | `dqn.tie_similar_heads` | true |
//! | `arm`, `augmentation`, `n`, `h`, `random_k` | `unmodified`, `none`, 5, 0.5, `clique` |
//! | `sweep.n` / `sweep.h` | no sweep |

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::augmentation::{AugmentationKind, AugmentationSpec, RandomK};
use crate::envs::EnvKind;
use crate::harness::{ArmKind, ArmSpec, ExperimentConfig, Sweep};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        if let Some(key) = &self.key {
            write!(f, ": key `{key}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

const GLOBAL_KEYS: &[&str] = &[
    "name",
    "env",
    "chain_n",
    "pendulum_torques",
    "agent",
    "seeds",
    "budget",
    "gamma",
    "epsilon_start",
    "epsilon_end",
    "threshold",
    "window",
    "tabular.alpha",
    "tabular.epsilon_fraction",
    "dqn.learning_rate",
    "dqn.hidden",
    "dqn.batch_size",
    "dqn.replay_capacity",
    "dqn.learning_starts",
    "dqn.target_sync",
    "dqn.train_interval",
    "dqn.grad_clip",
    "dqn.epsilon_fraction",
    "dqn.normalize_by_clique",
    "dqn.tie_similar_heads",
    "sweep.n",
    "sweep.h",
];

const ARM_KEYS: &[&str] = &["arm", "augmentation", "n", "h", "random_k"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Scope {
    header_line: usize,
    name: String,
    entries: HashMap<String, Entry>,
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        source: source.clone(),
        line: None,
        key: None,
        message: format!("cannot read: {e}"),
    })?;
    parse_config_str(&text, &source)
}

/// Parses config text; `source` names the input in error messages.
pub fn parse_config_str(text: &str, source: &str) -> Result<ExperimentConfig, ConfigError> {
    let err = |line: Option<usize>, key: Option<&str>, message: String| ConfigError {
        source: source.to_string(),
        line,
        key: key.map(str::to_string),
        message,
    };

    let mut global = Scope::default();
    let mut sections: Vec<Scope> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(Some(line_no), None, "section header must look like `[name]`".into()))?
                .trim();
            if sections.iter().any(|s| s.name == name) {
                return Err(err(Some(line_no), None, format!("section `[{name}]` appears twice")));
            }
            sections.push(Scope { header_line: line_no, name: name.to_string(), entries: HashMap::new() });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(Some(line_no), None, format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let in_section = !sections.is_empty();
        let known = ARM_KEYS.contains(&key) || (!in_section && GLOBAL_KEYS.contains(&key));
        if !known {
            let message = if GLOBAL_KEYS.contains(&key) {
                "only arm keys (arm, augmentation, n, h, random_k) may appear inside a section".to_string()
            } else {
                "unknown key".to_string()
            };
            return Err(err(Some(line_no), Some(key), message));
        }
        let scope = sections.last_mut().unwrap_or(&mut global);
        if scope.entries.contains_key(key) {
            return Err(err(Some(line_no), Some(key), "key is set twice".into()));
        }
        scope.entries.insert(key.to_string(), Entry { value: value.to_string(), line: line_no });
    }

    let get = |scope: &Scope, key: &str| scope.entries.get(key).cloned();
    fn typed<T: FromStr>(e: &Entry, key: &str, source: &str, what: &str) -> Result<T, ConfigError> {
        e.value.parse().map_err(|_| ConfigError {
            source: source.to_string(),
            line: Some(e.line),
            key: Some(key.to_string()),
            message: format!("expected {what}, found `{}`", e.value),
        })
    }
    let range = |e: &Entry, key: &str, v: f64, lo: f64, hi: f64, lo_open: bool| -> Result<f64, ConfigError> {
        let ok = v.is_finite() && v <= hi && if lo_open { v > lo } else { v >= lo };
        if ok {
            Ok(v)
        } else {
            let open = if lo_open { "(" } else { "[" };
            Err(err(Some(e.line), Some(key), format!("must lie in {open}{lo}, {hi}], got {v}")))
        }
    };
    let positive = |e: &Entry, key: &str, v: u64| -> Result<u64, ConfigError> {
        if v == 0 {
            Err(err(Some(e.line), Some(key), "must be positive".into()))
        } else {
            Ok(v)
        }
    };

    // Environment first: it is mandatory and other defaults depend on it.
    let env_entry = get(&global, "env").ok_or_else(|| err(None, Some("env"), "mandatory key is missing".into()))?;
    let mut env: EnvKind = env_entry
        .value
        .parse()
        .map_err(|e: crate::envs::EnvError| err(Some(env_entry.line), Some("env"), e.to_string()))?;
    match &mut env {
        EnvKind::Chain { n } => {
            if let Some(e) = get(&global, "chain_n") {
                *n = typed(&e, "chain_n", source, "an integer")?;
                if *n < 3 {
                    return Err(err(Some(e.line), Some("chain_n"), "chain needs at least 3 states".into()));
                }
            }
        }
        EnvKind::Pendulum { torques } => {
            if let Some(e) = get(&global, "pendulum_torques") {
                *torques = typed(&e, "pendulum_torques", source, "an integer")?;
                if *torques < 2 {
                    return Err(err(Some(e.line), Some("pendulum_torques"), "at least 2 torques are needed".into()));
                }
            }
        }
        EnvKind::CartPole => {}
    }

    let mut c = ExperimentConfig::new(env, Vec::new());
    for (key, e) in global.entries.iter() {
        let key = key.as_str();
        let f = || typed::<f64>(e, key, source, "a number");
        let u = || typed::<u64>(e, key, source, "a non-negative integer");
        match key {
            "name" => c.name = e.value.clone(),
            "env" | "chain_n" | "pendulum_torques" => {}
            "agent" => c.agent = e.value.parse().map_err(|m| err(Some(e.line), Some(key), m))?,
            "seeds" => c.seeds = parse_seeds(&e.value).map_err(|m| err(Some(e.line), Some(key), m))?,
            "budget" => c.budget = positive(e, key, u()?)?,
            "gamma" => c.gamma = range(e, key, f()?, 0.0, 1.0, false)?,
            "epsilon_start" => c.epsilon_start = range(e, key, f()?, 0.0, 1.0, false)?,
            "epsilon_end" => c.epsilon_end = range(e, key, f()?, 0.0, 1.0, false)?,
            "threshold" => {
                let t = f()?;
                if !t.is_finite() {
                    return Err(err(Some(e.line), Some(key), "must be finite".into()));
                }
                c.threshold = Some(t);
            }
            "window" => c.window = positive(e, key, u()?)? as usize,
            "tabular.alpha" => c.tabular.alpha = range(e, key, f()?, 0.0, 1.0, true)?,
            "tabular.epsilon_fraction" => c.tabular.epsilon_fraction = range(e, key, f()?, 0.0, 1.0, true)?,
            "dqn.learning_rate" => {
                let v = f()?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(err(Some(e.line), Some(key), format!("must be positive, got {v}")));
                }
                c.dqn.learning_rate = v;
            }
            "dqn.hidden" => {
                c.dqn.hidden = parse_list::<usize>(&e.value)
                    .filter(|v| !v.is_empty() && !v.contains(&0))
                    .ok_or_else(|| err(Some(e.line), Some(key), "expected comma-separated positive widths".into()))?
            }
            "dqn.batch_size" => c.dqn.batch_size = positive(e, key, u()?)? as usize,
            "dqn.replay_capacity" => c.dqn.replay_capacity = positive(e, key, u()?)? as usize,
            "dqn.learning_starts" => c.dqn.learning_starts = u()? as usize,
            "dqn.target_sync" => c.dqn.target_sync = positive(e, key, u()?)?,
            "dqn.train_interval" => c.dqn.train_interval = positive(e, key, u()?)?,
            "dqn.grad_clip" => {
                let v = f()?;
                if !(v > 0.0) {
                    return Err(err(Some(e.line), Some(key), format!("must be positive, got {v}")));
                }
                c.dqn.grad_clip = v;
            }
            "dqn.epsilon_fraction" => c.dqn.epsilon_fraction = range(e, key, f()?, 0.0, 1.0, true)?,
            "dqn.normalize_by_clique" => c.dqn.normalize_by_clique = typed(e, key, source, "true or false")?,
            "dqn.tie_similar_heads" => c.dqn.tie_similar_heads = typed(e, key, source, "true or false")?,
            "sweep.n" => {
                if global.entries.contains_key("sweep.h") {
                    return Err(err(Some(e.line), Some(key), "only one of sweep.n and sweep.h may be set".into()));
                }
                let v = parse_list::<usize>(&e.value)
                    .filter(|v| !v.is_empty() && !v.contains(&0))
                    .ok_or_else(|| err(Some(e.line), Some(key), "expected comma-separated positive integers".into()))?;
                c.sweep = Some(Sweep::N(v));
            }
            "sweep.h" => {
                let v = parse_list::<f64>(&e.value)
                    .filter(|v| !v.is_empty() && v.iter().all(|h| (0.0..=1.0).contains(h)))
                    .ok_or_else(|| err(Some(e.line), Some(key), "expected comma-separated values in [0, 1]".into()))?;
                c.sweep = Some(Sweep::H(v));
            }
            _ => {}
        }
    }

    let arm_from = |scope: &Scope, name: String| -> Result<ArmSpec, ConfigError> {
        let lookup = |key: &str| get(scope, key).or_else(|| get(&global, key));
        let arm: ArmKind = match lookup("arm") {
            Some(e) => e.value.parse().map_err(|m| err(Some(e.line), Some("arm"), m))?,
            None => ArmKind::Unmodified,
        };
        let mut aug = AugmentationSpec::default();
        let kind_entry = if arm == ArmKind::Baseline { get(scope, "augmentation") } else { lookup("augmentation") };
        if let Some(e) = kind_entry {
            aug.kind = e
                .value
                .parse::<AugmentationKind>()
                .map_err(|x| err(Some(e.line), Some("augmentation"), x.to_string()))?;
        }
        if let Some(e) = lookup("n") {
            aug.n = typed(&e, "n", source, "a positive integer")?;
            if aug.n == 0 {
                return Err(err(Some(e.line), Some("n"), "must be positive".into()));
            }
        }
        if let Some(e) = lookup("h") {
            aug.h = range(&e, "h", typed(&e, "h", source, "a number")?, 0.0, 1.0, false)?;
        }
        if let Some(e) = lookup("random_k") {
            aug.random_k =
                e.value.parse::<RandomK>().map_err(|x| err(Some(e.line), Some("random_k"), x.to_string()))?;
        }
        let spec = ArmSpec::new(name, arm, aug);
        let base_actions = env.build().map_err(|x| err(None, Some("env"), x.to_string()))?.spec().base_action_count;
        spec.validate(base_actions).map_err(|m| {
            let line = get(scope, "arm").map(|e| e.line).unwrap_or(scope.header_line);
            err(Some(line).filter(|&l| l > 0), Some("arm"), m)
        })?;
        Ok(spec)
    };

    c.arms = if sections.is_empty() {
        let arm_name = match get(&global, "arm") {
            Some(e) => e.value.parse::<ArmKind>().map_err(|m| err(Some(e.line), Some("arm"), m))?.name().to_string(),
            None => ArmKind::Unmodified.name().to_string(),
        };
        vec![arm_from(&global, arm_name)?]
    } else {
        sections.iter().map(|s| arm_from(s, s.name.clone())).collect::<Result<_, _>>()?
    };

    c.validate().map_err(|e| {
        let message = e.to_string();
        let key = GLOBAL_KEYS.iter().copied().filter(|k| message.contains(k)).max_by_key(|k| k.len());
        let line = key.and_then(|k| get(&global, k)).map(|e| e.line);
        err(line, key, message)
    })?;
    Ok(c)
}

/// Canonical text of a config; [`parse_config_str`] maps it back to an equal config.
pub fn to_config_text(config: &ExperimentConfig) -> String {
    config.canonical_text()
}

fn parse_list<T: FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
        if a >= b {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok((a..b).collect());
    }
    parse_list(s)
        .filter(|v: &Vec<u64>| !v.is_empty())
        .ok_or_else(|| format!("expected comma-separated seeds, found `{s}`"))
}
