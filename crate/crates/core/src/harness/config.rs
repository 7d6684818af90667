//! Experiment description shared by the runner and the config-file front end.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::augmentation::{build_augmentation, AugmentationKind, AugmentationSpec};
use crate::envs::EnvKind;
use crate::seeding::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Tabular,
    Dqn,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Tabular => "tabular",
            AgentKind::Dqn => "dqn",
        }
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tabular" => Ok(AgentKind::Tabular),
            "dqn" => Ok(AgentKind::Dqn),
            _ => Err(format!("unknown agent `{s}` (expected tabular or dqn)")),
        }
    }
}

/// The three experimental arms: original actions, oracle update on augmented
/// actions, and the plain agent on augmented actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmKind {
    Baseline,
    Oracle,
    Unmodified,
}

impl ArmKind {
    pub fn name(self) -> &'static str {
        match self {
            ArmKind::Baseline => "baseline",
            ArmKind::Oracle => "oracle",
            ArmKind::Unmodified => "unmodified",
        }
    }
}

impl fmt::Display for ArmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(ArmKind::Baseline),
            "oracle" => Ok(ArmKind::Oracle),
            "unmodified" => Ok(ArmKind::Unmodified),
            _ => Err(format!("unknown arm `{s}` (expected baseline, oracle or unmodified)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    /// Output directory name; letters, digits, `-` and `_` only.
    pub name: String,
    pub arm: ArmKind,
    pub augmentation: AugmentationSpec,
}

impl ArmSpec {
    pub fn new(name: impl Into<String>, arm: ArmKind, augmentation: AugmentationSpec) -> Self {
        Self { name: name.into(), arm, augmentation }
    }

    /// Checks the arm/augmentation pairing for an environment with `base_actions` actions.
    pub fn validate(&self, base_actions: usize) -> Result<(), String> {
        if !valid_name(&self.name) {
            return Err(format!("arm name `{}` must be non-empty and use only letters, digits, `-` or `_`", self.name));
        }
        self.augmentation.validate().map_err(|e| format!("arm `{}`: {e}", self.name))?;
        match self.arm {
            ArmKind::Baseline if self.augmentation.kind != AugmentationKind::None => Err(format!(
                "arm `{}`: the baseline arm uses the original actions, but augmentation is `{}`",
                self.name, self.augmentation.kind
            )),
            ArmKind::Oracle if self.augmentation.kind != AugmentationKind::None => {
                let (_, k) = build_augmentation(&self.augmentation, base_actions)
                    .map_err(|e| format!("arm `{}`: {e}", self.name))?;
                // An identity matrix is only acceptable when asked for explicitly.
                let explicit_identity = self.augmentation.kind == AugmentationKind::Random
                    && self.augmentation.random_k == crate::augmentation::RandomK::Identity;
                if k.is_identity() && !explicit_identity {
                    Err(format!("arm `{}`: the oracle arm needs a non-identity similarity matrix", self.name))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularSettings {
    pub alpha: f64,
    /// Share of the budget over which epsilon decays.
    pub epsilon_fraction: f64,
}

impl Default for TabularSettings {
    fn default() -> Self {
        Self { alpha: 0.1, epsilon_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnSettings {
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub learning_starts: usize,
    pub target_sync: u64,
    pub train_interval: u64,
    pub grad_clip: f64,
    pub epsilon_fraction: f64,
    pub normalize_by_clique: bool,
    pub tie_similar_heads: bool,
}

impl Default for DqnSettings {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            hidden: vec![128, 128],
            batch_size: 64,
            replay_capacity: 50_000,
            learning_starts: 1_000,
            target_sync: 500,
            train_interval: 1,
            grad_clip: 10.0,
            epsilon_fraction: 0.1,
            normalize_by_clique: false,
            tie_similar_heads: true,
        }
    }
}

/// One parameter swept over a list of values, one experiment per value.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    N(Vec<usize>),
    H(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvKind,
    pub agent: AgentKind,
    pub seeds: Vec<u64>,
    /// Environment steps per run.
    pub budget: u64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Solve threshold for steps-to-threshold; the environment's own when absent.
    pub threshold: Option<f64>,
    pub window: usize,
    pub tabular: TabularSettings,
    pub dqn: DqnSettings,
    pub arms: Vec<ArmSpec>,
    pub sweep: Option<Sweep>,
}

impl ExperimentConfig {
    /// A config with every default applied and a single arm.
    pub fn new(env: EnvKind, arms: Vec<ArmSpec>) -> Self {
        Self {
            name: "experiment".into(),
            env,
            agent: AgentKind::Dqn,
            seeds: (0..10).collect(),
            budget: 50_000,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            threshold: None,
            window: 20,
            tabular: TabularSettings::default(),
            dqn: DqnSettings::default(),
            arms,
            sweep: None,
        }
    }

    pub fn arm(&self, name: &str) -> Option<&ArmSpec> {
        self.arms.iter().find(|a| a.name == name)
    }

    /// The threshold actually used for steps-to-threshold.
    pub fn effective_threshold(&self) -> Result<f64, HarnessError> {
        match self.threshold {
            Some(t) => Ok(t),
            None => {
                let env = self.env.build().map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
                Ok(env.spec().reward_threshold)
            }
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if !valid_name(&self.name) {
            return bad(format!("experiment name `{}` must use only letters, digits, `-` or `_`", self.name));
        }
        let env = self.env.build().map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        if self.agent == AgentKind::Tabular && env.state_count().is_none() {
            return bad(format!("the tabular agent needs enumerable states, which `{}` does not have", self.env));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(s) = self.seeds.iter().find(|&&s| !seen.insert(s)) {
            return bad(format!("seed {s} is listed twice"));
        }
        for stream in Stream::ALL {
            let mut derived = std::collections::HashSet::new();
            if self.seeds.iter().any(|&s| !derived.insert(derive_seed(s, stream))) {
                return bad(format!("two seeds collide on the {stream:?} stream"));
            }
        }
        if self.budget == 0 {
            return bad("budget must be positive".into());
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        for (name, v) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return bad("threshold must be finite".into());
            }
        }
        if !(self.tabular.alpha > 0.0 && self.tabular.alpha <= 1.0) {
            return bad(format!("tabular.alpha must lie in (0, 1], got {}", self.tabular.alpha));
        }
        for (name, v) in [
            ("tabular.epsilon_fraction", self.tabular.epsilon_fraction),
            ("dqn.epsilon_fraction", self.dqn.epsilon_fraction),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        let d = &self.dqn;
        if !(d.learning_rate > 0.0 && d.learning_rate.is_finite()) {
            return bad(format!("dqn.learning_rate must be positive, got {}", d.learning_rate));
        }
        if d.hidden.is_empty() || d.hidden.contains(&0) {
            return bad("dqn.hidden needs at least one positive width".into());
        }
        for (name, v) in [
            ("dqn.batch_size", d.batch_size as u64),
            ("dqn.replay_capacity", d.replay_capacity as u64),
            ("dqn.target_sync", d.target_sync),
            ("dqn.train_interval", d.train_interval),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if d.batch_size > d.replay_capacity {
            return bad(format!("dqn.batch_size {} exceeds dqn.replay_capacity {}", d.batch_size, d.replay_capacity));
        }
        if !(d.grad_clip > 0.0) {
            return bad(format!("dqn.grad_clip must be positive, got {}", d.grad_clip));
        }
        if self.arms.is_empty() {
            return bad("at least one arm is required".into());
        }
        let mut names = std::collections::HashSet::new();
        for arm in &self.arms {
            if !names.insert(arm.name.as_str()) {
                return bad(format!("arm name `{}` is used twice", arm.name));
            }
            arm.validate(env.spec().base_action_count).map_err(HarnessError::InvalidConfig)?;
        }
        if let Some(sweep) = &self.sweep {
            let (uses, empty) = match sweep {
                Sweep::N(v) => (self.arms.iter().any(|a| sweeps_n(a.augmentation.kind)), v.is_empty()),
                Sweep::H(v) => {
                    (self.arms.iter().any(|a| a.augmentation.kind == AugmentationKind::SemiDuplicate), v.is_empty())
                }
            };
            if empty {
                return bad("sweep needs at least one value".into());
            }
            if !uses {
                return bad("the sweep parameter is not used by any arm's augmentation".into());
            }
            for expanded in self.expand()? {
                expanded.validate()?;
            }
        }
        Ok(())
    }

    /// One config per sweep value, named `<name>-n<value>` or `<name>-h<value>`.
    /// Only arms whose augmentation uses the swept parameter are changed.
    /// Without a sweep this is the config itself.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, HarnessError> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![self.clone()]);
        };
        let base = ExperimentConfig { sweep: None, ..self.clone() };
        let out = match sweep {
            Sweep::N(values) => values
                .iter()
                .map(|&n| {
                    let mut c = base.clone();
                    c.name = format!("{}-n{n}", self.name);
                    for arm in c.arms.iter_mut().filter(|a| sweeps_n(a.augmentation.kind)) {
                        arm.augmentation.n = n;
                    }
                    c
                })
                .collect(),
            Sweep::H(values) => values
                .iter()
                .map(|&h| {
                    let mut c = base.clone();
                    c.name = format!("{}-h{}", self.name, format!("{h}").replace('.', "_"));
                    for arm in c.arms.iter_mut().filter(|a| a.augmentation.kind == AugmentationKind::SemiDuplicate) {
                        arm.augmentation.h = h;
                    }
                    c
                })
                .collect(),
        };
        Ok(out)
    }

    /// Canonical `key = value` text of the config; parsing it yields an equal config.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("env", self.env.name().into());
        match self.env {
            EnvKind::Pendulum { torques } => kv("pendulum_torques", torques.to_string()),
            EnvKind::Chain { n } => kv("chain_n", n.to_string()),
            EnvKind::CartPole => {}
        }
        kv("agent", self.agent.name().into());
        kv("seeds", join(&self.seeds));
        kv("budget", self.budget.to_string());
        kv("gamma", self.gamma.to_string());
        kv("epsilon_start", self.epsilon_start.to_string());
        kv("epsilon_end", self.epsilon_end.to_string());
        if let Some(t) = self.threshold {
            kv("threshold", t.to_string());
        }
        kv("window", self.window.to_string());
        kv("tabular.alpha", self.tabular.alpha.to_string());
        kv("tabular.epsilon_fraction", self.tabular.epsilon_fraction.to_string());
        let d = &self.dqn;
        kv("dqn.learning_rate", d.learning_rate.to_string());
        kv("dqn.hidden", join(&d.hidden));
        kv("dqn.batch_size", d.batch_size.to_string());
        kv("dqn.replay_capacity", d.replay_capacity.to_string());
        kv("dqn.learning_starts", d.learning_starts.to_string());
        kv("dqn.target_sync", d.target_sync.to_string());
        kv("dqn.train_interval", d.train_interval.to_string());
        kv("dqn.grad_clip", d.grad_clip.to_string());
        kv("dqn.epsilon_fraction", d.epsilon_fraction.to_string());
        kv("dqn.normalize_by_clique", d.normalize_by_clique.to_string());
        kv("dqn.tie_similar_heads", d.tie_similar_heads.to_string());
        match &self.sweep {
            Some(Sweep::N(v)) => kv("sweep.n", join(v)),
            Some(Sweep::H(v)) => kv("sweep.h", join(v)),
            None => {}
        }
        for arm in &self.arms {
            let a = &arm.augmentation;
            let _ = write!(
                s,
                "\n[{}]\narm = {}\naugmentation = {}\nn = {}\nh = {}\nrandom_k = {}\n",
                arm.name, arm.arm, a.kind, a.n, a.h, a.random_k
            );
        }
        s
    }

    /// Hex SHA-256 of [`canonical_text`](Self::canonical_text).
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    /// Environment name plus its parameters, used to tell experiments apart.
    pub fn env_descriptor(&self) -> String {
        env_descriptor(self.env)
    }
}

pub(crate) fn env_descriptor(env: EnvKind) -> String {
    match env {
        EnvKind::CartPole => "cartpole".into(),
        EnvKind::Pendulum { torques } => format!("pendulum torques={torques}"),
        EnvKind::Chain { n } => format!("chain n={n}"),
    }
}

fn sweeps_n(kind: AugmentationKind) -> bool {
    matches!(kind, AugmentationKind::Duplicate | AugmentationKind::Noop)
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augmentation::RandomK;

    fn three_arms() -> Vec<ArmSpec> {
        vec![
            ArmSpec::new("baseline", ArmKind::Baseline, AugmentationSpec::none()),
            ArmSpec::new("oracle", ArmKind::Oracle, AugmentationSpec::duplicate(5)),
            ArmSpec::new("unmodified", ArmKind::Unmodified, AugmentationSpec::duplicate(5)),
        ]
    }

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::new(EnvKind::CartPole, three_arms()).validate().unwrap();
    }

    #[test]
    fn rejects_bad_arm_pairings() {
        let base_aug = ExperimentConfig::new(
            EnvKind::CartPole,
            vec![ArmSpec::new("b", ArmKind::Baseline, AugmentationSpec::duplicate(5))],
        );
        assert!(base_aug.validate().is_err());
        let identity_oracle = ExperimentConfig::new(
            EnvKind::CartPole,
            vec![ArmSpec::new("o", ArmKind::Oracle, AugmentationSpec::duplicate(1))],
        );
        assert!(identity_oracle.validate().is_err());
        let explicit = ExperimentConfig::new(
            EnvKind::Pendulum { torques: 3 },
            vec![ArmSpec::new("o", ArmKind::Oracle, AugmentationSpec::random(RandomK::Identity))],
        );
        explicit.validate().unwrap();
        let plain_oracle = ExperimentConfig::new(
            EnvKind::CartPole,
            vec![ArmSpec::new("o", ArmKind::Oracle, AugmentationSpec::none())],
        );
        plain_oracle.validate().unwrap();
    }

    #[test]
    fn rejects_tabular_on_continuous_env() {
        let mut c = ExperimentConfig::new(EnvKind::CartPole, three_arms());
        c.agent = AgentKind::Tabular;
        assert!(c.validate().is_err());
        c.env = EnvKind::Chain { n: 8 };
        c.validate().unwrap();
    }

    #[test]
    fn rejects_duplicate_names_and_seeds() {
        let mut c = ExperimentConfig::new(EnvKind::CartPole, three_arms());
        c.arms[1].name = "baseline".into();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(EnvKind::CartPole, three_arms());
        c.seeds = vec![1, 2, 1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn sweep_only_touches_arms_that_use_the_parameter() {
        let mut c = ExperimentConfig::new(EnvKind::Pendulum { torques: 3 }, three_arms());
        c.sweep = Some(Sweep::N(vec![5, 15, 50]));
        c.validate().unwrap();
        let expanded = c.expand().unwrap();
        assert_eq!(expanded.len(), 3);
        assert_eq!(expanded[2].name, "experiment-n50");
        assert_eq!(expanded[2].arms[1].augmentation.n, 50);
        assert_eq!(expanded[2].arms[0].augmentation, AugmentationSpec::none());
        c.sweep = Some(Sweep::H(vec![0.2]));
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::new(EnvKind::CartPole, three_arms());
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.budget += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }
}
