//! Seeded evaluation environments with magnitude-scaled discrete actions.
//!
//! Each environment exposes a small set of base actions. An action is always
//! applied through an [`ActionRealization`], which scales the base action's
//! force or torque by a magnitude in `[0, 1]`; magnitude 0 is a physical no-op.

mod cartpole;
mod chain;
mod pendulum;

pub use cartpole::CartPole;
pub use chain::{chain_optimal_q, ChainMdp};
pub use pendulum::Pendulum;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("step called on a finished episode; call reset first")]
    EpisodeFinished,
    #[error("base action {action} out of range for {count} base actions")]
    InvalidAction { action: usize, count: usize },
    #[error("magnitude {0} outside [0, 1]")]
    InvalidMagnitude(f64),
    #[error("value iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("invalid environment parameter: {0}")]
    InvalidParameter(String),
}

/// An environment observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Observation {
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

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub base_action_count: usize,
    /// Mean return over the evaluation window that counts as solved.
    pub reward_threshold: f64,
    pub max_episode_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// A base action applied at a fraction of its full force or torque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionRealization {
    pub base_action: usize,
    pub magnitude: f64,
}

impl ActionRealization {
    pub fn full(base_action: usize) -> Self {
        Self { base_action, magnitude: 1.0 }
    }

    pub(crate) fn validate(&self, base_action_count: usize) -> Result<(), EnvError> {
        if self.base_action >= base_action_count {
            return Err(EnvError::InvalidAction { action: self.base_action, count: base_action_count });
        }
        if !(0.0..=1.0).contains(&self.magnitude) {
            return Err(EnvError::InvalidMagnitude(self.magnitude));
        }
        Ok(())
    }
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Re-initializes the state from a stream derived only from `seed`.
    fn reset(&mut self, seed: u64) -> Observation;

    fn step(&mut self, realization: ActionRealization) -> Result<StepResult, EnvError>;

    /// Number of enumerable states, for environments usable by the tabular agent.
    fn state_count(&self) -> Option<usize> {
        None
    }

    /// Maps an observation to its state index, when states are enumerable.
    fn state_key(&self, _obs: &Observation) -> Option<usize> {
        None
    }
}

/// Selects and parameterizes one of the built-in environments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvKind {
    CartPole,
    Pendulum { torques: usize },
    Chain { n: usize },
}

impl EnvKind {
    pub fn build(self) -> Result<Box<dyn Environment>, EnvError> {
        Ok(match self {
            EnvKind::CartPole => Box::new(CartPole::new()),
            EnvKind::Pendulum { torques } => Box::new(Pendulum::with_torque_count(torques)?),
            EnvKind::Chain { n } => Box::new(ChainMdp::new(n)?),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::Pendulum { .. } => "pendulum",
            EnvKind::Chain { .. } => "chain",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = EnvError;

    /// Parses the environment name with default parameters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cartpole" => Ok(EnvKind::CartPole),
            "pendulum" => Ok(EnvKind::Pendulum { torques: pendulum::DEFAULT_TORQUE_COUNT }),
            "chain" => Ok(EnvKind::Chain { n: chain::DEFAULT_CHAIN_LEN }),
            other => Err(EnvError::InvalidParameter(format!(
                "unknown environment `{other}` (expected cartpole, pendulum or chain)"
            ))),
        }
    }
}
