//! Tabular Q-learning with the similarity-weighted oracle update, plus the
//! exploration machinery shared with the deep agent.
//!
//! For a transition `(s, a, r, s')` the oracle moves every action value of
//! state `s` toward the same one-step target, scaled by how similar each
//! action is to the one taken:
//!
//! ```text
//! Q(s, b) <- Q(s, b) + alpha * K(a, b) * (r + gamma * max_c Q(s', c) - Q(s, b))   for all b
//! ```
//!
//! All updates read the pre-update table, and terminal transitions bootstrap with 0.

use rand::Rng;
use thiserror::Error;

use crate::augmentation::{AugmentationError, AugmentedEnv, SimilarityMatrix};
use crate::envs::Observation;
use crate::harness::curve::{EpisodeRecord, EpisodeSink, LearningCurve, NullSink};
use crate::seeding::{stream_rng, Stream};

#[derive(Debug, Error)]
pub enum QError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("environment observations are not enumerable states")]
    NotEnumerable,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error(transparent)]
    Env(#[from] AugmentationError),
    #[error("writing episode record: {0}")]
    Io(#[from] std::io::Error),
}

/// Action values indexed by `(state, action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularQ {
    state_count: usize,
    action_count: usize,
    values: Vec<f64>,
}

impl TabularQ {
    pub fn zeros(state_count: usize, action_count: usize) -> Self {
        assert!(state_count > 0 && action_count > 0, "table dimensions must be positive");
        Self { state_count, action_count, values: vec![0.0; state_count * action_count] }
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.action_count + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.action_count + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.action_count..(s + 1) * self.action_count]
    }

    fn row_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.values[s * self.action_count..(s + 1) * self.action_count]
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentHyperparams {
    /// Step size: the tabular learning rate, or the optimizer learning rate for the deep agent.
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
}

impl AgentHyperparams {
    /// Tabular defaults with the exploration rate annealed over half of `budget`.
    pub fn tabular_default(budget: u64) -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: (budget / 2).max(1),
        }
    }

    pub fn validate(&self) -> Result<(), QError> {
        let bad = |msg: String| Err(QError::InvalidHyperparams(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        for (name, e) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("{name} must lie in [0, 1], got {e}"));
            }
        }
        if self.epsilon_start < self.epsilon_end {
            return bad("epsilon_start must be at least epsilon_end".into());
        }
        if self.epsilon_decay_steps == 0 {
            return bad("epsilon_decay_steps must be positive".into());
        }
        Ok(())
    }
}

/// One experience tuple. `S` is a state index for tabular agents and a full observation for deep agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub s: S,
    pub a: usize,
    pub r: f64,
    pub s_next: S,
    pub terminal: bool,
}

/// Applies the similarity-weighted update for one transition in place.
pub fn oracle_q_update(
    q: &mut TabularQ,
    t: &Transition<usize>,
    k: &SimilarityMatrix,
    hp: &AgentHyperparams,
) -> Result<(), QError> {
    if k.size() != q.action_count() {
        return Err(QError::DimensionMismatch(format!(
            "similarity matrix has size {} but the table has {} actions",
            k.size(),
            q.action_count()
        )));
    }
    if t.a >= q.action_count() || t.s >= q.state_count() || t.s_next >= q.state_count() {
        return Err(QError::DimensionMismatch(format!(
            "transition ({}, {}, -> {}) outside table of {} states x {} actions",
            t.s,
            t.a,
            t.s_next,
            q.state_count(),
            q.action_count()
        )));
    }
    let target = if t.terminal { t.r } else { t.r + hp.gamma * q.max_value(t.s_next) };
    let weights = k.row(t.a);
    for (value, &w) in q.row_mut(t.s).iter_mut().zip(weights) {
        if w != 0.0 {
            *value += hp.alpha * w * (target - *value);
        }
    }
    Ok(())
}

/// Index of the largest value; exact ties are broken uniformly with `rng`.
pub fn greedy_action(values: &[f64], rng: &mut impl Rng) -> usize {
    assert!(!values.is_empty(), "greedy_action needs at least one value");
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v == best).count();
    if ties <= 1 {
        return values.iter().position(|&v| v == best).unwrap_or(0);
    }
    let pick = rng.gen_range(0..ties);
    values.iter().enumerate().filter(|(_, &v)| v == best).nth(pick).map(|(i, _)| i).expect("pick < ties")
}

/// Linearly annealed exploration rate, held at `epsilon_end` after the decay period.
pub fn epsilon_at(hp: &AgentHyperparams, step: u64) -> f64 {
    if step >= hp.epsilon_decay_steps {
        return hp.epsilon_end;
    }
    let frac = step as f64 / hp.epsilon_decay_steps as f64;
    hp.epsilon_start + frac * (hp.epsilon_end - hp.epsilon_start)
}

pub(crate) fn epsilon_greedy(values: &[f64], epsilon: f64, rng: &mut impl Rng) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..values.len())
    } else {
        greedy_action(values, rng)
    }
}

#[derive(Debug, Clone)]
pub struct TabularOutcome {
    pub curve: LearningCurve,
    pub q: TabularQ,
}

/// Runs epsilon-greedy episodes for `budget` steps, applying the oracle update on every transition.
pub fn train_tabular(
    env: &mut AugmentedEnv,
    k: &SimilarityMatrix,
    hp: &AgentHyperparams,
    budget: u64,
    seed: u64,
) -> Result<TabularOutcome, QError> {
    train_tabular_with(env, k, hp, budget, seed, &mut NullSink, &mut |_| {})
}

/// [`train_tabular`] that streams episodes to `sink` and shows the table to `inspect` after every update.
pub fn train_tabular_with(
    env: &mut AugmentedEnv,
    k: &SimilarityMatrix,
    hp: &AgentHyperparams,
    budget: u64,
    seed: u64,
    sink: &mut dyn EpisodeSink,
    inspect: &mut dyn FnMut(&TabularQ),
) -> Result<TabularOutcome, QError> {
    hp.validate()?;
    let state_count = env.base().state_count().ok_or(QError::NotEnumerable)?;
    let action_count = env.action_count();
    if k.size() != action_count {
        return Err(QError::DimensionMismatch(format!(
            "similarity matrix has size {} for {action_count} actions",
            k.size()
        )));
    }
    env.reseed_actions(seed);
    let mut env_rng = stream_rng(seed, Stream::Env);
    let mut explore_rng = stream_rng(seed, Stream::Exploration);

    let mut q = TabularQ::zeros(state_count, action_count);
    let mut curve = LearningCurve::new();
    if budget == 0 {
        return Ok(TabularOutcome { curve, q });
    }

    let first = env.reset(env_rng.gen());
    let mut s = state_key(env, &first)?;
    let mut episode_return = 0.0;
    let mut episode = 0u64;

    for step in 0..budget {
        let epsilon = epsilon_at(hp, step);
        let a = epsilon_greedy(q.row(s), epsilon, &mut explore_rng);
        let result = env.step(a)?;
        let s_next = state_key(env, &result.observation)?;
        let t = Transition { s, a, r: result.reward, s_next, terminal: result.terminated };
        oracle_q_update(&mut q, &t, k, hp)?;
        inspect(&q);
        episode_return += result.reward;

        if result.done() {
            let record = EpisodeRecord { episode, steps: step + 1, ret: episode_return, epsilon, loss_mean: None };
            sink.record(&record)?;
            curve.push(record).expect("steps increase monotonically");
            episode += 1;
            episode_return = 0.0;
            let obs = env.reset(env_rng.gen());
            s = state_key(env, &obs)?;
        } else {
            s = s_next;
        }
    }
    Ok(TabularOutcome { curve, q })
}

fn state_key(env: &AugmentedEnv, obs: &Observation) -> Result<usize, QError> {
    env.base().state_key(obs).ok_or(QError::NotEnumerable)
}
