//! Deep Q-learning with experience replay, a periodically synced target
//! network and the similarity-weighted multi-head loss.
//!
//! With `oracle = false` the loss uses the identity matrix, so only the taken
//! action's head is trained. With `oracle = true` every head `b` is regressed
//! toward the sample's target with weight `K(a, b)`.

mod loss;
mod replay;

pub use loss::{compute_targets, weighted_td_loss, weighted_td_loss_with, QBatchTarget};
pub use replay::ReplayBuffer;

use rand::Rng;
use thiserror::Error;

use crate::augmentation::{identity_similarity, AugmentationError, AugmentedEnv, SimilarityMatrix};
use crate::envs::Observation;
use crate::harness::curve::{EpisodeRecord, EpisodeSink, LearningCurve, NullSink};
use crate::nn::{adam_step, AdamState, Mlp, NnError};
use crate::qcore::{epsilon_at, greedy_action, AgentHyperparams, Transition};
use crate::seeding::{stream_rng, Stream};

#[derive(Debug, Error)]
pub enum DqnError {
    #[error("invalid DQN config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] AugmentationError),
    #[error("writing episode record: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct DqnConfig {
    /// `alpha` is the Adam learning rate.
    pub hyperparams: AgentHyperparams,
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Environment steps collected before the first gradient step.
    pub learning_starts: usize,
    pub target_sync_interval: u64,
    /// Environment steps per gradient step.
    pub train_interval: u64,
    pub grad_clip: f64,
    pub oracle: bool,
    /// Divide each sample's weights by the sum of its similarity row.
    pub normalize_by_clique: bool,
    /// For the oracle, start every head of a fully similar group (`K = 1`)
    /// from the same output weights, so the group's values stay equal.
    pub tie_similar_heads: bool,
    pub k: SimilarityMatrix,
}

impl DqnConfig {
    /// Default settings for a run of `budget` environment steps.
    pub fn new(k: SimilarityMatrix, oracle: bool, budget: u64) -> Self {
        Self {
            hyperparams: AgentHyperparams {
                alpha: 1e-3,
                gamma: 0.99,
                epsilon_start: 1.0,
                epsilon_end: 0.05,
                epsilon_decay_steps: (budget / 10).max(1),
            },
            hidden: vec![128, 128],
            batch_size: 64,
            replay_capacity: 50_000,
            learning_starts: 1_000,
            target_sync_interval: 500,
            train_interval: 1,
            grad_clip: 10.0,
            oracle,
            normalize_by_clique: false,
            tie_similar_heads: true,
            k,
        }
    }

    pub fn validate(&self) -> Result<(), DqnError> {
        self.hyperparams.validate().map_err(|e| DqnError::InvalidConfig(e.to_string()))?;
        let positive = [
            ("batch_size", self.batch_size),
            ("replay_capacity", self.replay_capacity),
            ("target_sync_interval", self.target_sync_interval as usize),
            ("train_interval", self.train_interval as usize),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(DqnError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.batch_size > self.replay_capacity {
            return Err(DqnError::InvalidConfig(format!(
                "batch_size {} exceeds replay_capacity {}",
                self.batch_size, self.replay_capacity
            )));
        }
        if self.hidden.contains(&0) {
            return Err(DqnError::InvalidConfig("hidden layer widths must be positive".into()));
        }
        if !(self.grad_clip > 0.0) {
            return Err(DqnError::InvalidConfig(format!("grad_clip must be positive, got {}", self.grad_clip)));
        }
        Ok(())
    }

    /// The matrix actually used by the loss: `k` for the oracle, identity otherwise.
    pub fn effective_k(&self) -> SimilarityMatrix {
        if self.oracle {
            self.k.clone()
        } else {
            identity_similarity(self.k.size())
        }
    }
}

/// Epsilon-greedy action from the online network. The network is only
/// evaluated when the greedy branch is taken.
pub fn agent_act(net: &Mlp, obs: &Observation, epsilon: f64, rng: &mut impl Rng) -> Result<usize, DqnError> {
    if rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..net.output_dim()));
    }
    let q = net.predict(obs.as_slice())?;
    Ok(greedy_action(&q, rng))
}

#[derive(Debug, Clone)]
pub struct DqnOutcome {
    pub curve: LearningCurve,
    pub net: Mlp,
    pub gradient_steps: u64,
}

pub fn train_dqn(env: &mut AugmentedEnv, config: &DqnConfig, budget: u64, seed: u64) -> Result<DqnOutcome, DqnError> {
    train_dqn_with(env, config, budget, seed, &mut NullSink)
}

/// [`train_dqn`] that streams each finished episode to `sink`.
pub fn train_dqn_with(
    env: &mut AugmentedEnv,
    config: &DqnConfig,
    budget: u64,
    seed: u64,
    sink: &mut dyn EpisodeSink,
) -> Result<DqnOutcome, DqnError> {
    config.validate()?;
    let action_count = env.action_count();
    if config.k.size() != action_count {
        return Err(DqnError::InvalidConfig(format!(
            "similarity matrix has size {} for {action_count} actions",
            config.k.size()
        )));
    }
    let k = config.effective_k();
    let hp = &config.hyperparams;

    let mut dims = Vec::with_capacity(config.hidden.len() + 2);
    dims.push(env.spec().obs_dim);
    dims.extend_from_slice(&config.hidden);
    dims.push(action_count);
    let mut online = Mlp::init(&dims, stream_rng(seed, Stream::Init).gen())?;
    if config.oracle && config.tie_similar_heads {
        tie_similar_heads(&mut online, &k);
    }
    let mut target = online.clone_parameters();
    let mut adam = AdamState::new(&online, hp.alpha);

    env.reseed_actions(seed);
    let mut env_rng = stream_rng(seed, Stream::Env);
    let mut explore_rng = stream_rng(seed, Stream::Exploration);
    let mut sample_rng = stream_rng(seed, Stream::Sampling);

    let mut replay: ReplayBuffer<Transition<Observation>> = ReplayBuffer::new(config.replay_capacity);
    let mut curve = LearningCurve::new();
    let mut gradient_steps = 0u64;
    if budget == 0 {
        return Ok(DqnOutcome { curve, net: online, gradient_steps });
    }
    let warmup = config.learning_starts.max(config.batch_size);

    let mut obs = env.reset(env_rng.gen());
    let mut episode = 0u64;
    let mut episode_return = 0.0;
    let mut loss_sum = 0.0;
    let mut loss_count = 0u64;

    for step in 0..budget {
        let epsilon = epsilon_at(hp, step);
        let a = agent_act(&online, &obs, epsilon, &mut explore_rng)?;
        let result = env.step(a)?;
        episode_return += result.reward;
        let done = result.done();
        let next = result.observation;
        replay.push(Transition {
            s: obs.clone(),
            a,
            r: result.reward,
            s_next: next.clone(),
            terminal: result.terminated,
        });

        if replay.len() >= warmup && (step + 1) % config.train_interval == 0 {
            let indices = replay.sample_indices(config.batch_size, &mut sample_rng);
            let batch: Vec<&Transition<Observation>> =
                indices.iter().map(|&i| replay.get(i).expect("sampled index in range")).collect();
            let loss = gradient_step(&mut online, &target, &mut adam, &batch, &k, config)?;
            loss_sum += loss;
            loss_count += 1;
            gradient_steps += 1;
        }
        if (step + 1) % config.target_sync_interval == 0 {
            target.copy_parameters_from(&online);
        }

        if done {
            let record = EpisodeRecord {
                episode,
                steps: step + 1,
                ret: episode_return,
                epsilon,
                loss_mean: (loss_count > 0).then(|| loss_sum / loss_count as f64),
            };
            sink.record(&record)?;
            curve.push(record).expect("steps increase monotonically");
            episode += 1;
            episode_return = 0.0;
            loss_sum = 0.0;
            loss_count = 0;
            obs = env.reset(env_rng.gen());
        } else {
            obs = next;
        }
    }
    Ok(DqnOutcome { curve, net: online, gradient_steps })
}

/// Copies the output row of the lowest-indexed fully similar head into every
/// other head. Heads that share a row and a `K = 1` group receive identical
/// gradients, so they remain equal for the whole run.
pub fn tie_similar_heads(net: &mut Mlp, k: &SimilarityMatrix) {
    let last = net.layers_mut().last_mut().expect("networks have at least one layer");
    for j in 0..k.size() {
        let rep = (0..j).find(|&i| k.get(i, j) == 1.0).unwrap_or(j);
        if rep != j {
            let row = last.weights.row(rep).to_owned();
            last.weights.row_mut(j).assign(&row);
            last.bias[j] = last.bias[rep];
        }
    }
}

/// One clipped Adam step on a sampled batch; returns the batch loss.
fn gradient_step(
    online: &mut Mlp,
    target: &Mlp,
    adam: &mut AdamState,
    batch: &[&Transition<Observation>],
    k: &SimilarityMatrix,
    config: &DqnConfig,
) -> Result<f64, DqnError> {
    let targets = compute_targets(batch, target, config.hyperparams.gamma)?;
    let states = loss::stack(batch.iter().map(|t| &t.s), online.input_dim())?;
    let actions: Vec<usize> = batch.iter().map(|t| t.a).collect();
    let cache = online.forward_batch(states.view())?;
    let (loss, out_grad) = weighted_td_loss_with(cache.output(), &actions, &targets, k, config.normalize_by_clique)?;
    let mut grads = online.backward(&cache, out_grad.view())?;
    grads.clip_norm(config.grad_clip);
    adam_step(online, &grads, adam)?;
    Ok(loss)
}
