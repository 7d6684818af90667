use super::{ActionRealization, EnvError, EnvSpec, Environment, Observation, StepResult};

pub(crate) const DEFAULT_CHAIN_LEN: usize = 5;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// A deterministic chain of `n` states.
///
/// Actions move one state left or right; the left end reflects. Entering the
/// right end pays reward 1 and terminates the episode. Episodes start in the
/// middle state and observations are one-hot over states. A move with
/// magnitude below one half does not change the state.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    spec: EnvSpec,
    n: usize,
    state: usize,
    steps: usize,
    done: bool,
}

impl ChainMdp {
    pub fn new(n: usize) -> Result<Self, EnvError> {
        Self::with_max_steps(n, 10 * n)
    }

    pub fn with_max_steps(n: usize, max_episode_steps: usize) -> Result<Self, EnvError> {
        if n < 3 {
            return Err(EnvError::InvalidParameter(format!("chain needs at least 3 states, got {n}")));
        }
        if max_episode_steps == 0 {
            return Err(EnvError::InvalidParameter("max_episode_steps must be positive".into()));
        }
        Ok(Self {
            spec: EnvSpec { obs_dim: n, base_action_count: 2, reward_threshold: 1.0, max_episode_steps },
            n,
            state: n / 2,
            steps: 0,
            done: true,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start_state(&self) -> usize {
        self.n / 2
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        state == self.n - 1
    }

    /// Deterministic successor and reward for a full-magnitude base action.
    pub fn transition(&self, state: usize, action: usize) -> (usize, f64) {
        let next = if action == RIGHT { state + 1 } else { state.saturating_sub(1) };
        let reward = if self.is_terminal(next) { 1.0 } else { 0.0 };
        (next, reward)
    }

    /// Places the agent in `state` and starts a fresh episode.
    pub fn set_state(&mut self, state: usize) {
        assert!(state < self.n);
        self.state = state;
        self.steps = 0;
        self.done = self.is_terminal(state);
    }

    fn observation(&self) -> Observation {
        let mut v = vec![0.0; self.n];
        v[self.state] = 1.0;
        Observation(v)
    }
}

impl Environment for ChainMdp {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Observation {
        self.state = self.start_state();
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    fn step(&mut self, realization: ActionRealization) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        realization.validate(self.spec.base_action_count)?;

        let reward = if realization.magnitude >= 0.5 {
            let (next, reward) = self.transition(self.state, realization.base_action);
            self.state = next;
            reward
        } else {
            0.0
        };
        self.steps += 1;
        let terminated = self.is_terminal(self.state);
        let truncated = !terminated && self.steps >= self.spec.max_episode_steps;
        self.done = terminated || truncated;
        Ok(StepResult { observation: self.observation(), reward, terminated, truncated })
    }

    fn state_count(&self) -> Option<usize> {
        Some(self.n)
    }

    fn state_key(&self, obs: &Observation) -> Option<usize> {
        let v = obs.as_slice();
        if v.len() != self.n {
            return None;
        }
        let hot: Vec<usize> = v.iter().enumerate().filter(|(_, &x)| x == 1.0).map(|(i, _)| i).collect();
        (hot.len() == 1 && v.iter().filter(|&&x| x != 0.0).count() == 1).then(|| hot[0])
    }
}

/// Exact optimal action values of the chain by value iteration.
///
/// Rows are indexed by state, columns by base action. Terminal-state rows are zero.
pub fn chain_optimal_q(chain: &ChainMdp, gamma: f64) -> Result<Vec<[f64; 2]>, EnvError> {
    const MAX_SWEEPS: usize = 1_000_000;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(EnvError::InvalidParameter(format!("gamma {gamma} outside [0, 1]")));
    }
    let n = chain.len();
    let mut q = vec![[0.0f64; 2]; n];
    for _ in 0..MAX_SWEEPS {
        let value: Vec<f64> =
            q.iter().enumerate().map(|(s, row)| if chain.is_terminal(s) { 0.0 } else { row[0].max(row[1]) }).collect();
        let mut delta = 0.0f64;
        for s in 0..n {
            if chain.is_terminal(s) {
                continue;
            }
            for a in [LEFT, RIGHT] {
                let (next, r) = chain.transition(s, a);
                let bootstrap = if chain.is_terminal(next) { 0.0 } else { gamma * value[next] };
                let updated = r + bootstrap;
                delta = delta.max((updated - q[s][a]).abs());
                q[s][a] = updated;
            }
        }
        if delta < 1e-12 {
            return Ok(q);
        }
    }
    Err(EnvError::NoConvergence(MAX_SWEEPS))
}
