use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionRealization, EnvError, EnvSpec, Environment, Observation, StepResult};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
// Half the pole length.
const LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const X_THRESHOLD: f64 = 2.4;
const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
const MAX_STEPS: usize = 500;

/// Cart-pole balancing with two base actions: 0 pushes left, 1 pushes right.
#[derive(Debug, Clone)]
pub struct CartPole {
    spec: EnvSpec,
    state: [f64; 4],
    steps: usize,
    done: bool,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec { obs_dim: 4, base_action_count: 2, reward_threshold: 475.0, max_episode_steps: MAX_STEPS },
            state: [0.0; 4],
            steps: 0,
            done: true,
        }
    }

    /// Overwrites the physical state `[x, x_dot, theta, theta_dot]` and starts a fresh episode.
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }

    fn observation(&self) -> Observation {
        Observation(self.state.to_vec())
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in self.state.iter_mut() {
            *v = rng.gen_range(-0.05..=0.05);
        }
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    fn step(&mut self, realization: ActionRealization) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        realization.validate(self.spec.base_action_count)?;

        let full = if realization.base_action == 1 { FORCE_MAG } else { -FORCE_MAG };
        let force = realization.magnitude * full;

        let [x, x_dot, theta, theta_dot] = self.state;
        let (sin_theta, cos_theta) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin_theta) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_theta - cos_theta * temp)
            / (LENGTH * (4.0 / 3.0 - MASS_POLE * cos_theta * cos_theta / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_theta / TOTAL_MASS;

        self.state = [x + TAU * x_dot, x_dot + TAU * x_acc, theta + TAU * theta_dot, theta_dot + TAU * theta_acc];
        self.steps += 1;

        let terminated = self.state[0].abs() > X_THRESHOLD || self.state[2].abs() > THETA_THRESHOLD;
        let truncated = !terminated && self.steps >= self.spec.max_episode_steps;
        self.done = terminated || truncated;

        Ok(StepResult { observation: self.observation(), reward: 1.0, terminated, truncated })
    }
}
