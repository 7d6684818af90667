use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionRealization, EnvError, EnvSpec, Environment, Observation, StepResult};

pub(crate) const DEFAULT_TORQUE_COUNT: usize = 3;

const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const DT: f64 = 0.05;
const MAX_TORQUE: f64 = 2.0;
const MAX_SPEED: f64 = 8.0;
const MAX_STEPS: usize = 200;

/// Maps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Torque-limited pendulum swing-up with evenly spaced discrete torques.
///
/// `theta = 0` is upright. Observations are `[cos theta, sin theta, theta_dot]`.
#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    torques: Vec<f64>,
    theta: f64,
    theta_dot: f64,
    steps: usize,
    done: bool,
}

impl Pendulum {
    pub fn new() -> Self {
        Self::with_torque_count(DEFAULT_TORQUE_COUNT).expect("default torque count is valid")
    }

    /// `count` torques evenly spaced over `[-2, 2]`.
    pub fn with_torque_count(count: usize) -> Result<Self, EnvError> {
        if count < 2 {
            return Err(EnvError::InvalidParameter(format!("pendulum needs at least 2 torques, got {count}")));
        }
        let torques = (0..count).map(|i| -MAX_TORQUE + 2.0 * MAX_TORQUE * i as f64 / (count - 1) as f64).collect();
        Ok(Self {
            spec: EnvSpec {
                obs_dim: 3,
                base_action_count: count,
                reward_threshold: -200.0,
                max_episode_steps: MAX_STEPS,
            },
            torques,
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
            done: true,
        })
    }

    pub fn torques(&self) -> &[f64] {
        &self.torques
    }

    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.steps = 0;
        self.done = false;
    }

    pub fn state(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    fn observation(&self) -> Observation {
        let (s, c) = self.theta.sin_cos();
        Observation(vec![c, s, self.theta_dot])
    }
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.theta = rng.gen_range(-PI..=PI);
        self.theta_dot = rng.gen_range(-1.0..=1.0);
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    fn step(&mut self, realization: ActionRealization) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        realization.validate(self.spec.base_action_count)?;

        let u = (realization.magnitude * self.torques[realization.base_action]).clamp(-MAX_TORQUE, MAX_TORQUE);
        let th = normalize_angle(self.theta);
        let cost = th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * u * u;

        let acc = 3.0 * GRAVITY / (2.0 * LENGTH) * self.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
        let new_theta_dot = (self.theta_dot + acc * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += new_theta_dot * DT;
        self.theta_dot = new_theta_dot;
        self.steps += 1;

        let truncated = self.steps >= self.spec.max_episode_steps;
        self.done = truncated;
        Ok(StepResult { observation: self.observation(), reward: -cost, terminated: false, truncated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_torques() {
        assert_eq!(Pendulum::new().torques(), &[-2.0, 0.0, 2.0]);
        assert!(Pendulum::with_torque_count(1).is_err());
    }

    #[test]
    fn upright_equilibrium_holds() {
        let mut env = Pendulum::new();
        env.set_state(0.0, 0.0);
        let r = env.step(ActionRealization::full(1)).unwrap();
        assert_eq!(env.state(), (0.0, 0.0));
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.observation.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn hanging_half_torque_single_tick() {
        // Hand evaluation: u = 0.5 * 2 = 1; acc = 15 sin(pi) + 3 * 1;
        // theta_dot' = 0.05 * acc; theta' = pi + 0.05 * theta_dot'.
        let mut env = Pendulum::new();
        env.set_state(PI, 0.0);
        let r = env.step(ActionRealization { base_action: 2, magnitude: 0.5 }).unwrap();
        let acc = 15.0 * PI.sin() + 3.0;
        let expected_dot = 0.05 * acc;
        let (theta, theta_dot) = env.state();
        assert!((theta_dot - expected_dot).abs() < 1e-15);
        assert!((theta_dot - 0.15).abs() < 1e-12);
        assert!((theta - (PI + 0.05 * expected_dot)).abs() < 1e-15);
        // cost = pi^2 + 0 + 0.001 * 1
        assert!((r.reward + (PI * PI + 0.001)).abs() < 1e-12);
    }

    #[test]
    fn speed_is_clipped_and_episode_truncates() {
        let mut env = Pendulum::new();
        env.set_state(1.0, 7.9);
        let mut r = env.step(ActionRealization::full(2)).unwrap();
        assert_eq!(env.state().1, 8.0);
        for _ in 1..MAX_STEPS {
            assert!(!r.truncated);
            r = env.step(ActionRealization::full(2)).unwrap();
        }
        assert!(r.truncated && !r.terminated);
        assert_eq!(env.step(ActionRealization::full(0)), Err(EnvError::EpisodeFinished));
    }

    #[test]
    fn normalize_angle_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.5 - 4.0 * PI) - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn reward_nonpositive_and_zero_only_at_rest(theta in -20.0f64..20.0, theta_dot in -8.0f64..8.0, a in 0usize..3, m in 0.0f64..=1.0) {
            let mut env = Pendulum::new();
            env.set_state(theta, theta_dot);
            let r = env.step(ActionRealization { base_action: a, magnitude: m }).unwrap();
            prop_assert!(r.reward <= 0.0);
            let u = m * env.torques()[a];
            if r.reward == 0.0 {
                prop_assert!(normalize_angle(theta) == 0.0 && theta_dot == 0.0 && u == 0.0);
            }
        }
    }
}
