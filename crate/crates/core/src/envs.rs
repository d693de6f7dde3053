//! Classic-control environments with deterministic dynamics and seeded resets.
//!
//! Both environments use the constants of the usual classic-control
//! toolkit versions, with two differences on MountainCar: reaching the flag
//! pays `goal_reward` (10 by default) and the episode cap is 200 steps.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::{Error, Result, Rng};

/// Cap on episode length shared by both environments.
pub const MAX_EPISODE_STEPS: usize = 200;

pub mod mountain_car {
    pub const MIN_POSITION: f64 = -1.2;
    pub const MAX_POSITION: f64 = 0.6;
    pub const MAX_SPEED: f64 = 0.07;
    pub const GOAL_POSITION: f64 = 0.5;
    pub const FORCE: f64 = 0.001;
    pub const GRAVITY: f64 = 0.0025;
    pub const RESET_LOW: f64 = -0.6;
    pub const RESET_HIGH: f64 = -0.4;
}

pub mod cartpole {
    pub const GRAVITY: f64 = 9.8;
    pub const CART_MASS: f64 = 1.0;
    pub const POLE_MASS: f64 = 0.1;
    pub const HALF_POLE_LENGTH: f64 = 0.5;
    pub const FORCE: f64 = 10.0;
    pub const TAU: f64 = 0.02;
    pub const X_THRESHOLD: f64 = 2.4;
    pub const THETA_THRESHOLD_DEG: f64 = 12.0;
    /// Observation box used for discretisation.
    pub const X_BOUND: f64 = 4.8;
    pub const THETA_BOUND_DEG: f64 = 24.0;
    pub const RESET_BOUND: f64 = 0.05;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvId {
    MountainCar,
    CartPole,
}

impl EnvId {
    pub fn n_actions(self) -> usize {
        match self {
            EnvId::MountainCar => 3,
            EnvId::CartPole => 2,
        }
    }

    pub fn obs_dim(self) -> usize {
        match self {
            EnvId::MountainCar => 2,
            EnvId::CartPole => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::MountainCar => "mountaincar",
            EnvId::CartPole => "cartpole",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mountaincar" | "mountain-car" | "mountain_car" => Ok(EnvId::MountainCar),
            "cartpole" | "cart-pole" | "cart_pole" => Ok(EnvId::CartPole),
            other => Err(Error::UnknownEnv(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub env: EnvId,
    pub max_episode_steps: usize,
    pub seed: u64,
    /// Reward for the step that reaches the flag (MountainCar only).
    pub goal_reward: f64,
    pub step_reward: f64,
    /// Pole angle failure threshold in radians (CartPole only).
    pub theta_threshold: f64,
}

impl EnvConfig {
    pub fn new(env: EnvId, seed: u64) -> Self {
        let step_reward = match env {
            EnvId::MountainCar => -1.0,
            EnvId::CartPole => 1.0,
        };
        Self {
            env,
            max_episode_steps: MAX_EPISODE_STEPS,
            seed,
            goal_reward: 10.0,
            step_reward,
            theta_threshold: cartpole::THETA_THRESHOLD_DEG.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_episode_steps == 0 {
            return Err(Error::InvalidConfig("max episode length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub observation: Vec<f64>,
}

impl EnvState {
    pub fn new(observation: Vec<f64>) -> Self {
        Self { observation }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: EnvState,
    pub action: usize,
    pub reward: f64,
    pub next_state: EnvState,
    pub done: bool,
    /// 1-based index of this step within its episode.
    pub step_index: usize,
    /// MountainCar flag reached on this step.
    pub reached_goal: bool,
}

/// Draw an initial state from the environment's reset distribution.
pub fn reset_state(config: &EnvConfig, rng: &mut Rng) -> EnvState {
    match config.env {
        EnvId::MountainCar => {
            let u: f64 = rng.gen();
            EnvState::new(vec![mountain_car_reset_position(u), 0.0])
        }
        EnvId::CartPole => {
            let b = cartpole::RESET_BOUND;
            let obs = (0..4).map(|_| -b + 2.0 * b * rng.gen::<f64>()).collect();
            EnvState::new(obs)
        }
    }
}

/// Map a unit draw onto the MountainCar reset interval.
pub fn mountain_car_reset_position(u: f64) -> f64 {
    use mountain_car::{RESET_HIGH, RESET_LOW};
    RESET_LOW + (RESET_HIGH - RESET_LOW) * u
}

/// One application of the MountainCar dynamics. Returns the next
/// observation and whether the flag was reached.
pub fn mountain_car_dynamics(obs: &[f64], action: usize) -> ([f64; 2], bool) {
    use mountain_car::*;
    let (mut position, mut velocity) = (obs[0], obs[1]);
    velocity += (action as f64 - 1.0) * FORCE + (3.0 * position).cos() * (-GRAVITY);
    velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
    position += velocity;
    position = position.clamp(MIN_POSITION, MAX_POSITION);
    // inelastic left wall
    if position == MIN_POSITION && velocity < 0.0 {
        velocity = 0.0;
    }
    ([position, velocity], position >= GOAL_POSITION)
}

/// One Euler step of the cart-pole equations of motion.
pub fn cartpole_dynamics(obs: &[f64], action: usize) -> [f64; 4] {
    use cartpole::*;
    let (x, x_dot, theta, theta_dot) = (obs[0], obs[1], obs[2], obs[3]);
    let force = if action == 1 { FORCE } else { -FORCE };
    let total_mass = CART_MASS + POLE_MASS;
    let pole_mass_length = POLE_MASS * HALF_POLE_LENGTH;
    let (sin, cos) = theta.sin_cos();

    let temp = (force + pole_mass_length * theta_dot * theta_dot * sin) / total_mass;
    let theta_acc = (GRAVITY * sin - cos * temp)
        / (HALF_POLE_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
    let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;

    [
        x + TAU * x_dot,
        x_dot + TAU * x_acc,
        theta + TAU * theta_dot,
        theta_dot + TAU * theta_acc,
    ]
}

/// Compute the transition from `state` under `action` as the `step_index`-th
/// step of an episode. Pure; [`Env`] layers the episode bookkeeping on top.
pub fn step(
    state: &EnvState,
    action: usize,
    step_index: usize,
    config: &EnvConfig,
) -> Result<Transition> {
    let n_actions = config.env.n_actions();
    if action >= n_actions {
        return Err(Error::InvalidAction { action, n_actions });
    }
    if state.observation.len() != config.env.obs_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} observation has {} components, expected {}",
            config.env,
            state.observation.len(),
            config.env.obs_dim()
        )));
    }
    let truncated = step_index >= config.max_episode_steps;
    let (next, reward, terminal, reached_goal) = match config.env {
        EnvId::MountainCar => {
            let (next, goal) = mountain_car_dynamics(&state.observation, action);
            let reward = if goal { config.goal_reward } else { config.step_reward };
            (next.to_vec(), reward, goal, goal)
        }
        EnvId::CartPole => {
            let next = cartpole_dynamics(&state.observation, action);
            let failed = next[0].abs() > cartpole::X_THRESHOLD
                || next[2].abs() > config.theta_threshold;
            (next.to_vec(), config.step_reward, failed, false)
        }
    };
    Ok(Transition {
        state: state.clone(),
        action,
        reward,
        next_state: EnvState::new(next),
        done: terminal || truncated,
        step_index,
        reached_goal,
    })
}

/// Stateful episode runner around [`reset_state`] and [`step`].
#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    rng: Rng,
    state: EnvState,
    steps: usize,
    done: bool,
}

impl Env {
    /// Reset randomness comes from stream 0 of `config.seed`, so two agents
    /// run with the same seed see the same sequence of initial states.
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let rng = crate::seeded_rng(config.seed, 0);
        let state = EnvState::new(vec![0.0; config.env.obs_dim()]);
        Ok(Self {
            config,
            rng,
            state,
            steps: 0,
            // stepping before the first reset is an error
            done: true,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn reset(&mut self) -> EnvState {
        self.state = reset_state(&self.config, &mut self.rng);
        self.steps = 0;
        self.done = false;
        self.state.clone()
    }

    /// Start an episode from an explicit state.
    pub fn reset_to(&mut self, state: EnvState) -> Result<()> {
        if state.observation.len() != self.config.env.obs_dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} components, got {}",
                self.config.env.obs_dim(),
                state.observation.len()
            )));
        }
        self.state = state;
        self.steps = 0;
        self.done = false;
        Ok(())
    }

    pub fn step(&mut self, action: usize) -> Result<Transition> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let transition = step(&self.state, action, self.steps + 1, &self.config)?;
        self.steps += 1;
        self.done = transition.done;
        self.state = transition.next_state.clone();
        Ok(transition)
    }
}
