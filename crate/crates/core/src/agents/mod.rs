//! Action selection: the policy-augmented agent and the baselines it is
//! compared against.
//!
//! The policy-augmented agent keeps a tabular Q with visit counts at every
//! step. While `t < τ_q` it periodically completes the normalised table
//! through [`imc::solve`](crate::imc::solve) and, while `t < τ_e`, acts
//! greedily on the completed `Q̂`. From `τ_e` on the inner agent (tabular
//! ε-greedy or DQN) takes over. The inner agent learns from every
//! transition in every phase.

pub mod dqn;
pub mod schedule;
pub mod tabular;

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

pub use dqn::{DqnAgent, MlpConfig};
pub use schedule::{reset_check, EpsilonSchedule, ResetDecision, ScheduleConfig, SolvePeriod};
pub use tabular::{count_bonus_reward, epsilon_greedy_action, CountBonus, TabularAgent};

use crate::discretize::{GridSpec, SideInfo};
use crate::envs::{EnvId, Transition};
use crate::imc::{self, AugmentedQ, FactorPair, ImcConfig, IterationRecord};
use crate::qcore::{QTable, DEFAULT_ALPHA, DEFAULT_GAMMA};
use crate::{Error, Result, Rng};

pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_ACTION_SHIFT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    /// Policy augmentation with a tabular ε-greedy inner agent.
    PaugQ,
    /// Policy augmentation with a DQN inner agent.
    PaugDqn,
    EpsilonGreedy,
    CountBonus,
    Dqn,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::PaugQ,
        AgentKind::PaugDqn,
        AgentKind::EpsilonGreedy,
        AgentKind::CountBonus,
        AgentKind::Dqn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::PaugQ => "paug-q",
            AgentKind::PaugDqn => "paug-dqn",
            AgentKind::EpsilonGreedy => "eps",
            AgentKind::CountBonus => "count",
            AgentKind::Dqn => "dqn",
        }
    }

    pub fn is_augmented(self) -> bool {
        matches!(self, AgentKind::PaugQ | AgentKind::PaugDqn)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .or(match s.as_str() {
                "epsilon-greedy" | "eps-greedy" => Some(AgentKind::EpsilonGreedy),
                "count-bonus" => Some(AgentKind::CountBonus),
                _ => None,
            })
            .ok_or(Error::UnknownAgent(s))
    }
}

/// Everything needed to build one agent for one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub beta: f64,
    pub schedule: ScheduleConfig,
    pub imc: ImcConfig,
    pub grid: GridSpec,
    /// Offset ε in the MountainCar action features `[−10+ε, ε, 10+ε]`.
    pub action_shift: f64,
    pub dqn: MlpConfig,
}

impl AgentConfig {
    pub fn new(kind: AgentKind, env: EnvId) -> Self {
        Self {
            kind,
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
            epsilon: EpsilonSchedule::default(),
            beta: DEFAULT_BETA,
            schedule: ScheduleConfig::for_env(env),
            imc: ImcConfig::default(),
            grid: GridSpec::for_env(env),
            action_shift: DEFAULT_ACTION_SHIFT,
            dqn: MlpConfig::for_env(env),
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, env: EnvId) -> Result<()> {
        self.epsilon.validate()?;
        if self.grid.dim() != env.obs_dim() {
            return Err(Error::InvalidConfig(format!(
                "grid has {} dimensions but {env} observations have {}",
                self.grid.dim(),
                env.obs_dim()
            )));
        }
        if self.kind.is_augmented() {
            self.schedule.validate()?;
            self.imc.validate()?;
        }
        if matches!(self.kind, AgentKind::Dqn | AgentKind::PaugDqn) {
            self.dqn.validate()?;
            if self.dqn.input != env.obs_dim() || self.dqn.output != env.n_actions() {
                return Err(Error::InvalidConfig(format!(
                    "network is {}→{} but {env} needs {}→{}",
                    self.dqn.input,
                    self.dqn.output,
                    env.obs_dim(),
                    env.n_actions()
                )));
            }
        }
        if self.kind == AgentKind::CountBonus && !(self.beta >= 0.0) {
            return Err(Error::InvalidConfig(format!("bonus scale β = {} must be ≥ 0", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// `t < τ_e` for an augmented agent.
    Augmentation,
    /// The inner or baseline agent acts.
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSource {
    /// Argmax of the completed row of `Q̂`.
    Augmented,
    /// Uniform action because no solve has produced `Q̂` yet.
    RandomFallback,
    /// The single uniform action taken right after a reset.
    ForcedRandom,
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub action: usize,
    pub phase: Phase,
    pub source: ActionSource,
}

/// One line of the per-step provenance log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepProvenance {
    pub step: usize,
    pub phase: Phase,
    pub source: ActionSource,
    pub had_q_hat: bool,
    pub solver_invoked: bool,
}

/// Outcome of one completion solve during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRecord {
    pub step: usize,
    pub observed: usize,
    pub iterations: usize,
    pub initial_cost: f64,
    pub cost: f64,
    pub converged: bool,
    /// Solver error message; the previous `Q̂` was kept.
    pub failure: Option<String>,
    pub trace: Vec<IterationRecord>,
}

/// Argmax over row `state` of `q_hat`, or a uniform action if there is no
/// completion yet.
pub fn select_augmented(
    q_hat: Option<&AugmentedQ>,
    state: usize,
    n_actions: usize,
    rng: &mut Rng,
) -> Result<(usize, ActionSource)> {
    match q_hat {
        Some(q) => {
            if state >= q.q_hat.nrows() {
                return Err(Error::IndexOutOfRange {
                    what: "state",
                    index: state,
                    bound: q.q_hat.nrows(),
                });
            }
            Ok((q.argmax(state), ActionSource::Augmented))
        }
        None => Ok((rng.gen_range(0..n_actions), ActionSource::RandomFallback)),
    }
}

#[derive(Debug, Clone)]
enum InnerAgent {
    Tabular(EpsilonSchedule),
    Dqn(Box<DqnAgent>),
}

/// The policy-augmented agent.
#[derive(Debug, Clone)]
pub struct Augmented {
    schedule: ScheduleConfig,
    imc: ImcConfig,
    side: SideInfo,
    table: QTable,
    inner: InnerAgent,
    factors: Option<FactorPair>,
    q_hat: Option<AugmentedQ>,
    force_random: bool,
    reset_checked: bool,
    resets: Vec<usize>,
}

impl Augmented {
    pub fn schedule(&self) -> &ScheduleConfig {
        &self.schedule
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn q_hat(&self) -> Option<&AugmentedQ> {
        self.q_hat.as_ref()
    }

    pub fn factors(&self) -> Option<&FactorPair> {
        self.factors.as_ref()
    }

    pub fn side_info(&self) -> &SideInfo {
        &self.side
    }

    fn solve(&mut self, step: usize, rng: &mut Rng) -> SolveRecord {
        let normalized = self.table.normalize();
        let observed = self.table.observed_count();
        let obs = normalized.into_observed();
        match imc::solve(&obs, (&self.side).into(), self.factors.as_ref(), &self.imc, rng) {
            Ok(sol) => {
                let record = SolveRecord {
                    step,
                    observed,
                    iterations: sol.augmented.iterations,
                    initial_cost: sol.initial_cost,
                    cost: sol.augmented.cost,
                    converged: sol.augmented.converged,
                    failure: None,
                    trace: sol.trace,
                };
                self.factors = Some(sol.factors);
                self.q_hat = Some(sol.augmented);
                record
            }
            Err(e) => {
                log::warn!("completion at step {step} failed, keeping previous Q̂: {e}");
                SolveRecord {
                    step,
                    observed,
                    iterations: 0,
                    initial_cost: f64::NAN,
                    cost: f64::NAN,
                    converged: false,
                    failure: Some(e.to_string()),
                    trace: Vec::new(),
                }
            }
        }
    }

    fn reset(&mut self, episode: usize) {
        self.table.reset();
        self.factors = None;
        self.q_hat = None;
        self.force_random = true;
        self.resets.push(episode);
    }
}

#[derive(Debug, Clone)]
enum Policy {
    Tabular(TabularAgent),
    Dqn(Box<DqnAgent>),
    Augmented(Box<Augmented>),
}

/// A runnable agent with its own step counter and random stream.
#[derive(Debug, Clone)]
pub struct Agent {
    kind: AgentKind,
    n_actions: usize,
    t: usize,
    rng: Rng,
    policy: Policy,
}

/// What [`Agent::observe`] did besides learning.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObserveOutcome {
    pub solve: Option<SolveRecord>,
    pub dqn_loss: Option<f64>,
}

impl Agent {
    /// Builds an agent whose randomness is stream 1 of `seed`; the
    /// environment uses stream 0.
    pub fn new(env: EnvId, config: &AgentConfig, seed: u64) -> Result<Self> {
        Self::with_rng(env, config, crate::seeded_rng(seed, 1))
    }

    pub fn with_rng(env: EnvId, config: &AgentConfig, mut rng: Rng) -> Result<Self> {
        config.validate(env)?;
        let n_states = config.grid.n_states();
        let n_actions = env.n_actions();
        let table = || QTable::new(n_states, n_actions, config.alpha, config.gamma);
        let policy = match config.kind {
            AgentKind::EpsilonGreedy => {
                Policy::Tabular(TabularAgent::new(table()?, config.epsilon, None)?)
            }
            AgentKind::CountBonus => Policy::Tabular(TabularAgent::new(
                table()?,
                config.epsilon,
                Some(CountBonus::new(n_states, config.beta)?),
            )?),
            AgentKind::Dqn => Policy::Dqn(Box::new(DqnAgent::new(config.dqn.clone(), &mut rng)?)),
            AgentKind::PaugQ | AgentKind::PaugDqn => {
                let side = SideInfo::for_env(env, &config.grid, config.action_shift)?;
                let inner = if config.kind == AgentKind::PaugDqn {
                    InnerAgent::Dqn(Box::new(DqnAgent::new(config.dqn.clone(), &mut rng)?))
                } else {
                    InnerAgent::Tabular(config.epsilon)
                };
                Policy::Augmented(Box::new(Augmented {
                    schedule: config.schedule.clone(),
                    imc: config.imc.clone(),
                    side,
                    table: table()?,
                    inner,
                    factors: None,
                    q_hat: None,
                    force_random: false,
                    reset_checked: false,
                    resets: Vec::new(),
                }))
            }
        };
        Ok(Self { kind: config.kind, n_actions, t: 0, rng, policy })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    /// Global step counter: the number of transitions observed so far.
    pub fn steps(&self) -> usize {
        self.t
    }

    pub fn augmented(&self) -> Option<&Augmented> {
        match &self.policy {
            Policy::Augmented(a) => Some(a),
            _ => None,
        }
    }

    /// Tabular action values, when the agent keeps them.
    pub fn table(&self) -> Option<&QTable> {
        match &self.policy {
            Policy::Tabular(a) => Some(a.table()),
            Policy::Augmented(a) => Some(&a.table),
            Policy::Dqn(_) => None,
        }
    }

    /// Episodes after which the run was reset.
    pub fn resets(&self) -> &[usize] {
        match &self.policy {
            Policy::Augmented(a) => &a.resets,
            _ => &[],
        }
    }

    /// Choose the action for discretised state `state` with raw
    /// observation `observation` at the current step.
    pub fn act(&mut self, observation: &[f64], state: usize) -> Result<Decision> {
        let t = self.t;
        let n_actions = self.n_actions;
        let inner = |action| Decision { action, phase: Phase::Inner, source: ActionSource::Inner };
        match &mut self.policy {
            Policy::Tabular(a) => Ok(inner(a.act(t, state, &mut self.rng)?)),
            Policy::Dqn(d) => Ok(inner(d.act(t, observation, &mut self.rng)?)),
            Policy::Augmented(a) => {
                if state >= a.table.n_states() {
                    return Err(Error::IndexOutOfRange {
                        what: "state",
                        index: state,
                        bound: a.table.n_states(),
                    });
                }
                let phase =
                    if t < a.schedule.tau_e { Phase::Augmentation } else { Phase::Inner };
                if a.force_random {
                    a.force_random = false;
                    let action = self.rng.gen_range(0..n_actions);
                    return Ok(Decision { action, phase, source: ActionSource::ForcedRandom });
                }
                if phase == Phase::Augmentation {
                    let (action, source) =
                        select_augmented(a.q_hat.as_ref(), state, n_actions, &mut self.rng)?;
                    return Ok(Decision { action, phase, source });
                }
                let action = match &a.inner {
                    InnerAgent::Tabular(eps) => {
                        epsilon_greedy_action(&a.table.row(state), eps.value(t), &mut self.rng)
                    }
                    InnerAgent::Dqn(d) => d.act(t, observation, &mut self.rng)?,
                };
                Ok(inner(action))
            }
        }
    }

    /// Learn from the transition just taken and advance the step counter.
    pub fn observe(
        &mut self,
        transition: &Transition,
        state: usize,
        next_state: usize,
    ) -> Result<ObserveOutcome> {
        let t = self.t;
        let mut out = ObserveOutcome::default();
        match &mut self.policy {
            Policy::Tabular(a) => a.learn(transition, state, next_state)?,
            Policy::Dqn(d) => out.dqn_loss = d.learn(transition, &mut self.rng)?,
            Policy::Augmented(a) => {
                a.table.update(
                    state,
                    transition.action,
                    transition.reward,
                    next_state,
                    transition.done,
                )?;
                if let InnerAgent::Dqn(d) = &mut a.inner {
                    out.dqn_loss = d.learn(transition, &mut self.rng)?;
                }
                if t < a.schedule.tau_q && a.schedule.solve_period.is_due(t, transition.done) {
                    out.solve = Some(a.solve(t, &mut self.rng));
                }
            }
        }
        self.t += 1;
        Ok(out)
    }

    /// Called after each completed episode with all returns so far. Applies
    /// the one-time early reset and reports whether it fired.
    pub fn end_episode(&mut self, episode_returns: &[f64]) -> bool {
        let Policy::Augmented(a) = &mut self.policy else {
            return false;
        };
        if a.reset_checked || episode_returns.len() < a.schedule.reset_window {
            return false;
        }
        a.reset_checked = true;
        if reset_check(episode_returns, &a.schedule) == ResetDecision::Reset {
            a.reset(episode_returns.len() - 1);
            return true;
        }
        false
    }
}
