//! Step horizons, solve cadence and the early-reset heuristic of the
//! policy-augmented agent.

use std::fmt;
use std::str::FromStr;

use crate::envs::EnvId;
use crate::{Error, Result};

pub const DEFAULT_TOTAL_STEPS: usize = 2_500_000;
pub const DEFAULT_TAU_Q: usize = 10_000;
pub const DEFAULT_TAU_E: usize = 20_000;
pub const DEFAULT_RESET_WINDOW: usize = 5;

/// When the completion is re-solved while `t < τ_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePeriod {
    /// After the last step of every episode.
    Episode,
    /// After step `t` whenever `(t + 1) % k == 0`. `Steps(1)` solves after
    /// every step.
    Steps(usize),
}

impl SolvePeriod {
    pub fn is_due(self, t: usize, episode_done: bool) -> bool {
        match self {
            SolvePeriod::Episode => episode_done,
            SolvePeriod::Steps(k) => (t + 1).is_multiple_of(k),
        }
    }
}

impl fmt::Display for SolvePeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolvePeriod::Episode => f.write_str("episode"),
            SolvePeriod::Steps(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for SolvePeriod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("episode") {
            return Ok(SolvePeriod::Episode);
        }
        match s.parse::<usize>() {
            Ok(0) => Err(Error::InvalidConfig("solve period must be positive".into())),
            Ok(k) => Ok(SolvePeriod::Steps(k)),
            Err(_) => Err(Error::Parse(format!(
                "solve period `{s}` is neither a step count nor `episode`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    /// τ: total step budget of a run.
    pub total_steps: usize,
    /// τ_e: actions come from Q̂ while `t < τ_e`.
    pub tau_e: usize,
    /// τ_q: Q̃ is completed while `t < τ_q`.
    pub tau_q: usize,
    pub solve_period: SolvePeriod,
    pub reset_threshold: f64,
    pub reset_window: usize,
}

impl ScheduleConfig {
    pub fn for_env(env: EnvId) -> Self {
        Self {
            total_steps: DEFAULT_TOTAL_STEPS,
            tau_e: DEFAULT_TAU_E,
            tau_q: DEFAULT_TAU_Q,
            solve_period: SolvePeriod::Episode,
            reset_threshold: default_reset_threshold(env),
            reset_window: DEFAULT_RESET_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_q < self.tau_e && self.tau_e < self.total_steps) {
            return Err(Error::InvalidConfig(format!(
                "need τ_q < τ_e < τ, got τ_q = {}, τ_e = {}, τ = {}",
                self.tau_q, self.tau_e, self.total_steps
            )));
        }
        if self.solve_period == SolvePeriod::Steps(0) {
            return Err(Error::InvalidConfig("solve period must be positive".into()));
        }
        if self.reset_window == 0 {
            return Err(Error::InvalidConfig("reset window must be positive".into()));
        }
        if self.reset_threshold.is_nan() {
            return Err(Error::InvalidConfig("reset threshold is NaN".into()));
        }
        Ok(())
    }
}

/// −199.5 on MountainCar (every episode timed out), 15 on CartPole.
pub fn default_reset_threshold(env: EnvId) -> f64 {
    match env {
        EnvId::MountainCar => -199.5,
        EnvId::CartPole => 15.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetDecision {
    Keep,
    Reset,
}

/// Reset when the mean return of the first `reset_window` episodes is below
/// the threshold. Keeps until that many episodes are complete.
pub fn reset_check(episode_returns: &[f64], schedule: &ScheduleConfig) -> ResetDecision {
    let w = schedule.reset_window;
    if w == 0 || episode_returns.len() < w {
        return ResetDecision::Keep;
    }
    let mean = episode_returns[..w].iter().sum::<f64>() / w as f64;
    if mean < schedule.reset_threshold {
        ResetDecision::Reset
    } else {
        ResetDecision::Keep
    }
}

/// Linear decay from `start` to `end` over `decay_steps`, then flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.05, decay_steps: 50_000 }
    }
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        Self { start: eps, end: eps, decay_steps: 0 }
    }

    pub fn value(&self, t: usize) -> f64 {
        if self.decay_steps == 0 || t >= self.decay_steps {
            return self.end;
        }
        self.start + (self.end - self.start) * (t as f64 / self.decay_steps as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |e: f64| (0.0..=1.0).contains(&e);
        if !(ok(self.start) && ok(self.end)) {
            return Err(Error::InvalidConfig(format!(
                "exploration rates {} → {} must lie in [0, 1]",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc() -> ScheduleConfig {
        ScheduleConfig::for_env(EnvId::MountainCar)
    }

    #[test]
    fn defaults_are_ordered() {
        for env in [EnvId::MountainCar, EnvId::CartPole] {
            ScheduleConfig::for_env(env).validate().unwrap();
        }
        let bad = ScheduleConfig { tau_q: 30_000, ..mc() };
        assert!(bad.validate().is_err());
        let bad = ScheduleConfig { tau_e: DEFAULT_TOTAL_STEPS, ..mc() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn reset_on_all_timeouts() {
        assert_eq!(reset_check(&[-200.0; 5], &mc()), ResetDecision::Reset);
    }

    #[test]
    fn keep_when_flag_reached() {
        // one flag episode of k steps pays −(k − 1) + 10
        for k in 1..=200 {
            let flag = -(k as f64 - 1.0) + 10.0;
            let returns = [-200.0, -200.0, flag, -200.0, -200.0];
            assert_eq!(reset_check(&returns, &mc()), ResetDecision::Keep, "k = {k}");
        }
    }

    #[test]
    fn keep_before_window_complete() {
        assert_eq!(reset_check(&[-200.0; 4], &mc()), ResetDecision::Keep);
        assert_eq!(reset_check(&[], &mc()), ResetDecision::Keep);
    }

    #[test]
    fn only_the_first_window_counts() {
        let mut returns = vec![-200.0; 5];
        returns.extend([100.0; 20]);
        assert_eq!(reset_check(&returns, &mc()), ResetDecision::Reset);
    }

    #[test]
    fn solve_period_due() {
        let p = SolvePeriod::Steps(100);
        assert_eq!((0..300).filter(|&t| p.is_due(t, false)).count(), 3);
        assert!(SolvePeriod::Episode.is_due(7, true));
        assert!(!SolvePeriod::Episode.is_due(99, false));
    }

    #[test]
    fn solve_period_parsing() {
        assert_eq!("episode".parse::<SolvePeriod>().unwrap(), SolvePeriod::Episode);
        assert_eq!("500".parse::<SolvePeriod>().unwrap(), SolvePeriod::Steps(500));
        assert!("0".parse::<SolvePeriod>().is_err());
        assert!("often".parse::<SolvePeriod>().is_err());
        for p in [SolvePeriod::Episode, SolvePeriod::Steps(3)] {
            assert_eq!(p.to_string().parse::<SolvePeriod>().unwrap(), p);
        }
    }

    #[test]
    fn epsilon_decay() {
        let e = EpsilonSchedule::default();
        assert_eq!(e.value(0), 1.0);
        assert!((e.value(25_000) - 0.525).abs() < 1e-12);
        assert_eq!(e.value(50_000), 0.05);
        assert_eq!(e.value(10_000_000), 0.05);
        assert_eq!(EpsilonSchedule::constant(0.3).value(0), 0.3);
        assert!(EpsilonSchedule::constant(1.5).validate().is_err());
    }
}
