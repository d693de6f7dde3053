//! Tabular Q-learning with ε-greedy exploration, optionally with a
//! count-based reward bonus.

use rand::Rng as _;

use super::schedule::EpsilonSchedule;
use crate::envs::Transition;
use crate::imc::argmax;
use crate::qcore::QTable;
use crate::{Error, Result, Rng};

/// With probability `eps` a uniform action, otherwise the first maximiser
/// of `row`. Always consumes exactly one draw, plus one more when exploring.
pub fn epsilon_greedy_action(row: &[f64], eps: f64, rng: &mut Rng) -> usize {
    if rng.gen::<f64>() < eps {
        rng.gen_range(0..row.len())
    } else {
        argmax(row.iter().copied())
    }
}

/// `r + β / √n`, with `n` the visit count after the current visit.
pub fn count_bonus_reward(reward: f64, count: u32, beta: f64) -> f64 {
    if beta == 0.0 {
        return reward;
    }
    reward + beta / f64::from(count.max(1)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountBonus {
    beta: f64,
    counts: Vec<u32>,
}

impl CountBonus {
    pub fn new(n_states: usize, beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("bonus scale β = {beta} must be ≥ 0")));
        }
        Ok(Self { beta, counts: vec![0; n_states] })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn count(&self, state: usize) -> u32 {
        self.counts[state]
    }

    /// Record a visit to `state` and return the shaped reward.
    pub fn shape(&mut self, state: usize, reward: f64) -> Result<f64> {
        let bound = self.counts.len();
        let c = self
            .counts
            .get_mut(state)
            .ok_or(Error::IndexOutOfRange { what: "state", index: state, bound })?;
        *c = c.saturating_add(1);
        Ok(count_bonus_reward(reward, *c, self.beta))
    }
}

#[derive(Debug, Clone)]
pub struct TabularAgent {
    table: QTable,
    epsilon: EpsilonSchedule,
    bonus: Option<CountBonus>,
}

impl TabularAgent {
    pub fn new(table: QTable, epsilon: EpsilonSchedule, bonus: Option<CountBonus>) -> Result<Self> {
        epsilon.validate()?;
        Ok(Self { table, epsilon, bonus })
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut QTable {
        &mut self.table
    }

    pub fn epsilon(&self) -> &EpsilonSchedule {
        &self.epsilon
    }

    pub fn bonus(&self) -> Option<&CountBonus> {
        self.bonus.as_ref()
    }

    pub fn act(&self, t: usize, state: usize, rng: &mut Rng) -> Result<usize> {
        if state >= self.table.n_states() {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: state,
                bound: self.table.n_states(),
            });
        }
        Ok(epsilon_greedy_action(&self.table.row(state), self.epsilon.value(t), rng))
    }

    pub fn learn(&mut self, transition: &Transition, state: usize, next_state: usize) -> Result<()> {
        let reward = match &mut self.bonus {
            Some(b) => b.shape(state, transition.reward)?,
            None => transition.reward,
        };
        self.table
            .update(state, transition.action, reward, next_state, transition.done)
    }
}
