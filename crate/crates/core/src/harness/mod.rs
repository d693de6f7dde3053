//! Seeded multi-repetition experiments and their outputs.

pub mod config;
pub mod output;

use std::path::Path;

use rayon::prelude::*;

pub use config::ExperimentConfig;
pub use output::{
    emit_csv, emit_plot, emit_plot_overlay, format_g6, read_curves_csv, summarize, summarize_returns,
    PlotSeries, Summary,
};

use crate::agents::{Agent, SolveRecord, StepProvenance};
use crate::discretize::GridSpec;
use crate::envs::{Env, EnvConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub repetition: usize,
    pub seed: u64,
    /// Sum of environment rewards per episode.
    pub episode_returns: Vec<f64>,
    pub episode_steps: Vec<usize>,
    /// MountainCar flag reached in the episode.
    pub reached_goal: Vec<bool>,
    /// Episodes after which the agent reset itself.
    pub resets: Vec<usize>,
    pub solves: Vec<SolveRecord>,
    /// Empty unless provenance recording is on.
    pub provenance: Vec<StepProvenance>,
}

impl RunRecord {
    pub fn first_goal_episode(&self) -> Option<usize> {
        self.reached_goal.iter().position(|&g| g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Successful repetitions in repetition order.
    pub records: Vec<RunRecord>,
    /// Repetitions that failed, with the error message.
    pub failures: Vec<(usize, String)>,
}

/// Run one repetition with seed `config.seed + repetition`.
pub fn run_repetition(config: &ExperimentConfig, repetition: usize) -> Result<RunRecord> {
    let seed = config.repetition_seed(repetition);
    let grid: &GridSpec = &config.agent.grid;
    let mut env = Env::new(EnvConfig::new(config.env, seed))?;
    let mut agent = Agent::new(config.env, &config.agent, seed)?;
    let mut record = RunRecord {
        repetition,
        seed,
        episode_returns: Vec::with_capacity(config.episodes),
        episode_steps: Vec::with_capacity(config.episodes),
        reached_goal: Vec::with_capacity(config.episodes),
        resets: Vec::new(),
        solves: Vec::new(),
        provenance: Vec::new(),
    };

    for _ in 0..config.episodes {
        let mut obs = env.reset();
        let mut ret = 0.0;
        let mut goal = false;
        loop {
            let s = grid.state_index(&obs.observation)?;
            let decision = agent.act(&obs.observation, s)?;
            let transition = env.step(decision.action)?;
            let s_next = grid.state_index(&transition.next_state.observation)?;
            let step = agent.steps();
            let had_q_hat = agent.augmented().is_some_and(|a| a.q_hat().is_some());
            let outcome = agent.observe(&transition, s, s_next)?;
            if config.record_provenance {
                record.provenance.push(StepProvenance {
                    step,
                    phase: decision.phase,
                    source: decision.source,
                    had_q_hat,
                    solver_invoked: outcome.solve.is_some(),
                });
            }
            record.solves.extend(outcome.solve);
            ret += transition.reward;
            goal |= transition.reached_goal;
            if transition.done {
                record.episode_steps.push(transition.step_index);
                break;
            }
            obs = transition.next_state;
        }
        record.episode_returns.push(ret);
        record.reached_goal.push(goal);
        agent.end_episode(&record.episode_returns);
    }
    record.resets = agent.resets().to_vec();
    Ok(record)
}

/// Run every repetition (concurrently) and, if `out_dir` is set, write the
/// outputs there. A failing repetition is logged and left out; the call
/// fails only when every repetition does.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let outcomes: Vec<Result<RunRecord>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, rep))
        .collect();
    let mut result = ExperimentResult { records: Vec::new(), failures: Vec::new() };
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => result.records.push(r),
            Err(e) => {
                log::warn!("repetition {rep} failed and is excluded: {e}");
                result.failures.push((rep, e.to_string()));
            }
        }
    }
    if result.records.is_empty() {
        let msg = result.failures.first().map(|f| f.1.clone()).unwrap_or_default();
        return Err(Error::InvalidConfig(format!("every repetition failed; first error: {msg}")));
    }
    if let Some(dir) = &config.out_dir {
        write_outputs(config, &result, dir)?;
    }
    Ok(result)
}

/// `curves.csv`, `plot.svg`, `meta.txt` and `solver.log` in `dir`.
pub fn write_outputs(config: &ExperimentConfig, result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let summary = summarize(&result.records)?;
    emit_csv(&summary, &result.records, &dir.join("curves.csv"))?;
    if !summary.is_empty() {
        let label = format!("{} on {}", config.agent.kind, config.env);
        emit_plot(&summary, &label, &dir.join("plot.svg"))?;
    }
    output::write_meta(config, result, &dir.join("meta.txt"))?;
    output::write_solver_log(&result.records, &dir.join("solver.log"))?;
    Ok(())
}
