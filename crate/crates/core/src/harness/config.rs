//! Experiment configuration and its flat `key = value` text form.
//!
//! Keys match the command-line flags (`tau-e`, `solve-period`, ...); an
//! underscore is accepted wherever a hyphen is. Lines starting with `#` are
//! comments. When the same key is given twice the later one wins, which is
//! how flags override a config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::agents::{AgentConfig, AgentKind, EpsilonSchedule, SolvePeriod};
use crate::discretize::GridSpec;
use crate::envs::EnvId;
use crate::{Error, Result};

pub const DEFAULT_REPETITIONS: usize = 10;
pub const DEFAULT_EPISODES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvId,
    pub agent: AgentConfig,
    pub repetitions: usize,
    pub episodes: usize,
    /// Repetition `i` runs with seed `seed + i`.
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Keep the per-step provenance log in each [`RunRecord`](super::RunRecord).
    pub record_provenance: bool,
}

impl ExperimentConfig {
    pub fn new(env: EnvId, kind: AgentKind) -> Self {
        Self {
            env,
            agent: AgentConfig::new(kind, env),
            repetitions: DEFAULT_REPETITIONS,
            episodes: DEFAULT_EPISODES,
            seed: 0,
            out_dir: None,
            record_provenance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.seed.checked_add(self.repetitions as u64 - 1).is_none() {
            return Err(Error::InvalidConfig("seed + repetitions overflows".into()));
        }
        self.agent.validate(self.env)
    }

    pub fn repetition_seed(&self, repetition: usize) -> u64 {
        self.seed + repetition as u64
    }

    /// Build from key/value pairs; later pairs override earlier ones.
    /// `env` and `agent` are required.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            map.insert(normalize_key(k.as_ref()), v.as_ref().trim().to_string());
        }
        let env: EnvId = map
            .remove("env")
            .ok_or_else(|| Error::InvalidConfig("missing `env`".into()))?
            .parse()?;
        let kind: AgentKind = map
            .remove("agent")
            .ok_or_else(|| Error::InvalidConfig("missing `agent`".into()))?
            .parse()?;
        let mut cfg = Self::new(env, kind);
        // λ applies to both factors; the per-factor keys refine it
        if let Some(v) = map.remove("lambda") {
            let l = parse_num(&v, "lambda")?;
            cfg.agent.imc.lambda_u = l;
            cfg.agent.imc.lambda_v = l;
        }
        for (k, v) in &map {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let a = &mut self.agent;
        match key {
            "episodes" => self.episodes = parse_num(v, key)?,
            "reps" | "repetitions" => self.repetitions = parse_num(v, key)?,
            "seed" => self.seed = parse_num(v, key)?,
            "out" => self.out_dir = Some(PathBuf::from(v)),
            "provenance" => self.record_provenance = parse_bool(v, key)?,
            "tau" | "total-steps" => a.schedule.total_steps = parse_num(v, key)?,
            "tau-e" => a.schedule.tau_e = parse_num(v, key)?,
            "tau-q" => a.schedule.tau_q = parse_num(v, key)?,
            "solve-period" => a.schedule.solve_period = v.parse::<SolvePeriod>()?,
            "reset-threshold" => a.schedule.reset_threshold = parse_num(v, key)?,
            "reset-window" => a.schedule.reset_window = parse_num(v, key)?,
            "rank" => {
                a.imc.rank = if v.eq_ignore_ascii_case("auto") { None } else { Some(parse_num(v, key)?) }
            }
            "lambda-u" => a.imc.lambda_u = parse_num(v, key)?,
            "lambda-v" => a.imc.lambda_v = parse_num(v, key)?,
            "max-iterations" => a.imc.max_iterations = parse_num(v, key)?,
            "tolerance" => a.imc.tolerance = parse_num(v, key)?,
            "denominator-guard" => a.imc.denominator_guard = parse_num(v, key)?,
            "alpha" => a.alpha = parse_num(v, key)?,
            "gamma" => {
                a.gamma = parse_num(v, key)?;
                a.dqn.gamma = a.gamma;
            }
            "epsilon" => a.epsilon = EpsilonSchedule::constant(parse_num(v, key)?),
            "epsilon-start" => a.epsilon.start = parse_num(v, key)?,
            "epsilon-end" => a.epsilon.end = parse_num(v, key)?,
            "epsilon-steps" => a.epsilon.decay_steps = parse_num(v, key)?,
            "beta" => a.beta = parse_num(v, key)?,
            "grid" => a.grid = v.parse::<GridSpec>()?,
            "action-shift" => a.action_shift = parse_num(v, key)?,
            "hidden" => a.dqn.hidden = parse_num(v, key)?,
            "learning-rate" => a.dqn.learning_rate = parse_num(v, key)?,
            "replay-capacity" => a.dqn.replay_capacity = parse_num(v, key)?,
            "batch-size" => a.dqn.batch_size = parse_num(v, key)?,
            "target-sync" => a.dqn.target_sync = parse_num(v, key)?,
            "warmup" => a.dqn.warmup = parse_num(v, key)?,
            "dqn-epsilon-start" => a.dqn.epsilon.start = parse_num(v, key)?,
            "dqn-epsilon-end" => a.dqn.epsilon.end = parse_num(v, key)?,
            "dqn-epsilon-steps" => a.dqn.epsilon.decay_steps = parse_num(v, key)?,
            other => return Err(Error::Parse(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Fully resolved configuration in the text form accepted by
    /// [`ExperimentConfig::from_text`].
    pub fn to_text(&self) -> String {
        let a = &self.agent;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("env", self.env.to_string());
        kv("agent", a.kind.to_string());
        kv("episodes", self.episodes.to_string());
        kv("reps", self.repetitions.to_string());
        kv("seed", self.seed.to_string());
        if let Some(out) = &self.out_dir {
            kv("out", out.display().to_string());
        }
        kv("provenance", self.record_provenance.to_string());
        kv("alpha", fmt_f(a.alpha));
        kv("gamma", fmt_f(a.gamma));
        kv("epsilon-start", fmt_f(a.epsilon.start));
        kv("epsilon-end", fmt_f(a.epsilon.end));
        kv("epsilon-steps", a.epsilon.decay_steps.to_string());
        kv("beta", fmt_f(a.beta));
        kv("grid", a.grid.to_string());
        kv("action-shift", fmt_f(a.action_shift));
        kv("tau", a.schedule.total_steps.to_string());
        kv("tau-e", a.schedule.tau_e.to_string());
        kv("tau-q", a.schedule.tau_q.to_string());
        kv("solve-period", a.schedule.solve_period.to_string());
        kv("reset-threshold", fmt_f(a.schedule.reset_threshold));
        kv("reset-window", a.schedule.reset_window.to_string());
        kv("rank", a.imc.rank.map_or("auto".to_string(), |r| r.to_string()));
        kv("lambda-u", fmt_f(a.imc.lambda_u));
        kv("lambda-v", fmt_f(a.imc.lambda_v));
        kv("max-iterations", a.imc.max_iterations.to_string());
        kv("tolerance", fmt_f(a.imc.tolerance));
        kv("denominator-guard", fmt_f(a.imc.denominator_guard));
        kv("hidden", a.dqn.hidden.to_string());
        kv("learning-rate", fmt_f(a.dqn.learning_rate));
        kv("replay-capacity", a.dqn.replay_capacity.to_string());
        kv("batch-size", a.dqn.batch_size.to_string());
        kv("target-sync", a.dqn.target_sync.to_string());
        kv("warmup", a.dqn.warmup.to_string());
        kv("dqn-epsilon-start", fmt_f(a.dqn.epsilon.start));
        kv("dqn-epsilon-end", fmt_f(a.dqn.epsilon.end));
        kv("dqn-epsilon-steps", a.dqn.epsilon.decay_steps.to_string());
        s
    }
}

fn fmt_f(x: f64) -> String {
    // Debug keeps enough digits to round-trip
    format!("{x:?}")
}

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('_', "-").to_ascii_lowercase()
}

fn parse_num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse::<T>()
        .map_err(|e| Error::Parse(format!("`{key}` = `{v}`: {e}")))
}

fn parse_bool(v: &str, key: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("`{key}` = `{v}` is not a boolean"))),
    }
}

/// Split `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
        let k = normalize_key(k);
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", n + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}
