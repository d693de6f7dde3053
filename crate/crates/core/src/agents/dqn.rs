//! A small deep Q-network: one ReLU hidden layer, exact backpropagation,
//! Adam, a ring replay buffer and a periodically synced target network.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use super::schedule::EpsilonSchedule;
use super::tabular::epsilon_greedy_action;
use crate::envs::{EnvId, Transition};
use crate::{Error, Result, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync: usize,
    /// Transitions collected before the first gradient step.
    pub warmup: usize,
    pub epsilon: EpsilonSchedule,
}

impl MlpConfig {
    pub fn for_env(env: EnvId) -> Self {
        Self {
            input: env.obs_dim(),
            hidden: 64,
            output: env.n_actions(),
            learning_rate: 1e-3,
            gamma: 0.99,
            replay_capacity: 10_000,
            batch_size: 32,
            target_sync: 500,
            warmup: 100,
            epsilon: EpsilonSchedule { start: 1.0, end: 0.05, decay_steps: 10_000 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("input width", self.input),
            ("hidden width", self.hidden),
            ("output width", self.output),
            ("replay capacity", self.replay_capacity),
            ("batch size", self.batch_size),
            ("target sync period", self.target_sync),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("discount {} not in [0, 1)", self.gamma)));
        }
        self.epsilon.validate()
    }
}

/// `out = W2 · relu(W1 x + b1) + b2`. Gradients use the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

struct Cache {
    pre: DVector<f64>,
    hidden: DVector<f64>,
    out: DVector<f64>,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            w1: DMatrix::zeros(hidden, input),
            b1: DVector::zeros(hidden),
            w2: DMatrix::zeros(output, hidden),
            b2: DVector::zeros(output),
        }
    }

    /// Uniform on ±1/√fan_in for every weight and bias.
    pub fn random(input: usize, hidden: usize, output: usize, rng: &mut Rng) -> Self {
        let draw = |fan_in: usize| {
            let b = 1.0 / (fan_in as f64).sqrt();
            move |rng: &mut Rng| rng.gen_range(-b..b)
        };
        let (d1, d2) = (draw(input), draw(hidden));
        Self {
            w1: DMatrix::from_fn(hidden, input, |_, _| d1(rng)),
            b1: DVector::from_fn(hidden, |_, _| d1(rng)),
            w2: DMatrix::from_fn(output, hidden, |_, _| d2(rng)),
            b2: DVector::from_fn(output, |_, _| d2(rng)),
        }
    }

    pub fn input(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output(&self) -> usize {
        self.w2.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn cache(&self, x: &[f64]) -> Cache {
        let x = DVector::from_column_slice(x);
        let pre = &self.w1 * x + &self.b1;
        let hidden = pre.map(|v| v.max(0.0));
        let out = &self.w2 * &hidden + &self.b2;
        Cache { pre, hidden, out }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.cache(x).out.as_slice().to_vec()
    }

    /// Parameters in the order w1, b1, w2, b2 (matrices column-major).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend_from_slice(self.w1.as_slice());
        v.extend_from_slice(self.b1.as_slice());
        v.extend_from_slice(self.w2.as_slice());
        v.extend_from_slice(self.b2.as_slice());
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a network with {}",
                flat.len(),
                self.n_params()
            )));
        }
        let mut rest = flat;
        for dst in [
            self.w1.as_mut_slice(),
            self.b1.as_mut_slice(),
            self.w2.as_mut_slice(),
            self.b2.as_mut_slice(),
        ] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub done: bool,
}

impl From<&Transition> for Experience {
    fn from(t: &Transition) -> Self {
        Self {
            observation: t.state.observation.clone(),
            action: t.action,
            reward: t.reward,
            next_observation: t.next_state.observation.clone(),
            done: t.done,
        }
    }
}

fn td_target(target: &Mlp, e: &Experience, gamma: f64) -> f64 {
    if e.done {
        return e.reward;
    }
    let next = target.forward(&e.next_observation);
    e.reward + gamma * next.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Mean squared TD error of `online` against targets from `target`.
pub fn td_loss(online: &Mlp, target: &Mlp, batch: &[Experience], gamma: f64) -> f64 {
    let sum: f64 = batch
        .iter()
        .map(|e| {
            let q = online.forward(&e.observation)[e.action];
            (q - td_target(target, e, gamma)).powi(2)
        })
        .sum();
    sum / batch.len() as f64
}

/// Loss and its gradient with respect to the online parameters; the
/// targets are held constant.
pub fn td_gradient(online: &Mlp, target: &Mlp, batch: &[Experience], gamma: f64) -> (f64, Mlp) {
    let mut g = Mlp::zeros(online.input(), online.w1.nrows(), online.output());
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for e in batch {
        let c = online.cache(&e.observation);
        let err = c.out[e.action] - td_target(target, e, gamma);
        loss += err * err * scale;
        let d_out = 2.0 * err * scale;
        let a = e.action;
        for j in 0..c.hidden.len() {
            g.w2[(a, j)] += d_out * c.hidden[j];
        }
        g.b2[a] += d_out;
        for j in 0..c.pre.len() {
            if c.pre[j] <= 0.0 {
                continue;
            }
            let d_pre = d_out * online.w2[(a, j)];
            for (k, &x) in e.observation.iter().enumerate() {
                g.w1[(j, k)] += d_pre * x;
            }
            g.b1[j] += d_pre;
        }
    }
    (loss, g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut Mlp, grads: &Mlp) -> Result<()> {
        let mut p = params.to_flat();
        let g = grads.to_flat();
        if p.len() != self.m.len() || g.len() != p.len() {
            return Err(Error::DimensionMismatch("optimizer state does not match network".into()));
        }
        self.t = self.t.saturating_add(1);
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..p.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        params.set_flat(&p)
    }
}

/// Fixed-capacity buffer; once full, each push overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("replay capacity must be positive".into()));
        }
        Ok(Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), next: 0 })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.next] = e;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// `n` entries drawn uniformly with replacement.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<Experience>> {
        if self.items.is_empty() {
            return Err(Error::Empty("replay buffer"));
        }
        Ok((0..n)
            .map(|_| self.items[rng.gen_range(0..self.items.len())].clone())
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    config: MlpConfig,
    online: Mlp,
    target: Mlp,
    adam: Adam,
    buffer: ReplayBuffer,
    steps: usize,
}

impl DqnAgent {
    pub fn new(config: MlpConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let online = Mlp::random(config.input, config.hidden, config.output, rng);
        let adam = Adam::new(online.n_params(), config.learning_rate);
        let buffer = ReplayBuffer::new(config.replay_capacity)?;
        Ok(Self { target: online.clone(), online, adam, buffer, steps: 0, config })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.config.input {
            return Err(Error::DimensionMismatch(format!(
                "observation has {} components, network expects {}",
                obs.len(),
                self.config.input
            )));
        }
        Ok(())
    }

    pub fn act(&self, t: usize, obs: &[f64], rng: &mut Rng) -> Result<usize> {
        self.check_obs(obs)?;
        let q = self.online.forward(obs);
        Ok(epsilon_greedy_action(&q, self.config.epsilon.value(t), rng))
    }

    /// Store the transition and, after warm-up, take one gradient step.
    /// Returns the batch loss when a step was taken.
    pub fn learn(&mut self, transition: &Transition, rng: &mut Rng) -> Result<Option<f64>> {
        self.check_obs(&transition.state.observation)?;
        self.check_obs(&transition.next_state.observation)?;
        self.buffer.push(Experience::from(transition));
        self.steps += 1;
        let mut loss = None;
        if self.buffer.len() >= self.config.warmup.max(self.config.batch_size) {
            let batch = self.buffer.sample(self.config.batch_size, rng)?;
            let (l, g) = td_gradient(&self.online, &self.target, &batch, self.config.gamma);
            self.adam.step(&mut self.online, &g)?;
            loss = Some(l);
        }
        if self.steps.is_multiple_of(self.config.target_sync) {
            self.target = self.online.clone();
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(obs: Vec<f64>, action: usize, reward: f64, done: bool) -> Experience {
        Experience { next_observation: obs.iter().map(|v| v * 0.5).collect(), observation: obs, action, reward, done }
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = crate::seeded_rng(0, 1);
        let net = Mlp::random(3, 5, 2, &mut rng);
        let mut copy = Mlp::zeros(3, 5, 2);
        copy.set_flat(&net.to_flat()).unwrap();
        assert_eq!(copy, net);
        assert_eq!(net.n_params(), 15 + 5 + 10 + 2);
        assert!(copy.set_flat(&[0.0]).is_err());
    }

    #[test]
    fn zero_network_zero_gradient() {
        let net = Mlp::zeros(2, 4, 3);
        let batch = vec![exp(vec![0.3, -0.2], 1, 0.0, true)];
        let (loss, g) = td_gradient(&net, &net, &batch, 0.99);
        assert_eq!(loss, 0.0);
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn only_selected_outputs_receive_gradient() {
        let mut rng = crate::seeded_rng(4, 1);
        let net = Mlp::random(2, 4, 3, &mut rng);
        let batch = vec![exp(vec![0.3, -0.2], 1, 1.0, false), exp(vec![0.1, 0.4], 1, -1.0, true)];
        let (_, g) = td_gradient(&net, &net, &batch, 0.99);
        for a in [0, 2] {
            assert!(g.w2.row(a).iter().all(|&v| v == 0.0));
            assert_eq!(g.b2[a], 0.0);
        }
        assert!(g.b2[1] != 0.0);
    }

    #[test]
    fn gradient_matches_loss_slope() {
        let mut rng = crate::seeded_rng(8, 1);
        let net = Mlp::random(2, 4, 2, &mut rng);
        let target = Mlp::random(2, 4, 2, &mut rng);
        let batch: Vec<_> = (0..6)
            .map(|i| exp(vec![0.1 * i as f64 - 0.2, 0.3 - 0.05 * i as f64], i % 2, 1.0, i == 5))
            .collect();
        let (loss, g) = td_gradient(&net, &target, &batch, 0.9);
        assert!((loss - td_loss(&net, &target, &batch, 0.9)).abs() < 1e-14);
        let p = net.to_flat();
        let h = 1e-6;
        for (i, gi) in g.to_flat().into_iter().enumerate() {
            let mut plus = net.clone();
            let mut minus = net.clone();
            let (mut pp, mut pm) = (p.clone(), p.clone());
            pp[i] += h;
            pm[i] -= h;
            plus.set_flat(&pp).unwrap();
            minus.set_flat(&pm).unwrap();
            let fd = (td_loss(&plus, &target, &batch, 0.9) - td_loss(&minus, &target, &batch, 0.9)) / (2.0 * h);
            assert!((fd - gi).abs() < 1e-7, "param {i}: {gi} vs {fd}");
        }
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut b = ReplayBuffer::new(3).unwrap();
        for r in 0..5 {
            b.push(exp(vec![0.0], 0, r as f64, false));
        }
        assert_eq!(b.len(), 3);
        let rewards: Vec<f64> = b.iter().map(|e| e.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
        assert!(ReplayBuffer::new(0).is_err());
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut net = Mlp::zeros(1, 1, 1);
        let mut g = Mlp::zeros(1, 1, 1);
        g.b2[0] = 2.0;
        g.w1[(0, 0)] = -3.0;
        let mut adam = Adam::new(net.n_params(), 0.01);
        adam.step(&mut net, &g).unwrap();
        assert!((net.b2[0] + 0.01).abs() < 1e-9);
        assert!((net.w1[(0, 0)] - 0.01).abs() < 1e-9);
        assert_eq!(net.w2[(0, 0)], 0.0);
    }

    #[test]
    fn learns_a_constant_target() {
        let mut rng = crate::seeded_rng(2, 1);
        let mut cfg = MlpConfig::for_env(EnvId::CartPole);
        cfg.warmup = 1;
        cfg.batch_size = 4;
        cfg.learning_rate = 1e-2;
        let mut agent = DqnAgent::new(cfg, &mut rng).unwrap();
        let state = crate::envs::EnvState::new(vec![0.01, 0.0, -0.02, 0.0]);
        let t = Transition {
            state: state.clone(),
            action: 0,
            reward: 1.0,
            next_state: state,
            done: true,
            step_index: 1,
            reached_goal: false,
        };
        for _ in 0..2000 {
            agent.learn(&t, &mut rng).unwrap();
        }
        let q = agent.online().forward(&[0.01, 0.0, -0.02, 0.0]);
        assert!((q[0] - 1.0).abs() < 1e-2, "{q:?}");
        let bad = Transition { state: crate::envs::EnvState::new(vec![0.0]), ..t };
        assert!(agent.learn(&bad, &mut rng).is_err());
    }
}
