use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{argmax, BdqNetwork};
use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    /// One action index per branch.
    pub action: Vec<usize>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { items: Vec::with_capacity(capacity.min(1 << 16)), capacity: capacity.max(1), next: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, tr: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(tr);
        } else {
            self.items[self.next] = tr;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// `n` transitions drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Transition> {
        (0..n).map(|_| self.items[rng.random_range(0..self.items.len())].clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Number of episodes over which epsilon decays linearly.
    pub epsilon_decay_episodes: u32,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync_steps: u32,
    /// Gradient steps per environment step.
    pub updates_per_step: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 1000,
            replay_capacity: 10_000,
            batch_size: 64,
            target_sync_steps: 200,
            updates_per_step: 1,
        }
    }
}

/// Linearly decayed exploration rate for an episode.
pub fn epsilon_at(cfg: &AgentConfig, episode: u32) -> f64 {
    if cfg.epsilon_decay_episodes == 0 {
        return cfg.epsilon_end;
    }
    if episode >= cfg.epsilon_decay_episodes {
        return cfg.epsilon_end;
    }
    let f = f64::from(episode) / f64::from(cfg.epsilon_decay_episodes);
    cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * f
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Online network, target network, replay and an Adam optimiser.
#[derive(Debug, Clone)]
pub struct Agent {
    pub online: BdqNetwork,
    pub target: BdqNetwork,
    pub replay: ReplayBuffer,
    pub cfg: AgentConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    updates: u64,
}

impl Agent {
    pub fn new(online: BdqNetwork, cfg: AgentConfig) -> Self {
        let n = online.param_count();
        Self {
            target: online.clone(),
            online,
            replay: ReplayBuffer::new(cfg.replay_capacity),
            cfg,
            m: alloc::vec![0.0; n],
            v: alloc::vec![0.0; n],
            updates: 0,
        }
    }

    /// Epsilon-greedy action; exactly one uniform is drawn per branch, plus
    /// one index draw per exploring branch.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], epsilon: f64, rng: &mut R) -> Result<Vec<usize>> {
        let q = self.online.forward(state)?;
        Ok(q.iter()
            .map(|branch| {
                if rng.random::<f64>() < epsilon {
                    rng.random_range(0..branch.len())
                } else {
                    argmax(branch)
                }
            })
            .collect())
    }

    pub fn remember(&mut self, tr: Transition) -> Result<()> {
        if tr.action.len() != self.online.num_branches {
            return Err(Error::ShapeMismatch { expected: self.online.num_branches, got: tr.action.len() });
        }
        self.replay.push(tr);
        Ok(())
    }

    /// One Adam step on a sampled batch, if enough experience is stored.
    pub fn learn<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>> {
        if self.replay.len() < self.cfg.batch_size.max(1) {
            return Ok(None);
        }
        let batch = self.replay.sample(self.cfg.batch_size, rng);
        let y = self.target.targets(&batch, self.cfg.gamma)?;
        let (loss, grad) = self.online.loss_and_gradients(&batch, &y)?;
        self.updates += 1;
        let t = self.updates as i32;
        let c1 = 1.0 - pow_i(ADAM_B1, t);
        let c2 = 1.0 - pow_i(ADAM_B2, t);
        let mut p = self.online.params();
        for (i, g) in grad.params().into_iter().enumerate() {
            self.m[i] = ADAM_B1 * self.m[i] + (1.0 - ADAM_B1) * g;
            self.v[i] = ADAM_B2 * self.v[i] + (1.0 - ADAM_B2) * g * g;
            p[i] -= self.cfg.learning_rate * (self.m[i] / c1) / (sqrt(self.v[i] / c2) + ADAM_EPS);
        }
        self.online.set_params(&p)?;
        if self.updates % u64::from(self.cfg.target_sync_steps.max(1)) == 0 {
            self.target = self.online.clone();
        }
        Ok(Some(loss))
    }
}

fn pow_i(x: f64, n: i32) -> f64 {
    crate::math::powf(x, f64::from(n))
}

/// An episodic environment with a branching discrete action space.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn num_branches(&self) -> usize;
    fn actions_per_branch(&self) -> usize;
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64>;
    /// Next state, reward and whether the episode ended.
    fn step<R: Rng + ?Sized>(&mut self, action: &[usize], rng: &mut R) -> Result<(Vec<f64>, f64, bool)>;
}

/// Epsilon-greedy training; returns the trained network and the mean
/// reward of every episode.
pub fn train_episodes<E: Environment, R: Rng + ?Sized>(
    env: &mut E,
    net: BdqNetwork,
    cfg: &AgentConfig,
    episodes: u32,
    max_steps: usize,
    rng: &mut R,
) -> Result<(BdqNetwork, Vec<f64>)> {
    if net.input_width() != env.state_dim()
        || net.num_branches != env.num_branches()
        || net.actions_per_branch != env.actions_per_branch()
    {
        return Err(Error::ShapeMismatch { expected: env.state_dim(), got: net.input_width() });
    }
    let mut agent = Agent::new(net, *cfg);
    let mut curve = Vec::with_capacity(episodes as usize);
    for ep in 0..episodes {
        let eps = epsilon_at(cfg, ep);
        let mut state = env.reset(rng);
        let mut total = 0.0;
        let mut steps = 0;
        for _ in 0..max_steps.max(1) {
            let action = agent.act(&state, eps, rng)?;
            let (next, reward, done) = env.step(&action, rng)?;
            total += reward;
            steps += 1;
            agent.remember(Transition { state, action, reward, next_state: next.clone(), terminal: done })?;
            for _ in 0..cfg.updates_per_step {
                agent.learn(rng)?;
            }
            state = next;
            if done {
                break;
            }
        }
        curve.push(total / steps as f64);
    }
    Ok((agent.online, curve))
}
