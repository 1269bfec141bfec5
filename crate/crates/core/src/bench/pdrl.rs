use alloc::vec::Vec;

use rand::Rng;

use crate::da1::{share_of, UserPlan, SHARE_LEVELS};
use crate::da2::SliceConfig;
use crate::error::{Error, Result};
use crate::learn::{Agent, BdqNetwork, Transition};
use crate::netsim::{Allocation, Orchestrator, SlotRecord, SlotView};
use crate::rng::SimRng;

/// Features per user in the PDRL state.
pub const PDRL_FEATURES: usize = 5;

/// Concatenated per-user features: buffer, quality, spectral efficiency,
/// planned level and ELA, each scaled to about `[0, 1]`.
pub fn pdrl_features(view: &SlotView<'_>, plans: &[UserPlan]) -> Vec<f64> {
    let cfg = view.cfg;
    let top = (cfg.catalog.levels() - 1).max(1) as f64;
    let mut f = Vec::with_capacity(view.users.len() * PDRL_FEATURES);
    for (u, p) in view.users.iter().zip(plans) {
        f.push(u.buffer / cfg.playback.max_buffer_s);
        f.push(u.quality);
        f.push(u.spectral_efficiency / 10.0);
        f.push(p.tier as f64 / top);
        f.push(p.ela / 5.0);
    }
    f
}

/// Five-layer network for `users` users: input, three hidden layers and the
/// heads, two branches (bandwidth, compute) per user.
pub fn pdrl_network<R: Rng + ?Sized>(users: usize, hidden: usize, rng: &mut R) -> BdqNetwork {
    BdqNetwork::new(&[users * PDRL_FEATURES, hidden, hidden, hidden], 2 * users, SHARE_LEVELS, rng)
}

#[derive(Debug, Clone)]
pub struct PdrlLearner {
    pub agent: Agent,
    pub epsilon: f64,
    pub updates_per_epoch: u32,
    pub rng: SimRng,
}

/// Level one replaced by a single Q-network mapping all user states to
/// per-user shares of the station and compute pools.
#[derive(Debug, Clone)]
pub struct PdrlOrchestrator {
    plans: Vec<UserPlan>,
    policy: BdqNetwork,
    learner: Option<PdrlLearner>,
    epoch: u64,
    shortfall_weight: f64,
    shares: Vec<(f64, f64)>,
    pending: Option<(Vec<f64>, Vec<usize>)>,
    qoe: f64,
    shortfall: f64,
    count: usize,
    rewards: Vec<f64>,
}

impl PdrlOrchestrator {
    pub fn new(policy: BdqNetwork, plans: Vec<UserPlan>, epoch_slots: u32, shortfall_weight: f64) -> Result<Self> {
        if policy.num_branches != 2 * plans.len() || policy.actions_per_branch != SHARE_LEVELS {
            return Err(Error::ShapeMismatch { expected: 2 * plans.len(), got: policy.num_branches });
        }
        Ok(Self {
            plans,
            policy,
            learner: None,
            epoch: u64::from(epoch_slots.max(1)),
            shortfall_weight,
            shares: Vec::new(),
            pending: None,
            qoe: 0.0,
            shortfall: 0.0,
            count: 0,
            rewards: Vec::new(),
        })
    }

    pub fn with_learner(mut self, learner: PdrlLearner) -> Self {
        self.learner = Some(learner);
        self
    }

    pub fn set_plans(&mut self, plans: Vec<UserPlan>) {
        self.plans = plans;
    }

    pub fn policy(&self) -> &BdqNetwork {
        &self.policy
    }

    pub fn into_parts(self) -> (BdqNetwork, Option<PdrlLearner>) {
        (self.policy, self.learner)
    }

    /// Epoch rewards seen so far.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn learner_mut(&mut self) -> Option<&mut PdrlLearner> {
        self.learner.as_mut()
    }

    fn close_epoch(&mut self, next_state: &[f64]) -> Result<()> {
        let Some((state, action)) = self.pending.take() else { return Ok(()) };
        if self.count == 0 {
            return Ok(());
        }
        let reward = self.qoe / self.count as f64 - self.shortfall_weight * self.shortfall / self.count as f64;
        self.rewards.push(reward);
        self.qoe = 0.0;
        self.shortfall = 0.0;
        self.count = 0;
        if let Some(l) = self.learner.as_mut() {
            l.agent.remember(Transition { state, action, reward, next_state: next_state.to_vec(), terminal: false })?;
            for _ in 0..l.updates_per_epoch {
                l.agent.learn(&mut l.rng)?;
            }
            self.policy = l.agent.online.clone();
        }
        Ok(())
    }
}

impl Orchestrator for PdrlOrchestrator {
    fn allocate(&mut self, view: &SlotView<'_>, slices: &SliceConfig) -> Result<Vec<Allocation>> {
        let n = view.users.len();
        if self.plans.len() != n {
            return Err(Error::LengthMismatch { left: self.plans.len(), right: n });
        }
        if view.t % self.epoch == 0 || self.shares.len() != n {
            let state = pdrl_features(view, &self.plans);
            self.close_epoch(&state)?;
            let action = match self.learner.as_mut() {
                Some(l) => l.agent.act(&state, l.epsilon, &mut l.rng)?,
                None => self.policy.greedy(&state)?,
            };
            self.shares = (0..n).map(|i| (share_of(action[2 * i]), share_of(action[2 * i + 1]))).collect();
            self.pending = Some((state, action));
        }
        let mut out = alloc::vec![Allocation::default(); n];
        for b in 0..view.cfg.base_stations.len() {
            let members: Vec<usize> = (0..n).filter(|&i| view.users[i].serving_bs == b).collect();
            let total: f64 = members.iter().map(|&i| self.shares[i].0).sum();
            let pool = slices.bandwidth_pool(b);
            for &i in &members {
                out[i].bandwidth =
                    if total > 0.0 { pool * self.shares[i].0 / total } else { pool / members.len() as f64 };
            }
        }
        let total: f64 = self.shares.iter().map(|s| s.1).sum();
        let pool = slices.compute_pool();
        for (i, a) in out.iter_mut().enumerate() {
            a.compute = if total > 0.0 { pool * self.shares[i].1 / total } else { pool / n as f64 };
        }
        Ok(out)
    }

    fn observe(&mut self, _view: &SlotView<'_>, records: &[SlotRecord]) -> Result<()> {
        for (r, p) in records.iter().zip(&self.plans) {
            self.qoe += r.qoe_sample;
            self.shortfall += (p.ela - r.qoe_sample).max(0.0);
            self.count += 1;
        }
        Ok(())
    }
}
