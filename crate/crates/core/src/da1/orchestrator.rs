use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::group::{normalize_shares, share_of, split_pool, GroupState, GROUP_BRANCHES, SHARE_LEVELS};
use super::solver::{user_allocate, UserUtility};
use crate::da2::SliceConfig;
use crate::error::{Error, Result};
use crate::learn::{Agent, BdqNetwork, Transition};
use crate::netsim::{Allocation, Orchestrator, SlotRecord, SlotView};
use crate::qoe::QoeModel;
use crate::rng::SimRng;
use crate::scenario::{GroupPolicySharing, ScenarioConfig};

/// What level one knows about a user for the current window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPlan {
    pub model: QoeModel,
    pub ela: f64,
    /// Planned quality level.
    pub tier: usize,
}

/// Reward fed back to the group policy after an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupFeedback {
    /// First slot of the epoch.
    pub t: u64,
    pub group: u32,
    pub mean_qoe: f64,
    pub mean_shortfall: f64,
    pub reward: f64,
}

/// Group policies, either one network for all groups or one per group.
#[derive(Debug, Clone)]
pub struct GroupPolicies {
    pub sharing: GroupPolicySharing,
    /// Keyed by group; the shared network sits under key 0.
    pub nets: BTreeMap<u32, BdqNetwork>,
}

impl GroupPolicies {
    fn key(&self, group: u32) -> u32 {
        match self.sharing {
            GroupPolicySharing::Shared => 0,
            GroupPolicySharing::PerGroup => group,
        }
    }

    pub fn get(&self, group: u32) -> Option<&BdqNetwork> {
        self.nets.get(&self.key(group))
    }
}

/// Exploration and learning state while training the group policies.
#[derive(Debug, Clone)]
pub struct GroupLearner {
    pub agents: BTreeMap<u32, Agent>,
    pub epsilon: f64,
    pub updates_per_epoch: u32,
    pub rng: SimRng,
}

#[derive(Debug, Clone, Default)]
struct EpochAcc {
    qoe: f64,
    shortfall: f64,
    n: usize,
}

/// The level-one digital agent of the proposed scheme.
///
/// Every epoch a group policy picks bandwidth and compute shares per user
/// group; every slot the group budgets are split among members by
/// [`user_allocate`].
#[derive(Debug, Clone)]
pub struct LevelOne {
    plans: Vec<UserPlan>,
    policies: Option<GroupPolicies>,
    learner: Option<GroupLearner>,
    epoch: u64,
    solver_iters: usize,
    shortfall_weight: f64,
    shares: BTreeMap<u32, (f64, f64)>,
    /// (group, state, action) chosen at the start of the running epoch.
    pending: Vec<(u32, [f64; 6], [usize; 2])>,
    epoch_start: u64,
    acc: BTreeMap<u32, EpochAcc>,
    states: BTreeMap<u32, GroupState>,
    feedback: Vec<GroupFeedback>,
}

impl LevelOne {
    pub fn new(cfg: &ScenarioConfig, plans: Vec<UserPlan>, policies: Option<GroupPolicies>) -> Self {
        Self {
            plans,
            policies,
            learner: None,
            epoch: u64::from(cfg.orchestration.epoch_slots.max(1)),
            solver_iters: cfg.orchestration.solver_max_iters,
            shortfall_weight: cfg.orchestration.shortfall_weight,
            shares: BTreeMap::new(),
            pending: Vec::new(),
            epoch_start: 0,
            acc: BTreeMap::new(),
            states: BTreeMap::new(),
            feedback: Vec::new(),
        }
    }

    /// Turns on epsilon-greedy exploration and learning.
    pub fn with_learner(mut self, learner: GroupLearner) -> Self {
        self.learner = Some(learner);
        self
    }

    pub fn set_plans(&mut self, plans: Vec<UserPlan>) {
        self.plans = plans;
    }

    pub fn plans(&self) -> &[UserPlan] {
        &self.plans
    }

    pub fn learner_mut(&mut self) -> Option<&mut GroupLearner> {
        self.learner.as_mut()
    }

    pub fn into_learner(self) -> Option<GroupLearner> {
        self.learner
    }

    pub fn feedback(&self) -> &[GroupFeedback] {
        &self.feedback
    }

    fn state_of(&self, group: u32) -> GroupState {
        self.states.get(&group).copied().unwrap_or(GroupState {
            group: group as u8,
            avg_buffer: 0.0,
            compute_load: 0.0,
            avg_quality: 0.0,
        })
    }

    fn close_epoch(&mut self) -> Result<()> {
        let pending = core::mem::take(&mut self.pending);
        for (group, state, action) in pending {
            let Some(acc) = self.acc.get(&group).filter(|a| a.n > 0) else { continue };
            let mean_qoe = acc.qoe / acc.n as f64;
            let mean_shortfall = acc.shortfall / acc.n as f64;
            let reward = mean_qoe - self.shortfall_weight * mean_shortfall;
            self.feedback.push(GroupFeedback { t: self.epoch_start, group, mean_qoe, mean_shortfall, reward });
            let next = self.state_of(group).features();
            if let (Some(learner), Some(pol)) = (self.learner.as_mut(), self.policies.as_ref()) {
                let key = pol.key(group);
                if let Some(agent) = learner.agents.get_mut(&key) {
                    agent.remember(Transition {
                        state: state.to_vec(),
                        action: action.to_vec(),
                        reward,
                        next_state: next.to_vec(),
                        terminal: false,
                    })?;
                }
            }
        }
        if let (Some(learner), Some(pol)) = (self.learner.as_mut(), self.policies.as_mut()) {
            for (key, agent) in learner.agents.iter_mut() {
                for _ in 0..learner.updates_per_epoch {
                    agent.learn(&mut learner.rng)?;
                }
                pol.nets.insert(*key, agent.online.clone());
            }
        }
        self.acc.clear();
        Ok(())
    }

    fn open_epoch(&mut self, t: u64, groups: &[u32]) -> Result<()> {
        self.epoch_start = t;
        let mut actions = Vec::with_capacity(groups.len());
        for &g in groups {
            let state = self.state_of(g).features();
            let action = match (&mut self.learner, &self.policies) {
                (Some(learner), Some(pol)) => {
                    let agent = learner
                        .agents
                        .get(&pol.key(g))
                        .ok_or(Error::Config(alloc::format!("no agent for group {g}")))?;
                    let a = agent.act(&state, learner.epsilon, &mut learner.rng)?;
                    [a[0], a[1]]
                }
                (None, Some(pol)) => match pol.get(g) {
                    Some(net) => {
                        if net.num_branches != GROUP_BRANCHES || net.actions_per_branch != SHARE_LEVELS {
                            return Err(Error::ShapeMismatch {
                                expected: GROUP_BRANCHES * SHARE_LEVELS,
                                got: net.num_branches * net.actions_per_branch,
                            });
                        }
                        let a = net.greedy(&state)?;
                        [a[0], a[1]]
                    }
                    None => [SHARE_LEVELS - 1; 2],
                },
                _ => [SHARE_LEVELS - 1; 2],
            };
            self.pending.push((g, state, action));
            actions.push((share_of(action[0]), share_of(action[1])));
        }
        let shares = normalize_shares(&actions);
        self.shares = groups.iter().copied().zip(shares).collect();
        Ok(())
    }
}

/// Distinct group labels in view order.
fn groups_in(view: &SlotView<'_>) -> Vec<u32> {
    let mut g: Vec<u32> = view.users.iter().map(|u| u.group).collect();
    g.sort_unstable();
    g.dedup();
    g
}

/// Bandwidth budget of each group at each station, and compute budget of
/// each group, from the slice pools and normalised shares.
pub fn group_budgets(
    view: &SlotView<'_>,
    slices: &SliceConfig,
    groups: &[u32],
    shares: &BTreeMap<u32, (f64, f64)>,
) -> (BTreeMap<u32, Vec<f64>>, BTreeMap<u32, f64>) {
    let nbs = view.cfg.base_stations.len();
    let mut bw: BTreeMap<u32, Vec<f64>> = groups.iter().map(|&g| (g, alloc::vec![0.0; nbs])).collect();
    for b in 0..nbs {
        // Only groups with members at the station compete for its pool.
        let present: Vec<u32> =
            groups.iter().copied().filter(|g| view.users.iter().any(|u| u.group == *g && u.serving_bs == b)).collect();
        let s: Vec<f64> = present.iter().map(|g| shares.get(g).map_or(1.0, |s| s.0)).collect();
        let r: Vec<f64> = present.iter().map(|g| slices.bandwidth_of(*g, b)).collect();
        let mut r_eff = r.clone();
        if r.iter().all(|x| *x <= 0.0) {
            r_eff = alloc::vec![1.0; present.len()];
        }
        for (g, v) in present.iter().zip(split_pool(slices.bandwidth_pool(b), &s, &r_eff)) {
            bw.get_mut(g).unwrap()[b] = v;
        }
    }
    let s: Vec<f64> = groups.iter().map(|g| shares.get(g).map_or(1.0, |s| s.1)).collect();
    let r: Vec<f64> = groups.iter().map(|g| slices.compute_of(*g)).collect();
    let r_eff = if r.iter().all(|x| *x <= 0.0) { alloc::vec![1.0; groups.len()] } else { r };
    let cpu = groups.iter().copied().zip(split_pool(slices.compute_pool(), &s, &r_eff)).collect();
    (bw, cpu)
}

impl Orchestrator for LevelOne {
    fn allocate(&mut self, view: &SlotView<'_>, slices: &SliceConfig) -> Result<Vec<Allocation>> {
        if self.plans.len() != view.users.len() {
            return Err(Error::LengthMismatch { left: self.plans.len(), right: view.users.len() });
        }
        let groups = groups_in(view);
        if view.t % self.epoch == 0 || self.shares.is_empty() {
            if !self.pending.is_empty() {
                self.close_epoch()?;
            }
            self.open_epoch(view.t, &groups)?;
        }
        let (bw, cpu) = group_budgets(view, slices, &groups, &self.shares);
        let cfg = view.cfg;
        let mut out = alloc::vec![Allocation::default(); view.users.len()];
        for g in &groups {
            let members: Vec<usize> = (0..view.users.len()).filter(|&i| view.users[i].group == *g).collect();
            let utils: Vec<UserUtility> = members
                .iter()
                .map(|&i| {
                    let u = &view.users[i];
                    let plan = &self.plans[i];
                    let q = cfg.catalog.level_quality(plan.tier);
                    UserUtility {
                        impact: plan.model.impact.factor(u.behavior, u.complexity),
                        score: plan.model.structure.score(0.0, q),
                        bw_demand: cfg.catalog.quality_levels[plan.tier]
                            / (cfg.playback.abr_safety * u.spectral_efficiency.max(1e-6)),
                        cpu_demand: cfg.catalog.compute_cost(q) / cfg.playback.abr_safety,
                        bs: u.serving_bs,
                    }
                })
                .collect();
            let sol = user_allocate(&utils, &bw[g], cpu[g], self.solver_iters);
            for (&i, &(b, c)) in members.iter().zip(&sol.allocations) {
                out[i] = Allocation { bandwidth: b, compute: c };
            }
        }
        Ok(out)
    }

    fn observe(&mut self, view: &SlotView<'_>, records: &[SlotRecord]) -> Result<()> {
        let cfg = view.cfg;
        let mut sums: BTreeMap<u32, (f64, f64, f64, usize)> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            let g = view.users[i].group;
            let acc = self.acc.entry(g).or_default();
            acc.qoe += r.qoe_sample;
            acc.shortfall += (self.plans[i].ela - r.qoe_sample).max(0.0);
            acc.n += 1;
            let e = sums.entry(g).or_insert((0.0, 0.0, 0.0, 0));
            e.0 += r.buffer;
            e.1 += r.allocated_compute;
            e.2 += r.quality;
            e.3 += 1;
        }
        for (g, (buf, cpu, q, n)) in sums {
            self.states.insert(
                g,
                GroupState {
                    group: g as u8,
                    avg_buffer: (buf / n as f64 / cfg.playback.max_buffer_s).clamp(0.0, 1.0),
                    compute_load: (cpu / cfg.edge.capacity).clamp(0.0, 1.0),
                    avg_quality: q / n as f64,
                },
            );
        }
        Ok(())
    }
}

impl LevelOne {
    /// Closes the running epoch so its reward is recorded.
    pub fn flush(&mut self) -> Result<()> {
        if !self.pending.is_empty() {
            self.close_epoch()?;
        }
        Ok(())
    }
}
