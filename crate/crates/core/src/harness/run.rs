use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::{box_stats, cdf_points, ratio_from_means, window_user_qoe, BoxStats, WindowMetric};
use crate::bench::{demand_models, pdrl_network, PdrlLearner, PdrlOrchestrator, RoundRobin, SchemeId};
use crate::da1::{
    cluster_users, emulate_context, predict_demand, ChannelStats, ContextTrace, DemandLimits, EmulationParams,
    GroupLearner, GroupPolicies, LevelOne, ResourceDemand, UserPlan, GROUP_BRANCHES, GROUP_STATE_DIM, SHARE_LEVELS,
};
use crate::da2::{
    abstract_demand, best_response_adjust, dynamics_score, dynamics_to_window, greedy_slice, Capacities, GameReport,
    Quanta, SliceConfig,
};
use crate::error::{Error, Result};
use crate::learn::{Agent, AgentConfig, BdqNetwork};
use crate::math::round;
use crate::netsim::{open_uniform, run_window, Allocation, Orchestrator, SlotRecord, SlotView, Simulator, TrafficLanes};
use crate::qoe::{fit_model, identify_structure, should_update, FactorSample, Impact, QoeModel, Structure};
use crate::rng::{lane, lane_rng, training_lane, Lane, SimRng};
use crate::scenario::{sample_users, GroupPolicySharing, ScenarioConfig, UserProfile};

/// Stream offsets separating the phases of a run.
const EVAL_PHASE: u64 = 0;
const TRAINING_PHASE: u64 = Lane::Training as u64;
const PROFILING_PHASE: u64 = 2 * Lane::Training as u64;

/// Threshold of the distance-correlation factor screen.
pub const FACTOR_THRESHOLD: f64 = 0.1;

/// One row of the per-window demand dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandRow {
    pub window: usize,
    pub user: u32,
    pub group: u32,
    pub bandwidth: f64,
    pub compute: f64,
    pub feasible: bool,
    pub tier: usize,
}

/// One row of the per-window slice dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub window: usize,
    pub window_min: u32,
    pub group: u32,
    pub bs: u32,
    pub bandwidth: f64,
    pub compute: f64,
    pub mechanism: &'static str,
}

/// Learned policies of a run.
#[derive(Debug, Clone, Default)]
pub struct TrainedPolicies {
    pub group: Option<GroupPolicies>,
    pub pdrl: Option<BdqNetwork>,
}

/// Everything one (scheme, seed) run produces.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub scheme: SchemeId,
    pub seed: u64,
    pub profiles: Vec<UserProfile>,
    /// Models held by the digital agents at the end of the run.
    pub models: Vec<QoeModel>,
    pub slots: Vec<SlotRecord>,
    pub demands: Vec<DemandRow>,
    pub slices: Vec<SliceRow>,
    pub windows: Vec<WindowMetric>,
    /// Period-end QoE samples of the evaluation.
    pub realtime_qoe: Vec<f64>,
    pub violations: u64,
    pub model_updates: usize,
    pub games: Vec<GameReport>,
    /// Mean epoch reward per training window.
    pub training_rewards: Vec<f64>,
}

impl SeedRun {
    pub fn mean_ela_ratio(&self) -> f64 {
        let n = self.windows.len().max(1) as f64;
        self.windows.iter().map(|w| w.ela_ratio).sum::<f64>() / n
    }
}

/// Random skewed allocations used while profiling users.
struct Profiler {
    rng: SimRng,
}

impl Orchestrator for Profiler {
    fn allocate(&mut self, view: &SlotView<'_>, slices: &SliceConfig) -> Result<Vec<Allocation>> {
        let n = view.users.len();
        let w: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let a = open_uniform(&mut self.rng);
                let b = open_uniform(&mut self.rng);
                (a * a * a, b * b * b)
            })
            .collect();
        let mut out = alloc::vec![Allocation::default(); n];
        for b in 0..view.cfg.base_stations.len() {
            let total: f64 = (0..n).filter(|&i| view.users[i].serving_bs == b).map(|i| w[i].0).sum();
            for i in (0..n).filter(|&i| view.users[i].serving_bs == b) {
                out[i].bandwidth = slices.bandwidth_pool(b) * w[i].0 / total;
            }
        }
        let total: f64 = w.iter().map(|x| x.1).sum();
        for (a, x) in out.iter_mut().zip(&w) {
            a.compute = slices.compute_pool() * x.1 / total;
        }
        Ok(out)
    }
}

fn full_slices(cfg: &ScenarioConfig, groups: &[u32]) -> SliceConfig {
    let mut s = SliceConfig::uniform(groups, cfg.base_stations.len(), 0.0, 0.0, cfg.slicing.fixed_window_min);
    if let Some(&g) = groups.first() {
        for (b, bs) in cfg.base_stations.iter().enumerate() {
            s.bandwidth.insert((g, b), bs.dl_bandwidth_hz);
        }
        s.compute.insert(g, cfg.edge.capacity);
    }
    s
}

fn samples_of(records: &[SlotRecord], user: u32) -> Vec<FactorSample> {
    records
        .iter()
        .filter(|r| r.user == user)
        .map(|r| FactorSample {
            qoe: r.qoe_sample,
            rebuffer: r.rebuffer,
            quality: r.quality,
            behavior: r.behavior,
            complexity: r.complexity,
        })
        .collect()
}

/// Structure identification and fitting with graceful fallbacks.
pub fn fit_user(samples: &[FactorSample]) -> QoeModel {
    identify_structure(samples, FACTOR_THRESHOLD)
        .or_else(|_| fit_model(Structure::Combined.index(), samples))
        .map(|r| r.model)
        .unwrap_or_else(|_| QoeModel::new(Structure::Combined, Impact::NEUTRAL))
}

/// Profiles every user under random allocations and fits its QoE model.
pub fn profile_users(cfg: &ScenarioConfig, profiles: &[UserProfile], seed: u64) -> Result<Vec<QoeModel>> {
    let mut sim = Simulator::new(cfg.clone(), profiles.to_vec(), TrafficLanes::new(seed, PROFILING_PHASE));
    let slices = full_slices(cfg, &[0]);
    let mut prof = Profiler { rng: lane(seed, Lane::Profiling) };
    let recs = run_window(&mut sim, &slices, &mut prof, u64::from(cfg.training.profiling_slots))?;
    Ok(profiles.iter().map(|p| fit_user(&samples_of(&recs, p.id))).collect())
}

fn agent_config(cfg: &ScenarioConfig) -> AgentConfig {
    let t = &cfg.training;
    AgentConfig {
        learning_rate: t.learning_rate,
        gamma: t.gamma,
        epsilon_start: t.epsilon_start,
        epsilon_end: t.epsilon_end,
        epsilon_decay_episodes: round(f64::from(t.epochs) * t.epsilon_decay_fraction) as u32,
        replay_capacity: t.replay_capacity,
        batch_size: t.batch_size,
        target_sync_steps: t.target_sync_steps,
        updates_per_step: t.updates_per_epoch,
    }
}

enum LevelOneImpl {
    Da(LevelOne),
    RoundRobin(RoundRobin),
    Pdrl(PdrlOrchestrator),
}

impl LevelOneImpl {
    fn set_plans(&mut self, plans: Vec<UserPlan>) {
        match self {
            LevelOneImpl::Da(o) => o.set_plans(plans),
            LevelOneImpl::Pdrl(o) => o.set_plans(plans),
            LevelOneImpl::RoundRobin(_) => {}
        }
    }

    fn set_epsilon(&mut self, eps: f64) {
        match self {
            LevelOneImpl::Da(o) => {
                if let Some(l) = o.learner_mut() {
                    l.epsilon = eps;
                }
            }
            LevelOneImpl::Pdrl(o) => {
                if let Some(l) = o.learner_mut() {
                    l.epsilon = eps;
                }
            }
            LevelOneImpl::RoundRobin(_) => {}
        }
    }

    fn take_rewards(&mut self, from: &mut usize) -> Vec<f64> {
        let all: Vec<f64> = match self {
            LevelOneImpl::Da(o) => o.feedback().iter().map(|f| f.reward).collect(),
            LevelOneImpl::Pdrl(o) => o.rewards().to_vec(),
            LevelOneImpl::RoundRobin(_) => Vec::new(),
        };
        let out = all[(*from).min(all.len())..].to_vec();
        *from = all.len();
        out
    }
}

impl Orchestrator for LevelOneImpl {
    fn allocate(&mut self, view: &SlotView<'_>, slices: &SliceConfig) -> Result<Vec<Allocation>> {
        match self {
            LevelOneImpl::Da(o) => o.allocate(view, slices),
            LevelOneImpl::RoundRobin(o) => o.allocate(view, slices),
            LevelOneImpl::Pdrl(o) => o.allocate(view, slices),
        }
    }

    fn observe(&mut self, view: &SlotView<'_>, records: &[SlotRecord]) -> Result<()> {
        match self {
            LevelOneImpl::Da(o) => o.observe(view, records),
            LevelOneImpl::RoundRobin(o) => o.observe(view, records),
            LevelOneImpl::Pdrl(o) => o.observe(view, records),
        }
    }
}

/// Level-two decisions for one window.
struct WindowPlan {
    window_min: u32,
    slots: u64,
    slices: SliceConfig,
    demands: Vec<ResourceDemand>,
    plans: Vec<UserPlan>,
    game: Option<GameReport>,
}

/// Decision-side state shared by the training and evaluation phases.
struct Planner<'a> {
    cfg: &'a ScenarioConfig,
    scheme: SchemeId,
    profiles: &'a [UserProfile],
    /// Models the digital agents hold.
    models: Vec<QoeModel>,
    groups: Vec<u32>,
    emulation: SimRng,
}

impl Planner<'_> {
    fn plan(&mut self, sim: &Simulator, remaining: u64) -> Result<WindowPlan> {
        let cfg = self.cfg;
        let t0 = sim.now();
        let views = sim.view();
        let params = EmulationParams::from_config(cfg);
        let window_min = if self.scheme.adaptive_slicing() {
            let horizon = cfg.slicing.dynamics_horizon_slots.max(2) as usize;
            let traces: Vec<ContextTrace> =
                self.profiles.iter().map(|p| emulate_context(p, t0, horizon, &params, &mut self.emulation)).collect();
            dynamics_to_window(dynamics_score(&traces), &cfg.slicing.dynamics_thresholds, &cfg.slicing.window_minutes)
        } else {
            cfg.slicing.fixed_window_min
        };
        let slots = (round(f64::from(window_min) * 60.0 / cfg.slot) as u64).clamp(1, remaining.max(1));
        let limits = DemandLimits::from_config(cfg);
        let dmodels = demand_models(self.scheme, &self.models, self.profiles);
        let mut demands = Vec::with_capacity(self.profiles.len());
        for (i, p) in self.profiles.iter().enumerate() {
            let v = &views[i];
            let (trace, stats) = if self.scheme.adaptive_slicing() {
                let tr = emulate_context(p, t0, slots as usize, &params, &mut self.emulation);
                let st = ChannelStats::along(&tr.positions, cfg);
                (tr, st)
            } else {
                (
                    ContextTrace::single(v.behavior, v.complexity, v.position),
                    ChannelStats::fixed(cfg.base_stations.len(), v.serving_bs, v.spectral_efficiency),
                )
            };
            demands.push(predict_demand(
                p.id,
                &dmodels[i],
                p.ela,
                &trace,
                &cfg.catalog,
                &stats,
                &limits,
                slots as f64 * cfg.slot,
            ));
        }
        let memberships: BTreeMap<u32, u32> = self.profiles.iter().zip(&self.groups).map(|(p, g)| (p.id, *g)).collect();
        let quanta = Quanta::from_config(cfg);
        let caps = Capacities::from_config(cfg);
        let dist = abstract_demand(&demands, &memberships, cfg.base_stations.len(), (quanta.bandwidth, quanta.compute))?;
        let mut slices = greedy_slice(&dist, &caps, quanta, window_min);
        let scarce = (0..caps.bandwidth.len()).any(|b| dist.bandwidth_demand(b) > caps.bandwidth[b])
            || dist.compute_demand() > caps.compute;
        let mut game = None;
        if self.scheme.adaptive_slicing() && scarce {
            let (adjusted, report) =
                best_response_adjust(&slices, &dist, &caps, quanta, cfg.slicing.price, cfg.slicing.game_max_iters);
            slices = adjusted;
            game = Some(report);
        }
        let plans = self
            .profiles
            .iter()
            .zip(&self.models)
            .zip(&demands)
            .map(|((p, m), d)| UserPlan { model: m.clone(), ela: p.ela, tier: d.tier })
            .collect();
        Ok(WindowPlan { window_min, slots, slices, demands, plans, game })
    }
}

fn epsilon_for(cfg: &AgentConfig, epoch: u64) -> f64 {
    crate::learn::epsilon_at(cfg, epoch.min(u64::from(u32::MAX)) as u32)
}

fn build_level_one(
    cfg: &ScenarioConfig,
    scheme: SchemeId,
    n: usize,
    policies: &TrainedPolicies,
) -> Result<LevelOneImpl> {
    Ok(match scheme {
        SchemeId::WoDa => LevelOneImpl::RoundRobin(RoundRobin {
            bw_quantum: cfg.orchestration.rr_bw_quantum_hz,
            cpu_quantum: cfg.orchestration.rr_cpu_quantum,
        }),
        SchemeId::Proposed | SchemeId::HslaL2 => LevelOneImpl::Da(LevelOne::new(cfg, Vec::new(), policies.group.clone())),
        SchemeId::PdrlL1 => {
            let net = policies.pdrl.clone().ok_or(Error::Config("missing PDRL policy".into()))?;
            let placeholder = alloc::vec![
                UserPlan { model: QoeModel::new(Structure::Combined, Impact::NEUTRAL), ela: 3.0, tier: 0 };
                n
            ];
            LevelOneImpl::Pdrl(PdrlOrchestrator::new(
                net,
                placeholder,
                cfg.orchestration.epoch_slots,
                cfg.orchestration.shortfall_weight,
            )?)
        }
    })
}

/// Trains the learned policy of a scheme on the training lanes.
fn train(
    cfg: &ScenarioConfig,
    scheme: SchemeId,
    seed: u64,
    profiles: &[UserProfile],
    models: &[QoeModel],
    groups: &[u32],
) -> Result<(TrainedPolicies, Vec<f64>)> {
    let acfg = agent_config(cfg);
    let mut init = training_lane(seed, Lane::Exploration);
    let explore = lane_rng(seed, TRAINING_PHASE + 2 * Lane::Exploration as u64);
    let hidden = cfg.training.hidden_width;
    let mut l1 = match scheme {
        SchemeId::WoDa => return Ok((TrainedPolicies::default(), Vec::new())),
        SchemeId::Proposed | SchemeId::HslaL2 => {
            let keys: Vec<u32> = match cfg.orchestration.policy_sharing {
                GroupPolicySharing::Shared => alloc::vec![0],
                GroupPolicySharing::PerGroup => alloc::vec![1, 2, 3],
            };
            let mut nets = BTreeMap::new();
            let mut agents = BTreeMap::new();
            for k in keys {
                let net = BdqNetwork::new(&[GROUP_STATE_DIM, hidden, hidden], GROUP_BRANCHES, SHARE_LEVELS, &mut init);
                agents.insert(k, Agent::new(net.clone(), acfg));
                nets.insert(k, net);
            }
            let pol = GroupPolicies { sharing: cfg.orchestration.policy_sharing, nets };
            let learner = GroupLearner {
                agents,
                epsilon: acfg.epsilon_start,
                updates_per_epoch: cfg.training.updates_per_epoch,
                rng: explore,
            };
            LevelOneImpl::Da(LevelOne::new(cfg, Vec::new(), Some(pol)).with_learner(learner))
        }
        SchemeId::PdrlL1 => {
            let net = pdrl_network(profiles.len(), hidden, &mut init);
            let learner = PdrlLearner {
                agent: Agent::new(net.clone(), acfg),
                epsilon: acfg.epsilon_start,
                updates_per_epoch: cfg.training.updates_per_epoch,
                rng: explore,
            };
            let placeholder = alloc::vec![
                UserPlan { model: QoeModel::new(Structure::Combined, Impact::NEUTRAL), ela: 3.0, tier: 0 };
                profiles.len()
            ];
            LevelOneImpl::Pdrl(
                PdrlOrchestrator::new(net, placeholder, cfg.orchestration.epoch_slots, cfg.orchestration.shortfall_weight)?
                    .with_learner(learner),
            )
        }
    };
    let epoch = u64::from(cfg.orchestration.epoch_slots.max(1));
    let total = u64::from(cfg.training.epochs) * epoch;
    let mut sim = Simulator::new(cfg.clone(), profiles.to_vec(), TrafficLanes::new(seed, TRAINING_PHASE));
    sim.set_groups(groups.to_vec())?;
    let mut planner = Planner {
        cfg,
        scheme,
        profiles,
        models: models.to_vec(),
        groups: groups.to_vec(),
        emulation: training_lane(seed, Lane::Emulation),
    };
    let mut curve = Vec::new();
    let mut seen = 0;
    while sim.now() < total {
        let plan = planner.plan(&sim, total - sim.now())?;
        l1.set_plans(plan.plans);
        let end = sim.now() + plan.slots;
        while sim.now() < end {
            l1.set_epsilon(epsilon_for(&acfg, sim.now() / epoch));
            let chunk = (epoch - sim.now() % epoch).min(end - sim.now());
            run_window(&mut sim, &plan.slices, &mut l1, chunk)?;
        }
        let r = l1.take_rewards(&mut seen);
        if !r.is_empty() {
            curve.push(r.iter().sum::<f64>() / r.len() as f64);
        }
    }
    let policies = match l1 {
        LevelOneImpl::Da(mut o) => {
            o.flush()?;
            let learner = o.into_learner().expect("training learner");
            let nets = learner.agents.into_iter().map(|(k, a)| (k, a.online)).collect();
            TrainedPolicies { group: Some(GroupPolicies { sharing: cfg.orchestration.policy_sharing, nets }), pdrl: None }
        }
        LevelOneImpl::Pdrl(o) => TrainedPolicies { group: None, pdrl: Some(o.into_parts().0) },
        LevelOneImpl::RoundRobin(_) => TrainedPolicies::default(),
    };
    Ok((policies, curve))
}

/// Full run of one scheme under one seed: profiling, training (unless
/// `policies` are supplied) and the frozen evaluation.
pub fn run_seed(
    cfg: &ScenarioConfig,
    scheme: SchemeId,
    seed: u64,
    policies: Option<&TrainedPolicies>,
) -> Result<(SeedRun, TrainedPolicies)> {
    cfg.validate()?;
    let profiles = sample_users(cfg, &mut lane(seed, Lane::Population));
    let models = if scheme == SchemeId::WoDa {
        alloc::vec![crate::bench::general_model(&profiles); profiles.len()]
    } else {
        profile_users(cfg, &profiles, seed)?
    };
    let groups: Vec<u32> = if scheme == SchemeId::WoDa {
        alloc::vec![0; profiles.len()]
    } else {
        let mut g = alloc::vec![0; profiles.len()];
        for (s, members) in cluster_users(&models) {
            for i in members {
                g[i] = u32::from(s);
            }
        }
        g
    };
    let (trained, training_rewards) = match policies {
        Some(p) => (p.clone(), Vec::new()),
        None => train(cfg, scheme, seed, &profiles, &models, &groups)?,
    };

    let mut l1 = build_level_one(cfg, scheme, profiles.len(), &trained)?;
    let mut sim = Simulator::new(cfg.clone(), profiles.clone(), TrafficLanes::new(seed, EVAL_PHASE));
    sim.set_groups(groups.clone())?;
    let mut planner = Planner {
        cfg,
        scheme,
        profiles: &profiles,
        models,
        groups: groups.clone(),
        emulation: lane(seed, Lane::Emulation),
    };
    let total = cfg.eval_slots();
    let mut run = SeedRun {
        scheme,
        seed,
        profiles: profiles.clone(),
        models: Vec::new(),
        slots: Vec::with_capacity(total as usize * profiles.len()),
        demands: Vec::new(),
        slices: Vec::new(),
        windows: Vec::new(),
        realtime_qoe: Vec::new(),
        violations: 0,
        model_updates: 0,
        games: Vec::new(),
        training_rewards,
    };
    let mut window = 0;
    while sim.now() < total {
        let start = sim.now();
        let plan = planner.plan(&sim, total - start)?;
        l1.set_plans(plan.plans);
        let records = run_window(&mut sim, &plan.slices, &mut l1, plan.slots)?;

        for (d, g) in plan.demands.iter().zip(&groups) {
            run.demands.push(DemandRow {
                window,
                user: d.user,
                group: *g,
                bandwidth: d.bandwidth,
                compute: d.compute,
                feasible: d.feasible,
                tier: d.tier,
            });
        }
        let mech: &'static str = plan.slices.mechanism.name();
        for (&(g, b), &bw) in &plan.slices.bandwidth {
            run.slices.push(SliceRow {
                window,
                window_min: plan.window_min,
                group: g,
                bs: cfg.base_stations[b].id,
                bandwidth: bw,
                compute: plan.slices.compute_of(g),
                mechanism: mech,
            });
        }
        let user_qoe = window_user_qoe(&records, &profiles)?;
        run.windows.push(WindowMetric {
            window,
            start_slot: start,
            slots: plan.slots,
            window_min: plan.window_min,
            ela_ratio: ratio_from_means(&user_qoe, &profiles),
            user_qoe,
        });
        run.realtime_qoe.extend(records.iter().filter(|r| r.period_end).map(|r| r.qoe_sample));
        if let Some(g) = plan.game {
            run.games.push(g);
        }
        if scheme != SchemeId::WoDa {
            for (i, p) in profiles.iter().enumerate() {
                let recent = samples_of(&records, p.id);
                let model = &planner.models[i];
                if should_update(model, &recent, cfg.orchestration.update_tolerance) {
                    if let Ok(r) = fit_model(model.structure_index(), &recent) {
                        planner.models[i] = r.model;
                        run.model_updates += 1;
                    }
                }
            }
        }
        run.slots.extend(records);
        window += 1;
    }
    run.violations = sim.violations();
    run.models = planner.models;
    Ok((run, trained))
}

/// Aggregate of one scheme over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: SchemeId,
    pub users: usize,
    pub seeds: Vec<u64>,
    /// Mean window ELA ratio of each seed.
    pub ela_ratio_by_seed: Vec<f64>,
    pub mean_ela_ratio: f64,
    /// CDF of window ELA ratios pooled over seeds.
    pub ela_ratio_cdf: Vec<(f64, f64)>,
    /// Box statistics of the pooled real-time QoE.
    pub qoe_box: BoxStats,
    pub windows: usize,
    pub violations: u64,
    pub model_updates: usize,
}

pub fn summarize(runs: &[SeedRun]) -> Result<SchemeSummary> {
    let first = runs.first().ok_or(Error::EmptyInput)?;
    let by_seed: Vec<f64> = runs.iter().map(SeedRun::mean_ela_ratio).collect();
    let ratios: Vec<f64> = runs.iter().flat_map(|r| r.windows.iter().map(|w| w.ela_ratio)).collect();
    let qoe: Vec<f64> = runs.iter().flat_map(|r| r.realtime_qoe.iter().copied()).collect();
    Ok(SchemeSummary {
        scheme: first.scheme,
        users: first.profiles.len(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        mean_ela_ratio: by_seed.iter().sum::<f64>() / by_seed.len() as f64,
        ela_ratio_by_seed: by_seed,
        ela_ratio_cdf: cdf_points(&ratios)?,
        qoe_box: box_stats(&qoe)?,
        windows: ratios.len(),
        violations: runs.iter().map(|r| r.violations).sum(),
        model_updates: runs.iter().map(|r| r.model_updates).sum(),
    })
}

/// Runs every seed in order.
pub fn run_experiment(cfg: &ScenarioConfig, scheme: SchemeId, seeds: &[u64]) -> Result<Vec<SeedRun>> {
    seeds.iter().map(|&s| run_seed(cfg, scheme, s, None).map(|r| r.0)).collect()
}
