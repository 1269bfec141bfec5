use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::channel::{median_path_loss, open_uniform, snr_linear, standard_normal, achievable_rate};
use super::context::behavior_env_trace;
use super::playback::{select_level, step_playback};
use crate::da2::SliceConfig;
use crate::error::{Error, Result};
use crate::math::{exp, hypot, log2};
use crate::qoe::{mos_sample, Impact};
use crate::rng::{lane_rng, Lane, SimRng};
use crate::scenario::{BaseStation, ScenarioConfig, UserProfile};

/// Relative slack allowed when checking allocations against reservations.
const CONSERVATION_SLACK: f64 = 1e-9;

/// Outcome for one user in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: u64,
    pub user: u32,
    pub serving_bs: u32,
    /// bit/s
    pub rate: f64,
    pub allocated_bw: f64,
    pub allocated_compute: f64,
    pub buffer: f64,
    /// Stall seconds accumulated in the current QoE period.
    pub rebuffer: f64,
    pub quality: f64,
    pub behavior: f64,
    pub complexity: f64,
    pub qoe_sample: f64,
    /// Last slot of a QoE period.
    pub period_end: bool,
}

/// Per-user resources for one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Allocation {
    pub bandwidth: f64,
    pub compute: f64,
}

/// What an orchestrator can observe about a user at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserView {
    pub user: u32,
    pub group: u32,
    /// Index into the scenario's base stations.
    pub serving_bs: usize,
    pub position: (f64, f64),
    /// Spectral efficiency at the median path loss, bit/s/Hz.
    pub spectral_efficiency: f64,
    pub buffer: f64,
    pub level: usize,
    pub quality: f64,
    pub behavior: f64,
    pub complexity: f64,
    pub rate_estimate: f64,
}

pub struct SlotView<'a> {
    pub t: u64,
    pub cfg: &'a ScenarioConfig,
    pub profiles: &'a [UserProfile],
    pub users: &'a [UserView],
}

/// Per-slot allocation strategy driven by [`run_window`].
pub trait Orchestrator {
    /// One allocation per user, in view order.
    fn allocate(&mut self, view: &SlotView<'_>, slices: &SliceConfig) -> Result<Vec<Allocation>>;

    /// Called with the records of every simulated slot.
    fn observe(&mut self, _view: &SlotView<'_>, _records: &[SlotRecord]) -> Result<()> {
        Ok(())
    }
}

/// Traffic, channel and rating randomness of one simulation.
#[derive(Debug, Clone)]
pub struct TrafficLanes {
    pub swipes: SimRng,
    pub shadowing: SimRng,
    pub mos: SimRng,
}

impl TrafficLanes {
    /// Lanes for a run; `phase` separates evaluation (0) from other phases.
    pub fn new(seed: u64, phase: u64) -> Self {
        let at = |l: Lane| lane_rng(seed, phase + l as u64);
        Self { swipes: at(Lane::Swipes), shadowing: at(Lane::Shadowing), mos: at(Lane::Mos) }
    }
}

#[derive(Debug, Clone, Default)]
struct UserState {
    buffer: f64,
    level: usize,
    rate_estimate: f64,
    period_rebuffer: f64,
}

/// Index of the station with the smallest median path loss; ties go to the
/// lower index.
pub fn serving_station(stations: &[BaseStation], position: (f64, f64), cfg: &ScenarioConfig) -> usize {
    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for (i, bs) in stations.iter().enumerate() {
        let d = hypot(position.0 - bs.position.0, position.1 - bs.position.1);
        let loss = median_path_loss(d, &cfg.channel);
        if loss < best_loss {
            best_loss = loss;
            best = i;
        }
    }
    best
}

/// Simulation state that persists across slicing windows.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: ScenarioConfig,
    profiles: Vec<UserProfile>,
    groups: Vec<u32>,
    users: Vec<UserState>,
    t: u64,
    lanes: TrafficLanes,
    violations: u64,
}

impl Simulator {
    pub fn new(cfg: ScenarioConfig, profiles: Vec<UserProfile>, lanes: TrafficLanes) -> Self {
        let n = profiles.len();
        Self { cfg, profiles, groups: alloc::vec![0; n], users: alloc::vec![UserState::default(); n], t: 0, lanes, violations: 0 }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn profiles(&self) -> &[UserProfile] {
        &self.profiles
    }

    /// Current slot index.
    pub fn now(&self) -> u64 {
        self.t
    }

    pub fn time_seconds(&self) -> f64 {
        self.t as f64 * self.cfg.slot
    }

    /// Number of slots in which an allocation exceeded a reservation or a
    /// reservation exceeded a capacity.
    pub fn violations(&self) -> u64 {
        self.violations
    }

    pub fn groups(&self) -> &[u32] {
        &self.groups
    }

    /// Sets the group label of every user (one entry per profile).
    pub fn set_groups(&mut self, groups: Vec<u32>) -> Result<()> {
        if groups.len() != self.profiles.len() {
            return Err(Error::LengthMismatch { left: groups.len(), right: self.profiles.len() });
        }
        self.groups = groups;
        Ok(())
    }

    /// Observable state at the start of the current slot.
    pub fn view(&self) -> Vec<UserView> {
        let t = self.time_seconds();
        let cfg = &self.cfg;
        self.profiles
            .iter()
            .zip(&self.users)
            .zip(&self.groups)
            .map(|((p, s), &group)| {
                let position = p.position(t);
                let bs_idx = serving_station(&cfg.base_stations, position, cfg);
                let bs = &cfg.base_stations[bs_idx];
                let d = hypot(position.0 - bs.position.0, position.1 - bs.position.1);
                let se = log2(1.0 + snr_linear(bs, median_path_loss(d, &cfg.channel), &cfg.channel));
                let (behavior, complexity) =
                    behavior_env_trace(p, t, cfg.max_swipe_rate(), cfg.orchestration.complexity_sign);
                UserView {
                    user: p.id,
                    group,
                    serving_bs: bs_idx,
                    position,
                    spectral_efficiency: se,
                    buffer: s.buffer,
                    level: s.level,
                    quality: cfg.catalog.level_quality(s.level),
                    behavior,
                    complexity,
                    rate_estimate: s.rate_estimate,
                }
            })
            .collect()
    }

    fn check_slices(&self, views: &[UserView], slices: &SliceConfig) -> Result<()> {
        for v in views {
            if !slices.covers(v.group, v.serving_bs) {
                return Err(Error::Config(alloc::format!(
                    "slice configuration has no entry for group {} at base station {}",
                    v.group, self.cfg.base_stations[v.serving_bs].id
                )));
            }
        }
        Ok(())
    }

    fn conserved(&self, views: &[UserView], alloc: &[Allocation], slices: &SliceConfig) -> bool {
        let within = |used: f64, limit: f64| used <= limit * (1.0 + CONSERVATION_SLACK) + CONSERVATION_SLACK;
        let mut ok = alloc.iter().all(|a| a.bandwidth >= 0.0 && a.compute >= 0.0);
        for (b, bs) in self.cfg.base_stations.iter().enumerate() {
            let used: f64 = views.iter().zip(alloc).filter(|(v, _)| v.serving_bs == b).map(|(_, a)| a.bandwidth).sum();
            let pool = slices.bandwidth_pool(b);
            ok &= within(used, pool) && within(pool, bs.dl_bandwidth_hz);
        }
        let used: f64 = alloc.iter().map(|a| a.compute).sum();
        let pool = slices.compute_pool();
        ok && within(used, pool) && within(pool, self.cfg.edge.capacity)
    }

    /// Simulates one slot with the given allocations.
    pub fn step(&mut self, views: &[UserView], alloc: &[Allocation], slices: &SliceConfig) -> Result<Vec<SlotRecord>> {
        if alloc.len() != self.profiles.len() {
            return Err(Error::LengthMismatch { left: alloc.len(), right: self.profiles.len() });
        }
        self.check_slices(views, slices)?;
        if !self.conserved(views, alloc, slices) {
            self.violations += 1;
        }
        let cfg = &self.cfg;
        let slot = cfg.slot;
        let t_sec = self.time_seconds();
        let period = u64::from(cfg.playback.qoe_period_slots.max(1));
        let period_end = (self.t + 1) % period == 0;
        let mut out = Vec::with_capacity(self.profiles.len());
        for (i, (p, v)) in self.profiles.iter().zip(views).enumerate() {
            // Fixed draw counts per user-slot keep every scheme on the same
            // random streams.
            let swipe_u = open_uniform(&mut self.lanes.swipes);
            let mut shadow = 0.0;
            for b in 0..cfg.base_stations.len() {
                let z = standard_normal(&mut self.lanes.shadowing);
                if b == v.serving_bs {
                    shadow = cfg.channel.shadowing_sigma_db * z;
                }
            }
            let s = &mut self.users[i];
            let requests = p.swipe.rate(t_sec) / 60.0 * slot;
            if swipe_u < 1.0 - exp(-requests) {
                // A new video replaces whatever was prefetched.
                s.buffer = 0.0;
            }
            let bs = &cfg.base_stations[v.serving_bs];
            let d = hypot(v.position.0 - bs.position.0, v.position.1 - bs.position.1);
            let snr = snr_linear(bs, median_path_loss(d, &cfg.channel) + shadow, &cfg.channel);
            let a = alloc[i];
            let rate = achievable_rate(a.bandwidth, snr);
            let level = select_level(&cfg.catalog, s.rate_estimate, a.compute, cfg.playback.abr_safety);
            let quality = cfg.catalog.level_quality(level);
            let bitrate = cfg.catalog.quality_levels[level];
            let cost = cfg.catalog.compute_cost(quality);
            let room = (cfg.playback.max_buffer_s - s.buffer + slot).max(0.0);
            let downloaded = (rate * slot / bitrate)
                .min(a.compute * slot / cost)
                .min(slot + cfg.catalog.segment_duration)
                .min(room);
            let (buffer, stall) = step_playback(s.buffer, downloaded, slot, cfg.playback.max_buffer_s);
            s.buffer = buffer;
            s.level = level;
            s.period_rebuffer += stall;
            let w = cfg.playback.rate_ewma;
            s.rate_estimate = w * rate + (1.0 - w) * s.rate_estimate;
            let qoe = mos_sample(
                p.structure_index,
                s.period_rebuffer,
                quality,
                v.behavior,
                v.complexity,
                Impact::from(p.true_impact),
                &mut self.lanes.mos,
            )?;
            out.push(SlotRecord {
                t: self.t,
                user: p.id,
                serving_bs: bs.id,
                rate,
                allocated_bw: a.bandwidth,
                allocated_compute: a.compute,
                buffer,
                rebuffer: s.period_rebuffer,
                quality,
                behavior: v.behavior,
                complexity: v.complexity,
                qoe_sample: qoe,
                period_end,
            });
            if period_end {
                s.period_rebuffer = 0.0;
            }
        }
        self.t += 1;
        Ok(out)
    }
}

/// Runs `slots` slots under one slice configuration.
pub fn run_window(
    sim: &mut Simulator,
    slices: &SliceConfig,
    orchestrator: &mut dyn Orchestrator,
    slots: u64,
) -> Result<Vec<SlotRecord>> {
    let mut records = Vec::with_capacity(slots as usize * sim.profiles.len());
    for _ in 0..slots {
        let views = sim.view();
        sim.check_slices(&views, slices)?;
        let view = SlotView { t: sim.t, cfg: &sim.cfg, profiles: &sim.profiles, users: &views };
        let alloc = orchestrator.allocate(&view, slices)?;
        let recs = sim.step(&views, &alloc, slices)?;
        let view = SlotView { t: sim.t - 1, cfg: &sim.cfg, profiles: &sim.profiles, users: &views };
        orchestrator.observe(&view, &recs)?;
        records.extend(recs);
    }
    Ok(records)
}
