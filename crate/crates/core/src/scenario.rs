//! Domain entities and experiment configuration.
//!
//! Defaults reproduce the video-streaming campus case: two base stations in
//! the 700 MHz band, one 10 GCycles/s edge server, 16 users and a catalog
//! spanning 0.5 to 3 Mbit/s.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Population sizes accepted in [`Mode::Standard`].
pub const STANDARD_USER_COUNTS: [usize; 5] = [16, 18, 20, 22, 24];
pub const SPEED_MIN_KMH: f64 = 2.0;
pub const SPEED_MAX_KMH: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Population size restricted to the replication presets.
    Standard,
    /// Any population size.
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: u32,
    /// Position in meters.
    pub position: (f64, f64),
    /// Downlink bandwidth in Hz.
    pub dl_bandwidth_hz: f64,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeServer {
    /// Cycles per second.
    pub capacity: f64,
}

impl Default for EdgeServer {
    fn default() -> Self {
        Self { capacity: 10e9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VideoCatalog {
    /// Bitrate ladder in bit/s, strictly increasing.
    pub quality_levels: Vec<f64>,
    /// Seconds of video per segment.
    pub segment_duration: f64,
    /// Transcoding cost `(c0, c1)` in GCycles per video-second; a level of
    /// normalised quality `q` costs `c0 + c1 * q`.
    pub compute_cost_coeffs: (f64, f64),
}

impl Default for VideoCatalog {
    fn default() -> Self {
        Self {
            quality_levels: (0..=10).map(|i| 500e3 + 250e3 * i as f64).collect(),
            segment_duration: 2.0,
            compute_cost_coeffs: (0.1, 0.4),
        }
    }
}

impl VideoCatalog {
    pub fn min_bitrate(&self) -> f64 {
        self.quality_levels[0]
    }

    pub fn max_bitrate(&self) -> f64 {
        self.quality_levels[self.quality_levels.len() - 1]
    }

    /// Normalised quality `Q in [0, 1]` of a bitrate.
    pub fn quality_of(&self, bitrate: f64) -> f64 {
        let (lo, hi) = (self.min_bitrate(), self.max_bitrate());
        ((bitrate - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn level_quality(&self, level: usize) -> f64 {
        self.quality_of(self.quality_levels[level])
    }

    /// Transcoding demand in cycles per second of real-time playback.
    pub fn compute_cost(&self, quality: f64) -> f64 {
        (self.compute_cost_coeffs.0 + self.compute_cost_coeffs.1 * quality) * 1e9
    }

    pub fn levels(&self) -> usize {
        self.quality_levels.len()
    }
}

/// How a user's swipe rate moves over time: `mean + amplitude * sin(2 pi t / period)`
/// requests per minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwipeProcess {
    pub mean: f64,
    pub amplitude: f64,
    /// Seconds.
    pub period: f64,
}

impl SwipeProcess {
    /// Requests per minute at time `t` seconds.
    pub fn rate(&self, t: f64) -> f64 {
        (self.mean + self.amplitude * math::sin(2.0 * PI * t / self.period)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: u32,
    /// Closed loop of waypoints in meters.
    pub waypoints: Vec<(f64, f64)>,
    /// Distance along the loop at `t = 0`, meters.
    pub path_offset: f64,
    pub speed_kmh: f64,
    pub swipe: SwipeProcess,
    /// Experience level agreement, MOS units.
    pub ela: f64,
    /// Ground-truth QoE structure, 1 (rebuffer), 2 (quality) or 3 (combined).
    pub structure_index: u8,
    /// Ground-truth impact parameters `(alpha, beta)`.
    pub true_impact: (f64, f64),
}

impl UserProfile {
    pub fn speed_mps(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    pub fn loop_length(&self) -> f64 {
        let n = self.waypoints.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.waypoints[i], self.waypoints[(i + 1) % n]);
                math::hypot(b.0 - a.0, b.1 - a.1)
            })
            .sum()
    }

    /// Position after `t` seconds of travel along the loop.
    pub fn position(&self, t: f64) -> (f64, f64) {
        let n = self.waypoints.len();
        if n == 1 {
            return self.waypoints[0];
        }
        let total = self.loop_length();
        if total <= 0.0 {
            return self.waypoints[0];
        }
        let mut s = (self.path_offset + self.speed_mps() * t) % total;
        for i in 0..n {
            let (a, b) = (self.waypoints[i], self.waypoints[(i + 1) % n]);
            let len = math::hypot(b.0 - a.0, b.1 - a.1);
            if s <= len && len > 0.0 {
                let f = s / len;
                return (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1));
            }
            s -= len;
        }
        self.waypoints[0]
    }

    pub fn validate(&self) -> Result<()> {
        if !(SPEED_MIN_KMH..=SPEED_MAX_KMH).contains(&self.speed_kmh) {
            return Err(Error::validation("speed", format!("{} outside [2, 40] km/h", self.speed_kmh)));
        }
        if !(3.0..=5.0).contains(&self.ela) {
            return Err(Error::validation("ela", format!("{} outside [3, 5]", self.ela)));
        }
        if !(1..=3).contains(&self.structure_index) {
            return Err(Error::validation("structure_index", format!("{}", self.structure_index)));
        }
        if !(self.true_impact.0 >= 0.0 && self.true_impact.1 >= 0.0) {
            return Err(Error::validation("true_impact", "must be nonnegative"));
        }
        if self.waypoints.is_empty() {
            return Err(Error::validation("waypoints", "empty path"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserSampling {
    /// Uniform speed range, km/h.
    pub speed_range_kmh: (f64, f64),
    /// Forces every user to this speed when set.
    pub speed: Option<f64>,
    pub ela_range: (f64, f64),
    /// Range of the ground-truth `alpha`, `beta`.
    pub impact_range: (f64, f64),
    /// Side lengths of the simulation region, meters.
    pub region: (f64, f64),
    /// Per-user mean swipe rate is `lambda * U[lo, hi]`.
    pub swipe_mean_factor: (f64, f64),
    /// Amplitude as a fraction of the user's mean rate, `U[0, max]`.
    pub swipe_amplitude_max: f64,
    pub swipe_period_range_s: (f64, f64),
    /// Minimum side of a rectangular path, meters.
    pub min_path_side: f64,
}

impl Default for UserSampling {
    fn default() -> Self {
        Self {
            speed_range_kmh: (SPEED_MIN_KMH, SPEED_MAX_KMH),
            speed: None,
            ela_range: (3.0, 5.0),
            impact_range: (0.2, 1.0),
            region: (1000.0, 1000.0),
            swipe_mean_factor: (0.5, 1.5),
            swipe_amplitude_max: 0.5,
            swipe_period_range_s: (60.0, 300.0),
            min_path_side: 100.0,
        }
    }
}

/// Sign of the speed to environmental-complexity mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexitySign {
    /// Faster users see a more complex environment.
    Positive,
    /// Faster users see a simpler environment.
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub path_loss_exponent: f64,
    /// Loss at the 1 m reference distance, dB.
    pub reference_loss_db: f64,
    pub shadowing_sigma_db: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        // Free-space loss at 1 m for a 700 MHz carrier.
        let wavelength = 299_792_458.0 / 700e6;
        Self {
            path_loss_exponent: 3.0,
            reference_loss_db: 20.0 * math::log10(4.0 * PI / wavelength),
            shadowing_sigma_db: 4.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 9.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaybackConfig {
    pub max_buffer_s: f64,
    /// ABR picks the highest level whose bitrate is below `safety * rate`.
    pub abr_safety: f64,
    /// Weight of the newest sample in the throughput estimate.
    pub rate_ewma: f64,
    /// Slots per QoE evaluation period; rebuffer time resets each period.
    pub qoe_period_slots: u32,
}

impl Default for PlaybackConfig {
    fn default() -> Self {
        Self { max_buffer_s: 30.0, abr_safety: 0.8, rate_ewma: 0.5, qoe_period_slots: 10 }
    }
}

/// Whether group agents share one network or own one each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupPolicySharing {
    Shared,
    PerGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestrationConfig {
    pub epoch_slots: u32,
    /// Weight of the ELA shortfall in the group reward.
    pub shortfall_weight: f64,
    pub solver_max_iters: usize,
    pub emulation_noise: f64,
    pub complexity_sign: ComplexitySign,
    pub policy_sharing: GroupPolicySharing,
    /// Round-robin quanta: Hz and cycles/s.
    pub rr_bw_quantum_hz: f64,
    pub rr_cpu_quantum: f64,
    /// Refit a user's model when its error on recent data exceeds this
    /// multiple of the fit error.
    pub update_tolerance: f64,
    /// Shadowing deviations subtracted from the median channel when sizing demand.
    pub fade_margin_sigma: f64,
}

impl Default for OrchestrationConfig {
    fn default() -> Self {
        Self {
            epoch_slots: 10,
            shortfall_weight: 2.0,
            solver_max_iters: 500,
            emulation_noise: 0.05,
            complexity_sign: ComplexitySign::Positive,
            policy_sharing: GroupPolicySharing::Shared,
            rr_bw_quantum_hz: 180e3,
            rr_cpu_quantum: 0.01e9,
            update_tolerance: 1.5,
            fade_margin_sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlicingConfig {
    pub bw_quantum_hz: f64,
    pub cpu_quantum: f64,
    /// MOS per reserved quantum in the slice-adjustment game.
    pub price: f64,
    pub game_max_iters: usize,
    /// Dynamics-score boundaries between the five window stages.
    pub dynamics_thresholds: [f64; 4],
    /// Window lengths in minutes, calmest stage first.
    pub window_minutes: [u32; 5],
    /// Window used by schemes without dynamics analysis, minutes.
    pub fixed_window_min: u32,
    /// Look-ahead of the dynamics analysis, slots.
    pub dynamics_horizon_slots: u32,
}

impl Default for SlicingConfig {
    fn default() -> Self {
        Self {
            bw_quantum_hz: 1e6,
            cpu_quantum: 0.5e9,
            price: 0.05,
            game_max_iters: 100,
            dynamics_thresholds: crate::da2::DEFAULT_DYNAMICS_THRESHOLDS,
            window_minutes: [15, 12, 9, 6, 3],
            fixed_window_min: 9,
            dynamics_horizon_slots: 180,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Orchestration epochs of policy training before evaluation.
    pub epochs: u32,
    /// Slots of randomised traffic used to fit the initial QoE models.
    pub profiling_slots: u32,
    pub hidden_width: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the epochs over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync_steps: u32,
    pub updates_per_epoch: u32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            profiling_slots: 1200,
            hidden_width: 64,
            learning_rate: 1e-3,
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.5,
            replay_capacity: 10_000,
            batch_size: 64,
            target_sync_steps: 200,
            updates_per_epoch: 2,
        }
    }
}

/// A complete experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub rng_seed: u64,
    pub num_users: usize,
    /// Video requests per minute per user.
    pub arrival_rate: f64,
    /// Evaluated simulation time, seconds.
    pub sim_duration: f64,
    /// Slot length, seconds.
    pub slot: f64,
    pub base_stations: Vec<BaseStation>,
    pub edge: EdgeServer,
    pub catalog: VideoCatalog,
    pub users: UserSampling,
    pub channel: ChannelConfig,
    pub playback: PlaybackConfig,
    pub orchestration: OrchestrationConfig,
    pub slicing: SlicingConfig,
    pub training: TrainingConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Standard,
            rng_seed: 0,
            num_users: 16,
            arrival_rate: 6.0,
            sim_duration: 1800.0,
            slot: 1.0,
            base_stations: alloc::vec![
                BaseStation { id: 0, position: (250.0, 500.0), dl_bandwidth_hz: 20e6, tx_power_dbm: 23.0 },
                BaseStation { id: 1, position: (750.0, 500.0), dl_bandwidth_hz: 20e6, tx_power_dbm: 23.0 },
            ],
            edge: EdgeServer::default(),
            catalog: VideoCatalog::default(),
            users: UserSampling::default(),
            channel: ChannelConfig::default(),
            playback: PlaybackConfig::default(),
            orchestration: OrchestrationConfig::default(),
            slicing: SlicingConfig::default(),
            training: TrainingConfig::default(),
        }
    }
}

fn check(cond: bool, field: &str, reason: impl Into<alloc::string::String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::validation(field, reason))
    }
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v.is_finite() && v >= lo && v <= hi
}

impl ScenarioConfig {
    /// Checks every invariant; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        check(self.num_users >= 1, "num_users", "need at least one user")?;
        if self.mode == Mode::Standard {
            check(
                STANDARD_USER_COUNTS.contains(&self.num_users),
                "num_users",
                format!("{} not in {{16,18,20,22,24}}; use mode = \"free\"", self.num_users),
            )?;
        }
        check(self.arrival_rate > 0.0 && self.arrival_rate.is_finite(), "arrival_rate", "must be > 0")?;
        check(self.slot > 0.0 && self.slot.is_finite(), "slot", "must be > 0")?;
        check(self.sim_duration >= self.slot, "sim_duration", "shorter than one slot")?;

        check(!self.base_stations.is_empty(), "base_stations", "need at least one base station")?;
        for (i, bs) in self.base_stations.iter().enumerate() {
            check(bs.dl_bandwidth_hz > 0.0 && bs.dl_bandwidth_hz.is_finite(), "base_stations.dl_bandwidth_hz", "must be > 0")?;
            check(bs.tx_power_dbm.is_finite(), "base_stations.tx_power_dbm", "must be finite")?;
            check(
                self.base_stations[..i].iter().all(|o| o.id != bs.id),
                "base_stations.id",
                format!("duplicate id {}", bs.id),
            )?;
        }
        check(self.edge.capacity > 0.0 && self.edge.capacity.is_finite(), "edge.capacity", "must be > 0")?;

        let levels = &self.catalog.quality_levels;
        check(levels.len() >= 2, "catalog.quality_levels", "need at least two levels")?;
        check(levels.windows(2).all(|w| w[1] > w[0]), "catalog.quality_levels", "must be strictly increasing")?;
        check(levels[0] == 500e3, "catalog.quality_levels", "lowest level must be 500 kbit/s")?;
        check(levels[levels.len() - 1] == 3e6, "catalog.quality_levels", "highest level must be 3 Mbit/s")?;
        check(self.catalog.segment_duration > 0.0, "catalog.segment_duration", "must be > 0")?;
        let (c0, c1) = self.catalog.compute_cost_coeffs;
        check(c0 > 0.0 && c1 >= 0.0, "catalog.compute_cost_coeffs", "need c0 > 0 and c1 >= 0")?;

        let u = &self.users;
        let (s0, s1) = u.speed_range_kmh;
        check(
            in_range(s0, SPEED_MIN_KMH, SPEED_MAX_KMH) && in_range(s1, SPEED_MIN_KMH, SPEED_MAX_KMH) && s0 <= s1,
            "users.speed_range_kmh",
            "must lie within [2, 40] km/h",
        )?;
        if let Some(v) = u.speed {
            check(in_range(v, SPEED_MIN_KMH, SPEED_MAX_KMH), "users.speed", format!("{v} outside [2, 40] km/h"))?;
        }
        check(
            in_range(u.ela_range.0, 3.0, 5.0) && in_range(u.ela_range.1, 3.0, 5.0) && u.ela_range.0 <= u.ela_range.1,
            "users.ela_range",
            "must lie within [3, 5]",
        )?;
        check(
            u.impact_range.0 >= 0.0 && u.impact_range.0 <= u.impact_range.1 && u.impact_range.1.is_finite(),
            "users.impact_range",
            "must be a nonnegative interval",
        )?;
        check(u.region.0 > 0.0 && u.region.1 > 0.0, "users.region", "must be positive")?;
        check(
            u.min_path_side > 0.0 && u.min_path_side <= u.region.0.min(u.region.1),
            "users.min_path_side",
            "must fit inside the region",
        )?;
        check(
            u.swipe_mean_factor.0 > 0.0 && u.swipe_mean_factor.0 <= u.swipe_mean_factor.1,
            "users.swipe_mean_factor",
            "must be a positive interval",
        )?;
        check((0.0..=1.0).contains(&u.swipe_amplitude_max), "users.swipe_amplitude_max", "must lie in [0, 1]")?;
        check(
            u.swipe_period_range_s.0 > 0.0 && u.swipe_period_range_s.0 <= u.swipe_period_range_s.1,
            "users.swipe_period_range_s",
            "must be a positive interval",
        )?;

        let ch = &self.channel;
        check(ch.path_loss_exponent >= 2.0, "channel.path_loss_exponent", "must be >= 2")?;
        check(ch.shadowing_sigma_db >= 0.0, "channel.shadowing_sigma_db", "must be >= 0")?;
        check(ch.reference_loss_db.is_finite() && ch.noise_density_dbm_hz.is_finite(), "channel", "must be finite")?;

        let p = &self.playback;
        check(p.max_buffer_s > 0.0, "playback.max_buffer_s", "must be > 0")?;
        check(p.abr_safety > 0.0 && p.abr_safety <= 1.0, "playback.abr_safety", "must lie in (0, 1]")?;
        check(p.rate_ewma > 0.0 && p.rate_ewma <= 1.0, "playback.rate_ewma", "must lie in (0, 1]")?;
        check(p.qoe_period_slots >= 1, "playback.qoe_period_slots", "must be >= 1")?;

        let o = &self.orchestration;
        check(o.epoch_slots >= 1, "orchestration.epoch_slots", "must be >= 1")?;
        check(o.emulation_noise >= 0.0, "orchestration.emulation_noise", "must be >= 0")?;
        check(o.rr_bw_quantum_hz > 0.0 && o.rr_cpu_quantum > 0.0, "orchestration.rr_quantum", "must be > 0")?;
        check(o.solver_max_iters >= 1, "orchestration.solver_max_iters", "must be >= 1")?;
        check(o.fade_margin_sigma >= 0.0, "orchestration.fade_margin_sigma", "must be >= 0")?;

        let s = &self.slicing;
        check(s.bw_quantum_hz > 0.0 && s.cpu_quantum > 0.0, "slicing.quantum", "must be > 0")?;
        check(s.price >= 0.0, "slicing.price", "must be >= 0")?;
        check(s.dynamics_thresholds.windows(2).all(|w| w[0] <= w[1]), "slicing.dynamics_thresholds", "must be nondecreasing")?;
        check(
            s.window_minutes.iter().all(|w| [3, 6, 9, 12, 15].contains(w)),
            "slicing.window_minutes",
            "windows must come from {3, 6, 9, 12, 15}",
        )?;
        check([3, 6, 9, 12, 15].contains(&s.fixed_window_min), "slicing.fixed_window_min", "must be in {3, 6, 9, 12, 15}")?;
        check(s.dynamics_horizon_slots >= 2, "slicing.dynamics_horizon_slots", "must be >= 2")?;

        let t = &self.training;
        check(t.hidden_width >= 1, "training.hidden_width", "must be >= 1")?;
        check((0.0..1.0).contains(&t.gamma), "training.gamma", "must lie in [0, 1)")?;
        check(t.batch_size >= 1 && t.replay_capacity >= t.batch_size, "training.batch_size", "must fit in the replay buffer")?;
        check(t.learning_rate >= 0.0, "training.learning_rate", "must be >= 0")?;
        Ok(())
    }

    /// Slots in the evaluation phase.
    pub fn eval_slots(&self) -> u64 {
        math::round(self.sim_duration / self.slot) as u64
    }

    /// Upper end of the swipe-rate scale used to normalise behaviour, requests/min.
    pub fn max_swipe_rate(&self) -> f64 {
        2.0 * self.arrival_rate
    }
}

/// Draws the user population.
///
/// Structures are assigned round-robin over `{1, 2, 3}`; everything else is
/// drawn uniformly from the configured ranges.
pub fn sample_users<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<UserProfile> {
    let u = &cfg.users;
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    (0..cfg.num_users)
        .map(|i| {
            let side = u.min_path_side;
            let x0 = uniform(0.0, u.region.0 - side);
            let x1 = uniform(x0 + side, u.region.0);
            let y0 = uniform(0.0, u.region.1 - side);
            let y1 = uniform(y0 + side, u.region.1);
            let waypoints = alloc::vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)];
            let perimeter = 2.0 * ((x1 - x0) + (y1 - y0));
            let path_offset = uniform(0.0, perimeter);
            let drawn_speed = uniform(u.speed_range_kmh.0, u.speed_range_kmh.1);
            let speed_kmh = u.speed.unwrap_or(drawn_speed);
            let mean = cfg.arrival_rate * uniform(u.swipe_mean_factor.0, u.swipe_mean_factor.1);
            let amplitude = mean * uniform(0.0, u.swipe_amplitude_max);
            let period = uniform(u.swipe_period_range_s.0, u.swipe_period_range_s.1);
            let ela = uniform(u.ela_range.0, u.ela_range.1);
            let alpha = uniform(u.impact_range.0, u.impact_range.1);
            let beta = uniform(u.impact_range.0, u.impact_range.1);
            UserProfile {
                id: i as u32,
                waypoints,
                path_offset,
                speed_kmh,
                swipe: SwipeProcess { mean, amplitude, period },
                ela,
                structure_index: (i % 3) as u8 + 1,
                true_impact: (alpha, beta),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::lane_rng;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_fast_users() {
        let mut cfg = ScenarioConfig::default();
        cfg.users.speed = Some(50.0);
        match cfg.validate() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "users.speed"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn standard_mode_restricts_population() {
        let mut cfg = ScenarioConfig { num_users: 5, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.mode = Mode::Free;
        cfg.validate().unwrap();
    }

    #[test]
    fn catalog_bounds_checked() {
        let mut cfg = ScenarioConfig::default();
        cfg.catalog.quality_levels = alloc::vec![500e3, 400e3, 3e6];
        assert!(cfg.validate().is_err());
        cfg.catalog.quality_levels = alloc::vec![600e3, 3e6];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn round_robin_structures() {
        let cfg = ScenarioConfig::default();
        let users = sample_users(&cfg, &mut lane_rng(1, 0));
        let count = |s| users.iter().filter(|u| u.structure_index == s).count();
        assert_eq!((count(1), count(2), count(3)), (6, 5, 5));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = sample_users(&cfg, &mut lane_rng(1, 0));
        let b = sample_users(&cfg, &mut lane_rng(1, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn ela_mean_matches_uniform() {
        let cfg = ScenarioConfig { mode: Mode::Free, num_users: 10_000, ..Default::default() };
        let users = sample_users(&cfg, &mut lane_rng(3, 0));
        let mean = users.iter().map(|u| u.ela).sum::<f64>() / users.len() as f64;
        assert!((mean - 4.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn position_walks_the_loop() {
        let p = UserProfile {
            id: 0,
            waypoints: alloc::vec![(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)],
            path_offset: 0.0,
            speed_kmh: 36.0,
            swipe: SwipeProcess { mean: 6.0, amplitude: 0.0, period: 60.0 },
            ela: 4.0,
            structure_index: 1,
            true_impact: (0.5, 0.5),
        };
        assert_eq!(p.position(0.0), (0.0, 0.0));
        let (x, y) = p.position(15.0);
        assert!((x - 100.0).abs() < 1e-9 && (y - 50.0).abs() < 1e-9);
        let (x, y) = p.position(40.0);
        assert!(x.abs() < 1e-9 && y.abs() < 1e-9);
    }
}
