use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::emulate::ContextTrace;
use crate::math::{hypot, log2};
use crate::netsim::{median_path_loss, serving_station, snr_linear};
use crate::qoe::{eval_qoe, QoeModel};
use crate::scenario::{ScenarioConfig, VideoCatalog};

/// Resources one user needs over a slicing window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceDemand {
    pub user: u32,
    /// Hz, summed over base stations.
    pub bandwidth: f64,
    /// cycles/s
    pub compute: f64,
    /// Window length, seconds.
    pub window: f64,
    pub feasible: bool,
    /// Quality level the demand sustains.
    pub tier: usize,
    /// Bandwidth split by base-station index (time-weighted).
    pub bandwidth_by_bs: Vec<f64>,
    /// Predicted QoE above the MOS floor when the demand is met.
    pub gain: f64,
}

/// Expected radio conditions of a user over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    /// Fraction of the window spent attached to each station.
    pub time_share: Vec<f64>,
    /// Mean spectral efficiency while attached to each station.
    pub spectral_efficiency: Vec<f64>,
}

impl ChannelStats {
    /// Stats along the positions of an emulated trace. Efficiency is taken
    /// `fade_margin_sigma` shadowing deviations below the median.
    pub fn along(positions: &[(f64, f64)], cfg: &ScenarioConfig) -> Self {
        let margin = cfg.orchestration.fade_margin_sigma * cfg.channel.shadowing_sigma_db;
        let n = cfg.base_stations.len();
        let mut share = alloc::vec![0.0; n];
        let mut se = alloc::vec![0.0; n];
        for &p in positions {
            let b = serving_station(&cfg.base_stations, p, cfg);
            let bs = &cfg.base_stations[b];
            share[b] += 1.0;
            let loss = median_path_loss(hypot(p.0 - bs.position.0, p.1 - bs.position.1), &cfg.channel) + margin;
            se[b] += log2(1.0 + snr_linear(bs, loss, &cfg.channel));
        }
        for b in 0..n {
            if share[b] > 0.0 {
                se[b] /= share[b];
                share[b] /= positions.len().max(1) as f64;
            }
        }
        Self { time_share: share, spectral_efficiency: se }
    }

    /// A user that stays with one station at a fixed efficiency.
    pub fn fixed(num_bs: usize, bs: usize, spectral_efficiency: f64) -> Self {
        let mut time_share = alloc::vec![0.0; num_bs];
        let mut se = alloc::vec![0.0; num_bs];
        time_share[bs] = 1.0;
        se[bs] = spectral_efficiency;
        Self { time_share, spectral_efficiency: se }
    }
}

/// Limits used to normalise the demand cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandLimits {
    pub bandwidth: f64,
    pub compute: f64,
    /// Fraction of the link rate and of the transcoding allocation the
    /// player is expected to use.
    pub rate_safety: f64,
}

impl DemandLimits {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            bandwidth: cfg.base_stations.iter().map(|b| b.dl_bandwidth_hz).fold(0.0, f64::max),
            compute: cfg.edge.capacity,
            rate_safety: cfg.playback.abr_safety,
        }
    }
}

/// Mean predicted QoE over a trace at quality `q` without stalls.
pub fn window_qoe(model: &QoeModel, quality: f64, trace: &ContextTrace) -> f64 {
    let n = trace.len().max(1) as f64;
    trace.behavior.iter().zip(&trace.complexity).map(|(&b, &c)| eval_qoe(model, 0.0, quality, b, c)).sum::<f64>() / n
}

fn tier_demand(catalog: &VideoCatalog, level: usize, stats: &ChannelStats, limits: &DemandLimits) -> (Vec<f64>, f64) {
    let bitrate = catalog.quality_levels[level];
    let by_bs = stats
        .time_share
        .iter()
        .zip(&stats.spectral_efficiency)
        .map(|(&share, &se)| if share > 0.0 && se > 0.0 { share * bitrate / (limits.rate_safety * se) } else { 0.0 })
        .collect();
    (by_bs, catalog.compute_cost(catalog.level_quality(level)) / limits.rate_safety)
}

/// Cheapest (bandwidth, compute) pair whose window-average predicted QoE
/// reaches `ela`; the top level, flagged infeasible, when none does.
pub fn predict_demand(
    user: u32,
    model: &QoeModel,
    ela: f64,
    trace: &ContextTrace,
    catalog: &VideoCatalog,
    stats: &ChannelStats,
    limits: &DemandLimits,
    window: f64,
) -> ResourceDemand {
    let cost = |bw: f64, cpu: f64| bw / limits.bandwidth + cpu / limits.compute;
    let mut best: Option<(f64, usize)> = None;
    for level in 0..catalog.levels() {
        if window_qoe(model, catalog.level_quality(level), trace) + 1e-12 >= ela {
            let (by_bs, cpu) = tier_demand(catalog, level, stats, limits);
            let c = cost(by_bs.iter().sum(), cpu);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, level));
            }
        }
    }
    let (tier, feasible) = match best {
        Some((_, l)) => (l, true),
        None => (catalog.levels() - 1, false),
    };
    let (by_bs, compute) = tier_demand(catalog, tier, stats, limits);
    let gain = (window_qoe(model, catalog.level_quality(tier), trace) - 1.0).max(0.0);
    ResourceDemand {
        user,
        bandwidth: by_bs.iter().sum(),
        compute,
        window,
        feasible,
        tier,
        bandwidth_by_bs: by_bs,
        gain,
    }
}
