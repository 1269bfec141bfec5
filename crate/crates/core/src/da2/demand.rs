use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::da1::{saturation, ResourceDemand};
use crate::error::{Error, Result};
use crate::math::ceil;

/// Aggregate demand of one group at one base station.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cell {
    /// Hz
    pub bandwidth: f64,
    /// cycles/s of the members, weighted by their time at this station.
    pub compute: f64,
    pub users: usize,
    /// QoE gain of each successive bandwidth quantum, nonincreasing.
    pub bw_curve: Vec<f64>,
}

/// Demand per (group, base station) and per group for compute.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemandDistribution {
    pub groups: Vec<u32>,
    pub num_bs: usize,
    /// Keyed by (group, base-station index).
    pub cells: BTreeMap<(u32, usize), Cell>,
    /// Total compute per group, cycles/s.
    pub compute: BTreeMap<u32, f64>,
    /// QoE gain of each successive compute quantum per group.
    pub cpu_curves: BTreeMap<u32, Vec<f64>>,
}

impl DemandDistribution {
    pub fn bandwidth_demand(&self, bs: usize) -> f64 {
        self.cells.iter().filter(|((_, b), _)| *b == bs).map(|(_, c)| c.bandwidth).sum()
    }

    pub fn compute_demand(&self) -> f64 {
        self.compute.values().sum()
    }
}

/// Gains of the successive quanta covering `demand`, for a member whose
/// full-demand gain is `gain`, scaled by `weight`.
pub fn marginal_gains(demand: f64, quantum: f64, gain: f64, weight: f64) -> Vec<f64> {
    if demand <= 0.0 || quantum <= 0.0 || gain <= 0.0 || weight <= 0.0 {
        return Vec::new();
    }
    let n = ceil(demand / quantum - 1e-9).max(1.0) as usize;
    let h = |k: usize| saturation((k as f64 * quantum / demand).min(1.0));
    (1..=n).map(|k| weight * gain * (h(k) - h(k - 1))).collect()
}

fn merge_sorted(curve: &mut Vec<f64>, extra: Vec<f64>) {
    curve.extend(extra);
    curve.sort_by(|a, b| b.total_cmp(a));
}

/// Aggregates labelled user demands.
///
/// `memberships` maps user id to group; every demand must be labelled.
/// Bandwidth is attributed to stations by each demand's per-station split.
pub fn abstract_demand(
    demands: &[ResourceDemand],
    memberships: &BTreeMap<u32, u32>,
    num_bs: usize,
    quanta: (f64, f64),
) -> Result<DemandDistribution> {
    let mut dist = DemandDistribution { num_bs, ..Default::default() };
    let mut groups: Vec<u32> = memberships.values().copied().collect();
    groups.sort_unstable();
    groups.dedup();
    dist.groups = groups;
    // Deterministic regardless of input order.
    let mut order: Vec<&ResourceDemand> = demands.iter().collect();
    order.sort_by_key(|d| d.user);
    for d in order {
        let g = *memberships.get(&d.user).ok_or(Error::UnlabeledDemand(d.user))?;
        for (b, &bw) in d.bandwidth_by_bs.iter().enumerate().take(num_bs) {
            if bw <= 0.0 {
                continue;
            }
            let share = if d.bandwidth > 0.0 { bw / d.bandwidth } else { 0.0 };
            let cell = dist.cells.entry((g, b)).or_default();
            cell.bandwidth += bw;
            cell.compute += share * d.compute;
            cell.users += 1;
            let weight = share;
            merge_sorted(&mut cell.bw_curve, marginal_gains(bw, quanta.0, d.gain, weight));
        }
        *dist.compute.entry(g).or_insert(0.0) += d.compute;
        merge_sorted(dist.cpu_curves.entry(g).or_default(), marginal_gains(d.compute, quanta.1, d.gain, 1.0));
    }
    Ok(dist)
}
