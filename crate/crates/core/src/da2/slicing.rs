use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::demand::DemandDistribution;
use crate::math::floor;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Greedy,
    Game,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Greedy => "greedy",
            Mechanism::Game => "game",
        }
    }
}

/// Reserved resources for one slicing window.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceConfig {
    /// Window length, minutes.
    pub window_min: u32,
    /// Hz, keyed by (group, base-station index).
    pub bandwidth: BTreeMap<(u32, usize), f64>,
    /// cycles/s per group.
    pub compute: BTreeMap<u32, f64>,
    pub mechanism: Mechanism,
}

impl SliceConfig {
    /// Same reservation for every (group, station) pair.
    pub fn uniform(groups: &[u32], num_bs: usize, bw: f64, cpu: f64, window_min: u32) -> Self {
        let mut bandwidth = BTreeMap::new();
        let mut compute = BTreeMap::new();
        for &g in groups {
            for b in 0..num_bs {
                bandwidth.insert((g, b), bw);
            }
            compute.insert(g, cpu);
        }
        Self { window_min, bandwidth, compute, mechanism: Mechanism::Greedy }
    }

    pub fn covers(&self, group: u32, bs: usize) -> bool {
        self.bandwidth.contains_key(&(group, bs)) && self.compute.contains_key(&group)
    }

    pub fn bandwidth_of(&self, group: u32, bs: usize) -> f64 {
        self.bandwidth.get(&(group, bs)).copied().unwrap_or(0.0)
    }

    pub fn compute_of(&self, group: u32) -> f64 {
        self.compute.get(&group).copied().unwrap_or(0.0)
    }

    /// Total bandwidth reserved at a station.
    pub fn bandwidth_pool(&self, bs: usize) -> f64 {
        self.bandwidth.iter().filter(|((_, b), _)| *b == bs).map(|(_, v)| v).sum()
    }

    pub fn compute_pool(&self) -> f64 {
        self.compute.values().sum()
    }

    pub fn groups(&self) -> Vec<u32> {
        self.compute.keys().copied().collect()
    }
}

/// Capacities available for slicing.
#[derive(Debug, Clone, PartialEq)]
pub struct Capacities {
    /// Hz per base station.
    pub bandwidth: Vec<f64>,
    /// cycles/s
    pub compute: f64,
}

impl Capacities {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self { bandwidth: cfg.base_stations.iter().map(|b| b.dl_bandwidth_hz).collect(), compute: cfg.edge.capacity }
    }
}

/// Slicing granularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quanta {
    pub bandwidth: f64,
    pub compute: f64,
}

impl Quanta {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self { bandwidth: cfg.slicing.bw_quantum_hz, compute: cfg.slicing.cpu_quantum }
    }
}

/// Grants whole quanta from `capacity_quanta` to players, largest next gain
/// first (lowest player on ties). Returns quanta per player and the gain of
/// every grant in order.
pub(crate) fn greedy_pool(curves: &[&[f64]], capacity_quanta: usize) -> (Vec<usize>, Vec<f64>) {
    let mut counts = alloc::vec![0usize; curves.len()];
    let mut trace = Vec::new();
    while trace.len() < capacity_quanta {
        let mut best: Option<(usize, f64)> = None;
        for (p, c) in curves.iter().enumerate() {
            if let Some(&g) = c.get(counts[p]) {
                if best.is_none_or(|(_, bg)| g > bg) {
                    best = Some((p, g));
                }
            }
        }
        let Some((p, g)) = best else { break };
        counts[p] += 1;
        trace.push(g);
    }
    (counts, trace)
}

fn quanta_in(capacity: f64, quantum: f64) -> usize {
    if capacity <= 0.0 || quantum <= 0.0 {
        0
    } else {
        floor(capacity / quantum + 1e-9) as usize
    }
}

/// Greedy slicing with the gain sequence of every pool (one per station,
/// then compute).
pub fn greedy_slice_traced(
    dist: &DemandDistribution,
    caps: &Capacities,
    quanta: Quanta,
    window_min: u32,
) -> (SliceConfig, Vec<Vec<f64>>) {
    let mut cfg = SliceConfig::uniform(&dist.groups, caps.bandwidth.len(), 0.0, 0.0, window_min);
    let mut traces = Vec::new();
    let empty: Vec<f64> = Vec::new();
    for (b, &cap) in caps.bandwidth.iter().enumerate() {
        let curves: Vec<&[f64]> =
            dist.groups.iter().map(|g| dist.cells.get(&(*g, b)).map_or(&empty[..], |c| &c.bw_curve[..])).collect();
        let (counts, trace) = greedy_pool(&curves, quanta_in(cap, quanta.bandwidth));
        for (g, n) in dist.groups.iter().zip(counts) {
            let total = dist.cells.get(&(*g, b)).map_or(0.0, |c| c.bandwidth);
            cfg.bandwidth.insert((*g, b), (n as f64 * quanta.bandwidth).min(total));
        }
        traces.push(trace);
    }
    let curves: Vec<&[f64]> =
        dist.groups.iter().map(|g| dist.cpu_curves.get(g).map_or(&empty[..], |c| &c[..])).collect();
    let (counts, trace) = greedy_pool(&curves, quanta_in(caps.compute, quanta.compute));
    for (g, n) in dist.groups.iter().zip(counts) {
        let total = dist.compute.get(g).copied().unwrap_or(0.0);
        cfg.compute.insert(*g, (n as f64 * quanta.compute).min(total));
    }
    traces.push(trace);
    (cfg, traces)
}

/// Grants quanta to the group with the largest marginal QoE gain until
/// capacity or demand runs out.
pub fn greedy_slice(dist: &DemandDistribution, caps: &Capacities, quanta: Quanta, window_min: u32) -> SliceConfig {
    greedy_slice_traced(dist, caps, quanta, window_min).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::da2::demand::Cell;

    fn dist(curves: &[Vec<f64>], totals: &[f64]) -> DemandDistribution {
        let mut d = DemandDistribution { num_bs: 1, ..Default::default() };
        for (g, (c, t)) in curves.iter().zip(totals).enumerate() {
            let g = g as u32;
            d.groups.push(g);
            d.cells.insert((g, 0), Cell { bandwidth: *t, compute: 0.0, users: 1, bw_curve: c.clone() });
        }
        d
    }

    #[test]
    fn single_group_gets_min_of_capacity_and_demand() {
        let d = dist(&[alloc::vec![1.0, 0.5, 0.2]], &[2.5]);
        let q = Quanta { bandwidth: 1.0, compute: 1.0 };
        let s = greedy_slice(&d, &Capacities { bandwidth: alloc::vec![10.0], compute: 0.0 }, q, 9);
        assert_eq!(s.bandwidth[&(0, 0)], 2.5);
        let s = greedy_slice(&d, &Capacities { bandwidth: alloc::vec![2.0], compute: 0.0 }, q, 9);
        assert_eq!(s.bandwidth[&(0, 0)], 2.0);
    }

    #[test]
    fn identical_groups_split_evenly() {
        let c = alloc::vec![1.0, 0.8, 0.6, 0.4, 0.2];
        let d = dist(&[c.clone(), c], &[5.0, 5.0]);
        let q = Quanta { bandwidth: 1.0, compute: 1.0 };
        let (s, traces) = greedy_slice_traced(&d, &Capacities { bandwidth: alloc::vec![7.0], compute: 0.0 }, q, 9);
        assert_eq!(s.bandwidth[&(0, 0)], 4.0);
        assert_eq!(s.bandwidth[&(1, 0)], 3.0);
        assert!(traces[0].windows(2).all(|w| w[0] >= w[1]));
    }
}
