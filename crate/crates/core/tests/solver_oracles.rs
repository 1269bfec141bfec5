use std::collections::BTreeMap;

use dasim_core::da1::{user_allocate, UserUtility};
use dasim_core::da2::{
    best_response_adjust, greedy_slice, marginal_gains, Capacities, Cell, DemandDistribution, Quanta, SliceConfig,
};
use dasim_core::rng::lane_rng;
use rand::Rng;

fn two_user_objective(us: &[UserUtility; 2], bw: f64, cpu: f64, x: f64, y: f64) -> f64 {
    us[0].value(x, y) + us[1].value(bw - x, cpu - y)
}

/// Best point of a 100 x 100 grid, then of a 100 x 100 grid spanning two
/// cells around it.
fn grid_optimum(us: &[UserUtility; 2], bw: f64, cpu: f64) -> f64 {
    let n = 100;
    let (mut x0, mut x1, mut y0, mut y1) = (0.0, bw, 0.0, cpu);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..2 {
        let (dx, dy) = ((x1 - x0) / (n - 1) as f64, (y1 - y0) / (n - 1) as f64);
        let (mut bx, mut by) = (x0, y0);
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (x0 + i as f64 * dx, y0 + j as f64 * dy);
                let v = two_user_objective(us, bw, cpu, x, y);
                if v > best {
                    best = v;
                    (bx, by) = (x, y);
                }
            }
        }
        (x0, x1) = ((bx - dx).max(0.0), (bx + dx).min(bw));
        (y0, y1) = ((by - dy).max(0.0), (by + dy).min(cpu));
    }
    best
}

#[test]
fn user_allocate_matches_grid_search() {
    let mut rng = lane_rng(11, 0);
    for case in 0..50 {
        let mk = |rng: &mut dasim_core::rng::SimRng| UserUtility {
            impact: rng.random_range(0.4..1.0),
            score: rng.random_range(1.5..5.0),
            bw_demand: rng.random_range(0.5e6..5e6),
            cpu_demand: rng.random_range(0.1e9..0.7e9),
            bs: 0,
        };
        let us = [mk(&mut rng), mk(&mut rng)];
        let bw = rng.random_range(0.2..1.5) * (us[0].bw_demand + us[1].bw_demand);
        let cpu = rng.random_range(0.2..1.5) * (us[0].cpu_demand + us[1].cpu_demand);
        let sol = user_allocate(&us, &[bw], cpu, 500);
        let ours: f64 = us.iter().zip(&sol.allocations).map(|(u, a)| u.value(a.0, a.1)).sum();
        let grid = grid_optimum(&us, bw, cpu);
        assert!((ours - grid).abs() <= 1e-3 * grid.abs(), "case {case}: ours {ours} grid {grid}");
        let used_bw: f64 = sol.allocations.iter().map(|a| a.0).sum();
        let used_cpu: f64 = sol.allocations.iter().map(|a| a.1).sum();
        assert!(used_bw <= bw * (1.0 + 1e-12) && used_cpu <= cpu * (1.0 + 1e-12));
    }
}

fn prefix(curve: &[f64], n: usize) -> f64 {
    curve[..n.min(curve.len())].iter().sum()
}

fn quanta_of(amount: f64, quantum: f64) -> usize {
    (amount / quantum - 1e-9).ceil().max(0.0) as usize
}

/// Maximum total gain over every split of `cap` quanta among three curves.
fn exhaustive(curves: &[Vec<f64>; 3], cap: usize) -> f64 {
    let mut best = 0.0f64;
    for a in 0..=cap {
        for b in 0..=cap - a {
            for c in 0..=cap - a - b {
                best = best.max(prefix(&curves[0], a) + prefix(&curves[1], b) + prefix(&curves[2], c));
            }
        }
    }
    best
}

fn random_distribution<R: Rng>(rng: &mut R, q: Quanta) -> DemandDistribution {
    let groups = vec![1, 2, 3];
    let mut dist = DemandDistribution { groups: groups.clone(), num_bs: 1, ..Default::default() };
    for &g in &groups {
        let bw = rng.random_range(0.0..8.0) * q.bandwidth;
        let cpu = rng.random_range(0.0..8.0) * q.compute;
        let gain = rng.random_range(0.5..4.0);
        let weight = rng.random_range(1.0..4.0);
        dist.cells.insert(
            (g, 0),
            Cell { bandwidth: bw, compute: cpu, users: 1, bw_curve: marginal_gains(bw, q.bandwidth, gain, weight) },
        );
        dist.compute.insert(g, cpu);
        dist.cpu_curves.insert(g, marginal_gains(cpu, q.compute, gain, weight));
    }
    dist
}

#[test]
fn greedy_slice_matches_exhaustive_enumeration() {
    let q = Quanta { bandwidth: 1e6, compute: 0.5e9 };
    let mut rng = lane_rng(12, 0);
    let mut instances = 0;
    for _ in 0..400 {
        let dist = random_distribution(&mut rng, q);
        for cap_q in 0..=10usize {
            let caps = Capacities { bandwidth: vec![cap_q as f64 * q.bandwidth], compute: cap_q as f64 * q.compute };
            let cfg = greedy_slice(&dist, &caps, q, 9);
            let bw_curves: [Vec<f64>; 3] = [1, 2, 3].map(|g| dist.cells[&(g, 0)].bw_curve.clone());
            let cpu_curves: [Vec<f64>; 3] = [1, 2, 3].map(|g| dist.cpu_curves[&g].clone());
            let got_bw: f64 =
                [1u32, 2, 3].iter().zip(&bw_curves).map(|(g, c)| prefix(c, quanta_of(cfg.bandwidth_of(*g, 0), q.bandwidth))).sum();
            let got_cpu: f64 =
                [1u32, 2, 3].iter().zip(&cpu_curves).map(|(g, c)| prefix(c, quanta_of(cfg.compute_of(*g), q.compute))).sum();
            assert!((got_bw - exhaustive(&bw_curves, cap_q)).abs() <= 1e-9);
            assert!((got_cpu - exhaustive(&cpu_curves, cap_q)).abs() <= 1e-9);
            assert!([1u32, 2, 3].iter().map(|g| cfg.bandwidth_of(*g, 0)).sum::<f64>() <= caps.bandwidth[0] + 1e-6);
            assert!([1u32, 2, 3].iter().map(|g| cfg.compute_of(*g)).sum::<f64>() <= caps.compute + 1e-3);
            instances += 1;
        }
    }
    assert_eq!(instances, 400 * 11);
}

#[test]
fn game_outcome_is_a_nash_equilibrium() {
    let q = Quanta { bandwidth: 1e6, compute: 0.5e9 };
    let cap = 5usize;
    let caps = Capacities { bandwidth: vec![cap as f64 * q.bandwidth], compute: cap as f64 * q.compute };
    let mut rng = lane_rng(13, 0);
    for case in 0..300 {
        let price = rng.random_range(0.0..0.6);
        let groups = vec![1u32, 2];
        let mut dist = DemandDistribution { groups: groups.clone(), num_bs: 1, ..Default::default() };
        for &g in &groups {
            // Arbitrary nonincreasing gains, not only saturation-shaped ones.
            let mut bw_curve: Vec<f64> = (0..rng.random_range(0..=6)).map(|_| rng.random_range(0.0..1.0)).collect();
            bw_curve.sort_by(|a, b| b.total_cmp(a));
            let mut cpu_curve: Vec<f64> = (0..rng.random_range(0..=6)).map(|_| rng.random_range(0.0..1.0)).collect();
            cpu_curve.sort_by(|a, b| b.total_cmp(a));
            let bw = bw_curve.len() as f64 * q.bandwidth;
            let cpu = cpu_curve.len() as f64 * q.compute;
            dist.cells.insert((g, 0), Cell { bandwidth: bw, compute: cpu, users: 1, bw_curve });
            dist.compute.insert(g, cpu);
            dist.cpu_curves.insert(g, cpu_curve);
        }
        let a = rng.random_range(0..=cap);
        let b = rng.random_range(0..=cap - a);
        let mut initial = SliceConfig::uniform(&groups, 1, 0.0, 0.0, 9);
        initial.bandwidth.insert((1, 0), a as f64 * q.bandwidth);
        initial.bandwidth.insert((2, 0), b as f64 * q.bandwidth);
        initial.compute.insert(1, b as f64 * q.compute);
        initial.compute.insert(2, a as f64 * q.compute);
        let (out, report) = best_response_adjust(&initial, &dist, &caps, q, price, 100);
        assert!(report.converged, "case {case}");

        let pools: [(BTreeMap<u32, Vec<f64>>, BTreeMap<u32, usize>); 2] = [
            (
                groups.iter().map(|g| (*g, dist.cells[&(*g, 0)].bw_curve.clone())).collect(),
                groups.iter().map(|g| (*g, quanta_of(out.bandwidth_of(*g, 0), q.bandwidth))).collect(),
            ),
            (
                groups.iter().map(|g| (*g, dist.cpu_curves[g].clone())).collect(),
                groups.iter().map(|g| (*g, quanta_of(out.compute_of(*g), q.compute))).collect(),
            ),
        ];
        for (curves, held) in &pools {
            assert!(held.values().sum::<usize>() <= cap);
            for &g in &groups {
                let others: usize = held.iter().filter(|(k, _)| **k != g).map(|(_, v)| v).sum();
                let u = |n: usize| prefix(&curves[&g], n) - price * n as f64;
                let now = u(held[&g]);
                for dev in 0..=cap - others {
                    assert!(u(dev) <= now + 1e-12, "case {case}: group {g} gains by moving {} -> {dev}", held[&g]);
                }
            }
        }
    }
}
