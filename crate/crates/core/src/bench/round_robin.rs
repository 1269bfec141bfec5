use alloc::vec::Vec;

use crate::da2::SliceConfig;
use crate::error::Result;
use crate::math::floor;
use crate::netsim::{Allocation, Orchestrator, SlotView};

/// Whole quanta per user: equal counts, with the remainder handed out one
/// each starting at user `start`.
pub fn round_robin_quanta(users: usize, quanta: usize, start: usize) -> Vec<usize> {
    if users == 0 {
        return Vec::new();
    }
    let base = quanta / users;
    let rem = quanta % users;
    let mut out = alloc::vec![base; users];
    for j in 0..rem {
        out[(start + j) % users] += 1;
    }
    out
}

/// Splits `budget` among `users` in quanta of `quantum`; the sub-quantum
/// remainder is spread evenly.
pub fn round_robin_allocate(users: usize, budget: f64, quantum: f64, start: usize) -> Vec<f64> {
    if users == 0 {
        return Vec::new();
    }
    let budget = budget.max(0.0);
    if quantum <= 0.0 {
        return alloc::vec![budget / users as f64; users];
    }
    let quanta = floor(budget / quantum + 1e-9) as usize;
    let spare = (budget - quanta as f64 * quantum).max(0.0) / users as f64;
    round_robin_quanta(users, quanta, start).into_iter().map(|n| n as f64 * quantum + spare).collect()
}

/// Round-robin scheduling of the station and compute pools; the starting
/// user rotates every slot.
#[derive(Debug, Clone)]
pub struct RoundRobin {
    pub bw_quantum: f64,
    pub cpu_quantum: f64,
}

impl Orchestrator for RoundRobin {
    fn allocate(&mut self, view: &SlotView<'_>, slices: &SliceConfig) -> Result<Vec<Allocation>> {
        let n = view.users.len();
        let mut out = alloc::vec![Allocation::default(); n];
        for b in 0..view.cfg.base_stations.len() {
            let members: Vec<usize> = (0..n).filter(|&i| view.users[i].serving_bs == b).collect();
            if members.is_empty() {
                continue;
            }
            let start = (view.t as usize) % members.len();
            let shares = round_robin_allocate(members.len(), slices.bandwidth_pool(b), self.bw_quantum, start);
            for (&i, s) in members.iter().zip(shares) {
                out[i].bandwidth = s;
            }
        }
        let start = if n > 0 { (view.t as usize) % n } else { 0 };
        for (a, s) in out.iter_mut().zip(round_robin_allocate(n, slices.compute_pool(), self.cpu_quantum, start)) {
            a.compute = s;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let a = round_robin_allocate(4, 8e6, 180e3, 0);
        assert!(a.iter().all(|x| (x - 2e6).abs() < 1e-6));
        assert!((round_robin_allocate(1, 5e6, 180e3, 3)[0] - 5e6).abs() < 1e-6);
        assert_eq!(round_robin_quanta(3, 10, 0), alloc::vec![4, 3, 3]);
        assert_eq!(round_robin_quanta(3, 10, 1), alloc::vec![3, 4, 3]);
        assert_eq!(round_robin_quanta(3, 10, 2), alloc::vec![3, 3, 4]);
    }

    #[test]
    fn never_exceeds_budget() {
        for users in 1..7 {
            for start in 0..users {
                let a = round_robin_allocate(users, 7.77e6, 180e3, start);
                assert!(a.iter().sum::<f64>() <= 7.77e6 * (1.0 + 1e-12));
            }
        }
    }
}
