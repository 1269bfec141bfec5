use alloc::vec::Vec;

use super::demand::DemandDistribution;
use super::slicing::{Capacities, Mechanism, Quanta, SliceConfig};
use crate::math::{ceil, floor};

/// Outcome of best-response dynamics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GameReport {
    pub converged: bool,
    /// Full rounds played in the slowest pool, including the final one in
    /// which nobody moved.
    pub rounds: usize,
    /// Accepted best-response moves over all pools.
    pub moves: usize,
    /// Sum of player utilities after every accepted move, per pool.
    pub potential: Vec<Vec<f64>>,
}

fn prefix(curve: &[f64], n: usize) -> f64 {
    curve[..n.min(curve.len())].iter().sum()
}

fn utility(curve: &[f64], n: usize, price: f64) -> f64 {
    prefix(curve, n) - price * n as f64
}

/// Best response of one player given what the others hold.
pub(crate) fn best_response(curve: &[f64], current: usize, available: usize, price: f64) -> usize {
    let hi = available.min(curve.len());
    let mut best = current.min(hi);
    let mut best_u = utility(curve, best, price);
    for m in 0..=hi {
        let u = utility(curve, m, price);
        if u > best_u + 1e-12 {
            best = m;
            best_u = u;
        }
    }
    best
}

/// Round-robin best responses in one pool. Returns final holdings, rounds
/// played, move count, potential trace and convergence.
pub(crate) fn play_pool(
    curves: &[&[f64]],
    mut held: Vec<usize>,
    capacity: usize,
    price: f64,
    max_iters: usize,
) -> (Vec<usize>, usize, usize, Vec<f64>, bool) {
    let potential = |h: &[usize]| curves.iter().zip(h).map(|(c, &n)| utility(c, n, price)).sum::<f64>();
    let mut trace = alloc::vec![potential(&held)];
    let mut moves = 0;
    let mut rounds = 0;
    let mut converged = false;
    while rounds < max_iters.max(1) {
        rounds += 1;
        let mut changed = false;
        for p in 0..curves.len() {
            let others: usize = held.iter().enumerate().filter(|(q, _)| *q != p).map(|(_, n)| n).sum();
            let available = capacity.saturating_sub(others);
            let br = best_response(curves[p], held[p], available, price);
            if br != held[p] {
                held[p] = br;
                changed = true;
                moves += 1;
                let phi = potential(&held);
                debug_assert!(phi >= trace.last().unwrap() - 1e-9, "potential decreased");
                trace.push(phi);
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    (held, rounds, moves, trace, converged)
}

fn quanta_held(reserved: f64, quantum: f64) -> usize {
    if reserved <= 0.0 || quantum <= 0.0 {
        0
    } else {
        ceil(reserved / quantum - 1e-9) as usize
    }
}

fn quanta_in(capacity: f64, quantum: f64) -> usize {
    if capacity <= 0.0 || quantum <= 0.0 {
        0
    } else {
        floor(capacity / quantum + 1e-9) as usize
    }
}

/// Iterated best responses starting from `initial`.
///
/// Each group's utility in a pool is the QoE gain of its quanta minus
/// `price` per quantum; pools (one per station plus compute) are
/// independent games coupled only through their shared capacity.
pub fn best_response_adjust(
    initial: &SliceConfig,
    dist: &DemandDistribution,
    caps: &Capacities,
    quanta: Quanta,
    price: f64,
    max_iters: usize,
) -> (SliceConfig, GameReport) {
    let mut out = initial.clone();
    out.mechanism = Mechanism::Game;
    let mut report = GameReport { converged: true, ..Default::default() };
    let empty: Vec<f64> = Vec::new();
    let groups = &dist.groups;
    for (b, &cap) in caps.bandwidth.iter().enumerate() {
        let curves: Vec<&[f64]> =
            groups.iter().map(|g| dist.cells.get(&(*g, b)).map_or(&empty[..], |c| &c.bw_curve[..])).collect();
        let held = groups.iter().map(|g| quanta_held(initial.bandwidth_of(*g, b), quanta.bandwidth)).collect();
        let (held, rounds, moves, trace, conv) =
            play_pool(&curves, held, quanta_in(cap, quanta.bandwidth), price, max_iters);
        for (g, n) in groups.iter().zip(held) {
            let total = dist.cells.get(&(*g, b)).map_or(0.0, |c| c.bandwidth);
            out.bandwidth.insert((*g, b), (n as f64 * quanta.bandwidth).min(total));
        }
        report.rounds = report.rounds.max(rounds);
        report.moves += moves;
        report.potential.push(trace);
        report.converged &= conv;
    }
    let curves: Vec<&[f64]> = groups.iter().map(|g| dist.cpu_curves.get(g).map_or(&empty[..], |c| &c[..])).collect();
    let held = groups.iter().map(|g| quanta_held(initial.compute_of(*g), quanta.compute)).collect();
    let (held, rounds, moves, trace, conv) = play_pool(&curves, held, quanta_in(caps.compute, quanta.compute), price, max_iters);
    for (g, n) in groups.iter().zip(held) {
        let total = dist.compute.get(g).copied().unwrap_or(0.0);
        out.compute.insert(*g, (n as f64 * quanta.compute).min(total));
    }
    report.rounds = report.rounds.max(rounds);
    report.moves += moves;
    report.potential.push(trace);
    report.converged &= conv;
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_player_reaches_optimum() {
        let c = [1.0, 0.5, 0.04, 0.01];
        let (held, _, moves, _, conv) = play_pool(&[&c], alloc::vec![0], 10, 0.05, 100);
        assert_eq!(held, alloc::vec![2]);
        assert_eq!(moves, 1);
        assert!(conv);
    }

    #[test]
    fn zero_capacity() {
        let c = [1.0, 0.5];
        let (held, _, _, _, conv) = play_pool(&[&c, &c], alloc::vec![0, 0], 0, 0.05, 100);
        assert_eq!(held, alloc::vec![0, 0]);
        assert!(conv);
    }

    #[test]
    fn potential_never_decreases() {
        let a = [0.9, 0.7, 0.3, 0.1];
        let b = [0.8, 0.6, 0.5, 0.2];
        let (_, _, _, trace, conv) = play_pool(&[&a, &b], alloc::vec![0, 4], 5, 0.05, 100);
        assert!(conv);
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
