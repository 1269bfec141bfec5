//! User-level allocation inside a group budget.
//!
//! Each user's utility is the predicted QoE as a smooth concave function of
//! the fraction of its demand that is met:
//!
//! ```text
//! U(x, y) = I * (1 + (S* - 1) * h(phi)),   phi = M_-4(min(x / a, 1), min(y / b, 1))
//! h(phi)  = 1 - (1 - phi)^2
//! ```
//!
//! where `(a, b)` is the bandwidth/compute demand of the planned quality
//! level, `S*` the score at that level and `M_-4` the power mean with
//! exponent -4 (a smooth minimum). Capping each fraction at one keeps a
//! surplus of one resource from standing in for a shortfall of the other. The sum of utilities is maximised by
//! projected gradient ascent with Barzilai-Borwein steps and an Armijo line
//! search over one capped simplex per bandwidth pool and one for compute.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

const PHI_FLOOR: f64 = 1e-12;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Stationarity level treated as converged.
pub const KKT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserUtility {
    /// Predicted impact factor `I(B, C)`.
    pub impact: f64,
    /// QoS score of the planned quality level without stalls.
    pub score: f64,
    /// Hz
    pub bw_demand: f64,
    /// cycles/s
    pub cpu_demand: f64,
    /// Base-station index whose bandwidth pool serves the user.
    pub bs: usize,
}

/// Concave saturation applied to the served fraction.
pub fn saturation(phi: f64) -> f64 {
    if phi >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - phi) * (1.0 - phi)
    }
}

fn saturation_slope(phi: f64) -> f64 {
    if phi >= 1.0 {
        0.0
    } else {
        2.0 * (1.0 - phi)
    }
}

/// Power mean with exponent -4 and its partial derivatives.
fn served_fraction(u: f64, v: f64) -> (f64, f64, f64) {
    let u = u.max(PHI_FLOOR);
    let v = v.max(PHI_FLOOR);
    let (lo, hi) = if u < v { (u, v) } else { (v, u) };
    let r = lo / hi;
    let r4 = r * r * r * r;
    let phi = lo * crate::math::powf(0.5 * (1.0 + r4), -0.25);
    let du = 0.5 * pow5(phi / u);
    let dv = 0.5 * pow5(phi / v);
    (phi, du, dv)
}

fn pow5(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2 * x
}

impl UserUtility {
    fn fractions(&self, x: f64, y: f64) -> (f64, f64) {
        (x / self.bw_demand.max(1e-9), y / self.cpu_demand.max(1e-9))
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.fractions(x, y);
        let (phi, _, _) = served_fraction(u.min(1.0), v.min(1.0));
        self.impact * (1.0 + (self.score - 1.0) * saturation(phi))
    }

    /// `(dU/dx, dU/dy)`.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (u, v) = self.fractions(x, y);
        let (phi, du, dv) = served_fraction(u.min(1.0), v.min(1.0));
        let du = if u < 1.0 { du } else { 0.0 };
        let dv = if v < 1.0 { dv } else { 0.0 };
        let k = self.impact * (self.score - 1.0) * saturation_slope(phi);
        (k * du / self.bw_demand.max(1e-9), k * dv / self.cpu_demand.max(1e-9))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAllocation {
    /// `(bandwidth Hz, compute cycles/s)` per member.
    pub allocations: Vec<(f64, f64)>,
    pub objective: f64,
    /// Infinity norm of the projected-gradient map in budget-normalised
    /// coordinates.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Euclidean projection onto `{z >= 0, sum z <= 1}`.
pub fn project_capped_simplex(v: &mut [f64]) {
    let clipped: f64 = v.iter().map(|x| x.max(0.0)).sum();
    if clipped <= 1.0 {
        for x in v.iter_mut() {
            *x = x.max(0.0);
        }
        return;
    }
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

struct Problem<'a> {
    members: &'a [UserUtility],
    bw: &'a [f64],
    cpu: f64,
    /// Variable layout: one bandwidth then one compute entry per member.
    pools: Vec<Vec<usize>>,
}

impl Problem<'_> {
    fn scale(&self, var: usize) -> f64 {
        let m = &self.members[var / 2];
        if var % 2 == 0 {
            self.bw.get(m.bs).copied().unwrap_or(0.0)
        } else {
            self.cpu
        }
    }

    fn objective(&self, z: &[f64]) -> f64 {
        self.members.iter().enumerate().map(|(i, m)| m.value(z[2 * i] * self.scale(2 * i), z[2 * i + 1] * self.cpu)).sum()
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g = alloc::vec![0.0; z.len()];
        for (i, m) in self.members.iter().enumerate() {
            let sx = self.scale(2 * i);
            let (gx, gy) = m.gradient(z[2 * i] * sx, z[2 * i + 1] * self.cpu);
            g[2 * i] = gx * sx;
            g[2 * i + 1] = gy * self.cpu;
        }
        g
    }

    fn project(&self, z: &mut [f64]) {
        let mut buf = Vec::new();
        for pool in &self.pools {
            buf.clear();
            buf.extend(pool.iter().map(|&k| z[k]));
            project_capped_simplex(&mut buf);
            for (&k, v) in pool.iter().zip(&buf) {
                z[k] = *v;
            }
        }
        for k in 0..z.len() {
            if self.scale(k) <= 0.0 {
                z[k] = 0.0;
            }
        }
    }

    fn residual(&self, z: &[f64], g: &[f64]) -> f64 {
        let mut p: Vec<f64> = z.iter().zip(g).map(|(a, b)| a + b).collect();
        self.project(&mut p);
        z.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Maximises the sum of member utilities within per-station bandwidth
/// budgets (`bw_budgets[bs]`, Hz) and a compute budget (cycles/s).
pub fn user_allocate(members: &[UserUtility], bw_budgets: &[f64], cpu_budget: f64, max_iters: usize) -> UserAllocation {
    let n = members.len();
    if n == 0 {
        return UserAllocation { allocations: Vec::new(), objective: 0.0, kkt_residual: 0.0, iterations: 0, converged: true };
    }
    let mut pools: Vec<Vec<usize>> = alloc::vec![Vec::new(); bw_budgets.len()];
    for (i, m) in members.iter().enumerate() {
        if m.bs < pools.len() {
            pools[m.bs].push(2 * i);
        }
    }
    pools.push((0..n).map(|i| 2 * i + 1).collect());
    let prob = Problem { members, bw: bw_budgets, cpu: cpu_budget.max(0.0), pools };

    // Budgets covering every demand saturate every member: scale each pool
    // up in proportion to demand. This is a maximiser of the capped utility.
    let weight = |k: usize| {
        let m = &members[k / 2];
        if k % 2 == 0 { m.bw_demand } else { m.cpu_demand }
    };
    let covered = prob.pools.iter().all(|pool| {
        let cap = pool.first().map_or(0.0, |&k| prob.scale(k));
        pool.iter().map(|&k| weight(k)).sum::<f64>() <= cap
    });
    if covered {
        let mut z = alloc::vec![0.0; 2 * n];
        for pool in &prob.pools {
            let total: f64 = pool.iter().map(|&k| weight(k)).sum();
            for &k in pool {
                z[k] = if total > 0.0 { weight(k) / total } else { 1.0 / pool.len() as f64 };
            }
        }
        prob.project(&mut z);
        let objective = prob.objective(&z);
        let allocations = (0..n).map(|i| (z[2 * i] * prob.scale(2 * i), z[2 * i + 1] * prob.cpu)).collect();
        return UserAllocation { allocations, objective, kkt_residual: 0.0, iterations: 0, converged: true };
    }

    let mut z = alloc::vec![0.0; 2 * n];
    for pool in &prob.pools {
        for &k in pool {
            z[k] = 1.0 / pool.len() as f64;
        }
    }
    prob.project(&mut z);
    let mut f = prob.objective(&z);
    let mut g = prob.gradient(&z);
    let mut step = 1.0;
    let mut residual = prob.residual(&z, &g);
    let mut iterations = 0;
    while iterations < max_iters && residual > KKT_TOLERANCE {
        iterations += 1;
        let mut trial: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a + step * b).collect();
        prob.project(&mut trial);
        let d: Vec<f64> = trial.iter().zip(&z).map(|(a, b)| a - b).collect();
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if slope <= 0.0 {
            break;
        }
        let mut tau = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + tau * b).collect();
            let fc = prob.objective(&cand);
            if fc >= f + ARMIJO * tau * slope {
                accepted = Some((cand, fc));
                break;
            }
            // Maximiser of the quadratic through f, the slope and fc.
            let denom = 2.0 * (fc - f - tau * slope);
            let q = if denom < 0.0 { -slope * tau * tau / denom } else { 0.5 * tau };
            tau = q.clamp(0.1 * tau, 0.5 * tau);
        }
        let Some((next, fnext)) = accepted else { break };
        let gnext = prob.gradient(&next);
        let s: Vec<f64> = next.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnext.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        step = if sy < 0.0 { (ss / -sy).clamp(1e-10, 1e10) } else { (step * 2.0).min(1e10) };
        z = next;
        f = fnext;
        g = gnext;
        residual = prob.residual(&z, &g);
    }

    // Hand out any budget left once every member is saturated; the
    // objective is flat there.
    for pool in &prob.pools {
        let used: f64 = pool.iter().map(|&k| z[k]).sum();
        let idle = pool.iter().all(|&k| g[k].abs() <= KKT_TOLERANCE);
        if used < 1.0 && idle && !pool.is_empty() {
            let total: f64 = pool.iter().map(|&k| weight(k)).sum();
            for &k in pool {
                let w = if total > 0.0 { weight(k) / total } else { 1.0 / pool.len() as f64 };
                z[k] += (1.0 - used) * w;
            }
        }
    }
    prob.project(&mut z);
    let objective = prob.objective(&z);
    let allocations = (0..n).map(|i| (z[2 * i] * prob.scale(2 * i), z[2 * i + 1] * prob.cpu)).collect();
    UserAllocation {
        allocations,
        objective,
        kkt_residual: residual,
        iterations,
        converged: residual <= KKT_TOLERANCE,
    }
}
