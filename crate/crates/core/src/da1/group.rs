use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::BdqNetwork;

/// Share levels `0, 0.1, ..., 1` per branch.
pub const SHARE_LEVELS: usize = 11;
/// Bandwidth and compute.
pub const GROUP_BRANCHES: usize = 2;
/// Length of [`GroupState::features`].
pub const GROUP_STATE_DIM: usize = 6;

/// Observation of one user group at an orchestration epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupState {
    /// Structure index of the group, 1 to 3.
    pub group: u8,
    /// Mean playback buffer, as a fraction of the buffer cap.
    pub avg_buffer: f64,
    /// Share of the edge capacity the group used.
    pub compute_load: f64,
    pub avg_quality: f64,
}

impl GroupState {
    pub fn features(&self) -> [f64; GROUP_STATE_DIM] {
        let mut f = [self.avg_buffer, self.compute_load, self.avg_quality, 0.0, 0.0, 0.0];
        if (1..=3).contains(&self.group) {
            f[2 + self.group as usize] = 1.0;
        }
        f
    }
}

/// Share level index to share.
pub fn share_of(level: usize) -> f64 {
    level as f64 / (SHARE_LEVELS - 1) as f64
}

/// Normalises raw shares per resource; all-zero columns become equal shares.
pub fn normalize_shares(raw: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = raw.len() as f64;
    let sb: f64 = raw.iter().map(|r| r.0).sum();
    let sc: f64 = raw.iter().map(|r| r.1).sum();
    raw.iter()
        .map(|&(b, c)| (if sb > 0.0 { b / sb } else { 1.0 / n }, if sc > 0.0 { c / sc } else { 1.0 / n }))
        .collect()
}

/// Greedy share actions of every group under `policy`, equal shares when
/// there is no policy.
pub fn group_actions(states: &[GroupState], policy: Option<&BdqNetwork>) -> Result<Vec<[usize; 2]>> {
    match policy {
        None => Ok(alloc::vec![[SHARE_LEVELS - 1; 2]; states.len()]),
        Some(net) => {
            if net.num_branches != GROUP_BRANCHES || net.actions_per_branch != SHARE_LEVELS {
                return Err(Error::ShapeMismatch {
                    expected: GROUP_BRANCHES * SHARE_LEVELS,
                    got: net.num_branches * net.actions_per_branch,
                });
            }
            states
                .iter()
                .map(|s| {
                    let a = net.greedy(&s.features())?;
                    Ok([a[0], a[1]])
                })
                .collect()
        }
    }
}

/// Normalised (bandwidth, compute) shares from share-level actions.
pub fn shares_from_actions(actions: &[[usize; 2]]) -> Vec<(f64, f64)> {
    let raw: Vec<(f64, f64)> = actions.iter().map(|a| (share_of(a[0]), share_of(a[1]))).collect();
    normalize_shares(&raw)
}

/// Per-group (bandwidth, compute) shares, summing to one per resource.
pub fn group_allocate(states: &[GroupState], policy: Option<&BdqNetwork>) -> Result<Vec<(f64, f64)>> {
    Ok(shares_from_actions(&group_actions(states, policy)?))
}

/// Splits a pooled budget among groups by `share x reservation`.
///
/// `reserved[g]` is the slice of group `g` in the pool; when every weighted
/// reservation is zero the split follows the reservations themselves.
pub fn split_pool(pool: f64, shares: &[f64], reserved: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = shares.iter().zip(reserved).map(|(s, r)| s * r).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        return w.iter().map(|x| pool * x / total).collect();
    }
    let total: f64 = reserved.iter().sum();
    if total > 0.0 {
        reserved.iter().map(|r| pool * r / total).collect()
    } else {
        alloc::vec![0.0; reserved.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::lane_rng;

    fn state(g: u8) -> GroupState {
        GroupState { group: g, avg_buffer: 0.3, compute_load: 0.2, avg_quality: 0.5 }
    }

    #[test]
    fn single_group_gets_everything() {
        let net = BdqNetwork::new(&[GROUP_STATE_DIM, 8], 2, SHARE_LEVELS, &mut lane_rng(1, 0));
        assert_eq!(group_allocate(&[state(2)], Some(&net)).unwrap(), alloc::vec![(1.0, 1.0)]);
    }

    #[test]
    fn zero_policy_equal_shares() {
        let net = BdqNetwork::new(&[GROUP_STATE_DIM, 8], 2, SHARE_LEVELS, &mut lane_rng(1, 0)).zeros_like();
        let s = group_allocate(&[state(1), state(2), state(3)], Some(&net)).unwrap();
        for (b, c) in s {
            assert!((b - 1.0 / 3.0).abs() < 1e-15 && (c - 1.0 / 3.0).abs() < 1e-15);
        }
        let wrong = BdqNetwork::new(&[GROUP_STATE_DIM, 8], 3, SHARE_LEVELS, &mut lane_rng(1, 0));
        assert!(group_allocate(&[state(1)], Some(&wrong)).is_err());
    }

    #[test]
    fn pool_split() {
        assert_eq!(split_pool(10.0, &[0.5, 0.5], &[3.0, 1.0]), alloc::vec![7.5, 2.5]);
        assert_eq!(split_pool(10.0, &[0.0, 0.0], &[3.0, 1.0]), alloc::vec![7.5, 2.5]);
        assert_eq!(split_pool(10.0, &[1.0, 0.0], &[3.0, 1.0]), alloc::vec![10.0, 0.0]);
        assert_eq!(split_pool(10.0, &[1.0, 1.0], &[0.0, 0.0]), alloc::vec![0.0, 0.0]);
    }
}
