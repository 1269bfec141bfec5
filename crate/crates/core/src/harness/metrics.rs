use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::quantile_sorted;
use crate::netsim::SlotRecord;
use crate::scenario::UserProfile;

/// Box-plot summary with 1.5 IQR whiskers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: usize,
}

impl BoxStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Per-window outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetric {
    pub window: usize,
    pub start_slot: u64,
    pub slots: u64,
    pub window_min: u32,
    /// Window-mean QoE per user, in profile order.
    pub user_qoe: Vec<f64>,
    pub ela_ratio: f64,
}

/// Window-mean QoE of every user, in profile order.
///
/// Period-end samples are used; a user without one in the window falls back
/// to all of its samples.
pub fn window_user_qoe(records: &[SlotRecord], profiles: &[UserProfile]) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut ends: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    let mut all: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = all.entry(r.user).or_default();
        e.0 += r.qoe_sample;
        e.1 += 1;
        if r.period_end {
            let e = ends.entry(r.user).or_default();
            e.0 += r.qoe_sample;
            e.1 += 1;
        }
    }
    Ok(profiles
        .iter()
        .map(|p| match ends.get(&p.id).or_else(|| all.get(&p.id)) {
            Some(&(s, n)) if n > 0 => s / n as f64,
            _ => f64::NAN,
        })
        .collect())
}

/// Fraction of users whose window-mean QoE reaches their ELA.
pub fn ela_ratio(records: &[SlotRecord], profiles: &[UserProfile]) -> Result<f64> {
    let q = window_user_qoe(records, profiles)?;
    Ok(ratio_from_means(&q, profiles))
}

pub(crate) fn ratio_from_means(user_qoe: &[f64], profiles: &[UserProfile]) -> f64 {
    if profiles.is_empty() {
        return 0.0;
    }
    let met = user_qoe.iter().zip(profiles).filter(|(q, p)| **q >= p.ela).count();
    met as f64 / profiles.len() as f64
}

/// Empirical CDF as `(value, fraction <= value)` steps.
pub fn cdf_points(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = frac,
            _ => out.push((*x, frac)),
        }
    }
    Ok(out)
}

/// Quartiles by linear interpolation, whiskers at the most extreme points
/// within 1.5 IQR of the box.
pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: values.len() });
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let median = quantile_sorted(&v, 0.5);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let whisker_lo = v.iter().copied().find(|x| *x >= lo_fence).unwrap_or(q1).min(q1);
    let whisker_hi = v.iter().rev().copied().find(|x| *x <= hi_fence).unwrap_or(q3).max(q3);
    let outliers = v.iter().filter(|x| **x < lo_fence || **x > hi_fence).count();
    Ok(BoxStats { median, q1, q3, whisker_lo, whisker_hi, outliers })
}
