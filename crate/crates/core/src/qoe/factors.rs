use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{distance_correlation, fit_model, FactorSample, FitReport, Structure};
use crate::error::{Error, Result};

/// Minimum number of observations for factor analysis.
pub const MIN_FACTOR_SAMPLES: usize = 20;

/// Candidate QoE influencing factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Factor {
    Rebuffer,
    Quality,
    Behavior,
    Complexity,
}

impl Factor {
    pub const ALL: [Factor; 4] = [Factor::Rebuffer, Factor::Quality, Factor::Behavior, Factor::Complexity];

    fn value(self, s: &FactorSample) -> f64 {
        match self {
            Factor::Rebuffer => s.rebuffer,
            Factor::Quality => s.quality,
            Factor::Behavior => s.behavior,
            Factor::Complexity => s.complexity,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Factor::Rebuffer => "R",
            Factor::Quality => "Q",
            Factor::Behavior => "B",
            Factor::Complexity => "C",
        }
    }
}

/// Factors whose distance correlation with QoE reaches `threshold`,
/// strongest first. A constant factor column scores 0 and is never selected.
pub fn select_factors(samples: &[FactorSample], threshold: f64) -> Result<Vec<(Factor, f64)>> {
    if samples.len() < MIN_FACTOR_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_FACTOR_SAMPLES, got: samples.len() });
    }
    let qoe: Vec<f64> = samples.iter().map(|s| s.qoe).collect();
    if qoe.iter().all(|&q| q == qoe[0]) {
        return Err(Error::DegenerateInput("QoE column is constant"));
    }
    let mut picked = Vec::new();
    for factor in Factor::ALL {
        let col: Vec<f64> = samples.iter().map(|s| factor.value(s)).collect();
        if col.iter().all(|&v| v == col[0]) {
            continue;
        }
        let d = distance_correlation(&col, &qoe)?;
        if d >= threshold {
            picked.push((factor, d));
        }
    }
    picked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(picked)
}

/// Picks the QoE structure for a user: the distance-correlation screen
/// narrows the candidate structures, and the best fitting candidate wins.
pub fn identify_structure(samples: &[FactorSample], threshold: f64) -> Result<FitReport> {
    let selected = select_factors(samples, threshold)?;
    let has = |f: Factor| selected.iter().any(|(g, _)| *g == f);
    let mut candidates: Vec<Structure> = Structure::ALL
        .into_iter()
        .filter(|s| (!s.uses_rebuffer() || has(Factor::Rebuffer)) && (!s.uses_quality() || has(Factor::Quality)))
        .collect();
    if candidates.is_empty() {
        candidates = Structure::ALL.to_vec();
    }
    let mut best: Option<FitReport> = None;
    for s in candidates {
        let report = fit_model(s.index(), samples)?;
        if best.as_ref().is_none_or(|b| report.model.fit_rmse < b.model.fit_rmse) {
            best = Some(report);
        }
    }
    Ok(best.expect("at least one candidate structure"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qoe::{mos_sample, Impact};
    use crate::rng::lane_rng;
    use rand::Rng;

    fn generate(structure: u8, n: usize, constant_quality: bool, seed: u64) -> Vec<FactorSample> {
        let mut rng = lane_rng(seed, 9);
        (0..n)
            .map(|_| {
                let rebuffer = 10.0 * rng.random::<f64>();
                let quality = if constant_quality { 0.6 } else { rng.random() };
                let behavior = 1.0 + rng.random::<f64>();
                let complexity = 1.0 + rng.random::<f64>();
                let qoe = mos_sample(structure, rebuffer, quality, behavior, complexity, Impact::new(0.5, 0.3), &mut rng)
                    .unwrap();
                FactorSample { qoe, rebuffer, quality, behavior, complexity }
            })
            .collect()
    }

    #[test]
    fn constant_quality_is_dropped() {
        let samples = generate(1, 400, true, 1);
        let picked = select_factors(&samples, 0.1).unwrap();
        assert!(picked.iter().all(|(f, _)| *f != Factor::Quality));
        assert!(picked.iter().any(|(f, _)| *f == Factor::Rebuffer));
    }

    #[test]
    fn threshold_edges() {
        let samples = generate(3, 200, false, 2);
        assert_eq!(select_factors(&samples, 0.0).unwrap().len(), 4);
        assert!(select_factors(&samples, 1.01).unwrap().is_empty());
        let sorted = select_factors(&samples, 0.0).unwrap();
        assert!(sorted.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(select_factors(&samples[..10], 0.1).is_err());
    }

    #[test]
    fn identifies_quality_users() {
        let samples = generate(2, 400, false, 3);
        let report = identify_structure(&samples, 0.1).unwrap();
        assert_eq!(report.model.structure, Structure::Quality);
    }
}
