//! Levenberg-Marquardt fitting of the impact parameters.
//!
//! Minimises `sum_j (qoe_j - E(theta; x_j))^2` over `theta = (alpha, beta)`
//! with each trial point projected onto `alpha, beta >= 0`. Only accepted
//! steps move the iterate, so the objective never increases.

use alloc::vec::Vec;

use super::{eval_qoe, eval_qoe_interior, FactorSample, Impact, QoeModel, Structure, MOS_MAX, MOS_MIN};
use crate::error::{Error, Result};
use crate::math::sqrt;

pub const LM_MAX_ITERS: usize = 200;
const START: (f64, f64) = (0.5, 0.5);

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: QoeModel,
    /// False when the iteration cap was hit; `model` is then the best iterate.
    pub converged: bool,
    pub iterations: usize,
    /// Sum of squared residuals after the start point and each accepted step.
    pub cost_trace: Vec<f64>,
}

fn cost(structure: Structure, theta: (f64, f64), samples: &[FactorSample]) -> f64 {
    let m = QoeModel::new(structure, Impact::new(theta.0, theta.1));
    samples
        .iter()
        .map(|s| {
            let r = s.qoe - eval_qoe(&m, s.rebuffer, s.quality, s.behavior, s.complexity);
            r * r
        })
        .sum()
}

/// Fits `(alpha, beta)` of the given structure to the samples.
pub fn fit_model(structure_index: u8, samples: &[FactorSample]) -> Result<FitReport> {
    let structure = Structure::try_from(structure_index)?;
    if samples.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples"));
    }
    let first = (samples[0].behavior, samples[0].complexity);
    if samples.iter().all(|s| (s.behavior, s.complexity) == first) {
        return Err(Error::InsufficientData("context never varies, impact is unidentifiable"));
    }

    let mut theta = START;
    let mut current = cost(structure, theta, samples);
    let mut trace = alloc::vec![current];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < LM_MAX_ITERS {
        iterations += 1;
        // Normal equations of the (unclamped part of the) model.
        let model = QoeModel::new(structure, Impact::new(theta.0, theta.1));
        let (mut h11, mut h12, mut h22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for s in samples {
            let interior = eval_qoe_interior(&model, s.rebuffer, s.quality, s.behavior, s.complexity);
            if !(MOS_MIN..=MOS_MAX).contains(&interior) {
                continue;
            }
            let score = structure.score(s.rebuffer, s.quality);
            let denom = 1.0 + theta.0 * (s.behavior - 1.0) + theta.1 * (s.complexity - 1.0);
            let k = -score / (denom * denom);
            let (j1, j2) = (k * (s.behavior - 1.0), k * (s.complexity - 1.0));
            let r = s.qoe - interior;
            h11 += j1 * j1;
            h12 += j1 * j2;
            h22 += j2 * j2;
            g1 += j1 * r;
            g2 += j2 * r;
        }
        // Projected gradient: components pushing into an active bound vanish.
        let pg1 = if theta.0 <= 0.0 && g1 < 0.0 { 0.0 } else { g1 };
        let pg2 = if theta.1 <= 0.0 && g2 < 0.0 { 0.0 } else { g2 };
        if pg1.abs().max(pg2.abs()) <= 1e-14 * (1.0 + current) {
            converged = true;
            break;
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let d1 = h11 * (1.0 + lambda) + 1e-12;
            let d2 = h22 * (1.0 + lambda) + 1e-12;
            let det = d1 * d2 - h12 * h12;
            let step = ((d2 * g1 - h12 * g2) / det, (d1 * g2 - h12 * g1) / det);
            let trial = ((theta.0 + step.0).max(0.0), (theta.1 + step.1).max(0.0));
            let trial_cost = cost(structure, trial, samples);
            if trial_cost < current {
                let moved = (trial.0 - theta.0).abs().max((trial.1 - theta.1).abs());
                let gain = current - trial_cost;
                theta = trial;
                current = trial_cost;
                trace.push(current);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if moved <= 1e-13 * (1.0 + theta.0.max(theta.1)) || gain <= 1e-16 * (1.0 + current) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No descent direction left at any damping: a stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }

    let model = QoeModel {
        structure,
        impact: Impact::new(theta.0, theta.1),
        fit_rmse: sqrt(current / samples.len() as f64),
        sample_count: samples.len(),
    };
    Ok(FitReport { model, converged, iterations, cost_trace: trace })
}

/// Root-mean-square prediction error of a model on samples.
pub fn model_rmse(model: &QoeModel, samples: &[FactorSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sse: f64 = samples
        .iter()
        .map(|s| {
            let r = s.qoe - eval_qoe(model, s.rebuffer, s.quality, s.behavior, s.complexity);
            r * r
        })
        .sum();
    sqrt(sse / samples.len() as f64)
}

/// True when the model explains recent data markedly worse than the data it
/// was fitted on. Fewer than 20 recent samples never trigger an update.
pub fn should_update(old: &QoeModel, recent: &[FactorSample], rmse_tolerance: f64) -> bool {
    const EPS: f64 = 1e-9;
    if recent.len() < super::factors::MIN_FACTOR_SAMPLES {
        return false;
    }
    model_rmse(old, recent) > rmse_tolerance * (old.fit_rmse + EPS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(qoe: f64, b: f64, c: f64) -> FactorSample {
        FactorSample { qoe, rebuffer: 0.0, quality: 0.5, behavior: b, complexity: c }
    }

    #[test]
    fn neutral_context_is_insufficient() {
        let samples: Vec<_> = (0..50).map(|i| sample(3.0 + 0.01 * i as f64, 1.0, 1.0)).collect();
        assert!(matches!(fit_model(2, &samples), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_model(2, &samples[..1]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn unknown_structure() {
        assert_eq!(fit_model(0, &[]), Err(Error::UnknownStructure(0)));
    }

    #[test]
    fn exact_two_point_fit() {
        // Q = 0.5 gives S = 3; I(2, 1) = 1 / (1 + alpha), I(1, 2) = 1 / (1 + beta).
        let samples = [sample(3.0 / 1.5, 2.0, 1.0), sample(3.0 / 1.25, 1.0, 2.0)];
        let r = fit_model(2, &samples).unwrap();
        assert!(r.converged);
        assert!((r.model.impact.alpha - 0.5).abs() < 1e-8, "{:?}", r.model);
        assert!((r.model.impact.beta - 0.25).abs() < 1e-8);
        assert!(r.cost_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tolerance_zero_always_updates() {
        let m = QoeModel { fit_rmse: 0.1, ..QoeModel::new(Structure::Quality, Impact::new(0.2, 0.2)) };
        let recent: Vec<_> = (0..30).map(|i| sample(2.0 + 0.05 * i as f64, 1.5, 1.5)).collect();
        assert!(should_update(&m, &recent, 0.0));
        assert!(!should_update(&m, &recent[..5], 0.0));
    }
}
