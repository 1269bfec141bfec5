//! QoE modelling.
//!
//! A user's experience is `E = S(R, Q) x I(B, C)`: a QoS score of rebuffer
//! time `R` and normalised quality `Q`, degraded by the impact of
//! behavioural dynamics `B` and environmental complexity `C` (both in
//! `[1, 2]`). The impact family is
//!
//! ```text
//! I(B, C) = 1 / (1 + alpha (B - 1) + beta (C - 1))
//! ```
//!
//! which is 1 in a neutral context and decreases in both arguments.

mod dcor;
mod factors;
mod fit;
mod truncnorm;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dcor::distance_correlation;
pub use factors::{identify_structure, select_factors, Factor};
pub use fit::{fit_model, model_rmse, should_update, FitReport, LM_MAX_ITERS};
pub use truncnorm::{sample_truncated_normal, truncated_normal_from_uniform, truncated_normal_mean};

pub const MOS_MIN: f64 = 1.0;
pub const MOS_MAX: f64 = 5.0;

/// The three ways QoS maps to a MOS score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Structure {
    /// `5 - 0.4 R`
    Rebuffer = 1,
    /// `1 + 4 Q`
    Quality = 2,
    /// `1 + 4 Q - 0.4 R`
    Combined = 3,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::Rebuffer, Structure::Quality, Structure::Combined];

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Variance of the MOS generator for this structure.
    pub fn mos_variance(self) -> f64 {
        match self {
            Structure::Rebuffer => 8.0,
            Structure::Quality => 1.0,
            Structure::Combined => 0.8,
        }
    }

    /// QoS score, clamped to the MOS scale.
    pub fn score(self, rebuffer: f64, quality: f64) -> f64 {
        let raw = match self {
            Structure::Rebuffer => 5.0 - 0.4 * rebuffer,
            Structure::Quality => 1.0 + 4.0 * quality,
            Structure::Combined => 1.0 + 4.0 * quality - 0.4 * rebuffer,
        };
        raw.clamp(MOS_MIN, MOS_MAX)
    }

    pub fn uses_rebuffer(self) -> bool {
        self != Structure::Quality
    }

    pub fn uses_quality(self) -> bool {
        self != Structure::Rebuffer
    }
}

impl TryFrom<u8> for Structure {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Structure::Rebuffer),
            2 => Ok(Structure::Quality),
            3 => Ok(Structure::Combined),
            other => Err(Error::UnknownStructure(other)),
        }
    }
}

impl From<Structure> for u8 {
    fn from(s: Structure) -> u8 {
        s as u8
    }
}

/// Impact parameters `(alpha, beta)`, both nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impact {
    pub alpha: f64,
    pub beta: f64,
}

impl Impact {
    pub const NEUTRAL: Impact = Impact { alpha: 0.0, beta: 0.0 };

    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    /// `I(B, C)`.
    pub fn factor(&self, b: f64, c: f64) -> f64 {
        1.0 / (1.0 + self.alpha * (b - 1.0) + self.beta * (c - 1.0))
    }
}

impl From<(f64, f64)> for Impact {
    fn from((alpha, beta): (f64, f64)) -> Self {
        Self { alpha, beta }
    }
}

/// A fitted per-user QoE model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoeModel {
    pub structure: Structure,
    pub impact: Impact,
    /// Root-mean-square error on the fitting data, MOS.
    pub fit_rmse: f64,
    pub sample_count: usize,
}

impl QoeModel {
    pub fn new(structure: Structure, impact: Impact) -> Self {
        Self { structure, impact, fit_rmse: 0.0, sample_count: 0 }
    }

    pub fn structure_index(&self) -> u8 {
        self.structure.index()
    }
}

/// One observation used for factor analysis and fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorSample {
    pub qoe: f64,
    /// Rebuffer seconds in the observation period.
    pub rebuffer: f64,
    pub quality: f64,
    pub behavior: f64,
    pub complexity: f64,
}

/// QoS score of a structure given by index.
pub fn qos_score(structure_index: u8, rebuffer: f64, quality: f64) -> Result<f64> {
    Ok(Structure::try_from(structure_index)?.score(rebuffer, quality))
}

/// `S x I` before the final clamp to the MOS scale.
pub fn eval_qoe_interior(model: &QoeModel, rebuffer: f64, quality: f64, b: f64, c: f64) -> f64 {
    model.structure.score(rebuffer, quality) * model.impact.factor(b, c)
}

/// Predicted QoE, clamped to `[1, 5]`.
pub fn eval_qoe(model: &QoeModel, rebuffer: f64, quality: f64, b: f64, c: f64) -> f64 {
    eval_qoe_interior(model, rebuffer, quality, b, c).clamp(MOS_MIN, MOS_MAX)
}

/// Draws a MOS rating from the ground-truth generator of a user.
pub fn mos_sample<R: Rng + ?Sized>(
    structure_index: u8,
    rebuffer: f64,
    quality: f64,
    b: f64,
    c: f64,
    true_impact: Impact,
    rng: &mut R,
) -> Result<f64> {
    let structure = Structure::try_from(structure_index)?;
    let mean = mos_mean(structure, rebuffer, quality, b, c, true_impact);
    sample_truncated_normal(mean, structure.mos_variance(), MOS_MIN, MOS_MAX, rng)
}

/// Location parameter of the MOS generator (before truncation).
pub fn mos_mean(structure: Structure, rebuffer: f64, quality: f64, b: f64, c: f64, impact: Impact) -> f64 {
    structure.score(rebuffer, quality) * impact.factor(b, c)
}
