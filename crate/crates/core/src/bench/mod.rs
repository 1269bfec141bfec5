//! Benchmark schemes.

mod pdrl;
mod round_robin;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::qoe::{Impact, QoeModel, Structure};
use crate::scenario::UserProfile;

pub use pdrl::{pdrl_features, pdrl_network, PdrlLearner, PdrlOrchestrator, PDRL_FEATURES};
pub use round_robin::{round_robin_allocate, round_robin_quanta, RoundRobin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeId {
    Proposed,
    WoDa,
    PdrlL1,
    HslaL2,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [SchemeId::Proposed, SchemeId::WoDa, SchemeId::PdrlL1, SchemeId::HslaL2];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::WoDa => "wo-da",
            SchemeId::PdrlL1 => "pdrl-l1",
            SchemeId::HslaL2 => "hsla-l2",
        }
    }

    /// Whether the scheme trains a group-level policy.
    pub fn uses_group_policy(self) -> bool {
        matches!(self, SchemeId::Proposed | SchemeId::HslaL2)
    }

    /// Whether level two adapts the window and may run the game.
    pub fn adaptive_slicing(self) -> bool {
        self != SchemeId::WoDa
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Config(alloc::format!("unknown scheme '{s}'")))
    }
}

/// The one-size-fits-all model used without digital agents: combined
/// structure with the population-mean impact parameters.
pub fn general_model(profiles: &[UserProfile]) -> QoeModel {
    let n = profiles.len().max(1) as f64;
    let alpha = profiles.iter().map(|p| p.true_impact.0).sum::<f64>() / n;
    let beta = profiles.iter().map(|p| p.true_impact.1).sum::<f64>() / n;
    QoeModel::new(Structure::Combined, Impact::new(alpha, beta))
}

/// The demand model of the SLA-based level two: the user's QoS structure
/// with the context impact ignored.
pub fn sla_model(model: &QoeModel) -> QoeModel {
    QoeModel { impact: Impact::NEUTRAL, ..model.clone() }
}

/// Models used for demand prediction under a scheme.
pub fn demand_models(scheme: SchemeId, fitted: &[QoeModel], profiles: &[UserProfile]) -> Vec<QoeModel> {
    match scheme {
        SchemeId::Proposed | SchemeId::PdrlL1 => fitted.to_vec(),
        SchemeId::HslaL2 => fitted.iter().map(sla_model).collect(),
        SchemeId::WoDa => alloc::vec![general_model(profiles); profiles.len()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.name().parse::<SchemeId>().unwrap(), id);
        }
        assert!("nope".parse::<SchemeId>().is_err());
    }
}
