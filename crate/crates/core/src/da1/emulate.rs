use alloc::vec::Vec;

use rand::Rng;

use crate::netsim::behavior_env_trace;
use crate::scenario::{ComplexitySign, ScenarioConfig, UserProfile};

/// Parameters of the behaviour/environment emulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmulationParams {
    pub slot: f64,
    pub max_swipe_rate: f64,
    pub sign: ComplexitySign,
    /// Half-width of the uniform noise added to `B` and `C`.
    pub noise: f64,
}

impl EmulationParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            slot: cfg.slot,
            max_swipe_rate: cfg.max_swipe_rate(),
            sign: cfg.orchestration.complexity_sign,
            noise: cfg.orchestration.emulation_noise,
        }
    }
}

/// Predicted per-slot context of one user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextTrace {
    pub behavior: Vec<f64>,
    pub complexity: Vec<f64>,
    pub positions: Vec<(f64, f64)>,
}

impl ContextTrace {
    pub fn len(&self) -> usize {
        self.behavior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behavior.is_empty()
    }

    pub fn single(b: f64, c: f64, position: (f64, f64)) -> Self {
        Self { behavior: alloc::vec![b], complexity: alloc::vec![c], positions: alloc::vec![position] }
    }
}

/// Emulates `horizon` slots following slot `from_slot`.
///
/// Two uniforms are drawn per slot whatever the noise level.
pub fn emulate_context<R: Rng + ?Sized>(
    profile: &UserProfile,
    from_slot: u64,
    horizon: usize,
    params: &EmulationParams,
    rng: &mut R,
) -> ContextTrace {
    let mut out = ContextTrace {
        behavior: Vec::with_capacity(horizon),
        complexity: Vec::with_capacity(horizon),
        positions: Vec::with_capacity(horizon),
    };
    for j in 1..=horizon as u64 {
        let t = (from_slot + j) as f64 * params.slot;
        let (b, c) = behavior_env_trace(profile, t, params.max_swipe_rate, params.sign);
        let nb = params.noise * (2.0 * rng.random::<f64>() - 1.0);
        let nc = params.noise * (2.0 * rng.random::<f64>() - 1.0);
        out.behavior.push((b + nb).clamp(1.0, 2.0));
        out.complexity.push((c + nc).clamp(1.0, 2.0));
        out.positions.push(profile.position(t));
    }
    out
}
