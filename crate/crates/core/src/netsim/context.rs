use crate::scenario::{ComplexitySign, UserProfile, SPEED_MAX_KMH, SPEED_MIN_KMH};

/// Behavioural dynamics `B` and environmental complexity `C` at time `t`
/// seconds, both in `[1, 2]`.
///
/// `B` follows the swipe rate relative to `max_swipe_rate`; `C` follows the
/// speed over the 2-40 km/h range, in the direction given by `sign`.
pub fn behavior_env_trace(profile: &UserProfile, t: f64, max_swipe_rate: f64, sign: ComplexitySign) -> (f64, f64) {
    let b = 1.0 + (profile.swipe.rate(t) / max_swipe_rate).clamp(0.0, 1.0);
    let speed = ((profile.speed_kmh - SPEED_MIN_KMH) / (SPEED_MAX_KMH - SPEED_MIN_KMH)).clamp(0.0, 1.0);
    let c = match sign {
        ComplexitySign::Positive => 1.0 + speed,
        ComplexitySign::Negative => 2.0 - speed,
    };
    (b, c)
}
