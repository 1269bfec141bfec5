use crate::da1::ContextTrace;
use crate::math::{hypot, sqrt};

/// Slice window lengths, minutes, from the calmest to the most dynamic
/// stage.
pub const WINDOW_MINUTES: [u32; 5] = [15, 12, 9, 6, 3];

/// Stage boundaries of the dynamics score: the 20/40/60/80th percentiles of
/// scores over default scenarios (k in 16..=24, 40 populations each, ten
/// 3-minute look-aheads per population).
pub const DEFAULT_DYNAMICS_THRESHOLDS: [f64; 4] = [0.275, 0.297, 0.316, 0.336];

/// Displacement per slot that counts as one unit of positional change
/// (40 km/h over one second).
const POSITION_SCALE_M: f64 = 40.0 / 3.6;

/// Mean over users of the RMS slot-to-slot change of `B`, `C` and the
/// normalised position.
pub fn dynamics_score(traces: &[ContextTrace]) -> f64 {
    let mut total = 0.0;
    let mut users = 0;
    for tr in traces {
        let n = tr.len();
        if n < 2 {
            users += 1;
            continue;
        }
        let mut acc = 0.0;
        for j in 1..n {
            let db = tr.behavior[j] - tr.behavior[j - 1];
            let dc = tr.complexity[j] - tr.complexity[j - 1];
            let (p, q) = (tr.positions[j], tr.positions[j - 1]);
            let dp = hypot(p.0 - q.0, p.1 - q.1) / POSITION_SCALE_M;
            acc += (db * db + dc * dc + dp * dp) / 3.0;
        }
        total += sqrt(acc / (n - 1) as f64);
        users += 1;
    }
    if users == 0 {
        0.0
    } else {
        total / users as f64
    }
}

/// Window length for a dynamics score; higher dynamics, shorter window.
pub fn dynamics_to_window(score: f64, thresholds: &[f64; 4], windows: &[u32; 5]) -> u32 {
    let stage = thresholds.iter().filter(|t| score > **t).count();
    windows[stage]
}
