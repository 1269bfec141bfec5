use crate::scenario::VideoCatalog;

/// Advances a playback buffer by one slot.
///
/// Returns the new buffer level (capped at `max_buffer`) and the stall time
/// incurred during the slot.
pub fn step_playback(buffer: f64, downloaded_playtime: f64, slot: f64, max_buffer: f64) -> (f64, f64) {
    let available = buffer + downloaded_playtime;
    let next = (available - slot).max(0.0).min(max_buffer);
    let stall = (slot - available).max(0.0);
    (next, stall)
}

/// Highest level whose bitrate fits under `safety * rate_estimate` and whose
/// transcoding fits in the compute allocation; level 0 when nothing fits.
pub fn select_level(catalog: &VideoCatalog, rate_estimate: f64, compute: f64, safety: f64) -> usize {
    (0..catalog.levels())
        .rev()
        .find(|&l| {
            catalog.quality_levels[l] <= safety * rate_estimate
                && catalog.compute_cost(catalog.level_quality(l)) <= compute * (1.0 + 1e-12)
        })
        .unwrap_or(0)
}
