//! Log-distance path loss with log-normal shadowing and Shannon rates.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{db_to_linear, log10, log2, normal_ppf};
use crate::scenario::{BaseStation, ChannelConfig};

pub type ChannelModel = ChannelConfig;

/// A uniform draw in the open interval `(0, 1)`.
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// A standard normal draw by inversion (exactly one 64-bit draw).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    normal_ppf(open_uniform(rng))
}

/// Median path loss in dB (no shadowing).
pub fn median_path_loss(distance: f64, model: &ChannelModel) -> f64 {
    model.reference_loss_db + 10.0 * model.path_loss_exponent * log10(distance.max(1.0))
}

/// `L0 + 10 n log10(d) + X`, `X ~ N(0, sigma^2)` dB.
///
/// One normal is drawn even when `sigma = 0`.
pub fn path_loss<R: Rng + ?Sized>(distance: f64, model: &ChannelModel, rng: &mut R) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain("distance must be positive"));
    }
    let shadow = model.shadowing_sigma_db * standard_normal(rng);
    Ok(model.reference_loss_db + 10.0 * model.path_loss_exponent * log10(distance) + shadow)
}

/// `bw * log2(1 + snr)` in bit/s.
pub fn achievable_rate(bandwidth_hz: f64, snr_linear: f64) -> f64 {
    if bandwidth_hz <= 0.0 || snr_linear <= 0.0 {
        return 0.0;
    }
    bandwidth_hz * log2(1.0 + snr_linear)
}

/// Linear SNR for a given path loss. Transmit power is spread evenly over
/// the carrier, so the SNR does not depend on how much of it a user gets.
pub fn snr_linear(bs: &BaseStation, path_loss_db: f64, model: &ChannelModel) -> f64 {
    let tx_psd = bs.tx_power_dbm - 10.0 * log10(bs.dl_bandwidth_hz);
    let noise_psd = model.noise_density_dbm_hz + model.noise_figure_db;
    db_to_linear(tx_psd - path_loss_db - noise_psd)
}

/// Spectral efficiency (bit/s/Hz) at the median path loss.
pub fn median_spectral_efficiency(bs: &BaseStation, distance: f64, model: &ChannelModel) -> f64 {
    log2(1.0 + snr_linear(bs, median_path_loss(distance, model), model))
}
