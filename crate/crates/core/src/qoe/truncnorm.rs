//! Truncated normal sampling by inversion.
//!
//! One uniform per draw, so the number of random numbers consumed never
//! depends on the parameters.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{normal_cdf, normal_pdf, normal_ppf, sqrt};

/// Draws from `N(mu, sigma2)` conditioned on `[lo, hi]`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(mu: f64, sigma2: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    let u: f64 = rng.random();
    truncated_normal_from_uniform(mu, sigma2, lo, hi, u)
}

/// Maps a uniform `u in [0, 1)` to the truncated normal quantile.
pub fn truncated_normal_from_uniform(mu: f64, sigma2: f64, lo: f64, hi: f64, u: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Domain("truncation interval must satisfy lo < hi"));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::Domain("variance must be nonnegative"));
    }
    if sigma2 == 0.0 {
        return Ok(mu.clamp(lo, hi));
    }
    let sigma = sqrt(sigma2);
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    // Work in whichever tail keeps the CDF values small and exact.
    let z = if a > 0.0 { -standard_quantile(-b, -a, 1.0 - u) } else { standard_quantile(a, b, u) };
    Ok((mu + sigma * z).clamp(lo, hi))
}

fn standard_quantile(a: f64, b: f64, u: f64) -> f64 {
    let (pa, pb) = (normal_cdf(a), normal_cdf(b));
    let mass = pb - pa;
    if !(mass > 0.0) {
        // The whole interval sits beyond double precision in the lower tail;
        // the distribution is concentrated at the end closest to the mean.
        return b;
    }
    normal_ppf(pa + u * mass).clamp(a, b)
}

/// Mean of `N(mu, sigma2)` truncated to `[lo, hi]`.
pub fn truncated_normal_mean(mu: f64, sigma2: f64, lo: f64, hi: f64) -> f64 {
    if sigma2 <= 0.0 {
        return mu.clamp(lo, hi);
    }
    let sigma = sqrt(sigma2);
    let (a, b) = ((lo - mu) / sigma, (hi - mu) / sigma);
    let (a, b, sign) = if a > 0.0 { (-b, -a, -1.0) } else { (a, b, 1.0) };
    let mass = normal_cdf(b) - normal_cdf(a);
    if !(mass > 0.0) {
        return if sign > 0.0 { hi } else { lo };
    }
    let shift = (normal_pdf(a) - normal_pdf(b)) / mass;
    (mu + sign * sigma * shift).clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::lane_rng;

    #[test]
    fn degenerate_variance_returns_mean() {
        let mut rng = lane_rng(1, 1);
        assert_eq!(sample_truncated_normal(3.0, 0.0, 1.0, 5.0, &mut rng).unwrap(), 3.0);
        assert_eq!(sample_truncated_normal(7.0, 0.0, 1.0, 5.0, &mut rng).unwrap(), 5.0);
    }

    #[test]
    fn bad_interval_is_an_error() {
        let mut rng = lane_rng(1, 1);
        assert!(sample_truncated_normal(3.0, 1.0, 5.0, 5.0, &mut rng).is_err());
        assert!(sample_truncated_normal(3.0, 1.0, 5.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn upper_truncation_biases_down() {
        let mut rng = lane_rng(2, 1);
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = sample_truncated_normal(5.0, 8.0, 1.0, 5.0, &mut rng).unwrap();
            assert!(v <= 5.0 && v >= 1.0);
            sum += v;
        }
        assert!(sum / (n as f64) < 5.0);
    }

    #[test]
    fn far_tails_stay_inside() {
        for &(mu, s2) in &[(-40.0, 0.8), (60.0, 1.0), (-1e3, 1.0), (1e3, 8.0)] {
            for &u in &[0.0, 0.3, 0.999_999] {
                let v = truncated_normal_from_uniform(mu, s2, 1.0, 5.0, u).unwrap();
                assert!((1.0..=5.0).contains(&v), "mu={mu} u={u} v={v}");
            }
        }
        let v = truncated_normal_from_uniform(-40.0, 0.8, 1.0, 5.0, 0.5).unwrap();
        assert!(v < 1.1);
    }
}
