//! Closed-form source-imperfection models: timing jitter, intensity
//! fluctuation and linear chirp.

use std::f64::consts::{LN_2, PI, SQRT_2};

use super::sigma_from_fwhm;
use crate::error::{invalid, Error, Result};
use crate::special::erfc;

/// Overlap of two Gaussian pulses of FWHM `tau_p` whose centers differ by `d`.
pub fn timing_overlap(d: f64, tau_p: f64) -> f64 {
    let sigma = sigma_from_fwhm(tau_p);
    erfc(d.abs() / (2.0 * SQRT_2 * sigma))
}

/// Mean of [`timing_overlap`] when the relative delay is Normal(0, s²).
pub fn jitter_factor(tau_p: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let sigma = sigma_from_fwhm(tau_p);
    2.0 / PI * (2.0 * sigma / s).atan()
}

/// Mean and variance of 2μaμb/(μa+μb)² when both intensities carry an
/// independent relative fluctuation of variance `s_i2`.
pub fn intensity_factor_stats(s_i2: f64) -> (f64, f64) {
    (0.5 * (1.0 - 0.5 * s_i2), s_i2 * s_i2 / 8.0)
}

/// Relative visibility drop caused by intensity fluctuation, s_I²/2.
pub fn intensity_visibility_reduction(s_i2: f64) -> f64 {
    0.5 * s_i2
}

/// Spectral intensity FWHM (THz) of a linearly chirped Gaussian pulse of FWHM `tau_p` ps.
pub fn spectral_fwhm(tau_p: f64, a: f64) -> f64 {
    2.0 * LN_2 / PI * (1.0 + a * a).sqrt() / tau_p
}

/// Unit-area spectral intensity at detuning `nu` (THz) from the carrier.
pub fn chirped_spectrum(nu: f64, tau_p: f64, a: f64) -> f64 {
    let sigma = sigma_from_fwhm(spectral_fwhm(tau_p, a));
    (-0.5 * (nu / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Normalized coincidence rate at delay `t` from the dip center.
pub fn hom_dip_profile(t: f64, tau_p: f64, a: f64) -> f64 {
    1.0 - 0.5 * (-4.0 * LN_2 * (1.0 + a * a) * t * t / (tau_p * tau_p)).exp()
}

/// Gaussian standard deviation of the dip, τ_p/√(8 ln2 (1+a²)).
pub fn dip_width(tau_p: f64, a: f64) -> f64 {
    tau_p / (8.0 * LN_2 * (1.0 + a * a)).sqrt()
}

/// Inverts [`dip_width`] for the chirp parameter.
pub fn chirp_from_dip(tau_p: f64, sigma_dip: f64) -> Result<f64> {
    if !(tau_p > 0.0 && sigma_dip > 0.0) {
        return Err(invalid("tau_p/sigma_dip", "must both be > 0"));
    }
    let ratio = tau_p * tau_p / (8.0 * LN_2 * sigma_dip * sigma_dip);
    // a one-ulp shortfall at the transform limit still means a = 0
    if ratio < 1.0 - 1e-12 {
        return Err(Error::Domain(format!(
            "dip width {sigma_dip} ps exceeds the transform limit {:.4} ps for a {tau_p} ps pulse",
            dip_width(tau_p, 0.0)
        )));
    }
    Ok((ratio - 1.0).max(0.0).sqrt())
}
