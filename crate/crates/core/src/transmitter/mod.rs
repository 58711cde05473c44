//! Time-bin BB84 transmitter with a gain-switched laser source.

pub mod diagnostics;
pub mod overlap;

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bb84State {
    X0,
    X1,
    Y0,
    Y1,
    Unmodulated,
}

impl Bb84State {
    pub const ALL: [Bb84State; 5] = [Self::X0, Self::X1, Self::Y0, Self::Y1, Self::Unmodulated];

    /// Relative amplitude c of the late bin.
    pub fn late_bin_factor(self) -> Complex64 {
        match self {
            Self::X0 | Self::Unmodulated => Complex64::new(1.0, 0.0),
            Self::X1 => Complex64::new(-1.0, 0.0),
            Self::Y0 => Complex64::new(0.0, 1.0),
            Self::Y1 => Complex64::new(0.0, -1.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::X0 => "X0",
            Self::X1 => "X1",
            Self::Y0 => "Y0",
            Self::Y1 => "Y1",
            Self::Unmodulated => "Unmodulated",
        }
    }
}

impl fmt::Display for Bb84State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Bb84State {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| invalid("state", format!("unknown BB84 state {s:?}; expected X0, X1, Y0, Y1 or Unmodulated")))
    }
}

/// Gain-switched laser. Times in ps, frequencies in THz / GHz as named.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaserModel {
    /// Intensity FWHM of a single pulse.
    pub pulse_duration_ps: f64,
    /// Linear chirp parameter of the Gaussian pulse.
    pub chirp: f64,
    /// Standard deviation of the emission time of each pulse.
    pub timing_jitter_ps: f64,
    /// Relative intensity variance s_I².
    pub intensity_variance: f64,
    pub center_frequency_thz: f64,
    /// Standard deviation of each pulse's center frequency.
    pub frequency_scatter_ghz: f64,
}

impl Default for LaserModel {
    fn default() -> Self {
        Self {
            pulse_duration_ps: 30.0,
            chirp: 4.47,
            timing_jitter_ps: 1.0,
            intensity_variance: 7e-4,
            center_frequency_thz: 193.4,
            frequency_scatter_ghz: 38.8,
        }
    }
}

impl LaserModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_duration_ps > 0.0 && self.pulse_duration_ps.is_finite()) {
            return Err(invalid("pulse_duration_ps", "must be > 0"));
        }
        if !(self.chirp.is_finite()) {
            return Err(invalid("chirp", "must be finite"));
        }
        if !(self.timing_jitter_ps >= 0.0 && self.timing_jitter_ps.is_finite()) {
            return Err(invalid("timing_jitter_ps", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.intensity_variance) {
            return Err(invalid("intensity_variance", "must lie in [0, 1)"));
        }
        if !(self.frequency_scatter_ghz >= 0.0 && self.frequency_scatter_ghz.is_finite()) {
            return Err(invalid("frequency_scatter_ghz", "must be >= 0"));
        }
        Ok(())
    }

    /// Spectral intensity FWHM in GHz.
    pub fn spectral_fwhm_ghz(&self) -> f64 {
        1e3 * diagnostics::spectral_fwhm(self.pulse_duration_ps, self.chirp)
    }
}

/// One emitted double pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmittedPulse {
    pub state: Bb84State,
    /// Amplitudes of the early (t₀) and late (t₁) time bins.
    pub bins: [Complex64; 2],
    pub global_phase: f64,
    pub emission_offset_ps: f64,
    pub intensity_scale: f64,
    /// Center-frequency offset from the nominal carrier.
    pub detuning_ghz: f64,
}

impl EmittedPulse {
    pub fn total_mean(&self) -> f64 {
        self.bins.iter().map(|b| b.norm_sqr()).sum()
    }

    /// Mean photon number of one time bin.
    pub fn bin_mean(&self, bin: usize) -> f64 {
        self.bins[bin].norm_sqr()
    }
}

/// Ideal encoding: √(μ/2) e^{iφ} (1, c).
pub fn encode_bb84(state: Bb84State, mu: f64, phi: f64) -> Result<EmittedPulse> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid("mu", format!("mean photon number must be >= 0, got {mu}")));
    }
    let early = Complex64::from_polar((mu / 2.0).sqrt(), phi);
    Ok(EmittedPulse {
        state,
        bins: [early, early * state.late_bin_factor()],
        global_phase: phi,
        emission_offset_ps: 0.0,
        intensity_scale: 1.0,
        detuning_ghz: 0.0,
    })
}

/// Encoding with one draw of the laser's timing, intensity, phase and frequency noise.
pub fn sample_pulse(laser: &LaserModel, state: Bb84State, mu: f64, rng: &mut dyn RngCore) -> Result<EmittedPulse> {
    let phi = rng.random::<f64>() * 2.0 * PI;
    let z_t: f64 = StandardNormal.sample(rng);
    let z_i: f64 = StandardNormal.sample(rng);
    let z_f: f64 = StandardNormal.sample(rng);
    let scale = (1.0 + laser.intensity_variance.sqrt() * z_i).max(0.0);
    let mut p = encode_bb84(state, mu * scale, phi)?;
    p.emission_offset_ps = laser.timing_jitter_ps * z_t;
    p.intensity_scale = scale;
    p.detuning_ghz = laser.frequency_scatter_ghz * z_f;
    Ok(p)
}

/// Standard deviation of a Gaussian intensity profile with the given FWHM.
pub fn sigma_from_fwhm(fwhm: f64) -> f64 {
    fwhm / (2.0 * SQRT_2 * std::f64::consts::LN_2.sqrt())
}
