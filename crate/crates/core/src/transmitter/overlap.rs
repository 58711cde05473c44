//! Mapping from source imperfections to the mode overlap cos²Θ of a pulse pair.
//!
//! Two pluggable pieces: a delay kernel (overlap as a function of the
//! arrival-time difference) and a spectral model (overlap as a function of
//! the two center frequencies).

use std::f64::consts::LN_2;
use std::fmt::Debug;

use rand::RngCore;

use super::diagnostics::timing_overlap;
use super::{sample_pulse, sigma_from_fwhm, Bb84State, LaserModel};
use crate::error::{invalid, Result};
use crate::registry::{Params, Registry};

pub trait DelayKernel: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    /// Overlap factor in [0, 1] for arrival-time difference `d_ps`.
    fn overlap(&self, laser: &LaserModel, d_ps: f64) -> f64;
}

/// First-order coherence of two identical linearly chirped Gaussian pulses;
/// gives the dip 1 − ½exp[−4 ln2 (1+a²) d²/τ_p²].
#[derive(Debug, Clone, Copy)]
pub struct ChirpedGaussianKernel;

impl DelayKernel for ChirpedGaussianKernel {
    fn name(&self) -> &'static str {
        "chirped-gaussian"
    }
    fn overlap(&self, laser: &LaserModel, d: f64) -> f64 {
        let tau = laser.pulse_duration_ps;
        (-4.0 * LN_2 * (1.0 + laser.chirp * laser.chirp) * d * d / (tau * tau)).exp()
    }
}

/// Shared area of the two intensity envelopes.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeKernel;

impl DelayKernel for EnvelopeKernel {
    fn name(&self) -> &'static str {
        "erfc-envelope"
    }
    fn overlap(&self, laser: &LaserModel, d: f64) -> f64 {
        timing_overlap(d, laser.pulse_duration_ps)
    }
}

pub fn delay_kernels() -> Registry<dyn DelayKernel> {
    let mut r: Registry<dyn DelayKernel> = Registry::new("delay kernel");
    r.register("chirped-gaussian", "coherence of chirped Gaussian pulses", |p: &Params| {
        p.reader().finish()?;
        Ok(Box::new(ChirpedGaussianKernel) as Box<dyn DelayKernel>)
    });
    r.register("erfc-envelope", "overlap area of the intensity envelopes", |p: &Params| {
        p.reader().finish()?;
        Ok(Box::new(EnvelopeKernel) as Box<dyn DelayKernel>)
    });
    r
}

pub trait SpectralOverlap: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    /// Overlap factor in [0, 1] for two pulses detuned by `nu_a`, `nu_b` GHz from the carrier.
    fn overlap(&self, laser: &LaserModel, nu_a_ghz: f64, nu_b_ghz: f64) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct IdealSpectrum;

impl SpectralOverlap for IdealSpectrum {
    fn name(&self) -> &'static str {
        "ideal"
    }
    fn overlap(&self, _: &LaserModel, _: f64, _: f64) -> f64 {
        1.0
    }
}

/// Gaussian spectra passed through a Gaussian bandpass centered on the carrier.
#[derive(Debug, Clone, Copy)]
pub struct FilteredGaussianSpectrum {
    /// Filter FWHM in GHz; infinite means no filter.
    pub bandwidth_ghz: f64,
}

impl SpectralOverlap for FilteredGaussianSpectrum {
    fn name(&self) -> &'static str {
        "filtered-gaussian"
    }
    fn overlap(&self, laser: &LaserModel, nu_a: f64, nu_b: f64) -> f64 {
        let ss2 = sigma_from_fwhm(laser.spectral_fwhm_ghz()).powi(2);
        let delta = nu_a - nu_b;
        // filter pulls both centers toward the carrier and narrows both spectra
        let pull = if self.bandwidth_ghz.is_finite() {
            let sf2 = sigma_from_fwhm(self.bandwidth_ghz).powi(2);
            sf2 / (ss2 + sf2)
        } else {
            1.0
        };
        (-delta * delta * pull / (4.0 * ss2)).exp()
    }
}

pub fn spectral_models() -> Registry<dyn SpectralOverlap> {
    let mut r: Registry<dyn SpectralOverlap> = Registry::new("spectral model");
    r.register("ideal", "identical spectra", |p: &Params| {
        p.reader().finish()?;
        Ok(Box::new(IdealSpectrum) as Box<dyn SpectralOverlap>)
    });
    r.register(
        "filtered-gaussian",
        "Gaussian spectra through a Gaussian bandpass of FWHM `bandwidth_ghz`",
        |p: &Params| {
            let mut rd = p.reader();
            let bandwidth_ghz = rd.get_or("bandwidth_ghz", 100.0);
            rd.finish()?;
            if !(bandwidth_ghz > 0.0) {
                return Err(invalid("bandwidth_ghz", "must be > 0"));
            }
            Ok(Box::new(FilteredGaussianSpectrum { bandwidth_ghz }) as Box<dyn SpectralOverlap>)
        },
    );
    r
}

/// cos²Θ for one pulse pair given its relative delay and detunings.
pub fn pair_overlap(
    laser: &LaserModel,
    kernel: &dyn DelayKernel,
    spectral: &dyn SpectralOverlap,
    delay_ps: f64,
    nu_a_ghz: f64,
    nu_b_ghz: f64,
) -> f64 {
    (kernel.overlap(laser, delay_ps) * spectral.overlap(laser, nu_a_ghz, nu_b_ghz)).clamp(0.0, 1.0)
}

/// One cos²Θ draw for two independently emitted pulses at zero nominal
/// delay, using the envelope timing overlap and a Gaussian bandpass of
/// FWHM `filter_bw_ghz`.
pub fn effective_overlap(laser: &LaserModel, filter_bw_ghz: f64, rng: &mut dyn RngCore) -> Result<f64> {
    laser.validate()?;
    let a = sample_pulse(laser, Bb84State::Unmodulated, 1.0, rng)?;
    let b = sample_pulse(laser, Bb84State::Unmodulated, 1.0, rng)?;
    let spectral = FilteredGaussianSpectrum {
        bandwidth_ghz: filter_bw_ghz,
    };
    Ok(pair_overlap(
        laser,
        &EnvelopeKernel,
        &spectral,
        a.emission_offset_ps - b.emission_offset_ps,
        a.detuning_ghz,
        b.detuning_ghz,
    ))
}
