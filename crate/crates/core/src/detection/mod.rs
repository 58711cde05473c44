//! Measurement chain: adjacent-pulse interference, single-photon detectors
//! and the time-interval analyzer that counts coincidences.

pub mod config;
pub mod engine;
pub mod histogram;
pub mod run;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, GroupSpec, ZWindow};
pub use engine::{engines, Apparatus, PointDrift, SimulationEngine};
pub use histogram::{normalize_histogram, CoincidenceHistogram, HistogramRecord, NormalizedHistogram};
pub use run::run_experiment;

use crate::error::{invalid, Result};
use crate::optics::PulsePair;
use crate::special::{normal_cdf, phi_density};
use crate::transmitter::EmittedPulse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub recovery_time_ns: f64,
    /// Standard deviation of the detector's timing jitter.
    pub jitter_ps: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.63,
            dark_rate_hz: 20.0,
            recovery_time_ns: 10.0,
            jitter_ps: 24.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self, section: &'static str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid(section, format!("efficiency must lie in [0, 1], got {}", self.efficiency)));
        }
        for (what, v) in [
            ("dark_rate_hz", self.dark_rate_hz),
            ("recovery_time_ns", self.recovery_time_ns),
            ("jitter_ps", self.jitter_ps),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(section, format!("{what} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Probability of at least one dark count inside a gate of `gate_ps`.
    pub fn dark_probability(&self, gate_ps: f64) -> f64 {
        -(-self.dark_rate_hz * gate_ps * 1e-12).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TiaModel {
    /// Timestamp bin width; zero means continuous timestamps.
    pub resolution_ps: f64,
    /// Standard deviation of the timing jitter added per channel.
    pub jitter_ps: f64,
    /// Full width of the coincidence window centered on zero time difference.
    pub coincidence_window_ps: f64,
    /// Span around each time bin in which a dark count can land.
    pub gate_ps: f64,
}

impl Default for TiaModel {
    fn default() -> Self {
        Self {
            resolution_ps: 100.0,
            jitter_ps: 28.0,
            coincidence_window_ps: 200.0,
            gate_ps: 400.0,
        }
    }
}

impl TiaModel {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("tia.resolution_ps", self.resolution_ps),
            ("tia.jitter_ps", self.jitter_ps),
            ("tia.coincidence_window_ps", self.coincidence_window_ps),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(what, format!("must be >= 0, got {v}")));
            }
        }
        if !(self.gate_ps > 0.0 && self.gate_ps.is_finite()) {
            return Err(invalid("tia.gate_ps", "must be > 0"));
        }
        Ok(())
    }

    fn quantize(&self, t: f64, phase: f64) -> f64 {
        if self.resolution_ps > 0.0 {
            ((t + phase * self.resolution_ps) / self.resolution_ps).floor() * self.resolution_ps
        } else {
            t
        }
    }

    pub fn accepts(&self, tc: f64, td: f64) -> bool {
        (tc - td).abs() <= 0.5 * self.coincidence_window_ps
    }
}

/// Probability that two quantized timestamps whose true difference is
/// Normal(0, σ²) fall inside the window. The analyzer's clock phase is
/// uniform, so a difference δ maps to ⌊δ/R⌋R or ⌈δ/R⌉R with triangular weights.
pub fn window_acceptance(sigma: f64, tia: &TiaModel) -> f64 {
    let half = 0.5 * tia.coincidence_window_ps;
    let r = tia.resolution_ps;
    if r == 0.0 {
        if sigma == 0.0 {
            return 1.0;
        }
        return 2.0 * normal_cdf(half / sigma) - 1.0;
    }
    let k_max = (half / r + 1e-9).floor() as i64;
    if sigma == 0.0 {
        return if k_max >= 0 { 1.0 } else { 0.0 };
    }
    // G'' = φ_σ, so ∫ φ_σ(δ) tri((δ − kR)/R) dδ is the second difference of G
    let g = |x: f64| x * normal_cdf(x / sigma) + sigma * phi_density(x / sigma);
    let tri_mass = |k: i64| {
        let c = k as f64 * r;
        (g(c + r) - 2.0 * g(c) + g(c - r)) / r
    };
    (-k_max..=k_max).map(tri_mass).sum::<f64>().clamp(0.0, 1.0)
}

/// Recovery bookkeeping of one detector.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DetectorState {
    last_click_ps: Option<f64>,
}

impl DetectorState {
    fn ready(&self, t: f64, det: &DetectorModel) -> bool {
        self.last_click_ps.is_none_or(|last| t - last >= det.recovery_time_ns * 1e3)
    }
}

/// Registered clicks of one time bin, with analyzer timestamps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickEvent {
    pub timestamps: [Option<f64>; 2],
}

impl ClickEvent {
    pub fn clicks(&self) -> (bool, bool) {
        (self.timestamps[0].is_some(), self.timestamps[1].is_some())
    }

    pub fn coincidence(&self, tia: &TiaModel) -> bool {
        match self.timestamps {
            [Some(c), Some(d)] => tia.accepts(c, d),
            _ => false,
        }
    }
}

/// Detector response to one time bin centered at `t_ps` with mean photon
/// numbers `port_means` at ports (c, d). Clicks inside a detector's recovery
/// time are dropped and do not restart it.
pub fn sample_clicks(
    port_means: (f64, f64),
    t_ps: f64,
    detectors: [&DetectorModel; 2],
    tia: &TiaModel,
    state: &mut [DetectorState; 2],
    rng: &mut dyn RngCore,
) -> ClickEvent {
    let phase: f64 = rng.random();
    let mut timestamps = [None, None];
    for (i, mu) in [port_means.0, port_means.1].into_iter().enumerate() {
        let det = detectors[i];
        let p_photon = -(-det.efficiency * mu).exp_m1();
        let arrival = if rng.random::<f64>() < p_photon {
            Some(t_ps)
        } else if rng.random::<f64>() < det.dark_probability(tia.gate_ps) {
            Some(t_ps + (rng.random::<f64>() - 0.5) * tia.gate_ps)
        } else {
            None
        };
        let Some(arrival) = arrival else { continue };
        if !state[i].ready(arrival, det) {
            continue;
        }
        state[i].last_click_ps = Some(arrival);
        let zd: f64 = StandardNormal.sample(rng);
        let zt: f64 = StandardNormal.sample(rng);
        let t = arrival + det.jitter_ps * zd + tia.jitter_ps * zt;
        timestamps[i] = Some(tia.quantize(t, phase));
    }
    ClickEvent { timestamps }
}

/// Maps two emitted pulses onto the beam-splitter input pair for the
/// selected time bin at nominal path difference `tau_ps`.
pub fn interfere_adjacent(p1: &EmittedPulse, p2: &EmittedPulse, tau_ps: f64, app: &Apparatus) -> Result<PulsePair> {
    app.pair_for_bin(p1, p2, tau_ps, &PointDrift::default(), app.config().experiment.z_basis_window.bin())
}
