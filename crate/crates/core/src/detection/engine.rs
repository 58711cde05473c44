//! Simulation engines and the resolved apparatus they run on.
//!
//! `binomial` averages the exact coincidence probability over per-pair
//! imperfection draws and takes one binomial count per point. `trial`
//! follows individual pulse pairs through click generation, recovery and
//! timestamp comparison. Both share [`Apparatus::pair_for_bin`].

use std::f64::consts::PI;
use std::fmt::Debug;

use rand::RngCore;
use rand_distr::{Binomial, Distribution, StandardNormal};

use super::config::{ExperimentConfig, GroupSpec};
use super::{sample_clicks, window_acceptance, DetectorState};
use crate::error::{invalid, Result};
use crate::optics::{mean_output_photons, PulsePair};
use crate::registry::{Params, Registry};
use crate::rng::StreamKey;
use crate::special::bessel_i0;
use crate::transmitter::overlap::{delay_kernels, pair_overlap, spectral_models, DelayKernel, SpectralOverlap};
use crate::transmitter::{sample_pulse, EmittedPulse};

/// Drift state of one measurement point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDrift {
    pub delay_ps: f64,
    pub overlap_scale: f64,
    pub intensity_scale: f64,
}

impl Default for PointDrift {
    fn default() -> Self {
        Self {
            delay_ps: 0.0,
            overlap_scale: 1.0,
            intensity_scale: 1.0,
        }
    }
}

impl PointDrift {
    pub fn sample(cfg: &super::config::DriftSection, rng: &mut dyn RngCore) -> Self {
        let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        Self {
            delay_ps: cfg.delay_sd_ps * z[0],
            overlap_scale: (1.0 + cfg.overlap_sd * z[1]).max(0.0),
            intensity_scale: (1.0 + cfg.intensity_sd * z[2]).max(0.0),
        }
    }
}

/// Everything an engine needs for one (group, delay, repeat) point.
#[derive(Debug, Clone, Copy)]
pub struct PointSpec<'a> {
    pub group: &'a GroupSpec,
    pub tau_ps: f64,
    pub drift: PointDrift,
    pub key: StreamKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointCounts {
    pub coincidences: u64,
    pub trials: u64,
}

pub trait SimulationEngine: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn simulate_point(&self, app: &Apparatus, point: &PointSpec) -> Result<PointCounts>;
}

/// A validated configuration with its strategies resolved.
#[derive(Debug)]
pub struct Apparatus {
    config: ExperimentConfig,
    kernel: Box<dyn DelayKernel>,
    spectral: Box<dyn SpectralOverlap>,
    engine: Box<dyn SimulationEngine>,
    eta: [f64; 2],
    dark: [f64; 2],
    blocks_late_bin: [bool; 2],
    photon_acceptance: f64,
    dark_acceptance: f64,
}

impl Apparatus {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let kernel = delay_kernels().build(&config.overlap.delay_kernel, &Params::new())?;
        let spectral = spectral_models().build(&config.overlap.spectral_model, &config.overlap.spectral_params())?;
        let engine = engines().build(&config.simulation.engine, &Params::new())?;
        let dets = [&config.detectors.c, &config.detectors.d];
        let tia = &config.tia;
        let sigma = (dets[0].jitter_ps.powi(2) + dets[1].jitter_ps.powi(2) + 2.0 * tia.jitter_ps.powi(2)).sqrt();
        let bin_sep = config.experiment.bin_separation_ps;
        Ok(Self {
            eta: dets.map(|d| d.efficiency),
            dark: dets.map(|d| d.dark_probability(tia.gate_ps)),
            blocks_late_bin: dets.map(|d| d.recovery_time_ns * 1e3 > bin_sep),
            photon_acceptance: window_acceptance(sigma, tia),
            dark_acceptance: (tia.coincidence_window_ps / tia.gate_ps).min(1.0),
            config,
            kernel,
            spectral,
            engine,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn engine(&self) -> &dyn SimulationEngine {
        self.engine.as_ref()
    }

    /// Probability that a photon-photon coincidence survives the analyzer window.
    pub fn photon_acceptance(&self) -> f64 {
        self.photon_acceptance
    }

    /// Beam-splitter inputs for time bin `bin` of two emitted pulses.
    pub fn pair_for_bin(
        &self,
        p1: &EmittedPulse,
        p2: &EmittedPulse,
        tau_ps: f64,
        drift: &PointDrift,
        bin: usize,
    ) -> Result<PulsePair> {
        let e = &self.config.experiment;
        let t = e.arm_transmission * drift.intensity_scale;
        let (mu_a, mu_b) = (p1.bin_mean(bin) * t, p2.bin_mean(bin) * t);
        let theta = p2.bins[bin].arg() - p1.bins[bin].arg();
        let d = tau_ps + drift.delay_ps - e.delay_origin_ps + p1.emission_offset_ps - p2.emission_offset_ps;
        let defect = self.config.defect.as_ref().map_or(1.0, |df| df.factor_for(p1.state, p2.state));
        let cos2 = pair_overlap(
            &self.config.laser,
            self.kernel.as_ref(),
            self.spectral.as_ref(),
            d,
            p1.detuning_ghz,
            p2.detuning_ghz,
        ) * drift.overlap_scale
            * defect;
        PulsePair::from_cos2(mu_a, mu_b, theta, cos2.clamp(0.0, 1.0))
    }

    fn needs_joint_bins(&self) -> bool {
        self.config.experiment.z_basis_window.bin() == 1 && self.blocks_late_bin.iter().any(|&b| b)
    }

    /// Phase-averaged probability of a counted coincidence in the selected
    /// window, given the beam-splitter inputs of both time bins.
    pub fn expected_coincidence(&self, pairs: &[PulsePair; 2]) -> f64 {
        if self.needs_joint_bins() {
            self.expected_coincidence_quadrature(pairs, 64)
        } else {
            self.expected_coincidence_closed(&pairs[self.config.experiment.z_basis_window.bin()])
        }
    }

    fn combine(&self, p_photon: f64, p_any: f64) -> f64 {
        self.photon_acceptance * p_photon + self.dark_acceptance * (p_any - p_photon).max(0.0)
    }

    fn expected_coincidence_closed(&self, pair: &PulsePair) -> f64 {
        let [ec, ed] = self.eta;
        let [qc, qd] = self.dark;
        let m = pair.total_mean();
        let x = (pair.mu_a() * pair.mu_b()).sqrt() * pair.overlap_angle().cos();
        let nc = (-0.5 * ec * m).exp() * bessel_i0(ec * x);
        let nd = (-0.5 * ed * m).exp() * bessel_i0(ed * x);
        let ncd = (-0.5 * (ec + ed) * m).exp() * bessel_i0((ec - ed) * x);
        let p_photon = 1.0 - nc - nd + ncd;
        let p_any = 1.0 - (1.0 - qc) * nc - (1.0 - qd) * nd + (1.0 - qc) * (1.0 - qd) * ncd;
        self.combine(p_photon.max(0.0), p_any)
    }

    /// Same probability by trapezoid averaging over θ with both bins
    /// evaluated at their own phase; handles late-bin blocking by early clicks.
    pub fn expected_coincidence_quadrature(&self, pairs: &[PulsePair; 2], n: usize) -> f64 {
        let w = self.config.experiment.z_basis_window.bin();
        let shift = pairs[1].phase() - pairs[0].phase();
        let mut acc = 0.0;
        for k in 0..n {
            let theta = 2.0 * PI * k as f64 / n as f64;
            let (mut p_photon, mut p_any) = (1.0, 1.0);
            for x in 0..2 {
                let click = |pair: &PulsePair, th: f64| {
                    let p = PulsePair::new(pair.mu_a(), pair.mu_b(), th, pair.overlap_angle()).expect("validated pair");
                    let (mc, md) = mean_output_photons(&p);
                    -(-self.eta[x] * [mc, md][x]).exp_m1()
                };
                let a1 = click(&pairs[w], theta + if w == 1 { shift } else { 0.0 });
                let quiet0 = if w == 1 && self.blocks_late_bin[x] {
                    (1.0 - self.dark[x]) * (1.0 - click(&pairs[0], theta))
                } else {
                    1.0
                };
                p_photon *= quiet0 * a1;
                p_any *= quiet0 * (1.0 - (1.0 - self.dark[x]) * (1.0 - a1));
            }
            acc += self.combine(p_photon, p_any);
        }
        acc / n as f64
    }

    fn emit_pair(&self, group: &GroupSpec, rng: &mut dyn RngCore) -> Result<(EmittedPulse, EmittedPulse)> {
        let mu = self.config.experiment.mean_photons_per_pulse;
        let p1 = sample_pulse(&self.config.laser, group.a, mu, rng)?;
        let p2 = sample_pulse(&self.config.laser, group.b, mu, rng)?;
        Ok((p1, p2))
    }

    fn pairs(&self, p1: &EmittedPulse, p2: &EmittedPulse, point: &PointSpec) -> Result<[PulsePair; 2]> {
        Ok([
            self.pair_for_bin(p1, p2, point.tau_ps, &point.drift, 0)?,
            self.pair_for_bin(p1, p2, point.tau_ps, &point.drift, 1)?,
        ])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BinomialEngine;

impl SimulationEngine for BinomialEngine {
    fn name(&self) -> &'static str {
        "binomial"
    }

    fn simulate_point(&self, app: &Apparatus, point: &PointSpec) -> Result<PointCounts> {
        let samples = app.config.simulation.imperfection_samples;
        let mut rng = point.key.child(1).stream(0);
        let mut acc = 0.0;
        for _ in 0..samples {
            let (p1, p2) = app.emit_pair(point.group, &mut rng)?;
            acc += app.expected_coincidence(&app.pairs(&p1, &p2, point)?);
        }
        let p = (acc / samples as f64).clamp(0.0, 1.0);
        let trials = app.config.trials_per_point();
        let dist = Binomial::new(trials, p).map_err(|e| invalid("coincidence probability", e.to_string()))?;
        let coincidences = dist.sample(&mut point.key.child(2).stream(0));
        Ok(PointCounts { coincidences, trials })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrialEngine;

impl SimulationEngine for TrialEngine {
    fn name(&self) -> &'static str {
        "trial"
    }

    fn simulate_point(&self, app: &Apparatus, point: &PointSpec) -> Result<PointCounts> {
        let cfg = &app.config;
        let trials = cfg.trials_per_point().min(cfg.simulation.trial_cap);
        let dets = [&cfg.detectors.c, &cfg.detectors.d];
        let window = cfg.experiment.z_basis_window.bin();
        let period = cfg.experiment.thinning_interval_ns * 1e3;
        let key = point.key.child(1);
        let mut state = [DetectorState::default(); 2];
        let mut coincidences = 0;
        for k in 0..trials {
            let mut rng = key.stream(k);
            let (p1, p2) = app.emit_pair(point.group, &mut rng)?;
            let pairs = app.pairs(&p1, &p2, point)?;
            for (bin, pair) in pairs.iter().enumerate() {
                let t = k as f64 * period + bin as f64 * cfg.experiment.bin_separation_ps;
                let ev = sample_clicks(mean_output_photons(pair), t, dets, &cfg.tia, &mut state, &mut rng);
                if bin == window && ev.coincidence(&cfg.tia) {
                    coincidences += 1;
                }
            }
        }
        Ok(PointCounts { coincidences, trials })
    }
}

pub fn engines() -> Registry<dyn SimulationEngine> {
    let mut r: Registry<dyn SimulationEngine> = Registry::new("simulation engine");
    r.register("binomial", "exact per-pair probability, one binomial draw per point", |p: &Params| {
        p.reader().finish()?;
        Ok(Box::new(BinomialEngine) as Box<dyn SimulationEngine>)
    });
    r.register("trial", "event-level clicks with recovery and timestamps", |p: &Params| {
        p.reader().finish()?;
        Ok(Box::new(TrialEngine) as Box<dyn SimulationEngine>)
    });
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::config::ZWindow;
    use crate::optics::phase_averaged_coincidence;

    fn ideal_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.detectors.c.efficiency = 1.0;
        c.detectors.d.efficiency = 1.0;
        c.detectors.c.dark_rate_hz = 0.0;
        c.detectors.d.dark_rate_hz = 0.0;
        c.tia.coincidence_window_ps = 1e6;
        c
    }

    #[test]
    fn closed_form_reduces_to_optics_with_ideal_detectors() {
        let app = Apparatus::new(ideal_config()).unwrap();
        let pair = PulsePair::new(0.2, 0.3, 0.0, 0.4).unwrap();
        let want = phase_averaged_coincidence(0.2, 0.3, 0.4).unwrap();
        assert!((app.expected_coincidence(&[pair, pair]) - want).abs() < 1e-14);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let app = Apparatus::new(ExperimentConfig::default()).unwrap();
        let a = PulsePair::new(0.12, 0.15, 0.3, 0.5).unwrap();
        let b = PulsePair::new(0.12, 0.15, 1.9, 0.5).unwrap();
        let closed = app.expected_coincidence(&[a, b]);
        let quad = app.expected_coincidence_quadrature(&[a, b], 64);
        assert!(((closed - quad) / closed).abs() < 1e-12, "{closed} vs {quad}");
    }

    #[test]
    fn late_window_with_blocking_loses_early_clicks() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.z_basis_window = ZWindow::T1;
        let late = Apparatus::new(cfg).unwrap();
        let early = Apparatus::new(ExperimentConfig::default()).unwrap();
        let p = PulsePair::new(0.125, 0.125, 0.0, 1.2).unwrap();
        assert!(late.expected_coincidence(&[p, p]) < early.expected_coincidence(&[p, p]));
    }

    #[test]
    fn unknown_engine_is_reported() {
        let mut cfg = ExperimentConfig::default();
        cfg.simulation.engine = "exact".into();
        let err = Apparatus::new(cfg).unwrap_err().to_string();
        assert!(err.contains("binomial") && err.contains("trial"), "{err}");
    }
}
