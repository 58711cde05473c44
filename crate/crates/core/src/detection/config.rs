//! Experiment description read from TOML.
//!
//! Every section is optional and defaults to the reference apparatus; keys
//! that are not recognized are rejected so typos do not pass silently.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DetectorModel, TiaModel};
use crate::error::{invalid, Error, Result};
use crate::registry::Params;
use crate::transmitter::{Bb84State, LaserModel};

/// Which time bin of the double pulse the coincidence counter looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ZWindow {
    #[default]
    T0,
    T1,
}

impl ZWindow {
    pub fn bin(self) -> usize {
        match self {
            Self::T0 => 0,
            Self::T1 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub rep_period_ps: f64,
    pub bin_separation_ps: f64,
    pub thinning_interval_ns: f64,
    pub mean_photons_per_pulse: f64,
    /// Power transmission from the source to the interfering splitter, per arm.
    pub arm_transmission: f64,
    pub delays_ps: Vec<f64>,
    pub reference_delay_ps: f64,
    /// Path difference at which the two pulses coincide.
    pub delay_origin_ps: f64,
    pub duration_s: f64,
    pub repeats: usize,
    pub z_basis_window: ZWindow,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            rep_period_ps: 800.0,
            bin_separation_ps: 400.0,
            thinning_interval_ns: 51.2,
            mean_photons_per_pulse: 0.5,
            arm_transmission: 0.5,
            delays_ps: vec![-26.0, -16.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 16.0, 26.0],
            reference_delay_ps: -26.0,
            delay_origin_ps: 1.05,
            duration_s: 30.0,
            repeats: 5,
            z_basis_window: ZWindow::T0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub engine: String,
    /// Imperfection draws averaged per point by the aggregate engine.
    pub imperfection_samples: usize,
    /// Upper bound on simulated trials per point for the event-level engine.
    pub trial_cap: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            engine: "binomial".into(),
            imperfection_samples: 4096,
            trial_cap: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapSection {
    pub delay_kernel: String,
    pub spectral_model: String,
    pub spectral_params: BTreeMap<String, f64>,
}

impl Default for OverlapSection {
    fn default() -> Self {
        Self {
            delay_kernel: "chirped-gaussian".into(),
            spectral_model: "filtered-gaussian".into(),
            spectral_params: BTreeMap::from([("bandwidth_ghz".to_string(), 100.0)]),
        }
    }
}

impl OverlapSection {
    pub fn spectral_params(&self) -> Params {
        self.spectral_params.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }
}

/// Slow apparatus drift, redrawn independently for every (delay, repeat) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSection {
    /// Standard deviation of the path-difference setting error.
    pub delay_sd_ps: f64,
    /// Relative standard deviation of the mode-overlap scale.
    pub overlap_sd: f64,
    /// Relative standard deviation of the source power.
    pub intensity_sd: f64,
}

impl Default for DriftSection {
    fn default() -> Self {
        Self {
            delay_sd_ps: 0.7,
            overlap_sd: 0.08,
            intensity_sd: 0.012,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    /// State of the earlier-emitted pulse.
    pub a: Bb84State,
    /// State of the later-emitted pulse.
    pub b: Bb84State,
}

/// Extra overlap loss whenever exactly one pulse of a pair is in `state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSection {
    pub state: Bb84State,
    pub overlap_factor: f64,
}

impl DefectSection {
    pub fn factor_for(&self, a: Bb84State, b: Bb84State) -> f64 {
        if (a == self.state) != (b == self.state) {
            self.overlap_factor
        } else {
            1.0
        }
    }
}

/// Detectors on output ports c and d. A section that is present but
/// partial takes the remaining fields from [`DetectorModel::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detectors {
    #[serde(default = "default_detector_c")]
    pub c: DetectorModel,
    #[serde(default = "default_detector_d")]
    pub d: DetectorModel,
}

fn default_detector_c() -> DetectorModel {
    DetectorModel::default()
}

fn default_detector_d() -> DetectorModel {
    DetectorModel {
        jitter_ps: 14.0,
        ..DetectorModel::default()
    }
}

impl Default for Detectors {
    fn default() -> Self {
        Self {
            c: default_detector_c(),
            d: default_detector_d(),
        }
    }
}

fn default_groups() -> Vec<GroupSpec> {
    use Bb84State::*;
    [("unmodulated", Unmodulated, Unmodulated), ("X1-X0", X1, X0), ("Y0-X0", Y0, X0), ("Y1-X0", Y1, X0)]
        .into_iter()
        .map(|(name, a, b)| GroupSpec {
            name: name.into(),
            a,
            b,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub simulation: SimulationSection,
    pub laser: LaserModel,
    pub overlap: OverlapSection,
    pub detectors: Detectors,
    pub tia: TiaModel,
    pub drift: DriftSection,
    pub groups: Vec<GroupSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<DefectSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentSection::default(),
            simulation: SimulationSection::default(),
            laser: LaserModel::default(),
            overlap: OverlapSection::default(),
            detectors: Detectors::default(),
            tia: TiaModel::default(),
            drift: DriftSection::default(),
            groups: default_groups(),
            defect: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates. Syntax and schema errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Pulse pairs per measurement point before any cap.
    pub fn trials_per_point(&self) -> u64 {
        (self.experiment.duration_s * 1e9 / self.experiment.thinning_interval_ns).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be > 0, got {v}")))
            }
        };
        positive("experiment.rep_period_ps", e.rep_period_ps)?;
        positive("experiment.bin_separation_ps", e.bin_separation_ps)?;
        positive("experiment.thinning_interval_ns", e.thinning_interval_ns)?;
        positive("experiment.duration_s", e.duration_s)?;
        if !(e.mean_photons_per_pulse >= 0.0 && e.mean_photons_per_pulse.is_finite()) {
            return Err(invalid("experiment.mean_photons_per_pulse", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&e.arm_transmission) {
            return Err(invalid("experiment.arm_transmission", "must lie in [0, 1]"));
        }
        if e.delays_ps.is_empty() {
            return Err(invalid("experiment.delays_ps", "must list at least one delay"));
        }
        if e.delays_ps.iter().any(|d| !d.is_finite()) {
            return Err(invalid("experiment.delays_ps", "must be finite"));
        }
        if !e.delays_ps.contains(&e.reference_delay_ps) {
            return Err(invalid(
                "experiment.reference_delay_ps",
                format!("{} is not one of delays_ps", e.reference_delay_ps),
            ));
        }
        let mut sorted = e.delays_ps.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("experiment.delays_ps", "contains duplicates"));
        }
        if e.repeats == 0 {
            return Err(invalid("experiment.repeats", "must be >= 1"));
        }
        if self.trials_per_point() == 0 {
            return Err(invalid("experiment.duration_s", "shorter than one thinning interval"));
        }
        if self.simulation.imperfection_samples == 0 {
            return Err(invalid("simulation.imperfection_samples", "must be >= 1"));
        }
        if self.simulation.trial_cap == 0 {
            return Err(invalid("simulation.trial_cap", "must be >= 1"));
        }
        self.laser.validate()?;
        self.detectors.c.validate("detectors.c")?;
        self.detectors.d.validate("detectors.d")?;
        self.tia.validate()?;
        let dr = &self.drift;
        for (name, v) in [
            ("drift.delay_sd_ps", dr.delay_sd_ps),
            ("drift.overlap_sd", dr.overlap_sd),
            ("drift.intensity_sd", dr.intensity_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be >= 0"));
            }
        }
        if self.groups.is_empty() {
            return Err(invalid("groups", "at least one group is required"));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.name.trim().is_empty() || g.name.contains(['/', '\\', '\n']) {
                return Err(invalid("groups.name", format!("group {i} has an unusable name {:?}", g.name)));
            }
            if self.groups[..i].iter().any(|h| h.name == g.name) {
                return Err(invalid("groups.name", format!("duplicate group {:?}", g.name)));
            }
        }
        if let Some(d) = &self.defect {
            if !(0.0..=1.0).contains(&d.overlap_factor) {
                return Err(invalid("defect.overlap_factor", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.groups.len(), 4);
        assert_eq!(cfg.trials_per_point(), 585_937_500);
    }

    #[test]
    fn serialization_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.defect = Some(DefectSection {
            state: Bb84State::Y1,
            overlap_factor: 0.5,
        });
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn missing_group_field_reports_line() {
        let text = "[experiment]\nrepeats = 3\n\n[[groups]]\nname = \"g\"\na = \"X0\"\n";
        let err = ExperimentConfig::from_toml_str(text).unwrap_err().to_string();
        assert!(err.contains("missing field `b`"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let err = ExperimentConfig::from_toml_str("[laser]\npulse_duraton_ps = 3\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("pulse_duraton_ps"), "{err}");
    }

    #[test]
    fn semantic_validation() {
        for text in [
            "[experiment]\ndelays_ps = []\n",
            "[experiment]\nduration_s = 0\n",
            "[experiment]\nreference_delay_ps = 5\n",
            "[experiment]\nrepeats = 0\n",
            "groups = []\n",
            "[detectors.c]\nefficiency = 1.5\n",
        ] {
            assert!(ExperimentConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn defect_applies_to_mixed_pairs_only() {
        let d = DefectSection {
            state: Bb84State::Y1,
            overlap_factor: 0.4,
        };
        assert_eq!(d.factor_for(Bb84State::Y1, Bb84State::X0), 0.4);
        assert_eq!(d.factor_for(Bb84State::X0, Bb84State::Y1), 0.4);
        assert_eq!(d.factor_for(Bb84State::Y1, Bb84State::Y1), 1.0);
        assert_eq!(d.factor_for(Bb84State::X1, Bb84State::X0), 1.0);
    }
}
