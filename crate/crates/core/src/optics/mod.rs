//! Two phase-randomized weak coherent pulses at a balanced beam splitter.
//!
//! Port `a` carries |√μa⟩ in the reference mode `s`. Port `b` carries a
//! coherent state of mean μb whose amplitude is split between `s`
//! (fraction cos Θ) and an orthogonal mode `⊥` (fraction sin Θ), with a
//! relative phase θ. Everything here is a closed-form function of
//! (μa, μb, θ, Θ).

pub mod averaging;
pub mod mixed;

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::bessel_i0;

/// Poisson tail mass below which photon-number sums are truncated.
pub const PHOTON_TAIL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePair {
    mu_a: f64,
    mu_b: f64,
    phase: f64,
    overlap_angle: f64,
}

impl PulsePair {
    /// `phase` is the relative optical phase θ; `overlap_angle` is Θ in [0, π/2].
    pub fn new(mu_a: f64, mu_b: f64, phase: f64, overlap_angle: f64) -> Result<Self> {
        check_mean("mu_a", mu_a)?;
        check_mean("mu_b", mu_b)?;
        if !phase.is_finite() {
            return Err(invalid("phase", "must be finite"));
        }
        check_angle(overlap_angle)?;
        Ok(Self {
            mu_a,
            mu_b,
            phase,
            overlap_angle,
        })
    }

    /// Builds the pair from the squared mode overlap cos²Θ.
    pub fn from_cos2(mu_a: f64, mu_b: f64, phase: f64, cos2: f64) -> Result<Self> {
        Self::new(mu_a, mu_b, phase, overlap_angle_from_cos2(cos2)?)
    }

    pub fn mu_a(&self) -> f64 {
        self.mu_a
    }
    pub fn mu_b(&self) -> f64 {
        self.mu_b
    }
    pub fn phase(&self) -> f64 {
        self.phase
    }
    pub fn overlap_angle(&self) -> f64 {
        self.overlap_angle
    }
    pub fn cos2(&self) -> f64 {
        self.overlap_angle.cos().powi(2)
    }
    pub fn total_mean(&self) -> f64 {
        self.mu_a + self.mu_b
    }

    /// √(μa μb) cos θ cos Θ, the interference term shared by most formulas.
    fn cross(&self) -> f64 {
        (self.mu_a * self.mu_b).sqrt() * self.phase.cos() * self.overlap_angle.cos()
    }
}

/// Output amplitudes of the matched (`alpha`) and orthogonal (`beta`) modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterOutput {
    pub alpha_c: Complex64,
    pub alpha_d: Complex64,
    pub beta_c: Complex64,
    pub beta_d: Complex64,
}

impl SplitterOutput {
    pub fn port_means(&self) -> (f64, f64) {
        (
            self.alpha_c.norm_sqr() + self.beta_c.norm_sqr(),
            self.alpha_d.norm_sqr() + self.beta_d.norm_sqr(),
        )
    }

    pub fn total_energy(&self) -> f64 {
        let (c, d) = self.port_means();
        c + d
    }
}

/// Relative amplitudes of a pulse over an indexed mode basis, Σ|f(k)|² = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    amplitudes: Vec<Complex64>,
}

impl ModeProfile {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if amplitudes.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState {
                kind: "mode profile",
                reason: format!("Σ|f|² = {norm}, expected 1"),
            });
        }
        Ok(Self { amplitudes })
    }

    /// Scales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState {
                kind: "mode profile",
                reason: "zero or non-finite norm".into(),
            });
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                actual: other.amplitudes.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Θ such that cos Θ = |⟨self|other⟩|.
    pub fn overlap_angle(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm().min(1.0).acos())
    }
}

fn check_mean(name: &'static str, mu: f64) -> Result<()> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid(name, format!("mean photon number must be finite and >= 0, got {mu}")));
    }
    Ok(())
}

fn check_angle(angle: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&angle) {
        return Err(invalid(
            "overlap_angle",
            format!("must lie in [0, π/2], got {angle}"),
        ));
    }
    Ok(())
}

pub fn overlap_angle_from_cos2(cos2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&cos2) {
        return Err(invalid("cos2", format!("must lie in [0, 1], got {cos2}")));
    }
    Ok(cos2.sqrt().acos())
}

pub fn splitter_transform(p: &PulsePair) -> SplitterOutput {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a = Complex64::new(p.mu_a.sqrt(), 0.0);
    let b = Complex64::from_polar(p.mu_b.sqrt(), p.phase);
    let (sin_o, cos_o) = p.overlap_angle.sin_cos();
    SplitterOutput {
        alpha_c: (a + b * cos_o) * s,
        alpha_d: (a - b * cos_o) * s,
        beta_c: -b * sin_o * s,
        beta_d: b * sin_o * s,
    }
}

/// (μc, μd) = (μa+μb)/2 ± √(μa μb) cos θ cos Θ.
pub fn mean_output_photons(p: &PulsePair) -> (f64, f64) {
    let half = 0.5 * p.total_mean();
    let x = p.cross();
    // clamp rounding below zero at the destructive port
    ((half + x).max(0.0), (half - x).max(0.0))
}

fn ln_poisson(k: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    k as f64 * mean.ln() - mean - ln_fact
}

/// Probability of `m` photons at port c and `n` at port d.
pub fn joint_photon_prob(m: usize, n: usize, p: &PulsePair) -> f64 {
    let (mc, md) = mean_output_photons(p);
    (ln_poisson(m, mc) + ln_poisson(n, md)).exp()
}

/// Smallest N with P(Poisson(mean) > N) < [`PHOTON_TAIL`].
pub fn photon_cutoff(mean: f64) -> usize {
    let mut n = 0usize;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    while 1.0 - cdf >= PHOTON_TAIL && n < 10_000 {
        n += 1;
        pmf *= mean / n as f64;
        cdf += pmf;
        // 1 - cdf loses precision near 1; finish once the remaining terms are negligible
        if pmf < PHOTON_TAIL * 1e-3 && n as f64 > mean {
            break;
        }
    }
    n
}

/// P_mn for m, n up to the Poisson cutoff of each port.
pub fn joint_photon_table(p: &PulsePair) -> Vec<Vec<f64>> {
    let (mc, md) = mean_output_photons(p);
    let (nc, nd) = (photon_cutoff(mc), photon_cutoff(md));
    (0..=nc)
        .map(|m| (0..=nd).map(|n| joint_photon_prob(m, n, p)).collect())
        .collect()
}

/// Probability that both output ports register at least one photon, at fixed θ.
pub fn coincidence_prob(p: &PulsePair) -> f64 {
    let (mc, md) = mean_output_photons(p);
    let v = 1.0 - (-mc).exp() - (-md).exp() + (-p.total_mean()).exp();
    v.max(0.0)
}

/// Coincidence probability averaged over a uniformly random relative phase.
pub fn phase_averaged_coincidence(mu_a: f64, mu_b: f64, overlap_angle: f64) -> Result<f64> {
    check_mean("mu_a", mu_a)?;
    check_mean("mu_b", mu_b)?;
    check_angle(overlap_angle)?;
    let total = mu_a + mu_b;
    let z = (mu_a * mu_b).sqrt() * overlap_angle.cos();
    let v = 1.0 + (-total).exp() - 2.0 * (-0.5 * total).exp() * bessel_i0(z);
    Ok(v.max(0.0))
}

/// Phase-averaged HOM visibility against the no-interference singles product.
pub fn hom_visibility_exact(mu_a: f64, mu_b: f64, overlap_angle: f64) -> Result<f64> {
    check_mean("mu_a", mu_a)?;
    check_mean("mu_b", mu_b)?;
    check_angle(overlap_angle)?;
    let total = mu_a + mu_b;
    if total == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let z = (mu_a * mu_b).sqrt() * overlap_angle.cos();
    let e = (-0.5 * total).exp();
    let singles = -(-0.5 * total).exp_m1();
    // I0(z) - 1 via the series remainder keeps precision for tiny z
    Ok(2.0 * e * i0_minus_one(z) / (singles * singles))
}

/// Weak-pulse limit 2 μa μb cos²Θ / (μa+μb)².
pub fn hom_visibility_approx(mu_a: f64, mu_b: f64, cos2: f64) -> Result<f64> {
    check_mean("mu_a", mu_a)?;
    check_mean("mu_b", mu_b)?;
    if !(0.0..=1.0).contains(&cos2) {
        return Err(invalid("cos2", format!("must lie in [0, 1], got {cos2}")));
    }
    let total = mu_a + mu_b;
    if total == 0.0 {
        return Err(Error::DegenerateInput);
    }
    Ok(2.0 * mu_a * mu_b * cos2 / (total * total))
}

/// SWAP-test outcome probabilities (P0, P1) from the photon-number parity at port c.
pub fn swap_outcome_probs_wcp(p: &PulsePair) -> (f64, f64) {
    let (mc, _) = mean_output_photons(p);
    let e = (-2.0 * mc).exp();
    (0.5 * (1.0 + e), 0.5 * (1.0 - e))
}

/// Same probabilities obtained by summing P_mn over even / odd m.
pub fn swap_outcome_probs_by_parity(p: &PulsePair) -> (f64, f64) {
    let table = joint_photon_table(p);
    let mut even = 0.0;
    let mut odd = 0.0;
    for (m, row) in table.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if m % 2 == 0 {
            even += s;
        } else {
            odd += s;
        }
    }
    (even, odd)
}

/// |⟨φa|ψb⟩| for the two coherent inputs.
pub fn wcp_fidelity(p: &PulsePair) -> f64 {
    (-0.5 * p.total_mean() + p.cross()).exp()
}

/// Phase average of the squared fidelity with the vacuum contribution removed.
pub fn nonvacuum_fidelity_sq_avg(mu_a: f64, mu_b: f64, overlap_angle: f64) -> Result<f64> {
    check_mean("mu_a", mu_a)?;
    check_mean("mu_b", mu_b)?;
    check_angle(overlap_angle)?;
    let total = mu_a + mu_b;
    if total == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let z = 2.0 * (mu_a * mu_b).sqrt() * overlap_angle.cos();
    let singles = -(-0.5 * total).exp_m1();
    Ok((-total).exp() * i0_minus_one(z) / (singles * singles))
}

/// I0(z) - 1 without cancellation.
fn i0_minus_one(z: f64) -> f64 {
    if z.abs() < 1.0 {
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term <= sum * 1e-17 || term == 0.0 {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        bessel_i0(z) - 1.0
    }
}
