//! Averages over the uniformly random relative phase θ ∈ [0, 2π).
//!
//! Two independent routes: deterministic Gauss-Legendre quadrature for
//! tight checks and plain Monte-Carlo for statistical ones.

use std::f64::consts::PI;

use rand::{Rng, RngCore};

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// (1/2π) ∫₀^{2π} f(θ) dθ with `panels` composite 8-point Gauss-Legendre panels.
pub fn phase_average_quadrature<F: Fn(f64) -> f64>(f: F, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = 2.0 * PI / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let mid = (i as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h / (2.0 * PI)
}

/// Monte-Carlo estimate of the phase average.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub fn phase_average_monte_carlo<F: Fn(f64) -> f64>(
    f: F,
    samples: usize,
    rng: &mut dyn RngCore,
) -> McEstimate {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        let x = f(rng.random::<f64>() * 2.0 * PI);
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    McEstimate {
        mean,
        std_error: (var / samples as f64).sqrt(),
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn quadrature_integrates_trig_polynomials() {
        assert!((phase_average_quadrature(|t| t.cos().powi(2), 4) - 0.5).abs() < 1e-15);
        assert!(phase_average_quadrature(|t| (3.0 * t).sin(), 4).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_is_within_its_error() {
        let mut rng = StreamKey::root(1).stream(0);
        let est = phase_average_monte_carlo(|t| t.cos().powi(2), 100_000, &mut rng);
        assert!((est.mean - 0.5).abs() < 4.0 * est.std_error);
    }
}
