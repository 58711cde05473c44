//! Mixed-state overlap: cos²Θ as a random variable.
//!
//! When the non-encoded degrees of freedom are mixed, x = cos²Θ fluctuates
//! pulse to pair. Its distribution is not fixed by the physics, so it is a
//! pluggable strategy selected by name.

use std::fmt::Debug;

use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution};

use super::{hom_visibility_approx, hom_visibility_exact, overlap_angle_from_cos2};
use crate::error::{invalid, Result};
use crate::registry::{Params, Registry};

pub trait OverlapDistribution: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    /// One draw of cos²Θ in [0, 1].
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct FixedOverlap {
    pub cos2: f64,
}

impl OverlapDistribution for FixedOverlap {
    fn name(&self) -> &'static str {
        "fixed"
    }
    fn mean(&self) -> f64 {
        self.cos2
    }
    fn variance(&self) -> f64 {
        0.0
    }
    fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
        self.cos2
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformOverlap {
    pub low: f64,
    pub high: f64,
}

impl OverlapDistribution for UniformOverlap {
    fn name(&self) -> &'static str {
        "uniform"
    }
    fn mean(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
    fn variance(&self) -> f64 {
        (self.high - self.low).powi(2) / 12.0
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.low + (self.high - self.low) * rng.random::<f64>()
    }
}

/// Beta distribution parametrized by its mean and variance.
#[derive(Debug, Clone, Copy)]
pub struct BetaOverlap {
    mean: f64,
    variance: f64,
    dist: Beta<f64>,
}

impl BetaOverlap {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(mean > 0.0 && mean < 1.0) {
            return Err(invalid("mean", format!("must lie in (0, 1), got {mean}")));
        }
        let limit = mean * (1.0 - mean);
        if !(variance > 0.0 && variance < limit) {
            return Err(invalid(
                "variance",
                format!("must lie in (0, {limit}) for mean {mean}, got {variance}"),
            ));
        }
        let k = limit / variance - 1.0;
        let dist = Beta::new(mean * k, (1.0 - mean) * k)
            .map_err(|e| invalid("variance", e.to_string()))?;
        Ok(Self {
            mean,
            variance,
            dist,
        })
    }
}

impl OverlapDistribution for BetaOverlap {
    fn name(&self) -> &'static str {
        "beta"
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn variance(&self) -> f64 {
        self.variance
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.dist.sample(rng)
    }
}

pub fn overlap_distributions() -> Registry<dyn OverlapDistribution> {
    let mut r: Registry<dyn OverlapDistribution> = Registry::new("overlap distribution");
    r.register("fixed", "cos²Θ fixed at `cos2`", |p: &Params| {
        let mut rd = p.reader();
        let cos2 = rd.get_or("cos2", 1.0);
        rd.finish()?;
        if !(0.0..=1.0).contains(&cos2) {
            return Err(invalid("cos2", format!("must lie in [0, 1], got {cos2}")));
        }
        Ok(Box::new(FixedOverlap { cos2 }) as Box<dyn OverlapDistribution>)
    });
    r.register("uniform", "cos²Θ uniform on [`low`, `high`]", |p: &Params| {
        let mut rd = p.reader();
        let low = rd.get_or("low", 0.0);
        let high = rd.get_or("high", 1.0);
        rd.finish()?;
        if !(0.0 <= low && low <= high && high <= 1.0) {
            return Err(invalid("low/high", "need 0 <= low <= high <= 1"));
        }
        Ok(Box::new(UniformOverlap { low, high }) as Box<dyn OverlapDistribution>)
    });
    r.register("beta", "cos²Θ ~ Beta with given `mean` and `variance`", |p: &Params| {
        let mut rd = p.reader();
        let mean = rd.require("mean")?;
        let variance = rd.require("variance")?;
        rd.finish()?;
        Ok(Box::new(BetaOverlap::new(mean, variance)?) as Box<dyn OverlapDistribution>)
    });
    r
}

/// Mean and variance of the weak-pulse visibility when cos²Θ is random.
pub fn mixed_visibility_approx(
    mu_a: f64,
    mu_b: f64,
    dist: &dyn OverlapDistribution,
) -> Result<(f64, f64)> {
    let scale = hom_visibility_approx(mu_a, mu_b, 1.0)?;
    Ok((scale * dist.mean(), scale * scale * dist.variance()))
}

/// Monte-Carlo mean of the exact visibility over draws of cos²Θ.
pub fn mixed_visibility_exact(
    mu_a: f64,
    mu_b: f64,
    dist: &dyn OverlapDistribution,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut acc = 0.0;
    for _ in 0..samples {
        let angle = overlap_angle_from_cos2(dist.sample(rng).clamp(0.0, 1.0))?;
        acc += hom_visibility_exact(mu_a, mu_b, angle)?;
    }
    Ok(acc / samples.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn registry_builds_all() {
        let r = overlap_distributions();
        assert_eq!(r.names().collect::<Vec<_>>(), ["beta", "fixed", "uniform"]);
        let d = r.build("beta", &Params::new().with("mean", 0.6).with("variance", 0.01)).unwrap();
        assert_eq!(d.name(), "beta");
        assert!(r.build("beta", &Params::new().with("mean", 0.6)).is_err());
        assert!(r.build("fixed", &Params::new().with("cos2", 1.5)).is_err());
    }

    #[test]
    fn beta_moments_match_samples() {
        let d = BetaOverlap::new(0.6, 0.02).unwrap();
        let mut rng = StreamKey::root(3).stream(0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - 0.6).abs() < 4.0 * (0.02f64 / n as f64).sqrt());
        assert!((v - 0.02).abs() < 1e-3);
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn mixed_visibility_moments() {
        let d = UniformOverlap { low: 0.4, high: 0.8 };
        let (m, v) = mixed_visibility_approx(0.1, 0.1, &d).unwrap();
        assert!((m - 0.3).abs() < 1e-15);
        assert!((v - 0.25 * 0.16 / 12.0).abs() < 1e-15);
        let mut rng = StreamKey::root(4).stream(0);
        let exact = mixed_visibility_exact(0.01, 0.01, &d, 20_000, &mut rng).unwrap();
        assert!((exact - 0.3).abs() < 5e-3);
    }
}
