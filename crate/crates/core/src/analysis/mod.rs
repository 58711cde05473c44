//! Certification statistics: dip fitting, visibility, group comparison tests.

pub mod certify;
pub mod fit;
pub mod hypothesis;
pub mod report;

use serde::{Deserialize, Serialize};

pub use certify::{certify, certify_with, CertificationReport, CertifyOptions, GroupReport, PowerStatement, Verdict, WeightPooling};
pub use fit::{fit_dip, fit_dip_from, CovarianceMode, DipFit, DipParams, DipPoint};
pub use hypothesis::{
    anova_oneway, detectable_difference, likelihood_ratio, likelihood_ratio_test, power_analysis, AnovaResult,
    LrTestResult, Sidedness,
};

use crate::detection::NormalizedHistogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub v: f64,
    pub std: f64,
    /// False when the dip amplitude is within two standard deviations of zero.
    pub determinate: bool,
}

/// V = 1 − (1 − (A + B))/(1 − B), with std² = std_A² + std_B² (no correlation term).
pub fn visibility_from_fit(fit: &DipFit) -> Result<VisibilityEstimate> {
    let DipParams { a, b, .. } = fit.params;
    if b >= 1.0 {
        return Err(Error::Domain(format!("baseline offset B = {b} leaves no coincidences to normalize by")));
    }
    Ok(VisibilityEstimate {
        v: 1.0 - (1.0 - (a + b)) / (1.0 - b),
        std: (fit.std_a().powi(2) + fit.std_b().powi(2)).sqrt(),
        determinate: !fit.is_degenerate(),
    })
}

pub fn points_of(h: &NormalizedHistogram) -> Vec<DipPoint> {
    h.tau
        .iter()
        .zip(&h.y)
        .zip(&h.s)
        .map(|((&t, &y), &s)| DipPoint { t, y, s })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_with(a: f64, b: f64) -> DipFit {
        let mut cov = [[0.0; 4]; 4];
        cov[0][0] = 0.02f64.powi(2);
        cov[3][3] = 0.01f64.powi(2);
        DipFit {
            params: DipParams { a, t0: 0.0, sigma: 3.0, b },
            covariance: cov,
            covariance_mode: CovarianceMode::Absolute,
            chi2: 0.0,
            points: 11,
            iterations: 1,
        }
    }

    #[test]
    fn visibility_reductions() {
        let v = visibility_from_fit(&fit_with(0.3, 0.0)).unwrap();
        assert!((v.v - 0.3).abs() < 1e-15 && v.determinate);
        assert!((v.std - (0.02f64.powi(2) + 0.01f64.powi(2)).sqrt()).abs() < 1e-15);
        assert_eq!(visibility_from_fit(&fit_with(0.0, 0.0)).unwrap().v, 0.0);
        assert!(!visibility_from_fit(&fit_with(0.03, 0.0)).unwrap().determinate);
        // A + B = 0.3 with B = 0.1: 1 − 0.7/0.9
        assert!((visibility_from_fit(&fit_with(0.2, 0.1)).unwrap().v - (1.0 - 0.7 / 0.9)).abs() < 1e-15);
        assert!(visibility_from_fit(&fit_with(0.2, 1.0)).is_err());
    }
}
