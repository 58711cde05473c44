//! Likelihood-ratio test across groups, one-way ANOVA and Gaussian power.

use serde::{Deserialize, Serialize};

use super::fit::{chi2, fit_dip, CovarianceMode, DipFit, DipPoint};
use crate::error::{invalid, Error, Result};
use crate::special::{chi2_survival, f_survival, normal_cdf, normal_quantile};

/// Number of free dip parameters per group.
pub const DIP_PARAMS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTestResult {
    pub statistic: f64,
    pub degrees_of_freedom: u32,
    pub p_value: f64,
}

/// LR = χ²(pooled) − Σ_j χ²(group j), both evaluated with the groups' own
/// weights. Under the null it is asymptotically χ² with 4(groups − 1) df.
pub fn likelihood_ratio(data: &[Vec<DipPoint>], group_fits: &[DipFit], pooled: &DipFit) -> Result<LrTestResult> {
    if data.len() != group_fits.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            actual: group_fits.len(),
        });
    }
    if data.len() < 2 {
        return Err(Error::InsufficientData("likelihood-ratio test needs at least 2 groups".into()));
    }
    let multi: f64 = data.iter().zip(group_fits).map(|(d, f)| chi2(d, &f.params)).sum();
    let single: f64 = data.iter().map(|d| chi2(d, &pooled.params)).sum();
    let statistic = single - multi;
    let degrees_of_freedom = (data.len() as u32 - 1) * DIP_PARAMS;
    Ok(LrTestResult {
        statistic,
        degrees_of_freedom,
        p_value: chi2_survival(statistic.max(0.0), degrees_of_freedom),
    })
}

/// Fits every group and the pooled data, then applies [`likelihood_ratio`].
pub fn likelihood_ratio_test(data: &[Vec<DipPoint>]) -> Result<LrTestResult> {
    let fits = data
        .iter()
        .map(|d| fit_dip(d, CovarianceMode::Absolute))
        .collect::<Result<Vec<_>>>()?;
    let pooled = fit_dip(&data.concat(), CovarianceMode::Absolute)?;
    likelihood_ratio(data, &fits, &pooled)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    #[serde(deserialize_with = "null_as_nan")]
    pub f: f64,
    pub df_between: u32,
    pub df_within: u32,
    #[serde(deserialize_with = "null_as_nan")]
    pub p_value: f64,
    /// Within-group variance is zero, so F is undefined. `f` and `p_value` are NaN.
    pub degenerate: bool,
}

/// JSON writes NaN as `null`; read it back as NaN.
fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData("ANOVA needs at least 2 groups".into()));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::InsufficientData(format!("every ANOVA group needs >= 2 samples, got {}", g.len())));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let (mut ss_between, mut ss_within) = (0.0, 0.0);
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let df_between = groups.len() as u32 - 1;
    let df_within = (n - groups.len()) as u32;
    let scale = groups.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if ss_within <= (f64::EPSILON * scale).powi(2) * n as f64 {
        return Ok(AnovaResult {
            f: f64::NAN,
            df_between,
            df_within,
            p_value: f64::NAN,
            degenerate: true,
        });
    }
    let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p_value: f_survival(f, df_between, df_within),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    #[default]
    OneSided,
    TwoSided,
}

/// Probability that a Gaussian z-test on the difference of two visibilities,
/// each with standard deviation `std_v`, detects a true difference `delta_v`.
pub fn power_analysis(delta_v: f64, std_v: f64, alpha: f64, sided: Sidedness) -> Result<f64> {
    check_alpha(alpha)?;
    if !(std_v > 0.0 && std_v.is_finite()) {
        return Err(invalid("std_v", format!("must be > 0, got {std_v}")));
    }
    let shift = delta_v.abs() / (std::f64::consts::SQRT_2 * std_v);
    Ok(match sided {
        Sidedness::OneSided => normal_cdf(shift - normal_quantile(1.0 - alpha)),
        Sidedness::TwoSided => {
            let z = normal_quantile(1.0 - alpha / 2.0);
            normal_cdf(shift - z) + normal_cdf(-shift - z)
        }
    })
}

/// Smallest difference detected with probability `power`.
pub fn detectable_difference(std_v: f64, alpha: f64, power: f64, sided: Sidedness) -> Result<f64> {
    check_alpha(alpha)?;
    if !(power > alpha && power < 1.0) {
        return Err(invalid("power", format!("must lie in (alpha, 1), got {power}")));
    }
    // two-sided: the far tail is negligible once power ≥ α, so bisect the exact curve
    let (mut lo, mut hi) = (0.0, 1.0);
    while power_analysis(hi * std_v, std_v, alpha, sided)? < power {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if power_analysis(mid * std_v, std_v, alpha, sided)? < power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) * std_v)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::fit::DipParams;

    fn points(p: &DipParams) -> Vec<DipPoint> {
        (-6..=6)
            .map(|k| {
                let t = 4.0 * k as f64;
                DipPoint { t, y: p.model(t), s: 0.02 }
            })
            .collect()
    }

    const P: DipParams = DipParams {
        a: 0.29,
        t0: 1.0,
        sigma: 3.1,
        b: 0.0,
    };

    #[test]
    fn identical_groups_give_zero_statistic() {
        let d = vec![points(&P); 4];
        let lr = likelihood_ratio_test(&d).unwrap();
        assert_eq!(lr.degrees_of_freedom, 12);
        assert!(lr.statistic.abs() < 1e-9, "{lr:?}");
        assert!((lr.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_structure_is_rejected() {
        let d = vec![points(&P); 2];
        let fit = fit_dip(&d[0], CovarianceMode::Absolute).unwrap();
        assert!(matches!(
            likelihood_ratio(&d, &[fit.clone()], &fit),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn anova_hand_example() {
        // means 2, 5; grand 3.5; SSB = 2·3·2.25 = 13.5; SSW = 2 + 2 = 4
        let r = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((r.f - 13.5 / (4.0 / 4.0)).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 4));
        assert!((r.p_value - f_survival(13.5, 1, 4)).abs() < 1e-15);
    }

    #[test]
    fn anova_constant_groups_are_degenerate() {
        let r = anova_oneway(&[vec![1.0, 1.0], vec![1.0, 1.0, 1.0]]).unwrap();
        assert!(r.degenerate && r.p_value.is_nan());
        let back: AnovaResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert!(back.degenerate && back.f.is_nan() && back.p_value.is_nan());
        assert!(anova_oneway(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn power_limits_and_reference_values() {
        for s in [Sidedness::OneSided, Sidedness::TwoSided] {
            // the normal quantile is accurate to a few 1e-11
            assert!((power_analysis(0.0, 0.02, 0.05, s).unwrap() - 0.05).abs() < 1e-9);
            assert!(power_analysis(10.0, 0.02, 0.05, s).unwrap() > 1.0 - 1e-12);
        }
        let one = power_analysis(0.05, 0.014, 0.05, Sidedness::OneSided).unwrap();
        let two = power_analysis(0.05, 0.014, 0.05, Sidedness::TwoSided).unwrap();
        assert!((one - 0.811).abs() < 1e-3 && (two - 0.714).abs() < 1e-3, "{one} {two}");
        let d = detectable_difference(0.014, 0.05, 0.8, Sidedness::OneSided).unwrap();
        // √2·0.014·(z_0.95 + z_0.8)
        assert!((d - 2f64.sqrt() * 0.014 * (1.6448536269514722 + 0.8416212335729143)).abs() < 1e-9);
    }
}
