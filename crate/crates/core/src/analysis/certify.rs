use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_dip, fit_dip_from, CovarianceMode, DipFit};
use super::hypothesis::{
    anova_oneway, check_alpha, detectable_difference, likelihood_ratio, power_analysis, AnovaResult, LrTestResult,
    Sidedness,
};
use super::{points_of, visibility_from_fit, VisibilityEstimate};
use crate::detection::{normalize_histogram, CoincidenceHistogram, NormalizedHistogram};
use crate::error::{Error, Result};
use crate::transmitter::diagnostics::intensity_visibility_reduction;
use crate::transmitter::LaserModel;

/// Visibility difference the power statement is evaluated at.
pub const POWER_DELTA_V: f64 = 0.05;
pub const TARGET_POWER: f64 = 0.8;
pub const POOLED_NAME: &str = "whole";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NotRejected,
    Rejected,
    Indeterminate,
    /// Only one group: visibility reported, nothing to compare.
    VisibilityOnly,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::NotRejected | Self::VisibilityOnly => 0,
            Self::Rejected => 2,
            Self::Indeterminate => 3,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Self::NotRejected => "indistinguishability not rejected",
            Self::Rejected => "indistinguishability rejected",
            Self::Indeterminate => "indeterminate",
            Self::VisibilityOnly => "single group: visibility only, no comparison performed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub alpha: f64,
    pub covariance: CovarianceMode,
    pub sidedness: Sidedness,
    /// Relative intensity variance of the source, for the intensity note.
    pub intensity_variance: f64,
    pub weights: WeightPooling,
}

/// Source of the per-delay standard deviations used as weights in the
/// likelihood-ratio fits. The per-group table always uses each group's own spread.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightPooling {
    /// Each group's own spread over its repeats.
    PerGroup,
    /// Repeat variance pooled over all groups at each delay, when all groups
    /// share one delay grid. Falls back to per-group otherwise.
    #[default]
    AcrossGroups,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            covariance: CovarianceMode::ResidualScaled,
            sidedness: Sidedness::OneSided,
            intensity_variance: LaserModel::default().intensity_variance,
            weights: WeightPooling::AcrossGroups,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub name: String,
    pub fit: Option<DipFit>,
    pub visibility: Option<VisibilityEstimate>,
    /// Dip centre of an unweighted fit to each repeat; `None` where that fit failed.
    pub repeat_t0: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerStatement {
    pub delta_v: f64,
    pub std_v: f64,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub power: f64,
    /// Smallest ΔV detected with probability [`TARGET_POWER`].
    pub detectable_delta_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub options: CertifyOptions,
    pub groups: Vec<GroupReport>,
    pub pooled: Option<GroupReport>,
    pub likelihood_ratio: Option<LrTestResult>,
    pub anova: Option<AnovaResult>,
    pub power: Option<PowerStatement>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

pub fn certify(histograms: &[CoincidenceHistogram], alpha: f64) -> Result<CertificationReport> {
    certify_with(
        histograms,
        &CertifyOptions {
            alpha,
            ..CertifyOptions::default()
        },
    )
}

fn group_report(name: &str, points: &[super::DipPoint], repeats: &[Vec<f64>], mode: CovarianceMode) -> GroupReport {
    let fit = match fit_dip(points, mode) {
        Ok(f) => f,
        Err(e) => {
            return GroupReport {
                name: name.to_string(),
                fit: None,
                visibility: None,
                repeat_t0: vec![None; repeats.len()],
                error: Some(e.to_string()),
            }
        }
    };
    let repeat_t0 = repeats
        .iter()
        .map(|ys| {
            // uniform weights: the group's s_i come from these same repeats and
            // would correlate the per-repeat estimates
            let pts: Vec<_> = points
                .iter()
                .zip(ys)
                .map(|(p, &y)| super::DipPoint { t: p.t, y, s: 1.0 })
                .collect();
            fit_dip_from(&pts, fit.params, mode).ok().map(|f| f.params.t0)
        })
        .collect();
    let (visibility, error) = match visibility_from_fit(&fit) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    GroupReport {
        name: name.to_string(),
        fit: Some(fit),
        visibility,
        repeat_t0,
        error,
    }
}

/// Normalize, fit each group and the pooled data, compare groups with the
/// likelihood-ratio test on the dip parameters and ANOVA on per-repeat dip
/// centres, and state the power to detect a visibility difference.
pub fn certify_with(histograms: &[CoincidenceHistogram], opts: &CertifyOptions) -> Result<CertificationReport> {
    check_alpha(opts.alpha)?;
    if histograms.is_empty() {
        return Err(Error::InsufficientData("no histograms to certify".into()));
    }
    for (i, h) in histograms.iter().enumerate() {
        if histograms[..i].iter().any(|o| o.group == h.group) {
            return Err(Error::Histogram(format!("group `{}` appears twice", h.group)));
        }
    }
    let normalized = histograms.iter().map(normalize_histogram).collect::<Result<Vec<_>>>()?;
    let mut notes = vec![intensity_note(opts.intensity_variance)];
    let data: Vec<_> = normalized.iter().map(points_of).collect();
    let groups: Vec<GroupReport> = normalized
        .par_iter()
        .zip(&data)
        .map(|(n, d)| group_report(&n.group, d, &n.per_repeat, opts.covariance))
        .collect();

    let mut report = CertificationReport {
        options: *opts,
        groups,
        pooled: None,
        likelihood_ratio: None,
        anova: None,
        power: None,
        verdict: Verdict::Indeterminate,
        notes: Vec::new(),
    };

    if histograms.len() == 1 {
        notes.push("only one group supplied: likelihood-ratio test and ANOVA skipped".into());
        report.verdict = if report.groups[0].fit.is_some() {
            Verdict::VisibilityOnly
        } else {
            Verdict::Indeterminate
        };
        if let Some(v) = report.groups[0].visibility {
            report.power = power_statement(v.std, opts).ok();
        }
        report.notes = notes;
        return Ok(report);
    }

    let pooled_points = data.concat();
    let pooled = fit_dip(&pooled_points, opts.covariance);
    report.pooled = Some(match &pooled {
        Ok(f) => GroupReport {
            name: POOLED_NAME.into(),
            fit: Some(f.clone()),
            visibility: visibility_from_fit(f).ok(),
            repeat_t0: Vec::new(),
            error: None,
        },
        Err(e) => GroupReport {
            name: POOLED_NAME.into(),
            fit: None,
            visibility: None,
            repeat_t0: Vec::new(),
            error: Some(e.to_string()),
        },
    });

    let lr = if opts.weights == WeightPooling::AcrossGroups {
        let mut shared = normalized.clone();
        if pool_spreads(&mut shared) {
            notes.push("likelihood ratio: fits repeated with repeat variance pooled across groups at each delay".into());
            let lr_data: Vec<_> = shared.iter().map(points_of).collect();
            let fits = lr_data
                .par_iter()
                .map(|d| fit_dip(d, opts.covariance))
                .collect::<Result<Vec<_>>>();
            let pooled = fit_dip(&lr_data.concat(), opts.covariance);
            match (fits, pooled) {
                (Ok(f), Ok(p)) => Some((lr_data, f, p)),
                _ => None,
            }
        } else {
            notes.push("groups use different delay grids: likelihood-ratio weights kept per group".into());
            own_weight_fits(&report, &data, &pooled)
        }
    } else {
        own_weight_fits(&report, &data, &pooled)
    };
    if let Some((lr_data, fits, pooled)) = lr {
        let lr = likelihood_ratio(&lr_data, &fits, &pooled)?;
        if lr.statistic < -1e-9 * (1.0 + pooled.chi2) {
            notes.push(format!(
                "pooled fit ended above the sum of group fits (LR = {:.3e}); optimizer did not reach the pooled optimum",
                lr.statistic
            ));
        }
        report.likelihood_ratio = Some(lr);
    } else {
        notes.push("a dip fit failed: likelihood-ratio test skipped".into());
    }

    let t0: Option<Vec<Vec<f64>>> = report
        .groups
        .iter()
        .map(|g| g.repeat_t0.iter().copied().collect::<Option<Vec<f64>>>())
        .collect();
    match t0.map(|t| anova_oneway(&t)) {
        Some(Ok(a)) => report.anova = Some(a),
        Some(Err(e)) => notes.push(format!("ANOVA on dip centres skipped: {e}")),
        None => notes.push("a per-repeat dip fit failed: ANOVA on dip centres skipped".into()),
    }

    if let Some(v) = report.pooled.as_ref().and_then(|p| p.visibility) {
        report.power = power_statement(v.std, opts).ok();
    }

    let lr_rejects = report.likelihood_ratio.is_some_and(|lr| lr.p_value < opts.alpha);
    let anova_rejects = report.anova.is_some_and(|a| !a.degenerate && a.p_value < opts.alpha);
    let complete = report.likelihood_ratio.is_some()
        && report.anova.is_some_and(|a| !a.degenerate)
        && report.groups.iter().all(|g| g.visibility.is_some_and(|v| v.determinate));
    report.verdict = if lr_rejects || anova_rejects {
        Verdict::Rejected
    } else if complete {
        Verdict::NotRejected
    } else {
        for g in &report.groups {
            if g.visibility.is_some_and(|v| !v.determinate) {
                notes.push(format!("group `{}`: dip amplitude within 2 std of zero, visibility indeterminate", g.name));
            }
        }
        if report.anova.is_some_and(|a| a.degenerate) {
            notes.push("ANOVA degenerate: dip centres have zero within-group spread".into());
        }
        Verdict::Indeterminate
    };
    report.notes = notes;
    Ok(report)
}

type LrInputs = (Vec<Vec<super::DipPoint>>, Vec<DipFit>, DipFit);

fn own_weight_fits(report: &CertificationReport, data: &[Vec<super::DipPoint>], pooled: &Result<DipFit>) -> Option<LrInputs> {
    let fits: Vec<DipFit> = report.groups.iter().map(|g| g.fit.clone()).collect::<Option<_>>()?;
    Some((data.to_vec(), fits, pooled.as_ref().ok()?.clone()))
}

/// Replaces every group's s_i by the pooled estimate √(Σ(n_g−1)s_gi² / Σ(n_g−1)).
/// Returns false, leaving the input untouched, if the delay grids differ.
fn pool_spreads(groups: &mut [NormalizedHistogram]) -> bool {
    let tau = &groups[0].tau;
    if groups.iter().any(|g| &g.tau != tau) {
        return false;
    }
    let dof: f64 = groups.iter().map(|g| g.per_repeat.len() as f64 - 1.0).sum();
    let pooled: Vec<f64> = (0..tau.len())
        .map(|i| {
            let ss: f64 = groups.iter().map(|g| (g.per_repeat.len() as f64 - 1.0) * g.s[i].powi(2)).sum();
            (ss / dof).sqrt()
        })
        .collect();
    for g in groups.iter_mut() {
        g.s.clone_from(&pooled);
    }
    true
}

fn power_statement(std_v: f64, opts: &CertifyOptions) -> Result<PowerStatement> {
    Ok(PowerStatement {
        delta_v: POWER_DELTA_V,
        std_v,
        alpha: opts.alpha,
        sidedness: opts.sidedness,
        power: power_analysis(POWER_DELTA_V, std_v, opts.alpha, opts.sidedness)?,
        detectable_delta_v: detectable_difference(std_v, opts.alpha, TARGET_POWER, opts.sidedness)?,
    })
}

/// The intensity-noise visibility loss from the s_I²/2 law, together with the
/// 0.4 % figure that is often quoted for this source and disagrees with it.
fn intensity_note(s2: f64) -> String {
    format!(
        "intensity noise s_I^2 = {s2:.1e} lowers visibility by a relative {:.3} % (s_I^2/2); \
         the 0.4 % loss quoted for this laser does not follow from that law and is not reproduced",
        100.0 * intensity_visibility_reduction(s2)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::DipParams;
    use crate::detection::HistogramRecord;

    /// Deterministic histogram whose repeats scatter by ±`wiggle` around the dip.
    fn synthetic(name: &str, p: DipParams, wiggle: f64) -> CoincidenceHistogram {
        let delays = [-26.0, -16.0, -10.0, -6.0, -3.0, 0.0, 3.0, 6.0, 10.0, 16.0, 26.0];
        let trials = 1_000_000_000u64;
        let mut records = Vec::new();
        for r in 0..5 {
            for (i, &tau) in delays.iter().enumerate() {
                let sign = if (r + i) % 2 == 0 { 1.0 } else { -1.0 };
                let y = p.model(tau) * (1.0 + wiggle * sign * (1.0 + 0.3 * r as f64));
                records.push(HistogramRecord {
                    tau_ps: tau,
                    repeat: r,
                    coincidences: (y * 1e6).round() as u64,
                    trials,
                });
            }
        }
        CoincidenceHistogram {
            group: name.into(),
            states: None,
            reference_delay_ps: -26.0,
            records,
        }
    }

    const BASE: DipParams = DipParams {
        a: 0.29,
        t0: 1.0,
        sigma: 3.1,
        b: 0.0,
    };

    #[test]
    fn single_group_reports_visibility_only() {
        let r = certify(&[synthetic("g", BASE, 0.01)], 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::VisibilityOnly);
        assert_eq!(r.verdict.exit_code(), 0);
        assert!(r.likelihood_ratio.is_none() && r.anova.is_none());
        assert!(r.notes.iter().any(|n| n.contains("skipped")));
    }

    #[test]
    fn lowered_visibility_is_rejected() {
        let low = DipParams { a: 0.14, ..BASE };
        let hs = [
            synthetic("a", BASE, 0.01),
            synthetic("b", BASE, 0.012),
            synthetic("c", low, 0.01),
        ];
        let r = certify(&hs, 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::Rejected, "{:?}", r.likelihood_ratio);
        assert_eq!(r.verdict.exit_code(), 2);
    }

    #[test]
    fn flat_group_is_indeterminate() {
        let flat = DipParams { a: 0.0, ..BASE };
        let r = certify(&[synthetic("a", BASE, 0.01), synthetic("b", flat, 0.01)], 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::Indeterminate);
    }

    #[test]
    fn duplicate_groups_and_bad_alpha() {
        let h = synthetic("a", BASE, 0.01);
        assert!(certify(&[h.clone(), h.clone()], 0.05).is_err());
        assert!(certify(&[h], 1.5).is_err());
    }
}
