//! Text rendering of a certification report. The structured form is the
//! serde serialization of the same struct.

use std::fmt::Write;

use super::certify::{CertificationReport, GroupReport};
use super::fit::CovarianceMode;
use super::hypothesis::Sidedness;

fn row(out: &mut String, g: &GroupReport) {
    match (&g.fit, &g.visibility) {
        (Some(f), Some(v)) => {
            let flag = if v.determinate { "" } else { "  (indeterminate)" };
            let _ = writeln!(
                out,
                "{:<14} {:>7.3} {:>7.3} {:>8.3} {:>7.3} {:>8.3} {:>7.3}{flag}",
                g.name,
                v.v,
                v.std,
                f.params.t0,
                f.std_t0(),
                f.params.sigma,
                f.std_sigma()
            );
        }
        _ => {
            let _ = writeln!(out, "{:<14} fit failed: {}", g.name, g.error.as_deref().unwrap_or("unknown"));
        }
    }
}

pub fn render_text(r: &CertificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "HOM visibility certification");
    let _ = writeln!(
        out,
        "alpha = {}, covariance = {}\n",
        r.options.alpha,
        match r.options.covariance {
            CovarianceMode::Absolute => "absolute",
            CovarianceMode::ResidualScaled => "residual-scaled",
        }
    );
    let _ = writeln!(
        out,
        "{:<14} {:>7} {:>7} {:>8} {:>7} {:>8} {:>7}",
        "group", "V", "std(V)", "t0/ps", "std", "sigma/ps", "std"
    );
    for g in r.groups.iter().chain(&r.pooled) {
        row(&mut out, g);
    }
    out.push('\n');
    match &r.likelihood_ratio {
        Some(lr) => {
            let _ = writeln!(
                out,
                "likelihood ratio: LR = {:.4}, df = {}, p = {:.4}",
                lr.statistic, lr.degrees_of_freedom, lr.p_value
            );
        }
        None => out.push_str("likelihood ratio: not performed\n"),
    }
    match &r.anova {
        Some(a) if a.degenerate => {
            let _ = writeln!(out, "ANOVA on t0: degenerate (zero within-group variance)");
        }
        Some(a) => {
            let _ = writeln!(
                out,
                "ANOVA on t0: F = {:.4}, df = ({}, {}), p = {:.4}",
                a.f, a.df_between, a.df_within, a.p_value
            );
        }
        None => out.push_str("ANOVA on t0: not performed\n"),
    }
    if let Some(p) = &r.power {
        let _ = writeln!(
            out,
            "power: dV = {} detected with probability {:.3} ({} test, std(V) = {:.4}); \
             80 % power reached at dV = {:.4}",
            p.delta_v,
            p.power,
            match p.sidedness {
                Sidedness::OneSided => "one-sided",
                Sidedness::TwoSided => "two-sided",
            },
            p.std_v,
            p.detectable_delta_v
        );
    }
    let _ = writeln!(out, "\nverdict: {}", r.verdict.describe());
    if !r.notes.is_empty() {
        out.push_str("\nnotes:\n");
        for n in &r.notes {
            let _ = writeln!(out, "  - {n}");
        }
    }
    out
}
