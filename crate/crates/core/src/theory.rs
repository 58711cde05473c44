//! Tabulated model curves for plotting, selected by name.

use std::f64::consts::FRAC_PI_2;
use std::fmt::{Debug, Write};

use crate::error::{invalid, Result};
use crate::optics::{
    coincidence_prob, hom_visibility_approx, hom_visibility_exact, nonvacuum_fidelity_sq_avg,
    overlap_angle_from_cos2, phase_averaged_coincidence, swap_outcome_probs_wcp, PulsePair,
};
use crate::registry::{ParamReader, Params, Registry};
use crate::transmitter::diagnostics::{dip_width, hom_dip_profile, jitter_factor};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Comma-separated with a header row; values in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

pub trait TheoryQuery: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self) -> Result<Table>;
}

/// `n` evenly spaced points on [lo, hi]; `log` spaces them geometrically.
fn grid(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| {
            let f = k as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(f)
            } else {
                lo + f * (hi - lo)
            }
        })
        .collect()
}

fn points(rd: &mut ParamReader, default: f64) -> Result<usize> {
    let n = rd.get_or("points", default);
    if !((1.0..=1e6).contains(&n) && n.fract() == 0.0) {
        return Err(invalid("points", format!("must be an integer in [1, 1e6], got {n}")));
    }
    Ok(n as usize)
}

#[derive(Debug)]
struct VisibilityVsAngle {
    mu: f64,
    n: usize,
}

impl TheoryQuery for VisibilityVsAngle {
    fn name(&self) -> &'static str {
        "visibility-vs-angle"
    }
    fn evaluate(&self) -> Result<Table> {
        let rows = grid(0.0, FRAC_PI_2, self.n, false)
            .into_iter()
            .map(|th| {
                let c2 = th.cos().powi(2);
                Ok(vec![
                    th,
                    c2,
                    hom_visibility_exact(self.mu, self.mu, th)?,
                    hom_visibility_approx(self.mu, self.mu, c2)?,
                ])
            })
            .collect::<Result<_>>()?;
        Ok(Table {
            columns: vec!["theta_rad", "cos2", "v_exact", "v_approx"],
            rows,
        })
    }
}

#[derive(Debug)]
struct VisibilityVsMu {
    theta: f64,
    lo: f64,
    hi: f64,
    n: usize,
}

impl TheoryQuery for VisibilityVsMu {
    fn name(&self) -> &'static str {
        "visibility-vs-mu"
    }
    fn evaluate(&self) -> Result<Table> {
        let c2 = self.theta.cos().powi(2);
        let rows = grid(self.lo, self.hi, self.n, true)
            .into_iter()
            .map(|mu| {
                Ok(vec![
                    mu,
                    hom_visibility_exact(mu, mu, self.theta)?,
                    hom_visibility_approx(mu, mu, c2)?,
                ])
            })
            .collect::<Result<_>>()?;
        Ok(Table {
            columns: vec!["mu_per_arm", "v_exact", "v_approx"],
            rows,
        })
    }
}

#[derive(Debug)]
struct CoincidenceVsPhase {
    mu_a: f64,
    mu_b: f64,
    angle: f64,
    n: usize,
}

impl TheoryQuery for CoincidenceVsPhase {
    fn name(&self) -> &'static str {
        "coincidence-vs-phase"
    }
    fn evaluate(&self) -> Result<Table> {
        let avg = phase_averaged_coincidence(self.mu_a, self.mu_b, self.angle)?;
        let rows = grid(0.0, 2.0 * std::f64::consts::PI, self.n, false)
            .into_iter()
            .map(|th| {
                let p = PulsePair::new(self.mu_a, self.mu_b, th, self.angle)?;
                let (p0, p1) = swap_outcome_probs_wcp(&p);
                Ok(vec![th, coincidence_prob(&p), avg, p0, p1])
            })
            .collect::<Result<_>>()?;
        Ok(Table {
            columns: vec!["phase_rad", "p_coinc", "p_coinc_phase_avg", "swap_p0", "swap_p1"],
            rows,
        })
    }
}

#[derive(Debug)]
struct DipProfile {
    tau_p: f64,
    chirp: f64,
    span: f64,
    n: usize,
}

impl TheoryQuery for DipProfile {
    fn name(&self) -> &'static str {
        "dip-profile"
    }
    fn evaluate(&self) -> Result<Table> {
        let w = dip_width(self.tau_p, self.chirp);
        let rows = grid(-self.span, self.span, self.n, false)
            .into_iter()
            .map(|t| vec![t, hom_dip_profile(t, self.tau_p, self.chirp), w])
            .collect();
        Ok(Table {
            columns: vec!["t_ps", "normalized_coincidence", "dip_sigma_ps"],
            rows,
        })
    }
}

#[derive(Debug)]
struct FidelityRatio {
    mu: f64,
    n: usize,
}

impl TheoryQuery for FidelityRatio {
    fn name(&self) -> &'static str {
        "fidelity-ratio"
    }
    fn evaluate(&self) -> Result<Table> {
        let rows = grid(0.0, 1.0, self.n, false)
            .into_iter()
            .map(|c2| {
                let f = nonvacuum_fidelity_sq_avg(self.mu, self.mu, overlap_angle_from_cos2(c2)?)?;
                let v = hom_visibility_approx(self.mu, self.mu, c2)?;
                Ok(vec![c2, f, v, if v > 0.0 { f / v } else { f64::NAN }])
            })
            .collect::<Result<_>>()?;
        Ok(Table {
            columns: vec!["cos2", "fidelity_sq_nonvacuum", "v_approx", "ratio"],
            rows,
        })
    }
}

#[derive(Debug)]
struct JitterFactor {
    tau_p: f64,
    s_max: f64,
    n: usize,
}

impl TheoryQuery for JitterFactor {
    fn name(&self) -> &'static str {
        "jitter-factor"
    }
    fn evaluate(&self) -> Result<Table> {
        let rows = grid(0.0, self.s_max, self.n, false)
            .into_iter()
            .map(|s| vec![s, jitter_factor(self.tau_p, s)])
            .collect();
        Ok(Table {
            columns: vec!["jitter_ps", "factor"],
            rows,
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be > 0, got {v}")))
    }
}

pub fn theory_queries() -> Registry<dyn TheoryQuery> {
    let mut r: Registry<dyn TheoryQuery> = Registry::new("theory query");
    r.register("visibility-vs-angle", "exact and weak-pulse visibility over Θ ∈ [0, π/2] (mu, points)", |p: &Params| {
        let mut rd = p.reader();
        let q = VisibilityVsAngle {
            mu: positive("mu", rd.get_or("mu", 0.25))?,
            n: points(&mut rd, 91.0)?,
        };
        rd.finish()?;
        Ok(Box::new(q) as Box<dyn TheoryQuery>)
    });
    r.register("visibility-vs-mu", "visibility over a log grid of mean photon number (theta, mu_min, mu_max, points)", |p: &Params| {
        let mut rd = p.reader();
        let q = VisibilityVsMu {
            theta: rd.get_or("theta", 0.0),
            lo: positive("mu_min", rd.get_or("mu_min", 1e-3))?,
            hi: positive("mu_max", rd.get_or("mu_max", 2.0))?,
            n: points(&mut rd, 61.0)?,
        };
        rd.finish()?;
        Ok(Box::new(q) as Box<dyn TheoryQuery>)
    });
    r.register("coincidence-vs-phase", "coincidence and SWAP outcome probabilities over relative phase (mu_a, mu_b, angle, points)", |p: &Params| {
        let mut rd = p.reader();
        let q = CoincidenceVsPhase {
            mu_a: rd.get_or("mu_a", 0.25),
            mu_b: rd.get_or("mu_b", 0.25),
            angle: rd.get_or("angle", 0.0),
            n: points(&mut rd, 73.0)?,
        };
        rd.finish()?;
        PulsePair::new(q.mu_a, q.mu_b, 0.0, q.angle)?;
        Ok(Box::new(q) as Box<dyn TheoryQuery>)
    });
    r.register("dip-profile", "normalized coincidence of chirped Gaussian pulses over delay (tau_p, chirp, span, points)", |p: &Params| {
        let mut rd = p.reader();
        let q = DipProfile {
            tau_p: positive("tau_p", rd.get_or("tau_p", 30.0))?,
            chirp: rd.get_or("chirp", 4.47),
            span: positive("span", rd.get_or("span", 30.0))?,
            n: points(&mut rd, 121.0)?,
        };
        rd.finish()?;
        Ok(Box::new(q) as Box<dyn TheoryQuery>)
    });
    r.register("fidelity-ratio", "non-vacuum fidelity against weak-pulse visibility over cos²Θ (mu, points)", |p: &Params| {
        let mut rd = p.reader();
        let q = FidelityRatio {
            mu: positive("mu", rd.get_or("mu", 0.01))?,
            n: points(&mut rd, 51.0)?,
        };
        rd.finish()?;
        Ok(Box::new(q) as Box<dyn TheoryQuery>)
    });
    r.register("jitter-factor", "visibility factor from emission-time jitter (tau_p, s_max, points)", |p: &Params| {
        let mut rd = p.reader();
        let q = JitterFactor {
            tau_p: positive("tau_p", rd.get_or("tau_p", 30.0))?,
            s_max: positive("s_max", rd.get_or("s_max", 10.0))?,
            n: points(&mut rd, 101.0)?,
        };
        rd.finish()?;
        Ok(Box::new(q) as Box<dyn TheoryQuery>)
    });
    r
}
