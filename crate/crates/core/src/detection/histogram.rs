use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transmitter::Bb84State;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramRecord {
    pub tau_ps: f64,
    pub repeat: usize,
    pub coincidences: u64,
    pub trials: u64,
}

/// Raw coincidence counts of one state pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub group: String,
    pub states: Option<(Bb84State, Bb84State)>,
    pub reference_delay_ps: f64,
    pub records: Vec<HistogramRecord>,
}

impl CoincidenceHistogram {
    /// Delays in order of first appearance.
    pub fn delays(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.tau_ps) {
                out.push(r.tau_ps);
            }
        }
        out
    }

    /// Repeat indices in ascending order.
    pub fn repeats(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.records.iter().map(|r| r.repeat).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn total_coincidences(&self) -> u64 {
        self.records.iter().map(|r| r.coincidences).sum()
    }
}

/// Histogram normalized to unity at the reference delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedHistogram {
    pub group: String,
    pub tau: Vec<f64>,
    /// Mean over repeats.
    pub y: Vec<f64>,
    /// Standard deviation over repeats.
    pub s: Vec<f64>,
    /// `per_repeat[r][i]`: normalized rate of repeat r at `tau[i]`.
    pub per_repeat: Vec<Vec<f64>>,
}

/// Rates are coincidences per trial, so records with different trial
/// counts combine correctly. The spread at each delay is floored at the
/// Poisson error of a single repeat; with zero spread the fit weights
/// would be infinite.
pub fn normalize_histogram(h: &CoincidenceHistogram) -> Result<NormalizedHistogram> {
    let tau = h.delays();
    let repeats = h.repeats();
    if repeats.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "group `{}` has {} repeat(s); a spread needs at least 2",
            h.group,
            repeats.len()
        )));
    }
    let mut rate = vec![vec![f64::NAN; tau.len()]; repeats.len()];
    let mut counts = vec![vec![0u64; tau.len()]; repeats.len()];
    let mut trials = vec![vec![0u64; tau.len()]; repeats.len()];
    for rec in &h.records {
        let i = tau.iter().position(|&t| t == rec.tau_ps).expect("delay collected above");
        let r = repeats.binary_search(&rec.repeat).expect("repeat collected above");
        if !rate[r][i].is_nan() {
            return Err(Error::Histogram(format!(
                "duplicate record for tau = {} ps, repeat {}",
                rec.tau_ps, rec.repeat
            )));
        }
        if rec.trials == 0 || rec.coincidences > rec.trials {
            return Err(Error::Histogram(format!(
                "record tau = {} ps, repeat {} has {} coincidences in {} trials",
                rec.tau_ps, rec.repeat, rec.coincidences, rec.trials
            )));
        }
        rate[r][i] = rec.coincidences as f64 / rec.trials as f64;
        counts[r][i] = rec.coincidences;
        trials[r][i] = rec.trials;
    }
    if let Some((r, i)) = (0..repeats.len()).flat_map(|r| (0..tau.len()).map(move |i| (r, i))).find(|&(r, i)| rate[r][i].is_nan()) {
        return Err(Error::Histogram(format!("missing record for tau = {} ps, repeat {}", tau[i], repeats[r])));
    }
    let iref = tau
        .iter()
        .position(|&t| t == h.reference_delay_ps)
        .ok_or_else(|| Error::Histogram(format!("reference delay {} ps has no records", h.reference_delay_ps)))?;
    let n = repeats.len() as f64;
    let reference = rate.iter().map(|row| row[iref]).sum::<f64>() / n;
    if reference == 0.0 {
        return Err(Error::ZeroReference {
            tau_ps: h.reference_delay_ps,
        });
    }
    let per_repeat: Vec<Vec<f64>> = rate.iter().map(|row| row.iter().map(|x| x / reference).collect()).collect();
    let mut y = Vec::with_capacity(tau.len());
    let mut s = Vec::with_capacity(tau.len());
    for i in 0..tau.len() {
        let mean = per_repeat.iter().map(|row| row[i]).sum::<f64>() / n;
        let var = per_repeat.iter().map(|row| (row[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let mean_count = counts.iter().map(|row| row[i] as f64).sum::<f64>() / n;
        let mean_trials = trials.iter().map(|row| row[i] as f64).sum::<f64>() / n;
        let poisson = mean_count.max(1.0).sqrt() / mean_trials / reference;
        y.push(mean);
        s.push(var.sqrt().max(poisson));
    }
    Ok(NormalizedHistogram {
        group: h.group.clone(),
        tau,
        y,
        s,
        per_repeat,
    })
}
