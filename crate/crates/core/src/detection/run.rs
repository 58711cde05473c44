use rayon::prelude::*;

use super::engine::{Apparatus, PointDrift, PointSpec};
use super::histogram::{CoincidenceHistogram, HistogramRecord};
use super::ExperimentConfig;
use crate::error::Result;
use crate::rng::StreamKey;

/// Simulates every (group, delay, repeat) point. Each point owns the stream
/// `root(seed) / group / delay index / repeat`, so results do not depend on
/// thread scheduling.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<Vec<CoincidenceHistogram>> {
    let app = Apparatus::new(config.clone())?;
    run_with(&app, seed)
}

pub fn run_with(app: &Apparatus, seed: u64) -> Result<Vec<CoincidenceHistogram>> {
    let cfg = app.config();
    let e = &cfg.experiment;
    let root = StreamKey::root(seed);
    let points: Vec<(usize, usize, usize)> = (0..cfg.groups.len())
        .flat_map(|g| (0..e.delays_ps.len()).flat_map(move |i| (0..e.repeats).map(move |r| (g, i, r))))
        .collect();
    let counts = points
        .par_iter()
        .map(|&(g, i, r)| {
            let key = root.path(&[g as u64, i as u64, r as u64]);
            let drift = PointDrift::sample(&cfg.drift, &mut key.child(0).stream(0));
            let spec = PointSpec {
                group: &cfg.groups[g],
                tau_ps: e.delays_ps[i],
                drift,
                key,
            };
            app.engine().simulate_point(app, &spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<CoincidenceHistogram> = cfg
        .groups
        .iter()
        .map(|g| CoincidenceHistogram {
            group: g.name.clone(),
            states: Some((g.a, g.b)),
            reference_delay_ps: e.reference_delay_ps,
            records: Vec::with_capacity(e.delays_ps.len() * e.repeats),
        })
        .collect();
    for (&(g, i, r), c) in points.iter().zip(counts) {
        out[g].records.push(HistogramRecord {
            tau_ps: e.delays_ps[i],
            repeat: r,
            coincidences: c.coincidences,
            trials: c.trials,
        });
    }
    Ok(out)
}
