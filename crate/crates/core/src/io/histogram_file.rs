//! Delimited histogram table.
//!
//! ```text
//! # homcert histogram
//! # manifest: 3f2a...
//! # group: X1-X0
//! # states: X1,X0
//! # reference_delay_ps: -26
//! tau_ps,repeat,coincidences,trials
//! -26,0,61234,585937500
//! ```
//!
//! `#` lines are comments; `key: value` comments carry metadata. Delays
//! are written in shortest round-trip form, so a parse restores every
//! record exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::detection::{CoincidenceHistogram, HistogramRecord};
use crate::error::{Error, Result};
use crate::transmitter::Bb84State;

pub const HEADER: [&str; 4] = ["tau_ps", "repeat", "coincidences", "trials"];

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFile {
    pub histogram: CoincidenceHistogram,
    /// Identifier of the run manifest that produced the file.
    pub manifest: Option<String>,
}

pub fn render_histogram(h: &CoincidenceHistogram, manifest: &str) -> String {
    let mut out = String::from("# homcert histogram\n");
    let _ = writeln!(out, "# manifest: {manifest}");
    let _ = writeln!(out, "# group: {}", h.group);
    if let Some((a, b)) = h.states {
        let _ = writeln!(out, "# states: {a},{b}");
    }
    let _ = writeln!(out, "# reference_delay_ps: {}", h.reference_delay_ps);
    out.push_str(&HEADER.join(","));
    out.push('\n');
    for r in &h.records {
        let _ = writeln!(out, "{},{},{},{}", r.tau_ps, r.repeat, r.coincidences, r.trials);
    }
    out
}

fn meta(line: &str) -> Option<(&str, &str)> {
    let body = line.strip_prefix('#')?.trim();
    let (k, v) = body.split_once(':')?;
    Some((k.trim(), v.trim()))
}

/// Parses a histogram table. `fallback_group` names the group when the
/// file carries no `group` comment.
pub fn parse_histogram(text: &str, fallback_group: &str) -> Result<HistogramFile> {
    let (mut group, mut states, mut reference, mut manifest) = (None, None, None, None);
    for line in text.lines().filter(|l| l.trim_start().starts_with('#')) {
        let Some((k, v)) = meta(line.trim_start()) else { continue };
        match k {
            "group" => group = Some(v.to_string()),
            "manifest" => manifest = Some(v.to_string()),
            "states" => {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| Error::Histogram(format!("`states` needs two comma-separated states, got {v:?}")))?;
                states = Some((a.parse::<Bb84State>()?, b.parse::<Bb84State>()?));
            }
            "reference_delay_ps" => {
                reference = Some(
                    v.parse::<f64>()
                        .map_err(|_| Error::Histogram(format!("reference_delay_ps is not a number: {v:?}")))?,
                )
            }
            _ => {}
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Histogram(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Histogram(format!(
            "expected header `{}`, found `{}`",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Histogram(e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |what: &str| Error::Histogram(format!("line {line}: {what} is not valid: {:?}", row.as_slice()));
        records.push(HistogramRecord {
            tau_ps: field(0).parse().map_err(|_| bad("tau_ps"))?,
            repeat: field(1).parse().map_err(|_| bad("repeat"))?,
            coincidences: field(2).parse().map_err(|_| bad("coincidences"))?,
            trials: field(3).parse().map_err(|_| bad("trials"))?,
        });
    }
    if records.is_empty() {
        return Err(Error::Histogram("no records".into()));
    }
    let reference_delay_ps = reference.unwrap_or_else(|| {
        records
            .iter()
            .map(|r| r.tau_ps)
            .fold(f64::INFINITY, f64::min)
    });
    Ok(HistogramFile {
        histogram: CoincidenceHistogram {
            group: group.unwrap_or_else(|| fallback_group.to_string()),
            states,
            reference_delay_ps,
            records,
        },
        manifest,
    })
}

pub fn read_histogram(path: &Path) -> Result<HistogramFile> {
    let text = std::fs::read_to_string(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("group");
    parse_histogram(&text, stem.strip_prefix("hist_").unwrap_or(stem))
        .map_err(|e| Error::Histogram(format!("{}: {e}", path.display())))
}
