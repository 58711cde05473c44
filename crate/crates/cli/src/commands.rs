use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use homcert::analysis::report::render_text;
use homcert::analysis::{
    certify_with, fit_dip, points_of, visibility_from_fit, CertificationReport, CertifyOptions, CovarianceMode,
    Sidedness, WeightPooling,
};
use homcert::detection::{normalize_histogram, run_experiment, CoincidenceHistogram, ExperimentConfig};
use homcert::io::{
    histogram_file_name, read_histogram, render_histogram, write_atomic, FileDigest, RunManifest, MANIFEST_FILE,
};
use homcert::registry::Params;
use homcert::theory::theory_queries;

use crate::{
    CertifyArgs, CovarianceArg, FitArgs, Format, ReportArgs, SidedArg, SimulateArgs, TheoryArgs, WeightsArg,
};

const DEFAULT_OUT_DIR: &str = "homcert-out";
pub const CERTIFY_MANIFEST_FILE: &str = "certify-manifest.json";

impl From<CovarianceArg> for CovarianceMode {
    fn from(c: CovarianceArg) -> Self {
        match c {
            CovarianceArg::Absolute => Self::Absolute,
            CovarianceArg::ResidualScaled => Self::ResidualScaled,
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
}

fn to_json(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Writes `files` under `dir`, then the manifest listing them. Everything is
/// rendered before the first write, so a failure leaves no partial set.
fn publish(dir: &Path, mut manifest: RunManifest, manifest_name: &str, files: Vec<(String, String)>) -> Result<RunManifest> {
    for (name, body) in &files {
        manifest.outputs.push(FileDigest::of_bytes(name.clone(), body.as_bytes()));
    }
    let manifest_json = manifest.to_json()?;
    for (name, body) in &files {
        write_atomic(&dir.join(name), body.as_bytes()).with_context(|| format!("writing {name}"))?;
    }
    write_atomic(&dir.join(manifest_name), manifest_json.as_bytes())?;
    Ok(manifest)
}

pub fn simulate(a: SimulateArgs) -> Result<u8> {
    let (config, seed) = match &a.replay {
        Some(path) => {
            let m = RunManifest::read(path).with_context(|| format!("reading {}", path.display()))?;
            if m.command != "simulate" {
                bail!("{} records a `{}` run, not `simulate`", path.display(), m.command);
            }
            let (Some(text), Some(seed)) = (m.config.as_deref(), m.seed) else {
                bail!("{} lacks the configuration or seed needed to replay", path.display());
            };
            (ExperimentConfig::from_toml_str(text)?, seed)
        }
        None => {
            let config = match &a.config {
                Some(p) => load_config(p)?,
                None => ExperimentConfig::default(),
            };
            (config, a.seed)
        }
    };
    let canonical = config.to_toml_string()?;
    let manifest = RunManifest::new("simulate").with_config(&canonical).with_seed(seed).seal();
    let histograms = run_experiment(&config, seed)?;

    let files: Vec<(String, String)> = histograms
        .iter()
        .map(|h| (histogram_file_name(&h.group), render_histogram(h, &manifest.run_id)))
        .collect();
    let dir = a.output.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let written = publish(&dir, manifest.clone(), MANIFEST_FILE, files.clone())?;

    match a.output.format {
        Format::Text => {
            println!("run {} (seed {seed}, engine {})", manifest.run_id, config.simulation.engine);
            for ((name, _), h) in files.iter().zip(&histograms) {
                println!(
                    "  {}  {:<14} {:>12} coincidences",
                    dir.join(name).display(),
                    h.group,
                    h.total_coincidences()
                );
            }
            println!("  {}", dir.join(MANIFEST_FILE).display());
        }
        Format::Structured => {
            print!("{}", written.to_json()?);
        }
    }
    Ok(0)
}

/// Expands directories to their `*.csv` files: in the order of the
/// directory's simulate manifest when there is one, then by name.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if !p.is_dir() {
            files.push(p.clone());
            continue;
        }
        let mut found: Vec<PathBuf> = std::fs::read_dir(p)
            .with_context(|| format!("listing {}", p.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "csv"))
            .collect();
        if found.is_empty() {
            bail!("no histogram files (*.csv) in {}", p.display());
        }
        found.sort();
        let listed: Vec<PathBuf> = RunManifest::read(&p.join(MANIFEST_FILE))
            .map(|m| m.outputs.iter().map(|o| p.join(&o.path)).collect())
            .unwrap_or_default();
        found.sort_by_key(|f| listed.iter().position(|l| l == f).unwrap_or(usize::MAX));
        files.extend(found);
    }
    Ok(files)
}

fn load_histograms(paths: &[PathBuf]) -> Result<(Vec<CoincidenceHistogram>, Vec<FileDigest>)> {
    let mut hs = Vec::new();
    let mut digests = Vec::new();
    for p in paths {
        let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        digests.push(FileDigest::of_bytes(name, &bytes));
        hs.push(read_histogram(p)?.histogram);
    }
    Ok((hs, digests))
}

fn render_report_text(manifest: &str, r: &CertificationReport) -> String {
    format!("manifest: {manifest}\n{}", render_text(r))
}

pub fn certify(a: CertifyArgs) -> Result<u8> {
    let mut opts = CertifyOptions {
        alpha: a.alpha,
        covariance: a.covariance.into(),
        sidedness: match a.sided {
            SidedArg::One => Sidedness::OneSided,
            SidedArg::Two => Sidedness::TwoSided,
        },
        weights: match a.weights {
            WeightsArg::PerGroup => WeightPooling::PerGroup,
            WeightsArg::AcrossGroups => WeightPooling::AcrossGroups,
        },
        ..CertifyOptions::default()
    };
    let mut manifest = RunManifest::new("certify").with_alpha(a.alpha);
    if let Some(p) = &a.config {
        let config = load_config(p)?;
        opts.intensity_variance = config.laser.intensity_variance;
        manifest = manifest.with_config(&config.to_toml_string()?);
    }
    let paths = expand_inputs(&a.inputs)?;
    let (histograms, digests) = load_histograms(&paths)?;
    let manifest = manifest.with_inputs(digests).seal();
    let report = certify_with(&histograms, &opts)?;

    let text = render_report_text(&manifest.run_id, &report);
    let structured = to_json(&json!({ "manifest": manifest.run_id, "report": report }))?;
    if let Some(dir) = &a.output.out {
        let files = vec![("report.txt".to_string(), text.clone()), ("report.json".to_string(), structured.clone())];
        publish(dir, manifest, CERTIFY_MANIFEST_FILE, files)?;
    }
    match a.output.format {
        Format::Text => print!("{text}"),
        Format::Structured => print!("{structured}"),
    }
    Ok(report.verdict.exit_code() as u8)
}

pub fn fit(a: FitArgs) -> Result<u8> {
    let file = read_histogram(&a.input)?;
    let bytes = std::fs::read(&a.input)?;
    let name = a.input.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let manifest = RunManifest::new("fit").with_inputs(vec![FileDigest::of_bytes(name, &bytes)]).seal();

    let norm = normalize_histogram(&file.histogram)?;
    let fit = fit_dip(&points_of(&norm), a.covariance.into())?;
    let vis = visibility_from_fit(&fit)?;
    let doc = json!({
        "manifest": manifest.run_id,
        "source_manifest": file.manifest,
        "group": norm.group,
        "fit": fit,
        "visibility": vis,
    });
    let structured = to_json(&doc)?;
    let mut text = String::new();
    let _ = writeln!(text, "manifest: {}", manifest.run_id);
    let _ = writeln!(text, "group {}: {} delays, chi2 = {:.3}", norm.group, fit.points, fit.chi2);
    let p = &fit.params;
    let _ = writeln!(text, "  V     = {:.4} ± {:.4}{}", vis.v, vis.std, if vis.determinate { "" } else { "  (indeterminate)" });
    let _ = writeln!(text, "  A     = {:.4} ± {:.4}", p.a, fit.std_a());
    let _ = writeln!(text, "  t0    = {:.4} ± {:.4} ps", p.t0, fit.std_t0());
    let _ = writeln!(text, "  sigma = {:.4} ± {:.4} ps", p.sigma, fit.std_sigma());
    let _ = writeln!(text, "  B     = {:.4} ± {:.4}", p.b, fit.std_b());

    if let Some(dir) = &a.output.out {
        let stem = histogram_file_name(&norm.group).trim_start_matches("hist_").trim_end_matches(".csv").to_string();
        let files = vec![(format!("fit_{stem}.json"), structured.clone())];
        publish(dir, manifest, &format!("fit_{stem}.manifest.json"), files)?;
    }
    match a.output.format {
        Format::Text => print!("{text}"),
        Format::Structured => print!("{structured}"),
    }
    Ok(0)
}

fn parse_params(raw: &[String]) -> Result<Params> {
    let mut p = Params::new();
    for kv in raw {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("parameter `{kv}` is not of the form name=value");
        };
        let value: f64 = v.trim().parse().with_context(|| format!("parameter `{}`: `{v}` is not a number", k.trim()))?;
        p.insert(k.trim(), value);
    }
    Ok(p)
}

pub fn theory(a: TheoryArgs) -> Result<u8> {
    let registry = theory_queries();
    if a.list {
        for (name, summary) in registry.describe() {
            println!("{name:<22} {summary}");
        }
        return Ok(0);
    }
    let name = a.query.as_deref().expect("clap requires a query without --list");
    let table = registry.build(name, &parse_params(&a.params)?)?.evaluate()?;
    let (ext, body) = match a.output.format {
        Format::Text => ("csv", table.to_csv()),
        Format::Structured => (
            "json",
            to_json(&json!({ "query": name, "columns": table.columns, "rows": table.rows }))?,
        ),
    };
    match &a.output.out {
        Some(dir) => {
            let path = dir.join(format!("theory_{name}.{ext}"));
            write_atomic(&path, body.as_bytes())?;
            println!("{}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(0)
}

pub fn report(a: ReportArgs) -> Result<u8> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let mut doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.input.display()))?;
    let manifest = doc.get("manifest").and_then(Value::as_str).unwrap_or("unknown").to_string();
    let report: CertificationReport = serde_json::from_value(doc["report"].take())
        .with_context(|| format!("{} is not a certify report", a.input.display()))?;
    match a.format {
        Format::Text => print!("{}", render_report_text(&manifest, &report)),
        Format::Structured => print!("{}", to_json(&json!({ "manifest": manifest, "report": report }))?),
    }
    Ok(report.verdict.exit_code() as u8)
}
