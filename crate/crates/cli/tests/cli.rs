use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homcert::detection::{run_experiment, ExperimentConfig};
use homcert::io::{read_histogram, RunManifest};

fn homcert(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homcert"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HOMCERT_OUT_DIR")
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

const GROUP_FILES: [&str; 4] = ["hist_X1-X0.csv", "hist_Y0-X0.csv", "hist_Y1-X0.csv", "hist_unmodulated.csv"];

#[test]
fn simulate_is_byte_identical_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    for d in ["a", "b"] {
        let o = homcert(&["simulate", "--seed", "11", "--out", d], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = files_in(&tmp.path().join("a"));
    let names: Vec<String> = a.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    let mut expected: Vec<String> = GROUP_FILES.iter().map(|s| s.to_string()).collect();
    expected.push("manifest.json".into());
    assert_eq!(names, expected);
    for name in &names {
        let x = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let y = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }

    let o = homcert(&["simulate", "--seed", "12", "--out", "c"], tmp.path());
    assert!(o.status.success());
    let x = std::fs::read(tmp.path().join("a/hist_X1-X0.csv")).unwrap();
    let y = std::fs::read(tmp.path().join("c/hist_X1-X0.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn every_output_carries_the_manifest_id() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(homcert(&["simulate", "--out", "run"], tmp.path()).status.success());
    let m = RunManifest::read(&tmp.path().join("run/manifest.json")).unwrap();
    assert_eq!(m.outputs.len(), 4);
    for out in &m.outputs {
        let f = read_histogram(&tmp.path().join("run").join(&out.path)).unwrap();
        assert_eq!(f.manifest.as_deref(), Some(m.run_id.as_str()));
        let bytes = std::fs::read(tmp.path().join("run").join(&out.path)).unwrap();
        assert_eq!(homcert::io::sha256_hex(&bytes), out.sha256);
    }
}

#[test]
fn replay_reproduces_histograms() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "[experiment]\nrepeats = 3\n\n[drift]\ndelay_sd_ps = 1.0\n").unwrap();
    let o = homcert(&["simulate", "--config", "c.toml", "--seed", "5", "--out", "first"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = homcert(&["simulate", "--replay", "first/manifest.json", "--out", "second"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for name in GROUP_FILES {
        assert_eq!(
            std::fs::read(tmp.path().join("first").join(name)).unwrap(),
            std::fs::read(tmp.path().join("second").join(name)).unwrap()
        );
    }
}

#[test]
fn invalid_config_fails_with_line_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("bad.toml"),
        "[experiment]\nrepeats = 3\n\n[[groups]]\nname = \"g\"\na = \"X0\"\n",
    )
    .unwrap();
    let o = homcert(&["simulate", "--config", "bad.toml", "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bad.toml") && err.contains("line 4") && err.contains("missing field `b`"), "{err}");
    assert!(!tmp.path().join("out").exists());

    std::fs::write(tmp.path().join("typo.toml"), "[laser]\nintensity_varance = 1e-3\n").unwrap();
    let o = homcert(&["simulate", "--config", "typo.toml", "--out", "out"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn certify_round_trip_and_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(homcert(&["simulate", "--seed", "2", "--out", "sim"], tmp.path()).status.success());

    // Parsed files hold exactly the in-process simulation.
    let expected = run_experiment(&ExperimentConfig::default(), 2).unwrap();
    for h in &expected {
        let path = tmp.path().join("sim").join(homcert::io::histogram_file_name(&h.group));
        assert_eq!(&read_histogram(&path).unwrap().histogram, h);
    }

    let o = homcert(&["certify", "sim", "--out", "rep"], tmp.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}{}", stderr(&o));
    assert!(text.contains("verdict: indistinguishability not rejected"), "{text}");
    for g in ["unmodulated", "X1-X0", "Y0-X0", "Y1-X0", "whole"] {
        assert!(text.lines().any(|l| l.starts_with(g)), "missing row {g}");
    }
    assert_eq!(std::fs::read_to_string(tmp.path().join("rep/report.txt")).unwrap(), text);
    assert!(tmp.path().join("rep/certify-manifest.json").exists());

    // The structured report re-renders to the same text.
    let o = homcert(&["report", "rep/report.json"], tmp.path());
    assert_eq!(stdout(&o), text);

    let o = homcert(&["certify", "sim/hist_Y0-X0.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("single group"), "{}", stdout(&o));
}

#[test]
fn injected_defect_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("d.toml"), "[defect]\nstate = \"Y1\"\noverlap_factor = 0.49\n").unwrap();
    let o = homcert(&["simulate", "--config", "d.toml", "--seed", "4", "--out", "sim"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = homcert(&["certify", "sim", "--format", "structured"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["report"]["verdict"], "rejected");
}

#[test]
fn fit_matches_certify_row() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(homcert(&["simulate", "--seed", "9", "--out", "sim"], tmp.path()).status.success());
    let fit: serde_json::Value =
        serde_json::from_str(&stdout(&homcert(&["fit", "sim/hist_Y1-X0.csv", "--format", "structured"], tmp.path())))
            .unwrap();
    let cert: serde_json::Value =
        serde_json::from_str(&stdout(&homcert(&["certify", "sim", "--format", "structured"], tmp.path()))).unwrap();
    let row = cert["report"]["groups"].as_array().unwrap().iter().find(|g| g["name"] == "Y1-X0").unwrap();
    assert_eq!(fit["fit"], row["fit"]);
    assert_eq!(fit["visibility"], row["visibility"]);
}

#[test]
fn out_dir_defaults_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_homcert"))
        .args(["theory", "visibility-vs-angle", "-p", "points=7"])
        .current_dir(tmp.path())
        .env("HOMCERT_OUT_DIR", "envout")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("envout/theory_visibility-vs-angle.csv")).unwrap();
    let v: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(v.len(), 7);
    assert!(v.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn theory_and_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = homcert(&["theory", "visibility-vs-mu", "-p", "mu_min=1e-5", "-p", "points=4"], tmp.path());
    assert!(o.status.success());
    let first: f64 = stdout(&o).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((first - 0.5).abs() < 1e-4);

    assert_eq!(homcert(&["theory", "no-such-query"], tmp.path()).status.code(), Some(1));
    assert_eq!(homcert(&["theory", "dip-profile", "-p", "tau_p"], tmp.path()).status.code(), Some(1));
    assert_eq!(homcert(&["certify"], tmp.path()).status.code(), Some(64));
    assert_eq!(homcert(&["simulate", "--format", "xml"], tmp.path()).status.code(), Some(64));
    assert_eq!(homcert(&["--help"], tmp.path()).status.code(), Some(0));
    assert!(files_in(tmp.path()).is_empty());
}
