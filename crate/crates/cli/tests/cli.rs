use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn wavedecay(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavedecay"))
        .args(args)
        .env("WAVEDECAY_OUT", out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn line_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("cfg.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
schema_version = 1
name = "small"

[profile]
dim = "line-1d"
family = "radial_bump"
support = 1.0
amplitude = [0.0, 0.1]

[data]
family = "bump"
u1_amplitude = 0.5

[solver]
h = 0.02
t_final = 12.0
sample_stride = 10

[checks]
radii = [2.0]
"#;

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/eta034-radial3d.toml")
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timing.json" {
                out.push((
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn zero_duration_run_succeeds() {
    let tmp = TempDir::new().unwrap();
    let cfg = line_config(
        tmp.path(),
        &SMALL.replace("t_final = 12.0", "t_final = 0.0"),
    );
    let o = wavedecay(&["simulate", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("small/L1_a0_h0.02/timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn radius_inside_support_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = line_config(tmp.path(), &SMALL.replace("radii = [2.0]", "radii = [1.0]"));
    let o = wavedecay(&["simulate", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("checks.radii"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = line_config(
        tmp.path(),
        &SMALL.replace("h = 0.02", "h = 0.02\nspacing = 1"),
    );
    assert_eq!(
        code(&wavedecay(&["simulate", cfg.to_str().unwrap()], tmp.path())),
        2
    );
}

#[test]
fn unknown_suite_is_rejected() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&wavedecay(&["verify", "everything"], tmp.path())), 2);
}

#[test]
fn shipped_config_passes() {
    let tmp = TempDir::new().unwrap();
    let o = wavedecay(&["simulate", shipped().to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn csv_header_and_unique_checks() {
    let tmp = TempDir::new().unwrap();
    let cfg = line_config(tmp.path(), SMALL);
    let o = wavedecay(
        &["--parallel", "2", "simulate", cfg.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let run = tmp.path().join("small/L1_a0.1_h0.02");
    let csv = fs::read_to_string(run.join("timeseries.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,E_u,E_R@2,l2_u,pair_ut_u,pair_ut_xgrad,S_accum,wext@2,morawetz_residual"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    let names: Vec<&str> = summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for expected in [
        "energy_conservation",
        "morawetz_identity",
        "weighted_exterior_bound@2",
        "source_bound@2",
        "decay_bounded@2",
        "decay_model_comparison@2",
        "gronwall_certificate@2",
        "spectral_inequality@theta=0",
    ] {
        assert_eq!(
            names.iter().filter(|n| **n == expected).count(),
            1,
            "{expected}"
        );
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let cfg = line_config(a.path(), SMALL);
    for out in [a.path().join("o"), b.path().join("o")] {
        let o = wavedecay(
            &[
                "--out",
                out.to_str().unwrap(),
                "simulate",
                cfg.to_str().unwrap(),
            ],
            a.path(),
        );
        assert_eq!(code(&o), 0);
        assert_eq!(
            code(&wavedecay(
                &["report", out.join("small").to_str().unwrap()],
                a.path()
            )),
            0
        );
    }
    let (ta, tb) = (tree(&a.path().join("o")), tree(&b.path().join("o")));
    assert!(ta.iter().any(|(n, _)| n.ends_with("report.txt")));
    assert_eq!(ta, tb);
}

#[test]
fn report_on_empty_dir_is_incomplete() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        code(&wavedecay(
            &["report", tmp.path().to_str().unwrap()],
            tmp.path()
        )),
        4
    );
}

#[test]
fn strong_bump_runs_but_skips_decay() {
    let tmp = TempDir::new().unwrap();
    let cfg = line_config(tmp.path(), &SMALL.replace("[0.0, 0.1]", "0.6"));
    let o = wavedecay(&["simulate", cfg.to_str().unwrap()], tmp.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("[skipped:eta >= 1: outside theorem hypothesis] decay_bounded@2"),
        "{stdout}"
    );
    let summary = fs::read_to_string(tmp.path().join("small/L1_a0.6_h0.02/summary.json")).unwrap();
    assert!(summary.contains("\"eta_applicable\": false"));
}

#[test]
fn verify_suites_pass() {
    let tmp = TempDir::new().unwrap();
    for suite in ["identities", "gronwall", "decay"] {
        let o = wavedecay(&["verify", suite], tmp.path());
        assert_eq!(
            code(&o),
            0,
            "{suite}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
        assert!(tmp.path().join(format!("verify-{suite}.json")).exists());
    }
}
