//! Binary-level checks: exit codes, reproducibility, manifest round-trips.

use std::fs;
use std::path::Path;
use std::process::Command;

fn clm() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_clm"));
    c.env_remove("CLM_SEED");
    c
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("clm-cli-tests").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("mkdir");
    dir
}

#[test]
fn build_exports_matrix_text() {
    let out = clm()
        .args([
            "build",
            "--model",
            "nonreciprocal1d",
            "--N",
            "3",
            "--B",
            "0.01",
        ])
        .output()
        .expect("run");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).expect("utf8");
    let mut lines = text.lines();
    assert!(lines.next().expect("header").starts_with("3 nonreciprocal1d"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn bad_flag_usage_exits_2() {
    let out = clm().args(["build", "--no-such-flag"]).output().expect("run");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_model_dimension_exits_1() {
    let out = clm()
        .args(["build", "--model", "clm2d", "--Lx", "1"])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).expect("utf8");
    assert!(err.contains("Lx"), "{err}");
}

#[test]
fn unknown_scenario_override_exits_2() {
    let dir = tmp("bad-override");
    let out = clm()
        .args([
            "scenario",
            "fig3bc",
            "--scale",
            "desk",
            "--out",
            dir.to_str().expect("path"),
            "--set",
            "no_such_key=3",
        ])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_reruns_are_byte_identical() {
    let dir_a = tmp("repro-a");
    let dir_b = tmp("repro-b");
    for dir in [&dir_a, &dir_b] {
        let out = clm()
            .args([
                "scenario",
                "figS2c",
                "--scale",
                "desk",
                "--seed",
                "3",
                "--out",
                dir.to_str().expect("path"),
            ])
            .output()
            .expect("run");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["manifest.json", "spectrum.csv", "sweep.csv", "metrics.json", "sweep.svg"] {
        let a = fs::read(dir_a.join(name)).expect("read a");
        let b = fs::read(dir_b.join(name)).expect("read b");
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn manifest_rerun_reproduces_bundle() {
    let dir_a = tmp("manifest-a");
    let dir_b = tmp("manifest-b");
    let st = clm()
        .args([
            "scenario",
            "fig3ef",
            "--scale",
            "desk",
            "--seed",
            "9",
            "--out",
            dir_a.to_str().expect("path"),
        ])
        .status()
        .expect("run");
    assert!(st.success());
    // re-run purely from the manifest: no name, scale, or seed flags
    let st = clm()
        .args([
            "scenario",
            "--config",
            dir_a.join("manifest.json").to_str().expect("path"),
            "--out",
            dir_b.to_str().expect("path"),
        ])
        .status()
        .expect("run");
    assert!(st.success());
    for name in ["manifest.json", "spectrum.csv", "sweep.csv", "metrics.json"] {
        let a = fs::read(dir_a.join(name)).expect("read a");
        let b = fs::read(dir_b.join(name)).expect("read b");
        assert_eq!(a, b, "{name} differs after manifest re-run");
    }
}

#[test]
fn scenario_outputs_well_formed_and_parseable() {
    let dir = tmp("formats");
    let st = clm()
        .args([
            "scenario",
            "continuum-checks",
            "--out",
            dir.to_str().expect("path"),
        ])
        .status()
        .expect("run");
    assert!(st.success());
    // manifest lists exactly the files written
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).expect("manifest"))
            .expect("json");
    assert_eq!(manifest["schema_version"], 1);
    for f in manifest["outputs"].as_array().expect("outputs") {
        assert!(
            dir.join(f.as_str().expect("name")).exists(),
            "missing output {f}"
        );
    }
    // CSV parses row by row
    let csv = fs::read_to_string(dir.join("residuals.csv")).expect("csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().expect("header"), "check,h,residual,ratio");
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4);
        fields[1].parse::<f64>().expect("h");
        fields[2].parse::<f64>().expect("residual");
    }
    // SVG is XML-shaped
    let svg = fs::read_to_string(dir.join("residuals.svg")).expect("svg");
    assert!(svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn clm_seed_env_var_is_the_default_seed() {
    let dir_a = tmp("env-seed-a");
    let dir_b = tmp("env-seed-b");
    let st = clm()
        .env("CLM_SEED", "17")
        .args([
            "scenario",
            "figS2f",
            "--scale",
            "desk",
            "--out",
            dir_a.to_str().expect("path"),
        ])
        .status()
        .expect("run");
    assert!(st.success());
    let st = clm()
        .args([
            "scenario",
            "figS2f",
            "--scale",
            "desk",
            "--seed",
            "17",
            "--out",
            dir_b.to_str().expect("path"),
        ])
        .status()
        .expect("run");
    assert!(st.success());
    let a = fs::read(dir_a.join("sweep.csv")).expect("a");
    let b = fs::read(dir_b.join("sweep.csv")).expect("b");
    assert_eq!(a, b);
}

#[test]
fn ansatz_descriptor_has_declared_keys() {
    let out = clm()
        .args([
            "ansatz", "--model", "gainloss1d", "--B", "0.01", "--kx", "1.5707963",
            "--e-im", "0.5",
        ])
        .output()
        .expect("run");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).expect("utf8");
    for key in ["model=", "k=", "q=", "E=", "tau=", "r0=", "exists="] {
        assert!(text.contains(key), "missing {key} in {text}");
    }
    assert!(text.contains("r0=50"), "{text}");
}

#[test]
fn drive_json_reports_rainbow_slope() {
    let out = clm()
        .args([
            "drive", "--model", "nonreciprocal1d", "--N", "200", "--B", "0.05", "--omega-min",
            "-4", "--omega-max", "4", "--omega-steps", "9", "--format", "json",
        ])
        .output()
        .expect("run");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("json");
    let slope = v["slope"].as_f64().expect("slope");
    assert!((slope - 20.0).abs() < 2.0, "slope {slope}");
}

#[test]
fn spectrum_csv_has_schema_header() {
    let dir = tmp("spectrum");
    let path = dir.join("spec.csv");
    let st = clm()
        .args([
            "spectrum",
            "--model",
            "gainloss1d",
            "--N",
            "40",
            "--B",
            "0.05",
            "--out",
            path.to_str().expect("path"),
        ])
        .status()
        .expect("run");
    assert!(st.success());
    let text = fs::read_to_string(&path).expect("read");
    assert!(text.starts_with("idx,re_E,im_E,pr,mean_x,mean_y,residual\n"));
    assert_eq!(text.lines().count(), 41);
    let _ = fs::remove_dir_all(Path::new(&dir));
}
