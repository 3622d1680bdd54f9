use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tammann(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tammann"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn zero_length_run_writes_manifest_and_initial_snapshot() {
    let dir = scratch("zero");
    ok(&tammann(&[
        "run",
        "-s",
        "air_water_1d",
        "--t-end",
        "0",
        "-o",
        dir.to_str().unwrap(),
    ]));
    let manifest: toml::Value = fs::read_to_string(dir.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["steps"].as_integer(), Some(0));
    assert_eq!(manifest["scenario"]["name"].as_str(), Some("air_water_1d"));
    assert!(dir.join("snapshot_0000.csv").exists());
    assert!(dir.join("gauges.csv").exists());
}

#[test]
fn repeated_runs_write_identical_files() {
    let (a, b) = (scratch("det_a"), scratch("det_b"));
    for d in [&a, &b] {
        ok(&tammann(&[
            "run",
            "-s",
            "air_water_1d",
            "--resolution",
            "200",
            "--t-end",
            "0.004",
            "-o",
            d.to_str().unwrap(),
        ]));
    }
    for f in ["gauges.csv", "peaks.csv", "snapshot_0001.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_reruns_to_the_same_peaks() {
    let (a, b) = (scratch("rerun_a"), scratch("rerun_b"));
    ok(&tammann(&[
        "run",
        "-s",
        "air_water_1d",
        "--resolution",
        "200",
        "--t-end",
        "0.005",
        "-o",
        a.to_str().unwrap(),
    ]));
    let manifest = a.join("manifest.toml");
    ok(&tammann(&[
        "run",
        "-s",
        manifest.to_str().unwrap(),
        "-o",
        b.to_str().unwrap(),
    ]));
    assert_eq!(
        fs::read(a.join("peaks.csv")).unwrap(),
        fs::read(b.join("peaks.csv")).unwrap()
    );
}

#[test]
fn riemann_samples_sod() {
    let text = ok(&tammann(&[
        "riemann",
        "--left",
        "1,0,1",
        "--right",
        "0.125,0,0.1",
        "--left-eos",
        "1.4,0",
        "--right-eos",
        "1.4,0",
        "--xi",
        "0",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi,rho,u,p"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[2] - 0.92745).abs() < 1e-4);
    assert!((row[3] - 0.30313).abs() < 1e-4);
}

#[test]
fn matched_impedances_transmit_everything() {
    let text = ok(&tammann(&[
        "acoustics",
        "--materials",
        "water,water,water",
        "--terms",
        "3",
    ]));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4].parse::<f64>().unwrap(), 1.0);
    assert_eq!(row[5].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn sweep_writes_a_summary_row_per_value() {
    let dir = scratch("sweep");
    ok(&tammann(&[
        "sweep",
        "-s",
        "air_plastic_water_1d",
        "--param",
        "width",
        "--values",
        "0.6,0.2",
        "--set",
        "geometry.cells=400",
        "--t-end",
        "0.004",
        "--jobs",
        "2",
        "-o",
        dir.to_str().unwrap(),
    ]));
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert!(lines[0].starts_with("width,initial_peak_kPa,gauge1_peak_kPa"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let empty = tammann(&["sweep", "-s", "air_water_1d", "--param", "width", "--values", ""]);
    assert_eq!(empty.status.code(), Some(2));
    let bad = scratch("bad");
    fs::create_dir_all(&bad).unwrap();
    let path = bad.join("bad.toml");
    fs::write(&path, "name = 3\n").unwrap();
    assert_eq!(tammann(&["run", "-s", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(tammann(&["run", "-s", "no_such_scenario"]).status.code(), Some(2));
    assert_eq!(
        tammann(&["run", "-s", "air_water_1d", "--calibrate", "x"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn gridcheck_passes_on_the_default_circle() {
    let text = ok(&tammann(&["gridcheck", "--n", "24"]));
    assert_eq!(text.lines().last(), Some("PASS"));
}
