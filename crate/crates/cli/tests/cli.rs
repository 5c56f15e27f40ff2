use std::path::Path;
use std::process::{Command, Output};

use fpu_core::config::verify_manifest;
use fpu_core::io::read_numeric_csv;

fn fpu(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fpu"));
    cmd.arg("--out").arg(dir);
    for kv in [
        "N=16",
        "beta=1",
        "target_energy=20",
        "dt=0.02",
        "t_transient=200",
        "t_record=1500",
        "sample_stride=5",
    ] {
        cmd.args(["--set", kv]);
    }
    cmd.args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fpu(dir, args);
    assert!(
        out.status.success(),
        "fpu {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn full_pipeline_writes_checksummed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["simulate"]);
    ok(dir, &["dispersion", "--segment-len", "1024"]);
    ok(dir, &["spectrum"]);
    ok(dir, &["ratios"]);
    ok(dir, &["modes", "--k", "3", "--k", "5"]);
    ok(dir, &["breathers", "--omega-cut", "4", "--block", "2048"]);

    let manifest = verify_manifest(dir).unwrap();
    let names: Vec<&str> = manifest.files.iter().map(|f| f.name.as_str()).collect();
    for f in [
        "trajectory.bin",
        "modes.bin",
        "config.txt",
        "snapshot.csv",
        "spectrogram.csv",
        "peaks.csv",
        "eta.csv",
        "spectrum.csv",
        "ratios.csv",
        "modes_3.csv",
        "modes_5.csv",
        "breathers.csv",
        "qf.bin",
    ] {
        assert!(names.contains(&f), "{f} missing from manifest");
    }
    assert!(manifest.energy_drift.unwrap() < 1e-5);

    let (cols, rows) = read_numeric_csv(&dir.join("spectrum.csv")).unwrap();
    assert_eq!(cols[0], "k");
    assert_eq!(rows.len(), 15);
    let (_, eta) = read_numeric_csv(&dir.join("eta.csv")).unwrap();
    assert!(eta[0][1] > 1.0 && eta[0][2] > 1.0);
    let (_, modes) = read_numeric_csv(&dir.join("modes_3.csv")).unwrap();
    assert_eq!(modes.len(), 15_000);
    let text = std::fs::read(dir.join("ratios.csv")).unwrap();
    assert!(!text.contains(&b'\r'));
}

#[test]
fn identical_seeds_give_identical_records() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), &["--seed", "11", "simulate"]);
    ok(b.path(), &["--seed", "11", "simulate"]);
    for f in ["trajectory.bin", "modes.bin", "snapshot.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
    let c = tempfile::tempdir().unwrap();
    ok(c.path(), &["--seed", "12", "simulate"]);
    assert_ne!(
        std::fs::read(a.path().join("trajectory.bin")).unwrap(),
        std::fs::read(c.path().join("trajectory.bin")).unwrap()
    );
}

#[test]
fn analyses_run_from_trajectory_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["--set", "write_modes=false", "simulate"]);
    assert!(!dir.join("modes.bin").exists());
    ok(dir, &["dispersion", "--segment-len", "1024"]);
    ok(dir, &["spectrum", "--dispersion", "renormalized"]);
    ok(dir, &["modes", "--k", "2"]);
    verify_manifest(dir).unwrap();
}

#[test]
fn eta_resolution_prefers_explicit_then_measured() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["simulate"]);
    assert!(ok(dir, &["ratios"]).contains("analytic"));
    ok(dir, &["dispersion", "--segment-len", "1024"]);
    assert!(ok(dir, &["ratios"]).contains("measured"));
    assert!(ok(dir, &["ratios", "--eta", "1.5"]).contains("eta=1.5000"));
}

#[test]
fn sweep_aggregates_sorted_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["sweep", "--betas", "4,1,2", "--segment-len", "1024", "--threads", "2"]);
    let (_, rows) = read_numeric_csv(&dir.join("eta.csv")).unwrap();
    let betas: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(betas, vec![1.0, 2.0, 4.0]);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]), "η should grow with β: {rows:?}");
    let (_, ratios) = read_numeric_csv(&dir.join("ratios.csv")).unwrap();
    assert_eq!(ratios.len(), 3);
    verify_manifest(dir).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(a.path(), &["sweep", "--betas", "1,3", "--segment-len", "1024", "--threads", "1"]);
    ok(b.path(), &["sweep", "--betas", "1,3", "--segment-len", "1024", "--threads", "2"]);
    for f in ["eta.csv", "ratios.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn verify_reports_every_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(tmp.path(), &["verify", "--states", "5", "--drift-time", "50"]);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 13);
    assert!(!out.contains("FAIL"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // malformed flags and config values
    assert_eq!(code(&fpu(dir, &["frobnicate"])), 2);
    assert_eq!(code(&fpu(dir, &["--set", "beta=abc", "simulate"])), 2);
    assert_eq!(code(&fpu(dir, &["--set", "t_record=1", "simulate"])), 2);
    let cfg = dir.join("bad.txt");
    std::fs::write(&cfg, "beta = 1\nbeta = 2\n").unwrap();
    assert_eq!(code(&fpu(dir, &["--config", cfg.to_str().unwrap(), "simulate"])), 2);
    // no records yet
    assert_eq!(code(&fpu(dir, &["spectrum"])), 4);
    // unwritable output directory
    let file = dir.join("plain");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(code(&fpu(&file.join("sub"), &["simulate"])), 4);
    // integration blow-up
    let blow = fpu(
        dir,
        &["--set", "dt=2", "--set", "beta=100", "--set", "target_energy=1000", "--set", "integrator=verlet", "simulate"],
    );
    assert_eq!(code(&blow), 3, "{}", String::from_utf8_lossy(&blow.stderr));
    // corrupted record
    let run = dir.join("run");
    ok(&run, &["--set", "write_modes=false", "simulate"]);
    let traj = run.join("trajectory.bin");
    let bytes = std::fs::read(&traj).unwrap();
    std::fs::write(&traj, &bytes[..bytes.len() - 3]).unwrap();
    assert_eq!(code(&fpu(&run, &["spectrum"])), 4);
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small chain\nN = 16\nbeta = 3\ntarget_energy = 20\ndt = 0.02\nt_transient = 100\nt_record = 1000\nsample_stride = 5\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fpu"))
        .args(["--config", cfg.to_str().unwrap(), "--set", "beta=2", "--seed", "5", "--out"])
        .arg(&dir)
        .arg("simulate")
        .output()
        .unwrap();
    assert!(out.status.success());
    let written = std::fs::read_to_string(dir.join("config.txt")).unwrap();
    assert!(written.contains("beta = 2.0"));
    assert!(written.contains("seed = 5"));
    assert!(written.contains("N = 16"));
}
