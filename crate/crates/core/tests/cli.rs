use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rbnoise::dynamics::{InertiaTensor, NoiseModel, SimParams};
use rbnoise::lyapunov::{estimate_top, LyapunovOptions};
use rbnoise::Vec3;
use tempfile::TempDir;

fn rbnoise(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbnoise"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.conf");
    fs::write(&p, body).unwrap();
    p
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn missing_config_is_a_usage_error_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = rbnoise(tmp.path(), &["simulate", "--config", "absent.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn bad_keys_fail_before_any_output() {
    let tmp = TempDir::new().unwrap();
    for (body, key) in [
        ("output_dir = o\ncolour = red\n", "colour"),
        ("output_dir = o\ndt = zero\n", "dt"),
        ("output_dir = o\ninertia = 1, -2, 3\n", "inertia"),
    ] {
        let cfg = write_config(tmp.path(), body);
        let out = rbnoise(tmp.path(), &["simulate", "-c", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(key), "{body}");
        assert!(!tmp.path().join("o").exists());
    }
    let out = rbnoise(tmp.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_at_equilibrium_gives_constant_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sigma = 0\ntheta = 0\npi0 = 0, 0, 1\nt_end = 1\ndt = 0.01\nstride = 10\noutput_dir = o\n",
    );
    let out = rbnoise(tmp.path(), &["simulate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("o/trajectory.csv"));
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert_eq!(&r[1..], &rows[0][1..]);
    }
    assert!((rows[10][0] - 1.0).abs() < 1e-12);
}

#[test]
fn simulate_energy_stays_in_band_without_dissipation() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "theta = 0\nsigma = 0.5\npi0 = 0.6, 0, 0.8\nt_end = 20\ndt = 0.001\nstride = 1\noutput_dir = o\n",
    );
    let out = rbnoise(tmp.path(), &["simulate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("o/trajectory.csv"));
    assert_eq!(rows.len(), 20_001);
    for r in rows {
        assert!(r[4] >= 1.0 / 6.0 - 1e-14 && r[4] <= 0.5 + 1e-14);
        assert!((r[5] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ensemble_writes_snapshots_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "n_particles = 500\ndt = 0.01\nt_end = 2\nsnapshot_times = 0, 0.5, 1, 2\nnoise = shared\noutput_dir = o\n",
    );
    let out = rbnoise(tmp.path(), &["ensemble", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let dir = tmp.path().join("o");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 9);
    assert!(names.iter().all(|n| !n.ends_with(".partial")));
    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        assert!(manifest.contains(&format!("file = {n}")));
    }
    assert!(manifest.contains("config_sha256 = "));
    assert!(manifest.contains("snapshot_times = 0,0.5,1,2"));
    let last = fs::read_to_string(dir.join("snapshot_003_particles.csv")).unwrap();
    assert_eq!(last.lines().count(), 501);
    assert!(last
        .lines()
        .nth(1)
        .unwrap()
        .ends_with("2.0000000000000000e0"));
}

#[test]
fn gibbs_check_gate_and_singular_noise() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "n_particles = 40000\ndt = 0.02\nt_end = 5\nl1_gate = 0.1\noutput_dir = o\n",
    );
    let path = cfg.to_str().unwrap();
    let out = rbnoise(tmp.path(), &["gibbs-check", "-c", path]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report = fs::read_to_string(tmp.path().join("o/gibbs_report.csv")).unwrap();
    assert!(report.starts_with("l1,kl,n,bands,t_end,params\n"));

    let out = rbnoise(
        tmp.path(),
        &["gibbs-check", "-c", path, "--set", "reference_theta=2"],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = rbnoise(
        tmp.path(),
        &[
            "gibbs-check",
            "-c",
            path,
            "--set",
            "sigma=0",
            "--set",
            "output_dir=z",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("z").exists());
}

#[test]
fn lyapunov_sweep_single_point_matches_library() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dt = 0.01\nt_end = 100\nseed = 3\nlyapunov_seeds = 1\nburn_in = 5\nn_blocks = 10\npi0 = 0.6, 0, 0.8\noutput_dir = o\n",
    );
    let out = rbnoise(tmp.path(), &["lyapunov-sweep", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("o/sweep.csv"));
    assert_eq!(rows.len(), 1);

    let p = SimParams::new(
        InertiaTensor::new(1.0, 2.0, 3.0).unwrap(),
        NoiseModel::isotropic(0.5).unwrap(),
        0.5,
        0.01,
        100.0,
        3,
    )
    .unwrap();
    let opts = LyapunovOptions {
        burn_in: 5.0,
        n_blocks: 10,
        ..LyapunovOptions::default()
    };
    let est = estimate_top(&p, Vec3::new(0.6, 0.0, 0.8), 100.0, 3, &opts).unwrap();
    assert_eq!(rows[0][2], est.lambda_top);
    assert_eq!(rows[0][3], est.stderr);
}

#[test]
fn lyapunov_sweep_without_noise_is_not_positive() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dt = 0.01\nt_end = 200\nsigmas = 0\nthetas = 0.25, 0.5, 1\nlyapunov_seeds = 2\noutput_dir = o\n",
    );
    let out = rbnoise(tmp.path(), &["lyapunov-sweep", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("o/sweep.csv"));
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r[2] <= r[3], "lambda {} stderr {}", r[2], r[3]);
    }
}

#[test]
fn short_horizon_sweep_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "t_end = 50\noutput_dir = o\n");
    let out = rbnoise(tmp.path(), &["lyapunov-sweep", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_end"));
    assert!(!tmp.path().join("o").exists());
}
