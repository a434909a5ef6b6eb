use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mfront(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfront")).args(args).output().expect("binary runs")
}

fn write_cfg(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.cfg");
    std::fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> Output {
    let o = mfront(&[cmd, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    (head, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn meta(out: &Path) -> String {
    std::fs::read_to_string(out.join("run.meta")).unwrap()
}

const FLAT: &str = "mu = 0.1\ng = 1\nn_psi = 64\nT = 1\ntimes = 0.5, 1\n";

#[test]
fn threshold_prints_printed_value() {
    let o = mfront(&["threshold", "--depth", "4", "--length", "40"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "l^3/H^2 = 4000 km");
}

#[test]
fn front_on_constant_depth_is_a_circle() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), FLAT);
    run("front", &cfg, d.path());
    let (head, rows) = csv(&d.path().join("front.csv"));
    assert_eq!(head, ["t", "psi", "x1", "x2", "j", "j_tilde", "morse", "alive"]);
    assert_eq!(rows.len(), 128);
    for r in &rows {
        let v: Vec<f64> = r.iter().map(|c| c.parse().unwrap()).collect();
        assert!((v[2].hypot(v[3]) - v[0]).abs() < 1e-9);
        assert_eq!(v[6], 0.0);
    }
    let m = meta(d.path());
    assert!(m.contains("status = ok"));
    assert!(m.contains("config.mu = 0.1"));
    assert!(m.contains("conservation.hamiltonian = "));
}

#[test]
fn bad_config_exits_with_config_code() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "g = 1\nT = 1\nmu = 0.7\n");
    let o = mfront(&["front", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("(0, 0.5)"), "{err}");
}

#[test]
fn spectral_oracle_refuses_variable_depth() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), &format!("{FLAT}bathy.kind = linear_slope\nbathy.slope = 0.1, 0\n"));
    let o = mfront(&["oracle-spectral", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let m = meta(d.path());
    assert!(m.contains("status = error") && m.contains("error_code = validity"), "{m}");
}

#[test]
fn field_output_is_deterministic_and_complete() {
    let d = tempfile::tempdir().unwrap();
    let body = format!("{FLAT}grid.x0 = -1.2\ngrid.y0 = -1.2\ngrid.x1 = 1.2\ngrid.y1 = 1.2\ngrid.nx = 41\ngrid.ny = 31\nfield.band_factor = 3\n");
    let cfg = write_cfg(d.path(), &body);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    run("field", &cfg, &a);
    run("field", &cfg, &b);
    let fa = std::fs::read(a.join("field_1.csv")).unwrap();
    assert_eq!(fa, std::fs::read(b.join("field_1.csv")).unwrap());
    let (head, rows) = csv(&a.join("field_1.csv"));
    assert_eq!(head, ["x1", "x2", "eta", "n_branches", "n_focal_contribs", "inside_band"]);
    assert_eq!(rows.len(), 41 * 31);
    assert!(rows.iter().any(|r| r[5] == "1") && rows.iter().any(|r| r[5] == "0"));

    let heat = d.path().join("heat.csv");
    let o = mfront(&["plot", "field_heatmap", "--input", a.join("field_1.csv").to_str().unwrap(), "--output", heat.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv(&heat).1.len(), 41 * 31);

    let cut = d.path().join("cut.csv");
    let o = mfront(&["plot", "profile_cut", "--input", a.join("field_1.csv").to_str().unwrap(), "--output", cut.to_str().unwrap(), "--psi", "0.3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv(&cut);
    assert_eq!(h, ["s", "x1", "x2", "eta"]);
    // the cut crosses the front at s = 1
    let peak = rows.iter().max_by(|a, b| {
        let (x, y): (f64, f64) = (a[3].parse().unwrap(), b[3].parse().unwrap());
        x.abs().total_cmp(&y.abs())
    });
    let s: f64 = peak.unwrap()[0].parse().unwrap();
    assert!((s - 1.0).abs() < 0.3, "{s}");
}

#[test]
fn profile_m_plus_two_negates() {
    let d = tempfile::tempdir().unwrap();
    let cfg0 = write_cfg(d.path(), &format!("{FLAT}profile.n = 21\nprofile.m = 0\n"));
    run("profile", &cfg0, &d.path().join("m0"));
    std::fs::write(&cfg0, format!("{FLAT}profile.n = 21\nprofile.m = 2\n")).unwrap();
    run("profile", &cfg0, &d.path().join("m2"));
    let (head, a) = csv(&d.path().join("m0/profile.csv"));
    assert_eq!(head, ["z", "F_re", "F_im", "eta_profile"]);
    let (_, b) = csv(&d.path().join("m2/profile.csv"));
    for (ra, rb) in a.iter().zip(&b) {
        let (x, y): (f64, f64) = (ra[3].parse().unwrap(), rb[3].parse().unwrap());
        assert_eq!(x, -y);
    }
}

#[test]
fn bank_front_self_intersects_and_focal_cache() {
    let d = tempfile::tempdir().unwrap();
    let body = "mu = 0.05\ng = 1\nn_psi = 256\nT = 3\ntimes = 3\nbathy.kind = radial_bank\nbathy.amp = 0.5\nbathy.width = 0.5\nsource.center = 0, -0.8\n";
    let cfg = write_cfg(d.path(), body);
    run("front", &cfg, d.path());
    let poly = d.path().join("poly.csv");
    let o = mfront(&["plot", "front_polyline", "--input", d.path().join("front.csv").to_str().unwrap(), "--output", poly.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "self_intersections = 1");
    let (_, rows) = csv(&poly);
    assert_eq!(rows.len(), 257);

    run("focal", &cfg, d.path());
    let (head, rows) = csv(&d.path().join("focal.csv"));
    assert_eq!(head[4], "n");
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!((r[4].as_str(), r[6].as_str()), ("2", "1"));
        let x1: f64 = r[2].parse().unwrap();
        assert!(x1.abs() > 1e-3);
    }
    let x1s: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!((x1s[0] + x1s[1]).abs() < 1e-6);
    let cache = std::fs::read_to_string(d.path().join("scene.mfront")).unwrap();
    assert!(cache.starts_with("MFRONT1\n"));
    assert!(meta(d.path()).contains("t_cr = "));
}

#[test]
fn compare_on_slope_writes_metrics() {
    let d = tempfile::tempdir().unwrap();
    let body = "mu = 0.1\ng = 1\nn_psi = 256\nT = 0.6\nbathy.kind = linear_slope\nbathy.slope = 0.3, 0\n\
                grid.x0 = -1.6\ngrid.y0 = -1.6\ngrid.x1 = 1.6\ngrid.y1 = 1.6\ngrid.nx = 193\ngrid.ny = 193\n";
    let cfg = write_cfg(d.path(), body);
    run("compare", &cfg, d.path());
    let (head, rows) = csv(&d.path().join("metrics.csv"));
    assert_eq!(head, ["t", "oracle", "mask_width", "linf_rel", "l2_rel", "peak_ratio", "peak_shift", "cells"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "fd");
    let linf: f64 = rows[0][3].parse().unwrap();
    assert!(linf < 0.15, "{linf}");
    assert!(meta(d.path()).contains("energy_drift"));
}

#[test]
fn dimensional_flag_scales_lengths() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), &format!("{FLAT}scale.length = 1000\n"));
    let out = d.path().to_str().unwrap();
    let o = mfront(&["front", cfg.to_str().unwrap(), "--out", out, "--dimensional"]);
    assert!(o.status.success());
    let (_, rows) = csv(&d.path().join("front.csv"));
    let v: Vec<f64> = rows.last().unwrap().iter().map(|c| c.parse().unwrap()).collect();
    assert!((v[2].hypot(v[3]) - 1000.0).abs() < 1e-6);
    assert!((v[0] - 1000.0).abs() < 1e-9);
}

#[test]
fn spectral_oracle_csv_has_source_column() {
    let d = tempfile::tempdir().unwrap();
    let body = format!("{FLAT}grid.x0 = -1.6\ngrid.y0 = -1.6\ngrid.x1 = 1.6\ngrid.y1 = 1.6\ngrid.nx = 257\ngrid.ny = 257\n");
    let cfg = write_cfg(d.path(), &body);
    run("oracle-spectral", &cfg, d.path());
    let (head, rows) = csv(&d.path().join("oracle_0.csv"));
    assert_eq!(head, ["x1", "x2", "eta", "source"]);
    assert_eq!(rows.len(), 257 * 257);
    assert!(rows.iter().all(|r| r[3] == "spectral_nondisp"));
}
