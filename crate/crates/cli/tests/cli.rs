//! End-to-end checks of the `qlink` binary: subcommand wiring, config
//! handling, sidecar output, exit codes, and CSV determinism.

use std::path::PathBuf;
use std::process::Command;

fn qlink() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qlink"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("qlink-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn link_loss_writes_csv_and_sidecar() {
    let out = tmp("loss.csv");
    let status = qlink()
        .args(["link-loss", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("elevation_deg,distance_km,loss_db\n"));
    assert!(csv.lines().count() > 50);
    let sidecar = std::fs::read_to_string(out.with_extension("config.json")).unwrap();
    assert!(sidecar.contains("\"wavelength_nm\""));
}

#[test]
fn config_file_is_honored() {
    let cfg = tmp("up.kv");
    std::fs::write(
        &cfg,
        "link.direction = uplink\nlink.wavelength_nm = 785\ntx.diameter_m = 0.25\nrx.diameter_m = 0.30\n",
    )
    .unwrap();
    let out = tmp("bg_up.csv");
    let status = qlink()
        .args(["--config"])
        .arg(&cfg)
        .args(["background", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let sidecar = std::fs::read_to_string(out.with_extension("config.json")).unwrap();
    assert!(sidecar.contains("\"Uplink\""));
    // Uplink backgrounds vary with elevation.
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    let first: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    let last: f64 = rows[rows.len() - 1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(first != last);
}

#[test]
fn validation_error_exits_2() {
    let cfg = tmp("bad.kv");
    std::fs::write(&cfg, "cloud_fraction = 7\n").unwrap();
    let out = tmp("never.csv");
    let status = qlink()
        .args(["--config"])
        .arg(&cfg)
        .args(["monthly", "--days", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_axis_exits_2_and_data_error_exits_3() {
    let out = tmp("sweep.csv");
    let status = qlink()
        .args([
            "sweep",
            "--axis",
            "nonsense.path",
            "--values",
            "1,2",
            "--metric",
            "loss_db",
            "--days",
            "2",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = qlink()
        .args(["--config", "/definitely/not/a/file.kv", "link-loss", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn monthly_runs_are_bit_identical() {
    let cfg = tmp("short.kv");
    std::fs::write(&cfg, "source.kind = wcp\n").unwrap();
    let out_a = tmp("monthly_a.csv");
    let out_b = tmp("monthly_b.csv");
    for out in [&out_a, &out_b] {
        let status = qlink()
            .args(["--config"])
            .arg(&cfg)
            .args(["monthly", "--days", "6", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "monthly CSV must be bit-identical across runs");
}

#[test]
fn sweep_dark_rate_over_upper_quartile() {
    let cfg = tmp("sweepcfg.kv");
    std::fs::write(&cfg, "link.direction = uplink\nlink.wavelength_nm = 785\ntx.diameter_m = 0.25\nrx.diameter_m = 0.30\n").unwrap();
    let out = tmp("darks.csv");
    let status = qlink()
        .args(["--config"])
        .arg(&cfg)
        .args([
            "sweep",
            "--axis",
            "detector.dark_cps",
            "--values",
            "20,2000",
            "--metric",
            "upper_quartile_key_bits",
            "--days",
            "20",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut rows = csv.lines().skip(1);
    let low: f64 = rows.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let high: f64 = rows.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(low > high, "key must fall with dark rate: {low} vs {high}");
}

#[test]
fn convert_raster_roundtrip() {
    let raster = tmp("grid.asc");
    std::fs::write(
        &raster,
        "ncols 4\nnrows 3\nxllcorner -76.0\nyllcorner 45.0\ncellsize 0.25\nnodata_value -9999\n\
         1e-7 2e-7 3e-7 4e-7\n5e-8 -9999 6e-8 7e-8\n1e-8 2e-8 3e-8 4e-8\n",
    )
    .unwrap();
    let out = tmp("grid.csv");
    let status = qlink()
        .args(["convert-raster", "--in"])
        .arg(&raster)
        .args(["--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# cells: 3, 4"));
    // nodata became zero and rows flipped to latitude-ascending order.
    let first_row = text.lines().nth(3).unwrap();
    assert!(first_row.starts_with("1.000000e-8"));
}
