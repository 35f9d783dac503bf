//! End-to-end runs of the binary on a coarse configuration.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_teichlab");

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(["--mesh-level", "3", "--series-radius", "10", "--cache-dir"])
        .arg(cache)
        .args(args)
        .env_remove("TEICHLAB_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn verify_reports_are_byte_identical_across_caches() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = a.path().join("report.json");
    let rb = b.path().join("report.json");
    let oa = run(&a.path().join("cache"), &["verify", "--output", ra.to_str().unwrap()]);
    let ob = run(&b.path().join("cache"), &["verify", "--output", rb.to_str().unwrap()]);
    // Level 3 misses the area tolerance.
    assert_eq!(oa.status.code(), Some(1), "{}", stderr(&oa));
    assert_eq!(ob.status.code(), Some(1));
    assert_eq!(std::fs::read(&ra).unwrap(), std::fs::read(&rb).unwrap());
    let warm = a.path().join("warm.json");
    run(&a.path().join("cache"), &["verify", "--output", warm.to_str().unwrap()]);
    assert_eq!(std::fs::read(&ra).unwrap(), std::fs::read(&warm).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&ra).unwrap()).unwrap();
    let criteria = report["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 13);
    for c in criteria {
        for key in ["name", "anchor", "measured", "tolerance", "status", "error_bar"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(report["provenance"]["config"]["mesh_level"], 3);
    assert!(report["provenance"]["chart_radius"].as_f64().unwrap() > 0.0);
    assert_eq!(stdout(&oa).lines().filter(|l| l.starts_with("criterion")).count(), 13);
}

#[test]
fn warm_cache_reproduces_harmonic_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["harmonic-solve", "--z", "0.01+0.005i,0,-0.002i"];
    let cold = run(&cache, &args);
    assert!(cold.status.success(), "{}", stderr(&cold));
    let warm = run(&cache, &args);
    assert_eq!(stdout(&cold), stdout(&warm));
    let v: serde_json::Value = serde_json::from_str(&stdout(&cold)).unwrap();
    for key in ["energy", "residual", "iterations", "cache_key", "provenance"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    let key = v["cache_key"].as_str().unwrap();
    let entry = cache.join("harmonic-map").join(format!("{key}.bin"));
    let text = std::fs::read(&entry).unwrap();
    assert!(text.starts_with(b"teichlab-cache 1\nkind harmonic-map\n"));
}

#[test]
fn corrupted_cache_entry_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["harmonic-solve", "--z", "0,0,0", "--target", "torus"];
    let first = run(&cache, &args);
    assert!(first.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    let entry = cache.join("harmonic-map").join(format!("{}.bin", v["cache_key"].as_str().unwrap()));
    let mut bytes = std::fs::read(&entry).unwrap();
    let n = bytes.len();
    bytes[n - 3] ^= 0x10;
    std::fs::write(&entry, bytes).unwrap();
    let second = run(&cache, &args);
    assert_eq!(second.status.code(), Some(2));
    assert!(stderr(&second).contains("cache_corrupt"), "{}", stderr(&second));
}

#[test]
fn energy_scan_writes_csv_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &dir.path().join("cache"),
        &["energy-scan", "--grid-re=-0.01,0.01", "--grid-steps", "3,1", "--target", "torus"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let comments = text.lines().take_while(|l| l.starts_with("# ")).count();
    assert!(comments >= 5);
    let rows: Vec<&str> = text.lines().skip(comments).collect();
    assert_eq!(rows[0], "z,E,residual");
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        let cols: Vec<&str> = r.split(',').collect();
        assert_eq!(cols.len(), 3);
        assert!(cols[1].parse::<f64>().unwrap() > 0.0);
    }
    assert!(text.contains("# config_digest: "));
}

#[test]
fn out_of_chart_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&dir.path().join("cache"), &["energy-scan", "--grid-re", "0,0.9", "--grid-steps", "2,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("config_invalid"), "{}", stderr(&out));
}

#[test]
fn bad_config_values_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.toml");
    std::fs::write(&cfg, "mesh_level = 3\nunknown_key = 1\n").unwrap();
    let out = run(&dir.path().join("cache"), &["--config", cfg.to_str().unwrap(), "surface-info"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("config_invalid"));
    let out = run(&dir.path().join("cache"), &["--fd-step", "0.5", "surface-info"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn environment_overrides_file_cache_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.toml");
    std::fs::write(&cfg, format!("mesh_level = 2\nseries_radius = 8.0\ncache_dir = {:?}\n", dir.path().join("from-file"))).unwrap();
    let out = Command::new(BIN)
        .args(["--config", cfg.to_str().unwrap(), "show-config"])
        .env("TEICHLAB_CACHE_DIR", dir.path().join("from-env"))
        .output()
        .unwrap();
    assert!(stdout(&out).contains("from-env"), "{}", stdout(&out));
    let solve = Command::new(BIN)
        .args(["--config", cfg.to_str().unwrap(), "harmonic-solve", "--z", "0,0,0"])
        .env("TEICHLAB_CACHE_DIR", dir.path().join("from-env"))
        .output()
        .unwrap();
    assert!(solve.status.success(), "{}", stderr(&solve));
    assert!(dir.path().join("from-env").join("harmonic-map").is_dir());
    assert!(!dir.path().join("from-file").exists());
}

#[test]
fn reporting_commands_embed_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let export = dir.path().join("mesh.txt");
    for args in [
        vec!["surface-info"],
        vec!["mesh-info", "--export", export.to_str().unwrap()],
        vec!["wp-gram"],
        vec!["levi", "--function", "log-energy"],
    ] {
        let out = run(&cache, &args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        let p = &v["provenance"];
        assert_eq!(p["config_digest"].as_str().unwrap().len(), 64);
        assert!(p["basis"]["seeds"].is_array());
        assert!(p["chart_radius"].is_number());
    }
    let mesh = std::fs::read_to_string(&export).unwrap();
    assert!(mesh.starts_with("# quotient mesh level 3"));
    let gram = run(&cache, &["wp-gram"]);
    let again = run(&cache, &["wp-gram"]);
    assert_eq!(stdout(&gram), stdout(&again));
    let v: serde_json::Value = serde_json::from_str(&stdout(&gram)).unwrap();
    assert!(v["convergence"].as_array().unwrap().len() >= 2);
}
