use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hyperlace"));
    c.env_remove("HYPERLACE_THREADS");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, threads: Option<&str>) -> Output {
    let mut c = bin();
    c.arg("run").arg(config);
    if let Some(t) = threads {
        c.env("HYPERLACE_THREADS", t);
    }
    c.output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("MANIFEST.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

const FREE_GAUSSIAN: &str = r#"
task = "evolve"
[signature]
n = 2
k = 1
[grid]
half_width = 16.0
points = 64
[time]
steps = 64
[initial]
exact = "gaussian_product"
widths = [2.0, 2.0]
[output]
dir = "out"
"#;

#[test]
fn catalog_lists_tagged_entries_in_stable_order() {
    let a = bin().arg("catalog").output().unwrap();
    let b = bin().arg("catalog").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let ab = text.lines().find(|l| l.contains("aharonov-bohm")).unwrap();
    assert!(ab.contains("NOT-condition-A"));
    assert!(text.contains("gaussian_product"));
}

#[test]
fn malformed_expression_exits_2_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &FREE_GAUSSIAN.replace("[initial]", "[potentials]\na = [\"x1 +\", \"0\"]\n[initial]"));
    for cmd in ["run", "validate"] {
        let out = bin().arg(cmd).arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains("potentials.a[0]") && err.contains("byte 4"), "{err}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.toml", "task = \"evolve\"\ncolour = 1\n");
    let no_seed = write_config(dir.path(), "s.toml", "task = \"carleman-check\"\n");
    let no_grid = write_config(dir.path(), "g.toml", "task = \"evolve\"\n[signature]\nn = 2\nk = 1\n");
    for cfg in [unknown, no_seed, no_grid] {
        assert_eq!(run(&cfg, None).status.code(), Some(2), "{}", cfg.display());
    }
    let cfg = write_config(dir.path(), "t.toml", FREE_GAUSSIAN);
    assert_eq!(run(&cfg, Some("zero")).status.code(), Some(2));
}

#[test]
fn free_gaussian_evolution_conserves_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "evolve.toml", FREE_GAUSSIAN);
    let out = run(&cfg, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir.path().join("out"));
    assert_eq!(m["status"], "ok");
    let d = &m["diagnostics"];
    assert!(d["l2_drift"].as_f64().unwrap() < 1e-8);
    assert!(d["linear_energy_drift"].as_f64().unwrap() < 1e-8);
    assert!(m["assumption_norms"]["m_b"].as_f64().unwrap() == 0.0);
    let csv_path = dir.path().join("out/evolution.csv");
    let first = std::fs::read(&csv_path).unwrap();
    assert_eq!(csv_rows(&csv_path).len(), 65);

    let out = run(&cfg, Some("1"));
    assert!(out.status.success());
    assert_eq!(std::fs::read(&csv_path).unwrap(), first);
    assert_eq!(manifest(&dir.path().join("out")), m);
}

#[test]
fn aharonov_bohm_gauge_is_a_hypothesis_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ab.toml",
        "task = \"gauge-check\"\n[signature]\nn = 2\nk = 1\n[potentials]\ncatalog = \"aharonov-bohm\"\n",
    );
    let out = run(&cfg, None);
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(&dir.path().join("out"));
    assert_eq!(m["status"], "failed");
    assert_eq!(m["error"]["exit_code"], 3);
    assert!(!dir.path().join("out/gauge.csv").exists());
}

#[test]
fn gauge_check_reports_transversality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.toml",
        "task = \"gauge-check\"\n[signature]\nn = 3\nk = 2\n[grid]\nhalf_width = 3.0\npoints = 8\n[potentials]\ncatalog = \"bounded-oscillatory\"\n",
    );
    let out = run(&cfg, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir.path().join("out"));
    assert!(m["diagnostics"]["max_transversality"].as_f64().unwrap() < 1e-8);
    assert!(m["diagnostics"]["max_field_difference"].as_f64().unwrap() < 1e-6);
    let rows = csv_rows(&dir.path().join("out/gauge.csv"));
    assert_eq!(rows.len(), 32);
    assert_eq!(rows[0].len(), 6);
}

#[test]
fn numerical_abort_leaves_failed_manifest_and_no_table() {
    let dir = tempfile::tempdir().unwrap();
    let body = FREE_GAUSSIAN.replace("exact = \"gaussian_product\"\nwidths = [2.0, 2.0]", "expression = \"1/x1\"");
    let cfg = write_config(dir.path(), "nan.toml", &body);
    let out = run(&cfg, None);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir.path().join("out"));
    assert_eq!(m["status"], "failed");
    assert_eq!(m["error"]["kind"], "numerical");
    assert!(!dir.path().join("out/evolution.csv").exists());
}

const MASS_BOUND: &str = r#"
task = "mass-bound"
[signature]
n = 2
k = 1
[grid]
half_width = 12.0
points = 64
[time]
steps = 64
[initial]
exact = "gaussian_product"
widths = [1.0, 1.2]
[mass_bound]
r0 = 1.0
r1 = 8.5
rhos = [1.0, 2.0]
"#;

#[test]
fn mass_bound_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mb.toml", MASS_BOUND);
    let out = run(&cfg, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out/mass_bound.csv"));
    assert!(!rows.is_empty());
    for r in &rows {
        let c: f64 = r[5].parse().unwrap();
        assert!(c.is_finite() && c > 0.0 && &r[6] == "false");
    }
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/mass_bound_summary.json")).unwrap()).unwrap();
    let max_c = summary["max_c"].as_f64().unwrap();
    assert!(rows.iter().all(|r| r[5].parse::<f64>().unwrap() <= max_c));
    assert!(summary["median_c"].as_f64().unwrap() <= max_c);
}

#[test]
fn mass_bound_radius_hypothesis_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mb.toml", &MASS_BOUND.replace("r1 = 8.5", "r1 = 8.0"));
    assert_eq!(bin().arg("validate").arg(&cfg).output().unwrap().status.code(), Some(3));
    assert_eq!(run(&cfg, None).status.code(), Some(3));
}

#[test]
fn appell_check_with_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
task = "appell-check"
[signature]
n = 2
k = 1
[grid]
half_width = 10.0
points = 32
[time]
steps = 16
[potentials]
catalog = "constant-2d-field"
[initial]
exact = "gaussian_product"
widths = [1.0, 1.3]
[appell]
gamma = 4.0
"#;
    let cfg = write_config(dir.path(), "ap.toml", body);
    let out = run(&cfg, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir.path().join("out"));
    assert_eq!(m["diagnostics"]["gamma"].as_f64().unwrap(), 4.0);
    assert!(m["diagnostics"]["transversal_drift"].as_f64().unwrap() < 1e-8);
    assert_eq!(csv_rows(&dir.path().join("out/appell.csv")).len(), 17);
}

#[test]
fn small_battery_is_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "task = \"carleman-check\"\nseed = 5\n[carleman]\ncount = 6\nfraction_3d = 0.0\n");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = run(&cfg, Some(threads));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(dir.path().join("out/carleman.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn commutator_audit_has_nonnegative_slack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", "task = \"commutator-audit\"\nseed = 3\n[carleman]\ncount = 4\nfraction_3d = 0.0\n");
    let out = run(&cfg, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out/commutator.csv"));
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r[14].parse::<f64>().unwrap() >= -1e-6);
        assert!(r[9].parse::<f64>().unwrap() >= 0.0);
    }
}

/// The default battery; about as slow as the acceptance run.
#[test]
fn default_carleman_battery_holds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "task = \"carleman-check\"\nseed = 20240601\n");
    let out = run(&cfg, None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out/carleman.csv"));
    assert!(rows.len() >= 100);
    for r in &rows {
        let rhs: f64 = r[13].parse().unwrap();
        let margin: f64 = r[14].parse().unwrap();
        assert!(margin >= -1e-6 * rhs, "row {}", &r[0]);
    }
    let m = manifest(&dir.path().join("out"));
    assert_eq!(m["status"], "ok");
    assert!(m["cutoff_bounds"]["smallest_r"]["bounds"]["phi1"].as_f64().unwrap() > 0.0);
    assert_eq!(m["assumption_norms"].as_array().unwrap().len(), rows.len());
}
