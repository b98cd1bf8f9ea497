//! Command-line behaviour: validation, exit codes, outputs and determinism.

use std::path::Path;
use std::process::{Command, Output};

use heftva_bench::output::ResultRecord;

fn heftva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heftva")).args(args).env_remove("HEFTVA_OUT").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const GRADVAR: &str = r#"
id = "gv"
kind = "gradvar"
seeds = 10

[hamiltonian]
model = "tfim"

[ansatz]
families = ["hea"]
n_list = [4, 6]
layers = 2
"#;

const VQE2: &str = r#"
id = "vqe2"
kind = "vqe"
seeds = 2

[hamiltonian]
model = "tfim"
j = 1.0
h = 1.0

[ansatz]
families = ["hea"]
n = 2
layers = 2

[optimizer]
max_steps = 2000
"#;

#[test]
fn unknown_field_reports_path_and_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &GRADVAR.replace("model = \"tfim\"", "model = \"tfim\"\nhh = 2.0"));
    let out = heftva(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hamiltonian"), "{err}");
    assert!(err.contains("hh"), "{err}");
}

#[test]
fn out_of_range_value_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &GRADVAR.replace("n_list = [4, 6]", "n_list = [4, 40]"));
    let out = heftva(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ansatz.n_list"));
}

#[test]
fn gradvar_writes_one_row_per_size() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gv.toml", GRADVAR);
    let out = heftva(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(tmp.path().join("gv/gradvar.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "family");
    assert_eq!(&header[header.len() - 1], "config_hash");
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][2], "4");
    assert_eq!(&rows[1][2], "6");
    let record = ResultRecord::load(&tmp.path().join("gv/summary.json")).unwrap();
    assert_eq!(record.kind, "gradvar");
    assert_eq!(record.config_hash.len(), 64);
}

#[test]
fn seeds_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gv.toml", GRADVAR);
    let out = heftva(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap(), "--seeds", "3"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(tmp.path().join("gv/gradvar.csv")).unwrap();
    let seeds_col = rdr.headers().unwrap().iter().position(|h| h == "seeds").unwrap();
    assert!(rdr.records().all(|r| &r.unwrap()[seeds_col] == "3"));
}

#[test]
fn two_qubit_vqe_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "vqe.toml", VQE2);
    let out = heftva(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("vqe2/final.json")).unwrap()).unwrap();
    let rows = table.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let e = r["final_energy"].as_f64().unwrap();
        assert!((e + 5f64.sqrt()).abs() < 1e-3, "{e}");
    }
}

#[test]
fn plot_files_follow_the_tidy_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gv.toml", GRADVAR);
    assert!(heftva(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]).status.success());
    let dir = tmp.path().join("gv");
    let mut rdr = csv::Reader::from_path(dir.join("plot.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().take(4).collect::<Vec<_>>(), ["x", "series", "y", "yerr"]);
    assert_eq!(rdr.records().count(), 2);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("plot.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment_id"], "gv");
    assert_eq!(meta["y_scale"], "log10");
    assert!(std::fs::read_to_string(dir.join("plot.svg")).unwrap().starts_with("<svg"));
    std::fs::remove_file(dir.join("plot.csv")).unwrap();
    assert!(heftva(&["plot", dir.to_str().unwrap()]).status.success());
    assert!(dir.join("plot.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "vqe.toml", &VQE2.replace("max_steps = 2000", "max_steps = 50"));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert!(heftva(&["run", "--config", &cfg, "--out", d.to_str().unwrap()]).status.success());
    }
    for f in ["final.csv", "trace.csv", "plot.csv", "plot.svg"] {
        assert_eq!(std::fs::read(a.join("vqe2").join(f)).unwrap(), std::fs::read(b.join("vqe2").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn assert_flag_exits_4_on_failed_check() {
    let tmp = tempfile::tempdir().unwrap();
    // Two sizes with both families: the variance-ratio check cannot reach 1e3 at N = 4.
    let cfg = write_config(tmp.path(), "gv.toml", &GRADVAR.replace("families = [\"hea\"]", "families = [\"heft\", \"hea\"]"));
    let out = heftva(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap(), "--assert"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = heftva(&["run", "--config", "/nonexistent/x.toml", "--out", "/tmp"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn every_shipped_config_validates() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let manifest = heftva_bench::suite::Manifest::load(&root).unwrap();
    for suite in manifest.suites.values() {
        for rel in &suite.configs {
            let out = heftva(&["validate", "--config", root.join(rel).to_str().unwrap()]);
            assert!(out.status.success(), "{rel}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    assert_eq!(manifest.suites["smoke"].configs.len(), 16);
    assert_eq!(manifest.figures.len(), 16);
}
