use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anosov_lab::cli::{
    emit_plots, run_experiment, validate_config, validate_config_str, ExperimentConfig, ExperimentKind, KindParams, PlotKind, SystemSpec,
};
use anosov_lab::systems::CAT;
use anosov_lab::LabError;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("anosov-lab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

fn cfg(text: &str) -> ExperimentConfig {
    validate_config_str(text).unwrap_or_else(|e| panic!("{e:?}"))
}

const LIVSIC: &str = r#"{"kind": "livsic", "system": "cat", "grid": {"n_side": 64}}"#;

const DIVERGENT_SWEEP: &str = r#"{
  "kind": "source-sweep",
  "system": {"type": "suspension", "roof": 1.0},
  "grid": {"n_side": 64},
  "params": {
    "rho": [0.5],
    "h_list": [0.0625, 0.03125, 0.015625],
    "samples": 3,
    "weight": {"constant": 0.9624236501192069},
    "expect": "divergence"
  },
  "seed": 3
}"#;

#[test]
fn minimal_livsic_config_gets_defaults() {
    let dir = scratch("minimal");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("c.json");
    fs::write(&path, LIVSIC).unwrap();
    let c = validate_config(&path).unwrap();
    assert_eq!(c.kind, ExperimentKind::Livsic);
    assert_eq!(c.system, SystemSpec::Cat { matrix: CAT });
    assert_eq!((c.grid.n_side, c.grid.n_s, c.seed, c.schema_version), (64, 16, 0, 1));
    let KindParams::Livsic(p) = &c.params else { panic!("wrong params") };
    assert_eq!((p.samples, p.max_mode, p.tol), (10, 4, 1e-10));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn validation_names_every_violation() {
    let one = validate_config_str(r#"{"kind": "livsic", "grid": {"n_side": 100}}"#).unwrap_err();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].field, "grid.n_side");

    let two = validate_config_str(r#"{"kind": "livsic", "grid": {"n_side": 100}, "params": {"tol": -1}}"#).unwrap_err();
    let fields: Vec<&str> = two.iter().map(|e| e.field.as_str()).collect();
    assert_eq!(fields, ["grid.n_side", "params.tol"]);

    let unknown = validate_config_str(r#"{"kind": "mls", "colour": 1, "params": {"max_period": 99, "extra": true}}"#).unwrap_err();
    let fields: Vec<&str> = unknown.iter().map(|e| e.field.as_str()).collect();
    assert!(fields.contains(&"colour") && fields.contains(&"params.extra") && fields.contains(&"params.max_period"), "{fields:?}");

    let schema = validate_config_str(r#"{"schema_version": 2, "kind": "norms"}"#).unwrap_err();
    assert_eq!(schema[0].field, "schema_version");
    assert_eq!(validate_config_str(r#"{"grid": {}}"#).unwrap_err()[0].field, "kind");
    let sys = validate_config_str(r#"{"kind": "conformal", "system": "cat"}"#).unwrap_err();
    assert_eq!(sys[0].field, "system");
    let roof = validate_config_str(r#"{"kind": "mls", "params": {"roof_ref": {"constant": 0.1, "terms": [{"k": [1, 0], "amplitude": 0.2}]}}}"#).unwrap_err();
    assert_eq!(roof[0].field, "params.roof_ref");
    assert!(validate_config_str("{not json").is_err());
}

#[test]
fn livsic_run_passes_and_records_residual() {
    let dir = scratch("livsic");
    let m = run_experiment(&cfg(LIVSIC), &dir, false).unwrap();
    assert!(m.passed && m.exit_code() == 0);
    let rec = m.checks.iter().find(|c| c.name == "residual").unwrap();
    assert!(rec.passed);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("livsic.json")).unwrap()).unwrap();
    assert!(summary["max_residual"].as_f64().unwrap() <= 1e-10);
    assert!(summary["max_recovery_error"].as_f64().unwrap() <= 1e-10);
    for f in &m.files {
        assert!(dir.join(f).exists(), "{f} listed but missing");
    }
    let on_disk: Vec<String> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(on_disk.len(), m.files.len());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failing_check_sets_exit_code() {
    let dir = scratch("strict");
    let c = cfg(r#"{"kind": "livsic", "params": {"samples": 2, "tol": 1e-30}}"#);
    let m = run_experiment(&c, &dir, false).unwrap();
    assert!(!m.passed);
    assert_eq!(m.exit_code(), 1);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn divergent_sweep_passes_and_reruns_identically() {
    let (a, b) = (scratch("sweep-a"), scratch("sweep-b"));
    let c = cfg(DIVERGENT_SWEEP);
    let ma = run_experiment(&c, &a, true).unwrap();
    assert!(ma.passed, "{:?}", ma.checks);
    let mb = run_experiment(&c, &b, true).unwrap();
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.config_hash, mb.config_hash);
    for f in &ma.files {
        if f != "manifest.json" {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
        }
    }
    assert!(ma.files.iter().any(|f| f == "ratio_vs_h_rho0.5.svg"));
    fs::remove_dir_all(&a).unwrap();
    fs::remove_dir_all(&b).unwrap();
}

#[test]
fn module_errors_leave_no_outputs() {
    let dir = scratch("partial");
    // Three and a half returns of a unit roof cannot be propagated.
    let c = cfg(r#"{"kind": "propagation", "system": {"type": "suspension", "roof": 1.0}, "params": {"time": 3.5, "samples": 2}}"#);
    let err = run_experiment(&c, &dir, false).unwrap_err();
    assert!(err.to_string().contains("propagation"), "{err}");
    assert!(!dir.exists());
}

fn write_report(dir: &Path, name: &str, v: serde_json::Value) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string(&v).unwrap()).unwrap();
    p
}

#[test]
fn plot_contracts() {
    let dir = scratch("plots");
    let empty = write_report(&dir, "e.json", serde_json::json!({"experiment": "norms", "band_profile": []}));
    let err = emit_plots(&empty, PlotKind::BandDecay).unwrap_err();
    assert!(matches!(&err, LabError::InvalidInput(m) if m == "nothing to plot"), "{err}");
    let empty_sweep = write_report(&dir, "s0.json", serde_json::json!({"experiment": "source-sweep", "sweeps": []}));
    assert!(emit_plots(&empty_sweep, PlotKind::RatioVsH).unwrap_err().to_string().contains("nothing to plot"));

    let bands = write_report(
        &dir,
        "b.json",
        serde_json::json!({"experiment": "norms", "band_profile": [{"j": 0, "sup": 1.0}, {"j": 1, "sup": 0.25}, {"j": 2, "sup": 0.0625}]}),
    );
    let out = emit_plots(&bands, PlotKind::BandDecay).unwrap();
    assert_eq!(out.len(), 1);
    let svg = fs::read_to_string(&out[0]).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("log2"));

    let per_h = serde_json::json!([{"h": 0.25, "max": 2.0, "median": 1.0, "count": 3}, {"h": 0.125, "max": 3.0, "median": 1.5, "count": 3}]);
    let sweep = write_report(
        &dir,
        "s.json",
        serde_json::json!({"experiment": "source-sweep", "sweeps": [
            {"rho": 0.25, "per_h": per_h, "median_fit": null},
            {"rho": 1.0, "per_h": per_h, "median_fit": {"slope": 0.58, "intercept": -1.2}}
        ]}),
    );
    let out = emit_plots(&sweep, PlotKind::RatioVsH).unwrap();
    assert_eq!(out.len(), 2);

    let broken = write_report(&dir, "x.json", serde_json::json!({"experiment": "threshold"}));
    assert!(matches!(emit_plots(&broken, PlotKind::Threshold), Err(LabError::Validation(_))));
    fs::write(dir.join("junk.json"), "{").unwrap();
    assert!(emit_plots(&dir.join("junk.json"), PlotKind::Threshold).is_err());
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn binary_exit_codes_and_env_overrides() {
    let dir = scratch("bin");
    fs::create_dir_all(&dir).unwrap();
    let bin = env!("CARGO_BIN_EXE_anosov-lab");
    let good = dir.join("good.json");
    fs::write(&good, r#"{"kind": "livsic", "params": {"samples": 3}}"#).unwrap();
    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"kind": "livsic", "grid": {"n_side": 100}, "params": {"tol": 0}}"#).unwrap();

    let v = Command::new(bin).args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(v.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&v.stderr);
    assert!(stderr.contains("grid.n_side") && stderr.contains("params.tol"), "{stderr}");

    let out = dir.join("from-env");
    let r = Command::new(bin)
        .args(["livsic", "--config"])
        .arg(&good)
        .env("ANOSOV_LAB_OUT", &out)
        .env("ANOSOV_LAB_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.join("manifest.json").exists());

    let wrong = Command::new(bin).args(["mls", "--config"]).arg(&good).arg("--out").arg(dir.join("x")).output().unwrap();
    assert_eq!(wrong.status.code(), Some(2));

    let p = Command::new(bin).args(["plot", "--report"]).arg(out.join("livsic.json")).output().unwrap();
    assert_eq!(p.status.code(), Some(2));
    fs::remove_dir_all(&dir).unwrap();
}
