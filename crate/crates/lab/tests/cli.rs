use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use idl_lab::commands::{read_sweep_index, verify_report};
use idl_lab::output::{report_json, CSV_HEADER};
use idl_lab::presets::{preset, PRESET_NAMES};
use idl_lab::report::{StabilityReport, Verdict, SCHEMA};
use idl_lab::{load_scenario, LabError, Scenario};
use serde_json::{json, Value};
use tempfile::TempDir;

fn idl(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idl"))
        .args(args)
        .env("IDL_OUT_DIR", out)
        .output()
        .expect("idl runs")
}

fn files(output: &Output) -> Vec<PathBuf> {
    String::from_utf8_lossy(&output.stdout)
        .lines()
        .map(PathBuf::from)
        .collect()
}

fn file_named(output: &Output, name: &str) -> PathBuf {
    files(output)
        .into_iter()
        .find(|p| p.file_name().is_some_and(|f| f == name))
        .unwrap_or_else(|| panic!("no {name} in {:?}", String::from_utf8_lossy(&output.stdout)))
}

fn write_scenario(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut value: Value = serde_json::from_str(&preset(name).unwrap().to_json()).unwrap();
    edit(&mut value);
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn read_report(path: &Path) -> StabilityReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn presets_are_listed() {
    let tmp = TempDir::new().unwrap();
    let out = idl(&["presets"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let listed: Vec<String> = String::from_utf8_lossy(&out.stdout).lines().map(String::from).collect();
    assert_eq!(listed, PRESET_NAMES);
}

#[test]
fn simulate_conservative_keeps_energy() {
    let tmp = TempDir::new().unwrap();
    let out = idl(&["simulate", "--preset", "conservative"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = file_named(&out, "trace.csv");
    assert!(csv.starts_with(tmp.path()));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert!(text.ends_with('\n') && !text.contains('\r'));
    let e_s: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(e_s.len(), 1001);
    for e in &e_s {
        assert!((e - e_s[0]).abs() <= 1e-8 * e_s[0]);
    }
}

#[test]
fn csv_floats_carry_seventeen_digits() {
    let tmp = TempDir::new().unwrap();
    let out = idl(&["simulate", "--preset", "datko_delay"], tmp.path());
    let text = std::fs::read_to_string(file_named(&out, "trace.csv")).unwrap();
    let row = text.lines().nth(2).unwrap();
    let t = row.split(',').next().unwrap();
    let mantissa = t.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{t}");
    let parsed: f64 = t.parse().unwrap();
    assert_eq!(parsed, 64.0 * std::f64::consts::PI / 2048.0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let first = idl(&["simulate", "--preset", "posneg_wave"], a.path());
    let second = idl(&["simulate", "--preset", "posneg_wave"], b.path());
    let x = std::fs::read(file_named(&first, "trace.csv")).unwrap();
    let y = std::fs::read(file_named(&second, "trace.csv")).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn verify_distributed_wave_succeeds() {
    let tmp = TempDir::new().unwrap();
    let out = idl(&["verify", "--preset", "distributed_wave"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report(&file_named(&out, "report.json"));
    assert_eq!(report.schema, SCHEMA);
    assert_eq!(report.summary.verdict, Verdict::Stable);
    let table = report.intervals.unwrap();
    assert_eq!(table.even.len(), 50);
    assert!(table
        .even
        .iter()
        .all(|r| r.ok == Some(true) && r.observed_ratio <= r.bound.unwrap()));
    assert!(table.odd.iter().all(|r| r.ok));
}

#[test]
fn positive_terms_are_inconclusive() {
    let tmp = TempDir::new().unwrap();
    let path = write_scenario(tmp.path(), "distributed_wave", |v| {
        v["criteria"]["odd_product"] = json!({ "constant": 1.0 });
    });
    let out = idl(&["check", "--scenario", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report(&file_named(&out, "report.json"));
    assert_eq!(report.summary.verdict, Verdict::Inconclusive);
    assert!(report.criteria.iter().all(|c| !c.concluded));
}

#[test]
fn understated_observability_is_a_violation() {
    let tmp = TempDir::new().unwrap();
    let path = write_scenario(tmp.path(), "localized_wave", |v| {
        v["criteria"]["d"] = json!({ "constant": 0.01 });
    });
    let out = idl(&["verify", "--scenario", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("violation on interval 0"));
    let report = read_report(&file_named(&out, "report.json"));
    assert_eq!(report.summary.verdict, Verdict::Violation);
    assert!(!report.violations.is_empty());
    for v in &report.violations {
        assert_eq!(v.interval % 2, 0);
        assert!(!v.inequality.is_empty());
        assert!(v.observed > v.bound);
    }
}

#[test]
fn errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.json");
    let cases: [&[&str]; 4] = [
        &["verify", "--preset", "nope"],
        &["simulate", "--scenario", missing.to_str().unwrap()],
        &["simulate"],
        &["bogus"],
    ];
    for args in cases {
        let out = idl(args, tmp.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    assert_eq!(idl(&["--help"], tmp.path()).status.code(), Some(0));
}

#[test]
fn dt_must_divide_the_delay_spacing() {
    let tmp = TempDir::new().unwrap();
    let path = write_scenario(tmp.path(), "distributed_wave", |v| {
        v["integrator"]["history_divisions"] = json!(3);
    });
    match load_scenario(&path) {
        Err(LabError::Validation(problems)) => {
            assert!(problems.iter().any(|p| p.contains("tau/M")), "{problems:?}");
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
    let out = idl(&["simulate", "--scenario", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not divide tau/M"));
}

#[test]
fn validation_aggregates_every_problem() {
    let mut s = preset("conservative").unwrap();
    s.integrator.dt = 0.3;
    s.integrator.stride = 0;
    match s.resolve() {
        Err(LabError::Validation(problems)) => assert!(problems.len() >= 2, "{problems:?}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn parse_errors_carry_their_location() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("broken.json");
    std::fs::write(&path, "{\n  \"name\": \"broken\",\n  \"operator\": [,\n}\n").unwrap();
    match load_scenario(&path) {
        Err(LabError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 16)),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let out = idl(&["check", "--scenario", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json:3:16"));
}

#[test]
fn scenario_files_round_trip() {
    for name in PRESET_NAMES {
        let s = preset(name).unwrap();
        let back = Scenario::from_json(&s.to_json(), Path::new("x.json")).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
    }
}

#[test]
fn hash_ignores_name_and_outputs_only() {
    let base = preset("distributed_wave").unwrap();
    let mut renamed = base.clone();
    renamed.name = "other".into();
    renamed.outputs.csv = false;
    assert_eq!(renamed.hash(), base.hash());
    let mut seeded = base.clone();
    seeded.seed = 7;
    assert_ne!(seeded.hash(), base.hash());
    let mut finer = base;
    finer.integrator.dt = 5e-4;
    assert_ne!(finer.hash(), seeded.hash());
}

#[test]
fn report_round_trips() {
    let resolved = preset("posneg_wave").unwrap().resolve().unwrap();
    let (_, report) = verify_report(&resolved, &[]).unwrap();
    let text = report_json(&report);
    let back: StabilityReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(report_json(&back), text);
    assert!(text.starts_with("{\n  \"schema\": \"idl-report-v1\""));
}

#[test]
fn out_flag_overrides_environment() {
    let (env_dir, flag_dir) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let out = idl(
        &[
            "simulate",
            "--preset",
            "conservative",
            "--out",
            flag_dir.path().to_str().unwrap(),
        ],
        env_dir.path(),
    );
    let csv = file_named(&out, "trace.csv");
    assert!(csv.starts_with(flag_dir.path()));
    let dir = csv
        .parent()
        .unwrap()
        .file_name()
        .unwrap()
        .to_string_lossy()
        .into_owned();
    let hash = preset("conservative").unwrap().hash();
    assert_eq!(dir, format!("conservative-{}", &hash[..12]));
}

#[test]
fn sweep_writes_one_report_per_point() {
    let tmp = TempDir::new().unwrap();
    let out = idl(
        &[
            "sweep",
            "--preset",
            "conservative",
            "--sweep",
            "initial.amplitude=0.5:1.5:3",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let index_path = files(&out)
        .into_iter()
        .find(|p| p.file_name().is_some_and(|f| f.to_string_lossy().starts_with("sweep-")))
        .expect("sweep index");
    let index = read_sweep_index(&index_path).unwrap();
    assert_eq!(index.points.len(), 3);
    let values: Vec<f64> = index.points.iter().map(|p| p.value).collect();
    assert_eq!(values, [0.5, 1.0, 1.5]);
    let mut hashes: Vec<&String> = index.points.iter().filter_map(|p| p.scenario_hash.as_ref()).collect();
    hashes.dedup();
    assert_eq!(hashes.len(), 3);
    for point in &index.points {
        assert_eq!(point.exit_code, 0);
        let report = read_report(point.report.as_ref().unwrap());
        assert_eq!(report.summary.verdict, Verdict::Consistent);
    }
}

#[test]
fn sweep_rejects_unknown_paths() {
    let tmp = TempDir::new().unwrap();
    let out = idl(
        &[
            "sweep",
            "--preset",
            "conservative",
            "--sweep",
            "integrator.nothing.deeper=1:2:2",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn omitted_fields_take_their_defaults() {
    let text = r#"{
        "name": "minimal",
        "operator": { "kind": "custom", "eigenvalues": [1.0, 4.0] },
        "schedule": { "switch_times": [0.0, 1.0] },
        "integrator": { "dt": 0.01 },
        "initial": { "shape": "mode", "k": 2, "amplitude": 0.1 }
    }"#;
    let s = Scenario::from_json(text, Path::new("minimal.json")).unwrap();
    assert!(s.outputs.csv && s.outputs.json && s.outputs.dir.is_none());
    assert_eq!((s.integrator.stride, s.integrator.history_divisions), (1, 1));
    assert_eq!(s.criteria.trials, 16);
    assert_eq!(s.seed, 0);
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("minimal.json");
    std::fs::write(&path, text).unwrap();
    let out = idl(&["verify", "--scenario", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files(&out).len(), 2);
}
