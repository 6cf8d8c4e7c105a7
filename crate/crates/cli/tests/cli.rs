use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command as Process;

use ks_cli::{run, Command, RunConfig};
use ks_core::io::{parse_branch, branch_rows_csv, Csv, Manifest};

fn flags(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn ks(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_ks")).args(args).output().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn flags_override_config_and_defaults_fill_in() {
    let mut file = Manifest::default();
    file.set("command", "sim");
    file.set("model", "hol:4");
    file.set("geometry", "odd:8");
    file.set("alpha", "12");
    file.set("dt", "1e-4");
    file.set("t-end", "0.01");
    let cfg = RunConfig::resolve(None, Some(&file), &flags(&[("alpha", "20")])).unwrap();
    assert_eq!(cfg.command, Command::Sim);
    assert_eq!(cfg.values["alpha"], "20");
    assert_eq!(cfg.values["ic"], "halfwave");
    assert_eq!(cfg.values["record-every"], "1");
    assert_eq!(cfg.values["seed"], "0");
}

#[test]
fn usage_errors() {
    let class = |cmd: Option<&str>, pairs: &[(&str, &str)]| {
        let cfg = RunConfig::resolve(cmd, None, &flags(pairs));
        match cfg {
            Ok(c) => run(&c).unwrap_err().class(),
            Err(e) => e.class(),
        }
    };
    let steady = |model, geometry: Option<&str>| {
        let mut p = vec![("model", model), ("alpha", "10")];
        if let Some(g) = geometry {
            p.push(("geometry", g));
        }
        class(Some("steady"), &p)
    };
    assert_eq!(steady("hol:6", Some("odd:8")), "usage");
    assert_eq!(steady("gal:4", Some("odd:8")), "usage");
    assert_eq!(steady("cd:4", None), "usage");
    assert_eq!(class(None, &[("model", "cd:4")]), "usage");
    assert_eq!(class(Some("fly"), &[]), "usage");
    assert_eq!(class(Some("tables"), &[("target", "table9"), ("out", "/tmp/x")]), "usage");
    assert_eq!(class(Some("sim"), &[("model", "cd:4"), ("geometry", "odd:8")]), "usage");
    assert_eq!(
        class(Some("steady"), &[("model", "cd:4"), ("geometry", "odd:8"), ("alpha", "10"), ("dt", "1")]),
        "usage"
    );
    assert_eq!(
        class(Some("cont"), &[("model", "cd:4"), ("geometry", "odd:8"), ("alpha-range", "9:3")]),
        "usage"
    );
}

#[test]
fn binary_reports_usage_errors_with_exit_code_two() {
    let out = ks(&["steady", "--model", "hol:6", "--geometry", "odd:8", "--alpha", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error-class: usage"));
}

#[test]
fn continuation_rerun_from_manifest_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let out = ks(&[
        "cont",
        "--model",
        "hol:4",
        "--geometry",
        "odd:8",
        "--alpha-range",
        "0.5:25",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.join("manifest.txt");
    let out = ks(&[
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<_> = std::fs::read_dir(&first)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    assert!(names.len() >= 3);
    for n in &names {
        let a = read(&first.join(n));
        assert_eq!(a, read(&second.join(n)), "{n:?}");
        if n.to_string_lossy().starts_with("branch_") {
            let rows = parse_branch(&Csv::parse(&a).unwrap()).unwrap();
            assert_eq!(branch_rows_csv(&rows).to_text(), a);
        }
    }
    let m = Manifest::read(&manifest).unwrap();
    assert_eq!(m.get("command"), Some("cont"));
    assert_eq!(m.get("seed-branch"), Some("trivial"));
}

#[test]
fn simulation_writes_a_full_grid_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::resolve(
        Some("sim"),
        None,
        &flags(&[
            ("model", "cd:4"),
            ("geometry", "odd:6"),
            ("alpha", "10"),
            ("dt", "1e-4"),
            ("t-end", "0.01"),
            ("record-every", "20"),
            ("out", tmp.path().to_str().unwrap()),
        ]),
    )
    .unwrap();
    run(&cfg).unwrap();
    let csv = Csv::parse(&read(&tmp.path().join("trajectory.csv"))).unwrap();
    assert_eq!(csv.header.len(), 1 + 12);
    assert_eq!(csv.rows.len(), 6);
}

#[test]
fn stable_step_table_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::resolve(
        Some("tables"),
        None,
        &flags(&[("target", "table3"), ("out", tmp.path().to_str().unwrap())]),
    )
    .unwrap();
    let outcome = run(&cfg).unwrap();
    assert_eq!(outcome.report.len(), 7);
    let csv = Csv::parse(&read(&tmp.path().join("table3.csv"))).unwrap();
    assert_eq!(csv.header, ["model", "geometry", "alpha=10", "alpha=20", "alpha=30"]);
    assert_eq!(csv.rows.len(), 7);
    assert_eq!(csv.rows[0][..2], ["hol:3", "odd:8"]);
    for row in &csv.rows {
        for cell in &row[2..] {
            assert!(cell == "---" || cell.parse::<f64>().is_ok_and(|v| v > 0.0), "{cell}");
        }
    }
}
