use std::io::Write;

use dqsim_core::experiments::{
    crossover, run_experiment, validate_config, Cell, ExperimentConfig, ExperimentKind, OutputFormat,
};

fn config_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn empty_file_only_lacks_experiment() {
    let f = config_file("");
    let err = validate_config(f.path(), &[]).unwrap_err();
    assert_eq!(err.issues().len(), 1);
    assert!(err.to_string().contains("missing field `experiment`"), "{err}");
    let ok = validate_config(f.path(), &["experiment=fig3".into()]).unwrap();
    assert_eq!(ok, ExperimentConfig::for_experiment(ExperimentKind::Fig3));
}

#[test]
fn missing_file_is_reported() {
    let err = validate_config(std::path::Path::new("/nonexistent/cfg.json"), &[]).unwrap_err();
    assert!(err.to_string().contains("cannot read"));
}

#[test]
fn constraint_violations_list_every_path() {
    let f = config_file(r#"{"experiment": "fig2-tfim", "noise": {"kappa": -1}, "protocol": {"panels": [{"epsilon": 2, "trotter_steps": [0]}]}}"#);
    let err = validate_config(f.path(), &[]).unwrap_err();
    let paths: Vec<&str> = err.issues().iter().map(|i| i.path.as_str()).collect();
    assert!(paths.contains(&"noise.kappa"));
    assert!(paths.contains(&"protocol.panels[0].epsilon"));
    assert!(paths.contains(&"protocol.panels[0].trotter_steps"));
}

#[test]
fn fig2_heisenberg_defaults() {
    let c = ExperimentConfig::for_experiment(ExperimentKind::Fig2Heisenberg);
    let r = run_experiment(&c).unwrap();
    let a = r.table("fig2-heisenberg_a").unwrap();
    assert_eq!(a.columns, ["theta", "loss_l3", "loss_l5", "gate_error_l3", "gate_error_l5"]);
    assert_eq!(a.rows.len(), 64);
    let l3 = a.numbers("loss_l3").unwrap();
    let l5 = a.numbers("loss_l5").unwrap();
    assert!(l3[0] < 1e-25);
    assert!(l3.iter().zip(&l5).skip(1).all(|(x, y)| x > y));
    assert!(a.numbers("gate_error_l3").unwrap().iter().all(|v| (*v - 0.03).abs() < 1e-15));
    assert!(a.numbers("gate_error_l5").unwrap().iter().all(|v| (*v - 0.05).abs() < 1e-15));

    // Summary agrees with the raw columns it summarizes.
    let summary = r.table("fig2-heisenberg_summary").unwrap();
    let theta = a.numbers("theta").unwrap();
    let pts: Vec<(f64, f64)> = theta.iter().copied().zip(l3.iter().copied()).collect();
    let expected = crossover(&pts, 0.03);
    let recorded = &summary.rows[0][4];
    match expected {
        Some(t) => assert_eq!(recorded, &Cell::Num(t)),
        None => assert_eq!(recorded, &Cell::Text("none".into())),
    }
}

#[test]
fn fig2_tfim_panel_b_lines() {
    let c = ExperimentConfig::for_experiment(ExperimentKind::Fig2Tfim);
    let r = run_experiment(&c).unwrap();
    let b = r.table("fig2-tfim_b").unwrap();
    assert!((b.numbers("gate_error_l2").unwrap()[0] - 0.10).abs() < 1e-15);
    assert!((b.numbers("gate_error_l3").unwrap()[0] - 0.15).abs() < 1e-12);
}

#[test]
fn fig2_is_byte_identical_across_runs() {
    let c = ExperimentConfig::for_experiment(ExperimentKind::Fig2Heisenberg);
    let a = run_experiment(&c).unwrap().render(OutputFormat::Csv, false);
    let b = run_experiment(&c).unwrap().render(OutputFormat::Csv, false);
    assert_eq!(a, b);
}

#[test]
fn fig3_single_zero_angle() {
    let f = config_file(r#"{"experiment": "fig3", "protocol": {"theta_grid": [0.0]}}"#);
    let c = validate_config(f.path(), &[]).unwrap();
    let r = run_experiment(&c).unwrap();
    let t = r.table("fig3").unwrap();
    assert_eq!(
        t.columns,
        ["theta", "wall_time_s", "fidelity", "sx_1_ideal", "sx_1_device", "sx_2_ideal", "sx_2_device", "leakage"]
    );
    assert_eq!(t.rows.len(), 1);
    assert!((t.numbers("fidelity").unwrap()[0] - 1.0).abs() < 1e-9);
    // ⟨σx⟩ of (|↑> + 2|↓>)/√5 is 4/5.
    assert!((t.numbers("sx_1_ideal").unwrap()[0] - 0.8).abs() < 1e-12);
}

#[test]
fn table1_rows_and_checks() {
    let c = ExperimentConfig::for_experiment(ExperimentKind::Table1);
    let r = run_experiment(&c).unwrap();
    let t = r.table("table1").unwrap();
    let find = |variant: &str, n: i64, l: i64| {
        t.rows
            .iter()
            .find(|row| row[0] == Cell::Text(variant.into()) && row[1] == Cell::Int(n) && row[3] == Cell::Int(l))
            .unwrap()
            .clone()
    };
    let h3 = find("H_o", 3, 1);
    match (&h3[4], &h3[5]) {
        (Cell::Num(formula), Cell::Num(summed)) => {
            assert!((formula - 0.157e-6).abs() < 1e-9);
            assert!((formula - summed).abs() < 1e-18);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(find("H_o", 2, 1)[6], Cell::Num(0.0));
    let checks = r.table("table1_checks").unwrap();
    assert!(checks.rows.iter().all(|row| row[4] == Cell::Text("yes".into())));
}

#[test]
fn bounds_hold_for_defaults() {
    let c = ExperimentConfig::for_experiment(ExperimentKind::Bounds);
    let r = run_experiment(&c).unwrap();
    assert!(r.notes.iter().any(|n| n.ends_with("bound: 0")), "{:?}", r.notes);
}

#[test]
fn writes_csv_json_and_gnuplot() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::for_experiment(ExperimentKind::Bounds);
    c.protocol.theta_grid = Some(vec![0.0, 0.5]);
    let r = run_experiment(&c).unwrap();
    let files = r.write(dir.path(), OutputFormat::Csv, true).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into()).collect();
    assert_eq!(names, ["bounds.gp", "bounds.csv"]);
    let gp = std::fs::read_to_string(dir.path().join("bounds.gp")).unwrap();
    assert!(gp.contains("'bounds.csv' using 1:3"));
    let files = r.write(dir.path(), OutputFormat::Json, false).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(json["experiment"], "bounds");
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);
}
