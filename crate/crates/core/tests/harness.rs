use qldp::harness::{emit_csv, registry, run_experiment, ExperimentConfig, ParamValue};
use tempfile::TempDir;

#[test]
fn registry_lists_every_kind() {
    let kinds: Vec<_> = registry().iter().map(|e| e.kind()).collect();
    assert_eq!(
        kinds,
        [
            "triviality-bound",
            "estimator-concentration",
            "rejection-distortion",
            "termination-rate",
            "parity-e2e",
            "dp-check-suite"
        ]
    );
}

#[test]
fn hundred_trial_triviality_run_passes() {
    let report = run_experiment(&ExperimentConfig::new("triviality-bound", 2024, 100)).unwrap();
    assert!(report.pass);
    assert_eq!(report.records.len(), 100);
    assert!(report.aggregates["max_excess"] <= 1e-9);
}

#[test]
fn identical_configs_give_identical_records_and_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = ExperimentConfig::new("rejection-distortion", 9, 10);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg.clone().with_parallelism(3)).unwrap();
    assert_eq!(a.records, b.records);

    let (pa, pb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_csv(&a, &pa).unwrap();
    emit_csv(&b, &pb).unwrap();
    let text = std::fs::read_to_string(&pa).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert_eq!(text, std::fs::read_to_string(&pb).unwrap());
}

#[test]
fn csv_numbers_round_trip() {
    let dir = TempDir::new().unwrap();
    let report = run_experiment(&ExperimentConfig::new("dp-check-suite", 3, 4)).unwrap();
    let path = dir.path().join("r.csv");
    emit_csv(&report, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let col = report.columns.iter().position(|c| c == "set_triviality").unwrap() + 2;
    for (line, record) in text.lines().skip(1).zip(&report.records) {
        let field: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert_eq!(field.to_bits(), record.values[col - 2].to_bits());
    }
}

#[test]
fn csv_write_failure_names_the_path() {
    let report = run_experiment(&ExperimentConfig::new("dp-check-suite", 3, 1)).unwrap();
    let err = emit_csv(&report, std::path::Path::new("/nonexistent/dir/r.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/r.csv"));
}

#[test]
fn trial_errors_do_not_abort_the_batch() {
    let cfg = ExperimentConfig::new("parity-e2e", 1, 3)
        .with_param("mode", ParamValue::Text("qsq".into()))
        .with_param("d", ParamValue::Number(3.0))
        .with_param("tau", ParamValue::Number(0.3));
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.records.len(), 3);
    assert!(report.records.iter().all(|r| r.error.is_some()));
    assert!(!report.pass);
}
