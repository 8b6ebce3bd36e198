//! Exercises the public API the way a downstream crate would: load data,
//! extract rules, serialize everything, and read it all back.

use rexkit::dataset::{
    builtin_fixture, dataset_to_csv, infer_schema, load_csv, CsvOptions, Fixture,
};
use rexkit::pipeline::{run, Mode, PipelineConfig};
use rexkit::rex::{render_ruleset, ruleset_from_json, ruleset_to_json, ExtractConfig};

#[test]
fn direct_extraction_round_trips_through_json() {
    let data = builtin_fixture::<f64>(Fixture::Golf);
    let ruleset = rexkit::rex::run_rex(&data, &ExtractConfig::default()).unwrap();
    assert_eq!(ruleset.accuracy(&data), 1.0);

    let doc = ruleset_to_json(&ruleset, &data.schema, &data.classes);
    let back = ruleset_from_json::<f64>(&doc, &data.schema, &data.classes).unwrap();
    assert_eq!(back, ruleset);
    for pattern in &data.patterns {
        assert_eq!(back.classify(&pattern.values), pattern.label);
    }

    let text = render_ruleset(&ruleset, &data.schema, &data.classes);
    assert!(text.ends_with("Default Rule: play.\n"));
}

#[test]
fn exported_csv_loads_back_to_the_same_patterns() {
    let data = builtin_fixture::<f64>(Fixture::Season);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("season.csv");
    std::fs::write(&path, dataset_to_csv(&data)).unwrap();

    let options = CsvOptions::default();
    let schema = infer_schema::<f64>(&path, &options).unwrap();
    let reloaded = load_csv::<f64>(&path, &schema, &options).unwrap();
    assert_eq!(reloaded.patterns.len(), data.patterns.len());
    assert_eq!(reloaded.classes.len(), data.classes.len());

    // Attribute and class names differ (inferred vs declared), but the rules
    // extracted from the reloaded table classify it just as perfectly.
    let ruleset = rexkit::rex::run_rex(&reloaded, &ExtractConfig::default()).unwrap();
    assert_eq!(ruleset.accuracy(&reloaded), 1.0);
}

#[test]
fn pipeline_run_with_a_holdout_reports_test_accuracy() {
    let data = builtin_fixture::<f64>(Fixture::Golf);
    let mut cfg = PipelineConfig::<f64>::default();
    cfg.mode = Mode::Direct;
    cfg.split.test_fraction = 0.25;
    cfg.split.seed = 3;
    let outcome = run(&data, &cfg).unwrap();
    assert!(outcome.report.test_accuracy.is_some());
    assert!(outcome
        .artifacts
        .iter()
        .any(|(name, _)| name == "rules_final.json"));
}
