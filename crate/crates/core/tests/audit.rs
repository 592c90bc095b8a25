use proptest::prelude::*;
use recourse_core::audit::{audit, cohort_explain, decision_gap, linear_attribution};
use recourse_core::counterfactual::{CounterfactualQuery, Explainer, Statistics, Variant};
use recourse_core::model::train_svm;
use recourse_core::synth::bar_passage;
use recourse_core::{AuditError, Dataset, ExplainError, FeatureSchema, FeatureSpec, Label, LinearSvm, TrainConfig};

fn audit_bar(bias: f64, seed: u64) -> recourse_core::AuditReport {
    let data = bar_passage(600, bias, seed);
    let model = train_svm(&data, &TrainConfig::default()).unwrap();
    let stats = Statistics::fit(&data, None).unwrap();
    let ex = Explainer::new(&model, data.schema(), &stats).unwrap();
    audit(&ex, &data, Label::Positive, Variant::Correlated, &CounterfactualQuery::new(Vec::new())).unwrap()
}

#[test]
fn planted_bias_shows_up_as_switch_into_advantaged_group() {
    let report = audit_bar(3.0, 1);
    assert!(report.cohort_size > 0);
    let white = report.category("race_white").unwrap();
    assert!(white.percent > 0.0, "race_white {}", white.percent);
    for group in ["race", "sex"] {
        assert!(report.group_total(group).abs() <= 1e-9);
    }
}

#[test]
fn unbiased_data_moves_groups_little() {
    let report = audit_bar(0.0, 1);
    // Nobody should be pushed into a race in bulk; 10 points is far above
    // what sampling noise in the fitted weights produces at this size.
    for c in report.categorical.iter().filter(|c| c.group == "race") {
        assert!(c.percent.abs() < 10.0, "{} {}", c.name, c.percent);
    }
}

#[test]
fn audit_is_deterministic() {
    assert_eq!(audit_bar(2.0, 4), audit_bar(2.0, 4));
}

fn tiny() -> (Dataset, LinearSvm) {
    let schema =
        FeatureSchema::new(vec![FeatureSpec::continuous("a").with_bounds(-10.0, 10.0), FeatureSpec::continuous("b")])
            .unwrap();
    let rows = vec![vec![-2.0, 0.0], vec![-3.0, 1.0], vec![2.0, 0.0], vec![3.0, 0.0]];
    let labels = vec![Label::Negative, Label::Negative, Label::Positive, Label::Positive];
    let data = Dataset::new(schema, rows, labels).unwrap();
    let model = LinearSvm::new(vec![1.0, 0.0], 0.0, vec!["a".into(), "b".into()]).unwrap();
    (data, model)
}

#[test]
fn cohort_of_two_and_frozen_failure() {
    let (data, model) = tiny();
    let stats = Statistics::default();
    let ex = Explainer::new(&model, data.schema(), &stats).unwrap();
    let entries = cohort_explain(&ex, &data, Label::Positive, &CounterfactualQuery::new(Vec::new())).unwrap();
    assert_eq!(entries.iter().map(|e| e.row).collect::<Vec<_>>(), vec![0, 1]);
    assert!(entries.iter().all(|e| e.result.as_ref().unwrap().valid));

    // freezing `a` leaves only `b`, which the model ignores
    let frozen = CounterfactualQuery::new(Vec::new()).freeze(0);
    let entries = cohort_explain(&ex, &data, Label::Positive, &frozen).unwrap();
    assert!(entries
        .iter()
        .all(|e| matches!(e.result, Err(ExplainError::MarginUnreachable { target: Label::Positive }))));
    assert_eq!(audit(&ex, &data, Label::Positive, Variant::Plain, &frozen).unwrap_err(), AuditError::NoSuccesses);
}

#[test]
fn no_undesirable_predictions_is_empty_cohort() {
    let (data, _) = tiny();
    let model = LinearSvm::new(vec![0.0, 1.0], 5.0, vec!["a".into(), "b".into()]).unwrap();
    let stats = Statistics::default();
    let ex = Explainer::new(&model, data.schema(), &stats).unwrap();
    assert!(cohort_explain(&ex, &data, Label::Positive, &CounterfactualQuery::new(Vec::new())).unwrap().is_empty());
    assert_eq!(
        audit(&ex, &data, Label::Positive, Variant::Plain, &CounterfactualQuery::new(Vec::new())).unwrap_err(),
        AuditError::EmptyCohort(Label::Negative)
    );
}

proptest! {
    #[test]
    fn attribution_is_complete(
        w in prop::collection::vec(-3.0f64..3.0, 4),
        b in -2.0f64..2.0,
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 2..20),
        x in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        prop_assume!(w.iter().any(|v| *v != 0.0));
        let schema = FeatureSchema::new((0..4).map(|i| FeatureSpec::continuous(format!("f{i}"))).collect()).unwrap();
        let labels = vec![Label::Positive; rows.len()];
        let data = Dataset::new(schema, rows, labels).unwrap();
        let model = LinearSvm::from_weights(w, b).unwrap();
        let phi = linear_attribution(&model, &data, &x).unwrap();
        let gap = decision_gap(&model, &data.feature_means(), &x);
        prop_assert!((phi.iter().sum::<f64>() - gap).abs() <= 1e-12 * (1.0 + gap.abs()));
    }
}
