use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recourse_core::counterfactual::{
    nearest_support_vector, post_hoc_correlation, stability_radius, verify_stability, Binding, Counterfactual,
    CounterfactualQuery, ExplainError, Explainer, Method, PlausibilityRadius, Statistics, Variant,
};
use recourse_core::dataset::{ClassPrototypes, CovarianceModel, Dataset, FeatureSchema, FeatureSpec, Label};
use recourse_core::optim::brute_force_mip;
use recourse_core::synth::{random_instance, InstanceShape};
use recourse_core::LinearSvm;

fn continuous_schema(weights: &[f64]) -> FeatureSchema {
    FeatureSchema::new(
        weights.iter().enumerate().map(|(i, &w)| FeatureSpec::continuous(format!("x{i}")).with_weight(w)).collect(),
    )
    .unwrap()
}

fn model(w: &[f64], b: f64) -> LinearSvm {
    LinearSvm::from_weights(w.to_vec(), b).unwrap()
}

fn explain(m: &LinearSvm, s: &FeatureSchema, stats: &Statistics, q: CounterfactualQuery) -> Counterfactual {
    Explainer::new(m, s, stats).unwrap().explain(&q).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

/// Minimiser of `sum W_i (x_i - x'_i)^2` over `y' (<w, x'> + b) >= 1`.
fn projection(w: &[f64], b: f64, weights: &[f64], x: &[f64], target: f64) -> (Vec<f64>, f64) {
    let dec: f64 = w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b;
    let shortfall = 1.0 - target * dec;
    if shortfall <= 0.0 {
        return (x.to_vec(), 0.0);
    }
    let denom: f64 = w.iter().zip(weights).map(|(a, k)| a * a / k).sum();
    let t = shortfall / denom;
    let xp = x.iter().zip(w).zip(weights).map(|((xi, wi), k)| xi + target * t * wi / k).collect();
    (xp, shortfall * shortfall / denom)
}

#[test]
fn weighted_projection_examples() {
    let stats = Statistics::default();
    let s = continuous_schema(&[1.0, 1.0]);
    let m = model(&[1.0, 0.0], 0.0);
    let cf = explain(&m, &s, &stats, CounterfactualQuery::new(vec![-3.0, 0.0]));
    assert_eq!(cf.target, Label::Positive);
    assert!(close(cf.x_prime[0], 1.0, 1e-9) && cf.x_prime[1] == 0.0, "{:?}", cf.x_prime);
    assert!(close(cf.objective, 16.0, 1e-9));
    assert!(cf.valid);
    assert_eq!(cf.changed_features.len(), 1);
    assert_eq!(cf.solver.as_ref().unwrap().binding, vec![Binding::Margin]);

    let s = continuous_schema(&[4.0, 1.0]);
    let m = model(&[1.0, 1.0], 0.0);
    let q = CounterfactualQuery::new(vec![0.0, 0.0]).target(Label::Positive);
    let cf = explain(&m, &s, &stats, q);
    assert!(close(cf.x_prime[0], 0.2, 1e-9) && close(cf.x_prime[1], 0.8, 1e-9), "{:?}", cf.x_prime);
    assert!(close(cf.objective, 0.8, 1e-9));
}

#[test]
fn point_already_past_margin_is_returned() {
    let s = continuous_schema(&[1.0, 1.0]);
    let m = model(&[1.0, 0.0], 0.0);
    let x = vec![2.5, -1.0];
    let cf = explain(&m, &s, &Statistics::default(), CounterfactualQuery::new(x.clone()).target(Label::Positive));
    assert_eq!(cf.x_prime, x);
    assert_eq!(cf.objective, 0.0);
    assert!(cf.changed_features.is_empty());
}

fn category_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureSpec::one_hot("a", "cat"),
        FeatureSpec::one_hot("b", "cat"),
        FeatureSpec::continuous("z"),
    ])
    .unwrap()
}

#[test]
fn category_flip_beats_long_move() {
    let s = category_schema();
    let m = LinearSvm::new(vec![-1.0, 1.0, 1.0], 0.0, vec!["a".into(), "b".into(), "z".into()]).unwrap();
    let cf = explain(&m, &s, &Statistics::default(), CounterfactualQuery::new(vec![1.0, 0.0, 0.0]));
    assert_eq!(cf.x_prime, vec![0.0, 1.0, 0.0]);
    assert!(close(cf.objective, 2.0, 1e-9));
    // forbidding the flip forces z = 2
    let cf = explain(&m, &s, &Statistics::default(), CounterfactualQuery::new(vec![1.0, 0.0, 0.0]).freeze(0));
    assert_eq!(&cf.x_prime[..2], &[1.0, 0.0]);
    assert!(close(cf.x_prime[2], 2.0, 1e-9));
    assert!(close(cf.objective, 4.0, 1e-9));
}

#[test]
fn frozen_feature_is_untouched() {
    let s = FeatureSchema::new(vec![
        FeatureSpec::continuous("glucose").frozen(),
        FeatureSpec::continuous("bmi"),
        FeatureSpec::continuous("age"),
    ])
    .unwrap();
    let m = LinearSvm::new(vec![0.7, 0.3, 0.2], -2.0, vec!["glucose".into(), "bmi".into(), "age".into()]).unwrap();
    let x = vec![5.3, 4.0, 1.0];
    let cf = explain(&m, &s, &Statistics::default(), CounterfactualQuery::new(x.clone()));
    assert_eq!(cf.delta[0], 0.0);
    assert_eq!(cf.x_prime[0], x[0]);
    assert!(cf.valid);
    assert!(cf.changed_features.iter().all(|c| c.name != "glucose"));
}

#[test]
fn freezing_everything_or_unreachable_margin_errors() {
    let s = FeatureSchema::new(vec![FeatureSpec::continuous("a").frozen()]).unwrap();
    let m = LinearSvm::new(vec![1.0], 0.0, vec!["a".into()]).unwrap();
    let err = Explainer::new(&m, &s, &Statistics::default()).unwrap().explain(&CounterfactualQuery::new(vec![-1.0]));
    assert_eq!(err.unwrap_err(), ExplainError::AllFrozen);

    let s = FeatureSchema::new(vec![
        FeatureSpec::continuous("a").frozen(),
        FeatureSpec::continuous("b").with_bounds(0.0, 1.0),
    ])
    .unwrap();
    let m = LinearSvm::new(vec![1.0, 1.0], 0.0, vec!["a".into(), "b".into()]).unwrap();
    let err =
        Explainer::new(&m, &s, &Statistics::default()).unwrap().explain(&CounterfactualQuery::new(vec![-5.0, 0.5]));
    assert_eq!(err.unwrap_err(), ExplainError::MarginUnreachable { target: Label::Positive });
}

fn axis_data() -> Dataset {
    // unit-free covariance diag(4, 1): x1 = +-sqrt(3), x2 = +-sqrt(3)/2
    let (a, b) = (3f64.sqrt(), 3f64.sqrt() / 2.0);
    Dataset::new(
        continuous_schema(&[1.0, 1.0]),
        vec![vec![a, b], vec![-a, b], vec![a, -b], vec![-a, -b]],
        vec![Label::Positive, Label::Negative, Label::Positive, Label::Negative],
    )
    .unwrap()
}

#[test]
fn mahalanobis_cost_of_hand_example() {
    let data = axis_data();
    let cov = CovarianceModel::fit(&data, 0.0).unwrap();
    let s = data.schema().clone();
    let m = model(&[1.0, 1.0], 0.0);
    let stats = Statistics { covariance: Some(cov), ..Statistics::default() };
    let ex = Explainer::new(&m, &s, &stats).unwrap();
    let q = CounterfactualQuery::new(vec![0.0, 0.0]).variant(Variant::Correlated);
    assert!(close(ex.cost_of(&q, &[2.0, 1.0]).unwrap(), 2.0, 1e-12));
}

#[test]
fn correlated_objective_matches_recomputed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let u: f64 = rng.random_range(-1.0..1.0);
            vec![u + 0.05 * rng.random_range(-1.0..1.0), 2.0 * u + 0.05 * rng.random_range(-1.0..1.0)]
        })
        .collect();
    let labels = rows.iter().map(|r| Label::from_decision(r[0] - r[1] + 0.3)).collect();
    let data = Dataset::new(continuous_schema(&[1.0, 2.0]), rows, labels).unwrap();
    let stats = Statistics::fit(&data, Some(0.0)).unwrap();
    let cov = stats.covariance.clone().unwrap();
    let m = model(&[1.0, -1.0], 0.3);
    let ex = Explainer::new(&m, data.schema(), &stats).unwrap();
    let s = cov.inv_sqrt_full();
    for i in 0..20 {
        let q = CounterfactualQuery::new(data.row(i).to_vec()).variant(Variant::Correlated);
        let cf = ex.explain(&q).unwrap();
        assert!(cf.valid);
        let sd = s.mul_vec(&cf.delta);
        let independent = sd[0] * sd[0] * 1.0 + sd[1] * sd[1] * 2.0;
        assert!(close(cf.objective, independent, 1e-8), "{} vs {independent}", cf.objective);
    }
}

#[test]
fn post_hoc_correlation_examples() {
    let data = Dataset::new(
        continuous_schema(&[1.0, 1.0]),
        vec![vec![0.0, 0.0], vec![2.0, 2.0]],
        vec![Label::Negative, Label::Positive],
    )
    .unwrap();
    let cov = CovarianceModel::fit(&data, 0.1).unwrap();
    let out = post_hoc_correlation(&[1.0, 1.0], &[1.0, 0.0], &cov).unwrap();
    assert!(close(out[0] - 1.0, 2.1, 1e-12) && close(out[1] - 1.0, 2.0, 1e-12));
    assert_eq!(post_hoc_correlation(&[1.0, 1.0], &[0.0, 0.0], &cov).unwrap(), vec![1.0, 1.0]);

    let ident = Dataset::new(
        continuous_schema(&[1.0, 1.0]),
        vec![vec![3.0, 3.0], vec![3.0, 3.0]],
        vec![Label::Negative, Label::Positive],
    )
    .unwrap();
    let cov = CovarianceModel::fit(&ident, 1.0).unwrap();
    assert_eq!(post_hoc_correlation(&[1.0, 2.0], &[0.5, -0.25], &cov).unwrap(), vec![1.5, 1.75]);
}

fn one_dim_stats(v_pos: f64) -> (FeatureSchema, LinearSvm, Statistics) {
    let s = continuous_schema(&[1.0]);
    let m = model(&[1.0], 0.0);
    let stats = Statistics {
        prototypes: Some(ClassPrototypes { positive: vec![v_pos], negative: vec![-v_pos] }),
        scales: Some(vec![1.0]),
        ..Statistics::default()
    };
    (s, m, stats)
}

#[test]
fn plausibility_box_examples() {
    let (s, m, stats) = one_dim_stats(2.0);
    let q = CounterfactualQuery::new(vec![-3.0]).variant(Variant::Plausible).epsilon(PlausibilityRadius::Absolute(0.5));
    let cf = explain(&m, &s, &stats, q);
    assert!(close(cf.x_prime[0], 1.5, 1e-9));
    assert!(cf.solver.unwrap().binding.contains(&Binding::PrototypeLower { feature: 0 }));

    let (s, m, stats) = one_dim_stats(0.5);
    let q = CounterfactualQuery::new(vec![-3.0]).variant(Variant::Plausible).epsilon(PlausibilityRadius::Absolute(0.1));
    let err = Explainer::new(&m, &s, &stats).unwrap().explain(&q).unwrap_err();
    assert!(matches!(err, ExplainError::EpsilonTooSmall { .. }), "{err}");
    assert!(err.to_string().starts_with("epsilon too small"));
}

#[test]
fn sparse_examples() {
    let s = continuous_schema(&[1.0, 1.0]);
    let stats = Statistics::default();
    let q = CounterfactualQuery::new(vec![0.0, 0.0]).target(Label::Positive).variant(Variant::Sparse);
    let cf = explain(&model(&[2.0, 1.0], 0.0), &s, &stats, q.clone());
    assert!(close(cf.x_prime[0], 0.5, 1e-9) && cf.x_prime[1] == 0.0, "{:?}", cf.x_prime);
    assert!(close(cf.objective, 0.5, 1e-9));
    assert_eq!(cf.n_changed(), 1);

    let cf = explain(&model(&[1.0, 1.0], 0.0), &s, &stats, q);
    assert!(close(cf.objective, 1.0, 1e-9));
    assert!(cf.delta.iter().all(|&d| d >= -1e-12));
    assert!(close(cf.delta[0] + cf.delta[1], 1.0, 1e-9));

    let cf = explain(
        &model(&[2.0, 1.0], 0.0),
        &s,
        &stats,
        CounterfactualQuery::new(vec![3.0, 0.0]).target(Label::Positive).variant(Variant::Sparse),
    );
    assert_eq!(cf.objective, 0.0);
    assert_eq!(cf.x_prime, vec![3.0, 0.0]);
}

#[test]
fn nearest_support_vector_examples() {
    let s = continuous_schema(&[1.0, 1.0]);
    let rows = vec![vec![1.0, 0.0], vec![5.0, 0.0], vec![-5.0, -5.0]];
    let labels = vec![Label::Positive, Label::Positive, Label::Negative];
    let data = Dataset::new(s, rows, labels).unwrap();
    let m = model(&[0.2, 0.0], 0.0);
    let cf = nearest_support_vector(&m, &data, &[0.0, 0.0], Label::Positive, &[1.0, 1.0], 1e-6).unwrap();
    assert_eq!(cf.x_prime, vec![1.0, 0.0]);
    assert_eq!(cf.method, Method::NearestSupportVector);

    let rows = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-5.0, -5.0]];
    let labels = vec![Label::Positive, Label::Positive, Label::Negative];
    let data = Dataset::new(continuous_schema(&[1.0, 1.0]), rows, labels).unwrap();
    let m = model(&[0.25, 0.25], 0.5);
    let cf = nearest_support_vector(&m, &data, &[0.0, 0.0], Label::Positive, &[100.0, 1.0], 1e-6).unwrap();
    assert_eq!(cf.x_prime, vec![0.0, 2.0]);
    assert_eq!(cf.objective, 4.0);

    let err = nearest_support_vector(&m, &data, &[0.0, 0.0], Label::Negative, &[1.0, 1.0], 1e-6).unwrap_err();
    assert_eq!(err, ExplainError::NoSupportVectors(Label::Negative));
}

#[test]
fn stability_examples() {
    let m = model(&[3.0, 4.0], 0.0);
    assert!(close(stability_radius(&m, &[0.6, 0.8]).unwrap(), 1.0, 1e-15));
    assert_eq!(stability_radius(&m, &[4.0, -3.0]).unwrap(), 0.0);

    let s = continuous_schema(&[1.0, 1.0]);
    // x' exactly on the margin: radius 1/||w||
    let xp = [0.12, 0.16];
    let r = stability_radius(&m, &xp).unwrap();
    assert!(close(r, 0.2, 1e-12));
    assert_eq!(verify_stability(&m, &s, &xp, 0.0, 100, 1).unwrap().fraction(), 1.0);
    assert_eq!(verify_stability(&m, &s, &xp, 0.999 * r, 1000, 1).unwrap().fraction(), 1.0);
    let wide = verify_stability(&m, &s, &xp, 10.0 * r, 1000, 1).unwrap();
    assert!(wide.fraction() < 1.0);
    assert_eq!(wide, verify_stability(&m, &s, &xp, 10.0 * r, 1000, 1).unwrap());
    assert!(verify_stability(&m, &s, &xp, -1.0, 10, 1).is_err());
}

#[test]
fn explanations_meet_stability_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let shape = InstanceShape { n_continuous: rng.random_range(1..5), groups: vec![3], random_weights: true };
        let inst = random_instance(&mut rng, &shape);
        let cf = explain(&inst.model, &inst.schema, &Statistics::default(), CounterfactualQuery::new(inst.x.clone()));
        assert!(cf.valid);
        assert!(cf.stability_radius >= 1.0 / inst.model.weight_norm() - 1e-9);
        let rep =
            verify_stability(&inst.model, &inst.schema, &cf.x_prime, 0.999 * cf.stability_radius, 200, 3).unwrap();
        assert_eq!(rep.fraction(), 1.0);
    }
}

#[test]
fn explain_matches_brute_force_with_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..60 {
        let shape = InstanceShape { n_continuous: 2, groups: vec![3, 4, 2], random_weights: true };
        let inst = random_instance(&mut rng, &shape);
        let stats = Statistics::default();
        let ex = Explainer::new(&inst.model, &inst.schema, &stats).unwrap();
        let q = CounterfactualQuery::new(inst.x.clone());
        let cf = ex.explain(&q).unwrap();
        let p = ex.build_problem(&q).unwrap();
        let oracle = brute_force_mip(&p.program, ex.solver()).unwrap();
        assert!(close(cf.objective, oracle.objective, 1e-6), "{} vs {}", cf.objective, oracle.objective);
        for g in inst.schema.groups() {
            assert_eq!(g.members.iter().map(|&m| cf.x_prime[m]).sum::<f64>(), 1.0);
        }
    }
}

#[test]
fn protected_schema_flags_survive() {
    let s = FeatureSchema::new(vec![FeatureSpec::continuous("a"), FeatureSpec::continuous("b").protected()]).unwrap();
    assert!(s.feature(1).protected);
}

fn random_continuous(seed: u64, n: usize) -> (Vec<f64>, f64, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let b = rng.random_range(-1.0..1.0);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    (w, b, weights, x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plain_matches_projection(seed in any::<u64>(), n in 1usize..8) {
        let (w, b, weights, x) = random_continuous(seed, n);
        let m = model(&w, b);
        let s = continuous_schema(&weights);
        let cf = explain(&m, &s, &Statistics::default(), CounterfactualQuery::new(x.clone()));
        let (xp, obj) = projection(&w, b, &weights, &x, cf.target.sign());
        prop_assert!(close(cf.objective, obj, 1e-6), "{} vs {}", cf.objective, obj);
        for (a, o) in cf.x_prime.iter().zip(&xp) {
            prop_assert!((a - o).abs() < 1e-6);
        }
    }

    #[test]
    fn heavier_weight_never_moves_more(seed in any::<u64>(), n in 1usize..6, i in 0usize..6) {
        let (w, b, mut weights, x) = random_continuous(seed, n);
        let i = i % n;
        let m = model(&w, b);
        let mut last = f64::INFINITY;
        for k in [0.1, 0.5, 1.0, 3.0, 10.0, 100.0] {
            weights[i] = k;
            let cf = explain(&m, &continuous_schema(&weights), &Statistics::default(), CounterfactualQuery::new(x.clone()));
            prop_assert!(cf.delta[i].abs() <= last + 1e-9);
            last = cf.delta[i].abs();
        }
    }

    #[test]
    fn frozen_equals_removed(seed in any::<u64>(), n in 2usize..7, i in 0usize..7) {
        let (w, b, weights, x) = random_continuous(seed, n);
        let i = i % n;
        let full = explain(&model(&w, b), &continuous_schema(&weights), &Statistics::default(),
            CounterfactualQuery::new(x.clone()).freeze(i));
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let w_r: Vec<f64> = keep.iter().map(|&j| w[j]).collect();
        let weights_r: Vec<f64> = keep.iter().map(|&j| weights[j]).collect();
        let x_r: Vec<f64> = keep.iter().map(|&j| x[j]).collect();
        let reduced_model = model(&w_r, b + w[i] * x[i]);
        let reduced = Explainer::new(&reduced_model, &continuous_schema(&weights_r), &Statistics::default())
            .unwrap()
            .explain(&CounterfactualQuery::new(x_r).target(full.target));
        match reduced {
            Ok(r) => {
                prop_assert!((full.objective - r.objective).abs() <= 1e-9 * (1.0 + r.objective));
                prop_assert_eq!(full.delta[i], 0.0);
            }
            Err(e) => prop_assert!(false, "reduced failed: {}", e),
        }
    }

    #[test]
    fn identity_covariance_matches_plain(seed in any::<u64>(), n in 1usize..6) {
        let (w, b, weights, x) = random_continuous(seed, n);
        let s = continuous_schema(&weights);
        let copies = Dataset::new(s.clone(), vec![vec![0.5; n]; 3], vec![Label::Positive, Label::Negative, Label::Positive]).unwrap();
        let stats = Statistics { covariance: Some(CovarianceModel::fit(&copies, 1.0).unwrap()), ..Statistics::default() };
        let m = model(&w, b);
        let ex = Explainer::new(&m, &s, &stats).unwrap();
        let plain = ex.explain(&CounterfactualQuery::new(x.clone())).unwrap();
        let corr = ex.explain(&CounterfactualQuery::new(x.clone()).variant(Variant::Correlated)).unwrap();
        prop_assert!((plain.objective - corr.objective).abs() <= 1e-8);
    }

    #[test]
    fn sparse_changes_fewer_features(seed in any::<u64>(), n in 1usize..8) {
        let (w, b, weights, x) = random_continuous(seed, n);
        let m = model(&w, b);
        let s = continuous_schema(&weights);
        let stats = Statistics::default();
        let ex = Explainer::new(&m, &s, &stats).unwrap();
        let q = CounterfactualQuery::new(x.clone());
        let plain = ex.explain(&q).unwrap();
        let sparse = ex.explain_as(&q, Variant::Sparse).unwrap();
        prop_assert!(sparse.valid);
        prop_assert!(sparse.n_changed() <= plain.n_changed());
        // L1 oracle: move only the feature with the best leverage per unit cost
        let dec: f64 = w.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>() + b;
        let shortfall = (1.0 - sparse.target.sign() * dec).max(0.0);
        let best = (0..n).filter(|&j| w[j] != 0.0).map(|j| weights[j] / w[j].abs()).fold(f64::INFINITY, f64::min);
        prop_assert!(close(sparse.objective, shortfall * best, 1e-6), "{} vs {}", sparse.objective, shortfall * best);
    }
}
