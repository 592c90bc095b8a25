//! Seeded synthetic data.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, FeatureSchema, FeatureSpec, Label};
use crate::math::round;
use crate::model::LinearSvm;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Two isotropic unit-variance Gaussians in the plane, centred at
/// `(-separation/2, -separation/2)` (label -1) and `(separation/2,
/// separation/2)` (label +1), `n_per_class` rows each, interleaved.
pub fn two_gaussians(n_per_class: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema =
        FeatureSchema::new(vec![FeatureSpec::continuous("x1"), FeatureSpec::continuous("x2")]).expect("static schema");
    let h = separation / 2.0;
    let mut rows = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for _ in 0..n_per_class {
        for label in [Label::Negative, Label::Positive] {
            let c = label.sign() * h;
            rows.push(vec![c + normal(&mut rng), c + normal(&mut rng)]);
            labels.push(label);
        }
    }
    Dataset::new(schema, rows, labels).expect("generated rows are valid")
}

/// Bar-passage style data: `gpa` in [0, 4], `lsat` in [120, 180], a
/// protected `race_*` one-hot group and a `sex_*` group.
///
/// The label is `+1` (pass) when a noisy score exceeds zero; members of
/// `race_white` get `bias` added to that score, so `bias > 0` plants an
/// advantage for them.
pub fn bar_passage(n: usize, bias: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let races = ["white", "black", "hispanic", "asian"];
    let mut features = vec![
        FeatureSpec::continuous("gpa").with_bounds(0.0, 4.0),
        FeatureSpec::continuous("lsat").with_bounds(120.0, 180.0),
    ];
    for r in races {
        features.push(FeatureSpec::one_hot(format!("race_{r}"), "race").protected());
    }
    features.push(FeatureSpec::one_hot("sex_female", "sex"));
    features.push(FeatureSpec::one_hot("sex_male", "sex"));
    let schema = FeatureSchema::new(features).expect("static schema");

    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let race = match rng.random::<f64>() {
            u if u < 0.6 => 0,
            u if u < 0.75 => 1,
            u if u < 0.9 => 2,
            _ => 3,
        };
        let female = rng.random_bool(0.5);
        let gpa = (3.2 + 0.4 * normal(&mut rng)).clamp(0.0, 4.0);
        let lsat = (155.0 + 7.0 * normal(&mut rng)).clamp(120.0, 180.0);
        let mut row = vec![gpa, lsat, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        row[2 + race] = 1.0;
        row[if female { 6 } else { 7 }] = 1.0;
        let advantage = if race == 0 { bias } else { 0.0 };
        let score = 1.5 * (gpa - 3.2) / 0.4 + 1.5 * (lsat - 155.0) / 7.0 + advantage + 0.5 + 0.5 * normal(&mut rng);
        rows.push(row);
        labels.push(Label::from_decision(score));
    }
    Dataset::new(schema, rows, labels).expect("generated rows are valid")
}

/// Diabetes screening style data with eight continuous features. `glucose`
/// and `bmi` drive the label (+1 = diabetic); the remaining features are
/// frozen in the schema.
pub fn diabetes_like(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = |name: &str, lo: f64, hi: f64, actionable: bool| {
        let f = FeatureSpec::continuous(name).with_bounds(lo, hi);
        if actionable {
            f
        } else {
            f.frozen()
        }
    };
    let schema = FeatureSchema::new(vec![
        spec("pregnancies", 0.0, 20.0, false),
        spec("glucose", 40.0, 250.0, true),
        spec("blood_pressure", 30.0, 140.0, false),
        spec("skin_thickness", 0.0, 100.0, false),
        spec("insulin", 0.0, 900.0, false),
        spec("bmi", 15.0, 70.0, true),
        spec("pedigree", 0.0, 2.5, false),
        spec("age", 21.0, 90.0, false),
    ])
    .expect("static schema");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut draw = |mean: f64, sd: f64, lo: f64, hi: f64| (mean + sd * normal(&mut rng)).clamp(lo, hi);
        let preg = round(draw(3.8, 3.0, 0.0, 20.0));
        let glucose = draw(120.0, 30.0, 40.0, 250.0);
        let bp = draw(70.0, 12.0, 30.0, 140.0);
        let skin = draw(25.0, 10.0, 0.0, 100.0);
        let insulin = draw(80.0, 60.0, 0.0, 900.0);
        let bmi = draw(32.0, 7.0, 15.0, 70.0);
        let pedigree = draw(0.47, 0.3, 0.0, 2.5);
        let age = round(draw(33.0, 11.0, 21.0, 90.0));
        let score =
            0.045 * (glucose - 120.0) + 0.09 * (bmi - 32.0) + 0.02 * (age - 33.0) - 0.6 + 0.4 * normal(&mut rng);
        rows.push(vec![preg, glucose, bp, skin, insulin, bmi, pedigree, age]);
        labels.push(Label::from_decision(score));
    }
    Dataset::new(schema, rows, labels).expect("generated rows are valid")
}

/// Shape of a [`random_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceShape {
    pub n_continuous: usize,
    /// Size of each one-hot group (each at least 2).
    pub groups: Vec<usize>,
    /// Draw actionability weights from `[0.25, 4]` instead of all ones.
    pub random_weights: bool,
}

/// A random model, schema and query point.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstance {
    pub schema: FeatureSchema,
    pub model: LinearSvm,
    pub x: Vec<f64>,
}

/// Random shape with `1..=max_continuous` continuous features and up to
/// `max_groups` one-hot groups of size 2 to 4, keeping the total at or below
/// `max_features`.
pub fn random_shape<R: Rng>(
    rng: &mut R,
    max_continuous: usize,
    max_groups: usize,
    max_features: usize,
) -> InstanceShape {
    let n_continuous = rng.random_range(1..=max_continuous.max(1));
    let mut groups = Vec::new();
    let mut total = n_continuous;
    for _ in 0..rng.random_range(0..=max_groups) {
        let size = rng.random_range(2..=4);
        if total + size > max_features {
            break;
        }
        total += size;
        groups.push(size);
    }
    InstanceShape { n_continuous, groups, random_weights: true }
}

/// Continuous features come first (unbounded, named `c0, c1, ...`), then the
/// groups (`g0_0, g0_1, ...`). Model weights are standard normal, the
/// intercept is uniform in `[-1, 1]` and continuous coordinates of `x` are
/// standard normal.
pub fn random_instance<R: Rng>(rng: &mut R, shape: &InstanceShape) -> RandomInstance {
    let mut features = Vec::new();
    let weight = |rng: &mut R| if shape.random_weights { rng.random_range(0.25..4.0) } else { 1.0 };
    for i in 0..shape.n_continuous {
        let w = weight(rng);
        features.push(FeatureSpec::continuous(format!("c{i}")).with_weight(w));
    }
    for (g, &size) in shape.groups.iter().enumerate() {
        for s in 0..size {
            let w = weight(rng);
            features.push(FeatureSpec::one_hot(format!("g{g}_{s}"), format!("g{g}")).with_weight(w));
        }
    }
    let schema = FeatureSchema::new(features).expect("generated schema is valid");
    let n = schema.len();
    let names: Vec<String> = schema.names().map(String::from).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let b = rng.random_range(-1.0..1.0);
    let model = LinearSvm::new(w, b, names).expect("nonzero weights");
    let mut x: Vec<f64> = (0..shape.n_continuous).map(|_| rng.sample(StandardNormal)).collect();
    for &size in &shape.groups {
        let on = rng.random_range(0..size);
        x.extend((0..size).map(|s| if s == on { 1.0 } else { 0.0 }));
    }
    RandomInstance { schema, model, x }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seeded() {
        assert_eq!(two_gaussians(20, 4.0, 1), two_gaussians(20, 4.0, 1));
        assert_ne!(two_gaussians(20, 4.0, 1), two_gaussians(20, 4.0, 2));
        assert_eq!(bar_passage(50, 1.0, 3), bar_passage(50, 1.0, 3));
        let d = diabetes_like(200, 0);
        assert!(d.count_label(Label::Positive) > 20 && d.count_label(Label::Negative) > 20);
    }

    #[test]
    fn planted_bias_shifts_pass_rate() {
        let d = bar_passage(2000, 2.0, 5);
        let rate = |race_col: usize| {
            let rows: Vec<usize> = (0..d.len()).filter(|&i| d.row(i)[race_col] == 1.0).collect();
            rows.iter().filter(|&&i| d.label(i) == Label::Positive).count() as f64 / rows.len() as f64
        };
        assert!(rate(2) > rate(3) + 0.1);
    }
}
