//! TOML weight overrides: one `name = weight` entry per feature, where
//! weight is a positive number or `"inf"`.

use std::collections::BTreeMap;
use std::path::Path;

use recourse_core::FeatureSchema;

use super::read_text;
use super::schema::WeightValue;
use crate::error::CliError;

pub fn parse_weights(text: &str, path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let raw: BTreeMap<String, WeightValue> = toml::from_str(text).map_err(|e| CliError::parse(path, e.message()))?;
    Ok(raw.into_iter().map(|(k, v)| (k, v.value())).collect())
}

pub fn load_weights(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    parse_weights(&read_text(path)?, path)
}

/// Schema weights with `overrides` applied.
pub fn apply_overrides(schema: &FeatureSchema, overrides: &BTreeMap<String, f64>) -> Result<Vec<f64>, CliError> {
    let mut w = schema.weights();
    for (name, &v) in overrides {
        let i = schema.index_of(name).ok_or_else(|| CliError::Config(format!("weights: unknown feature `{name}`")))?;
        if !(v > 0.0) {
            return Err(CliError::Config(format!("weights: `{name}` must be positive or \"inf\", got {v}")));
        }
        w[i] = v;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use recourse_core::FeatureSpec;

    #[test]
    fn overrides_apply_by_name() {
        let schema = FeatureSchema::new(vec![FeatureSpec::continuous("a"), FeatureSpec::continuous("b")]).unwrap();
        let o = parse_weights("b = \"inf\"\na = 3\n", Path::new("w.toml")).unwrap();
        assert_eq!(apply_overrides(&schema, &o).unwrap(), vec![3.0, f64::INFINITY]);
        let bad = parse_weights("c = 1\n", Path::new("w.toml")).unwrap();
        assert!(matches!(apply_overrides(&schema, &bad), Err(CliError::Config(_))));
        let neg = parse_weights("a = -1\n", Path::new("w.toml")).unwrap();
        assert!(matches!(apply_overrides(&schema, &neg), Err(CliError::Config(_))));
    }
}
