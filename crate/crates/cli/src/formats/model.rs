//! JSON model file.
//!
//! ```json
//! { "format_version": 1, "feature_names": ["a", "b"], "weights": [0.5, -1.0],
//!   "intercept": 0.25, "gamma": 3.1, "training": { ... } }
//! ```
//!
//! Floats are written in shortest round-trip form, so save/load is exact.
//! `training` is optional and ignored on load.

use std::path::Path;

use recourse_core::LinearSvm;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{read_text, write_text};
use crate::error::CliError;

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u64,
    feature_names: Vec<String>,
    weights: Vec<f64>,
    intercept: f64,
    gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    training: Option<Value>,
}

pub fn render_model(model: &LinearSvm, training: Option<Value>) -> String {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        feature_names: model.feature_names().to_vec(),
        weights: model.weights().to_vec(),
        intercept: model.intercept(),
        gamma: model.gamma(),
        training,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn parse_model(text: &str, path: &Path) -> Result<LinearSvm, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::parse(path, e))?;
    match value.get("format_version") {
        None => return Err(CliError::parse(path, "missing field `format_version`")),
        Some(v) if v.as_u64() != Some(MODEL_FORMAT_VERSION) => {
            return Err(CliError::FormatVersion {
                path: path.to_path_buf(),
                found: v.to_string(),
                expected: MODEL_FORMAT_VERSION,
            })
        }
        Some(_) => {}
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| CliError::parse(path, e))?;
    if file.feature_names.len() != file.weights.len() {
        return Err(CliError::parse(
            path,
            format!("{} feature names but {} weights", file.feature_names.len(), file.weights.len()),
        ));
    }
    Ok(LinearSvm::with_gamma(file.weights, file.intercept, file.feature_names, file.gamma)?)
}

pub fn load_model(path: &Path) -> Result<LinearSvm, CliError> {
    parse_model(&read_text(path)?, path)
}

pub fn save_model(model: &LinearSvm, training: Option<Value>, path: &Path) -> Result<(), CliError> {
    write_text(path, &render_model(model, training))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> LinearSvm {
        LinearSvm::with_gamma(vec![0.1, -2.0 / 3.0, 1e-300], 1.0 / 7.0, vec!["a".into(), "b".into(), "c".into()], 0.3)
            .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let back = parse_model(&render_model(&m, Some(serde_json::json!({"seed": 3}))), Path::new("m.json")).unwrap();
        assert_eq!(back, m);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
            assert_eq!(m.decision_value(&x).unwrap().to_bits(), back.decision_value(&x).unwrap().to_bits());
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = render_model(&model(), None);
        let cut = &text[..text.len() / 2];
        assert!(matches!(parse_model(cut, Path::new("m.json")), Err(CliError::Parse { .. })));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let text = render_model(&model(), None).replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(parse_model(&text, Path::new("m.json")), Err(CliError::FormatVersion { .. })));
        let text = render_model(&model(), None).replace("\"format_version\": 1,", "");
        assert!(matches!(parse_model(&text, Path::new("m.json")), Err(CliError::Parse { .. })));
    }

    #[test]
    fn inconsistent_lengths_are_rejected() {
        let text = r#"{"format_version":1,"feature_names":["a"],"weights":[1,2],"intercept":0,"gamma":1}"#;
        assert!(matches!(parse_model(text, Path::new("m.json")), Err(CliError::Parse { .. })));
        let text = r#"{"format_version":1,"feature_names":["a"],"weights":[0],"intercept":0,"gamma":1}"#;
        assert!(matches!(parse_model(text, Path::new("m.json")), Err(CliError::Model(_))));
    }
}
