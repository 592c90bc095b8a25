//! TOML feature schema.
//!
//! ```toml
//! label = "outcome"
//! delimiter = ","
//!
//! [[feature]]
//! name = "glucose"
//! lower = 40
//! upper = 250
//!
//! [[feature]]
//! name = "age"
//! weight = "inf"
//!
//! [[feature]]
//! name = "race_white"
//! kind = "one_hot"
//! group = "race"
//! protected = true
//! ```

use std::path::Path;

use recourse_core::{FeatureKind, FeatureSchema, FeatureSpec};
use serde::{Deserialize, Serialize};

use super::{read_text, write_text};
use crate::error::CliError;

/// A feature weight: a positive number, or `"inf"` to freeze.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Number(f64),
    Text(WeightText),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightText {
    #[serde(rename = "inf", alias = "Inf", alias = "infinity")]
    Inf,
}

impl WeightValue {
    pub fn value(self) -> f64 {
        match self {
            WeightValue::Number(v) => v,
            WeightValue::Text(WeightText::Inf) => f64::INFINITY,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            WeightValue::Text(WeightText::Inf)
        } else {
            WeightValue::Number(v)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindName {
    #[default]
    Continuous,
    OneHot,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureEntry {
    name: String,
    #[serde(default)]
    kind: KindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<WeightValue>,
    #[serde(default, skip_serializing_if = "is_false")]
    protected: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delimiter: Option<String>,
    #[serde(rename = "feature")]
    features: Vec<FeatureEntry>,
}

/// A parsed schema file.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaConfig {
    pub schema: FeatureSchema,
    /// Name of the label column in the dataset.
    pub label: String,
    pub delimiter: Option<u8>,
}

pub fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter must be a single ASCII character, got `{s}`")),
    }
}

pub fn parse_schema(text: &str, path: &Path) -> Result<SchemaConfig, CliError> {
    let file: SchemaFile = toml::from_str(text).map_err(|e| CliError::parse(path, e.message()))?;
    let mut specs = Vec::with_capacity(file.features.len());
    for f in file.features {
        let mut spec = match (f.kind, f.group) {
            (KindName::Continuous, None) => FeatureSpec::continuous(f.name),
            (KindName::OneHot, Some(g)) => FeatureSpec::one_hot(f.name, g),
            (KindName::Continuous, Some(_)) => {
                return Err(CliError::parse(path, format!("feature `{}`: only one_hot features take a group", f.name)))
            }
            (KindName::OneHot, None) => {
                return Err(CliError::parse(path, format!("feature `{}`: one_hot features need a group", f.name)))
            }
        };
        if let Some(lo) = f.lower {
            spec.lower = lo;
        }
        if let Some(hi) = f.upper {
            spec.upper = hi;
        }
        if let Some(w) = f.weight {
            spec.weight = w.value();
        }
        spec.protected = f.protected;
        specs.push(spec);
    }
    let delimiter = file.delimiter.as_deref().map(parse_delimiter).transpose().map_err(|e| CliError::parse(path, e))?;
    Ok(SchemaConfig { schema: FeatureSchema::new(specs)?, label: file.label, delimiter })
}

pub fn load_schema(path: &Path) -> Result<SchemaConfig, CliError> {
    parse_schema(&read_text(path)?, path)
}

pub fn render_schema(cfg: &SchemaConfig) -> String {
    let features = cfg
        .schema
        .features()
        .iter()
        .map(|f| {
            let (kind, group) = match &f.kind {
                FeatureKind::Continuous => (KindName::Continuous, None),
                FeatureKind::OneHot { group } => (KindName::OneHot, Some(group.clone())),
            };
            let one_hot = kind == KindName::OneHot;
            FeatureEntry {
                name: f.name.clone(),
                kind,
                group,
                lower: (f.lower.is_finite() && !one_hot).then_some(f.lower),
                upper: (f.upper.is_finite() && !one_hot).then_some(f.upper),
                weight: (f.weight != 1.0).then(|| WeightValue::from_f64(f.weight)),
                protected: f.protected,
            }
        })
        .collect();
    let file = SchemaFile {
        label: cfg.label.clone(),
        delimiter: cfg.delimiter.map(|d| if d == b'\t' { "\\t".into() } else { (d as char).to_string() }),
        features,
    };
    toml::to_string(&file).expect("schema serializes")
}

pub fn save_schema(cfg: &SchemaConfig, path: &Path) -> Result<(), CliError> {
    write_text(path, &render_schema(cfg))
}
