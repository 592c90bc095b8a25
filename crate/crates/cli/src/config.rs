//! Run configuration: command-line flags over a TOML config file over
//! built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use recourse_core::counterfactual::{Method, PlausibilityRadius, Variant};
use recourse_core::{Label, TrainConfig};
use serde::{Deserialize, Deserializer};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::formats::read_text;
use crate::formats::schema::parse_delimiter;

/// Seed used when neither flag nor config file sets one.
pub const DEFAULT_SEED: u64 = 7;
/// Stability samples per counterfactual when not configured.
pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Train,
    Explain,
    Bench,
    Audit,
    Generate,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Train => "train",
            CommandKind::Explain => "explain",
            CommandKind::Bench => "bench",
            CommandKind::Audit => "audit",
            CommandKind::Generate => "generate",
        }
    }
}

/// Accepts a string, number or list of strings in config files; lists are
/// joined with commas so every source ends up in flag syntax.
fn flexible<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flex {
        Text(String),
        Int(i64),
        Float(f64),
        List(Vec<Flex>),
    }
    fn text(f: Flex) -> String {
        match f {
            Flex::Text(s) => s,
            Flex::Int(i) => i.to_string(),
            Flex::Float(v) => v.to_string(),
            Flex::List(l) => l.into_iter().map(text).collect::<Vec<_>>().join(","),
        }
    }
    Ok(Option::<Flex>::deserialize(d)?.map(text))
}

/// Every setting as it arrives from one source. Shared by all subcommands.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Dataset file (delimited text with a header row).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Feature schema (TOML).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Model file (JSON) to read.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// plain, correlated, plausible, sparse or sparse_correlated.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub variant: Option<String>,
    /// Plausibility radius: `1.5` (in standard deviations) or `abs:0.3`.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub epsilon: Option<String>,
    /// Covariance shrinkage added to the diagonal.
    #[arg(long)]
    pub shrinkage: Option<f64>,
    /// Weight overrides (TOML, `feature = weight`).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Comma-separated feature names to freeze.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub freeze: Option<String>,
    /// Seed for data generation, training row order and stability sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated benchmark methods.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub methods: Option<String>,
    /// Absolute optimality gap for branch-and-bound.
    #[arg(long)]
    pub mip_gap: Option<f64>,
    /// Stability samples per counterfactual (0 disables the check).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Row selector, e.g. `0,4,10-19` (zero-based data rows).
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub rows: Option<String>,
    /// Desired label, `1` or `-1`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, deserialize_with = "flexible")]
    pub target: Option<String>,
    /// Field delimiter of the dataset; overrides the schema's.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub delimiter: Option<String>,
    /// Map labels 0/1 to -1/+1.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub coerce_labels: Option<bool>,
    /// Write every optimization program as text under `programs/`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dump_programs: Option<bool>,
    /// SVM regularization constant.
    #[arg(long)]
    pub c: Option<f64>,
    /// Iteration cap for the SVM trainer.
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Compare f3 against rows of the target class only.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub f3_class_only: Option<bool>,
    /// Synthetic dataset: gaussians, bar or diabetes.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub kind: Option<String>,
    /// Number of generated rows.
    #[arg(long)]
    pub size: Option<usize>,
    /// Planted advantage for the `bar` generator.
    #[arg(long, allow_hyphen_values = true)]
    pub bias: Option<f64>,
    /// Distance between class means for the `gaussians` generator.
    #[arg(long)]
    pub separation: Option<f64>,
}

impl Settings {
    /// Field-wise `self.or(lower)`.
    pub fn or(self, lower: Settings) -> Settings {
        Settings {
            data: self.data.or(lower.data),
            schema: self.schema.or(lower.schema),
            model: self.model.or(lower.model),
            out: self.out.or(lower.out),
            variant: self.variant.or(lower.variant),
            epsilon: self.epsilon.or(lower.epsilon),
            shrinkage: self.shrinkage.or(lower.shrinkage),
            weights: self.weights.or(lower.weights),
            freeze: self.freeze.or(lower.freeze),
            seed: self.seed.or(lower.seed),
            methods: self.methods.or(lower.methods),
            mip_gap: self.mip_gap.or(lower.mip_gap),
            trials: self.trials.or(lower.trials),
            rows: self.rows.or(lower.rows),
            target: self.target.or(lower.target),
            delimiter: self.delimiter.or(lower.delimiter),
            coerce_labels: self.coerce_labels.or(lower.coerce_labels),
            dump_programs: self.dump_programs.or(lower.dump_programs),
            c: self.c.or(lower.c),
            max_epochs: self.max_epochs.or(lower.max_epochs),
            f3_class_only: self.f3_class_only.or(lower.f3_class_only),
            kind: self.kind.or(lower.kind),
            size: self.size.or(lower.size),
            bias: self.bias.or(lower.bias),
            separation: self.separation.or(lower.separation),
        }
    }

    /// Paths in a config file are relative to the file's directory.
    fn rebase(mut self, base: &Path) -> Settings {
        for p in [&mut self.data, &mut self.schema, &mut self.model, &mut self.out, &mut self.weights] {
            if let Some(path) = p.as_mut() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        self
    }
}

pub fn load_settings(path: &Path) -> Result<Settings, CliError> {
    let s: Settings = toml::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e.message()))?;
    Ok(s.rebase(path.parent().unwrap_or(Path::new(""))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Gaussians,
    Bar,
    Diabetes,
}

impl GeneratorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorKind::Gaussians => "gaussians",
            GeneratorKind::Bar => "bar",
            GeneratorKind::Diabetes => "diabetes",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fully resolved configuration for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub config_file: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    pub weights: Option<PathBuf>,
    pub variant: Variant,
    pub epsilon: PlausibilityRadius,
    /// `None` uses the data-derived default.
    pub shrinkage: Option<f64>,
    pub freeze: Vec<String>,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub mip_gap: f64,
    pub trials: usize,
    pub rows: Option<Vec<usize>>,
    pub target: Option<Label>,
    pub delimiter: Option<u8>,
    pub coerce_labels: bool,
    pub dump_programs: bool,
    pub train: TrainConfig,
    pub f3_class_only: bool,
    pub generator: GeneratorKind,
    pub size: usize,
    pub bias: f64,
    pub separation: f64,
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

pub fn parse_rows(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("rows: cannot parse `{s}` (expected e.g. `0,4,10-19`)"));
    let mut out = Vec::new();
    for part in list(s) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) =
                    (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn parse_target(s: &str) -> Result<Label, CliError> {
    match s.trim() {
        "1" | "+1" | "positive" | "pos" => Ok(Label::Positive),
        "-1" | "negative" | "neg" => Ok(Label::Negative),
        _ => Err(CliError::Config(format!("target: expected 1 or -1, got `{s}`"))),
    }
}

pub fn parse_epsilon(s: &str) -> Result<PlausibilityRadius, CliError> {
    let bad = || CliError::Config(format!("epsilon: expected a positive number or `abs:<number>`, got `{s}`"));
    let (abs, num) = match s.trim().split_once(':') {
        Some(("abs", n)) => (true, n),
        Some(("std", n)) => (false, n),
        Some(_) => return Err(bad()),
        None => (false, s.trim()),
    };
    let v: f64 = num.trim().parse().map_err(|_| bad())?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(bad());
    }
    Ok(if abs { PlausibilityRadius::Absolute(v) } else { PlausibilityRadius::Standardized(v) })
}

fn parse_variant(s: &str) -> Result<Variant, CliError> {
    s.trim().parse::<Variant>().map_err(CliError::from)
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>, CliError> {
    let mut out = Vec::new();
    for m in list(s) {
        let m: Method = m.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("methods: at least one method is required".into()));
    }
    Ok(out)
}

fn parse_generator(s: &str) -> Result<GeneratorKind, CliError> {
    match s.trim() {
        "gaussians" => Ok(GeneratorKind::Gaussians),
        "bar" => Ok(GeneratorKind::Bar),
        "diabetes" => Ok(GeneratorKind::Diabetes),
        _ => Err(CliError::Config(format!("kind: expected gaussians, bar or diabetes, got `{s}`"))),
    }
}

impl RunConfig {
    /// Resolves flags (highest precedence), then the config file at
    /// `config_file`, then defaults.
    pub fn resolve(command: CommandKind, flags: Settings, config_file: Option<&Path>) -> Result<RunConfig, CliError> {
        let file = match config_file {
            Some(p) => load_settings(p)?,
            None => Settings::default(),
        };
        let s = flags.or(file);
        let default_variant = if command == CommandKind::Audit { Variant::Correlated } else { Variant::Plain };
        let defaults = TrainConfig::default();
        let train = TrainConfig {
            c: s.c.unwrap_or(defaults.c),
            max_epochs: s.max_epochs.unwrap_or(defaults.max_epochs),
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            ..defaults
        };
        let mip_gap = s.mip_gap.unwrap_or(recourse_core::SolverConfig::default().mip_gap_abs);
        if !(mip_gap > 0.0 && mip_gap.is_finite()) {
            return Err(CliError::Config(format!("mip-gap must be positive, got {mip_gap}")));
        }
        if let Some(l) = s.shrinkage {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(CliError::Config(format!("shrinkage must be >= 0, got {l}")));
            }
        }
        Ok(RunConfig {
            command,
            config_file: config_file.map(Path::to_path_buf),
            data: s.data,
            schema: s.schema,
            model: s.model,
            out: s.out.unwrap_or_else(|| PathBuf::from("out")),
            weights: s.weights,
            variant: s.variant.as_deref().map(parse_variant).transpose()?.unwrap_or(default_variant),
            epsilon: s.epsilon.as_deref().map(parse_epsilon).transpose()?.unwrap_or_default(),
            shrinkage: s.shrinkage,
            freeze: s.freeze.as_deref().map(|f| list(f).map(String::from).collect()).unwrap_or_default(),
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            methods: s.methods.as_deref().map(parse_methods).transpose()?.unwrap_or_else(|| Method::ALL.to_vec()),
            mip_gap,
            trials: s.trials.unwrap_or(DEFAULT_TRIALS),
            rows: s.rows.as_deref().map(parse_rows).transpose()?,
            target: s.target.as_deref().map(parse_target).transpose()?,
            delimiter: s.delimiter.as_deref().map(parse_delimiter).transpose().map_err(CliError::Config)?,
            coerce_labels: s.coerce_labels.unwrap_or(false),
            dump_programs: s.dump_programs.unwrap_or(false),
            train,
            f3_class_only: s.f3_class_only.unwrap_or(false),
            generator: s.kind.as_deref().map(parse_generator).transpose()?.unwrap_or(GeneratorKind::Gaussians),
            size: s.size.unwrap_or(200),
            bias: s.bias.unwrap_or(2.0),
            separation: s.separation.unwrap_or(4.0),
        })
    }

    /// The settings that matter for this command, as a JSON object with
    /// sorted keys. Echoed into every output.
    pub fn echo(&self) -> Value {
        let path =
            |p: &Option<PathBuf>| p.as_ref().map(|p| Value::String(p.display().to_string())).unwrap_or(Value::Null);
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command.as_str()));
        m.insert("config_file".into(), path(&self.config_file));
        m.insert("out".into(), json!(self.out.display().to_string()));
        m.insert("seed".into(), json!(self.seed));
        if self.command == CommandKind::Generate {
            m.insert("kind".into(), json!(self.generator.as_str()));
            m.insert("size".into(), json!(self.size));
            match self.generator {
                GeneratorKind::Bar => m.insert("bias".into(), json!(self.bias)),
                GeneratorKind::Gaussians => m.insert("separation".into(), json!(self.separation)),
                GeneratorKind::Diabetes => None,
            };
            return Value::Object(m);
        }
        m.insert("data".into(), path(&self.data));
        m.insert("schema".into(), path(&self.schema));
        m.insert("coerce_labels".into(), json!(self.coerce_labels));
        m.insert("delimiter".into(), self.delimiter.map(|d| json!((d as char).to_string())).unwrap_or(Value::Null));
        if self.command == CommandKind::Train {
            m.insert("c".into(), json!(self.train.c));
            m.insert("max_epochs".into(), json!(self.train.max_epochs));
            m.insert("tolerance".into(), json!(self.train.tolerance));
            return Value::Object(m);
        }
        m.insert("model".into(), path(&self.model));
        m.insert("weights".into(), path(&self.weights));
        m.insert("freeze".into(), json!(self.freeze));
        m.insert("epsilon".into(), json!(self.epsilon.to_string()));
        m.insert("shrinkage".into(), self.shrinkage.map(|v| json!(v)).unwrap_or(json!("default")));
        m.insert("mip_gap".into(), json!(self.mip_gap));
        m.insert("target".into(), self.target.map(|t| json!(t.as_i8())).unwrap_or(Value::Null));
        m.insert("dump_programs".into(), json!(self.dump_programs));
        let rows = self.rows.as_ref().map(|r| json!(r)).unwrap_or(json!("all"));
        match self.command {
            CommandKind::Explain => {
                m.insert("rows".into(), rows);
                m.insert("variant".into(), json!(self.variant.as_str()));
                m.insert("trials".into(), json!(self.trials));
            }
            CommandKind::Bench => {
                m.insert("rows".into(), rows);
                m.insert("methods".into(), json!(self.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>()));
                m.insert("f3_class_only".into(), json!(self.f3_class_only));
            }
            CommandKind::Audit => {
                m.insert("variant".into(), json!(self.variant.as_str()));
            }
            CommandKind::Train | CommandKind::Generate => unreachable!(),
        }
        Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors() {
        assert_eq!(parse_rows("3, 0,5-7,6").unwrap(), vec![0, 3, 5, 6, 7]);
        assert!(parse_rows("4-2").is_err());
        assert!(parse_rows("a").is_err());
        assert_eq!(parse_target("-1").unwrap(), Label::Negative);
        assert_eq!(parse_target("+1").unwrap(), Label::Positive);
        assert!(parse_target("0").is_err());
    }

    #[test]
    fn epsilon_forms() {
        assert_eq!(parse_epsilon("2").unwrap(), PlausibilityRadius::Standardized(2.0));
        assert_eq!(parse_epsilon("abs:0.5").unwrap(), PlausibilityRadius::Absolute(0.5));
        for bad in ["0", "-1", "abs:x", "rel:1", "inf"] {
            assert!(parse_epsilon(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn unknown_method_lists_valid_names() {
        let e = parse_methods("plain,dice").unwrap_err();
        assert_eq!(e.class(), "unknown_method");
        assert!(e.to_string().contains("nearest_sv"));
    }

    #[test]
    fn flags_override_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(
            &p,
            "seed = 3\ntrials = 10\nvariant = \"sparse\"\nfreeze = [\"a\", \"b\"]\ntarget = -1\ndata = \"d.csv\"\n",
        )
        .unwrap();
        let flags = Settings { seed: Some(9), ..Settings::default() };
        let cfg = RunConfig::resolve(CommandKind::Explain, flags, Some(&p)).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.variant, Variant::Sparse);
        assert_eq!(cfg.freeze, vec!["a", "b"]);
        assert_eq!(cfg.target, Some(Label::Negative));
        assert_eq!(cfg.data, Some(dir.path().join("d.csv")));
        assert_eq!(cfg.mip_gap, 1e-6);

        let cfg = RunConfig::resolve(CommandKind::Audit, Settings::default(), None).unwrap();
        assert_eq!(cfg.variant, Variant::Correlated);
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "sed = 3\n").unwrap();
        assert!(matches!(
            RunConfig::resolve(CommandKind::Train, Settings::default(), Some(&p)),
            Err(CliError::Parse { .. })
        ));
    }
}
