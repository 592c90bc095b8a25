//! Delimited text datasets with a header row.
//!
//! Columns are matched to schema features by name; extra columns are
//! ignored. Labels must be `-1`/`1`, or `0`/`1` when coercion is enabled.

use std::path::Path;

use recourse_core::{Dataset, Label};

use super::schema::SchemaConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// Map label `0` to `-1`.
    pub coerce_labels: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', coerce_labels: false }
    }
}

fn parse_label(raw: &str, coerce: bool) -> Result<Label, String> {
    let v: f64 = raw.trim().parse().map_err(|_| format!("label `{raw}` is not a number"))?;
    match v {
        1.0 => Ok(Label::Positive),
        -1.0 => Ok(Label::Negative),
        0.0 if coerce => Ok(Label::Negative),
        0.0 => Err("label 0 found; labels must be -1/1 (pass --coerce-labels to map 0/1)".into()),
        _ => Err(format!("label `{raw}` must be -1 or 1")),
    }
}

pub fn read_dataset(
    reader: impl std::io::Read,
    cfg: &SchemaConfig,
    opts: CsvOptions,
    path: &Path,
) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(opts.delimiter).has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::parse(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::parse(path, format!("missing column `{name}`")))
    };
    let cols = cfg.schema.names().map(column).collect::<Result<Vec<_>, _>>()?;
    let label_col = column(&cfg.label)?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::parse(path, e))?;
        let at = |c: usize| record.get(c).unwrap_or("");
        let mut row = Vec::with_capacity(cols.len());
        for (&c, name) in cols.iter().zip(cfg.schema.names()) {
            let raw = at(c);
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| CliError::parse(path, format!("row {i}, column `{name}`: `{raw}` is not a number")))?;
            row.push(v);
        }
        rows.push(row);
        labels.push(
            parse_label(at(label_col), opts.coerce_labels)
                .map_err(|m| CliError::parse(path, format!("row {i}: {m}")))?,
        );
    }
    Ok(Dataset::new(cfg.schema.clone(), rows, labels)?)
}

pub fn load_dataset(path: &Path, cfg: &SchemaConfig, opts: CsvOptions) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset(std::io::BufReader::new(file), cfg, opts, path)
}

/// Renders `data` with the schema's feature columns followed by the label
/// column as `-1`/`1`.
pub fn render_dataset(data: &Dataset, cfg: &SchemaConfig) -> String {
    let mut wtr = csv::WriterBuilder::new().delimiter(cfg.delimiter.unwrap_or(b',')).from_writer(Vec::new());
    let mut header: Vec<&str> = cfg.schema.names().collect();
    header.push(&cfg.label);
    wtr.write_record(&header).expect("in-memory write");
    for (row, label) in data.rows().zip(data.labels()) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(label.as_i8().to_string());
        wtr.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn write_dataset(data: &Dataset, cfg: &SchemaConfig, path: &Path) -> Result<(), CliError> {
    super::write_text(path, &render_dataset(data, cfg))
}
