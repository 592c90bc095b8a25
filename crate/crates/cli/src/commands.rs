//! The subcommands. Each returns its output files in memory; nothing is
//! written until [`write_outputs`], so a failing run leaves no partial
//! reports behind.

use std::path::{Path, PathBuf};

use recourse_core::audit::audit;
use recourse_core::counterfactual::{
    verify_stability, Binding, CounterfactualQuery, Explainer, Method, StabilityReport, Statistics,
};
use recourse_core::evaluate::{benchmark, Outcome, SUPPORT_VECTOR_TOL};
use recourse_core::model::train_svm;
use recourse_core::synth::{bar_passage, diabetes_like, two_gaussians};
use recourse_core::{
    AuditReport, CostReport, Counterfactual, Dataset, EmpiricalDistribution, EvaluateError, ExplainError,
    FeatureSchema, Label, LinearSvm, SolverConfig,
};
use serde_json::{json, Map, Value};

use crate::config::{CommandKind, GeneratorKind, RunConfig};
use crate::error::CliError;
use crate::formats::dataset::{load_dataset, render_dataset, CsvOptions};
use crate::formats::model::{load_model, render_model};
use crate::formats::schema::{load_schema, render_schema, SchemaConfig};
use crate::formats::weights::{apply_overrides, load_weights};
use crate::report::{csv_text, exact, exact_opt, json_text, short, short_opt, table, text_header};

/// Files produced by a command, relative to the output directory, plus a
/// short summary for the terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub files: Vec<(PathBuf, String)>,
    pub summary: String,
}

impl Output {
    fn new(cfg: &RunConfig) -> Self {
        Output { files: vec![("config.json".into(), json_text(&cfg.echo()))], summary: String::new() }
    }

    fn add(&mut self, name: impl Into<PathBuf>, text: String) {
        self.files.push((name.into(), text));
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(p, _)| p == Path::new(name)).map(|(_, t)| t.as_str())
    }
}

pub fn run(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.command {
        CommandKind::Train => cmd_train(cfg),
        CommandKind::Explain => cmd_explain(cfg),
        CommandKind::Bench => cmd_bench(cfg),
        CommandKind::Audit => cmd_audit(cfg),
        CommandKind::Generate => cmd_generate(cfg),
    }
}

/// Writes every file of `output` under `dir`, creating directories.
pub fn write_outputs(dir: &Path, output: &Output) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::with_capacity(output.files.len());
    for (rel, text) in &output.files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Config(format!("missing --{flag}")))
}

struct Inputs {
    schema: SchemaConfig,
    data: Dataset,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs, CliError> {
    let schema = load_schema(require(&cfg.schema, "schema")?)?;
    let opts =
        CsvOptions { delimiter: cfg.delimiter.or(schema.delimiter).unwrap_or(b','), coerce_labels: cfg.coerce_labels };
    let data = load_dataset(require(&cfg.data, "data")?, &schema, opts)?;
    Ok(Inputs { schema, data })
}

fn load_checked_model(cfg: &RunConfig, schema: &FeatureSchema) -> Result<LinearSvm, CliError> {
    let model = load_model(require(&cfg.model, "model")?)?;
    model.check_schema(schema)?;
    Ok(model)
}

fn needs_statistics(method: Method) -> bool {
    !matches!(method, Method::Plain | Method::Sparse | Method::NearestSupportVector)
}

/// Fits statistics only when some method needs them, so a plain run does
/// not fail on data whose covariance cannot be estimated.
fn statistics(cfg: &RunConfig, data: &Dataset, methods: &[Method]) -> Result<Statistics, CliError> {
    if methods.iter().any(|&m| needs_statistics(m)) {
        Ok(Statistics::fit(data, cfg.shrinkage)?)
    } else {
        Ok(Statistics::default())
    }
}

fn solver(cfg: &RunConfig) -> SolverConfig {
    SolverConfig { mip_gap_abs: cfg.mip_gap, ..SolverConfig::default() }
}

fn template(cfg: &RunConfig, schema: &FeatureSchema) -> Result<CounterfactualQuery, CliError> {
    let mut q = CounterfactualQuery::new(Vec::new()).variant(cfg.variant).epsilon(cfg.epsilon);
    if let Some(p) = &cfg.weights {
        q = q.weights(apply_overrides(schema, &load_weights(p)?)?);
    }
    for name in &cfg.freeze {
        let i = schema.index_of(name).ok_or_else(|| CliError::Config(format!("freeze: unknown feature `{name}`")))?;
        q = q.freeze(i);
    }
    q.target = cfg.target;
    Ok(q)
}

/// Explicit `--rows`, else every row (only those not already predicted as
/// the target when `--target` is given).
fn select_rows(cfg: &RunConfig, data: &Dataset, model: &LinearSvm) -> Result<Vec<usize>, CliError> {
    if let Some(rows) = &cfg.rows {
        if let Some(&bad) = rows.iter().find(|&&r| r >= data.len()) {
            return Err(CliError::Config(format!("rows: index {bad} out of range (dataset has {} rows)", data.len())));
        }
        return Ok(rows.clone());
    }
    let mut out = Vec::new();
    for (i, x) in data.rows().enumerate() {
        match cfg.target {
            Some(t) if model.predict(x)? == t => {}
            _ => out.push(i),
        }
    }
    Ok(out)
}

fn weight_json(schema: &FeatureSchema, w: &[f64]) -> Value {
    let mut m = Map::new();
    for (name, &v) in schema.names().zip(w) {
        m.insert(name.into(), if v.is_finite() { json!(v) } else { json!("inf") });
    }
    Value::Object(m)
}

fn binding_name(b: &Binding, schema: &FeatureSchema) -> String {
    match b {
        Binding::Margin => "margin".into(),
        Binding::PrototypeLower { feature } => {
            format!("prototype_lower:{}", schema.feature(*feature).name)
        }
        Binding::PrototypeUpper { feature } => {
            format!("prototype_upper:{}", schema.feature(*feature).name)
        }
    }
}

// ---- train ----

pub fn cmd_train(cfg: &RunConfig) -> Result<Output, CliError> {
    let Inputs { data, .. } = load_inputs(cfg)?;
    let model = train_svm(&data, &cfg.train)?;
    let correct = data.rows().zip(data.labels()).filter(|(x, &y)| model.predict(x).ok() == Some(y)).count();
    let accuracy = correct as f64 / data.len() as f64;
    let n_sv = model.support_vectors(&data, SUPPORT_VECTOR_TOL)?.len();
    let summary = json!({
        "config": cfg.echo(),
        "rows": data.len(),
        "positives": data.count_label(Label::Positive),
        "negatives": data.count_label(Label::Negative),
        "accuracy": accuracy,
        "gamma": model.gamma(),
        "weight_norm": model.weight_norm(),
        "margin_width": model.margin_width(),
        "min_abs_decision": model.min_abs_decision(&data)?,
        "support_vectors": n_sv,
    });
    let mut out = Output::new(cfg);
    out.add("model.json", render_model(&model, Some(summary.clone())));
    out.add("train_summary.json", json_text(&summary));
    out.summary = format!(
        "trained on {} rows: accuracy {}, gamma {}, {} support vectors",
        data.len(),
        short(accuracy),
        short(model.gamma()),
        n_sv
    );
    Ok(out)
}

// ---- explain ----

struct Explained {
    row: usize,
    prediction: Label,
    result: Result<Counterfactual, ExplainError>,
    stability: Option<StabilityReport>,
}

pub fn cmd_explain(cfg: &RunConfig) -> Result<Output, CliError> {
    let Inputs { schema: scfg, data } = load_inputs(cfg)?;
    let schema = &scfg.schema;
    let model = load_checked_model(cfg, schema)?;
    let stats = statistics(cfg, &data, &[cfg.variant.into()])?;
    let ex = Explainer::new(&model, schema, &stats)?.with_solver(solver(cfg));
    let template = template(cfg, schema)?;
    let weights = ex.effective_weights(&template)?;
    let rows = select_rows(cfg, &data, &model)?;
    if rows.is_empty() {
        return Err(CliError::EmptySelection(format!(
            "every row is already predicted {}",
            cfg.target.unwrap_or(Label::Positive)
        )));
    }
    let radius = 0.999 * model.margin_width();

    let mut out = Output::new(cfg);
    let mut results = Vec::with_capacity(rows.len());
    for &row in &rows {
        let mut q = template.clone();
        q.x = data.row(row).to_vec();
        let prediction = model.predict(&q.x)?;
        if cfg.dump_programs {
            let text = match ex.build_problem(&q) {
                Ok(p) => p.program.to_string(),
                Err(e) => format!("# no program: {e}\n"),
            };
            out.add(format!("programs/row_{row}.txt"), text);
        }
        let result = ex.explain(&q);
        let stability = match &result {
            Ok(cf) if cf.valid && cfg.trials > 0 => Some(verify_stability(
                &model,
                schema,
                &cf.x_prime,
                radius,
                cfg.trials,
                cfg.seed.wrapping_add(row as u64),
            )?),
            _ => None,
        };
        results.push(Explained { row, prediction, result, stability });
    }

    out.add("explain.txt", explain_text(cfg, schema, &weights, &results));
    out.add("explain.json", json_text(&explain_json(cfg, schema, &weights, &results, radius)));
    out.add("explain_summary.csv", explain_summary_csv(&results));
    out.add("explain_features.csv", explain_features_csv(schema, &results));
    out.add("explain_plot.csv", explain_plot_csv(cfg, &data, &results));
    let ok = results.iter().filter(|r| r.result.is_ok()).count();
    out.summary = format!("explained {} rows ({} failed) with variant {}", ok, results.len() - ok, cfg.variant);
    Ok(out)
}

fn explain_text(cfg: &RunConfig, schema: &FeatureSchema, weights: &[f64], results: &[Explained]) -> String {
    let mut s = text_header("recourse explain", &cfg.echo());
    s.push_str(&format!("variant: {}\n", cfg.variant));
    let w: Vec<String> = schema
        .names()
        .zip(weights)
        .map(|(n, &v)| format!("{n}={}", if v.is_finite() { short(v) } else { "inf".into() }))
        .collect();
    s.push_str(&format!("weights: {}\n", w.join(" ")));
    s.push_str("frozen features (weight inf) are omitted unless they changed\n");
    for r in results {
        s.push('\n');
        match &r.result {
            Err(e) => s.push_str(&format!("row {}: predicted {}, error[{}] {}\n", r.row, r.prediction, e.class(), e)),
            Ok(cf) => {
                s.push_str(&format!("row {}: predicted {}, target {}\n", r.row, r.prediction, cf.target));
                let mut line = format!(
                    "objective {}  decision {}  valid {}  changed features {}  stability radius {}",
                    short(cf.objective),
                    short(cf.decision_value),
                    if cf.valid { "yes" } else { "no" },
                    cf.n_changed(),
                    short(cf.stability_radius)
                );
                if let Some(st) = &r.stability {
                    line.push_str(&format!("  stable {}/{}", st.retained, st.trials));
                }
                s.push_str(&line);
                s.push('\n');
                let changed = |i: usize| cf.changed_features.iter().any(|c| c.index == i);
                let rows: Vec<Vec<String>> = (0..schema.len())
                    .filter(|&i| weights[i].is_finite() || changed(i))
                    .map(|i| {
                        vec![
                            schema.feature(i).name.clone(),
                            short(cf.x[i]),
                            short(cf.x_prime[i]),
                            if changed(i) { short(cf.delta[i]) } else { String::new() },
                        ]
                    })
                    .collect();
                s.push_str(&table(&["Feature", "Original", "CF", "Change"], &rows));
            }
        }
    }
    s
}

fn explain_json(cfg: &RunConfig, schema: &FeatureSchema, weights: &[f64], results: &[Explained], radius: f64) -> Value {
    let instances: Vec<Value> = results
        .iter()
        .map(|r| match &r.result {
            Err(e) => json!({
                "row": r.row,
                "prediction": r.prediction.as_i8(),
                "status": "error",
                "error_class": e.class(),
                "message": e.to_string(),
            }),
            Ok(cf) => json!({
                "row": r.row,
                "prediction": r.prediction.as_i8(),
                "status": "ok",
                "method": cf.method.as_str(),
                "target": cf.target.as_i8(),
                "objective": cf.objective,
                "decision_value": cf.decision_value,
                "valid": cf.valid,
                "stability_radius": cf.stability_radius,
                "stability": r.stability.as_ref().map(|s| json!({
                    "radius": s.radius, "trials": s.trials, "retained": s.retained, "fraction": s.fraction(),
                })),
                "n_changed": cf.n_changed(),
                "changed": cf.changed_features.iter().map(|c| json!({
                    "feature": c.name, "original": c.original, "counterfactual": c.counterfactual, "delta": c.delta(),
                })).collect::<Vec<_>>(),
                "x": cf.x,
                "x_prime": cf.x_prime,
                "solver": cf.solver.as_ref().map(|st| json!({
                    "status": st.status.as_str(),
                    "nodes_explored": st.nodes_explored,
                    "gap": st.gap,
                    "binding": st.binding.iter().map(|b| binding_name(b, schema)).collect::<Vec<_>>(),
                })),
            }),
        })
        .collect();
    json!({
        "config": cfg.echo(),
        "variant": cfg.variant.as_str(),
        "weights": weight_json(schema, weights),
        "features": schema.names().collect::<Vec<_>>(),
        "stability_check_radius": radius,
        "instances": instances,
    })
}

fn explain_summary_csv(results: &[Explained]) -> String {
    let header = [
        "row",
        "prediction",
        "status",
        "error_class",
        "target",
        "objective",
        "decision_value",
        "valid",
        "n_changed",
        "stability_radius",
        "stable_fraction",
    ];
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let mut v = vec![r.row.to_string(), r.prediction.as_i8().to_string()];
            match &r.result {
                Err(e) => {
                    v.extend(["error".into(), e.class().into()]);
                    v.extend(std::iter::repeat_n(String::new(), 7));
                }
                Ok(cf) => v.extend([
                    "ok".into(),
                    String::new(),
                    cf.target.as_i8().to_string(),
                    exact(cf.objective),
                    exact(cf.decision_value),
                    cf.valid.to_string(),
                    cf.n_changed().to_string(),
                    exact(cf.stability_radius),
                    exact_opt(r.stability.as_ref().map(StabilityReport::fraction)),
                ]),
            }
            v
        })
        .collect();
    csv_text(&header, &rows)
}

fn explain_features_csv(schema: &FeatureSchema, results: &[Explained]) -> String {
    let mut rows = Vec::new();
    for r in results {
        if let Ok(cf) = &r.result {
            for i in 0..schema.len() {
                let changed = cf.changed_features.iter().any(|c| c.index == i);
                rows.push(vec![
                    r.row.to_string(),
                    schema.feature(i).name.clone(),
                    exact(cf.x[i]),
                    exact(cf.x_prime[i]),
                    exact(cf.delta[i]),
                    changed.to_string(),
                ]);
            }
        }
    }
    csv_text(&["row", "feature", "original", "counterfactual", "delta", "changed"], &rows)
}

/// One row per instance: original point, counterfactual and status, for
/// scatter plots of points and their counterfactuals.
fn explain_plot_csv(cfg: &RunConfig, data: &Dataset, results: &[Explained]) -> String {
    let names: Vec<&str> = data.schema().names().collect();
    let mut header: Vec<String> = ["instance", "method", "label", "prediction", "status"].map(String::from).to_vec();
    header.extend(names.iter().map(|n| n.to_string()));
    header.extend(names.iter().map(|n| format!("cf_{n}")));
    header.extend(["objective", "decision_value", "valid"].map(String::from));
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let x = data.row(r.row);
            let mut v = vec![
                r.row.to_string(),
                cfg.variant.as_str().into(),
                data.label(r.row).as_i8().to_string(),
                r.prediction.as_i8().to_string(),
            ];
            match &r.result {
                Ok(cf) => {
                    v.push("ok".into());
                    v.extend(x.iter().map(|&a| exact(a)));
                    v.extend(cf.x_prime.iter().map(|&a| exact(a)));
                    v.extend([exact(cf.objective), exact(cf.decision_value), cf.valid.to_string()]);
                }
                Err(e) => {
                    v.push(e.class().into());
                    v.extend(x.iter().map(|&a| exact(a)));
                    v.extend(std::iter::repeat_n(String::new(), x.len() + 3));
                }
            }
            v
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_text(&header, &rows)
}

// ---- bench ----

pub fn cmd_bench(cfg: &RunConfig) -> Result<Output, CliError> {
    let Inputs { schema: scfg, data } = load_inputs(cfg)?;
    let schema = &scfg.schema;
    let model = load_checked_model(cfg, schema)?;
    let stats = statistics(cfg, &data, &cfg.methods)?;
    let ex = Explainer::new(&model, schema, &stats)?.with_solver(solver(cfg));
    let template = template(cfg, schema)?;
    let cohort = select_rows(cfg, &data, &model)?;
    if cohort.is_empty() {
        return Err(EvaluateError::EmptyCohort.into());
    }
    let dist = EmpiricalDistribution::fit(&data);
    let report = benchmark(&ex, &data, &dist, &cohort, &cfg.methods, &template, cfg.f3_class_only)?;

    let mut out = Output::new(cfg);
    out.add("bench.txt", bench_text(cfg, &report, cohort.len()));
    out.add("bench.json", json_text(&bench_json(cfg, &report)));
    out.add("bench_summary.csv", bench_summary_csv(&report));
    out.add("bench_plot.csv", bench_plot_csv(&report));
    out.summary = format!("benchmarked {} methods on {} rows", cfg.methods.len(), cohort.len());
    Ok(out)
}

fn bench_rows(report: &CostReport) -> Vec<Vec<String>> {
    report
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.method.as_str().into(),
                short_opt(s.mean_f1),
                short_opt(s.mean_f2),
                short_opt(s.mean_f3),
                short_opt(s.mean_categorical_changes),
                short_opt(s.mean_continuous_changes),
                s.successes.to_string(),
                s.invalid.to_string(),
                s.failures.to_string(),
            ]
        })
        .collect()
}

fn bench_text(cfg: &RunConfig, report: &CostReport, n: usize) -> String {
    let mut s = text_header("recourse bench", &cfg.echo());
    s.push_str(&format!(
        "{n} instances; means over successful counterfactuals only; f3 reference: {}\n\n",
        if report.class_filtered_f3 { "target-class rows" } else { "all rows" }
    ));
    s.push_str(&table(
        &["Method", "f1", "f2", "f3", "cat. changes", "cont. changes", "ok", "invalid", "failed"],
        &bench_rows(report),
    ));
    s
}

fn outcome_fields(o: &Outcome) -> (&'static str, Option<&recourse_core::evaluate::Costs>, &str) {
    match o {
        Outcome::Success(c) => ("ok", Some(c), ""),
        Outcome::Invalid(c) => ("invalid", Some(c), ""),
        Outcome::Failure { class, .. } => ("failed", None, class),
    }
}

fn bench_json(cfg: &RunConfig, report: &CostReport) -> Value {
    let summaries: Vec<Value> = report
        .summaries
        .iter()
        .map(|s| {
            json!({
                "method": s.method.as_str(),
                "successes": s.successes, "invalid": s.invalid, "failures": s.failures,
                "mean_f1": s.mean_f1, "mean_f2": s.mean_f2, "mean_f3": s.mean_f3,
                "mean_categorical_changes": s.mean_categorical_changes,
                "mean_continuous_changes": s.mean_continuous_changes,
            })
        })
        .collect();
    let records: Vec<Value> = report
        .records
        .iter()
        .map(|r| {
            let mut v = json!({ "instance": r.instance, "method": r.method.as_str() });
            match &r.outcome {
                Outcome::Success(c) | Outcome::Invalid(c) => {
                    v["status"] = json!(outcome_fields(&r.outcome).0);
                    v["f1"] = json!(c.f1);
                    v["f2"] = json!(c.f2);
                    v["f3"] = json!(c.f3);
                    v["objective"] = json!(c.objective);
                    v["categorical_changes"] = json!(c.categorical_changes);
                    v["continuous_changes"] = json!(c.continuous_changes);
                }
                Outcome::Failure { class, message } => {
                    v["status"] = json!("failed");
                    v["error_class"] = json!(class);
                    v["message"] = json!(message);
                }
            }
            v
        })
        .collect();
    json!({ "config": cfg.echo(), "f3_class_only": report.class_filtered_f3, "summaries": summaries, "records": records })
}

fn bench_summary_csv(report: &CostReport) -> String {
    let rows: Vec<Vec<String>> = report
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.method.as_str().into(),
                s.successes.to_string(),
                s.invalid.to_string(),
                s.failures.to_string(),
                exact_opt(s.mean_f1),
                exact_opt(s.mean_f2),
                exact_opt(s.mean_f3),
                exact_opt(s.mean_categorical_changes),
                exact_opt(s.mean_continuous_changes),
            ]
        })
        .collect();
    csv_text(
        &[
            "method",
            "successes",
            "invalid",
            "failures",
            "mean_f1",
            "mean_f2",
            "mean_f3",
            "mean_categorical_changes",
            "mean_continuous_changes",
        ],
        &rows,
    )
}

/// Exactly one header row and one row per (instance, method).
fn bench_plot_csv(report: &CostReport) -> String {
    let rows: Vec<Vec<String>> = report
        .records
        .iter()
        .map(|r| {
            let (status, costs, class) = outcome_fields(&r.outcome);
            let mut v = vec![r.instance.to_string(), r.method.as_str().into(), status.into()];
            match costs {
                Some(c) => v.extend([
                    exact(c.f1),
                    exact(c.f2),
                    exact(c.f3),
                    exact(c.objective),
                    c.categorical_changes.to_string(),
                    c.continuous_changes.to_string(),
                ]),
                None => v.extend(std::iter::repeat_n(String::new(), 6)),
            }
            v.push(class.into());
            v
        })
        .collect();
    csv_text(
        &[
            "instance",
            "method",
            "status",
            "f1",
            "f2",
            "f3",
            "objective",
            "categorical_changes",
            "continuous_changes",
            "error_class",
        ],
        &rows,
    )
}

// ---- audit ----

pub fn cmd_audit(cfg: &RunConfig) -> Result<Output, CliError> {
    let Inputs { schema: scfg, data } = load_inputs(cfg)?;
    let schema = &scfg.schema;
    let model = load_checked_model(cfg, schema)?;
    let stats = statistics(cfg, &data, &[cfg.variant.into()])?;
    let ex = Explainer::new(&model, schema, &stats)?.with_solver(solver(cfg));
    let template = template(cfg, schema)?;
    let target = cfg.target.unwrap_or(Label::Positive);
    let report = audit(&ex, &data, target, cfg.variant, &template)?;

    let mut out = Output::new(cfg);
    out.add("audit.txt", audit_text(cfg, schema, &report));
    out.add("audit.json", json_text(&audit_json(cfg, schema, &report)));
    out.add("audit.csv", audit_csv(&report));
    out.summary = format!(
        "audited {} rows predicted {}: {} counterfactuals toward {}",
        report.cohort_size,
        target.opposite(),
        report.successes,
        target
    );
    Ok(out)
}

fn protected_names(schema: &FeatureSchema) -> Vec<&str> {
    schema.features().iter().filter(|f| f.protected).map(|f| f.name.as_str()).collect()
}

fn audit_text(cfg: &RunConfig, schema: &FeatureSchema, r: &AuditReport) -> String {
    let mut s = text_header("recourse audit", &cfg.echo());
    let protected = protected_names(schema);
    s.push_str(&format!(
        "cohort: {} rows predicted {}; counterfactuals toward {} with variant {}\n",
        r.cohort_size,
        r.target.opposite(),
        r.target,
        r.variant
    ));
    s.push_str(&format!(
        "protected features are not frozen in this audit: {}\n",
        if protected.is_empty() { "(none)".into() } else { protected.join(", ") }
    ));
    s.push_str(&format!("successful counterfactuals: {} (excluded rows: {})\n\n", r.successes, r.failed_rows.len()));

    s.push_str("Counterfactual mean changes\n");
    let mut rows: Vec<Vec<String>> =
        r.continuous.iter().map(|c| vec![c.name.clone(), String::new(), short(c.mean_delta), String::new()]).collect();
    rows.extend(r.categorical.iter().map(|c| {
        vec![
            c.name.clone(),
            c.group.clone(),
            format!("{}%", short(c.percent)),
            format!("+{} / -{}", c.switched_in, c.switched_out),
        ]
    }));
    s.push_str(&table(&["Feature", "Group", "Mean change", "Switched in/out"], &rows));
    s.push_str("\nAttribution means (linear model, baseline = feature means)\n");
    let rows: Vec<Vec<String>> = r.attribution.iter().map(|a| vec![a.name.clone(), short(a.mean)]).collect();
    s.push_str(&table(&["Feature", "Mean attribution"], &rows));
    s
}

fn audit_json(cfg: &RunConfig, schema: &FeatureSchema, r: &AuditReport) -> Value {
    json!({
        "config": cfg.echo(),
        "target": r.target.as_i8(),
        "variant": r.variant.as_str(),
        "protected_unfrozen": protected_names(schema),
        "thawed": r.thawed,
        "cohort_size": r.cohort_size,
        "successes": r.successes,
        "failed_rows": r.failed_rows,
        "continuous": r.continuous.iter().map(|c| json!({"feature": c.name, "mean_delta": c.mean_delta})).collect::<Vec<_>>(),
        "categorical": r.categorical.iter().map(|c| json!({
            "feature": c.name, "group": c.group, "percent": c.percent,
            "switched_in": c.switched_in, "switched_out": c.switched_out,
        })).collect::<Vec<_>>(),
        "attribution": r.attribution.iter().map(|a| json!({"feature": a.name, "mean": a.mean})).collect::<Vec<_>>(),
    })
}

fn audit_csv(r: &AuditReport) -> String {
    let mut rows: Vec<Vec<String>> = r
        .continuous
        .iter()
        .map(|c| {
            vec![
                "counterfactual".into(),
                c.name.clone(),
                String::new(),
                exact(c.mean_delta),
                String::new(),
                String::new(),
            ]
        })
        .collect();
    rows.extend(r.categorical.iter().map(|c| {
        vec![
            "counterfactual".into(),
            c.name.clone(),
            c.group.clone(),
            exact(c.percent),
            c.switched_in.to_string(),
            c.switched_out.to_string(),
        ]
    }));
    rows.extend(r.attribution.iter().map(|a| {
        vec!["attribution".into(), a.name.clone(), String::new(), exact(a.mean), String::new(), String::new()]
    }));
    csv_text(&["section", "feature", "group", "value", "switched_in", "switched_out"], &rows)
}

// ---- generate ----

pub fn cmd_generate(cfg: &RunConfig) -> Result<Output, CliError> {
    if cfg.size < 2 {
        return Err(CliError::Config(format!("size must be at least 2, got {}", cfg.size)));
    }
    let data = match cfg.generator {
        GeneratorKind::Gaussians => two_gaussians(cfg.size / 2, cfg.separation, cfg.seed),
        GeneratorKind::Bar => bar_passage(cfg.size, cfg.bias, cfg.seed),
        GeneratorKind::Diabetes => diabetes_like(cfg.size, cfg.seed),
    };
    let scfg = SchemaConfig { schema: data.schema().clone(), label: "label".into(), delimiter: None };
    let mut out = Output::new(cfg);
    out.add("data.csv", render_dataset(&data, &scfg));
    out.add("schema.toml", format!("# generated: {}\n{}", cfg.echo(), render_schema(&scfg)));
    out.summary = format!("generated {} rows ({})", data.len(), cfg.generator);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;
    use recourse_core::counterfactual::Variant;

    fn generate(dir: &Path, kind: &str, size: usize) {
        let s = Settings { kind: Some(kind.into()), size: Some(size), out: Some(dir.into()), ..Settings::default() };
        let cfg = RunConfig::resolve(CommandKind::Generate, s, None).unwrap();
        write_outputs(dir, &run(&cfg).unwrap()).unwrap();
    }

    #[test]
    fn generate_train_explain_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        generate(d, "gaussians", 40);
        let base = Settings {
            data: Some(d.join("data.csv")),
            schema: Some(d.join("schema.toml")),
            out: Some(d.into()),
            ..Settings::default()
        };
        let train = RunConfig::resolve(CommandKind::Train, base.clone(), None).unwrap();
        let out = run(&train).unwrap();
        write_outputs(d, &out).unwrap();
        let summary: Value = serde_json::from_str(out.file("train_summary.json").unwrap()).unwrap();
        assert_eq!(summary["accuracy"], json!(1.0));

        let s = Settings { model: Some(d.join("model.json")), rows: Some("0-3".into()), ..base };
        let explain = RunConfig::resolve(CommandKind::Explain, s, None).unwrap();
        let out = run(&explain).unwrap();
        let text = out.file("explain.txt").unwrap();
        assert!(text.contains("Feature"), "{text}");
        assert_eq!(out.file("explain_plot.csv").unwrap().lines().count(), 5);
    }

    #[test]
    fn statistics_only_when_needed() {
        assert!(!needs_statistics(Method::Plain));
        assert!(!needs_statistics(Method::NearestSupportVector));
        assert!(needs_statistics(Method::PostHocCorrelation));
        assert!(needs_statistics(Variant::Plausible.into()));
    }
}
