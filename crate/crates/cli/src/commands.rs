use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thinc_core::ensemble::{fit_weights, read_ensemble, write_ensemble, EvaluationReport};
use thinc_core::explain::{self, OverlayShape};
use thinc_core::ga2m::{read_model, write_model};
use thinc_core::synthgen::generate;
use thinc_core::{
    featurize, read_corpus, read_feature_matrix, read_theory_config, shipped, train, train_theory,
    write_corpus, write_feature_matrix, EnsembleModel, Error, FeatureMatrix, Ga2mModel, Result,
    SimplexSettings, SynthSpec, TheoryConfig, TrainSettings,
};

use crate::manifest::Recorder;
use crate::{Cli, Command, ExplainView, Panel, TheorySource};

/// Prints a line of the human-readable summary; a closed stdout is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub fn run(cli: &Cli) -> Result<()> {
    let manifest = cli.manifest.as_deref();
    match &cli.command {
        Command::Extract {
            corpus,
            source,
            out,
            report,
        } => extract(cli, corpus, source, out, report.as_deref())?.finish(manifest)?,
        Command::Train {
            features,
            source,
            theory_name,
            settings,
            model_out,
        } => train_model(
            cli,
            features,
            source,
            theory_name.as_deref(),
            settings.as_deref(),
            model_out,
        )?
        .finish(manifest)?,
        Command::TuneEnsemble {
            panel,
            fit_split,
            out,
        } => tune(cli, panel, fit_split, out)?.finish(manifest)?,
        Command::Evaluate {
            ensemble,
            panel,
            report_out,
        } => evaluate(cli, ensemble, panel, report_out)?.finish(manifest)?,
        Command::Predict {
            ensemble,
            models,
            features,
            scores_out,
        } => predict(cli, ensemble, models, features, scores_out)?.finish(manifest)?,
        Command::Explain { model, view } => explain_cmd(cli, model, view)?.finish(manifest)?,
        Command::Synth {
            out,
            spec,
            instances,
            positive_rate,
            signal_strength,
        } => synth(
            cli,
            out,
            spec.as_deref(),
            *instances,
            *positive_rate,
            *signal_strength,
        )?
        .finish(manifest)?,
    };
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Resolves `--config` or `--theory`, recording where the config came from.
fn resolve_theory(source: &TheorySource, rec: &mut Recorder) -> Result<Option<TheoryConfig>> {
    match (&source.config, &source.theory) {
        (Some(path), _) => {
            rec.configs.push(path.display().to_string());
            rec.input(path);
            Ok(Some(read_theory_config(path)?))
        }
        (None, Some(name)) => {
            rec.configs.push(format!("builtin:{name}"));
            Ok(Some(shipped::shipped_theory(name)?))
        }
        (None, None) => Ok(None),
    }
}

fn extract(
    cli: &Cli,
    corpus: &Path,
    source: &TheorySource,
    out: &Path,
    report: Option<&Path>,
) -> Result<Recorder> {
    let mut rec = Recorder::new("extract", cli.seed);
    let config = resolve_theory(source, &mut rec)?
        .ok_or_else(|| Error::invalid("config", "pass --config <file> or --theory <name>"))?;
    rec.input(corpus);
    let records = read_corpus(corpus)?;
    let (matrix, summary) = featurize(&records, &config);
    write_feature_matrix(&matrix, out)?;
    rec.output(out);
    if let Some(path) = report {
        write_json(&summary, path)?;
        rec.output(path);
    }
    say!(
        "{}: {} instances x {} features -> {}",
        config.name,
        matrix.n_rows(),
        matrix.n_features(),
        out.display()
    );
    Ok(rec)
}

fn train_model(
    cli: &Cli,
    features: &Path,
    source: &TheorySource,
    theory_name: Option<&str>,
    settings_path: Option<&Path>,
    model_out: &Path,
) -> Result<Recorder> {
    let mut rec = Recorder::new("train", None);
    let config = resolve_theory(source, &mut rec)?;
    let mut settings = match settings_path {
        Some(path) => {
            rec.configs.push(path.display().to_string());
            rec.input(path);
            TrainSettings::from_toml_str(&read_text(path)?)?
        }
        None => TrainSettings::default(),
    };
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    rec.seed = Some(settings.seed);
    rec.settings(&settings)?;
    rec.input(features);
    let matrix = read_feature_matrix(features)?;
    let mut model = match &config {
        Some(config) => train_theory(&matrix, config, &settings)?,
        None => train(&matrix, &settings)?,
    };
    if let Some(name) = theory_name {
        model.theory = name.to_string();
    }
    write_model(&model, model_out)?;
    rec.output(model_out);
    say!(
        "{}: {} mains, {} pairs, train accuracy {:.4} -> {}",
        display_name(&model, model_out),
        model.mains.len(),
        model.pairs.len(),
        model.metrics.train_accuracy,
        model_out.display()
    );
    Ok(rec)
}

fn display_name(model: &Ga2mModel, path: &Path) -> String {
    if model.theory.is_empty() {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    } else {
        model.theory.clone()
    }
}

/// Classifier probabilities for rows shared by every matrix, in the order of
/// the first matrix.
struct Scored {
    names: Vec<String>,
    ids: Vec<String>,
    columns: Vec<Vec<f64>>,
    first: FeatureMatrix,
}

fn score_panel(models: &[PathBuf], features: &[PathBuf], rec: &mut Recorder) -> Result<Scored> {
    if models.len() != features.len() {
        return Err(Error::invalid(
            "features",
            format!(
                "{} models but {} feature matrices",
                models.len(),
                features.len()
            ),
        ));
    }
    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut first: Option<FeatureMatrix> = None;
    for (model_path, matrix_path) in models.iter().zip(features) {
        rec.input(model_path);
        rec.input(matrix_path);
        let model = read_model(model_path)?;
        let matrix = read_feature_matrix(matrix_path)?;
        let matrix = match &first {
            None => {
                if matrix.is_empty() {
                    return Err(Error::invalid(
                        "features",
                        format!("{} has no rows", matrix_path.display()),
                    ));
                }
                first = Some(matrix.clone());
                matrix
            }
            Some(reference) => matrix.aligned_to(&reference.ids()).map_err(|e| {
                Error::invalid(
                    "features",
                    format!(
                        "{} is not row-aligned with {}: {e}",
                        matrix_path.display(),
                        features[0].display()
                    ),
                )
            })?,
        };
        names.push(display_name(&model, model_path));
        columns.push(model.predict_matrix(&matrix)?);
    }
    let mut seen = BTreeSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(Error::invalid(
            "models",
            format!("two classifiers are named `{dup}`"),
        ));
    }
    let first = first.expect("at least one matrix");
    Ok(Scored {
        names,
        ids: first.ids().into_iter().map(str::to_string).collect(),
        columns,
        first,
    })
}

fn read_labels(path: &Path, ids: &[String]) -> Result<Vec<u8>> {
    let source = path.display().to_string();
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| Error::parse(&source, 0, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(&source, 1, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(&source, 1, format!("missing `{name}` column")))
    };
    let (id_col, label_col) = (column("id")?, column("label")?);
    let mut labels = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(&source, line, e.to_string()))?;
        let label = match record.get(label_col) {
            Some("0") => 0,
            Some("1") => 1,
            other => {
                return Err(Error::parse(
                    &source,
                    line,
                    format!("label must be 0 or 1, got {other:?}"),
                ))
            }
        };
        let id = record.get(id_col).unwrap_or_default().to_string();
        if labels.insert(id.clone(), label).is_some() {
            return Err(Error::parse(&source, line, format!("duplicate id `{id}`")));
        }
    }
    ids.iter()
        .map(|id| {
            labels
                .get(id)
                .copied()
                .ok_or_else(|| Error::invalid("labels", format!("no label for `{id}` in {source}")))
        })
        .collect()
}

fn panel_labels(panel: &Panel, scored: &Scored, rec: &mut Recorder) -> Result<Vec<u8>> {
    match &panel.labels {
        Some(path) => {
            rec.input(path);
            read_labels(path, &scored.ids)
        }
        None => scored.first.labels(),
    }
}

fn tune(cli: &Cli, panel: &Panel, fit_split: &str, out: &Path) -> Result<Recorder> {
    let mut rec = Recorder::new("tune-ensemble", cli.seed);
    let scored = score_panel(&panel.models, &panel.features, &mut rec)?;
    let labels = panel_labels(panel, &scored, &mut rec)?;
    let settings = SimplexSettings::default();
    rec.settings(&settings)?;
    let ensemble = fit_weights(
        &scored.names,
        &scored.columns,
        &labels,
        fit_split,
        &settings,
    )?;
    write_ensemble(&ensemble, out)?;
    rec.output(out);
    say!("{:<28} {:>8}", "Classifier", "Weight");
    for (name, w) in ensemble.classifiers.iter().zip(&ensemble.weights) {
        say!("{name:<28} {w:>8.3}");
    }
    if let Some(d) = &ensemble.diagnostics {
        say!(
            "average precision on {}: {:.4} (uniform {:.4})",
            d.fit_split,
            d.average_precision,
            d.uniform_average_precision
        );
    }
    Ok(rec)
}

fn check_ensemble_order(ensemble: &EnsembleModel, names: &[String]) -> Result<()> {
    if ensemble.classifiers != names {
        return Err(Error::invalid(
            "models",
            format!(
                "ensemble expects classifiers {:?}, got {names:?}",
                ensemble.classifiers
            ),
        ));
    }
    Ok(())
}

fn print_report(report: &EvaluationReport) {
    say!(
        "{:<28} {:>8} {:>8} {:>8}",
        "Classifier",
        "F1",
        "AP",
        "Weight"
    );
    for (c, w) in report.classifiers.iter().zip(&report.weights) {
        let ap = c
            .average_precision
            .map_or("-".to_string(), |v| format!("{v:.3}"));
        say!("{:<28} {:>8.3} {:>8} {:>8.3}", c.name, c.f1_positive, ap, w);
    }
    let e = &report.ensemble;
    let ap = e
        .average_precision
        .map_or("-".to_string(), |v| format!("{v:.3}"));
    say!("{:<28} {:>8.3} {:>8}", "ensemble", e.f1_positive, ap);
}

fn evaluate(cli: &Cli, ensemble_path: &Path, panel: &Panel, report_out: &Path) -> Result<Recorder> {
    let mut rec = Recorder::new("evaluate", cli.seed);
    rec.input(ensemble_path);
    let ensemble = read_ensemble(ensemble_path)?;
    let scored = score_panel(&panel.models, &panel.features, &mut rec)?;
    check_ensemble_order(&ensemble, &scored.names)?;
    let labels = panel_labels(panel, &scored, &mut rec)?;
    let report = thinc_core::ensemble::evaluate(&ensemble, &scored.columns, &labels)?;
    write_json(&report, report_out)?;
    rec.output(report_out);
    print_report(&report);
    Ok(rec)
}

fn predict(
    cli: &Cli,
    ensemble_path: &Path,
    models: &[PathBuf],
    features: &[PathBuf],
    scores_out: &Path,
) -> Result<Recorder> {
    let mut rec = Recorder::new("predict", cli.seed);
    rec.input(ensemble_path);
    let ensemble = read_ensemble(ensemble_path)?;
    let scored = score_panel(models, features, &mut rec)?;
    check_ensemble_order(&ensemble, &scored.names)?;
    let scores = ensemble.score_columns(&scored.columns)?;
    let file = File::create(scores_out).map_err(|e| Error::io(scores_out, e))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let io_err = |e: csv::Error| Error::io(scores_out, std::io::Error::other(e));
    let mut header = vec!["id".to_string()];
    header.extend(scored.names.iter().cloned());
    header.extend(["ensemble".to_string(), "prediction".to_string()]);
    writer.write_record(&header).map_err(io_err)?;
    for (i, id) in scored.ids.iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend(scored.columns.iter().map(|c| format!("{:?}", c[i])));
        record.push(format!("{:?}", scores[i]));
        record.push(thinc_core::ensemble::predict_class(scores[i]).to_string());
        writer.write_record(&record).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(scores_out, e))?;
    drop(writer);
    rec.output(scores_out);
    say!("{} rows -> {}", scored.ids.len(), scores_out.display());
    Ok(rec)
}

#[derive(Serialize)]
struct FunctionExport {
    view: explain::FeatureFunctionView,
    overlay: Option<explain::Overlay>,
}

fn explain_cmd(cli: &Cli, model_path: &Path, view: &ExplainView) -> Result<Recorder> {
    let mut rec = Recorder::new("explain", cli.seed);
    rec.input(model_path);
    let model = read_model(model_path)?;
    match view {
        ExplainView::Function {
            feature,
            overlay,
            magnitude,
            out,
        } => {
            let function = explain::export_feature_function(&model, feature)?;
            let overlay = overlay.map(|shape: OverlayShape| {
                explain::hypothesis_overlay(&function, shape, *magnitude)
            });
            if out.extension().is_some_and(|e| e == "csv") {
                let file = File::create(out).map_err(|e| Error::io(out, e))?;
                let mut w = BufWriter::new(file);
                explain::write_view_csv(&function, overlay.as_ref(), &mut w)?;
                w.flush().map_err(|e| Error::io(out, e))?;
            } else {
                write_json(
                    &FunctionExport {
                        view: function,
                        overlay: overlay.clone(),
                    },
                    out,
                )?;
            }
            rec.output(out);
            if let Some(o) = &overlay {
                say!(
                    "{feature} vs {}: agreement {:.3} over {} decisive bins",
                    o.shape,
                    o.agreement,
                    o.decisive_bins
                );
            }
        }
        ExplainView::Local {
            features,
            id,
            top_k,
            out,
        } => {
            rec.input(features);
            let matrix = read_feature_matrix(features)?;
            let report = explain::explain_local(&model, &matrix, id, *top_k)?;
            write_json(&report, out)?;
            rec.output(out);
            say!("{id}: logit {:.4}, proba {:.4}", report.logit, report.proba);
            say!("  {:<40} {:>10.4}", "intercept", report.intercept);
            for t in &report.terms {
                say!("  {:<40} {:>10.4}", t.term, t.contribution);
            }
            if report.remainder != 0.0 {
                say!("  {:<40} {:>10.4}", "(other terms)", report.remainder);
            }
        }
        ExplainView::Global { features, out } => {
            rec.input(features);
            let matrix = read_feature_matrix(features)?;
            let report = explain::explain_global(&model, &matrix, None)?;
            write_json(&report, out)?;
            rec.output(out);
            for t in report.terms.iter().take(10) {
                say!("{:<40} {:>10.4}", t.term, t.importance);
            }
        }
    }
    Ok(rec)
}

fn synth(
    cli: &Cli,
    out: &Path,
    spec_path: Option<&Path>,
    instances: Option<usize>,
    positive_rate: Option<f64>,
    signal_strength: Option<f64>,
) -> Result<Recorder> {
    let mut rec = Recorder::new("synth", None);
    let mut spec = match spec_path {
        Some(path) => {
            rec.configs.push(path.display().to_string());
            rec.input(path);
            SynthSpec::from_toml_str(&read_text(path)?)?
        }
        None => SynthSpec::default(),
    };
    spec.instances = instances.unwrap_or(spec.instances);
    spec.positive_rate = positive_rate.unwrap_or(spec.positive_rate);
    spec.signal_strength = signal_strength.unwrap_or(spec.signal_strength);
    spec.seed = cli.seed.unwrap_or(spec.seed);
    rec.seed = Some(spec.seed);
    rec.settings(&spec)?;
    let records = generate(&spec)?;
    write_corpus(&records, out)?;
    rec.output(out);
    say!("{} instances -> {}", records.len(), out.display());
    Ok(rec)
}
