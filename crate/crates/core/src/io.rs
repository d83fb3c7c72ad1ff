//! File formats: dataset CSV ingestion, model persistence, report rendering,
//! and golden pipeline traces.
//!
//! Everything is plain text with deterministic formatting. Floats are written
//! with Rust's shortest round-trip formatting, so model files are diffable
//! and reload bit-exactly (asserted on every save).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{CalibrationDataset, CalibrationSample};
use crate::error::{Error, Result};
use crate::metrics::{ErrorCurve, LinearityReport};
use crate::model::{ExpansionSpec, FlannModel, Normalizer};
use crate::pipeline::PipelineTrace;
use crate::training::TrainingTrace;

/// Required header of a dataset file.
pub const DATASET_HEADER: &str = "displacement_mm,voltage_v";
/// Version written into model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Parse the two-column dataset format. Line numbers in errors are 1-based.
pub fn parse_dataset_str(text: &str) -> Result<CalibrationDataset> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == DATASET_HEADER => {}
        Some((_, header)) => {
            return Err(Error::DatasetParse {
                line: 1,
                message: format!("expected header {DATASET_HEADER:?}, got {header:?}"),
            })
        }
        None => {
            return Err(Error::DatasetParse {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut samples = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => {
                return Err(Error::DatasetParse {
                    line,
                    message: format!("expected two comma-separated fields, got {row:?}"),
                })
            }
        };
        let displacement = a.parse::<f64>().map_err(|_| Error::DatasetParse {
            line,
            message: format!("bad displacement {a:?}"),
        })?;
        let voltage = b.parse::<f64>().map_err(|_| Error::DatasetParse {
            line,
            message: format!("bad voltage {b:?}"),
        })?;
        let sample =
            CalibrationSample::new(displacement, voltage).map_err(|e| Error::DatasetParse {
                line,
                message: e.to_string(),
            })?;
        samples.push(sample);
    }
    CalibrationDataset::new(samples).map_err(|e| Error::DatasetParse {
        line: 1,
        message: e.to_string(),
    })
}

pub fn load_dataset(path: &Path) -> Result<CalibrationDataset> {
    parse_dataset_str(&fs::read_to_string(path)?)
}

pub fn render_dataset(dataset: &CalibrationDataset) -> String {
    let mut out = String::from(DATASET_HEADER);
    out.push('\n');
    for s in dataset.iter() {
        out.push_str(&format!("{},{}\n", s.displacement_mm(), s.voltage_v()));
    }
    out
}

/// Training metadata carried alongside the weights in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub eta: f64,
    pub mse_threshold: f64,
    pub shuffle: bool,
    pub rng_seed: u64,
    pub epochs_run: usize,
    pub final_mse: f64,
    pub converged: bool,
}

impl TrainingMeta {
    pub fn from_trace(config: &crate::training::TrainingConfig, trace: &TrainingTrace) -> Self {
        Self {
            eta: config.eta,
            mse_threshold: config.mse_threshold,
            shuffle: config.shuffle,
            rng_seed: config.rng_seed,
            epochs_run: trace.epochs_run,
            final_mse: trace.mse_per_epoch.last().copied().unwrap_or(f64::NAN),
            converged: trace.converged,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    harmonics: usize,
    weights: Vec<f64>,
    input_scale: f64,
    output_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    training: Option<TrainingMeta>,
}

pub fn render_model(model: &FlannModel, training: Option<&TrainingMeta>) -> String {
    let doc = ModelDoc {
        format_version: MODEL_FORMAT_VERSION,
        harmonics: model.spec().harmonics(),
        weights: model.weights().to_vec(),
        input_scale: model.input_norm().scale(),
        output_scale: model.output_norm().scale(),
        training: training.cloned(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model doc serializes");
    text.push('\n');
    text
}

pub fn parse_model_str(text: &str) -> Result<(FlannModel, Option<TrainingMeta>)> {
    let doc: ModelDoc =
        serde_json::from_str(text).map_err(|e| Error::ModelParse(e.to_string()))?;
    if doc.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelParse(format!(
            "unsupported format version {}",
            doc.format_version
        )));
    }
    let spec = ExpansionSpec::new(doc.harmonics).map_err(|e| Error::ModelParse(e.to_string()))?;
    let model = FlannModel::new(
        spec,
        doc.weights,
        Normalizer::new(doc.input_scale).map_err(|e| Error::ModelParse(e.to_string()))?,
        Normalizer::new(doc.output_scale).map_err(|e| Error::ModelParse(e.to_string()))?,
    )
    .map_err(|e| Error::ModelParse(e.to_string()))?;
    Ok((model, doc.training))
}

/// Write a model file and verify it reloads bit-exactly.
pub fn save_model(path: &Path, model: &FlannModel, training: Option<&TrainingMeta>) -> Result<()> {
    let text = render_model(model, training);
    let (reloaded, _) = parse_model_str(&text)?;
    let same = reloaded.weights().len() == model.weights().len()
        && reloaded
            .weights()
            .iter()
            .zip(model.weights())
            .all(|(a, b)| a.to_bits() == b.to_bits())
        && reloaded.input_norm().scale().to_bits() == model.input_norm().scale().to_bits()
        && reloaded.output_norm().scale().to_bits() == model.output_norm().scale().to_bits();
    if !same {
        return Err(Error::ModelParse(
            "model file did not round-trip bit-exactly".into(),
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(FlannModel, Option<TrainingMeta>)> {
    parse_model_str(&fs::read_to_string(path)?)
}

/// Convergence report: one row per epoch.
pub fn render_convergence_report(
    config: &crate::training::TrainingConfig,
    trace: &TrainingTrace,
) -> String {
    let mut out = String::from("# convergence report\n");
    out.push_str(&format!(
        "# eta={} mse_threshold={} shuffle={} rng_seed={} epochs_run={} converged={}\n",
        config.eta,
        config.mse_threshold,
        config.shuffle,
        config.rng_seed,
        trace.epochs_run,
        trace.converged
    ));
    out.push_str("epoch,mse\n");
    for (i, mse) in trace.mse_per_epoch.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, mse));
    }
    out
}

/// Evaluation report: the linearity summary plus per-point residuals.
pub fn render_evaluation_report(report: &LinearityReport, pairs: &[(f64, f64)]) -> String {
    let mut out = String::from("# evaluation report\n");
    out.push_str(&format!(
        "# tolerance_mm={} total_points={} linear_points={} percent_linear={}\n",
        report.tolerance_mm, report.total_points, report.linear_points, report.percent_linear
    ));
    out.push_str("displacement_mm,output_mm,residual_mm,within_tolerance\n");
    for ((truth, output), residual) in pairs.iter().zip(&report.per_point_residuals) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            truth,
            output,
            residual,
            *residual <= report.tolerance_mm
        ));
    }
    out
}

/// One sweep row: a trained width and how it scored.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub harmonics: usize,
    pub width: usize,
    pub percent_linear: f64,
    pub epochs_run: usize,
    pub converged: bool,
    pub final_mse: f64,
}

/// Sweep report: the width table plus a tolerance-sensitivity section.
///
/// `sensitivity` holds, per tolerance, the percent-linear score of each width
/// in the same order as `rows`.
pub fn render_sweep_report(
    config: &crate::training::TrainingConfig,
    tolerance_mm: f64,
    rows: &[SweepRow],
    sensitivity: &[(f64, Vec<f64>)],
) -> String {
    let mut out = String::from("# sweep report\n");
    out.push_str(&format!(
        "# eta={} max_epochs={} mse_threshold={} shuffle={} rng_seed={} tolerance_mm={}\n",
        config.eta,
        config.max_epochs,
        config.mse_threshold,
        config.shuffle,
        config.rng_seed,
        tolerance_mm
    ));
    out.push_str("width,percent_linear,epochs_run,converged,final_mse\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.width, r.percent_linear, r.epochs_run, r.converged, r.final_mse
        ));
    }
    out.push_str("\n# tolerance sensitivity: percent linear per width\n");
    out.push_str("tolerance_mm");
    for r in rows {
        out.push_str(&format!(",P{}", r.width));
    }
    out.push('\n');
    for (tol, percents) in sensitivity {
        out.push_str(&tol.to_string());
        for p in percents {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

/// Pipeline comparison report: per-point reference vs quantized output.
pub fn render_pipeline_report(
    curve: &ErrorCurve,
    reference: &[(f64, f64)],
    candidate: &[(f64, f64)],
) -> String {
    let mut out = String::from("# pipeline comparison report\n");
    out.push_str(&format!(
        "# max_abs_error={} max_abs_interior_error={}\n",
        curve.max_abs_error, curve.max_abs_interior_error
    ));
    out.push_str("displacement_mm,reference_mm,pipeline_mm,error_mm\n");
    for (((k, r), (_, c)), (_, e)) in reference.iter().zip(candidate).zip(&curve.points) {
        out.push_str(&format!("{k},{r},{c},{e}\n"));
    }
    out
}

/// Golden trace file: every intermediate bit pattern of each inference.
pub fn render_trace_records(records: &[(f64, PipelineTrace)]) -> String {
    let join = |qs: &[crate::qfloat::Q18]| {
        qs.iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::from("# pipeline golden trace\n");
    for (key, trace) in records {
        out.push_str(&format!("record {key}\n"));
        out.push_str(&format!("expanded: {}\n", join(&trace.expanded)));
        out.push_str(&format!("products: {}\n", join(&trace.products)));
        out.push_str(&format!("partials: {}\n", join(&trace.partial_sums)));
        out.push_str(&format!("output: {}\n", trace.output));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::lvdt_table1;
    use crate::training::{train_lms, TrainingConfig};

    #[test]
    fn fixture_csv_round_trips() {
        let ds = lvdt_table1();
        let text = render_dataset(&ds);
        let reparsed = parse_dataset_str(&text).unwrap();
        assert_eq!(ds, reparsed);
        assert!(text.starts_with("displacement_mm,voltage_v\n"));
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let text = "displacement_mm,voltage_v\n-30,-5.185\nabc,1.0\n";
        match parse_dataset_str(text) {
            Err(Error::DatasetParse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"), "{message}");
            }
            other => panic!("expected row-numbered parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(matches!(
            parse_dataset_str("displacement,voltage\n1,2\n"),
            Err(Error::DatasetParse { line: 1, .. })
        ));
    }

    #[test]
    fn wrong_field_count_is_rejected() {
        let text = "displacement_mm,voltage_v\n1,2,3\n";
        assert!(matches!(
            parse_dataset_str(text),
            Err(Error::DatasetParse { line: 2, .. })
        ));
    }

    #[test]
    fn model_file_round_trips_bit_exactly() {
        let ds = lvdt_table1();
        let spec = crate::model::ExpansionSpec::new(12).unwrap();
        let config = TrainingConfig::default();
        let (model, trace) = train_lms(&ds, &spec, &config).unwrap();
        let meta = TrainingMeta::from_trace(&config, &trace);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &model, Some(&meta)).unwrap();
        let (reloaded, meta2) = load_model(&path).unwrap();

        assert_eq!(model.weights().len(), reloaded.weights().len());
        for (a, b) in model.weights().iter().zip(reloaded.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(
            model.input_norm().scale().to_bits(),
            reloaded.input_norm().scale().to_bits()
        );
        assert_eq!(meta2.unwrap(), meta);
    }

    #[test]
    fn model_parse_rejects_unknown_version() {
        let text = r#"{"format_version":9,"harmonics":1,"weights":[1,1,1],"input_scale":1.0,"output_scale":1.0}"#;
        assert!(matches!(parse_model_str(text), Err(Error::ModelParse(_))));
    }

    #[test]
    fn reports_carry_selfdescribing_headers() {
        let ds = lvdt_table1();
        let spec = crate::model::ExpansionSpec::new(25).unwrap();
        let config = TrainingConfig::default();
        let (model, trace) = train_lms(&ds, &spec, &config).unwrap();

        let conv = render_convergence_report(&config, &trace);
        assert!(conv.contains("epoch,mse\n"));
        assert_eq!(conv.lines().count(), 3 + trace.epochs_run);

        let pairs = model.forward_batch(&ds).unwrap();
        let lin = crate::metrics::linearity(&pairs, 1.0).unwrap();
        let eval = render_evaluation_report(&lin, &pairs);
        assert!(eval.contains("displacement_mm,output_mm,residual_mm,within_tolerance\n"));
        assert_eq!(eval.lines().count(), 3 + 13);
    }

    #[test]
    fn sweep_report_lists_widths_and_sensitivity() {
        let rows = vec![
            SweepRow {
                harmonics: 5,
                width: 11,
                percent_linear: 38.0,
                epochs_run: 50,
                converged: false,
                final_mse: 0.03,
            },
            SweepRow {
                harmonics: 25,
                width: 51,
                percent_linear: 100.0,
                epochs_run: 31,
                converged: true,
                final_mse: 9e-7,
            },
        ];
        let sens = vec![(0.5, vec![30.0, 100.0]), (2.0, vec![60.0, 100.0])];
        let text = render_sweep_report(&TrainingConfig::default(), 1.0, &rows, &sens);
        assert!(text.contains("width,percent_linear,epochs_run,converged,final_mse\n"));
        assert!(text.contains("tolerance_mm,P11,P51\n"));
        assert!(text.contains("\n11,38,"));
        assert!(text.contains("\n51,100,"));
    }
}
