//! Result artifacts: the summary CSV, the averaged-ROC CSV, and the
//! per-run log.
//!
//! Number formatting uses Rust's shortest round-trip `Display`, so a report
//! loaded back from JSON re-emits byte-identical CSV. The run log carries
//! wall-clock timings and is therefore the one artifact that is not
//! bit-reproducible between runs.

use std::collections::BTreeMap;
use std::path::Path;

use coughsense::error::Result;
use coughsense::evaluation::EvalReport;
use coughsense::io::atomic_write;

/// RFC-4180 field quoting: values containing commas, quotes, or newlines
/// are wrapped in double quotes with embedded quotes doubled.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One line per evaluation row: identifier, the headline candidate's
/// hyperparameters, and the fold-averaged metrics.
pub fn results_csv(report: &EvalReport) -> String {
    let mut out = String::from(
        "id,feature_hyperparameters,classifier_hyperparameters,\
         specificity,sensitivity,accuracy,auc,std_auc\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_field(&row.id),
            csv_field(&row.representative.features.describe()),
            csv_field(&row.representative.classifier.describe()),
            row.mean_specificity,
            row.mean_sensitivity,
            row.mean_accuracy,
            row.mean_auc,
            row.std_auc,
        ));
    }
    out
}

/// Long-format averaged ROC curves: one (row, fpr, tpr) line per grid
/// point, ready for plotting.
pub fn mean_roc_csv(report: &EvalReport) -> String {
    let mut out = String::from("id,fpr,tpr\n");
    for row in &report.rows {
        for &(fpr, tpr) in &row.mean_roc {
            out.push_str(&format!("{},{fpr},{tpr}\n", csv_field(&row.id)));
        }
    }
    out
}

/// Writes the two CSV views of a report into `dir`.
pub fn write_csv_artifacts(report: &EvalReport, dir: &Path) -> Result<()> {
    atomic_write(&dir.join("results.csv"), results_csv(report).as_bytes())?;
    atomic_write(&dir.join("mean_roc.csv"), mean_roc_csv(report).as_bytes())
}

/// Machine-readable record of one command invocation: the resolved
/// configuration after flag/config-file merging, the tool version, and
/// wall-clock timings.
#[derive(serde::Serialize)]
pub struct RunLog<C: serde::Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub config: C,
    pub timings_s: BTreeMap<String, f64>,
}

pub fn write_run_log<C: serde::Serialize>(path: &Path, log: &RunLog<C>) -> Result<()> {
    let json = serde_json::to_string_pretty(log)?;
    atomic_write(path, json.as_bytes())
}
