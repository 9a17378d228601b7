//! Aggregation of run directories into one report: collects manifests and
//! the headline fit/check artifacts of each pipeline.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::manifest::RunManifest;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub kind: String,
    pub passed: bool,
    pub checks: Vec<(String, bool, String)>,
    /// Headline numbers pulled from the run's fit artifacts, when present.
    pub highlights: serde_json::Map<String, serde_json::Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: Vec<RunSummary>,
    pub all_passed: bool,
    pub missing: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("missing inputs: {0:?}")]
    MissingInputs(Vec<String>),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed artifact {path}: {message}")]
    Malformed { path: String, message: String },
}

const HIGHLIGHT_FILES: &[(&str, &str)] = &[
    ("weyl_fit.json", "weyl"),
    ("gamma_fit.json", "gamma"),
    ("blowup_fit.json", "blowup"),
    ("hum_diagnostics.json", "hum"),
    ("lr_summary.json", "lr"),
    ("kernel_residual.json", "kernel"),
    ("beta_sweep.json", "beta_sweep"),
    ("assembly_info.json", "assembly"),
    ("identity_checks.json", "identities"),
];

pub fn aggregate(dirs: &[PathBuf]) -> Result<AggregateReport, ReportError> {
    let mut missing = Vec::new();
    let mut runs = Vec::new();
    for dir in dirs {
        let manifest_path = dir.join("manifest.json");
        if !manifest_path.exists() {
            missing.push(manifest_path.display().to_string());
            continue;
        }
        let manifest: RunManifest = read_json(&manifest_path)?;
        let mut highlights = serde_json::Map::new();
        for (file, key) in HIGHLIGHT_FILES {
            let path = dir.join(file);
            if path.exists() {
                let value: serde_json::Value = read_json(&path)?;
                highlights.insert((*key).to_string(), value);
            }
        }
        runs.push(RunSummary {
            dir: dir.clone(),
            kind: manifest.kind.clone(),
            passed: manifest.passed,
            checks: manifest
                .checks
                .iter()
                .map(|c| (c.name.clone(), c.passed, c.detail.clone()))
                .collect(),
            highlights,
        });
    }
    if runs.is_empty() {
        return Err(ReportError::MissingInputs(missing));
    }
    let all_passed = missing.is_empty() && runs.iter().all(|r| r.passed);
    Ok(AggregateReport { runs, all_passed, missing })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ReportError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| ReportError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn render_text(report: &AggregateReport) -> String {
    let mut out = String::new();
    out.push_str("experiment aggregate report\n");
    out.push_str("===========================\n\n");
    for run in &report.runs {
        out.push_str(&format!(
            "[{}] {} — {}\n",
            if run.passed { "PASS" } else { "FAIL" },
            run.kind,
            run.dir.display()
        ));
        for (name, ok, detail) in &run.checks {
            out.push_str(&format!(
                "    [{}] {}: {}\n",
                if *ok { "pass" } else { "FAIL" },
                name,
                detail
            ));
        }
        for (key, value) in &run.highlights {
            match key.as_str() {
                "weyl" => {
                    let slope = value.get("slope").and_then(|v| v.as_f64());
                    let expected = value.get("expected").and_then(|v| v.as_f64());
                    if let (Some(sl), Some(ex)) = (slope, expected) {
                        out.push_str(&format!(
                            "    weyl exponent: fitted {sl:.4} vs 2s = {ex:.4}\n"
                        ));
                    }
                }
                "gamma" => {
                    if let Some(g) = value.get("gamma_hat").and_then(|v| v.as_f64()) {
                        let reference = value
                            .get("gamma_reference")
                            .and_then(|v| v.as_f64())
                            .unwrap_or(f64::NAN);
                        out.push_str(&format!(
                            "    minimal-time exponent: fitted {g:.3} vs reference {reference:.3} (exploratory)\n"
                        ));
                    }
                }
                "blowup" => {
                    if let Some(fit) = value.get("fit").and_then(|f| f.as_object()) {
                        if let (Some(sl), Some(r2)) = (
                            fit.get("slope").and_then(|v| v.as_f64()),
                            fit.get("r_squared").and_then(|v| v.as_f64()),
                        ) {
                            out.push_str(&format!(
                                "    observability blow-up: slope {sl:.3} per 1/T, R² = {r2:.4}\n"
                            ));
                        }
                    }
                }
                "lr" => {
                    if let Some(r) = value.get("terminal_ratio").and_then(|v| v.as_f64()) {
                        out.push_str(&format!("    terminal norm ratio: {r:.3e}\n"));
                    }
                }
                _ => {}
            }
        }
        out.push('\n');
    }
    if !report.missing.is_empty() {
        out.push_str("missing inputs:\n");
        for m in &report.missing {
            out.push_str(&format!("    {m}\n"));
        }
    }
    out.push_str(&format!(
        "\noverall: {}\n",
        if report.all_passed { "ALL PASS" } else { "FAILURES PRESENT" }
    ));
    out
}
