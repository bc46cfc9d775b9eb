//! Artifact writers: trajectory/table/spectrum CSV and summary JSON.
//! Every file is written to a temporary sibling and renamed into place so
//! no partial artifact survives a failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bjlab::{DecayFit, Peak, StateIndex, Trajectory};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn full_precision(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let mut tmp = PathBuf::from(path);
    tmp.set_extension("tmp");
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::io(format!("cannot move {} into place: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("cannot encode {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, &text)
}

/// Escapes one CSV field per RFC 4180 when it contains a delimiter.
pub fn csv_field(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// Trajectory CSV: provenance comments, then
/// `t,p_s[,p_k{K} per tracked k],p_tot` at full precision.
pub fn trajectory_csv(config: &RunConfig, traj: &Trajectory) -> String {
    let m = traj.params().m();
    let mut out = String::new();
    for line in config.provenance_lines() {
        let _ = writeln!(out, "# {line}");
    }
    let mut header = String::from("t,p_s");
    for &k in &config.tracked_k {
        let _ = write!(header, ",p_k{k}");
    }
    header.push_str(",p_tot");
    let _ = writeln!(out, "{header}");

    for (&t, state) in traj.times().iter().zip(traj.states()) {
        let _ = write!(out, "{}", full_precision(t));
        let _ = write!(out, ",{}", full_precision(state.probability(m, StateIndex::Bright)));
        for &k in &config.tracked_k {
            let _ = write!(
                out,
                ",{}",
                full_precision(state.probability(m, StateIndex::Dark(k)))
            );
        }
        let _ = writeln!(out, ",{}", full_precision(state.total_probability()));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PeakJson {
    pub t: f64,
    pub value: f64,
}

impl From<Peak> for PeakJson {
    fn from(p: Peak) -> Self {
        PeakJson {
            t: p.time,
            value: p.value,
        }
    }
}

/// Fit fields shared by the summary and sweep rows; a failed fit carries
/// the reason instead of numbers.
#[derive(Debug, Clone, Serialize)]
pub struct FitJson {
    pub gamma_fit: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub rms_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

impl FitJson {
    pub fn from_result(fit: &Result<DecayFit, String>) -> Self {
        match fit {
            Ok(f) => FitJson {
                gamma_fit: Some(f.gamma),
                fit_window: Some(f.window),
                rms_residual: Some(f.rms_residual),
                fit_error: None,
            },
            Err(reason) => FitJson {
                gamma_fit: None,
                fit_window: None,
                rms_residual: None,
                fit_error: Some(reason.clone()),
            },
        }
    }
}

/// Single-run summary, `summary.json`.
#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub config: &'a RunConfig,
    pub gamma_theory: f64,
    #[serde(flatten)]
    pub fit: FitJson,
    pub peaks: Vec<PeakJson>,
    pub max_conservation_dev: f64,
    pub runtime_seconds: f64,
}
