//! Run configuration: a flat key/value file (TOML syntax) merged with
//! command-line overrides; flags win over file values.

use std::path::Path;

use bjlab::{IntegrationOptions, ModelParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Fully resolved configuration for a single run. Echoed verbatim into
/// every artifact for provenance.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub m: i64,
    pub vbar: f64,
    pub epsilon: f64,
    pub omega_s: f64,
    pub t_final: f64,
    pub dt_max: f64,
    pub sample_stride: usize,
    pub tracked_k: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    pub peak_prominence: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub allow_coarse: bool,
}

impl RunConfig {
    /// Validated model parameters; any violation is a config error.
    pub fn model(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.m, self.vbar, self.epsilon, self.omega_s)
            .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn integration_options(&self) -> IntegrationOptions {
        IntegrationOptions {
            dt_max: self.dt_max,
            sample_stride: self.sample_stride,
            allow_coarse: self.allow_coarse,
            enforce_conservation: true,
        }
    }

    /// Config-level checks that do not need the model to be built.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(CliError::config(format!(
                "t_final must be positive and finite, got {}",
                self.t_final
            )));
        }
        if self.sample_stride == 0 {
            return Err(CliError::config("sample_stride must be at least 1"));
        }
        if !(self.peak_prominence.is_finite() && self.peak_prominence >= 0.0) {
            return Err(CliError::config(format!(
                "peak_prominence must be non-negative, got {}",
                self.peak_prominence
            )));
        }
        if let Some((lo, hi)) = self.fit_window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::config(format!(
                    "fit_window must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        for &k in &self.tracked_k {
            if k.unsigned_abs() as i64 > self.m {
                return Err(CliError::config(format!(
                    "tracked_k contains {k}, outside [-{m}, {m}]",
                    m = self.m
                )));
            }
        }
        Ok(())
    }

    /// Flat `key = value` lines for `#`-prefixed provenance comments;
    /// re-parseable as a config file.
    pub fn provenance_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("m = {}", self.m),
            format!("vbar = {}", self.vbar),
            format!("epsilon = {}", self.epsilon),
            format!("omega_s = {}", self.omega_s),
            format!("t_final = {}", self.t_final),
            format!("dt_max = {}", self.dt_max),
            format!("sample_stride = {}", self.sample_stride),
            format!(
                "tracked_k = [{}]",
                self.tracked_k
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            format!("peak_prominence = {}", self.peak_prominence),
        ];
        if let Some((lo, hi)) = self.fit_window {
            lines.push(format!("fit_window = [{lo}, {hi}]"));
        }
        if self.allow_coarse {
            lines.push("allow_coarse = true".to_string());
        }
        lines
    }
}

/// Partial configuration: every field optional so file values and flag
/// values overlay cleanly.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub m: Option<i64>,
    pub vbar: Option<f64>,
    pub epsilon: Option<f64>,
    pub omega_s: Option<f64>,
    pub t_final: Option<f64>,
    pub dt_max: Option<f64>,
    pub sample_stride: Option<usize>,
    pub tracked_k: Option<Vec<i64>>,
    pub fit_window: Option<(f64, f64)>,
    pub peak_prominence: Option<f64>,
    pub allow_coarse: Option<bool>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))
    }

    /// Overlays `over` on top of `self`; set fields in `over` win.
    pub fn overlaid_with(self, over: PartialConfig) -> PartialConfig {
        PartialConfig {
            m: over.m.or(self.m),
            vbar: over.vbar.or(self.vbar),
            epsilon: over.epsilon.or(self.epsilon),
            omega_s: over.omega_s.or(self.omega_s),
            t_final: over.t_final.or(self.t_final),
            dt_max: over.dt_max.or(self.dt_max),
            sample_stride: over.sample_stride.or(self.sample_stride),
            tracked_k: over.tracked_k.or(self.tracked_k),
            fit_window: over.fit_window.or(self.fit_window),
            peak_prominence: over.peak_prominence.or(self.peak_prominence),
            allow_coarse: over.allow_coarse.or(self.allow_coarse),
        }
    }

    /// Resolves to a full config. `need` lists the fields the command
    /// cannot default (for example sweeps supply their own `m` per row).
    pub fn resolve(self, need: Need) -> Result<RunConfig, CliError> {
        let mut missing = Vec::new();
        let m = match (self.m, need.m) {
            (Some(m), _) => m,
            (None, true) => {
                missing.push("m");
                0
            }
            (None, false) => 0,
        };
        let vbar = match (self.vbar, need.vbar) {
            (Some(v), _) => v,
            (None, true) => {
                missing.push("vbar");
                0.0
            }
            (None, false) => 0.0,
        };
        let epsilon = match self.epsilon {
            Some(e) => e,
            None => {
                missing.push("epsilon");
                1.0
            }
        };
        let t_final = match (self.t_final, need.t_final) {
            (Some(t), _) => t,
            (None, true) => {
                missing.push("t_final");
                1.0
            }
            (None, false) => 1.0,
        };
        if !missing.is_empty() {
            return Err(CliError::config(format!(
                "missing required config field(s): {}",
                missing.join(", ")
            )));
        }
        let tracked_k = if need.tracked_k {
            self.tracked_k.unwrap_or_else(|| vec![0, 1, 2])
        } else {
            Vec::new() // not emitted by this command
        };
        let config = RunConfig {
            m,
            vbar,
            epsilon,
            omega_s: self.omega_s.unwrap_or(0.0),
            t_final,
            dt_max: self.dt_max.unwrap_or(bjlab::DEFAULT_DT_MAX),
            sample_stride: self.sample_stride.unwrap_or(10),
            tracked_k,
            fit_window: self.fit_window,
            peak_prominence: self.peak_prominence.unwrap_or(bjlab::analysis::DEFAULT_PEAK_PROMINENCE),
            allow_coarse: self.allow_coarse.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Which of the overridable fields a command genuinely requires or emits.
#[derive(Debug, Clone, Copy)]
pub struct Need {
    pub m: bool,
    pub vbar: bool,
    pub t_final: bool,
    pub tracked_k: bool,
}

impl Need {
    pub const ALL: Need = Need {
        m: true,
        vbar: true,
        t_final: true,
        tracked_k: true,
    };
}
