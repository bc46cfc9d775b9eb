//! The five subcommands: single simulation, the two parameter sweeps, the
//! fit-versus-theory table, and the spectrum dump.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use bjlab::{
    conservation_report, default_fit_window, detect_peaks, fit_exponential, integrate,
    probability_series, solve_spectrum, DecayFit, OdeError, PeakList, StateIndex, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{
    csv_field, full_precision, trajectory_csv, write_atomic, write_json, FitJson, PeakJson,
    Summary,
};
use crate::CliError;

fn map_ode_error(e: OdeError) -> CliError {
    match e {
        OdeError::ConservationViolation { .. } | OdeError::NonFiniteState(_) => {
            CliError::conservation(e.to_string())
        }
        other => CliError::config(other.to_string()),
    }
}

/// Everything a survival-probability run produces.
struct RunAnalysis {
    traj: Trajectory,
    gamma_theory: f64,
    fit: Result<DecayFit, String>,
    peaks: PeakList,
    max_conservation_dev: f64,
}

fn run_survival_analysis(config: &RunConfig) -> Result<RunAnalysis, CliError> {
    let params = config.model()?;
    let traj = integrate(&params, config.t_final, &config.integration_options())
        .map_err(map_ode_error)?;
    let survival = probability_series(&traj, StateIndex::Bright);
    let fit = match config.fit_window {
        Some(window) => Ok(window),
        None => default_fit_window(&survival, config.epsilon).map_err(|e| e.to_string()),
    }
    .and_then(|window| fit_exponential(&survival, window).map_err(|e| e.to_string()));
    let peaks = detect_peaks(&survival, config.peak_prominence);
    let max_conservation_dev = conservation_report(&traj);
    Ok(RunAnalysis {
        gamma_theory: params.golden_rule_gamma(),
        traj,
        fit,
        peaks,
        max_conservation_dev,
    })
}

/// `simulate`: trajectory CSV plus JSON summary. A failed decay fit still
/// writes both artifacts and is then reported through the exit status.
pub fn simulate(config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let analysis = run_survival_analysis(config)?;

    write_atomic(
        &out_dir.join("trajectory.csv"),
        &trajectory_csv(config, &analysis.traj),
    )?;

    let summary = Summary {
        config,
        gamma_theory: analysis.gamma_theory,
        fit: FitJson::from_result(&analysis.fit),
        peaks: analysis.peaks.peaks().iter().map(|&p| PeakJson::from(p)).collect(),
        max_conservation_dev: analysis.max_conservation_dev,
        runtime_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&out_dir.join("summary.json"), &summary)?;

    match &analysis.fit {
        Ok(_) => Ok(()),
        Err(reason) => Err(CliError::fit(format!("decay fit failed: {reason}"))),
    }
}

#[derive(Debug, Serialize)]
struct SweepRow {
    n: usize,
    m: i64,
    vbar: f64,
    gamma_theory: f64,
    #[serde(flatten)]
    fit: FitJson,
    first_peak: Option<PeakJson>,
    second_peak: Option<PeakJson>,
    max_peak: Option<PeakJson>,
    max_conservation_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    run_error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepReport<'a> {
    base: &'a RunConfig,
    rows: Vec<SweepRow>,
}

fn sweep_row(config: &RunConfig) -> SweepRow {
    let n = config.m as usize * 2 + 2;
    match run_survival_analysis(config) {
        Ok(analysis) => {
            let peaks = analysis.peaks.peaks();
            SweepRow {
                n,
                m: config.m,
                vbar: config.vbar,
                gamma_theory: analysis.gamma_theory,
                fit: FitJson::from_result(&analysis.fit),
                first_peak: peaks.first().map(|&p| PeakJson::from(p)),
                second_peak: peaks.get(1).map(|&p| PeakJson::from(p)),
                max_peak: analysis.peaks.highest().map(PeakJson::from),
                max_conservation_dev: Some(analysis.max_conservation_dev),
                run_error: None,
            }
        }
        Err(e) => SweepRow {
            n,
            m: config.m,
            vbar: config.vbar,
            gamma_theory: config.model().map(|p| p.golden_rule_gamma()).unwrap_or(f64::NAN),
            fit: FitJson {
                gamma_fit: None,
                fit_window: None,
                rms_residual: None,
                fit_error: None,
            },
            first_peak: None,
            second_peak: None,
            max_peak: None,
            max_conservation_dev: None,
            run_error: Some(e.to_string()),
        },
    }
}

/// `sweep-n`: one run per total state count, `m = n/2 - 1`, rows in input
/// order. Per-row failures are recorded in the row; the sweep continues.
pub fn sweep_n(base: &RunConfig, n_list: &[i64], out_dir: &Path) -> Result<(), CliError> {
    if n_list.is_empty() {
        return Err(CliError::config("n_list must not be empty"));
    }
    for &n in n_list {
        if n < 2 || n % 2 != 0 {
            return Err(CliError::config(format!(
                "n must be even and at least 2 (n = 2m + 2), got {n}"
            )));
        }
    }
    let configs: Vec<RunConfig> = n_list
        .iter()
        .map(|&n| RunConfig {
            m: n / 2 - 1,
            tracked_k: Vec::new(),
            ..base.clone()
        })
        .collect();
    let rows: Vec<SweepRow> = configs.par_iter().map(sweep_row).collect();
    write_json(&out_dir.join("sweep_n.json"), &SweepReport { base, rows })
}

/// `sweep-v`: one run per coupling strength at fixed ladder size.
pub fn sweep_v(base: &RunConfig, vbar_list: &[f64], out_dir: &Path) -> Result<(), CliError> {
    if vbar_list.is_empty() {
        return Err(CliError::config("vbar_list must not be empty"));
    }
    for &vbar in vbar_list {
        if !(vbar.is_finite() && vbar >= 0.0) {
            return Err(CliError::config(format!("vbar must be non-negative, got {vbar}")));
        }
    }
    let configs: Vec<RunConfig> = vbar_list
        .iter()
        .map(|&vbar| RunConfig {
            vbar,
            ..base.clone()
        })
        .collect();
    let rows: Vec<SweepRow> = configs.par_iter().map(sweep_row).collect();
    write_json(&out_dir.join("sweep_v.json"), &SweepReport { base, rows })
}

/// `table1`: fitted decay constant against the golden-rule value for a
/// list of couplings. Each row integrates to `min(240, 5 / gamma_theory)`
/// so slow decays still show at least five decay constants of signal.
pub fn table1(base: &RunConfig, vbar_list: &[f64], out_dir: &Path) -> Result<(), CliError> {
    for &vbar in vbar_list {
        if !(vbar.is_finite() && vbar >= 0.0) {
            return Err(CliError::config(format!("vbar must be non-negative, got {vbar}")));
        }
    }
    let configs: Vec<RunConfig> = vbar_list
        .iter()
        .map(|&vbar| {
            let gamma_theory = 2.0 * std::f64::consts::PI * vbar * vbar / base.epsilon;
            RunConfig {
                vbar,
                t_final: (5.0 / gamma_theory).min(240.0),
                tracked_k: Vec::new(),
                fit_window: None,
                ..base.clone()
            }
        })
        .collect();

    struct TableRow {
        vbar: f64,
        gamma_theory: f64,
        outcome: Result<DecayFit, String>,
    }
    let rows: Vec<TableRow> = configs
        .par_iter()
        .map(|config| {
            let gamma_theory = config.model().map(|p| p.golden_rule_gamma()).unwrap_or(0.0);
            let outcome = match run_survival_analysis(config) {
                Ok(analysis) => analysis.fit,
                Err(e) => Err(e.to_string()),
            };
            TableRow {
                vbar: config.vbar,
                gamma_theory,
                outcome,
            }
        })
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "# exponential decay factor: fit vs golden rule");
    let _ = writeln!(out, "# epsilon = {}", base.epsilon);
    let _ = writeln!(out, "# m = {}", base.m);
    let _ = writeln!(out, "# dt_max = {}", base.dt_max);
    let _ = writeln!(out, "# t_final per row = min(240, 5 / gamma_theory)");
    let _ = writeln!(out, "vbar,gamma_fit,gamma_theory,ratio,status");
    for row in &rows {
        match &row.outcome {
            Ok(fit) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},ok",
                    row.vbar,
                    fit.gamma,
                    row.gamma_theory,
                    fit.gamma / row.gamma_theory
                );
            }
            Err(reason) => {
                let _ = writeln!(out, "{},,{},,{}", row.vbar, row.gamma_theory, csv_field(reason));
            }
        }
    }
    write_atomic(&out_dir.join("table1.csv"), &out)
}

/// `spectrum`: eigenvalues and bright weights, sorted by eigenvalue.
pub fn spectrum(config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let params = config.model()?;
    let spectrum = solve_spectrum(&params);

    let mut pairs: Vec<(f64, f64)> = spectrum
        .eigenvalues()
        .iter()
        .copied()
        .zip(spectrum.bright_weights().iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let weight_sum: f64 = pairs.iter().map(|(_, w)| w).sum();

    let mut out = String::new();
    let _ = writeln!(out, "# m = {}", config.m);
    let _ = writeln!(out, "# vbar = {}", config.vbar);
    let _ = writeln!(out, "# epsilon = {}", config.epsilon);
    let _ = writeln!(out, "# omega_s = {}", config.omega_s);
    let _ = writeln!(out, "# sum_bright_weights = {}", full_precision(weight_sum));
    let _ = writeln!(out, "j,eigenvalue,bright_weight");
    for (j, (eigenvalue, weight)) in pairs.iter().enumerate() {
        let _ = writeln!(
            out,
            "{j},{},{}",
            full_precision(*eigenvalue),
            full_precision(*weight)
        );
    }
    write_atomic(&out_dir.join("spectrum.csv"), &out)
}

