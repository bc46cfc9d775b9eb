//! Analysis of sampled trajectories: occupation-probability series,
//! exponential decay fits, recurrence-peak detection, and the short-time
//! and conservation diagnostics.

use thiserror::Error;

use crate::model::StateIndex;
use crate::ode::Trajectory;

/// Survival fraction whose first crossing opens the default fit window;
/// chosen to skip the quadratic shoulder at t -> 0.
pub const FIT_ENTRY_FRACTION: f64 = 0.95;
/// Default peak prominence: 1% of full scale, below every recurrence of
/// interest and above integrator-scale ripple.
pub const DEFAULT_PEAK_PROMINENCE: f64 = 0.01;
const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("fit window [{lo}, {hi}] holds {found} samples; at least {needed} required")]
    TooFewSamples {
        lo: f64,
        hi: f64,
        found: usize,
        needed: usize,
    },
    #[error("cannot fit a log-linear model: value {value} at t = {time} is not positive")]
    NonPositiveValue { time: f64, value: f64 },
    #[error("no decay: the series never drops to {FIT_ENTRY_FRACTION}")]
    NoDecay,
    #[error(
        "decay is slower than the quasi-continuum horizon 2*pi/epsilon = {horizon}: \
         the {FIT_ENTRY_FRACTION} crossing at t = {entry} falls outside the window"
    )]
    SlowDecay { entry: f64, horizon: f64 },
    #[error("short-time probe needs at least 3 samples in (0, {t_probe}], found {found}")]
    InsufficientSamples { t_probe: f64, found: usize },
}

/// Occupation probability of one state over time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySeries {
    times: Vec<f64>,
    values: Vec<f64>,
    label: StateIndex,
}

impl ProbabilitySeries {
    /// Builds a series from raw samples. The lists must be equal length
    /// with strictly increasing times and non-negative values.
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: StateIndex) -> Self {
        assert_eq!(times.len(), values.len(), "times/values length mismatch");
        assert!(times.windows(2).all(|w| w[0] < w[1]), "times must increase");
        assert!(values.iter().all(|&v| v >= 0.0), "probabilities are non-negative");
        Self { times, values, label }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> StateIndex {
        self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Result of a log-linear least-squares fit `ln p = log_intercept - gamma t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Fitted decay constant (negated slope of the log-linear fit).
    pub gamma: f64,
    /// Fitted intercept of `ln p` at `t = 0`.
    pub log_intercept: f64,
    /// The interval that was fitted.
    pub window: (f64, f64),
    /// Root-mean-square of the log residuals over the window; bounds the
    /// fine oscillations around the exponential.
    pub rms_residual: f64,
}

/// A strict local maximum of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
}

/// Prominent local maxima in time order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakList {
    peaks: Vec<Peak>,
}

impl PeakList {
    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn first(&self) -> Option<Peak> {
        self.peaks.first().copied()
    }

    /// The dominant peak (greatest value); ties resolve to the earliest.
    pub fn highest(&self) -> Option<Peak> {
        self.peaks
            .iter()
            .copied()
            .reduce(|best, p| if p.value > best.value { p } else { best })
    }
}

/// Extracts `|x_idx(t)|^2` from a trajectory.
///
/// Panics if `idx` is out of range for the trajectory's model.
pub fn probability_series(traj: &Trajectory, idx: StateIndex) -> ProbabilitySeries {
    assert!(traj.params().contains(idx), "state index {idx:?} out of range");
    let m = traj.params().m();
    let values = traj.states().iter().map(|s| s.probability(m, idx)).collect();
    ProbabilitySeries {
        times: traj.times().to_vec(),
        values,
        label: idx,
    }
}

/// Ordinary least squares of `ln(values)` against time over `window`
/// (inclusive at both ends).
pub fn fit_exponential(
    series: &ProbabilitySeries,
    window: (f64, f64),
) -> Result<DecayFit, AnalysisError> {
    let (lo, hi) = window;
    let in_window = || {
        series
            .times
            .iter()
            .zip(&series.values)
            .filter(move |(&t, _)| t >= lo && t <= hi)
    };

    let count = in_window().count();
    if count < MIN_FIT_SAMPLES {
        return Err(AnalysisError::TooFewSamples {
            lo,
            hi,
            found: count,
            needed: MIN_FIT_SAMPLES,
        });
    }
    if let Some((&t, &v)) = in_window().find(|(_, &v)| v <= 0.0) {
        return Err(AnalysisError::NonPositiveValue { time: t, value: v });
    }

    let n = count as f64;
    let mut sum_t = 0.0;
    let mut sum_y = 0.0;
    for (&t, &v) in in_window() {
        sum_t += t;
        sum_y += v.ln();
    }
    let mean_t = sum_t / n;
    let mean_y = sum_y / n;
    let mut s_tt = 0.0;
    let mut s_ty = 0.0;
    for (&t, &v) in in_window() {
        let dt = t - mean_t;
        s_tt += dt * dt;
        s_ty += dt * (v.ln() - mean_y);
    }
    let slope = s_ty / s_tt;
    let intercept = mean_y - slope * mean_t;

    let mut ss_resid = 0.0;
    for (&t, &v) in in_window() {
        let r = v.ln() - (intercept + slope * t);
        ss_resid += r * r;
    }

    Ok(DecayFit {
        gamma: -slope,
        log_intercept: intercept,
        window,
        rms_residual: (ss_resid / n).sqrt(),
    })
}

/// Default fit window for a survival series that starts at 1.
///
/// Entry: the first time the survival drops to [`FIT_ENTRY_FRACTION`],
/// skipping the quadratic shoulder. Exit: the first strict local minimum
/// (the onset of repopulation), the series end if the survival is still
/// falling, but never beyond the quasi-continuum horizon `2 pi / epsilon` —
/// past one such period the finite ladder stops approximating a continuum
/// and the decay is no longer a single exponential.
pub fn default_fit_window(
    series: &ProbabilitySeries,
    epsilon: f64,
) -> Result<(f64, f64), AnalysisError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let horizon = 2.0 * std::f64::consts::PI / epsilon;

    let entry = series
        .times
        .iter()
        .zip(&series.values)
        .find(|(_, &v)| v <= FIT_ENTRY_FRACTION)
        .map(|(&t, _)| t)
        .ok_or(AnalysisError::NoDecay)?;

    let values = &series.values;
    let mut exit = *series.times.last().expect("series is nonempty");
    for i in 1..values.len().saturating_sub(1) {
        if values[i] < values[i - 1] && values[i] < values[i + 1] {
            exit = series.times[i];
            break;
        }
    }
    let exit = exit.min(horizon);

    if exit <= entry {
        return Err(AnalysisError::SlowDecay { entry, horizon });
    }
    Ok((entry, exit))
}

/// Strict local maxima whose value exceeds the higher of the two flanking
/// minima (the lowest values toward the neighboring maxima or series ends)
/// by at least `min_prominence`. Endpoints are never peaks.
pub fn detect_peaks(series: &ProbabilitySeries, min_prominence: f64) -> PeakList {
    assert!(min_prominence >= 0.0, "prominence must be non-negative");
    let v = &series.values;
    if v.len() < 3 {
        return PeakList::default();
    }

    let maxima: Vec<usize> = (1..v.len() - 1)
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .collect();

    let mut peaks = Vec::new();
    for (pos, &i) in maxima.iter().enumerate() {
        let left_edge = if pos == 0 { 0 } else { maxima[pos - 1] };
        let right_edge = if pos + 1 < maxima.len() {
            maxima[pos + 1]
        } else {
            v.len() - 1
        };
        let left_min = v[left_edge..=i].iter().cloned().fold(f64::INFINITY, f64::min);
        let right_min = v[i..=right_edge].iter().cloned().fold(f64::INFINITY, f64::min);
        if v[i] - left_min.max(right_min) >= min_prominence {
            peaks.push(Peak {
                time: series.times[i],
                value: v[i],
            });
        }
    }
    PeakList { peaks }
}

/// Least-squares estimate of `c` in `p(t) ~ 1 - c t^2` over `(0, t_probe]`.
///
/// At `t = 0` the survival derivative vanishes, so the leading departure
/// from 1 is quadratic with coefficient `(2m + 1) vbar^2`.
pub fn short_time_coefficient(
    series: &ProbabilitySeries,
    t_probe: f64,
) -> Result<f64, AnalysisError> {
    assert!(t_probe > 0.0, "t_probe must be positive");
    let samples: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(&t, _)| t > 0.0 && t <= t_probe)
        .map(|(&t, &v)| (t, v))
        .collect();
    if samples.len() < 3 {
        return Err(AnalysisError::InsufficientSamples {
            t_probe,
            found: samples.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, v) in samples {
        let t2 = t * t;
        num += (1.0 - v) * t2;
        den += t2 * t2;
    }
    Ok(num / den)
}

/// Largest `|p_tot - 1|` over the trajectory's samples; identical to the
/// integrator-side check, re-exposed for reports.
pub fn conservation_report(traj: &Trajectory) -> f64 {
    traj.max_probability_deviation()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::ode::{integrate, IntegrationOptions};
    use approx::assert_abs_diff_eq;

    fn synthetic_exp(gamma: f64, scale: f64, n: usize, dt: f64) -> ProbabilitySeries {
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let values: Vec<f64> = times.iter().map(|&t| scale * (-gamma * t).exp()).collect();
        ProbabilitySeries::new(times, values, StateIndex::Bright)
    }

    #[test]
    fn series_from_trajectory_starts_canonically() {
        let p = ModelParams::new(2, 0.1, 0.25, 0.0).unwrap();
        let traj = integrate(&p, 1.0, &IntegrationOptions::default()).unwrap();
        let bright = probability_series(&traj, StateIndex::Bright);
        assert_eq!(bright.values()[0], 1.0);
        for k in -2..=2i64 {
            let dark = probability_series(&traj, StateIndex::Dark(k));
            assert_eq!(dark.values()[0], 0.0);
        }
    }

    #[test]
    fn fit_recovers_a_pure_exponential() {
        let series = synthetic_exp(0.26, 1.0, 500, 0.05);
        let fit = fit_exponential(&series, (0.0, 25.0)).unwrap();
        assert_abs_diff_eq!(fit.gamma, 0.26, epsilon = 1e-12);
        assert!(fit.rms_residual < 1e-12);
        assert_abs_diff_eq!(fit.log_intercept, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_is_scale_invariant_except_for_intercept() {
        let base = synthetic_exp(0.1, 1.0, 200, 0.1);
        let scaled = synthetic_exp(0.1, 3.5, 200, 0.1);
        let f0 = fit_exponential(&base, (0.0, 19.9)).unwrap();
        let f1 = fit_exponential(&scaled, (0.0, 19.9)).unwrap();
        assert_abs_diff_eq!(f0.gamma, f1.gamma, epsilon = 1e-12);
        assert_abs_diff_eq!(f1.log_intercept - f0.log_intercept, 3.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn fit_errors() {
        let series = synthetic_exp(0.1, 1.0, 100, 0.1);
        assert!(matches!(
            fit_exponential(&series, (50.0, 60.0)),
            Err(AnalysisError::TooFewSamples { found: 0, .. })
        ));
        assert!(matches!(
            fit_exponential(&series, (0.0, 0.5)),
            Err(AnalysisError::TooFewSamples { .. })
        ));
        let times: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let mut values = vec![0.5; 20];
        values[3] = 0.0;
        let zeroed = ProbabilitySeries::new(times, values, StateIndex::Bright);
        assert!(matches!(
            fit_exponential(&zeroed, (0.0, 19.0)),
            Err(AnalysisError::NonPositiveValue { time, .. }) if time == 3.0
        ));
    }

    #[test]
    fn default_window_rejects_flat_series() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let values = vec![1.0; 100];
        let flat = ProbabilitySeries::new(times, values, StateIndex::Bright);
        assert_eq!(default_fit_window(&flat, 0.25), Err(AnalysisError::NoDecay));
    }

    #[test]
    fn default_window_enters_at_entry_fraction_and_exits_at_first_minimum() {
        // decay to a dip at t = 6, then recovery
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| if t <= 6.0 { (-0.5 * t).exp() } else { (-3.0f64).exp() * (t - 6.0 + 1.0).ln_1p().max(0.0) + (-3.0f64).exp() })
            .collect();
        let series = ProbabilitySeries::new(times, values, StateIndex::Bright);
        let (lo, hi) = default_fit_window(&series, 0.25).unwrap();
        assert_abs_diff_eq!(lo, 0.2, epsilon = 1e-12); // exp(-0.05) > 0.95, exp(-0.1) < 0.95
        assert_abs_diff_eq!(hi, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn default_window_clamps_at_the_horizon() {
        // monotone decay, no local minimum: exit must stop at 2 pi / eps
        let series = synthetic_exp(0.05, 1.0, 2000, 0.1);
        let (lo, hi) = default_fit_window(&series, 0.25).unwrap();
        assert!(lo > 0.0);
        assert_abs_diff_eq!(hi, 2.0 * std::f64::consts::PI / 0.25, epsilon = 1e-12);
    }

    #[test]
    fn default_window_reports_slow_decay() {
        // the 5% drop happens long after the horizon
        let series = synthetic_exp(0.0004, 1.0, 24000, 0.01);
        match default_fit_window(&series, 0.10) {
            Err(AnalysisError::SlowDecay { entry, horizon }) => {
                assert!(entry > horizon);
            }
            other => panic!("expected SlowDecay, got {other:?}"),
        }
    }

    #[test]
    fn peaks_of_monotone_series_are_empty() {
        let series = synthetic_exp(0.3, 1.0, 500, 0.1);
        assert!(detect_peaks(&series, 0.0).is_empty());
    }

    #[test]
    fn peak_detection_prominence_filter() {
        let times: Vec<f64> = (0..9).map(|i| i as f64).collect();
        // two maxima: a tall one at t=2 and a ripple at t=6
        let values = vec![0.0, 0.5, 1.0, 0.4, 0.2, 0.3, 0.35, 0.34, 0.1];
        let series = ProbabilitySeries::new(times, values, StateIndex::Bright);
        let all = detect_peaks(&series, 0.0);
        assert_eq!(all.len(), 2);
        let prominent = detect_peaks(&series, 0.2);
        assert_eq!(prominent.len(), 1);
        assert_eq!(prominent.first().unwrap().time, 2.0);
        assert_eq!(prominent.highest().unwrap().value, 1.0);
    }

    #[test]
    fn peaks_are_invariant_under_shift_and_scale() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|&t| (0.4 * t).sin().powi(2) * 0.3).collect();
        let base = ProbabilitySeries::new(times.clone(), values.clone(), StateIndex::Bright);
        let shifted_times: Vec<f64> = times.iter().map(|&t| t + 5.0).collect();
        let shifted = ProbabilitySeries::new(shifted_times, values.clone(), StateIndex::Bright);
        let scaled_values: Vec<f64> = values.iter().map(|&v| 2.0 * v).collect();
        let scaled = ProbabilitySeries::new(times, scaled_values, StateIndex::Bright);

        let p_base = detect_peaks(&base, 0.05);
        let p_shift = detect_peaks(&shifted, 0.05);
        let p_scale = detect_peaks(&scaled, 0.10);
        assert_eq!(p_base.len(), p_shift.len());
        assert_eq!(p_base.len(), p_scale.len());
        for (a, b) in p_base.peaks().iter().zip(p_shift.peaks()) {
            assert_abs_diff_eq!(b.time - a.time, 5.0, epsilon = 1e-12);
            assert_eq!(a.value, b.value);
        }
        for (a, b) in p_base.peaks().iter().zip(p_scale.peaks()) {
            assert_eq!(a.time, b.time);
            assert_abs_diff_eq!(b.value, 2.0 * a.value, epsilon = 1e-15);
        }
    }

    #[test]
    fn short_time_coefficient_of_cosine_squared() {
        // p(t) = cos^2(V t) ~ 1 - V^2 t^2
        let times: Vec<f64> = (0..=5).map(|i| i as f64 * 0.01).collect();
        let values: Vec<f64> = times.iter().map(|&t| (0.1 * t).cos().powi(2)).collect();
        let series = ProbabilitySeries::new(times, values, StateIndex::Bright);
        let c = short_time_coefficient(&series, 0.05).unwrap();
        assert!((c - 0.01).abs() / 0.01 < 0.02, "c = {c}");
    }

    #[test]
    fn short_time_coefficient_zero_without_coupling() {
        let times: Vec<f64> = (0..=5).map(|i| i as f64 * 0.01).collect();
        let values = vec![1.0; times.len()];
        let series = ProbabilitySeries::new(times, values, StateIndex::Bright);
        assert_eq!(short_time_coefficient(&series, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn short_time_requires_samples() {
        let series = synthetic_exp(0.1, 1.0, 5, 1.0);
        assert!(matches!(
            short_time_coefficient(&series, 0.05),
            Err(AnalysisError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn conservation_report_of_trivial_run() {
        let p = ModelParams::new(1, 0.0, 0.25, 0.0).unwrap();
        let traj = integrate(&p, 1.0, &IntegrationOptions::default()).unwrap();
        assert!(conservation_report(&traj) < 1e-14);
    }
}
