//! Time integration of the coupled amplitude equations
//!
//! ```text
//! dx_j/dt = -i (omega_j x_j + vbar x_s)            j != s
//! dx_s/dt = -i (omega_s x_s + vbar sum_k x_k)
//! ```
//!
//! as an initial value problem, with fixed-step classic Runge-Kutta.
//! Probability conservation is never enforced; it is measured at every
//! stored sample and used as the accuracy diagnostic.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{ModelParams, StateIndex};

/// Largest step size accepted without an explicit opt-in.
pub const DEFAULT_DT_MAX: f64 = 1e-3;
/// Permitted deviation of the total probability from 1 at any sample.
pub const CONSERVATION_TOLERANCE: f64 = 2.5e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("t_final must be positive and finite, got {0}")]
    InvalidTimeSpan(f64),
    #[error("dt_max must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("dt_max = {0} exceeds {DEFAULT_DT_MAX} and coarse stepping was not allowed")]
    CoarseStepNotAllowed(f64),
    #[error("sample_stride must be at least 1")]
    ZeroSampleStride,
    #[error("state dimension {found} does not match the model's {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(
        "total probability deviated by {deviation:.3e} at t = {time} \
         (tolerance {CONSERVATION_TOLERANCE:.1e}); stepping is too coarse"
    )]
    ConservationViolation { time: f64, deviation: f64 },
    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),
}

/// Complex amplitudes over the canonical state ordering (bright first,
/// then dark `k = -m..=m`).
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    entries: Vec<Complex64>,
}

impl AmplitudeVector {
    /// Wraps raw amplitudes in canonical order (bright first, then dark
    /// `k = -m..=m`).
    pub fn from_entries(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Amplitude of one state; `m` fixes the layout.
    pub fn amplitude(&self, m: usize, idx: StateIndex) -> Complex64 {
        self.entries[idx.offset(m)]
    }

    /// Occupation probability `|x_i|^2` of one state.
    pub fn probability(&self, m: usize, idx: StateIndex) -> f64 {
        self.amplitude(m, idx).norm_sqr()
    }

    /// Total occupation probability `sum_i |x_i|^2`.
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|x| x.norm_sqr()).sum()
    }

    fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

/// The canonical initial condition: unit population in the bright state.
pub fn initial_state(params: &ModelParams) -> AmplitudeVector {
    let mut entries = vec![Complex64::new(0.0, 0.0); params.n()];
    entries[0] = Complex64::new(1.0, 0.0);
    AmplitudeVector::from_entries(entries)
}

/// Right-hand side of the amplitude equations, `-i H x` with `H` the
/// arrowhead Hamiltonian.
///
/// Panics if the state length does not match `params.n()`.
pub fn derivative(params: &ModelParams, state: &AmplitudeVector) -> AmplitudeVector {
    assert_eq!(
        state.len(),
        params.n(),
        "state dimension {} does not match the model's {}",
        state.len(),
        params.n()
    );
    let omegas: Vec<f64> = params
        .state_indices()
        .map(|idx| params.level_frequency(idx))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); params.n()];
    rhs(&omegas, params.vbar(), state.entries(), &mut out);
    AmplitudeVector::from_entries(out)
}

fn rhs(omegas: &[f64], vbar: f64, x: &[Complex64], out: &mut [Complex64]) {
    let minus_i = Complex64::new(0.0, -1.0);
    let mut dark_sum = Complex64::new(0.0, 0.0);
    for xi in &x[1..] {
        dark_sum += xi;
    }
    out[0] = minus_i * (omegas[0] * x[0] + vbar * dark_sum);
    for j in 1..x.len() {
        out[j] = minus_i * (omegas[j] * x[j] + vbar * x[0]);
    }
}

/// Step-size policy and sampling for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// Upper bound on the step size. Values above [`DEFAULT_DT_MAX`] are
    /// rejected unless [`Self::allow_coarse`] is set.
    pub dt_max: f64,
    /// Store every this-many accepted steps (the final time is always
    /// stored).
    pub sample_stride: usize,
    /// Opt-in for steps coarser than [`DEFAULT_DT_MAX`].
    pub allow_coarse: bool,
    /// When set, a sampled probability deviation beyond
    /// [`CONSERVATION_TOLERANCE`] aborts the run with
    /// [`OdeError::ConservationViolation`]. Disable only to measure the
    /// deviation of deliberately coarse runs.
    pub enforce_conservation: bool,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            dt_max: DEFAULT_DT_MAX,
            sample_stride: 10,
            allow_coarse: false,
            enforce_conservation: true,
        }
    }
}

/// A sampled solution of the amplitude equations. The step bound and
/// sampling stride are recorded so a run can be reproduced from its
/// trajectory alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    params: ModelParams,
    times: Vec<f64>,
    states: Vec<AmplitudeVector>,
    dt_max: f64,
    sample_stride: usize,
}

impl Trajectory {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Sample instants, strictly increasing from 0.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[AmplitudeVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Step-size bound the run was produced with.
    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    /// Sampling stride the run was produced with.
    pub fn sample_stride(&self) -> usize {
        self.sample_stride
    }

    /// Largest `|p_tot - 1|` over all stored samples.
    pub fn max_probability_deviation(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.total_probability() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates from the canonical initial state (bright population 1) to
/// `t_final`.
///
/// The step divides `t_final` evenly: `dt = t_final / ceil(t_final /
/// dt_max)`, so the final sample lands on `t_final` exactly and runs are
/// bit-reproducible. Samples are stored every `sample_stride` steps plus
/// the final time.
pub fn integrate(
    params: &ModelParams,
    t_final: f64,
    options: &IntegrationOptions,
) -> Result<Trajectory, OdeError> {
    integrate_from(params, initial_state(params), t_final, options)
}

/// Same as [`integrate`] but starting from an arbitrary state. The
/// equations are linear, so scaled initial states yield scaled
/// trajectories; the conservation check is applied relative to the initial
/// total probability.
pub fn integrate_from(
    params: &ModelParams,
    initial: AmplitudeVector,
    t_final: f64,
    options: &IntegrationOptions,
) -> Result<Trajectory, OdeError> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(OdeError::InvalidTimeSpan(t_final));
    }
    if !(options.dt_max.is_finite() && options.dt_max > 0.0) {
        return Err(OdeError::InvalidStep(options.dt_max));
    }
    if options.dt_max > DEFAULT_DT_MAX && !options.allow_coarse {
        return Err(OdeError::CoarseStepNotAllowed(options.dt_max));
    }
    if options.sample_stride == 0 {
        return Err(OdeError::ZeroSampleStride);
    }
    if initial.len() != params.n() {
        return Err(OdeError::DimensionMismatch {
            expected: params.n(),
            found: initial.len(),
        });
    }

    let steps = (t_final / options.dt_max).ceil() as usize;
    let steps = steps.max(1);
    let dt = t_final / steps as f64;
    let n = params.n();
    let omegas: Vec<f64> = params
        .state_indices()
        .map(|idx| params.level_frequency(idx))
        .collect();

    let p0 = initial.total_probability();
    let mut x = initial.entries().to_vec();
    let mut stage = vec![Complex64::new(0.0, 0.0); n];
    let mut k1 = vec![Complex64::new(0.0, 0.0); n];
    let mut k2 = vec![Complex64::new(0.0, 0.0); n];
    let mut k3 = vec![Complex64::new(0.0, 0.0); n];
    let mut k4 = vec![Complex64::new(0.0, 0.0); n];

    let mut times = Vec::with_capacity(steps / options.sample_stride + 2);
    let mut states = Vec::with_capacity(steps / options.sample_stride + 2);
    times.push(0.0);
    states.push(initial);

    for step in 1..=steps {
        rhs(&omegas, params.vbar(), &x, &mut k1);
        for i in 0..n {
            stage[i] = x[i] + 0.5 * dt * k1[i];
        }
        rhs(&omegas, params.vbar(), &stage, &mut k2);
        for i in 0..n {
            stage[i] = x[i] + 0.5 * dt * k2[i];
        }
        rhs(&omegas, params.vbar(), &stage, &mut k3);
        for i in 0..n {
            stage[i] = x[i] + dt * k3[i];
        }
        rhs(&omegas, params.vbar(), &stage, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }

        if step % options.sample_stride == 0 || step == steps {
            let t = if step == steps { t_final } else { step as f64 * dt };
            let sample = AmplitudeVector::from_entries(x.clone());
            if !sample.is_finite() {
                return Err(OdeError::NonFiniteState(t));
            }
            let deviation = (sample.total_probability() - p0).abs();
            if options.enforce_conservation && deviation > CONSERVATION_TOLERANCE {
                return Err(OdeError::ConservationViolation { time: t, deviation });
            }
            times.push(t);
            states.push(sample);
        }
    }

    Ok(Trajectory {
        params: *params,
        times,
        states,
        dt_max: options.dt_max,
        sample_stride: options.sample_stride,
    })
}
