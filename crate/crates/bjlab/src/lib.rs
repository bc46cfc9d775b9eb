//! Finite-state Bixon-Jortner dynamics.
//!
//! A bright state `s` decays into a ladder of `2m + 1` evenly spaced dark
//! states it is uniformly coupled to; the dark states do not couple to each
//! other. The crate propagates the coupled amplitude equations two
//! independent ways — fixed-step Runge-Kutta on the ODE system
//! ([`ode`]) and exact eigen-expansion through the arrowhead secular
//! equation ([`spectral`]) — and derives survival-probability
//! phenomenology from the results ([`analysis`]): exponential-decay
//! windows, golden-rule rates, the quadratic short-time law, and quantum
//! recurrence.
//!
//! All frequencies and rates are in inverse time with `hbar = 1`.

pub mod analysis;
pub mod model;
pub mod ode;
pub mod spectral;

pub use analysis::{
    conservation_report, default_fit_window, detect_peaks, fit_exponential,
    probability_series, short_time_coefficient, AnalysisError, DecayFit, Peak, PeakList,
    ProbabilitySeries,
};
pub use model::{ArrowheadHamiltonian, ModelError, ModelParams, StateIndex};
pub use ode::{
    derivative, initial_state, integrate, integrate_from, AmplitudeVector, IntegrationOptions,
    OdeError, Trajectory, CONSERVATION_TOLERANCE, DEFAULT_DT_MAX,
};
pub use spectral::{propagate, propagate_full, secular_function, solve_spectrum, ArrowheadSpectrum, SpectralError};
