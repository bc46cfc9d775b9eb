//! Exact solution of the arrowhead eigenproblem through the secular
//! equation, plus spectral time propagation. This route is fully
//! independent of the ODE integrator and serves as its oracle.
//!
//! With poles `omega_k` (the dark levels) the secular function is
//!
//! ```text
//! f(lambda) = lambda - omega_s - sum_k vbar^2 / (lambda - omega_k)
//! ```
//!
//! whose zeros are the eigenvalues of the coupled Hamiltonian. Because
//! `f' = 1 + sum_k vbar^2 / (lambda - omega_k)^2 > 0`, `f` is strictly
//! increasing between consecutive poles and every eigenvalue is bracketed:
//! one below the lowest pole, one above the highest, one inside each open
//! pole interval.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelParams;
use crate::ode::AmplitudeVector;

/// Width at which bisection hands over to Newton polishing.
const BISECT_WIDTH: f64 = 1e-8;
/// Newton convergence target (relative step size).
const NEWTON_TOL: f64 = 1e-15;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("secular function has a pole at lambda = {0}")]
    AtPole(f64),
}

/// Eigenvalues of the coupled Hamiltonian together with the squared
/// bright-state component of each normalized eigenvector.
///
/// The weights satisfy `sum w_j = 1` (completeness) and
/// `sum w_j lambda_j = omega_s` (the bright diagonal element), which the
/// solver preserves to near machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowheadSpectrum {
    eigenvalues: Vec<f64>,
    bright_weights: Vec<f64>,
}

impl ArrowheadSpectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues, strictly increasing for `vbar > 0`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Squared bright-state overlap of each eigenvector, same order as
    /// [`Self::eigenvalues`].
    pub fn bright_weights(&self) -> &[f64] {
        &self.bright_weights
    }
}

/// Evaluates the secular function at `lambda`.
///
/// The pole terms are accumulated in ascending order of `|lambda - omega_k|`
/// so the two large near-pole contributions of opposite sign cancel first.
/// The poles are sorted, so that order comes from a two-pointer walk
/// outward from `lambda` rather than a sort.
pub fn secular_function(params: &ModelParams, lambda: f64) -> Result<f64, SpectralError> {
    let vbar2 = params.vbar() * params.vbar();
    let m = params.m() as i64;
    let gaps: Vec<f64> = (-m..=m)
        .map(|k| lambda - (params.omega_s() + k as f64 * params.epsilon()))
        .collect();
    if gaps.contains(&0.0) {
        return Err(SpectralError::AtPole(lambda));
    }
    // gaps decrease monotonically (positive to negative); split at the
    // sign change and merge the two runs by ascending magnitude
    let split = gaps.partition_point(|&g| g > 0.0);
    let mut below = split;
    let mut above = split;
    let mut sum = 0.0;
    loop {
        let next_below = below.checked_sub(1).map(|i| gaps[i]);
        let next_above = gaps.get(above).copied();
        match (next_below, next_above) {
            (Some(b), Some(a)) => {
                if b.abs() <= a.abs() {
                    sum += vbar2 / b;
                    below -= 1;
                } else {
                    sum += vbar2 / a;
                    above += 1;
                }
            }
            (Some(b), None) => {
                sum += vbar2 / b;
                below -= 1;
            }
            (None, Some(a)) => {
                sum += vbar2 / a;
                above += 1;
            }
            (None, None) => break,
        }
    }
    Ok(lambda - params.omega_s() - sum)
}

/// Solves the full eigenproblem by bracketed root-finding on the secular
/// function: bisection down to a narrow interval, then Newton polishing
/// with a bisection fallback whenever a Newton step escapes the bracket.
///
/// Each root is solved in coordinates relative to its nearest pole
/// (`g = lambda - omega_nearest`), so the near-pole gap that controls the
/// bright weight is computed directly instead of by cancellation. The
/// reported eigenvalue is `omega_nearest + g`.
///
/// For `vbar = 0` the spectrum is the uncoupled one (eigenvalues equal the
/// diagonal, all bright weight on the bright state) and no root-finding
/// runs.
///
/// Panics if a root fails to converge within the iteration cap; the
/// monotonicity of `f` between poles makes that unreachable for valid
/// parameters.
pub fn solve_spectrum(params: &ModelParams) -> ArrowheadSpectrum {
    let n = params.n();
    if params.vbar() == 0.0 {
        let diag = params.hamiltonian().diag().to_vec();
        let mut bright_weights = vec![0.0; n];
        bright_weights[0] = 1.0;
        return ArrowheadSpectrum {
            eigenvalues: diag,
            bright_weights,
        };
    }

    // Poles: the dark levels, already ascending.
    let m = params.m() as i64;
    let poles: Vec<f64> = (-m..=m)
        .map(|k| params.omega_s() + k as f64 * params.epsilon())
        .collect();

    // Gershgorin-style margin guaranteeing enclosure of the outer roots.
    let margin = params.vbar() * n as f64 + params.epsilon();

    let mut eigenvalues = Vec::with_capacity(n);
    let mut bright_weights = Vec::with_capacity(n);
    for i in 0..n {
        // Choose the shift pole and the gap bracket (signs are known:
        // the shifted function is negative at the low end of the bracket
        // and positive at the high end, both ends exclusive).
        let (sigma_index, g_lo, g_hi) = if i == 0 {
            (0, -margin, 0.0)
        } else if i == n - 1 {
            (poles.len() - 1, 0.0, margin)
        } else {
            let mid = 0.5 * (poles[i - 1] + poles[i]);
            let f_mid = secular_function(params, mid)
                .expect("interval midpoint cannot be a pole");
            if f_mid >= 0.0 {
                (i - 1, 0.0, mid - poles[i - 1])
            } else {
                (i, mid - poles[i], 0.0)
            }
        };
        let shifted = GapSecular::new(params, &poles, sigma_index);
        let gap = shifted.refine(g_lo, g_hi);
        eigenvalues.push(poles[sigma_index] + gap);
        bright_weights.push(1.0 / shifted.derivative(gap));
    }

    ArrowheadSpectrum {
        eigenvalues,
        bright_weights,
    }
}

/// The secular function in coordinates relative to one pole `sigma`:
/// `G(g) = (sigma - omega_s) + g - sum_k vbar^2 / (d_k + g)` with
/// `d_k = sigma - omega_k`. The shift pole's own term is exactly
/// `vbar^2 / g` because `d_sigma = 0`.
struct GapSecular {
    /// `sigma - omega_k` in pole order (descending, zero at the shift).
    offsets: Vec<f64>,
    sigma_minus_omega_s: f64,
    vbar2: f64,
}

impl GapSecular {
    fn new(params: &ModelParams, poles: &[f64], sigma_index: usize) -> Self {
        let sigma = poles[sigma_index];
        let mut offsets: Vec<f64> = poles.iter().map(|&p| sigma - p).collect();
        offsets[sigma_index] = 0.0;
        GapSecular {
            offsets,
            sigma_minus_omega_s: sigma - params.omega_s(),
            vbar2: params.vbar() * params.vbar(),
        }
    }

    /// `G(g)`, pole terms summed in ascending order of `|d_k + g|`. The
    /// offsets descend, so that order comes from a two-pointer walk
    /// outward from the sign change.
    fn value(&self, g: f64) -> f64 {
        let split = self.offsets.partition_point(|&d| d + g > 0.0);
        let term = |i: usize| self.vbar2 / (self.offsets[i] + g);
        let mut below = split;
        let mut above = split;
        let mut sum = 0.0;
        loop {
            let next_below = below.checked_sub(1).map(|i| self.offsets[i] + g);
            let next_above = self.offsets.get(above).map(|&d| d + g);
            match (next_below, next_above) {
                (Some(b), Some(a)) => {
                    if b.abs() <= a.abs() {
                        below -= 1;
                        sum += term(below);
                    } else {
                        sum += term(above);
                        above += 1;
                    }
                }
                (Some(_), None) => {
                    below -= 1;
                    sum += term(below);
                }
                (None, Some(_)) => {
                    sum += term(above);
                    above += 1;
                }
                (None, None) => break,
            }
        }
        self.sigma_minus_omega_s + g - sum
    }

    /// `G'(g) = 1 + sum_k vbar^2 / (d_k + g)^2`; its reciprocal at the
    /// root is the bright weight.
    fn derivative(&self, g: f64) -> f64 {
        let mut sum = 1.0;
        for &d in &self.offsets {
            let gap = d + g;
            sum += self.vbar2 / (gap * gap);
        }
        sum
    }

    /// Finds the unique root in `(g_lo, g_hi)`. Both ends are exclusive
    /// with known signs (negative at `g_lo`, positive at `g_hi`); the end
    /// at zero is the pole itself and is never evaluated.
    fn refine(&self, mut lo: f64, mut hi: f64) -> f64 {
        debug_assert!(lo < hi);

        // Bisection phase.
        let mut iterations = 0;
        while hi - lo > BISECT_WIDTH * lo.abs().max(hi.abs()).max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // interval exhausted at this precision
            }
            if self.value(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
            assert!(iterations < MAX_ITERATIONS, "secular bisection failed to converge");
        }

        // Newton polish, keeping the bracket as a safety net.
        let mut g = 0.5 * (lo + hi);
        for _ in 0..MAX_ITERATIONS {
            let value = self.value(g);
            if value == 0.0 {
                return g;
            }
            if value < 0.0 {
                lo = lo.max(g);
            } else {
                hi = hi.min(g);
            }
            let next = g - value / self.derivative(g);
            let next = if next <= lo || next >= hi {
                0.5 * (lo + hi) // Newton escaped; fall back to bisection
            } else {
                next
            };
            if (next - g).abs() <= NEWTON_TOL * next.abs() {
                return next;
            }
            g = next;
        }
        // The bracket shrinks every iteration, so for valid inputs the
        // loop terminates through the step-size test well before the cap.
        assert!(
            hi - lo <= 1e-13 * lo.abs().max(hi.abs()).max(1.0),
            "secular root polish failed to converge in ({lo}, {hi})"
        );
        0.5 * (lo + hi)
    }
}

/// Exact bright-state survival amplitude at time `t`:
/// `x_s(t) = sum_j w_j exp(-i lambda_j t)`.
pub fn propagate(spectrum: &ArrowheadSpectrum, t: f64) -> Complex64 {
    let mut amp = Complex64::new(0.0, 0.0);
    for (&lambda, &w) in spectrum.eigenvalues.iter().zip(&spectrum.bright_weights) {
        amp += w * Complex64::from_polar(1.0, -lambda * t);
    }
    amp
}

/// Exact full amplitude vector at time `t`, extending the eigen-expansion
/// to the dark components via
/// `c_k^(j) = vbar * c_s^(j) / (lambda_j - omega_k)`.
pub fn propagate_full(params: &ModelParams, spectrum: &ArrowheadSpectrum, t: f64) -> AmplitudeVector {
    let n = params.n();
    debug_assert_eq!(spectrum.n(), n);
    let mut entries = vec![Complex64::new(0.0, 0.0); n];
    if params.vbar() == 0.0 {
        entries[0] = Complex64::from_polar(1.0, -params.omega_s() * t);
        return AmplitudeVector::from_entries(entries);
    }
    let m = params.m() as i64;
    for (&lambda, &w) in spectrum.eigenvalues.iter().zip(&spectrum.bright_weights) {
        let phase = w * Complex64::from_polar(1.0, -lambda * t);
        entries[0] += phase;
        for k in -m..=m {
            let gap = lambda - (params.omega_s() + k as f64 * params.epsilon());
            let slot = (k + m + 1) as usize;
            entries[slot] += phase * (params.vbar() / gap);
        }
    }
    AmplitudeVector::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(m: i64, vbar: f64, epsilon: f64) -> ModelParams {
        ModelParams::new(m, vbar, epsilon, 0.0).unwrap()
    }

    #[test]
    fn two_level_secular_roots() {
        let p = params(0, 0.1, 0.25);
        assert_abs_diff_eq!(secular_function(&p, 0.1).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(secular_function(&p, -0.1).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn secular_rejects_poles() {
        let p = params(1, 0.04, 0.25);
        assert_eq!(secular_function(&p, 0.25), Err(SpectralError::AtPole(0.25)));
        assert_eq!(secular_function(&p, 0.0), Err(SpectralError::AtPole(0.0)));
        assert!(secular_function(&p, 0.1).is_ok());
    }

    #[test]
    fn two_level_spectrum() {
        let s = solve_spectrum(&params(0, 0.1, 0.25));
        assert_abs_diff_eq!(s.eigenvalues()[0], -0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues()[1], 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(s.bright_weights()[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.bright_weights()[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn uncoupled_spectrum_is_trivial() {
        let p = params(2, 0.0, 0.3);
        let s = solve_spectrum(&p);
        assert_eq!(s.eigenvalues(), p.hamiltonian().diag());
        assert_eq!(s.bright_weights(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sum_rules_hold() {
        let p = params(12, 0.10, 0.25);
        let s = solve_spectrum(&p);
        let w_sum: f64 = s.bright_weights().iter().sum();
        let first_moment: f64 = s
            .bright_weights()
            .iter()
            .zip(s.eigenvalues())
            .map(|(w, l)| w * l)
            .sum();
        assert_abs_diff_eq!(w_sum, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(first_moment, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn sum_rules_hold_with_shift() {
        let p = ModelParams::new(9, 0.07, 0.13, 0.45).unwrap();
        let s = solve_spectrum(&p);
        let w_sum: f64 = s.bright_weights().iter().sum();
        let first_moment: f64 = s
            .bright_weights()
            .iter()
            .zip(s.eigenvalues())
            .map(|(w, l)| w * l)
            .sum();
        assert_abs_diff_eq!(w_sum, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(first_moment, 0.45, epsilon = 1e-10);
    }

    #[test]
    fn eigenvalues_interlace_the_poles() {
        let p = params(12, 0.10, 0.25);
        let s = solve_spectrum(&p);
        let eig = s.eigenvalues();
        let m = p.m() as i64;
        let poles: Vec<f64> = (-m..=m).map(|k| k as f64 * p.epsilon()).collect();
        assert_eq!(eig.len(), poles.len() + 1);
        assert!(eig[0] < poles[0]);
        assert!(eig[eig.len() - 1] > poles[poles.len() - 1]);
        for i in 1..eig.len() - 1 {
            assert!(
                poles[i - 1] < eig[i] && eig[i] < poles[i],
                "eigenvalue {} = {} escapes ({}, {})",
                i,
                eig[i],
                poles[i - 1],
                poles[i]
            );
        }
        for w in eig.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn propagate_starts_at_one() {
        let s = solve_spectrum(&params(12, 0.10, 0.25));
        let amp = propagate(&s, 0.0);
        assert_abs_diff_eq!(amp.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(amp.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_level_survival_is_rabi() {
        let s = solve_spectrum(&params(0, 0.1, 0.25));
        for i in 0..200 {
            let t = 0.2 * i as f64;
            let p_s = propagate(&s, t).norm_sqr();
            assert_abs_diff_eq!(p_s, (0.1f64 * t).cos().powi(2), epsilon = 1e-13);
        }
    }

    #[test]
    fn propagation_is_unitary() {
        let s = solve_spectrum(&params(12, 0.10, 0.25));
        for i in 0..600 {
            let t = 0.1 * i as f64;
            assert!(propagate(&s, t).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn full_propagation_conserves_probability() {
        let p = params(12, 0.075, 0.10);
        let s = solve_spectrum(&p);
        for i in 0..120 {
            let t = i as f64;
            let state = propagate_full(&p, &s, t);
            assert_abs_diff_eq!(state.total_probability(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn full_propagation_at_zero_is_initial_state() {
        let p = params(12, 0.10, 0.25);
        let s = solve_spectrum(&p);
        let state = propagate_full(&p, &s, 0.0);
        assert_abs_diff_eq!(state.entries()[0].re, 1.0, epsilon = 1e-10);
        for e in &state.entries()[1..] {
            assert!(e.norm() < 1e-10);
        }
    }

    #[test]
    fn full_propagation_dark_mirror_symmetry() {
        let p = params(12, 0.10, 0.25);
        let s = solve_spectrum(&p);
        let state = propagate_full(&p, &s, 17.3);
        let m = p.m() as i64;
        for k in 1..=m {
            let plus = state.entries()[(k + m + 1) as usize].norm_sqr();
            let minus = state.entries()[(-k + m + 1) as usize].norm_sqr();
            assert_abs_diff_eq!(plus, minus, epsilon = 1e-10);
        }
    }

    #[test]
    fn n2_survival_recurs_with_period_pi_over_vbar() {
        // analytic period pi / vbar for the degenerate two-level case
        let s = solve_spectrum(&params(0, 0.1, 0.25));
        let period = std::f64::consts::PI / 0.1;
        let p_s = propagate(&s, period).norm_sqr();
        assert!((p_s - 1.0).abs() < 1e-3);
    }

    #[test]
    fn resonant_pole_does_not_break_bracketing() {
        // omega_0 coincides with omega_s; every interval still holds one root
        for vbar in [1e-6, 1e-3, 0.05, 0.4] {
            let p = params(3, vbar, 0.2);
            let s = solve_spectrum(&p);
            assert_eq!(s.n(), 8);
            let w_sum: f64 = s.bright_weights().iter().sum();
            assert_abs_diff_eq!(w_sum, 1.0, epsilon = 1e-11);
        }
    }
}
