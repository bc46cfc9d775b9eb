//! Model definition: parameter set, state indexing, level frequencies, the
//! arrowhead Hamiltonian, and the golden-rule decay rate.
//!
//! Units: hbar = 1 throughout, so every matrix element, frequency, and rate
//! is measured in inverse time.

use std::f64::consts::PI;
use thiserror::Error;

/// Validation failures for [`ModelParams::new`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("parameter `{0}` must be finite")]
    NonFinite(&'static str),
    #[error("ladder half-width m must be non-negative")]
    NegativeHalfWidth,
    #[error("level spacing epsilon must be positive")]
    NonPositiveSpacing,
    #[error("coupling vbar must be non-negative")]
    NegativeCoupling,
}

/// One instance of the model: a bright state `s` coupled with uniform
/// strength `vbar` to a ladder of `2m + 1` dark states spaced `epsilon`
/// apart. The total state count is always `n = 2m + 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    m: usize,
    vbar: f64,
    epsilon: f64,
    omega_s: f64,
}

impl ModelParams {
    /// Validates and builds a parameter set.
    ///
    /// `m` is accepted as a signed integer so that out-of-range input from
    /// config files maps to a distinct error rather than a parse artifact.
    pub fn new(m: i64, vbar: f64, epsilon: f64, omega_s: f64) -> Result<Self, ModelError> {
        if !vbar.is_finite() {
            return Err(ModelError::NonFinite("vbar"));
        }
        if !epsilon.is_finite() {
            return Err(ModelError::NonFinite("epsilon"));
        }
        if !omega_s.is_finite() {
            return Err(ModelError::NonFinite("omega_s"));
        }
        if m < 0 {
            return Err(ModelError::NegativeHalfWidth);
        }
        if epsilon <= 0.0 {
            return Err(ModelError::NonPositiveSpacing);
        }
        if vbar < 0.0 {
            return Err(ModelError::NegativeCoupling);
        }
        Ok(Self {
            m: m as usize,
            vbar,
            epsilon,
            omega_s,
        })
    }

    /// Half-width of the dark-state ladder; `k` runs over `-m..=m`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Total number of states, `2m + 2`.
    pub fn n(&self) -> usize {
        2 * self.m + 2
    }

    /// Reduced transition matrix element between the bright state and every
    /// dark state.
    pub fn vbar(&self) -> f64 {
        self.vbar
    }

    /// Spacing between successive dark levels.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Bright-state frequency (zero in the canonical setup; kept
    /// configurable because a uniform shift must only change a global
    /// phase).
    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    /// True when `idx` addresses a state of this instance.
    pub fn contains(&self, idx: StateIndex) -> bool {
        match idx {
            StateIndex::Bright => true,
            StateIndex::Dark(k) => k.unsigned_abs() as usize <= self.m,
        }
    }

    /// Level frequency of a state: `omega_s` for the bright state,
    /// `omega_s + k * epsilon` for dark state `k`.
    ///
    /// Panics if `idx` is out of range for this instance.
    pub fn level_frequency(&self, idx: StateIndex) -> f64 {
        assert!(self.contains(idx), "state index {idx:?} out of range");
        match idx {
            StateIndex::Bright => self.omega_s,
            StateIndex::Dark(k) => self.omega_s + k as f64 * self.epsilon,
        }
    }

    /// All state indices in canonical order: bright first, then dark
    /// `k = -m..=m` ascending.
    pub fn state_indices(&self) -> impl Iterator<Item = StateIndex> {
        let m = self.m as i64;
        std::iter::once(StateIndex::Bright).chain((-m..=m).map(StateIndex::Dark))
    }

    /// Assembles the structural arrowhead form of the coupled Hamiltonian.
    pub fn hamiltonian(&self) -> ArrowheadHamiltonian {
        let diag = self.state_indices().map(|idx| self.level_frequency(idx)).collect();
        ArrowheadHamiltonian {
            diag,
            coupling: self.vbar,
        }
    }

    /// Continuum-limit exponential decay constant, `2 pi vbar^2 / epsilon`.
    pub fn golden_rule_gamma(&self) -> f64 {
        2.0 * PI * self.vbar * self.vbar / self.epsilon
    }
}

/// Identifies one state: the initially occupied bright state `s`, or dark
/// state `k` with `k` in `[-m, m]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateIndex {
    Bright,
    Dark(i64),
}

impl StateIndex {
    /// Position of this state in the canonical vector layout (bright at 0,
    /// dark `k` at `k + m + 1`).
    ///
    /// Panics if the index is out of range for half-width `m`.
    pub fn offset(&self, m: usize) -> usize {
        match *self {
            StateIndex::Bright => 0,
            StateIndex::Dark(k) => {
                assert!(k.unsigned_abs() as usize <= m, "dark index {k} out of range");
                (k + m as i64 + 1) as usize
            }
        }
    }
}

impl std::fmt::Display for StateIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateIndex::Bright => write!(f, "s"),
            StateIndex::Dark(k) => write!(f, "k{k}"),
        }
    }
}

/// Structural form of the coupled Hamiltonian: a diagonal of level
/// frequencies plus one uniform coupling between the bright entry and every
/// dark entry. Dark states never couple to each other, so the dense matrix
/// is never needed outside test oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowheadHamiltonian {
    diag: Vec<f64>,
    coupling: f64,
}

impl ArrowheadHamiltonian {
    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Diagonal in canonical order: `omega_s` first, then the dark levels
    /// `k = -m..=m` ascending.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// The uniform bright-dark matrix element.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }
}
