//! Empirical EIT transmission window: evaluation, least-squares fitting and
//! phase completion into a complex [`FilterResponse`].
//!
//! The window is a symmetric plus an antisymmetric Lorentzian on a constant
//! background,
//!
//! ```text
//! T(x) = A·Γ²/(Γ² + x²) + B·Γx/(Γ² + x²) + C,     x = δ0 + Ω
//! ```
//!
//! with `Ω` the signed offset from the squeezed carrier, so the two sidebands
//! see `T(δ0 ± Ω)`. Frequencies are in hertz.

mod fit;
mod kk;
mod response;

pub use fit::{fit_lineshape, FitDiagnostics, FitError, FitOptions, FitResult};
pub use kk::{minimum_phase, MinimumPhaseError, PADDING_FACTOR};
pub use response::{
    make_filter_response, FilterResponse, PhaseModel, PhaseSpec, PhaseTable, ResponseError,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed above 1 (and below 0) when ingesting measured transmission.
pub const TRACE_RANGE_SLACK: f64 = 1e-6;
/// Shortest trace accepted for fitting.
pub const MIN_TRACE_POINTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LineshapeError {
    #[error("half width gamma must be positive and finite, got {0} Hz")]
    NonPositiveWidth(f64),
    #[error("non-finite lineshape parameter {0}")]
    NonFinite(&'static str),
    #[error(
        "transmission leaves [0, 1] on detuning [{lo_hz}, {hi_hz}] Hz (range {min:.6}..{max:.6})"
    )]
    NotPassive {
        lo_hz: f64,
        hi_hz: f64,
        min: f64,
        max: f64,
    },
    #[error("trace has {0} points, need at least {MIN_TRACE_POINTS}")]
    TooShort(usize),
    #[error("trace columns differ in length ({detuning} detunings, {transmission} transmissions)")]
    LengthMismatch {
        detuning: usize,
        transmission: usize,
    },
    #[error("detuning not strictly increasing at row {row}")]
    NotIncreasing { row: usize },
    #[error("transmission {value} at row {row} outside [0, 1]")]
    OutOfRange { row: usize, value: f64 },
    #[error("non-finite value at row {row}")]
    NonFiniteSample { row: usize },
}

/// Parameters of the empirical window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineshapeParams {
    /// Amplitude of the symmetric Lorentzian.
    pub a_sym: f64,
    /// Amplitude of the antisymmetric (dispersive) term.
    pub b_asym: f64,
    /// Background transmission from incoherent absorption.
    pub c_bg: f64,
    /// Half width at half maximum, Hz.
    #[serde(rename = "gamma_hz")]
    pub gamma: f64,
    /// Resonance shift relative to the squeezed carrier, Hz.
    #[serde(rename = "delta0_hz")]
    pub delta0: f64,
}

impl LineshapeParams {
    pub fn new(
        a_sym: f64,
        b_asym: f64,
        c_bg: f64,
        gamma: f64,
        delta0: f64,
    ) -> Result<Self, LineshapeError> {
        let p = Self {
            a_sym,
            b_asym,
            c_bg,
            gamma,
            delta0,
        };
        p.check()?;
        Ok(p)
    }

    /// Symmetric window from its peak and background transmission and full width.
    pub fn symmetric(peak: f64, background: f64, fwhm: f64) -> Result<Self, LineshapeError> {
        Self::new(peak - background, 0.0, background, 0.5 * fwhm, 0.0)
    }

    pub(crate) fn check(&self) -> Result<(), LineshapeError> {
        for (name, v) in [
            ("a_sym", self.a_sym),
            ("b_asym", self.b_asym),
            ("c_bg", self.c_bg),
            ("delta0", self.delta0),
        ] {
            if !v.is_finite() {
                return Err(LineshapeError::NonFinite(name));
            }
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(LineshapeError::NonPositiveWidth(self.gamma));
        }
        Ok(())
    }

    /// Window value at the raw Lorentzian argument `x` (already including `δ0`).
    pub fn at_argument(&self, x: f64) -> f64 {
        let g2 = self.gamma * self.gamma;
        let denom = g2 + x * x;
        // the ratio first, so the centre evaluates to exactly A + C
        self.a_sym * (g2 / denom) + self.b_asym * (self.gamma * x / denom) + self.c_bg
    }

    /// Extremes of the window over raw arguments in `[x_lo, x_hi]`.
    ///
    /// Infinite bounds are allowed; the window tends to `C` in both tails.
    pub fn range_on(&self, x_lo: f64, x_hi: f64) -> (f64, f64) {
        let mut candidates: Vec<f64> = Vec::with_capacity(4);
        for x in [x_lo, x_hi] {
            candidates.push(if x.is_finite() {
                self.at_argument(x)
            } else {
                self.c_bg
            });
        }
        // stationary points of (A + B·u)/(1 + u²): B·u² + 2A·u - B = 0
        let (a, b) = (self.a_sym, self.b_asym);
        let mut stationary = Vec::with_capacity(2);
        if b == 0.0 {
            stationary.push(0.0);
        } else {
            let root = a.hypot(b);
            stationary.push((-a + root) / b);
            stationary.push((-a - root) / b);
        }
        for u in stationary {
            let x = u * self.gamma;
            if x >= x_lo && x <= x_hi {
                candidates.push(self.at_argument(x));
            }
        }
        candidates
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Checks passivity for sideband offsets `|Ω| ≤ max_omega`.
    pub fn validate_domain(&self, max_omega: f64) -> Result<(), LineshapeError> {
        self.check()?;
        let (lo_hz, hi_hz) = (self.delta0 - max_omega, self.delta0 + max_omega);
        let (min, max) = self.range_on(lo_hz, hi_hz);
        if min < 0.0 || max > 1.0 {
            return Err(LineshapeError::NotPassive {
                lo_hz,
                hi_hz,
                min,
                max,
            });
        }
        Ok(())
    }
}

/// Transmission at signed offset `detuning` from the carrier.
pub fn eval_lineshape(params: &LineshapeParams, detuning: f64) -> f64 {
    params.at_argument(params.delta0 + detuning)
}

/// Amplitude transmissions `(T+, T-)` at `δ0 + Ω` and `δ0 - Ω`.
pub fn sideband_pair(params: &LineshapeParams, omega: f64) -> (f64, f64) {
    (
        eval_lineshape(params, omega),
        eval_lineshape(params, -omega),
    )
}

/// Calibration of a measured transmission trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    #[default]
    Amplitude,
    /// Power transmission; converted to amplitude by a square root.
    Intensity,
}

/// Measured transmission against detuning from the squeezed carrier.
///
/// Values are always stored as amplitude transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionTrace {
    detuning: Vec<f64>,
    transmission: Vec<f64>,
    kind: TraceKind,
}

impl TransmissionTrace {
    /// Validates the samples and converts intensity traces to amplitude.
    ///
    /// Row numbers in errors are zero-based sample indices.
    pub fn new(
        detuning: Vec<f64>,
        transmission: Vec<f64>,
        kind: TraceKind,
    ) -> Result<Self, LineshapeError> {
        if detuning.len() != transmission.len() {
            return Err(LineshapeError::LengthMismatch {
                detuning: detuning.len(),
                transmission: transmission.len(),
            });
        }
        if detuning.len() < MIN_TRACE_POINTS {
            return Err(LineshapeError::TooShort(detuning.len()));
        }
        for (row, (&d, &t)) in detuning.iter().zip(&transmission).enumerate() {
            if !(d.is_finite() && t.is_finite()) {
                return Err(LineshapeError::NonFiniteSample { row });
            }
            if !(-TRACE_RANGE_SLACK..=1.0 + TRACE_RANGE_SLACK).contains(&t) {
                return Err(LineshapeError::OutOfRange { row, value: t });
            }
            if row > 0 && d <= detuning[row - 1] {
                return Err(LineshapeError::NotIncreasing { row });
            }
        }
        let transmission = match kind {
            TraceKind::Amplitude => transmission,
            TraceKind::Intensity => transmission
                .into_iter()
                .map(|t| t.max(0.0).sqrt())
                .collect(),
        };
        Ok(Self {
            detuning,
            transmission,
            kind,
        })
    }

    /// Noise-free trace sampled from a lineshape on a uniform grid.
    pub fn synthesize(
        params: &LineshapeParams,
        span: f64,
        points: usize,
    ) -> Result<Self, LineshapeError> {
        let detuning = uniform_grid(-span, span, points);
        let transmission = detuning
            .iter()
            .map(|&d| eval_lineshape(params, d))
            .collect();
        Self::new(detuning, transmission, TraceKind::Amplitude)
    }

    pub fn detuning(&self) -> &[f64] {
        &self.detuning
    }

    pub fn transmission(&self) -> &[f64] {
        &self.transmission
    }

    pub fn kind(&self) -> TraceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.detuning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detuning.is_empty()
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub(crate) fn uniform_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|k| {
                    if k == n - 1 {
                        stop
                    } else {
                        start + step * k as f64
                    }
                })
                .collect()
        }
    }
}
