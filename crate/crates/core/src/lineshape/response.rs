use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::kk::{minimum_phase, MinimumPhaseError};
use super::{sideband_pair, LineshapeError, LineshapeParams};
use crate::interp::interpolate;
use crate::noise::{NoiseError, SidebandTransmission};

/// Analytic windows are sampled out to this many half widths for phase
/// reconstruction, when the window stays positive that far.
const MIN_PHASE_SPAN_HWHM: f64 = 50.0;
const MIN_PHASE_STEPS_PER_HWHM: f64 = 20.0;
const MIN_PHASE_MAX_HALF_POINTS: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error(transparent)]
    Lineshape(#[from] LineshapeError),
    #[error("minimum-phase reconstruction failed: {0}")]
    MinimumPhase(#[from] MinimumPhaseError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("sideband frequency {omega} Hz outside filter domain [0, {max_omega}] Hz")]
    OutOfDomain { omega: f64, max_omega: f64 },
    #[error("phase table covers ±{have} Hz but the filter domain needs ±{needed} Hz")]
    TableCoverage { needed: f64, have: f64 },
    #[error("invalid table: {0}")]
    BadTable(String),
    #[error("{0} phase model needs a finite filter domain")]
    UnboundedDomain(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModel {
    /// Sideband phases neglected.
    Zero,
    /// Phase reconstructed from the magnitude by the Hilbert transform.
    Minimum,
    /// Phases supplied by the caller.
    Table,
}

impl PhaseModel {
    pub fn name(self) -> &'static str {
        match self {
            PhaseModel::Zero => "zero",
            PhaseModel::Minimum => "minimum",
            PhaseModel::Table => "table",
        }
    }
}

/// Phase `Θ` against signed sideband offset, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable {
    offsets: Vec<f64>,
    theta: Vec<f64>,
}

impl PhaseTable {
    pub fn new(offsets: Vec<f64>, theta: Vec<f64>) -> Result<Self, ResponseError> {
        check_table(&offsets, &theta)?;
        Ok(Self { offsets, theta })
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Largest `Ω` with both `±Ω` inside the table.
    pub fn coverage(&self) -> f64 {
        (-self.offsets[0]).min(self.offsets[self.offsets.len() - 1])
    }

    pub fn at(&self, offset: f64) -> Option<f64> {
        interpolate(&self.offsets, &self.theta, offset)
    }
}

fn check_table(offsets: &[f64], values: &[f64]) -> Result<(), ResponseError> {
    if offsets.len() != values.len() || offsets.len() < 2 {
        return Err(ResponseError::BadTable(format!(
            "need matching columns with at least 2 rows (got {} and {})",
            offsets.len(),
            values.len()
        )));
    }
    if let Some(k) = (1..offsets.len()).find(|&k| offsets[k] <= offsets[k - 1]) {
        return Err(ResponseError::BadTable(format!(
            "offsets not strictly increasing at row {k}"
        )));
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(ResponseError::BadTable(format!(
            "non-finite value at row {k}"
        )));
    }
    Ok(())
}

/// How the phase of a response is to be completed.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSpec {
    Zero,
    Minimum,
    Explicit(PhaseTable),
}

#[derive(Debug, Clone, PartialEq)]
enum Magnitude {
    Lineshape(LineshapeParams),
    Tabulated { offsets: Vec<f64>, values: Vec<f64> },
}

impl Magnitude {
    fn pair(&self, omega: f64) -> (f64, f64) {
        match self {
            Magnitude::Lineshape(p) => {
                let (tp, tm) = sideband_pair(p, omega);
                (tp.clamp(0.0, 1.0), tm.clamp(0.0, 1.0))
            }
            Magnitude::Tabulated { offsets, values } => (
                interpolate(offsets, values, omega).unwrap_or(f64::NAN),
                interpolate(offsets, values, -omega).unwrap_or(f64::NAN),
            ),
        }
    }
}

/// Complex transmission of a filter for sideband frequencies `0 ≤ Ω ≤ max_omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResponse {
    magnitude: Magnitude,
    phase: Option<PhaseTable>,
    model: PhaseModel,
    max_omega: f64,
}

/// Binds a lineshape to a phase model on the domain `0 ≤ Ω ≤ max_omega`.
///
/// The window is checked for passivity on that domain. `max_omega` may be
/// infinite only for the zero-phase model.
pub fn make_filter_response(
    params: &LineshapeParams,
    phase: PhaseSpec,
    max_omega: f64,
) -> Result<FilterResponse, ResponseError> {
    if !(max_omega >= 0.0) {
        return Err(ResponseError::OutOfDomain {
            omega: max_omega,
            max_omega,
        });
    }
    params.validate_domain(max_omega)?;
    let (model, table) = match phase {
        PhaseSpec::Zero => (PhaseModel::Zero, None),
        PhaseSpec::Minimum => {
            if !max_omega.is_finite() {
                return Err(ResponseError::UnboundedDomain("minimum"));
            }
            (
                PhaseModel::Minimum,
                Some(lineshape_minimum_phase(params, max_omega)?),
            )
        }
        PhaseSpec::Explicit(table) => {
            if !max_omega.is_finite() {
                return Err(ResponseError::UnboundedDomain("table"));
            }
            (PhaseModel::Table, Some(covering(table, max_omega)?))
        }
    };
    Ok(FilterResponse {
        magnitude: Magnitude::Lineshape(*params),
        phase: table,
        model,
        max_omega,
    })
}

fn covering(table: PhaseTable, max_omega: f64) -> Result<PhaseTable, ResponseError> {
    let have = table.coverage();
    if have < max_omega {
        return Err(ResponseError::TableCoverage {
            needed: max_omega,
            have,
        });
    }
    Ok(table)
}

fn lineshape_minimum_phase(
    params: &LineshapeParams,
    max_omega: f64,
) -> Result<PhaseTable, ResponseError> {
    let (global_min, _) = params.range_on(f64::NEG_INFINITY, f64::INFINITY);
    let wide = MIN_PHASE_SPAN_HWHM * params.gamma + params.delta0.abs();
    let span = if global_min > 0.0 {
        max_omega.max(wide)
    } else {
        max_omega
    };
    let step = (params.gamma / MIN_PHASE_STEPS_PER_HWHM).min(span / 200.0);
    let half = ((span / step).ceil() as usize).clamp(1, MIN_PHASE_MAX_HALF_POINTS);
    let step = span / half as f64;
    let offsets: Vec<f64> = (-(half as i64)..=half as i64)
        .map(|k| k as f64 * step)
        .collect();
    let magnitude: Vec<f64> = offsets
        .iter()
        .map(|&o| super::eval_lineshape(params, o))
        .collect();
    let theta = minimum_phase(&offsets, &magnitude)?;
    PhaseTable::new(offsets, theta)
}

impl FilterResponse {
    /// Response built from tabulated magnitudes at signed offsets.
    pub fn tabulated(
        offsets: Vec<f64>,
        magnitude: Vec<f64>,
        phase: PhaseSpec,
    ) -> Result<Self, ResponseError> {
        check_table(&offsets, &magnitude)?;
        if let Some(k) = magnitude.iter().position(|m| !(0.0..=1.0).contains(m)) {
            return Err(ResponseError::BadTable(format!(
                "magnitude {} at row {k} outside [0, 1]",
                magnitude[k]
            )));
        }
        let max_omega = (-offsets[0]).min(offsets[offsets.len() - 1]);
        if !(max_omega >= 0.0) {
            return Err(ResponseError::BadTable(
                "offsets must bracket the carrier".into(),
            ));
        }
        let (model, table) = match phase {
            PhaseSpec::Zero => (PhaseModel::Zero, None),
            PhaseSpec::Minimum => {
                let theta = minimum_phase(&offsets, &magnitude)?;
                (
                    PhaseModel::Minimum,
                    Some(PhaseTable::new(offsets.clone(), theta)?),
                )
            }
            PhaseSpec::Explicit(t) => (PhaseModel::Table, Some(covering(t, max_omega)?)),
        };
        Ok(Self {
            magnitude: Magnitude::Tabulated {
                offsets,
                values: magnitude,
            },
            phase: table,
            model,
            max_omega,
        })
    }

    /// Sideband transmission at `Ω` inside the declared domain.
    pub fn eval(&self, omega: f64) -> Result<SidebandTransmission, ResponseError> {
        if !(omega >= 0.0 && omega <= self.max_omega) {
            return Err(ResponseError::OutOfDomain {
                omega,
                max_omega: self.max_omega,
            });
        }
        let (t_plus, t_minus) = self.magnitude.pair(omega);
        let (theta_plus, theta_minus) = match &self.phase {
            None => (0.0, 0.0),
            Some(table) => (
                table.at(omega).unwrap_or(f64::NAN),
                table.at(-omega).unwrap_or(f64::NAN),
            ),
        };
        Ok(SidebandTransmission::new(
            t_plus,
            t_minus,
            theta_plus,
            theta_minus,
        )?)
    }

    pub fn phase_model(&self) -> PhaseModel {
        self.model
    }

    pub fn max_omega(&self) -> f64 {
        self.max_omega
    }

    pub fn params(&self) -> Option<&LineshapeParams> {
        match &self.magnitude {
            Magnitude::Lineshape(p) => Some(p),
            Magnitude::Tabulated { .. } => None,
        }
    }

    pub fn phase_table(&self) -> Option<&PhaseTable> {
        self.phase.as_ref()
    }
}
