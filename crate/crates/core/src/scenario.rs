//! Predicted noise spectra for a squeezed input passing through a filter,
//! as seen by a homodyne detector with a chosen local-oscillator strategy.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::interpolate;
use crate::lineshape::{FilterResponse, PhaseModel, ResponseError};
use crate::noise::{
    general_propagate, homodyne_variance, make_covariance, min_max_quadratures,
    normalize_half_turn, variance_to_db, NoiseError, QuadratureCovariance, SqueezeParams,
};

/// Fewest local-oscillator angles accepted by [`phase_scan`].
pub const MIN_THETA_SAMPLES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error("invalid frequency grid: {0}")]
    BadGrid(String),
    #[error("invalid input noise table: {0}")]
    BadInputTable(String),
    #[error("{omega} Hz outside the input noise table [{lo}, {hi}] Hz")]
    Interpolation { omega: f64, lo: f64, hi: f64 },
    #[error("filter domain ends at {max_omega} Hz but the grid reaches {needed} Hz")]
    FilterDomain { needed: f64, max_omega: f64 },
    #[error("phase scan needs at least {MIN_THETA_SAMPLES} angles, got {0}")]
    TooFewThetaSamples(usize),
    #[error("zero-phase filter cannot rotate the squeezing angle; use predict_spectrum")]
    ZeroPhaseFilter,
    #[error("scan strategy has no single spectrum; use phase_scan")]
    ScanStrategy,
}

/// Sideband frequencies in Hz: non-empty, positive, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, ScenarioError> {
        if points.is_empty() {
            return Err(ScenarioError::BadGrid("no points".into()));
        }
        if let Some(k) = points.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(ScenarioError::BadGrid(format!(
                "point {k} ({}) is not a positive frequency",
                points[k]
            )));
        }
        if let Some(k) = (1..points.len()).find(|&k| points[k] <= points[k - 1]) {
            return Err(ScenarioError::BadGrid(format!(
                "not strictly increasing at point {k}"
            )));
        }
        Ok(Self { points })
    }

    pub fn linear(start: f64, stop: f64, points: usize) -> Result<Self, ScenarioError> {
        if points == 0 || (points > 1 && !(stop > start)) {
            return Err(ScenarioError::BadGrid(format!(
                "need start < stop and at least one point (got {start}..{stop}, {points})"
            )));
        }
        Self::new(crate::lineshape::uniform_grid(start, stop, points))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point closest to `omega`.
    pub fn nearest(&self, omega: f64) -> usize {
        let hi = self.points.partition_point(|&p| p < omega);
        if hi == 0 {
            0
        } else if hi == self.points.len() || omega - self.points[hi - 1] <= self.points[hi] - omega
        {
            hi - 1
        } else {
            hi
        }
    }
}

/// Per-frequency input squeezing, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    frequencies: Vec<f64>,
    v_min_db: Vec<f64>,
    v_max_db: Vec<f64>,
    angle: Vec<f64>,
}

impl InputTable {
    pub fn new(
        frequencies: Vec<f64>,
        v_min_db: Vec<f64>,
        v_max_db: Vec<f64>,
        angle: Vec<f64>,
    ) -> Result<Self, ScenarioError> {
        let n = frequencies.len();
        if n == 0 || v_min_db.len() != n || v_max_db.len() != n || angle.len() != n {
            return Err(ScenarioError::BadInputTable(
                "columns must be non-empty and of equal length".into(),
            ));
        }
        if let Some(k) = (1..n).find(|&k| frequencies[k] <= frequencies[k - 1]) {
            return Err(ScenarioError::BadInputTable(format!(
                "frequency not strictly increasing at row {k}"
            )));
        }
        for k in 0..n {
            if v_min_db[k] > v_max_db[k] {
                return Err(ScenarioError::BadInputTable(format!(
                    "row {k}: minimum noise {} dB above maximum {} dB",
                    v_min_db[k], v_max_db[k]
                )));
            }
            if ![frequencies[k], v_min_db[k], v_max_db[k], angle[k]]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(ScenarioError::BadInputTable(format!(
                    "row {k}: non-finite value"
                )));
            }
        }
        Ok(Self {
            frequencies,
            v_min_db,
            v_max_db,
            angle,
        })
    }

    pub fn at(&self, omega: f64) -> Result<SqueezeParams, ScenarioError> {
        let f = &self.frequencies;
        let out_of_range = || ScenarioError::Interpolation {
            omega,
            lo: f[0],
            hi: f[f.len() - 1],
        };
        let lo = interpolate(f, &self.v_min_db, omega).ok_or_else(out_of_range)?;
        let hi = interpolate(f, &self.v_max_db, omega).ok_or_else(out_of_range)?;
        let angle = interpolate(f, &self.angle, omega).ok_or_else(out_of_range)?;
        Ok(SqueezeParams::from_db(lo, hi, angle)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputNoiseSpec {
    Constant(SqueezeParams),
    Tabulated(InputTable),
}

impl InputNoiseSpec {
    pub fn at(&self, omega: f64) -> Result<SqueezeParams, ScenarioError> {
        match self {
            InputNoiseSpec::Constant(p) => Ok(*p),
            InputNoiseSpec::Tabulated(t) => t.at(omega),
        }
    }
}

/// Local-oscillator phase handling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoStrategy {
    FixedAngle { angle_rad: f64 },
    TrackMinimum,
    TrackMaximum,
    Scan { theta_samples: usize },
}

impl LoStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            LoStrategy::FixedAngle { .. } => "fixed_angle",
            LoStrategy::TrackMinimum => "track_minimum",
            LoStrategy::TrackMaximum => "track_maximum",
            LoStrategy::Scan { .. } => "scan",
        }
    }
}

/// Noise power in dB relative to shot noise against sideband frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    pub frequencies: Vec<f64>,
    pub noise_db: Vec<f64>,
    /// False for points inside an excluded band.
    pub valid: Vec<bool>,
    pub label: String,
    pub lo_strategy: LoStrategy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub input: InputNoiseSpec,
    pub filter: FilterResponse,
    pub grid: FrequencyGrid,
    pub lo_strategy: LoStrategy,
    /// Bands `[lo, hi]` in Hz whose points are flagged invalid in outputs.
    pub excluded_bands: Vec<(f64, f64)>,
    /// Descriptive only (powers, temperatures, window descriptions).
    pub metadata: BTreeMap<String, String>,
}

impl ScenarioConfig {
    pub fn new(
        input: InputNoiseSpec,
        filter: FilterResponse,
        grid: FrequencyGrid,
        lo_strategy: LoStrategy,
    ) -> Result<Self, ScenarioError> {
        let config = Self {
            input,
            filter,
            grid,
            lo_strategy,
            excluded_bands: Vec::new(),
            metadata: BTreeMap::new(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.grid.is_empty() {
            return Err(ScenarioError::BadGrid("no points".into()));
        }
        if self.grid.max() > self.filter.max_omega() {
            return Err(ScenarioError::FilterDomain {
                needed: self.grid.max(),
                max_omega: self.filter.max_omega(),
            });
        }
        for &omega in self.grid.points() {
            self.input.at(omega)?;
        }
        Ok(())
    }

    fn mask(&self) -> Vec<bool> {
        self.grid
            .points()
            .iter()
            .map(|&f| {
                !self
                    .excluded_bands
                    .iter()
                    .any(|&(lo, hi)| f >= lo && f <= hi)
            })
            .collect()
    }

    fn spectrum(&self, label: &str, lo_strategy: LoStrategy, noise_db: Vec<f64>) -> NoiseSpectrum {
        NoiseSpectrum {
            frequencies: self.grid.points().to_vec(),
            noise_db,
            valid: self.mask(),
            label: label.to_string(),
            lo_strategy,
        }
    }
}

/// Input and output covariances at one sideband frequency.
pub fn propagate_at(
    config: &ScenarioConfig,
    omega: f64,
) -> Result<(QuadratureCovariance, QuadratureCovariance), ScenarioError> {
    let input = make_covariance(&config.input.at(omega)?)?;
    let t = config.filter.eval(omega)?;
    let output = general_propagate(&t, &input)?;
    Ok((input, output))
}

fn propagate_grid(
    config: &ScenarioConfig,
) -> Result<Vec<(QuadratureCovariance, QuadratureCovariance)>, ScenarioError> {
    config.validate()?;
    config
        .grid
        .points()
        .iter()
        .map(|&omega| propagate_at(config, omega))
        .collect()
}

fn to_db(values: impl Iterator<Item = f64>) -> Result<Vec<f64>, ScenarioError> {
    values
        .map(|v| variance_to_db(v).map_err(ScenarioError::from))
        .collect()
}

/// The selected spectrum plus the input/expected extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedSpectra {
    pub selected: NoiseSpectrum,
    pub input_max: NoiseSpectrum,
    pub input_min: NoiseSpectrum,
    pub output_max: NoiseSpectrum,
    pub output_min: NoiseSpectrum,
}

/// Predicts the detected noise at every grid frequency.
pub fn predict_spectrum(config: &ScenarioConfig) -> Result<PredictedSpectra, ScenarioError> {
    if matches!(config.lo_strategy, LoStrategy::Scan { .. }) {
        return Err(ScenarioError::ScanStrategy);
    }
    let states = propagate_grid(config)?;
    let inputs: Vec<_> = states.iter().map(|(i, _)| min_max_quadratures(i)).collect();
    let outputs: Vec<_> = states.iter().map(|(_, o)| min_max_quadratures(o)).collect();

    let selected = match config.lo_strategy {
        LoStrategy::FixedAngle { angle_rad } => {
            to_db(states.iter().map(|(_, o)| homodyne_variance(o, angle_rad)))?
        }
        LoStrategy::TrackMinimum => to_db(outputs.iter().map(|e| e.v_min))?,
        LoStrategy::TrackMaximum => to_db(outputs.iter().map(|e| e.v_max))?,
        LoStrategy::Scan { .. } => unreachable!(),
    };

    Ok(PredictedSpectra {
        selected: config.spectrum("output", config.lo_strategy, selected),
        input_max: config.spectrum(
            "input max. noise",
            LoStrategy::TrackMaximum,
            to_db(inputs.iter().map(|e| e.v_max))?,
        ),
        input_min: config.spectrum(
            "input min. noise",
            LoStrategy::TrackMinimum,
            to_db(inputs.iter().map(|e| e.v_min))?,
        ),
        output_max: config.spectrum(
            "expected max. noise",
            LoStrategy::TrackMaximum,
            to_db(outputs.iter().map(|e| e.v_max))?,
        ),
        output_min: config.spectrum(
            "expected min. noise",
            LoStrategy::TrackMinimum,
            to_db(outputs.iter().map(|e| e.v_min))?,
        ),
    })
}

/// Noise over a uniform sweep of local-oscillator angles.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScan {
    /// Angles in `[0, π)`, endpoint excluded.
    pub thetas: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// `noise_db[i][j]` at `thetas[i]`, `frequencies[j]`.
    pub noise_db: Vec<Vec<f64>>,
    pub envelope_min: NoiseSpectrum,
    pub envelope_max: NoiseSpectrum,
}

pub fn phase_scan(
    config: &ScenarioConfig,
    theta_samples: usize,
) -> Result<PhaseScan, ScenarioError> {
    if theta_samples < MIN_THETA_SAMPLES {
        return Err(ScenarioError::TooFewThetaSamples(theta_samples));
    }
    let states = propagate_grid(config)?;
    let thetas: Vec<f64> = (0..theta_samples)
        .map(|k| PI * k as f64 / theta_samples as f64)
        .collect();
    let noise_db = thetas
        .iter()
        .map(|&theta| to_db(states.iter().map(|(_, o)| homodyne_variance(o, theta))))
        .collect::<Result<Vec<_>, _>>()?;

    let columns = states.len();
    let fold = |pick: fn(f64, f64) -> f64, start: f64| -> Vec<f64> {
        (0..columns)
            .map(|j| noise_db.iter().map(|row| row[j]).fold(start, pick))
            .collect()
    };
    let strategy = LoStrategy::Scan { theta_samples };
    let envelope_min = config.spectrum(
        "scan envelope min.",
        strategy,
        fold(f64::min, f64::INFINITY),
    );
    let envelope_max = config.spectrum(
        "scan envelope max.",
        strategy,
        fold(f64::max, f64::NEG_INFINITY),
    );
    Ok(PhaseScan {
        thetas,
        frequencies: config.grid.points().to_vec(),
        noise_db,
        envelope_min,
        envelope_max,
    })
}

/// Fixed-angle spectrum locked at the optimum of one anchor frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSpectrum {
    pub anchor_hz: f64,
    /// Grid frequency nearest the requested anchor.
    pub grid_hz: f64,
    pub grid_index: usize,
    pub angle_rad: f64,
    pub spectrum: NoiseSpectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleTracking {
    pub frequencies: Vec<f64>,
    /// Local-oscillator angle of least output noise, in `[0, π)`.
    pub optimal_angle: Vec<f64>,
    pub tracked_min: NoiseSpectrum,
    pub anchors: Vec<AnchorSpectrum>,
}

/// Follows the frequency-dependent squeezing angle of the output.
pub fn angle_tracking(
    config: &ScenarioConfig,
    anchors_hz: &[f64],
) -> Result<AngleTracking, ScenarioError> {
    if config.filter.phase_model() == PhaseModel::Zero {
        return Err(ScenarioError::ZeroPhaseFilter);
    }
    let states = propagate_grid(config)?;
    let extremes: Vec<_> = states.iter().map(|(_, o)| min_max_quadratures(o)).collect();
    let optimal_angle: Vec<f64> = extremes.iter().map(|e| e.theta_min).collect();
    let tracked_min = config.spectrum(
        "tracked min. noise",
        LoStrategy::TrackMinimum,
        to_db(extremes.iter().map(|e| e.v_min))?,
    );

    let anchors = anchors_hz
        .iter()
        .map(|&anchor_hz| {
            let grid_index = config.grid.nearest(anchor_hz);
            let angle_rad = optimal_angle[grid_index];
            let noise = to_db(states.iter().map(|(_, o)| homodyne_variance(o, angle_rad)))?;
            let label = format!("LO locked for minimum noise at {:.3} MHz", anchor_hz / 1e6);
            Ok(AnchorSpectrum {
                anchor_hz,
                grid_hz: config.grid.points()[grid_index],
                grid_index,
                angle_rad,
                spectrum: config.spectrum(&label, LoStrategy::FixedAngle { angle_rad }, noise),
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    Ok(AngleTracking {
        frequencies: config.grid.points().to_vec(),
        optimal_angle,
        tracked_min,
        anchors,
    })
}

/// Peak-to-peak spread of a sequence of quadrature angles, treating angles
/// that differ by π as equal.
pub fn half_turn_spread(angles: &[f64]) -> f64 {
    let Some(&first) = angles.first() else {
        return 0.0;
    };
    let mut unwrapped = first;
    let (mut lo, mut hi) = (first, first);
    for pair in angles.windows(2) {
        let step = normalize_half_turn(pair[1] - pair[0] + 0.5 * PI) - 0.5 * PI;
        unwrapped += step;
        lo = lo.min(unwrapped);
        hi = hi.max(unwrapped);
    }
    hi - lo
}
