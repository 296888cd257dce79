//! JSON scenario configuration.
//!
//! Unknown keys are rejected and every error names the offending key path.
//! Input file paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::files::{ingest_trace, read_input_table, read_phase_table, read_spectrum, SpectrumFile};
use super::IoError;
use crate::lineshape::{
    fit_lineshape, make_filter_response, FilterResponse, FitOptions, FitResult, LineshapeParams,
    PhaseModel, PhaseSpec, TraceKind, TransmissionTrace,
};
use crate::noise::SqueezeParams;
use crate::scenario::{FrequencyGrid, InputNoiseSpec, LoStrategy, ScenarioConfig};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input: InputSection,
    pub filter: FilterSection,
    pub grid: GridSection,
    pub lo: LoSection,
    #[serde(default)]
    pub exclude_bands_hz: Vec<[f64; 2]>,
    #[serde(default)]
    pub overlays: BTreeMap<String, String>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub constant: Option<ConstantInput>,
    /// CSV with `frequency_hz,v_min_db,v_max_db,angle_rad`.
    pub table: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantInput {
    pub v_min_db: f64,
    pub v_max_db: f64,
    #[serde(default)]
    pub angle_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub lineshape: Option<LineshapeParams>,
    pub trace: Option<TraceSource>,
    pub synthetic: Option<SyntheticSource>,
    #[serde(default = "default_phase_model")]
    pub phase_model: PhaseModel,
    /// CSV with `frequency_hz,theta_rad` for the `table` phase model.
    pub phase_table: Option<String>,
    /// Filter domain; defaults to the top of the grid.
    pub max_omega_hz: Option<f64>,
}

fn default_phase_model() -> PhaseModel {
    PhaseModel::Zero
}

/// A measured trace, fitted before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSource {
    pub path: String,
    #[serde(default)]
    pub kind: TraceKind,
    pub init: Option<LineshapeParams>,
}

/// A trace generated from known parameters plus seeded Gaussian noise, then fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub lineshape: LineshapeParams,
    pub span_hz: f64,
    pub points: usize,
    #[serde(default)]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    FixedAngle,
    TrackMinimum,
    TrackMaximum,
    Scan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoSection {
    pub strategy: StrategyName,
    pub angle_rad: Option<f64>,
    pub theta_samples: Option<usize>,
    #[serde(default)]
    pub anchors_hz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

/// Default number of angles for scan configs that do not set one.
pub const DEFAULT_THETA_SAMPLES: usize = 64;

/// A scenario ready to run, plus what was learned while building it.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub scenario: ScenarioConfig,
    pub fit: Option<FitResult>,
    pub synthetic_trace: Option<TransmissionTrace>,
    pub anchors_hz: Vec<f64>,
    pub overlays: BTreeMap<String, SpectrumFile>,
    pub output_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(path, &text)
    }

    /// Parses JSON text; `path` is only used in messages.
    pub fn parse(path: &Path, text: &str) -> Result<Self, IoError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let at = e.path().to_string();
            IoError::config(path, format!("at '{at}': {}", e.inner()))
        })
    }

    fn strategy(&self, path: &Path) -> Result<LoStrategy, IoError> {
        let lo = &self.lo;
        let stray = |key: &str| {
            IoError::config(
                path,
                format!("at 'lo.{key}': not used by strategy {:?}", lo.strategy),
            )
        };
        let strategy = match lo.strategy {
            StrategyName::FixedAngle => LoStrategy::FixedAngle {
                angle_rad: lo.angle_rad.ok_or_else(|| {
                    IoError::config(path, "at 'lo.angle_rad': required for fixed_angle")
                })?,
            },
            StrategyName::TrackMinimum => LoStrategy::TrackMinimum,
            StrategyName::TrackMaximum => LoStrategy::TrackMaximum,
            StrategyName::Scan => LoStrategy::Scan {
                theta_samples: lo.theta_samples.unwrap_or(DEFAULT_THETA_SAMPLES),
            },
        };
        if lo.angle_rad.is_some() && lo.strategy != StrategyName::FixedAngle {
            return Err(stray("angle_rad"));
        }
        if lo.theta_samples.is_some() && lo.strategy != StrategyName::Scan {
            return Err(stray("theta_samples"));
        }
        Ok(strategy)
    }

    /// Resolves files, fits traces and assembles the scenario.
    pub fn build(&self, config_path: &Path, seed: u64) -> Result<BuiltScenario, Error> {
        let base = config_path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &str| base.join(p);

        let input = match (&self.input.constant, &self.input.table) {
            (Some(c), None) => InputNoiseSpec::Constant(SqueezeParams::from_db(
                c.v_min_db,
                c.v_max_db,
                c.angle_rad,
            )?),
            (None, Some(t)) => InputNoiseSpec::Tabulated(read_input_table(&resolve(t))?),
            _ => {
                return Err(IoError::config(
                    config_path,
                    "at 'input': give exactly one of 'constant' or 'table'",
                )
                .into())
            }
        };

        let g = &self.grid;
        let grid = FrequencyGrid::linear(g.start_hz, g.stop_hz, g.points)?;
        let max_omega = self.filter.max_omega_hz.unwrap_or(grid.max());

        let (params, fit, synthetic_trace) = self.filter_params(config_path, &resolve, seed)?;
        let phase = match (self.filter.phase_model, &self.filter.phase_table) {
            (PhaseModel::Zero, None) => PhaseSpec::Zero,
            (PhaseModel::Minimum, None) => PhaseSpec::Minimum,
            (PhaseModel::Table, Some(p)) => PhaseSpec::Explicit(read_phase_table(&resolve(p))?),
            (PhaseModel::Table, None) => {
                return Err(IoError::config(
                    config_path,
                    "at 'filter.phase_table': required for phase_model 'table'",
                )
                .into())
            }
            (_, Some(_)) => {
                return Err(IoError::config(
                    config_path,
                    "at 'filter.phase_table': only valid with phase_model 'table'",
                )
                .into())
            }
        };
        let filter: FilterResponse = make_filter_response(&params, phase, max_omega)?;

        let mut scenario = ScenarioConfig::new(input, filter, grid, self.strategy(config_path)?)?;
        for (k, band) in self.exclude_bands_hz.iter().enumerate() {
            if !(band[0] <= band[1]) {
                return Err(IoError::config(
                    config_path,
                    format!("at 'exclude_bands_hz[{k}]': need [low, high]"),
                )
                .into());
            }
            scenario.excluded_bands.push((band[0], band[1]));
        }
        scenario.metadata = self.metadata.clone();

        let overlays = self
            .overlays
            .iter()
            .map(|(name, p)| Ok((name.clone(), read_spectrum(&resolve(p))?)))
            .collect::<Result<_, IoError>>()?;

        Ok(BuiltScenario {
            scenario,
            fit,
            synthetic_trace,
            anchors_hz: self.lo.anchors_hz.clone(),
            overlays,
            output_dir: self.output.dir.as_ref().map(PathBuf::from),
        })
    }

    #[allow(clippy::type_complexity)]
    fn filter_params(
        &self,
        config_path: &Path,
        resolve: &dyn Fn(&str) -> PathBuf,
        seed: u64,
    ) -> Result<
        (
            LineshapeParams,
            Option<FitResult>,
            Option<TransmissionTrace>,
        ),
        Error,
    > {
        let f = &self.filter;
        match (&f.lineshape, &f.trace, &f.synthetic) {
            (Some(p), None, None) => {
                let p = LineshapeParams::new(p.a_sym, p.b_asym, p.c_bg, p.gamma, p.delta0)?;
                Ok((p, None, None))
            }
            (None, Some(t), None) => {
                let trace = ingest_trace(&resolve(&t.path), t.kind)?;
                let fit = fit_lineshape(&trace, t.init.as_ref(), &FitOptions::default())?;
                Ok((fit.params, Some(fit), None))
            }
            (None, None, Some(s)) => {
                let trace = synthesize_noisy(s, seed)?;
                let fit = fit_lineshape(&trace, None, &FitOptions::default())?;
                Ok((fit.params, Some(fit), Some(trace)))
            }
            _ => Err(IoError::config(
                config_path,
                "at 'filter': give exactly one of 'lineshape', 'trace' or 'synthetic'",
            )
            .into()),
        }
    }
}

/// Samples a lineshape over `±span_hz` and adds seeded Gaussian noise.
pub fn synthesize_noisy(source: &SyntheticSource, seed: u64) -> Result<TransmissionTrace, Error> {
    let clean = TransmissionTrace::synthesize(&source.lineshape, source.span_hz, source.points)?;
    if source.noise_sigma == 0.0 {
        return Ok(clean);
    }
    let noise = Normal::new(0.0, source.noise_sigma)
        .map_err(|e| Error::InvalidArgument(format!("noise_sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = clean
        .transmission()
        .iter()
        .map(|t| (t + noise.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    Ok(TransmissionTrace::new(
        clean.detuning().to_vec(),
        noisy,
        TraceKind::Amplitude,
    )?)
}
