//! Squeezed-vacuum quadrature noise through frequency-dependent atomic filters.
//!
//! The crate models Gaussian sideband noise as 2x2 quadrature covariances
//! ([`noise`]), describes an EIT transmission window by an empirical
//! Lorentzian lineshape that can be fitted and phase-completed
//! ([`lineshape`]), and combines both into predicted homodyne noise spectra
//! ([`scenario`]). File formats and the command-line front end live in
//! [`io`] and [`cli`].

pub mod cli;
mod interp;
pub mod io;
pub mod lineshape;
pub mod noise;
pub mod scenario;

use thiserror::Error;

pub use lineshape::{
    eval_lineshape, fit_lineshape, make_filter_response, minimum_phase, sideband_pair,
    FilterResponse, LineshapeParams, PhaseModel, PhaseSpec, TransmissionTrace,
};
pub use noise::{
    apply_rotation, db_to_variance, eq4_propagate, general_propagate, homodyne_variance,
    make_covariance, min_max_quadratures, rotation_angle, variance_to_db, QuadratureCovariance,
    SidebandTransmission, SqueezeParams,
};
pub use scenario::{angle_tracking, phase_scan, predict_spectrum, NoiseSpectrum, ScenarioConfig};

/// Any failure surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Noise(#[from] noise::NoiseError),
    #[error(transparent)]
    Lineshape(#[from] lineshape::LineshapeError),
    #[error("fit failed: {0}")]
    Fit(#[from] lineshape::FitError),
    #[error(transparent)]
    Response(#[from] lineshape::ResponseError),
    #[error("minimum-phase reconstruction failed: {0}")]
    MinimumPhase(#[from] lineshape::MinimumPhaseError),
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Broad failure class, mapped to process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Unreadable files, malformed input, schema violations.
    Input,
    /// Fits that fail, reconstructions that cannot run, scenarios that cannot be evaluated.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use lineshape::ResponseError as R;
        match self {
            Error::Io(_) | Error::Noise(_) | Error::Lineshape(_) | Error::InvalidArgument(_) => {
                ErrorKind::Input
            }
            Error::Response(R::Lineshape(_) | R::BadTable(_) | R::TableCoverage { .. }) => {
                ErrorKind::Input
            }
            Error::Fit(_) | Error::Response(_) | Error::MinimumPhase(_) | Error::Scenario(_) => {
                ErrorKind::Numerical
            }
        }
    }
}
