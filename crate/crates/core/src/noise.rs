//! Gaussian sideband-quadrature noise and its transformation by passive,
//! frequency-dependent filters.
//!
//! States are represented by the symmetric second-moment matrix of the
//! amplitude (`X+`) and phase (`X-`) quadratures at one sideband frequency,
//! normalised so that vacuum (shot noise) is the identity.
//!
//! Angle conventions: a homodyne measurement at local-oscillator angle `θ`
//! records `X_θ = cos θ·X+ + sin θ·X-`, and all rotations use the standard
//! counter-clockwise matrix `R(α) = [[cos α, -sin α], [sin α, cos α]]`.
//! A lossless filter with sideband phases `Θ±` therefore turns the state by
//! `φ = (Θ+ + Θ-)/2`, moving the squeezed quadrature from `θ` to `θ + φ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used by [`QuadratureCovariance::is_physical`].
pub const PHYSICAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("variance must be positive and finite, got {0}")]
    NonPositiveVariance(f64),
    #[error("minimum variance {v_min} exceeds maximum variance {v_max}")]
    InvertedSqueeze { v_min: f64, v_max: f64 },
    #[error("amplitude transmission {name}={value} outside [0, 1]")]
    NotPassive { name: &'static str, value: f64 },
    #[error(
        "diagonal propagation needs c_cross = 0 (got {0}); use general_propagate for correlated inputs"
    )]
    CorrelatedInput(f64),
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
}

/// 2x2 symmetric covariance of `(X+, X-)` at one sideband frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureCovariance {
    pub v_plus: f64,
    pub v_minus: f64,
    pub c_cross: f64,
}

impl QuadratureCovariance {
    pub const VACUUM: Self = Self {
        v_plus: 1.0,
        v_minus: 1.0,
        c_cross: 0.0,
    };

    pub fn new(v_plus: f64, v_minus: f64, c_cross: f64) -> Result<Self, NoiseError> {
        for v in [v_plus, v_minus] {
            if !(v.is_finite() && v > 0.0) {
                return Err(NoiseError::NonPositiveVariance(v));
            }
        }
        if !c_cross.is_finite() {
            return Err(NoiseError::NonFinite("c_cross"));
        }
        Ok(Self {
            v_plus,
            v_minus,
            c_cross,
        })
    }

    pub fn diagonal(v_plus: f64, v_minus: f64) -> Result<Self, NoiseError> {
        Self::new(v_plus, v_minus, 0.0)
    }

    pub fn determinant(&self) -> f64 {
        self.v_plus * self.v_minus - self.c_cross * self.c_cross
    }

    /// Uncertainty-relation check `det ≥ 1` within [`PHYSICAL_TOLERANCE`].
    ///
    /// Measured states that carry uncorrected technical noise may fail this;
    /// it is advisory and never enforced by constructors.
    pub fn is_physical(&self) -> bool {
        self.determinant() >= 1.0 - PHYSICAL_TOLERANCE
    }

    /// The quadrature-swapped state `J·V·Jᵀ` with `J` a quarter turn.
    fn swapped(&self) -> Self {
        Self {
            v_plus: self.v_minus,
            v_minus: self.v_plus,
            c_cross: -self.c_cross,
        }
    }
}

/// Input squeezing as eigenvalues plus the orientation of the squeezed quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub v_min: f64,
    pub v_max: f64,
    /// Homodyne angle of the minimum-noise quadrature, in `[0, π)`.
    pub angle: f64,
}

impl SqueezeParams {
    pub fn new(v_min: f64, v_max: f64, angle: f64) -> Result<Self, NoiseError> {
        for v in [v_min, v_max] {
            if !(v.is_finite() && v > 0.0) {
                return Err(NoiseError::NonPositiveVariance(v));
            }
        }
        if v_min > v_max {
            return Err(NoiseError::InvertedSqueeze { v_min, v_max });
        }
        if !angle.is_finite() {
            return Err(NoiseError::NonFinite("angle"));
        }
        Ok(Self {
            v_min,
            v_max,
            angle: normalize_half_turn(angle),
        })
    }

    pub fn from_db(v_min_db: f64, v_max_db: f64, angle: f64) -> Result<Self, NoiseError> {
        Self::new(db_to_variance(v_min_db), db_to_variance(v_max_db), angle)
    }
}

/// Complex sideband transmission `T± e^{iΘ±}` of a filter at `±Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[repr(C)]
pub struct SidebandTransmission {
    pub t_plus: f64,
    pub t_minus: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
}

impl SidebandTransmission {
    pub fn new(
        t_plus: f64,
        t_minus: f64,
        theta_plus: f64,
        theta_minus: f64,
    ) -> Result<Self, NoiseError> {
        check_passive("t_plus", t_plus)?;
        check_passive("t_minus", t_minus)?;
        if !theta_plus.is_finite() {
            return Err(NoiseError::NonFinite("theta_plus"));
        }
        if !theta_minus.is_finite() {
            return Err(NoiseError::NonFinite("theta_minus"));
        }
        Ok(Self {
            t_plus,
            t_minus,
            theta_plus,
            theta_minus,
        })
    }

    /// Zero-phase transmission.
    pub fn real(t_plus: f64, t_minus: f64) -> Result<Self, NoiseError> {
        Self::new(t_plus, t_minus, 0.0, 0.0)
    }

    /// `(A+, A-) = ((T+ + T-)/2, (T+ - T-)/2)`.
    pub fn mixing_amplitudes(&self) -> (f64, f64) {
        sideband_mixing(self.t_plus, self.t_minus)
    }

    /// Common-mode phase `φ`, the squeezing-angle rotation.
    pub fn rotation(&self) -> f64 {
        rotation_angle(self.theta_plus, self.theta_minus)
    }

    /// Differential phase `ψ = (Θ+ - Θ-)/2`, a pure delay for noise power.
    pub fn delay_phase(&self) -> f64 {
        0.5 * (self.theta_plus - self.theta_minus)
    }

    fn validate(&self) -> Result<(), NoiseError> {
        Self::new(self.t_plus, self.t_minus, self.theta_plus, self.theta_minus).map(|_| ())
    }
}

fn check_passive(name: &'static str, value: f64) -> Result<(), NoiseError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(NoiseError::NotPassive { name, value })
    }
}

fn sideband_mixing(t_plus: f64, t_minus: f64) -> (f64, f64) {
    (0.5 * (t_plus + t_minus), 0.5 * (t_plus - t_minus))
}

/// Wraps an angle into `[0, π)`.
pub fn normalize_half_turn(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(PI);
    // rem_euclid can round up to exactly π for tiny negative inputs
    if wrapped >= PI {
        0.0
    } else {
        wrapped + 0.0
    }
}

/// Covariance `R(angle)·diag(v_min, v_max)·R(angle)ᵀ`.
pub fn make_covariance(params: &SqueezeParams) -> Result<QuadratureCovariance, NoiseError> {
    let params = SqueezeParams::new(params.v_min, params.v_max, params.angle)?;
    let diag = QuadratureCovariance::diagonal(params.v_min, params.v_max)?;
    Ok(apply_rotation(&diag, params.angle))
}

/// The two-quadrature transfer relation for real transmissions and a
/// diagonal input, evaluated term by term.
pub fn eq4_propagate(
    t_plus: f64,
    t_minus: f64,
    v_in: &QuadratureCovariance,
) -> Result<QuadratureCovariance, NoiseError> {
    check_passive("t_plus", t_plus)?;
    check_passive("t_minus", t_minus)?;
    if v_in.c_cross != 0.0 {
        return Err(NoiseError::CorrelatedInput(v_in.c_cross));
    }
    let (a_sum, a_diff) = sideband_mixing(t_plus, t_minus);
    let (w_sum, w_diff) = (a_sum * a_sum, a_diff * a_diff);
    let vacuum = 1.0 - (w_sum + w_diff);
    Ok(QuadratureCovariance {
        v_plus: w_sum * v_in.v_plus + w_diff * v_in.v_minus + vacuum,
        v_minus: w_diff * v_in.v_plus + w_sum * v_in.v_minus + vacuum,
        c_cross: 0.0,
    })
}

/// Squeezing-angle rotation `(Θ+ + Θ-)/2`, not range-normalised.
pub fn rotation_angle(theta_plus: f64, theta_minus: f64) -> f64 {
    0.5 * (theta_plus + theta_minus)
}

/// `R(phi)·cov·R(phi)ᵀ`.
pub fn apply_rotation(cov: &QuadratureCovariance, phi: f64) -> QuadratureCovariance {
    if phi == 0.0 {
        return *cov;
    }
    let (s, c) = phi.sin_cos();
    let (vp, vm, x) = (cov.v_plus, cov.v_minus, cov.c_cross);
    QuadratureCovariance {
        v_plus: c * c * vp - 2.0 * s * c * x + s * s * vm,
        v_minus: s * s * vp + 2.0 * s * c * x + c * c * vm,
        c_cross: s * c * (vp - vm) + (c * c - s * s) * x,
    }
}

/// Propagates an arbitrary covariance through a complex sideband filter.
///
/// Each sideband is scaled by `T± e^{iΘ±}` and topped up with uncorrelated
/// vacuum. Taking the symmetrised spectral second moments gives
///
/// ```text
/// V_out = I + R(φ)·[A+²(V - I) + A-²·J(V - I)Jᵀ]·R(φ)ᵀ
/// ```
///
/// where `J` swaps the quadratures. The differential phase `ψ` cancels.
pub fn general_propagate(
    t: &SidebandTransmission,
    v_in: &QuadratureCovariance,
) -> Result<QuadratureCovariance, NoiseError> {
    t.validate()?;
    let phi = t.rotation();
    if t.t_plus == 1.0 && t.t_minus == 1.0 {
        return Ok(apply_rotation(v_in, phi));
    }
    let (a_sum, a_diff) = t.mixing_amplitudes();
    let (w_sum, w_diff) = (a_sum * a_sum, a_diff * a_diff);
    let excess = QuadratureCovariance {
        v_plus: v_in.v_plus - 1.0,
        v_minus: v_in.v_minus - 1.0,
        c_cross: v_in.c_cross,
    };
    let swapped = excess.swapped();
    let mixed = QuadratureCovariance {
        v_plus: w_sum * excess.v_plus + w_diff * swapped.v_plus,
        v_minus: w_sum * excess.v_minus + w_diff * swapped.v_minus,
        c_cross: w_sum * excess.c_cross + w_diff * swapped.c_cross,
    };
    let turned = apply_rotation(&mixed, phi);
    Ok(QuadratureCovariance {
        v_plus: 1.0 + turned.v_plus,
        v_minus: 1.0 + turned.v_minus,
        c_cross: turned.c_cross,
    })
}

/// Noise recorded by a homodyne detector at local-oscillator angle `lo_angle`.
pub fn homodyne_variance(cov: &QuadratureCovariance, lo_angle: f64) -> f64 {
    let (s, c) = lo_angle.sin_cos();
    c * c * cov.v_plus + s * s * cov.v_minus + 2.0 * s * c * cov.c_cross
}

/// Eigen-decomposition of a quadrature covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureExtremes {
    pub theta_min: f64,
    pub v_min: f64,
    pub theta_max: f64,
    pub v_max: f64,
}

/// Minimum- and maximum-noise quadratures, angles in `[0, π)`.
///
/// A rotation-invariant covariance reports `theta_min = 0`.
pub fn min_max_quadratures(cov: &QuadratureCovariance) -> QuadratureExtremes {
    let mean = 0.5 * (cov.v_plus + cov.v_minus);
    let half_diff = 0.5 * (cov.v_plus - cov.v_minus);
    let radius = half_diff.hypot(cov.c_cross);
    // homodyne_variance(θ) = mean + half_diff·cos2θ + c·sin2θ
    let theta_min = if radius == 0.0 {
        0.0
    } else {
        normalize_half_turn(0.5 * (-cov.c_cross).atan2(-half_diff))
    };
    QuadratureExtremes {
        theta_min,
        v_min: mean - radius,
        theta_max: normalize_half_turn(theta_min + 0.5 * PI),
        v_max: mean + radius,
    }
}

/// Noise power in dB relative to shot noise.
pub fn variance_to_db(v: f64) -> Result<f64, NoiseError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(NoiseError::NonPositiveVariance(v));
    }
    Ok(10.0 * v.log10())
}

pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
