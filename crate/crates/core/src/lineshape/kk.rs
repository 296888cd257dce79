//! Minimum-phase completion of a measured transmission magnitude.
//!
//! For a causal filter with no zeros in the upper half of the complex
//! frequency plane, `ln T = ln|T| + iΘ` is analytic there and the phase is the
//! Hilbert transform of the log-magnitude, `Θ = H[ln|T|]` with
//! `H[f](x) = (1/π) p.v.∫ f(y)/(x - y) dy`. Phases follow the `e^{-iωt}`
//! time convention used for the sideband operators, so a one-pole response
//! `1/(1 - iωτ)` has phase `+atan(ωτ)`.

use rustfft::{num_complex::Complex, FftPlanner};
use thiserror::Error;

/// The padded grid spans this many times the measured span; samples beyond
/// the measured edges repeat the edge values.
pub const PADDING_FACTOR: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinimumPhaseError {
    #[error("grid and magnitude lengths differ ({grid} vs {magnitude})")]
    LengthMismatch { grid: usize, magnitude: usize },
    #[error("need an odd number of at least 3 samples centred on the carrier, got {0}")]
    BadLength(usize),
    #[error("magnitude {value} at index {index} is not positive (log singularity)")]
    NonPositive { index: usize, value: f64 },
    #[error("grid is not uniform at index {index}; resample onto a uniform grid first")]
    NonUniform { index: usize },
    #[error("grid is not symmetric about the carrier at index {index}; resample onto a symmetric grid first")]
    NotSymmetric { index: usize },
}

/// Reconstructs the minimum phase `Θ(Ω)` from `|T|(Ω)`.
///
/// `offsets` must be uniform, strictly increasing and symmetric about zero
/// (`-NΔ, ..., 0, ..., NΔ`). For even magnitudes the result is odd in `Ω`
/// to rounding error.
pub fn minimum_phase(offsets: &[f64], magnitude: &[f64]) -> Result<Vec<f64>, MinimumPhaseError> {
    check_grid(offsets, magnitude)?;
    let log_mag: Vec<f64> = magnitude.iter().map(|m| m.ln()).collect();
    Ok(periodic_hilbert(&log_mag, PADDING_FACTOR))
}

fn check_grid(offsets: &[f64], magnitude: &[f64]) -> Result<(), MinimumPhaseError> {
    let len = offsets.len();
    if len != magnitude.len() {
        return Err(MinimumPhaseError::LengthMismatch {
            grid: len,
            magnitude: magnitude.len(),
        });
    }
    if len < 3 || len.is_multiple_of(2) {
        return Err(MinimumPhaseError::BadLength(len));
    }
    if let Some((index, &value)) = magnitude
        .iter()
        .enumerate()
        .find(|(_, m)| !(m.is_finite() && **m > 0.0))
    {
        return Err(MinimumPhaseError::NonPositive { index, value });
    }
    let step = (offsets[len - 1] - offsets[0]) / (len - 1) as f64;
    if !(step.is_finite() && step > 0.0) {
        return Err(MinimumPhaseError::NonUniform { index: 1 });
    }
    let tol = 1e-6 * step;
    for k in 1..len {
        if ((offsets[k] - offsets[k - 1]) - step).abs() > tol {
            return Err(MinimumPhaseError::NonUniform { index: k });
        }
    }
    for k in 0..=len / 2 {
        if (offsets[k] + offsets[len - 1 - k]).abs() > tol {
            return Err(MinimumPhaseError::NotSymmetric { index: k });
        }
    }
    Ok(())
}

/// Discrete Hilbert transform of samples on a symmetric grid, after padding
/// with constant tails to `padding` times the span.
fn periodic_hilbert(samples: &[f64], padding: usize) -> Vec<f64> {
    let n = samples.len() / 2;
    let half = (padding * n).max(n);
    let size = 2 * half + 1;
    let (left_edge, right_edge) = (samples[0], samples[2 * n]);

    // zero offset at index 0, negative offsets wrapped to the end
    let mut buf = vec![Complex::new(0.0, 0.0); size];
    buf[0].re = samples[n];
    for k in 1..=half {
        buf[k].re = if k <= n { samples[n + k] } else { right_edge };
        buf[size - k].re = if k <= n { samples[n - k] } else { left_edge };
    }

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(size).process(&mut buf);
    buf[0] = Complex::new(0.0, 0.0);
    for (k, bin) in buf.iter_mut().enumerate().skip(1) {
        // -i·sgn(k): positive bins below size/2, negative above (size is odd)
        *bin = if k <= half {
            Complex::new(bin.im, -bin.re)
        } else {
            Complex::new(-bin.im, bin.re)
        };
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let norm = 1.0 / size as f64;

    (0..samples.len())
        .map(|j| {
            let idx = if j >= n { j - n } else { size - (n - j) };
            buf[idx].re * norm
        })
        .collect()
}
