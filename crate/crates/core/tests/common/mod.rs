#![allow(dead_code)]

use rustfft::num_complex::Complex64;
use squeezefilter::{QuadratureCovariance, SidebandTransmission};

/// Output covariance from the complex sideband transfer matrix.
///
/// With `τ± = T± e^{iΘ±}` the quadrature pair maps through
/// `M = [[p, i m], [-i m, p]]`, `p = (τ+ + τ-*)/2`, `m = (τ+ - τ-*)/2`.
/// Symmetrized moments keep `Re(M V M†)`; each sideband adds vacuum in
/// proportion to what it lost.
pub fn transfer_matrix_oracle(t: &SidebandTransmission, v: &QuadratureCovariance) -> [f64; 3] {
    let tau_p = Complex64::from_polar(t.t_plus, t.theta_plus);
    let tau_m = Complex64::from_polar(t.t_minus, t.theta_minus).conj();
    let p = (tau_p + tau_m) * 0.5;
    let m = (tau_p - tau_m) * 0.5;
    let i = Complex64::i();
    let mm = [[p, i * m], [-i * m, p]];
    let vv = [
        [Complex64::from(v.v_plus), Complex64::from(v.c_cross)],
        [Complex64::from(v.c_cross), Complex64::from(v.v_minus)],
    ];
    let mut out = [[Complex64::from(0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    out[r][c] += mm[r][a] * vv[a][b] * mm[c][b].conj();
                }
            }
        }
    }
    let added = 1.0 - 0.5 * (t.t_plus * t.t_plus + t.t_minus * t.t_minus);
    [out[0][0].re + added, out[1][1].re + added, out[0][1].re]
}

/// Direct evaluation of the diagonal-input attenuation formula.
pub fn eq4_oracle(t_plus: f64, t_minus: f64, v_plus: f64, v_minus: f64) -> (f64, f64) {
    let ap = 0.5 * (t_plus + t_minus);
    let am = 0.5 * (t_plus - t_minus);
    let vacuum = 1.0 - (ap * ap + am * am);
    (
        ap * ap * v_plus + am * am * v_minus + vacuum,
        am * am * v_plus + ap * ap * v_minus + vacuum,
    )
}

/// Window value written out term by term.
pub fn window(a: f64, b: f64, c: f64, gamma: f64, x: f64) -> f64 {
    let d = gamma * gamma + x * x;
    a * gamma * gamma / d + b * gamma * x / d + c
}

/// Brute-force minimum over a dense angle grid of `[0, π)`.
pub fn scanned_min(v: &QuadratureCovariance, samples: usize) -> (f64, f64) {
    (0..samples)
        .map(|k| {
            let th = std::f64::consts::PI * k as f64 / samples as f64;
            let (s, c) = th.sin_cos();
            (
                c * c * v.v_plus + s * s * v.v_minus + 2.0 * s * c * v.c_cross,
                th,
            )
        })
        .fold(
            (f64::INFINITY, 0.0),
            |acc, x| if x.0 < acc.0 { x } else { acc },
        )
}
