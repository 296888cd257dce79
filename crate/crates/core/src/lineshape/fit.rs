//! Damped least-squares (Levenberg-Marquardt) fit of the window to a trace.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{LineshapeError, LineshapeParams, TransmissionTrace, TRACE_RANGE_SLACK};

type Vec5 = SVector<f64, 5>;
type Mat5 = SMatrix<f64, 5, 5>;

/// Peak-to-peak spread below which a trace carries no resonance.
const MIN_CONTRAST: f64 = 1e-9;
const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the residual sum by less than this fraction.
    pub relative_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub sum_squared_residuals: f64,
    pub rms_residual: f64,
    /// One-sigma parameter uncertainties from the residual-scaled curvature.
    /// Absent when the trace has no more points than parameters.
    pub std_errors: Option<LineshapeParams>,
    pub initial: LineshapeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: LineshapeParams,
    pub diagnostics: FitDiagnostics,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("half width gamma is unidentifiable: {0}")]
    Unidentifiable(String),
    #[error("no convergence after {iterations} iterations (rms residual {rms_residual:.3e})")]
    NotConverged {
        iterations: usize,
        best: LineshapeParams,
        rms_residual: f64,
    },
    #[error("fitted window leaves [0, 1] on the trace ({min:.6}..{max:.6})")]
    NotPassive {
        params: LineshapeParams,
        min: f64,
        max: f64,
    },
    #[error(transparent)]
    Lineshape(#[from] LineshapeError),
}

/// Fits `A, B, C, Γ, δ0` by least squares.
///
/// Without `init`, the start point is `C = min`, `A = max - min`, `B = 0`,
/// `δ0` at the peak and `Γ` from the half-maximum crossings. `Γ` is fitted
/// on a log scale, which keeps it positive.
pub fn fit_lineshape(
    trace: &TransmissionTrace,
    init: Option<&LineshapeParams>,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    let (t_min, t_max) = trace
        .transmission()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        });
    if t_max - t_min <= MIN_CONTRAST {
        return Err(FitError::Unidentifiable(format!(
            "trace is flat at {t_min} (no resonance)"
        )));
    }
    let initial = match init {
        Some(p) => {
            p.check()?;
            *p
        }
        None => initial_guess(trace, t_min, t_max),
    };

    let problem = Problem::new(trace, initial.gamma);
    let mut p = problem.encode(&initial);
    let mut ssr = problem.ssr(&p);
    if !ssr.is_finite() {
        return Err(FitError::Unidentifiable(
            "initial parameters give non-finite residuals".into(),
        ));
    }
    let floor = f64::EPSILON * f64::EPSILON * problem.signal_power() * trace.len() as f64;
    let mut lambda = LAMBDA_START;
    let mut normal = problem.normal_equations(&p);
    let mut converged = ssr <= floor;
    let mut iterations = 0;

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let (jtj, jtr) = &normal;
        let mut damped = *jtj;
        for k in 0..5 {
            damped[(k, k)] += lambda * jtj[(k, k)].max(f64::MIN_POSITIVE);
        }
        let Some(chol) = damped.cholesky() else {
            lambda *= 10.0;
            converged = lambda > LAMBDA_MAX;
            continue;
        };
        let step = chol.solve(&(-jtr));
        let candidate = p + step;
        let trial = problem.ssr(&candidate);
        if trial.is_finite() && trial < ssr {
            let gain = (ssr - trial) / ssr;
            p = candidate;
            ssr = trial;
            lambda = (lambda / 10.0).max(1e-12);
            normal = problem.normal_equations(&p);
            converged = gain < options.relative_tolerance || ssr <= floor;
        } else {
            lambda *= 10.0;
            let tiny_step = step.norm() <= 1e-15 * (1.0 + p.norm());
            // no descent left at machine precision
            converged = lambda > LAMBDA_MAX || tiny_step;
        }
    }

    let params = problem.decode(&p);
    let n = trace.len();
    let rms_residual = (ssr / n as f64).sqrt();
    if !converged {
        return Err(FitError::NotConverged {
            iterations,
            best: params,
            rms_residual,
        });
    }

    let x_lo = params.delta0 + trace.detuning()[0];
    let x_hi = params.delta0 + trace.detuning()[n - 1];
    let (min, max) = params.range_on(x_lo, x_hi);
    if min < -TRACE_RANGE_SLACK || max > 1.0 + TRACE_RANGE_SLACK {
        return Err(FitError::NotPassive { params, min, max });
    }

    Ok(FitResult {
        params,
        diagnostics: FitDiagnostics {
            iterations,
            sum_squared_residuals: ssr,
            rms_residual,
            std_errors: problem.std_errors(&p, ssr),
            initial,
        },
    })
}

fn initial_guess(trace: &TransmissionTrace, t_min: f64, t_max: f64) -> LineshapeParams {
    let x = trace.detuning();
    let y = trace.transmission();
    let peak = y
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v > y[best] { k } else { best });
    let half = 0.5 * (t_min + t_max);

    let crossing = |from: usize, to: usize| -> f64 {
        let (x0, x1, y0, y1) = (x[from], x[to], y[from], y[to]);
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };
    let right = (peak + 1..x.len())
        .find(|&k| y[k] <= half)
        .map(|k| crossing(k - 1, k) - x[peak]);
    let left = (0..peak)
        .rev()
        .find(|&k| y[k] <= half)
        .map(|k| x[peak] - crossing(k + 1, k));
    let span = x[x.len() - 1] - x[0];
    let gamma = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(w), None) | (None, Some(w)) => w,
        (None, None) => 0.25 * span,
    }
    .max(span * 1e-6);

    LineshapeParams {
        a_sym: t_max - t_min,
        b_asym: 0.0,
        c_bg: t_min,
        gamma,
        delta0: -x[peak],
    }
}

/// Residuals in scaled coordinates: frequencies divided by `scale`,
/// parameters `[A, B, C, ln(Γ/scale), δ0/scale]`.
struct Problem<'a> {
    trace: &'a TransmissionTrace,
    scale: f64,
}

impl<'a> Problem<'a> {
    fn new(trace: &'a TransmissionTrace, scale: f64) -> Self {
        Self { trace, scale }
    }

    fn encode(&self, p: &LineshapeParams) -> Vec5 {
        Vec5::new(
            p.a_sym,
            p.b_asym,
            p.c_bg,
            (p.gamma / self.scale).ln(),
            p.delta0 / self.scale,
        )
    }

    fn decode(&self, p: &Vec5) -> LineshapeParams {
        LineshapeParams {
            a_sym: p[0],
            b_asym: p[1],
            c_bg: p[2],
            gamma: p[3].exp() * self.scale,
            delta0: p[4] * self.scale,
        }
    }

    fn signal_power(&self) -> f64 {
        let y = self.trace.transmission();
        y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
    }

    /// Model value and gradient at one sample.
    fn model(&self, p: &Vec5, detuning: f64) -> (f64, Vec5) {
        let (a, b, c) = (p[0], p[1], p[2]);
        let gamma = p[3].exp();
        let u = (p[4] + detuning / self.scale) / gamma;
        let denom = 1.0 + u * u;
        let value = (a + b * u) / denom + c;
        // d/du of (A + B·u)/(1 + u²)
        let du = (b - 2.0 * a * u - b * u * u) / (denom * denom);
        let grad = Vec5::new(1.0 / denom, u / denom, 1.0, -u * du, du / gamma);
        (value, grad)
    }

    fn ssr(&self, p: &Vec5) -> f64 {
        self.trace
            .detuning()
            .iter()
            .zip(self.trace.transmission())
            .map(|(&x, &y)| {
                let r = self.model(p, x).0 - y;
                r * r
            })
            .sum()
    }

    fn normal_equations(&self, p: &Vec5) -> (Mat5, Vec5) {
        let mut jtj = Mat5::zeros();
        let mut jtr = Vec5::zeros();
        for (&x, &y) in self.trace.detuning().iter().zip(self.trace.transmission()) {
            let (value, grad) = self.model(p, x);
            jtj += grad * grad.transpose();
            jtr += grad * (value - y);
        }
        (jtj, jtr)
    }

    fn std_errors(&self, p: &Vec5, ssr: f64) -> Option<LineshapeParams> {
        let dof = self.trace.len().checked_sub(5).filter(|&d| d > 0)?;
        let (jtj, _) = self.normal_equations(p);
        let cov = jtj.try_inverse()? * (ssr / dof as f64);
        let sd = |k: usize| cov[(k, k)].max(0.0).sqrt();
        let gamma = p[3].exp() * self.scale;
        Some(LineshapeParams {
            a_sym: sd(0),
            b_asym: sd(1),
            c_bg: sd(2),
            gamma: gamma * sd(3),
            delta0: self.scale * sd(4),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::TraceKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const MHZ: f64 = 1e6;

    fn reference() -> LineshapeParams {
        LineshapeParams::new(0.24, 0.03, 0.28, 1.0 * MHZ, 0.1 * MHZ).unwrap()
    }

    fn rel(got: f64, want: f64) -> f64 {
        ((got - want) / want).abs()
    }

    fn assert_close(got: &LineshapeParams, want: &LineshapeParams, tol: f64) {
        for (g, w, name) in [
            (got.a_sym, want.a_sym, "A"),
            (got.b_asym, want.b_asym, "B"),
            (got.c_bg, want.c_bg, "C"),
            (got.gamma, want.gamma, "gamma"),
            (got.delta0, want.delta0, "delta0"),
        ] {
            assert!(rel(g, w) <= tol, "{name}: got {g}, want {w}");
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let truth = reference();
        let trace = TransmissionTrace::synthesize(&truth, 5.0 * MHZ, 201).unwrap();
        let fit = fit_lineshape(&trace, None, &FitOptions::default()).unwrap();
        assert_close(&fit.params, &truth, 1e-6);
        assert!(fit.diagnostics.rms_residual < 1e-9);
    }

    #[test]
    fn residual_never_increases() {
        // a deliberately poor start still lands on the truth
        let truth = reference();
        let trace = TransmissionTrace::synthesize(&truth, 5.0 * MHZ, 201).unwrap();
        let init = LineshapeParams::new(0.1, -0.05, 0.2, 3.0 * MHZ, -0.5 * MHZ).unwrap();
        let fit = fit_lineshape(&trace, Some(&init), &FitOptions::default()).unwrap();
        assert_close(&fit.params, &truth, 1e-6);
    }

    #[test]
    fn noisy_fit_reports_uncertainties() {
        let truth = reference();
        let clean = TransmissionTrace::synthesize(&truth, 5.0 * MHZ, 201).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let noisy: Vec<f64> = clean
            .transmission()
            .iter()
            .map(|t| t + noise.sample(&mut rng))
            .collect();
        let trace =
            TransmissionTrace::new(clean.detuning().to_vec(), noisy, TraceKind::Amplitude).unwrap();
        let fit = fit_lineshape(&trace, None, &FitOptions::default()).unwrap();
        let se = fit.diagnostics.std_errors.unwrap();
        // 5-sigma agreement with the truth
        assert!((fit.params.a_sym - truth.a_sym).abs() < 5.0 * se.a_sym);
        assert!((fit.params.gamma - truth.gamma).abs() < 5.0 * se.gamma);
        assert!((fit.params.delta0 - truth.delta0).abs() < 5.0 * se.delta0);
        assert!((fit.diagnostics.rms_residual - 0.01).abs() < 0.002);
    }

    #[test]
    fn flat_trace_is_unidentifiable() {
        let d: Vec<f64> = (0..50).map(|k| k as f64 * 1e5).collect();
        let trace = TransmissionTrace::new(d, vec![0.3; 50], TraceKind::Amplitude).unwrap();
        let err = fit_lineshape(&trace, None, &FitOptions::default()).unwrap_err();
        assert!(matches!(err, FitError::Unidentifiable(_)));
        assert!(err.to_string().contains("gamma"));
    }

    #[test]
    fn iteration_cap_reports_best_so_far() {
        let truth = reference();
        let trace = TransmissionTrace::synthesize(&truth, 5.0 * MHZ, 201).unwrap();
        let init = LineshapeParams::new(0.1, -0.05, 0.2, 3.0 * MHZ, -0.5 * MHZ).unwrap();
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        match fit_lineshape(&trace, Some(&init), &opts) {
            Err(FitError::NotConverged {
                iterations,
                rms_residual,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert!(rms_residual.is_finite());
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn heuristic_start_is_close() {
        let truth = LineshapeParams::new(0.24, 0.0, 0.28, 1.0 * MHZ, 0.0).unwrap();
        let trace = TransmissionTrace::synthesize(&truth, 5.0 * MHZ, 201).unwrap();
        let t = trace.transmission();
        let (lo, hi) = t
            .iter()
            .fold((1.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let guess = initial_guess(&trace, lo, hi);
        assert_eq!(guess.delta0, 0.0);
        assert_eq!(guess.b_asym, 0.0);
        assert!(rel(guess.c_bg, truth.c_bg) < 0.05);
        // half maximum above the trace minimum sits slightly outside Γ
        assert!(rel(guess.gamma, truth.gamma) < 0.1);
    }
}
