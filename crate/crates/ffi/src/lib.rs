//! C interface to the squeezefilter toolkit.
//!
//! Every function returns a [`SqzStatus`]; on failure the message is
//! available from [`sqz_last_error`] on the calling thread. Filters and
//! scenarios are opaque handles released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use squeezefilter::io::ConfigFile;
use squeezefilter::lineshape::{FitOptions, TraceKind};
use squeezefilter::scenario::LoStrategy;
use squeezefilter::{
    Error, ErrorKind, FilterResponse, LineshapeParams, PhaseSpec, QuadratureCovariance,
    ScenarioConfig, SidebandTransmission, SqueezeParams, TransmissionTrace,
};

/// Result codes. Input and numerical failures match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqzStatus {
    Ok = 0,
    InvalidInput = 1,
    Numerical = 2,
    NullPointer = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Quadrature covariance in shot-noise units.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqzCovariance {
    pub v_plus: f64,
    pub v_minus: f64,
    pub c_cross: f64,
}

/// Sideband amplitudes and phases at `+Ω` and `-Ω`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqzTransmission {
    pub t_plus: f64,
    pub t_minus: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqzExtremes {
    pub theta_min: f64,
    pub v_min: f64,
    pub theta_max: f64,
    pub v_max: f64,
}

/// Window `A Γ²/(Γ² + x²) + B Γ x/(Γ² + x²) + C` with `x = δ + δ0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqzLineshape {
    pub a_sym: f64,
    pub b_asym: f64,
    pub c_bg: f64,
    pub gamma_hz: f64,
    pub delta0_hz: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqzPhaseModel {
    Zero = 0,
    Minimum = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqzTraceKind {
    Amplitude = 0,
    Intensity = 1,
}

/// Opaque filter response.
pub struct SqzFilter(FilterResponse);

/// Opaque scenario built from a JSON configuration.
pub struct SqzScenario(ScenarioConfig);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

struct Failure(SqzStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Input => SqzStatus::InvalidInput,
            ErrorKind::Numerical => SqzStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! impl_failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

impl_failure_from!(
    squeezefilter::noise::NoiseError,
    squeezefilter::lineshape::LineshapeError,
    squeezefilter::lineshape::FitError,
    squeezefilter::lineshape::ResponseError,
    squeezefilter::lineshape::MinimumPhaseError,
    squeezefilter::scenario::ScenarioError,
    squeezefilter::io::IoError
);

fn null(name: &str) -> Failure {
    Failure(SqzStatus::NullPointer, format!("{name} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SqzStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            SqzStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SqzStatus::Panic
        }
    }
}

unsafe fn read<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(p: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(value);
    Ok(())
}

unsafe fn array<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn array_mut<'a>(p: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn to_cov(c: &SqzCovariance) -> Result<QuadratureCovariance, Failure> {
    Ok(QuadratureCovariance::new(c.v_plus, c.v_minus, c.c_cross)?)
}

fn from_cov(c: QuadratureCovariance) -> SqzCovariance {
    SqzCovariance {
        v_plus: c.v_plus,
        v_minus: c.v_minus,
        c_cross: c.c_cross,
    }
}

fn to_params(p: &SqzLineshape) -> Result<LineshapeParams, Failure> {
    Ok(LineshapeParams::new(
        p.a_sym,
        p.b_asym,
        p.c_bg,
        p.gamma_hz,
        p.delta0_hz,
    )?)
}

fn from_params(p: LineshapeParams) -> SqzLineshape {
    SqzLineshape {
        a_sym: p.a_sym,
        b_asym: p.b_asym,
        c_bg: p.c_bg,
        gamma_hz: p.gamma,
        delta0_hz: p.delta0,
    }
}

/// Message of the last failed call on this thread; empty after a success.
///
/// The pointer stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn sqz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sqz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Covariance of a squeezed state with eigenvalues `v_min`, `v_max` and
/// minimum-noise quadrature at `angle_rad`.
#[no_mangle]
pub unsafe extern "C" fn sqz_make_covariance(
    v_min: f64,
    v_max: f64,
    angle_rad: f64,
    out: *mut SqzCovariance,
) -> SqzStatus {
    guard(|| {
        let cov = squeezefilter::make_covariance(&SqueezeParams::new(v_min, v_max, angle_rad)?)?;
        write(out, "out", from_cov(cov))
    })
}

/// Rotates a covariance by `phi_rad`.
#[no_mangle]
pub unsafe extern "C" fn sqz_apply_rotation(
    cov: *const SqzCovariance,
    phi_rad: f64,
    out: *mut SqzCovariance,
) -> SqzStatus {
    guard(|| {
        let v = to_cov(read(cov, "cov")?)?;
        write(
            out,
            "out",
            from_cov(squeezefilter::apply_rotation(&v, phi_rad)),
        )
    })
}

/// Real sideband transmissions acting on a diagonal covariance.
#[no_mangle]
pub unsafe extern "C" fn sqz_eq4_propagate(
    t_plus: f64,
    t_minus: f64,
    cov: *const SqzCovariance,
    out: *mut SqzCovariance,
) -> SqzStatus {
    guard(|| {
        let v = to_cov(read(cov, "cov")?)?;
        let o = squeezefilter::eq4_propagate(t_plus, t_minus, &v)?;
        write(out, "out", from_cov(o))
    })
}

/// Complex sideband transmissions acting on any physical covariance.
#[no_mangle]
pub unsafe extern "C" fn sqz_general_propagate(
    t: *const SqzTransmission,
    cov: *const SqzCovariance,
    out: *mut SqzCovariance,
) -> SqzStatus {
    guard(|| {
        let t = read(t, "t")?;
        let t = SidebandTransmission::new(t.t_plus, t.t_minus, t.theta_plus, t.theta_minus)?;
        let v = to_cov(read(cov, "cov")?)?;
        write(
            out,
            "out",
            from_cov(squeezefilter::general_propagate(&t, &v)?),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn sqz_homodyne_variance(
    cov: *const SqzCovariance,
    lo_angle_rad: f64,
    out: *mut f64,
) -> SqzStatus {
    guard(|| {
        let v = to_cov(read(cov, "cov")?)?;
        write(
            out,
            "out",
            squeezefilter::homodyne_variance(&v, lo_angle_rad),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn sqz_min_max_quadratures(
    cov: *const SqzCovariance,
    out: *mut SqzExtremes,
) -> SqzStatus {
    guard(|| {
        let e = squeezefilter::min_max_quadratures(&to_cov(read(cov, "cov")?)?);
        write(
            out,
            "out",
            SqzExtremes {
                theta_min: e.theta_min,
                v_min: e.v_min,
                theta_max: e.theta_max,
                v_max: e.v_max,
            },
        )
    })
}

/// Builds a filter valid for sideband frequencies up to `max_omega_hz`.
#[no_mangle]
pub unsafe extern "C" fn sqz_filter_new(
    lineshape: *const SqzLineshape,
    phase_model: SqzPhaseModel,
    max_omega_hz: f64,
    out: *mut *mut SqzFilter,
) -> SqzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = to_params(read(lineshape, "lineshape")?)?;
        let spec = match phase_model {
            SqzPhaseModel::Zero => PhaseSpec::Zero,
            SqzPhaseModel::Minimum => PhaseSpec::Minimum,
        };
        let f = squeezefilter::make_filter_response(&p, spec, max_omega_hz)?;
        out.write(Box::into_raw(Box::new(SqzFilter(f))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sqz_filter_eval(
    filter: *const SqzFilter,
    omega_hz: f64,
    out: *mut SqzTransmission,
) -> SqzStatus {
    guard(|| {
        let t = read(filter, "filter")?.0.eval(omega_hz)?;
        write(
            out,
            "out",
            SqzTransmission {
                t_plus: t.t_plus,
                t_minus: t.t_minus,
                theta_plus: t.theta_plus,
                theta_minus: t.theta_minus,
            },
        )
    })
}

/// Releases a filter; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sqz_filter_free(filter: *mut SqzFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Least-squares fit of the window to `len` samples.
#[no_mangle]
pub unsafe extern "C" fn sqz_fit_lineshape(
    detuning_hz: *const f64,
    transmission: *const f64,
    len: usize,
    kind: SqzTraceKind,
    out: *mut SqzLineshape,
) -> SqzStatus {
    guard(|| {
        let kind = match kind {
            SqzTraceKind::Amplitude => TraceKind::Amplitude,
            SqzTraceKind::Intensity => TraceKind::Intensity,
        };
        let trace = TransmissionTrace::new(
            array(detuning_hz, len, "detuning_hz")?.to_vec(),
            array(transmission, len, "transmission")?.to_vec(),
            kind,
        )?;
        let fit = squeezefilter::fit_lineshape(&trace, None, &FitOptions::default())?;
        write(out, "out", from_params(fit.params))
    })
}

/// Minimum phase of a magnitude sampled on a uniform grid symmetric about zero.
#[no_mangle]
pub unsafe extern "C" fn sqz_minimum_phase(
    offsets_hz: *const f64,
    magnitude: *const f64,
    len: usize,
    phase_out: *mut f64,
) -> SqzStatus {
    guard(|| {
        let offsets = array(offsets_hz, len, "offsets_hz")?;
        let mag = array(magnitude, len, "magnitude")?;
        let out = array_mut(phase_out, len, "phase_out")?;
        out.copy_from_slice(&squeezefilter::minimum_phase(offsets, mag)?);
        Ok(())
    })
}

/// Builds a scenario from configuration JSON.
///
/// Relative file names inside the JSON resolve against `base_dir`, or the
/// working directory when it is null. `seed` drives synthetic trace noise.
#[no_mangle]
pub unsafe extern "C" fn sqz_scenario_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    seed: u64,
    out: *mut *mut SqzScenario,
) -> SqzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(SqzStatus::InvalidInput, format!("json: {e}")))?;
        let base = if base_dir.is_null() {
            String::new()
        } else {
            CStr::from_ptr(base_dir)
                .to_str()
                .map_err(|e| Failure(SqzStatus::InvalidInput, format!("base_dir: {e}")))?
                .to_string()
        };
        let path = Path::new(&base).join("<json>");
        let built = ConfigFile::parse(&path, text)?.build(&path, seed)?;
        out.write(Box::into_raw(Box::new(SqzScenario(built.scenario))));
        Ok(())
    })
}

/// Number of frequency points in the scenario grid.
#[no_mangle]
pub unsafe extern "C" fn sqz_scenario_grid_len(
    scenario: *const SqzScenario,
    out: *mut usize,
) -> SqzStatus {
    guard(|| write(out, "out", read(scenario, "scenario")?.0.grid.len()))
}

/// Predicted spectra in dB relative to shot noise.
///
/// Each buffer holds `len` values; `len` must be at least the grid length.
/// `selected_db` follows the configured strategy, which must not be a scan.
#[no_mangle]
pub unsafe extern "C" fn sqz_scenario_predict(
    scenario: *const SqzScenario,
    frequencies_hz: *mut f64,
    selected_db: *mut f64,
    output_min_db: *mut f64,
    output_max_db: *mut f64,
    len: usize,
) -> SqzStatus {
    guard(|| {
        let config = &read(scenario, "scenario")?.0;
        let n = config.grid.len();
        if len < n {
            return Err(Failure(
                SqzStatus::BufferTooSmall,
                format!("buffers hold {len} values, grid has {n}"),
            ));
        }
        if matches!(config.lo_strategy, LoStrategy::Scan { .. }) {
            return Err(Failure(
                SqzStatus::InvalidInput,
                "scan strategy has no single spectrum to predict".into(),
            ));
        }
        let s = squeezefilter::predict_spectrum(config)?;
        for (buffer, name, values) in [
            (frequencies_hz, "frequencies_hz", &s.selected.frequencies),
            (selected_db, "selected_db", &s.selected.noise_db),
            (output_min_db, "output_min_db", &s.output_min.noise_db),
            (output_max_db, "output_max_db", &s.output_max.noise_db),
        ] {
            array_mut(buffer, len, name)?[..n].copy_from_slice(values);
        }
        Ok(())
    })
}

/// Releases a scenario; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sqz_scenario_free(scenario: *mut SqzScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn null_output_is_reported() {
        let status = unsafe { sqz_make_covariance(0.5, 2.0, 0.0, ptr::null_mut()) };
        assert_eq!(status, SqzStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(sqz_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "out is null");
    }

    #[test]
    fn success_clears_the_message() {
        let mut c = SqzCovariance {
            v_plus: 0.0,
            v_minus: 0.0,
            c_cross: 0.0,
        };
        unsafe {
            sqz_make_covariance(2.0, 0.5, 0.0, &mut c);
            assert_eq!(sqz_make_covariance(0.5, 2.0, 0.0, &mut c), SqzStatus::Ok);
            assert!(CStr::from_ptr(sqz_last_error()).to_bytes().is_empty());
        }
    }
}
