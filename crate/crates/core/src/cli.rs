//! Command-line front end.
//!
//! Exit status is 0 on success, 1 for I/O, parse and schema errors and 2 for
//! numerical failures (a fit that does not converge, an unevaluable scenario).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::io::{
    config::DEFAULT_THETA_SAMPLES, ingest_trace, write_angle_table, write_spectrum, write_surface,
    write_trace, BuiltScenario, ConfigFile, IoError,
};
use crate::lineshape::{fit_lineshape, minimum_phase, FitOptions, LineshapeParams, TraceKind};
use crate::scenario::{angle_tracking, phase_scan, predict_spectrum, LoStrategy, NoiseSpectrum};
use crate::{Error, ErrorKind};

const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Parser)]
#[command(
    name = "squeezefilter",
    version,
    about = "Squeezed-noise filtering by atomic transmission windows"
)]
struct Cli {
    /// Seed for synthetic trace noise.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    /// Report errors on stderr as JSON.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the empirical window to a transmission trace.
    Fit {
        #[command(flatten)]
        trace: TraceArgs,
        /// Starting parameters (JSON with a_sym, b_asym, c_bg, gamma_hz, delta0_hz).
        #[arg(long)]
        init: Option<PathBuf>,
        /// Fit result JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict input and expected output noise spectra.
    Predict(ScenarioArgs),
    /// Sweep the local-oscillator phase over [0, π).
    PhaseScan(ScenarioArgs),
    /// Track the frequency-dependent squeezing angle.
    AngleTrack(ScenarioArgs),
    /// Reconstruct the minimum phase of a transmission trace.
    Kk {
        #[command(flatten)]
        trace: TraceArgs,
        /// Phase table CSV (frequency_hz,theta_rad).
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// CSV with detuning_hz,transmission columns.
    #[arg(long)]
    trace: PathBuf,
    /// Treat transmission values as power rather than amplitude.
    #[arg(long)]
    intensity: bool,
}

impl TraceArgs {
    fn kind(&self) -> TraceKind {
        if self.intensity {
            TraceKind::Intensity
        } else {
            TraceKind::Amplitude
        }
    }
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Runs one command and returns the process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::Input => 1,
                ErrorKind::Numerical => 2,
            };
            if cli.json_errors {
                let kind = match err.kind() {
                    ErrorKind::Input => "input",
                    ErrorKind::Numerical => "numerical",
                };
                let doc =
                    json!({"error": {"kind": kind, "exit_code": code, "message": err.to_string()}});
                eprintln!("{doc}");
            } else {
                eprintln!("error: {err}");
            }
            code
        }
    }
}

struct Log {
    quiet: bool,
}

impl Log {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let log = Log { quiet: cli.quiet };
    match &cli.command {
        Command::Fit { trace, init, out } => run_fit(&log, trace, init.as_deref(), out),
        Command::Kk { trace, out } => run_kk(&log, trace, out),
        Command::Predict(args) => {
            let (built, dir) = load(&log, args, cli.seed)?;
            run_predict(&log, &built, &dir)
        }
        Command::PhaseScan(args) => {
            let (built, dir) = load(&log, args, cli.seed)?;
            run_phase_scan(&log, &built, &dir)
        }
        Command::AngleTrack(args) => {
            let (built, dir) = load(&log, args, cli.seed)?;
            run_angle_track(&log, &built, &dir)
        }
    }
}

fn mhz(hz: f64) -> String {
    format!("{:.4} MHz", hz / 1e6)
}

fn describe(p: &LineshapeParams) -> String {
    format!(
        "A={:.5} B={:.5} C={:.5} Γ={} δ0={}",
        p.a_sym,
        p.b_asym,
        p.c_bg,
        mhz(p.gamma),
        mhz(p.delta0)
    )
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    text.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| IoError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn read_init(path: &Path) -> Result<LineshapeParams, Error> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let p: LineshapeParams = serde_path_to_error::deserialize(de).map_err(|e| IoError::Config {
        path: path.to_path_buf(),
        message: format!("at '{}': {}", e.path(), e.inner()),
    })?;
    Ok(LineshapeParams::new(
        p.a_sym, p.b_asym, p.c_bg, p.gamma, p.delta0,
    )?)
}

fn run_fit(log: &Log, args: &TraceArgs, init: Option<&Path>, out: &Path) -> Result<(), Error> {
    let trace = ingest_trace(&args.trace, args.kind())?;
    let init = init.map(read_init).transpose()?;
    let fit = fit_lineshape(&trace, init.as_ref(), &FitOptions::default())?;
    log.say(format!(
        "fitted {} points in {} iterations: {}",
        trace.len(),
        fit.diagnostics.iterations,
        describe(&fit.params)
    ));
    write_json(
        out,
        &serde_json::to_value(&fit).expect("fit result serializes"),
    )
}

fn run_kk(log: &Log, args: &TraceArgs, out: &Path) -> Result<(), Error> {
    let trace = ingest_trace(&args.trace, args.kind())?;
    let theta = minimum_phase(trace.detuning(), trace.transmission())?;
    log.say(format!(
        "reconstructed minimum phase over ±{}",
        mhz(trace.detuning()[trace.len() - 1])
    ));
    write_angle_table(
        out,
        "minimum-phase reconstruction from |T|; assumes a causal minimum-phase response",
        trace.detuning(),
        &theta,
    )?;
    Ok(())
}

fn load(log: &Log, args: &ScenarioArgs, seed: u64) -> Result<(BuiltScenario, PathBuf), Error> {
    let config = ConfigFile::load(&args.config)?;
    let built = config.build(&args.config, seed)?;
    if let Some(fit) = &built.fit {
        log.say(format!(
            "filter from fitted trace: {}",
            describe(&fit.params)
        ));
    }
    let grid = &built.scenario.grid;
    log.say(format!(
        "{} grid points from {} to {}",
        grid.len(),
        mhz(grid.points()[0]),
        mhz(grid.max())
    ));
    let dir = args
        .out_dir
        .clone()
        .or_else(|| built.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok((built, dir))
}

fn write_common(built: &BuiltScenario, dir: &Path) -> Result<(), Error> {
    if let Some(fit) = &built.fit {
        write_json(
            &dir.join("fit.json"),
            &serde_json::to_value(fit).expect("fit result serializes"),
        )?;
    }
    if let Some(trace) = &built.synthetic_trace {
        write_trace(&dir.join("synthetic_trace.csv"), trace)?;
    }
    Ok(())
}

fn write_spectra(dir: &Path, items: &[(&str, &NoiseSpectrum)]) -> Result<(), Error> {
    for (name, spectrum) in items {
        write_spectrum(&dir.join(format!("{name}.csv")), spectrum)?;
    }
    Ok(())
}

fn run_predict(log: &Log, built: &BuiltScenario, dir: &Path) -> Result<(), Error> {
    let spectra = predict_spectrum(&built.scenario)?;
    write_common(built, dir)?;
    write_spectra(
        dir,
        &[
            ("input_max", &spectra.input_max),
            ("input_min", &spectra.input_min),
            ("expected_max", &spectra.output_max),
            ("expected_min", &spectra.output_min),
            ("output", &spectra.selected),
        ],
    )?;
    for (name, overlay) in &built.overlays {
        let spectrum = NoiseSpectrum {
            frequencies: overlay.frequencies.clone(),
            noise_db: overlay.noise_db.clone(),
            valid: overlay.valid.clone(),
            label: overlay.label.clone().unwrap_or_else(|| name.clone()),
            lo_strategy: built.scenario.lo_strategy,
        };
        write_spectrum(&dir.join(format!("{name}.csv")), &spectrum)?;
    }
    log.say(format!("wrote spectra to {}", dir.display()));
    Ok(())
}

fn run_phase_scan(log: &Log, built: &BuiltScenario, dir: &Path) -> Result<(), Error> {
    let samples = match built.scenario.lo_strategy {
        LoStrategy::Scan { theta_samples } => theta_samples,
        _ => DEFAULT_THETA_SAMPLES,
    };
    let scan = phase_scan(&built.scenario, samples)?;
    write_common(built, dir)?;
    write_surface(&dir.join("surface.csv"), &scan)?;
    write_spectra(
        dir,
        &[
            ("envelope_min", &scan.envelope_min),
            ("envelope_max", &scan.envelope_max),
        ],
    )?;
    log.say(format!(
        "scanned {} LO angles; wrote surface to {}",
        samples,
        dir.display()
    ));
    Ok(())
}

fn run_angle_track(log: &Log, built: &BuiltScenario, dir: &Path) -> Result<(), Error> {
    let tracking = angle_tracking(&built.scenario, &built.anchors_hz)?;
    write_common(built, dir)?;
    write_angle_table(
        &dir.join("optimal_angle.csv"),
        "LO angle of minimum output noise",
        &tracking.frequencies,
        &tracking.optimal_angle,
    )?;
    write_spectrum(&dir.join("tracked_min.csv"), &tracking.tracked_min)?;
    for anchor in &tracking.anchors {
        let name = format!("anchor_{}hz.csv", anchor.anchor_hz.round() as u64);
        write_spectrum(&dir.join(name), &anchor.spectrum)?;
        log.say(format!(
            "anchor {} -> LO angle {:.4} rad",
            mhz(anchor.grid_hz),
            anchor.angle_rad
        ));
    }
    Ok(())
}
