//! Delimited-text interchange: traces, spectra, phase tables and scan surfaces.
//!
//! Every file has a header row and may carry `#` comment lines. Frequencies
//! are always hertz. Numbers are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use super::IoError;
use crate::lineshape::{LineshapeError, PhaseTable, TraceKind, TransmissionTrace};
use crate::scenario::{InputTable, NoiseSpectrum, PhaseScan};

/// Parsed rows of a CSV file, with the source line of each row.
struct Table {
    columns: Vec<String>,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(Trim::All)
            .has_headers(true)
            .from_reader(text.as_bytes());
        let columns = reader
            .headers()
            .map_err(|e| IoError::parse(path, None, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line());
                IoError::parse(path, line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            rows.push((line, record));
        }
        Ok(Self { columns, rows })
    }

    fn column(&self, path: &Path, name: &str) -> Result<usize, IoError> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| {
            IoError::parse(
                path,
                Some(1),
                format!(
                    "missing column '{name}' (found: {})",
                    self.columns.join(", ")
                ),
            )
        })
    }

    fn optional_column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn numbers(&self, path: &Path, name: &str) -> Result<Vec<f64>, IoError> {
        let idx = self.column(path, name)?;
        self.rows
            .iter()
            .map(|(line, rec)| {
                let field = rec.get(idx).unwrap_or("");
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        IoError::parse(
                            path,
                            Some(*line),
                            format!("column '{name}': '{field}' is not a finite number"),
                        )
                    })
            })
            .collect()
    }

    fn line(&self, row: usize) -> Option<u64> {
        self.rows.get(row).map(|(line, _)| *line)
    }
}

/// Reads a `detuning_hz,transmission` trace.
pub fn ingest_trace(path: &Path, kind: TraceKind) -> Result<TransmissionTrace, IoError> {
    let table = Table::read(path)?;
    let detuning = table.numbers(path, "detuning_hz")?;
    let transmission = table.numbers(path, "transmission")?;
    TransmissionTrace::new(detuning, transmission, kind).map_err(|e| {
        let line = match e {
            LineshapeError::NotIncreasing { row }
            | LineshapeError::OutOfRange { row, .. }
            | LineshapeError::NonFiniteSample { row } => table.line(row),
            _ => None,
        };
        IoError::parse(path, line, e.to_string())
    })
}

pub fn write_trace(path: &Path, trace: &TransmissionTrace) -> Result<(), IoError> {
    let mut out = String::from("detuning_hz,transmission\n");
    for (d, t) in trace.detuning().iter().zip(trace.transmission()) {
        let _ = writeln!(out, "{d},{t}");
    }
    write(path, out)
}

/// Contents of a spectrum file.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFile {
    pub label: Option<String>,
    pub frequencies: Vec<f64>,
    pub noise_db: Vec<f64>,
    pub valid: Vec<bool>,
}

pub fn write_spectrum(path: &Path, spectrum: &NoiseSpectrum) -> Result<(), IoError> {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", spectrum.label);
    let _ = writeln!(out, "# lo_strategy: {}", spectrum.lo_strategy.name());
    out.push_str("frequency_hz,noise_db,valid\n");
    for ((f, n), v) in spectrum
        .frequencies
        .iter()
        .zip(&spectrum.noise_db)
        .zip(&spectrum.valid)
    {
        let _ = writeln!(out, "{f},{n},{}", u8::from(*v));
    }
    write(path, out)
}

/// Reads `frequency_hz,noise_db[,valid]`; a missing mask means all valid.
pub fn read_spectrum(path: &Path) -> Result<SpectrumFile, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let label = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .map(|l| l.trim().to_string());
    let table = Table::read(path)?;
    let frequencies = table.numbers(path, "frequency_hz")?;
    let noise_db = table.numbers(path, "noise_db")?;
    if let Some(k) = (1..frequencies.len()).find(|&k| frequencies[k] <= frequencies[k - 1]) {
        return Err(IoError::parse(
            path,
            table.line(k),
            "frequency_hz not strictly increasing",
        ));
    }
    let valid = match table.optional_column("valid") {
        None => vec![true; frequencies.len()],
        Some(idx) => table
            .rows
            .iter()
            .map(|(line, rec)| match rec.get(idx) {
                Some("1") | Some("") | None => Ok(true),
                Some("0") => Ok(false),
                Some(other) => Err(IoError::parse(
                    path,
                    Some(*line),
                    format!("column 'valid': '{other}' is not 0 or 1"),
                )),
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(SpectrumFile {
        label,
        frequencies,
        noise_db,
        valid,
    })
}

/// Writes `frequency_hz,theta_rad` rows, e.g. a reconstructed phase or a
/// tracked angle profile.
pub fn write_angle_table(
    path: &Path,
    comment: &str,
    frequencies: &[f64],
    theta: &[f64],
) -> Result<(), IoError> {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("frequency_hz,theta_rad\n");
    for (f, t) in frequencies.iter().zip(theta) {
        let _ = writeln!(out, "{f},{t}");
    }
    write(path, out)
}

pub fn read_phase_table(path: &Path) -> Result<PhaseTable, IoError> {
    let table = Table::read(path)?;
    let offsets = table.numbers(path, "frequency_hz")?;
    let theta = table.numbers(path, "theta_rad")?;
    PhaseTable::new(offsets, theta).map_err(|e| IoError::parse(path, None, e.to_string()))
}

/// Reads `frequency_hz,v_min_db,v_max_db,angle_rad`.
pub fn read_input_table(path: &Path) -> Result<InputTable, IoError> {
    let table = Table::read(path)?;
    InputTable::new(
        table.numbers(path, "frequency_hz")?,
        table.numbers(path, "v_min_db")?,
        table.numbers(path, "v_max_db")?,
        table.numbers(path, "angle_rad")?,
    )
    .map_err(|e| IoError::parse(path, None, e.to_string()))
}

/// Writes the `theta_rad,frequency_hz,noise_db` surface, angle-major.
pub fn write_surface(path: &Path, scan: &PhaseScan) -> Result<(), IoError> {
    let mut out = String::from("theta_rad,frequency_hz,noise_db\n");
    for (theta, row) in scan.thetas.iter().zip(&scan.noise_db) {
        for (f, n) in scan.frequencies.iter().zip(row) {
            let _ = writeln!(out, "{theta},{f},{n}");
        }
    }
    write(path, out)
}

fn write(path: &Path, contents: String) -> Result<(), IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| IoError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
