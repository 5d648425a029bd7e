//! Artifact encodings. Every number is written in Rust's shortest
//! round-trip form, so a rerun with the same seed reproduces each file byte
//! for byte; the manifest's wall-clock timings are the one documented
//! exception.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use timebin_core::analysis::FringeScan;
use timebin_core::density::DensityMatrix;
use timebin_core::eightport::{QuadratureSample, TimeTrace, TomographyDatum};
use timebin_core::linalg::CMat;
use timebin_core::tomography::ReconstructionResult;
use timebin_core::C64;

use crate::config::{ExperimentConfig, TargetTable};

/// Density matrix on disk: row-major complex entries as [re, im] pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityJson {
    pub dim_per_mode: usize,
    pub mode_count: usize,
    pub entries: Vec<[f64; 2]>,
}

impl DensityJson {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        DensityJson {
            dim_per_mode: rho.dim_per_mode(),
            mode_count: rho.mode_count(),
            entries: rho.matrix().as_slice().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    /// Rebuild and re-validate the state (hermiticity, trace, positivity).
    pub fn to_state(&self) -> Result<DensityMatrix, String> {
        let dim = self
            .dim_per_mode
            .checked_pow(self.mode_count as u32)
            .filter(|d| *d > 0 && self.entries.len() == d * d)
            .ok_or_else(|| {
                format!(
                    "entry count {} does not match dim_per_mode {} with {} mode(s)",
                    self.entries.len(),
                    self.dim_per_mode,
                    self.mode_count
                )
            })?;
        let m = CMat::from_fn(dim, dim, |r, c| {
            let [re, im] = self.entries[r * dim + c];
            C64::new(re, im)
        });
        DensityMatrix::new(m, self.dim_per_mode, self.mode_count).map_err(|e| e.to_string())
    }
}

/// Reconstruction output: the state plus the iteration record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionJson {
    pub state: DensityJson,
    pub iterations: usize,
    pub final_delta: f64,
    pub log_likelihood: f64,
    pub converged: bool,
}

impl ReconstructionJson {
    pub fn from_result(res: &ReconstructionResult) -> Self {
        ReconstructionJson {
            state: DensityJson::from_state(&res.rho),
            iterations: res.iterations,
            final_delta: res.final_delta,
            log_likelihood: res.log_likelihood,
            converged: res.converged,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationsJson {
    pub vacuum: f64,
    pub qubit: f64,
    pub multiphoton: f64,
}

/// Per-target analysis summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportJson {
    pub target: TargetTable,
    pub populations: PopulationsJson,
    /// Renormalized single-excitation block, row-major [re, im].
    pub submatrix: Vec<[f64; 2]>,
    pub fidelity: f64,
    /// Grid visibility of the first virtual detector.
    pub visibility: f64,
    pub visibility_fit: f64,
    /// Photon weight in the photon-bearing output of the optimal split.
    pub p_a_1: f64,
    /// Wigner value at the origin for that output.
    pub w_a_origin: f64,
    /// Vacuum weight in the other output.
    pub p_b_0: f64,
}

/// What a run produced and how; `timings_s` varies between reruns, all
/// other fields and files are reproducible byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub versions: std::collections::BTreeMap<String, String>,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    pub timings_s: std::collections::BTreeMap<String, f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| format!("cannot encode {}: {e}", path.display()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

const SAMPLES_HEADER: &str = "x1,p1,x2,p2";
const TOMOGRAPHY_HEADER: &str = "theta1,x1,theta2,x2";
const TRACE_HEADER: &str = "t_s,variance";
const FRINGE_HEADER: &str = "phi_rad,p1_d1,p1_d2";
const WIGNER_HEADER: &str = "x,p,w";

pub fn write_samples_csv(path: &Path, samples: &[QuadratureSample]) -> Result<(), String> {
    write_csv(path, SAMPLES_HEADER, samples.iter(), |s, out| {
        let _ = write!(out, "{},{},{},{}", s.x1, s.p1, s.x2, s.p2);
    })
}

pub fn read_samples_csv(path: &Path) -> Result<Vec<QuadratureSample>, String> {
    read_csv(path, SAMPLES_HEADER, |f| QuadratureSample {
        x1: f[0],
        p1: f[1],
        x2: f[2],
        p2: f[3],
    })
}

pub fn write_tomography_csv(path: &Path, data: &[TomographyDatum]) -> Result<(), String> {
    write_csv(path, TOMOGRAPHY_HEADER, data.iter(), |d, out| {
        let _ = write!(out, "{},{},{},{}", d.theta1, d.x1, d.theta2, d.x2);
    })
}

pub fn read_tomography_csv(path: &Path) -> Result<Vec<TomographyDatum>, String> {
    read_csv(path, TOMOGRAPHY_HEADER, |f| TomographyDatum {
        theta1: f[0],
        x1: f[1],
        theta2: f[2],
        x2: f[3],
    })
}

pub fn write_trace_csv(path: &Path, trace: &TimeTrace) -> Result<(), String> {
    write_csv(path, TRACE_HEADER, trace.times.iter().zip(&trace.variance), |(t, v), out| {
        let _ = write!(out, "{t},{v}");
    })
}

pub fn write_fringe_csv(path: &Path, scan: &FringeScan) -> Result<(), String> {
    let rows = scan.phis.iter().zip(scan.p1_d1.iter().zip(&scan.p1_d2));
    write_csv(path, FRINGE_HEADER, rows, |(phi, (a, b)), out| {
        let _ = write!(out, "{phi},{a},{b}");
    })
}

/// Wigner surface on a square grid, x-major rows.
pub fn write_wigner_csv(
    path: &Path,
    rho: &DensityMatrix,
    half_range: f64,
    step: f64,
) -> Result<(), String> {
    let n = (2.0 * half_range / step).round() as i64;
    let mut rows = Vec::new();
    for i in 0..=n {
        let x = -half_range + i as f64 * step;
        for j in 0..=n {
            let p = -half_range + j as f64 * step;
            let w = timebin_core::wigner::wigner_function(rho, x, p)
                .map_err(|e| e.to_string())?;
            rows.push((x, p, w));
        }
    }
    write_csv(path, WIGNER_HEADER, rows.iter(), |(x, p, w), out| {
        let _ = write!(out, "{x},{p},{w}");
    })
}

fn write_csv<T>(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = T>,
    mut fmt: impl FnMut(T, &mut String),
) -> Result<(), String> {
    let file = std::fs::File::create(path)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| format!("cannot write {}: {e}", path.display());
    writeln!(w, "{header}").map_err(io_err)?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        fmt(row, &mut line);
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Strict four-column CSV reader: exact header, every row complete and
/// finite. Errors name the offending row (1-based, excluding the header).
fn read_csv<T>(path: &Path, header: &str, build: impl Fn([f64; 4]) -> T) -> Result<Vec<T>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == header => {}
        Some(h) => {
            return Err(format!(
                "{}: expected header '{header}', found '{}'",
                path.display(),
                h.trim_end()
            ))
        }
        None => return Err(format!("{}: empty file", path.display())),
    }
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        if line.is_empty() {
            return Err(format!("{}: row {row} is empty", path.display()));
        }
        let mut fields = [0.0f64; 4];
        let mut it = line.split(',');
        for (col, slot) in fields.iter_mut().enumerate() {
            let raw = it.next().ok_or_else(|| {
                format!("{}: row {row} has {} of 4 columns", path.display(), col)
            })?;
            *slot = raw.trim().parse::<f64>().map_err(|_| {
                format!("{}: row {row}, column {}: '{raw}' is not a number", path.display(), col + 1)
            })?;
            if !slot.is_finite() {
                return Err(format!(
                    "{}: row {row}, column {}: non-finite value",
                    path.display(),
                    col + 1
                ));
            }
        }
        if it.next().is_some() {
            return Err(format!("{}: row {row} has more than 4 columns", path.display()));
        }
        out.push(build(fields));
    }
    Ok(out)
}
