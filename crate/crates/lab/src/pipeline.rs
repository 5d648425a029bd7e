//! Stage runner: generate → sample → reconstruct → report, each stage
//! reading the previous one's files.
//!
//! Layout under the output directory: one `target_<k>` directory per
//! configured qubit holding `ideal_state.json`, `physical_state.json`,
//! `samples.csv`, `tomography.csv`, `reconstructed.json`, `report.json`,
//! `fringe.csv`, `wigner.csv`, `variance_trace.csv`; plus a top-level
//! `manifest.json`.
//!
//! Randomness flows from the config seed through a stable two-level hash:
//! the target directory name keys the first level, the stage name
//! ("q-records", "phase-tags", "variance-trace") the second. Reruns with
//! the same config and seed therefore reproduce every artifact byte for
//! byte; only the manifest's timings differ. All stages validate their
//! inputs completely before the first write.

use std::path::{Path, PathBuf};
use std::time::Instant;

use timebin_core::analysis::{decompose_at_optimum, fringe_scan, qubit_report};
use timebin_core::density::DensityMatrix;
use timebin_core::eightport::{make_tomography_data, sample_q_function, synthesize_variance_trace};
use timebin_core::error::CoreError;
use timebin_core::generation::{build_physical_state, TimeBinQubitSpec};
use timebin_core::seed::stage_seed;
use timebin_core::tomography::mle_reconstruct;
use timebin_core::wigner::wigner_function;

use crate::config::{Resolved, TargetTable};
use crate::formats::{
    self, DensityJson, PopulationsJson, ReconstructionJson, ReportJson, RunManifest,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NONCONVERGED: i32 = 4;

#[derive(Debug)]
pub struct PipelineError {
    pub exit: i32,
    pub msg: String,
}

impl PipelineError {
    pub fn usage(msg: impl Into<String>) -> Self {
        PipelineError { exit: EXIT_USAGE, msg: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        PipelineError { exit: EXIT_DATA, msg: msg.into() }
    }
}

impl From<CoreError> for PipelineError {
    fn from(e: CoreError) -> Self {
        PipelineError::data(e.to_string())
    }
}

/// Collects produced files and stage timings for the manifest.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<PathBuf>,
    timings: Vec<(String, f64)>,
}

impl Artifacts {
    fn record(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    fn time(&mut self, stage: &str, t0: Instant) {
        self.timings.push((stage.to_string(), t0.elapsed().as_secs_f64()));
    }
}

/// Progress printer; `--quiet` silences it.
pub struct Emitter {
    pub quiet: bool,
}

impl Emitter {
    fn note(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

fn target_dir_name(k: usize) -> String {
    format!("target_{k}")
}

/// Stage seed for an artifact directory: the directory name keys the
/// target level, the stage string the step within it.
fn dir_stage_seed(root: u64, dir: &Path, stage: &str) -> u64 {
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| ".".to_string());
    stage_seed(stage_seed(root, &name), stage)
}

fn create_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path)
        .map_err(|e| PipelineError::data(format!("cannot create {}: {e}", path.display())))
}

fn target_dirs(r: &Resolved) -> Vec<(PathBuf, TimeBinQubitSpec)> {
    r.targets
        .iter()
        .enumerate()
        .map(|(k, spec)| (r.out_dir.join(target_dir_name(k)), *spec))
        .collect()
}

/// Match an explicit artifact path to its configured target via the parent
/// directory name; needed to pick the right seed chain and target spec.
fn spec_for_dir(r: &Resolved, dir: &Path) -> Result<TimeBinQubitSpec, PipelineError> {
    let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for (k, spec) in r.targets.iter().enumerate() {
        if name == target_dir_name(k) {
            return Ok(*spec);
        }
    }
    Err(PipelineError::data(format!(
        "directory '{}' does not correspond to any configured target",
        dir.display()
    )))
}

fn read_state(path: &Path) -> Result<DensityMatrix, PipelineError> {
    let json: DensityJson = formats::read_json(path).map_err(PipelineError::data)?;
    json.to_state().map_err(|e| PipelineError::data(format!("{}: {e}", path.display())))
}

/// Write ideal and physical density matrices for every target.
pub fn cmd_generate(r: &Resolved, art: &mut Artifacts, em: &Emitter) -> Result<(), PipelineError> {
    let t0 = Instant::now();
    let d = r.mle.dim_per_mode;
    // build everything first; failures must not leave partial output
    let mut staged = Vec::new();
    for (dir, spec) in target_dirs(r) {
        let ideal = DensityMatrix::pure(&spec.ket(d)?)?;
        let physical = build_physical_state(&spec, &r.budget, d)?;
        staged.push((dir, ideal, physical));
    }
    for (dir, ideal, physical) in staged {
        create_dir(&dir)?;
        let ideal_path = dir.join("ideal_state.json");
        let phys_path = dir.join("physical_state.json");
        formats::write_json(&ideal_path, &DensityJson::from_state(&ideal))
            .map_err(PipelineError::data)?;
        formats::write_json(&phys_path, &DensityJson::from_state(&physical))
            .map_err(PipelineError::data)?;
        em.note(&format!("generate: wrote {}", dir.display()));
        art.record(ideal_path);
        art.record(phys_path);
    }
    art.time("generate", t0);
    Ok(())
}

/// Draw dual-homodyne records from a physical state and derive the
/// phase-tagged tomography data; explicit `state` path narrows the run to
/// that file's directory.
pub fn cmd_sample(
    r: &Resolved,
    art: &mut Artifacts,
    em: &Emitter,
    state: Option<&Path>,
) -> Result<(), PipelineError> {
    let t0 = Instant::now();
    let plan: Vec<PathBuf> = match state {
        Some(p) => vec![p.to_path_buf()],
        None => target_dirs(r).into_iter().map(|(d, _)| d.join("physical_state.json")).collect(),
    };
    for state_path in plan {
        let dir = state_path
            .parent()
            .ok_or_else(|| PipelineError::data("state file has no parent directory"))?
            .to_path_buf();
        let rho = read_state(&state_path)?;
        let q_seed = dir_stage_seed(r.seed, &dir, "q-records");
        let tag_seed = dir_stage_seed(r.seed, &dir, "phase-tags");
        let samples = sample_q_function(&rho, r.n_samples, q_seed)?;
        let data = make_tomography_data(&samples, tag_seed)?;
        let samples_path = dir.join("samples.csv");
        let tomo_path = dir.join("tomography.csv");
        formats::write_samples_csv(&samples_path, &samples).map_err(PipelineError::data)?;
        formats::write_tomography_csv(&tomo_path, &data).map_err(PipelineError::data)?;
        em.note(&format!(
            "sample: {} records -> {}",
            r.n_samples,
            samples_path.display()
        ));
        art.record(samples_path);
        art.record(tomo_path);
    }
    art.time("sample", t0);
    Ok(())
}

/// Run the two-mode reconstruction on tomography data. Returns false when
/// any reconstruction stopped at the iteration cap.
pub fn cmd_reconstruct(
    r: &Resolved,
    art: &mut Artifacts,
    em: &Emitter,
    tomography: Option<&Path>,
) -> Result<bool, PipelineError> {
    let t0 = Instant::now();
    let plan: Vec<PathBuf> = match tomography {
        Some(p) => vec![p.to_path_buf()],
        None => target_dirs(r).into_iter().map(|(d, _)| d.join("tomography.csv")).collect(),
    };
    let mut all_converged = true;
    for tomo_path in plan {
        let dir = tomo_path
            .parent()
            .ok_or_else(|| PipelineError::data("tomography file has no parent directory"))?
            .to_path_buf();
        let mut data = formats::read_tomography_csv(&tomo_path).map_err(PipelineError::data)?;
        let before = data.len();
        // records beyond the binning range carry no usable bin; drop them
        data.retain(|d| d.x1.abs() <= r.mle.x_range && d.x2.abs() <= r.mle.x_range);
        if data.is_empty() {
            return Err(PipelineError::data(format!(
                "{}: no data inside the reconstruction range +-{}",
                tomo_path.display(),
                r.mle.x_range
            )));
        }
        let trimmed = before - data.len();
        let res = mle_reconstruct(&data, &r.mle)?;
        let out_path = dir.join("reconstructed.json");
        formats::write_json(&out_path, &ReconstructionJson::from_result(&res))
            .map_err(PipelineError::data)?;
        em.note(&format!(
            "reconstruct: {} data ({} trimmed), {} iterations, converged: {} -> {}",
            data.len(),
            trimmed,
            res.iterations,
            res.converged,
            out_path.display()
        ));
        all_converged &= res.converged;
        art.record(out_path);
    }
    art.time("reconstruct", t0);
    Ok(all_converged)
}

/// Fringe-scan phase grid: 13 evenly spaced points covering [−π, π],
/// including ±π/2 exactly.
pub fn fringe_phis() -> Vec<f64> {
    (0..=12).map(|k| -core::f64::consts::PI + k as f64 * core::f64::consts::PI / 6.0).collect()
}

/// Time grid for the variance trace: covers both bins with five source
/// lifetimes of padding, step safely inside the mode-resolution bound.
/// The delayed bin sits at t = −Δt (its photon was emitted earlier).
pub fn trace_grid(gamma: f64, delta_t: f64) -> Vec<f64> {
    let dt = 1.0 / (12.0 * gamma);
    let start = -(delta_t + 5.0 / gamma);
    let stop = 5.0 / gamma;
    let n = ((stop - start) / dt).ceil() as usize + 1;
    (0..n).map(|k| start + k as f64 * dt).collect()
}

/// Analysis bundle per target: qubit report, fringe scan, optimal
/// decomposition with a Wigner surface, and the variance trace; finishes
/// with the run manifest.
pub fn cmd_report(
    r: &Resolved,
    art: &mut Artifacts,
    em: &Emitter,
    target: Option<&Path>,
) -> Result<(), PipelineError> {
    let t0 = Instant::now();
    let plan: Vec<(PathBuf, TimeBinQubitSpec)> = match target {
        Some(dir) => vec![(dir.to_path_buf(), spec_for_dir(r, dir)?)],
        None => target_dirs(r),
    };
    for (dir, spec) in plan {
        let samples = formats::read_samples_csv(&dir.join("samples.csv"))
            .map_err(PipelineError::data)?;
        if samples.is_empty() {
            return Err(PipelineError::data(format!(
                "{}: no samples to analyze",
                dir.join("samples.csv").display()
            )));
        }
        let recon: ReconstructionJson =
            formats::read_json(&dir.join("reconstructed.json")).map_err(PipelineError::data)?;
        let rho = recon
            .state
            .to_state()
            .map_err(|e| PipelineError::data(format!("reconstructed state: {e}")))?;
        let physical = read_state(&dir.join("physical_state.json"))?;

        let report = qubit_report(&rho, &spec)?;
        let scan = fringe_scan(&samples, &fringe_phis(), &r.mle)?;
        let (out_a, out_b) = decompose_at_optimum(&samples, &spec, &r.mle)?;
        let p_a = out_a.rho.photon_number_distribution();
        let p_b = out_b.rho.photon_number_distribution();
        let w_a_origin = wigner_function(&out_a.rho, 0.0, 0.0)?;
        let trace = synthesize_variance_trace(
            &physical,
            &r.mzi,
            r.trace_trials,
            &trace_grid(r.mzi.gamma, r.mzi.delta_t),
            dir_stage_seed(r.seed, &dir, "variance-trace"),
        )?;

        let fringe_path = dir.join("fringe.csv");
        let wigner_path = dir.join("wigner.csv");
        let trace_path = dir.join("variance_trace.csv");
        let report_path = dir.join("report.json");
        formats::write_fringe_csv(&fringe_path, &scan).map_err(PipelineError::data)?;
        formats::write_wigner_csv(&wigner_path, &out_a.rho, 4.0, 0.05)
            .map_err(PipelineError::data)?;
        formats::write_trace_csv(&trace_path, &trace).map_err(PipelineError::data)?;
        let (vac, qubit, multi) = report.populations;
        formats::write_json(
            &report_path,
            &ReportJson {
                target: TargetTable { c0: spec.c0, c1: spec.c1, phi_rad: spec.phi },
                populations: PopulationsJson { vacuum: vac, qubit, multiphoton: multi },
                submatrix: report.submatrix.as_slice().iter().map(|c| [c.re, c.im]).collect(),
                fidelity: report.fidelity,
                visibility: scan.visibility,
                visibility_fit: scan.visibility_fit,
                p_a_1: p_a[1],
                w_a_origin,
                p_b_0: p_b[0],
            },
        )
        .map_err(PipelineError::data)?;
        em.note(&format!(
            "report: fidelity {:.4}, visibility {:.4} -> {}",
            report.fidelity,
            scan.visibility,
            report_path.display()
        ));
        art.record(fringe_path);
        art.record(wigner_path);
        art.record(trace_path);
        art.record(report_path);
    }
    art.time("report", t0);
    write_manifest(r, art)?;
    Ok(())
}

/// The whole chain for every target. Returns false when any reconstruction
/// hit its iteration cap.
pub fn cmd_all(r: &Resolved, art: &mut Artifacts, em: &Emitter) -> Result<bool, PipelineError> {
    cmd_generate(r, art, em)?;
    cmd_sample(r, art, em, None)?;
    let converged = cmd_reconstruct(r, art, em, None)?;
    cmd_report(r, art, em, None)?;
    Ok(converged)
}

fn write_manifest(r: &Resolved, art: &mut Artifacts) -> Result<(), PipelineError> {
    let mut files = Vec::new();
    for f in &art.files {
        let rel = f.strip_prefix(&r.out_dir).unwrap_or(f);
        files.push(rel.to_string_lossy().into_owned());
    }
    files.sort();
    let mut versions = std::collections::BTreeMap::new();
    versions.insert("timebin-core".to_string(), timebin_core::VERSION.to_string());
    versions.insert("timebin-lab".to_string(), env!("CARGO_PKG_VERSION").to_string());
    let manifest = RunManifest {
        config: r.echo.clone(),
        seed: r.seed,
        versions,
        files,
        timings_s: art.timings.iter().cloned().collect(),
    };
    let path = r.out_dir.join("manifest.json");
    formats::write_json(&path, &manifest).map_err(PipelineError::data)?;
    art.record(path);
    Ok(())
}
