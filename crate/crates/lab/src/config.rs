//! One TOML file describes an experiment: interferometer, imperfection
//! budget, target qubits, sampling counts, and reconstruction settings.
//!
//! Command-line flags override individual keys (`--seed`, `--out`, `--dim`,
//! `--samples`); the file supplies everything else. Angles are radians and
//! carry a `_rad` suffix, times are seconds (`_s`), rates are hertz (`_hz`).

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use timebin_core::generation::{
    qubit_from_mzi, ImperfectionBudget, MziConfig, TimeBinQubitSpec,
};
use timebin_core::tomography::MleConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub mzi: MziTable,
    pub budget: BudgetTable,
    /// Explicit target qubits; empty means "whatever the interferometer
    /// settings produce", via the herald-path amplitudes.
    #[serde(default)]
    pub targets: Vec<TargetTable>,
    pub sampling: SamplingTable,
    #[serde(default)]
    pub mle: MleTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MziTable {
    pub tau1: f64,
    pub rho1: f64,
    pub tau2: f64,
    pub rho2: f64,
    pub phi2_rad: f64,
    pub delta_t_s: f64,
    pub gamma_rad_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetTable {
    pub eta_nopo: f64,
    pub eta_vis: f64,
    pub eta_pr: f64,
    pub eta_det: f64,
    /// Either give the heralding purity directly or the count rates it is
    /// derived from; both together must agree.
    #[serde(default)]
    pub eta_apd: Option<f64>,
    #[serde(default)]
    pub zeta_tot_hz: Option<f64>,
    #[serde(default)]
    pub zeta_dark_hz: Option<f64>,
    pub p_multi: f64,
    #[serde(default = "one")]
    pub eta_extra: f64,
    #[serde(default)]
    pub phi_jitter_rad: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetTable {
    pub c0: f64,
    pub c1: f64,
    pub phi_rad: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingTable {
    pub n_samples: u64,
    pub seed: u64,
    /// Trials behind the time-resolved variance trace.
    #[serde(default = "default_trace_trials")]
    pub trace_trials: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleTable {
    #[serde(default = "default_dim")]
    pub dim_per_mode: usize,
    #[serde(default = "default_bin_width")]
    pub x_bin_width: f64,
    #[serde(default = "default_x_range")]
    pub x_range: f64,
    #[serde(default = "default_theta_bins")]
    pub theta_bins: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tol")]
    pub convergence_tol: f64,
    #[serde(default)]
    pub dilution: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_trace_trials() -> u64 {
    200_000
}
fn default_dim() -> usize {
    MleConfig::default().dim_per_mode
}
fn default_bin_width() -> f64 {
    MleConfig::default().x_bin_width
}
fn default_x_range() -> f64 {
    MleConfig::default().x_range
}
fn default_theta_bins() -> usize {
    MleConfig::default().theta_bins
}
fn default_max_iterations() -> usize {
    MleConfig::default().max_iterations
}
fn default_tol() -> f64 {
    MleConfig::default().convergence_tol
}

impl Default for MleTable {
    fn default() -> Self {
        MleTable {
            dim_per_mode: default_dim(),
            x_bin_width: default_bin_width(),
            x_range: default_x_range(),
            theta_bins: default_theta_bins(),
            max_iterations: default_max_iterations(),
            convergence_tol: default_tol(),
            dilution: None,
        }
    }
}

/// Flag-level overrides; `None` keeps the config value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub dim: Option<usize>,
    pub samples: Option<u64>,
}

/// Fully validated run parameters in core types, plus the (override-applied)
/// config echo for the manifest.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub out_dir: PathBuf,
    pub mzi: MziConfig,
    pub budget: ImperfectionBudget,
    pub targets: Vec<TimeBinQubitSpec>,
    pub n_samples: usize,
    pub seed: u64,
    pub trace_trials: usize,
    pub mle: MleConfig,
    pub echo: ExperimentConfig,
}

impl ExperimentConfig {
    /// Parse; errors keep toml's line/column and key-path diagnostics.
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config error: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Apply flag overrides, convert to core types, validate everything.
    pub fn resolve(&self, ov: &Overrides) -> Result<Resolved, String> {
        let mut echo = self.clone();
        if let Some(s) = ov.seed {
            echo.sampling.seed = s;
        }
        if let Some(ref o) = ov.out {
            echo.output_dir = o.clone();
        }
        if let Some(d) = ov.dim {
            echo.mle.dim_per_mode = d;
        }
        if let Some(n) = ov.samples {
            echo.sampling.n_samples = n;
        }

        let mzi = MziConfig {
            tau1: echo.mzi.tau1,
            rho1: echo.mzi.rho1,
            tau2: echo.mzi.tau2,
            rho2: echo.mzi.rho2,
            phi2: echo.mzi.phi2_rad,
            delta_t: echo.mzi.delta_t_s,
            gamma: echo.mzi.gamma_rad_s,
        };
        mzi.validate().map_err(|e| format!("[mzi] {e}"))?;

        let budget = ImperfectionBudget {
            eta_nopo: echo.budget.eta_nopo,
            eta_vis: echo.budget.eta_vis,
            eta_pr: echo.budget.eta_pr,
            eta_det: echo.budget.eta_det,
            eta_apd: echo.budget.eta_apd,
            zeta_tot: echo.budget.zeta_tot_hz,
            zeta_dark: echo.budget.zeta_dark_hz,
            p_multi: echo.budget.p_multi,
            eta_extra: echo.budget.eta_extra,
            phi_jitter_rad: echo.budget.phi_jitter_rad,
        };
        budget.validate().map_err(|e| format!("[budget] {e}"))?;

        let mut targets = Vec::new();
        if echo.targets.is_empty() {
            targets.push(qubit_from_mzi(&mzi).map_err(|e| format!("[mzi] {e}"))?);
        } else {
            for (k, t) in echo.targets.iter().enumerate() {
                targets.push(
                    TimeBinQubitSpec::new(t.c0, t.c1, t.phi_rad)
                        .map_err(|e| format!("[[targets]] entry {k}: {e}"))?,
                );
            }
        }

        let mle = MleConfig {
            dim_per_mode: echo.mle.dim_per_mode,
            x_bin_width: echo.mle.x_bin_width,
            x_range: echo.mle.x_range,
            theta_bins: echo.mle.theta_bins,
            max_iterations: echo.mle.max_iterations,
            convergence_tol: echo.mle.convergence_tol,
            dilution: echo.mle.dilution,
        };
        mle.validate().map_err(|e| format!("[mle] {e}"))?;
        if budget.p_multi > 0.0 && mle.dim_per_mode < 3 {
            return Err(
                "[mle] dim_per_mode must be >= 3 when p_multi > 0 (the \
                 two-photon component needs room)"
                    .into(),
            );
        }

        if echo.sampling.n_samples < 1 {
            return Err("[sampling] n_samples must be >= 1".into());
        }
        if echo.sampling.trace_trials < 2 {
            return Err("[sampling] trace_trials must be >= 2".into());
        }

        Ok(Resolved {
            out_dir: echo.output_dir.clone(),
            mzi,
            budget,
            targets,
            n_samples: echo.sampling.n_samples as usize,
            seed: echo.sampling.seed,
            trace_trials: echo.sampling.trace_trials as usize,
            mle,
            echo,
        })
    }
}
