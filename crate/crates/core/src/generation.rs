//! From hardware description (MZI splitters, delay, source bandwidth,
//! efficiency budget) to the heralded two-mode state.

use crate::channels::{apply_loss_channel, apply_phase_jitter};
use crate::density::DensityMatrix;
use crate::error::CoreError;
use crate::fock::{pair_index, FockKet};
use crate::C64;
use alloc::format;
use alloc::vec;

use core::f64::consts::PI;

/// Unbalanced MZI in the herald arm: two splitters and a delay.
/// Splitter 1 has relative phase 0; splitter 2 carries `phi2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziConfig {
    pub tau1: f64,
    pub rho1: f64,
    pub tau2: f64,
    pub rho2: f64,
    /// Relative phase of splitter 2, radians.
    pub phi2: f64,
    /// Arm delay, seconds.
    pub delta_t: f64,
    /// Source HWHM bandwidth, angular frequency (rad/s).
    pub gamma: f64,
}

impl MziConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        for (tau, rho, which) in [(self.tau1, self.rho1, 1), (self.tau2, self.rho2, 2)] {
            if (tau * tau + rho * rho - 1.0).abs() > 1e-10 {
                return Err(CoreError::InvalidArgument(format!(
                    "splitter {which}: tau^2+rho^2 = {}, expected 1",
                    tau * tau + rho * rho
                )));
            }
        }
        if self.delta_t <= 0.0 {
            return Err(CoreError::InvalidArgument(format!("delta_t = {} must be > 0", self.delta_t)));
        }
        if self.gamma <= 0.0 {
            return Err(CoreError::InvalidArgument(format!("gamma = {} must be > 0", self.gamma)));
        }
        Ok(())
    }
}

/// Double-sided exponential temporal mode √γ e^{−γ|t+offset|}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFunction {
    pub gamma: f64,
    /// Time offset, seconds: 0 for the prompt bin, Δt for the delayed bin.
    pub offset: f64,
}

/// Amplitude of the mode function at time t, units s^{−1/2}.
pub fn temporal_mode_eval(f: &ModeFunction, t: f64) -> f64 {
    libm::sqrt(f.gamma) * libm::exp(-f.gamma * (t + f.offset).abs())
}

impl ModeFunction {
    /// ∫|f|² over [t0, t1] by composite Simpson with n subintervals
    /// (n rounded up to even). The integrand is smooth away from the peak;
    /// callers should split at −offset for strict accuracy.
    pub fn norm_squared_on_grid(&self, t0: f64, t1: f64, n: usize) -> f64 {
        simpson(t0, t1, n, |t| {
            let v = temporal_mode_eval(self, t);
            v * v
        })
    }
}

/// Composite Simpson rule.
pub(crate) fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 }.max(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Efficiency and purity budget of the heralded source.
///
/// `eta_apd` may be given directly (the quoted detector purity) or derived
/// from the count rates as (ζ_tot − ζ_dark)/ζ_tot; supplying both requires
/// them to agree to 1e−6. `eta_extra` is a catch-all optical factor not in
/// the published budget (default 1). `phi_jitter_rad` is the slow drift of
/// the qubit phase over a run, applied as dephasing (default 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImperfectionBudget {
    pub eta_nopo: f64,
    pub eta_vis: f64,
    pub eta_pr: f64,
    pub eta_det: f64,
    pub eta_apd: Option<f64>,
    /// Herald count rate, s⁻¹.
    pub zeta_tot: Option<f64>,
    /// Dark count rate, s⁻¹.
    pub zeta_dark: Option<f64>,
    pub p_multi: f64,
    pub eta_extra: f64,
    pub phi_jitter_rad: f64,
}

impl ImperfectionBudget {
    /// Loss-free budget: all efficiencies 1, no multiphoton, no dark counts.
    pub fn ideal() -> Self {
        ImperfectionBudget {
            eta_nopo: 1.0,
            eta_vis: 1.0,
            eta_pr: 1.0,
            eta_det: 1.0,
            eta_apd: Some(1.0),
            zeta_tot: None,
            zeta_dark: None,
            p_multi: 0.0,
            eta_extra: 1.0,
            phi_jitter_rad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        for (v, name) in [
            (self.eta_nopo, "eta_nopo"),
            (self.eta_vis, "eta_vis"),
            (self.eta_pr, "eta_pr"),
            (self.eta_det, "eta_det"),
            (self.eta_extra, "eta_extra"),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::InvalidArgument(format!("{name} = {v} outside [0,1]")));
            }
        }
        if let Some(v) = self.eta_apd {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::InvalidArgument(format!("eta_apd = {v} outside [0,1]")));
            }
        }
        match (self.zeta_tot, self.zeta_dark) {
            (Some(t), Some(d)) => {
                if t <= 0.0 || d < 0.0 || d > t {
                    return Err(CoreError::InvalidArgument(format!(
                        "count rates need 0 <= zeta_dark <= zeta_tot, got {d}, {t}"
                    )));
                }
                if let Some(explicit) = self.eta_apd {
                    let derived = (t - d) / t;
                    if (explicit - derived).abs() > 1e-6 {
                        return Err(CoreError::InvalidArgument(format!(
                            "eta_apd = {explicit} inconsistent with rate-derived {derived}"
                        )));
                    }
                }
            }
            (None, None) => {
                if self.eta_apd.is_none() {
                    return Err(CoreError::InvalidArgument(
                        "budget needs eta_apd or both count rates".into(),
                    ));
                }
            }
            _ => {
                return Err(CoreError::InvalidArgument(
                    "count rates must be supplied together".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.p_multi) {
            return Err(CoreError::InvalidArgument(format!("p_multi = {} outside [0,1]", self.p_multi)));
        }
        if self.phi_jitter_rad < 0.0 {
            return Err(CoreError::InvalidArgument("phi_jitter_rad must be >= 0".into()));
        }
        Ok(())
    }

    /// Detector purity: explicit value, or (ζ_tot − ζ_dark)/ζ_tot.
    pub fn eta_apd_effective(&self) -> Result<f64, CoreError> {
        if let Some(v) = self.eta_apd {
            return Ok(v);
        }
        match (self.zeta_tot, self.zeta_dark) {
            (Some(t), Some(d)) if t > 0.0 => Ok((t - d) / t),
            _ => Err(CoreError::InvalidArgument("budget needs eta_apd or both count rates".into())),
        }
    }

    /// Weight of the true heralded state vs the dark-count vacuum; the
    /// rate-derived value when rates are present.
    pub fn apd_weight(&self) -> Result<f64, CoreError> {
        match (self.zeta_tot, self.zeta_dark) {
            (Some(t), Some(d)) if t > 0.0 => Ok((t - d) / t),
            _ => self.eta_apd_effective(),
        }
    }

    /// Optical efficiency seen by each mode before the herald mixture:
    /// η_NOPO η_vis² η_pr η_det (times the catch-all factor).
    pub fn optical_efficiency(&self) -> f64 {
        self.eta_nopo * self.eta_vis * self.eta_vis * self.eta_pr * self.eta_det * self.eta_extra
    }
}

/// Heralded qubit c0|1,0⟩ + c1 e^{iΦ}|0,1⟩ with nonnegative amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinQubitSpec {
    pub c0: f64,
    pub c1: f64,
    pub phi: f64,
}

impl TimeBinQubitSpec {
    pub fn new(c0: f64, c1: f64, phi: f64) -> Result<Self, CoreError> {
        if c0 < 0.0 || c1 < 0.0 {
            return Err(CoreError::InvalidArgument("amplitudes must be nonnegative".into()));
        }
        if (c0 * c0 + c1 * c1 - 1.0).abs() > 1e-10 {
            return Err(CoreError::InvalidArgument(format!(
                "c0^2 + c1^2 = {}, expected 1",
                c0 * c0 + c1 * c1
            )));
        }
        Ok(TimeBinQubitSpec { c0, c1, phi: wrap_angle(phi) })
    }

    /// The ideal single-excitation ket in a d-level truncation.
    pub fn ket(&self, d: usize) -> Result<FockKet, CoreError> {
        FockKet::time_bin_qubit(self.c0, self.c1, self.phi, d)
    }

    /// Two excitations in the same reshaped mode:
    /// c0²|2,0⟩ + √2 c0 c1 e^{iΦ}|1,1⟩ + c1² e^{2iΦ}|0,2⟩.
    pub fn two_photon_ket(&self, d: usize) -> Result<FockKet, CoreError> {
        if d < 3 {
            return Err(CoreError::InvalidDimension(format!(
                "two-photon component needs d >= 3, got {d}"
            )));
        }
        let mut amp = vec![C64::new(0.0, 0.0); d * d];
        amp[pair_index(2, 0, d)] = C64::new(self.c0 * self.c0, 0.0);
        amp[pair_index(1, 1, d)] =
            C64::from_polar(core::f64::consts::SQRT_2 * self.c0 * self.c1, self.phi);
        amp[pair_index(0, 2, d)] = C64::from_polar(self.c1 * self.c1, 2.0 * self.phi);
        FockKet::new(amp, d, 2)
    }
}

fn wrap_angle(phi: f64) -> f64 {
    // map to (−π, π]
    let mut x = libm::fmod(phi + PI, 2.0 * PI);
    if x <= 0.0 {
        x += 2.0 * PI;
    }
    x - PI
}

/// Qubit heralded at the monitored output port of splitter 2:
/// amplitudes τ₁τ₂ : ρ₁ρ₂, relative phase Φ₂ + π (the interferometer's
/// minus sign folded into the phase so c0, c1 stay nonnegative).
pub fn qubit_from_mzi(cfg: &MziConfig) -> Result<TimeBinQubitSpec, CoreError> {
    cfg.validate()?;
    port_qubit(cfg.tau1 * cfg.tau2, -(cfg.rho1 * cfg.rho2), cfg.phi2)
}

/// Qubit heralded at the other output port: τ₁ρ₂ : ρ₁τ₂, phase Φ₂.
pub fn other_port_qubit(cfg: &MziConfig) -> Result<TimeBinQubitSpec, CoreError> {
    cfg.validate()?;
    port_qubit(cfg.tau1 * cfg.rho2, cfg.rho1 * cfg.tau2, cfg.phi2)
}

/// Normalize amplitudes (a0, a1·e^{iφ2}) into a TimeBinQubitSpec.
fn port_qubit(a0: f64, a1: f64, phi2: f64) -> Result<TimeBinQubitSpec, CoreError> {
    let n2 = a0 * a0 + a1 * a1;
    if n2 <= 0.0 {
        return Err(CoreError::InvalidArgument(
            "degenerate splitter configuration: both qubit amplitudes vanish".into(),
        ));
    }
    let n = libm::sqrt(n2);
    // fold signs into the relative phase, keep a global-phase-free form
    let c0 = a0.abs() / n;
    let c1 = a1.abs() / n;
    let mut phi = phi2;
    if a0.signum() * a1.signum() < 0.0 {
        phi += PI;
    }
    TimeBinQubitSpec::new(c0, c1, phi)
}

/// Overlap ∫ f₁(t) f₂(t) dt of the two time-bin modes:
/// closed form (1 + γΔt) e^{−γΔt}.
pub fn mode_overlap(cfg: &MziConfig) -> Result<f64, CoreError> {
    cfg.validate()?;
    let g = cfg.gamma * cfg.delta_t;
    Ok((1.0 + g) * libm::exp(-g))
}

/// The same overlap by piecewise Simpson quadrature (for cross-checking the
/// closed form). Splits at the kinks t = −Δt and t = 0; tails truncated
/// where the integrand is below ~1e−18 of its peak.
pub fn mode_overlap_quadrature(cfg: &MziConfig) -> Result<f64, CoreError> {
    cfg.validate()?;
    let g = cfg.gamma;
    let dt = cfg.delta_t;
    let f1 = ModeFunction { gamma: g, offset: 0.0 };
    let f2 = ModeFunction { gamma: g, offset: dt };
    let integrand = |t: f64| temporal_mode_eval(&f1, t) * temporal_mode_eval(&f2, t);
    let tail = 22.0 / g;
    let pieces = [(-dt - tail, -dt), (-dt, 0.0), (0.0, tail)];
    let mut acc = 0.0;
    for (a, b) in pieces {
        if b > a {
            // resolution ~ 2000 points per unit of γ·span, capped for speed
            let n = ((g * (b - a) * 2000.0) as usize).clamp(64, 400_000);
            acc += simpson(a, b, n, integrand);
        }
    }
    Ok(acc)
}

/// Overall heralding efficiency η_NOPO η_vis² η_pr η_det η_APD.
pub fn overall_efficiency(b: &ImperfectionBudget) -> Result<f64, CoreError> {
    b.validate()?;
    Ok(b.eta_nopo * b.eta_vis * b.eta_vis * b.eta_pr * b.eta_det * b.eta_apd_effective()?)
}

/// Realistic heralded state:
/// w_APD · jitter(loss_{η_opt}((1−p)|ψ⟩⟨ψ| + p|ψ₂⟩⟨ψ₂|)) + (1−w_APD)|0,0⟩⟨0,0|.
///
/// Loss acts on both modes; the phase jitter dephases mode 2 (the delayed
/// bin carries the relative phase). Requires d ≥ 3 when p_multi > 0 so the
/// two-photon component fits.
pub fn build_physical_state(
    spec: &TimeBinQubitSpec,
    b: &ImperfectionBudget,
    d: usize,
) -> Result<DensityMatrix, CoreError> {
    b.validate()?;
    if d < 2 {
        return Err(CoreError::InvalidDimension("physical state needs d >= 2".into()));
    }
    if b.p_multi > 0.0 && d < 3 {
        return Err(CoreError::InvalidDimension(
            "p_multi > 0 needs d >= 3 to hold the two-photon component".into(),
        ));
    }
    let pure = DensityMatrix::pure(&spec.ket(d)?)?;
    let mixed = if b.p_multi > 0.0 {
        let two = DensityMatrix::pure(&spec.two_photon_ket(d)?)?;
        // mix(other, w) weights self by w
        pure.mix(&two, 1.0 - b.p_multi)?
    } else {
        pure
    };
    let lossy = apply_loss_channel(&mixed, b.optical_efficiency())?;
    let jittered = apply_phase_jitter(&lossy, b.phi_jitter_rad, 2)?;
    let vac = DensityMatrix::vacuum(d, 2)?;
    jittered.mix(&vac, b.apd_weight()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn balanced_cfg() -> MziConfig {
        MziConfig {
            tau1: FRAC_1_SQRT_2,
            rho1: FRAC_1_SQRT_2,
            tau2: FRAC_1_SQRT_2,
            rho2: FRAC_1_SQRT_2,
            phi2: PI,
            delta_t: 242e-9,
            gamma: 2.0 * PI * 6.2e6,
        }
    }

    fn paper_budget() -> ImperfectionBudget {
        ImperfectionBudget {
            eta_nopo: 0.98,
            eta_vis: 0.98,
            eta_pr: 0.96,
            eta_det: 0.95,
            eta_apd: Some(0.98),
            zeta_tot: None,
            zeta_dark: None,
            p_multi: 0.0,
            eta_extra: 1.0,
            phi_jitter_rad: 0.0,
        }
    }

    #[test]
    fn balanced_mzi_gives_plus_state() {
        // τ=ρ=1/√2 everywhere, Φ₂=π -> (|1,0⟩+|0,1⟩)/√2
        let q = qubit_from_mzi(&balanced_cfg()).unwrap();
        assert!((q.c0 - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((q.c1 - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(q.phi.abs() < 1e-12);
    }

    #[test]
    fn two_to_one_amplitude_ratio() {
        // τ₁² = 0.8, τ₂² = 0.5 -> c0:c1 = 2:1
        let t1 = libm::sqrt(0.8);
        let r1 = libm::sqrt(0.2);
        let s = FRAC_1_SQRT_2;
        let cfg = MziConfig { tau1: t1, rho1: r1, tau2: s, rho2: s, phi2: 0.3, ..balanced_cfg() };
        let q = qubit_from_mzi(&cfg).unwrap();
        assert!((q.c0 / q.c1 - 2.0).abs() < 1e-10);
        assert!((q.c0 - 2.0 / libm::sqrt(5.0)).abs() < 1e-10);
    }

    #[test]
    fn blocked_long_arm() {
        let cfg = MziConfig { tau1: 1.0, rho1: 0.0, ..balanced_cfg() };
        let q = qubit_from_mzi(&cfg).unwrap();
        assert_eq!((q.c0, q.c1), (1.0, 0.0));
    }

    #[test]
    fn sign_flip_invariance() {
        let cfg = balanced_cfg();
        let flipped = MziConfig { tau1: -cfg.tau1, rho1: -cfg.rho1, ..cfg };
        let a = qubit_from_mzi(&cfg).unwrap();
        let b = qubit_from_mzi(&flipped).unwrap();
        assert!((a.c0 - b.c0).abs() < 1e-12);
        assert!((a.c1 - b.c1).abs() < 1e-12);
        assert!(wrap_angle(a.phi - b.phi).abs() < 1e-12);
    }

    #[test]
    fn port_probabilities_sum_to_one() {
        // τ₁²τ₂² + ρ₁²ρ₂² + τ₁²ρ₂² + ρ₁²τ₂² = (τ₁²+ρ₁²)(τ₂²+ρ₂²) = 1
        let cfg = MziConfig {
            tau1: libm::sqrt(0.7),
            rho1: libm::sqrt(0.3),
            tau2: libm::sqrt(0.45),
            rho2: libm::sqrt(0.55),
            ..balanced_cfg()
        };
        let sum = cfg.tau1.powi(2) * cfg.tau2.powi(2)
            + cfg.rho1.powi(2) * cfg.rho2.powi(2)
            + cfg.tau1.powi(2) * cfg.rho2.powi(2)
            + cfg.rho1.powi(2) * cfg.tau2.powi(2);
        assert!((sum - 1.0).abs() < 1e-12);
        // and both ports produce valid normalized specs
        qubit_from_mzi(&cfg).unwrap();
        other_port_qubit(&cfg).unwrap();
    }

    #[test]
    fn other_port_balanced() {
        let cfg = MziConfig { phi2: 0.0, ..balanced_cfg() };
        let q = other_port_qubit(&cfg).unwrap();
        assert!((q.c0 - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(q.phi.abs() < 1e-12);
    }

    #[test]
    fn overlap_anchors() {
        let cfg = balanced_cfg();
        // γΔt for the published numbers
        let got = mode_overlap(&cfg).unwrap();
        assert!((got - 8.394e-4).abs() < 1e-6, "overlap {got}");
        // γΔt = 20
        let cfg20 = MziConfig { gamma: 20.0 / 242e-9, ..cfg };
        let got20 = mode_overlap(&cfg20).unwrap();
        assert!((got20 - 21.0 * libm::exp(-20.0)).abs() < 1e-15);
        // Δt -> 0 limit is 1
        let cfg0 = MziConfig { delta_t: 1e-30, ..cfg };
        assert!((mode_overlap(&cfg0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_closed_form_vs_quadrature() {
        for gdt in [0.05, 0.5, 2.0, 9.424777960769379, 20.0, 30.0] {
            let cfg = MziConfig { delta_t: gdt / (2.0 * PI * 6.2e6), ..balanced_cfg() };
            let cf = mode_overlap(&cfg).unwrap();
            let q = mode_overlap_quadrature(&cfg).unwrap();
            assert!((cf - q).abs() < 1e-8, "γΔt = {gdt}: {cf} vs {q}");
        }
    }

    #[test]
    fn mode_function_normalization() {
        let f = ModeFunction { gamma: 2.0 * PI * 6.2e6, offset: 0.0 };
        // split at the kink, generous range
        let n = f.norm_squared_on_grid(-2e-6, 0.0, 4000) + f.norm_squared_on_grid(0.0, 2e-6, 4000);
        assert!((n - 1.0).abs() < 1e-6, "norm² = {n}");
        assert!((temporal_mode_eval(&f, 0.0) - libm::sqrt(f.gamma)).abs() < 1e-6);
        // decay by e at 1/γ
        let ratio = temporal_mode_eval(&f, 1.0 / f.gamma) / temporal_mode_eval(&f, 0.0);
        assert!((ratio - libm::exp(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn efficiency_budget_product() {
        let b = paper_budget();
        let eta = overall_efficiency(&b).unwrap();
        assert!((eta - 0.8412).abs() < 1e-6, "eta_all = {eta}");
        let ideal = overall_efficiency(&ImperfectionBudget::ideal()).unwrap();
        assert!((ideal - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apd_from_rates() {
        let b = ImperfectionBudget {
            eta_apd: None,
            zeta_tot: Some(5800.0),
            zeta_dark: Some(80.0),
            ..paper_budget()
        };
        let eta = b.eta_apd_effective().unwrap();
        assert!((eta - 0.9862068965517241).abs() < 1e-12);
        assert!((eta - 0.9862).abs() < 1e-4);
        b.validate().unwrap();
    }

    #[test]
    fn inconsistent_apd_rejected() {
        let b = ImperfectionBudget {
            eta_apd: Some(0.98),
            zeta_tot: Some(5800.0),
            zeta_dark: Some(80.0),
            ..paper_budget()
        };
        assert!(b.validate().is_err());
    }

    #[test]
    fn ideal_build_is_pure() {
        let spec = TimeBinQubitSpec::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, -PI / 2.0).unwrap();
        let rho = build_physical_state(&spec, &ImperfectionBudget::ideal(), 3).unwrap();
        let f = rho.fidelity(&spec.ket(3).unwrap()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_population_identity() {
        // p_multi = 0: vacuum population = 1 − w_APD η_opt exactly
        let spec = TimeBinQubitSpec::new(0.6, 0.8, 1.0).unwrap();
        for (w_src, eta) in [(0.9862068965517241, 0.8583671040000001), (0.95, 0.5)] {
            let b = ImperfectionBudget {
                eta_nopo: eta,
                eta_vis: 1.0,
                eta_pr: 1.0,
                eta_det: 1.0,
                eta_apd: Some(w_src),
                zeta_tot: None,
                zeta_dark: None,
                p_multi: 0.0,
                eta_extra: 1.0,
                phi_jitter_rad: 0.0,
            };
            let rho = build_physical_state(&spec, &b, 3).unwrap();
            let vac = rho.matrix().at(0, 0).re;
            assert!((vac - (1.0 - w_src * eta)).abs() < 1e-10, "vac = {vac}");
            rho.check_invariants().unwrap();
        }
    }

    #[test]
    fn half_efficiency_qubit_population() {
        let spec = TimeBinQubitSpec::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0).unwrap();
        let b = ImperfectionBudget {
            eta_nopo: 0.5,
            eta_apd: Some(1.0),
            ..ImperfectionBudget::ideal()
        };
        let rho = build_physical_state(&spec, &b, 3).unwrap();
        let d = 3;
        let qubit = rho.matrix().at(pair_index(1, 0, d), pair_index(1, 0, d)).re
            + rho.matrix().at(pair_index(0, 1, d), pair_index(0, 1, d)).re;
        assert!((qubit - 0.5).abs() < 1e-10);
    }

    #[test]
    fn multiphoton_needs_room() {
        let spec = TimeBinQubitSpec::new(1.0, 0.0, 0.0).unwrap();
        let b = ImperfectionBudget { p_multi: 0.05, ..ImperfectionBudget::ideal() };
        assert!(build_physical_state(&spec, &b, 2).is_err());
        let rho = build_physical_state(&spec, &b, 3).unwrap();
        rho.check_invariants().unwrap();
        // two-photon weight survives loss-free build
        let p = rho.photon_number_distribution();
        assert!((p[2] - 0.05).abs() < 1e-10);
        assert!((p[1] - 0.95).abs() < 1e-10);
    }

    #[test]
    fn two_photon_ket_amplitudes() {
        let spec = TimeBinQubitSpec::new(0.6, 0.8, 0.7).unwrap();
        let k = spec.two_photon_ket(3).unwrap();
        assert!((k.norm_sqr() - 1.0).abs() < 1e-12);
        let amps = k.amplitudes();
        assert!((amps[pair_index(2, 0, 3)].re - 0.36).abs() < 1e-12);
        let want11 = core::f64::consts::SQRT_2 * 0.48;
        assert!((amps[pair_index(1, 1, 3)].norm() - want11).abs() < 1e-12);
        assert!((amps[pair_index(0, 2, 3)].norm() - 0.64).abs() < 1e-12);
        // phases: arg of |1,1⟩ term is Φ, of |0,2⟩ term is 2Φ
        assert!((amps[pair_index(1, 1, 3)].arg() - 0.7).abs() < 1e-12);
        assert!((amps[pair_index(0, 2, 3)].arg() - 1.4).abs() < 1e-12);
    }
}
