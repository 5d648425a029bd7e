//! Fock-basis maximum-likelihood reconstruction from phase-tagged
//! quadrature records.
//!
//! Dual-homodyne records carry one extra vacuum unit per coordinate. The
//! measurement model compensates exactly that: each POVM element is the
//! ideal quadrature projector convolved with a centered Gaussian of
//! variance ½. No other imperfection (optical loss in particular) is
//! corrected.
//!
//! The estimator is the RρR fixed-point iteration on binned data: phases
//! discretized to bin centers, record values to bins of fixed width, and
//! ρ ← N[RρR] with R = Σ_i (f_i/p_i)Π_i. Iteration stops at a
//! trace-distance tolerance; hitting the cap is flagged in the result
//! rather than thrown. Log-likelihood is non-decreasing across accepted
//! steps; if a plain step ever decreases it, the step is retried in
//! diluted form (I + εR)/(1+ε) with shrinking ε.
//!
//! The estimator consumes data only through bin frequencies, so shuffling
//! the input changes nothing; likewise the R accumulation runs in a fixed
//! canonical order, making results reproducible to the bit.

use crate::density::DensityMatrix;
use crate::eightport::QuadratureSample;
use crate::eightport::TomographyDatum;
use crate::error::CoreError;
use crate::fock::coherent_amplitudes;
use crate::linalg::{trace_distance, CMat};
use crate::math::{binomial, erf, sqrt_factorial};
use crate::C64;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

/// Probabilities below this are treated as numerical noise of the p = tr(Πρ)
/// contraction; flooring bounds the R weights without touching any
/// physically reachable regime.
const P_FLOOR: f64 = 1e-15;

/// Binning and iteration controls for the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleConfig {
    pub dim_per_mode: usize,
    pub x_bin_width: f64,
    pub x_range: f64,
    pub theta_bins: usize,
    pub max_iterations: usize,
    /// Trace distance between successive iterates that counts as converged.
    pub convergence_tol: f64,
    /// Fixed dilution ε for every step; None runs plain RρR (the
    /// monotonicity guard still dilutes single offending steps).
    pub dilution: Option<f64>,
}

impl Default for MleConfig {
    fn default() -> Self {
        MleConfig {
            dim_per_mode: 4,
            x_bin_width: 0.1,
            x_range: 6.0,
            theta_bins: 36,
            max_iterations: 2000,
            convergence_tol: 1e-7,
            dilution: None,
        }
    }
}

impl MleConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.dim_per_mode < 2 || self.dim_per_mode > 32 {
            return Err(CoreError::InvalidArgument(format!(
                "dim_per_mode {} outside 2..=32",
                self.dim_per_mode
            )));
        }
        if !(self.x_bin_width > 0.0) || !self.x_bin_width.is_finite() {
            return Err(CoreError::InvalidArgument("x_bin_width must be positive".into()));
        }
        if !(self.x_range > 0.0) || self.x_range > 1000.0 {
            return Err(CoreError::InvalidArgument("x_range must be in (0, 1000]".into()));
        }
        if self.theta_bins == 0 || self.theta_bins > 4096 {
            return Err(CoreError::InvalidArgument("theta_bins must be in 1..=4096".into()));
        }
        if self.max_iterations == 0 {
            return Err(CoreError::InvalidArgument("max_iterations must be >= 1".into()));
        }
        if !(self.convergence_tol > 0.0) || !self.convergence_tol.is_finite() {
            return Err(CoreError::InvalidArgument("convergence_tol must be positive".into()));
        }
        if let Some(e) = self.dilution {
            if !(e > 0.0) || !e.is_finite() {
                return Err(CoreError::InvalidArgument("dilution must be positive".into()));
            }
        }
        self.n_x_bins()?;
        Ok(())
    }

    /// Number of record-value bins; the range must cut into a whole number
    /// of bins.
    pub fn n_x_bins(&self) -> Result<usize, CoreError> {
        let raw = 2.0 * self.x_range / self.x_bin_width;
        let n = libm::round(raw);
        if !raw.is_finite() || (raw - n).abs() > 1e-9 || n < 1.0 || n > 4096.0 {
            return Err(CoreError::InvalidArgument(format!(
                "x range ±{} does not split into 1..=4096 bins of width {}",
                self.x_range, self.x_bin_width
            )));
        }
        Ok(n as usize)
    }

    /// Center phase of bin t; POVMs are evaluated here.
    pub fn theta_center(&self, t: usize) -> f64 {
        (t as f64 + 0.5) * PI / self.theta_bins as f64
    }

    /// [lo, hi) edges of record-value bin b (the last bin is closed above).
    pub fn x_bin_edges(&self, b: usize) -> (f64, f64) {
        let lo = -self.x_range + b as f64 * self.x_bin_width;
        (lo, lo + self.x_bin_width)
    }

    /// Phase bin for θ ∈ [0, π); None outside.
    pub fn theta_bin(&self, theta: f64) -> Option<usize> {
        if !theta.is_finite() || !(0.0..PI).contains(&theta) {
            return None;
        }
        Some(((theta / PI * self.theta_bins as f64) as usize).min(self.theta_bins - 1))
    }

    /// Record-value bin for |x| ≤ x_range; None outside.
    pub fn x_bin(&self, x: f64) -> Option<usize> {
        if !x.is_finite() || x.abs() > self.x_range {
            return None;
        }
        let nb = self.n_x_bins().ok()?;
        Some((((x + self.x_range) / self.x_bin_width) as usize).min(nb - 1))
    }
}

/// Output of one reconstruction.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    /// Accepted RρR steps performed.
    pub iterations: usize,
    /// Trace distance of the last step.
    pub final_delta: f64,
    /// Σ_i f_i ln p_i over observed bins (relative frequencies).
    pub log_likelihood: f64,
    /// False when the iteration cap was hit before reaching tolerance.
    pub converged: bool,
}

/// One cached measurement operator of the binned model.
#[derive(Debug, Clone)]
pub struct PovmBin {
    pub theta_index: usize,
    pub x_index: usize,
    pub operator: CMat,
}

/// Π(θ, [lo,hi]) in the number basis:
/// ⟨m|Π|n⟩ = e^{i(m−n)θ} ∫_bin dx ∫dy ψ_m(y)ψ_n(y) G(x−y; σ²=½).
pub fn quadrature_povm_element(theta: f64, lo: f64, hi: f64, d: usize) -> CMat {
    assert!(
        d >= 1 && theta.is_finite() && lo.is_finite() && hi.is_finite() && hi >= lo,
        "invalid POVM bin"
    );
    let kern = povm_kernel_real(d, lo, hi);
    CMat::from_fn(d, d, |m, n| {
        C64::from_polar(1.0, (m as f64 - n as f64) * theta) * kern[m * d + n]
    })
}

/// Rank-1 dual-homodyne projector |α₁,α₂⟩⟨α₁,α₂| from truncated coherent
/// amplitudes; the Q-function measure carries the 1/π² per-mode factor
/// separately.
pub fn coherent_povm_element(alpha1: C64, alpha2: C64, d: usize) -> CMat {
    assert!(d >= 1 && alpha1.is_finite() && alpha2.is_finite(), "invalid coherent projector");
    let v1 = coherent_amplitudes(alpha1, d);
    let v2 = coherent_amplitudes(alpha2, d);
    let mut v = Vec::with_capacity(d * d);
    for a in &v1 {
        for b in &v2 {
            v.push(a * b);
        }
    }
    CMat::from_fn(d * d, d * d, |r, c| v[r] * v[c].conj())
}

/// Every (θ-bin, x-bin) operator of the binned model.
pub fn quadrature_povm_bank(cfg: &MleConfig) -> Result<Vec<PovmBin>, CoreError> {
    cfg.validate()?;
    let nb = cfg.n_x_bins()?;
    let mut out = Vec::with_capacity(cfg.theta_bins * nb);
    for t in 0..cfg.theta_bins {
        let theta = cfg.theta_center(t);
        for b in 0..nb {
            let (lo, hi) = cfg.x_bin_edges(b);
            out.push(PovmBin {
                theta_index: t,
                x_index: b,
                operator: quadrature_povm_element(theta, lo, hi, cfg.dim_per_mode),
            });
        }
    }
    Ok(out)
}

/// Two-mode reconstruction from phase-tagged record pairs.
pub fn mle_reconstruct(
    data: &[TomographyDatum],
    cfg: &MleConfig,
) -> Result<ReconstructionResult, CoreError> {
    let scan = TwoModeScan::build(data, cfg)?;
    run_rr_mle(&scan, cfg, cfg.dim_per_mode, 2)
}

/// Single-mode variant on (θ, x) data.
pub fn mle_reconstruct_single(
    data: &[(f64, f64)],
    cfg: &MleConfig,
) -> Result<ReconstructionResult, CoreError> {
    let scan = SingleModeScan::build(data, cfg)?;
    run_rr_mle(&scan, cfg, cfg.dim_per_mode, 1)
}

/// Cross-check estimator operating on the raw records themselves with the
/// exact coherent-projector POVM (no binning, no phase mapping). Ignores the
/// binning fields of the config. Its log_likelihood is the mean log record
/// density up to the constant −ln(4π²) per datum.
pub fn mle_reconstruct_coherent(
    samples: &[QuadratureSample],
    cfg: &MleConfig,
) -> Result<ReconstructionResult, CoreError> {
    let scan = CoherentScan::build(samples, cfg)?;
    run_rr_mle(&scan, cfg, cfg.dim_per_mode, 2)
}

/// Σ_i f_i ln tr(Π_iρ) over observed two-mode bins. A zero-probability bin
/// holding data yields −∞ (reported, not thrown).
pub fn log_likelihood(
    rho: &DensityMatrix,
    data: &[TomographyDatum],
    cfg: &MleConfig,
) -> Result<f64, CoreError> {
    if rho.mode_count() != 2 || rho.dim_per_mode() != cfg.dim_per_mode {
        return Err(CoreError::InvalidDimension(
            "state shape does not match the reconstruction config".into(),
        ));
    }
    let scan = TwoModeScan::build(data, cfg)?;
    Ok(scan.scan(rho.matrix(), None, true))
}

/// Single-mode version of `log_likelihood`.
pub fn log_likelihood_single(
    rho: &DensityMatrix,
    data: &[(f64, f64)],
    cfg: &MleConfig,
) -> Result<f64, CoreError> {
    if rho.mode_count() != 1 || rho.dim_per_mode() != cfg.dim_per_mode {
        return Err(CoreError::InvalidDimension(
            "state shape does not match the reconstruction config".into(),
        ));
    }
    let scan = SingleModeScan::build(data, cfg)?;
    Ok(scan.scan(rho.matrix(), None, true))
}

/// Phase-0 kernel ⟨m|Π⁰([lo,hi])|n⟩; real because the quadrature
/// wavefunctions and the noise Gaussian are real. Closed form: expanding
/// ψ_m ψ_n in Hermite sums reduces the double integral to full-line Gaussian
/// moments M_q times bin moments B_q = ∫_bin x^q e^{−x²/2} dx, both by
/// recursion.
fn povm_kernel_real(d: usize, lo: f64, hi: f64) -> Vec<f64> {
    let qmax = 2 * (d - 1);
    let elo = libm::exp(-0.5 * lo * lo);
    let ehi = libm::exp(-0.5 * hi * hi);
    let mut bq = vec![0.0; qmax + 1];
    bq[0] = libm::sqrt(PI / 2.0) * (erf(hi / SQRT_2) - erf(lo / SQRT_2));
    if qmax >= 1 {
        bq[1] = elo - ehi;
    }
    for q in 2..=qmax {
        bq[q] = (q - 1) as f64 * bq[q - 2] - (powi(hi, q - 1) * ehi - powi(lo, q - 1) * elo);
    }
    let mut mq = vec![0.0; qmax + 1];
    mq[0] = libm::sqrt(2.0 * PI);
    let mut q = 2;
    while q <= qmax {
        mq[q] = (q - 1) as f64 * mq[q - 2];
        q += 2;
    }

    let mut out = vec![0.0; d * d];
    for m in 0..d {
        for n in 0..=m {
            let mut acc = 0.0;
            for j in 0..=m {
                for k in 0..=n {
                    let mom = m + n - j - k;
                    if mom % 2 == 1 {
                        continue;
                    }
                    // i^{m−j}(−i)^{n−k}: the exponent difference is even
                    // whenever the Gaussian moment survives, so only ±1 occur
                    let e = ((m - j) as i64 - (n - k) as i64).rem_euclid(4);
                    let sign = if e == 0 { 1.0 } else { -1.0 };
                    acc += sign * binomial(m, j) * binomial(n, k) * mq[mom] * bq[j + k];
                }
            }
            let val = acc * libm::exp2(-0.5 * (m + n) as f64)
                / (2.0 * PI * sqrt_factorial(m) * sqrt_factorial(n));
            out[m * d + n] = val;
            out[n * d + m] = val;
        }
    }
    out
}

fn powi(x: f64, n: usize) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(acc: &mut [f64], t: f64, x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += t * v;
    }
}

/// A measurement-model pass over the data: returns the log-likelihood at
/// `rho` and, when `r_op` is given, accumulates R = Σ_i (f_i/p_i)Π_i into
/// it (which must come in zeroed). `strict` reports −∞ on a zero-probability
/// outcome instead of flooring.
trait Scan {
    fn dim(&self) -> usize;
    fn scan(&self, rho: &CMat, r_op: Option<&mut CMat>, strict: bool) -> f64;
}

fn povm_bank_real(d: usize, cfg: &MleConfig) -> Result<Vec<Vec<f64>>, CoreError> {
    let nb = cfg.n_x_bins()?;
    Ok((0..nb)
        .map(|b| {
            let (lo, hi) = cfg.x_bin_edges(b);
            povm_kernel_real(d, lo, hi)
        })
        .collect())
}

fn phase_table(d: usize, cfg: &MleConfig) -> Vec<Vec<C64>> {
    (0..cfg.theta_bins)
        .map(|t| {
            let th = cfg.theta_center(t);
            (0..d).map(|m| C64::from_polar(1.0, m as f64 * th)).collect()
        })
        .collect()
}

struct SingleModeScan {
    d: usize,
    pi: Vec<Vec<f64>>,
    phases: Vec<Vec<C64>>,
    /// Per observed θ bin: its (x bin, relative frequency) list, canonically
    /// ordered.
    groups: Vec<(usize, Vec<(usize, f64)>)>,
}

impl SingleModeScan {
    fn build(data: &[(f64, f64)], cfg: &MleConfig) -> Result<Self, CoreError> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(CoreError::InvalidData("no tomography data".into()));
        }
        let nb = cfg.n_x_bins()?;
        let mut keys: Vec<u64> = Vec::with_capacity(data.len());
        for (idx, &(theta, x)) in data.iter().enumerate() {
            let t = cfg.theta_bin(theta).ok_or_else(|| {
                CoreError::InvalidData(format!("datum {idx}: theta {theta} outside [0, pi)"))
            })?;
            let b = cfg.x_bin(x).ok_or_else(|| {
                CoreError::InvalidData(format!(
                    "datum {idx}: x {x} outside +-{}",
                    cfg.x_range
                ))
            })?;
            keys.push((t * nb + b) as u64);
        }
        keys.sort_unstable();
        let wu = 1.0 / data.len() as f64;
        let mut groups: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let k = keys[i];
            let mut j = i + 1;
            while j < keys.len() && keys[j] == k {
                j += 1;
            }
            let w = (j - i) as f64 * wu;
            let b = (k % nb as u64) as usize;
            let t = (k / nb as u64) as usize;
            match groups.last_mut() {
                Some(g) if g.0 == t => g.1.push((b, w)),
                _ => groups.push((t, vec![(b, w)])),
            }
            i = j;
        }
        Ok(SingleModeScan {
            d: cfg.dim_per_mode,
            pi: povm_bank_real(cfg.dim_per_mode, cfg)?,
            phases: phase_table(cfg.dim_per_mode, cfg),
            groups,
        })
    }
}

impl Scan for SingleModeScan {
    fn dim(&self) -> usize {
        self.d
    }

    fn scan(&self, rho: &CMat, mut r_op: Option<&mut CMat>, strict: bool) -> f64 {
        let d = self.d;
        let rs = rho.as_slice();
        let mut rre = vec![0.0; d * d];
        let mut a = vec![0.0; d * d];
        let mut ll = 0.0;
        let mut hit_zero = false;
        for (t, items) in &self.groups {
            let ph = &self.phases[*t];
            // Re ρ̃ with ρ̃ = D†ρD, D = diag(e^{imθ}); p = Σ Reρ̃[i,m]Π⁰[m,i]
            // and Π⁰ symmetric makes it a flat dot product
            for i in 0..d {
                let cj = ph[i].conj();
                for m in 0..d {
                    rre[i * d + m] = (cj * rs[i * d + m] * ph[m]).re;
                }
            }
            a.fill(0.0);
            for &(b, w) in items {
                let p = dot(&rre, &self.pi[b]);
                if p <= 0.0 {
                    if strict {
                        hit_zero = true;
                        continue;
                    }
                }
                let p = if strict { p } else { p.max(P_FLOOR) };
                ll += w * libm::log(p);
                if r_op.is_some() {
                    axpy(&mut a, w / p, &self.pi[b]);
                }
            }
            if let Some(rm) = r_op.as_deref_mut() {
                let rms = rm.as_mut_slice();
                for i in 0..d {
                    for m in 0..d {
                        let v = a[i * d + m];
                        if v != 0.0 {
                            rms[i * d + m] += ph[i] * ph[m].conj() * v;
                        }
                    }
                }
            }
        }
        if hit_zero {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }
}

struct TwoRun {
    b1: usize,
    items: Vec<(usize, f64)>,
}

struct TwoGroup {
    t1: usize,
    t2: usize,
    runs: Vec<TwoRun>,
}

struct TwoModeScan {
    d: usize,
    pi: Vec<Vec<f64>>,
    phases: Vec<Vec<C64>>,
    groups: Vec<TwoGroup>,
}

impl TwoModeScan {
    fn build(data: &[TomographyDatum], cfg: &MleConfig) -> Result<Self, CoreError> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(CoreError::InvalidData("no tomography data".into()));
        }
        let nb = cfg.n_x_bins()?;
        let tb = cfg.theta_bins;
        let mut keys: Vec<u64> = Vec::with_capacity(data.len());
        for (idx, dat) in data.iter().enumerate() {
            let t1 = cfg.theta_bin(dat.theta1).ok_or_else(|| {
                CoreError::InvalidData(format!(
                    "datum {idx}: theta1 {} outside [0, pi)",
                    dat.theta1
                ))
            })?;
            let t2 = cfg.theta_bin(dat.theta2).ok_or_else(|| {
                CoreError::InvalidData(format!(
                    "datum {idx}: theta2 {} outside [0, pi)",
                    dat.theta2
                ))
            })?;
            let b1 = cfg.x_bin(dat.x1).ok_or_else(|| {
                CoreError::InvalidData(format!(
                    "datum {idx}: x1 {} outside +-{}",
                    dat.x1, cfg.x_range
                ))
            })?;
            let b2 = cfg.x_bin(dat.x2).ok_or_else(|| {
                CoreError::InvalidData(format!(
                    "datum {idx}: x2 {} outside +-{}",
                    dat.x2, cfg.x_range
                ))
            })?;
            keys.push((((t1 * tb + t2) * nb + b1) * nb + b2) as u64);
        }
        keys.sort_unstable();
        let wu = 1.0 / data.len() as f64;
        let mut groups: Vec<TwoGroup> = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let k = keys[i];
            let mut j = i + 1;
            while j < keys.len() && keys[j] == k {
                j += 1;
            }
            let w = (j - i) as f64 * wu;
            let b2 = (k % nb as u64) as usize;
            let k2 = k / nb as u64;
            let b1 = (k2 % nb as u64) as usize;
            let k3 = k2 / nb as u64;
            let t2 = (k3 % tb as u64) as usize;
            let t1 = (k3 / tb as u64) as usize;
            let fresh_group = match groups.last() {
                Some(g) => g.t1 != t1 || g.t2 != t2,
                None => true,
            };
            if fresh_group {
                groups.push(TwoGroup { t1, t2, runs: Vec::new() });
            }
            let g = groups.last_mut().unwrap();
            match g.runs.last_mut() {
                Some(r) if r.b1 == b1 => r.items.push((b2, w)),
                _ => g.runs.push(TwoRun { b1, items: vec![(b2, w)] }),
            }
            i = j;
        }
        Ok(TwoModeScan {
            d: cfg.dim_per_mode,
            pi: povm_bank_real(cfg.dim_per_mode, cfg)?,
            phases: phase_table(cfg.dim_per_mode, cfg),
            groups,
        })
    }
}

impl Scan for TwoModeScan {
    fn dim(&self) -> usize {
        self.d * self.d
    }

    fn scan(&self, rho: &CMat, mut r_op: Option<&mut CMat>, strict: bool) -> f64 {
        let d = self.d;
        let dim = d * d;
        let rs = rho.as_slice();
        let mut dph = vec![C64::new(0.0, 0.0); dim];
        // Re ρ̃ laid out [(j,n)-major, (i,m)-minor] so the Π⁰ contraction on
        // mode 1 is a contiguous dot product per (j,n)
        let mut r2 = vec![0.0; dim * dim];
        let mut c = vec![0.0; dim];
        let mut s = vec![0.0; dim];
        let mut acc = vec![0.0; dim * dim];
        let mut ll = 0.0;
        let mut hit_zero = false;
        for g in &self.groups {
            let ph1 = &self.phases[g.t1];
            let ph2 = &self.phases[g.t2];
            for i in 0..d {
                for j in 0..d {
                    dph[i * d + j] = ph1[i] * ph2[j];
                }
            }
            for i in 0..d {
                for j in 0..d {
                    let cj = dph[i * d + j].conj();
                    let row = (i * d + j) * dim;
                    for m in 0..d {
                        for n in 0..d {
                            let v = cj * rs[row + m * d + n] * dph[m * d + n];
                            r2[(j * d + n) * dim + (i * d + m)] = v.re;
                        }
                    }
                }
            }
            if r_op.is_some() {
                acc.fill(0.0);
            }
            for run in &g.runs {
                let pi1 = &self.pi[run.b1];
                for jn in 0..dim {
                    c[jn] = dot(&r2[jn * dim..(jn + 1) * dim], pi1);
                }
                s.fill(0.0);
                for &(b2, w) in &run.items {
                    let p = dot(&c, &self.pi[b2]);
                    if p <= 0.0 && strict {
                        hit_zero = true;
                        continue;
                    }
                    let p = if strict { p } else { p.max(P_FLOOR) };
                    ll += w * libm::log(p);
                    if r_op.is_some() {
                        axpy(&mut s, w / p, &self.pi[b2]);
                    }
                }
                if r_op.is_some() {
                    // acc += Π⁰_{b1} ⊗ s in the (mode-1-major) product basis
                    for i in 0..d {
                        for m in 0..d {
                            let pv = pi1[i * d + m];
                            if pv == 0.0 {
                                continue;
                            }
                            for j in 0..d {
                                let arow = (i * d + j) * dim + m * d;
                                let srow = j * d;
                                for n in 0..d {
                                    acc[arow + n] += pv * s[srow + n];
                                }
                            }
                        }
                    }
                }
            }
            if let Some(rm) = r_op.as_deref_mut() {
                let rms = rm.as_mut_slice();
                for r in 0..dim {
                    let pr = dph[r];
                    for cc in 0..dim {
                        let v = acc[r * dim + cc];
                        if v != 0.0 {
                            rms[r * dim + cc] += pr * dph[cc].conj() * v;
                        }
                    }
                }
            }
        }
        if hit_zero {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }
}

struct CoherentScan {
    dim: usize,
    n: usize,
    /// Per-datum truncated coherent vectors, n × dim flat.
    vs: Vec<C64>,
}

impl CoherentScan {
    fn build(samples: &[QuadratureSample], cfg: &MleConfig) -> Result<Self, CoreError> {
        cfg.validate()?;
        if samples.is_empty() {
            return Err(CoreError::InvalidData("no samples".into()));
        }
        let d = cfg.dim_per_mode;
        let dim = d * d;
        let mut vs = Vec::with_capacity(samples.len() * dim);
        for (idx, s) in samples.iter().enumerate() {
            for v in [s.x1, s.p1, s.x2, s.p2] {
                if !v.is_finite() || v.abs() > 100.0 {
                    return Err(CoreError::InvalidData(format!(
                        "sample {idx}: record value {v} out of the representable range"
                    )));
                }
            }
            let a1 = C64::new(s.x1, s.p1) * core::f64::consts::FRAC_1_SQRT_2;
            let a2 = C64::new(s.x2, s.p2) * core::f64::consts::FRAC_1_SQRT_2;
            let v1 = coherent_amplitudes(a1, d);
            let v2 = coherent_amplitudes(a2, d);
            for a in &v1 {
                for b in &v2 {
                    vs.push(a * b);
                }
            }
        }
        Ok(CoherentScan { dim, n: samples.len(), vs })
    }
}

impl Scan for CoherentScan {
    fn dim(&self) -> usize {
        self.dim
    }

    fn scan(&self, rho: &CMat, mut r_op: Option<&mut CMat>, strict: bool) -> f64 {
        let dim = self.dim;
        let rs = rho.as_slice();
        let w = 1.0 / self.n as f64;
        let mut y = vec![C64::new(0.0, 0.0); dim];
        let mut ll = 0.0;
        let mut hit_zero = false;
        for k in 0..self.n {
            let v = &self.vs[k * dim..(k + 1) * dim];
            for (r, yr) in y.iter_mut().enumerate() {
                let row = &rs[r * dim..(r + 1) * dim];
                let mut a = C64::new(0.0, 0.0);
                for (rv, vv) in row.iter().zip(v) {
                    a += rv * vv;
                }
                *yr = a;
            }
            let mut p = 0.0;
            for r in 0..dim {
                p += (v[r].conj() * y[r]).re;
            }
            if p <= 0.0 && strict {
                hit_zero = true;
                continue;
            }
            let p = if strict { p } else { p.max(P_FLOOR) };
            ll += w * libm::log(p);
            if let Some(rm) = r_op.as_deref_mut() {
                let rms = rm.as_mut_slice();
                let t = w / p;
                for r in 0..dim {
                    let tv = v[r] * t;
                    let row = r * dim;
                    for cc in 0..dim {
                        rms[row + cc] += tv * v[cc].conj();
                    }
                }
            }
        }
        if hit_zero {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }
}

fn slack(l: f64) -> f64 {
    1e-9 * (1.0 + l.abs())
}

/// ρ ← RρR, symmetrized and renormalized.
fn apply_rr(r: &CMat, rho: &CMat) -> Result<CMat, CoreError> {
    let m = r.matmul(rho).matmul(r);
    let sym = m.add(&m.dagger()).scale_re(0.5);
    let tr = sym.trace().re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(CoreError::InvalidState(
            "iteration produced a non-positive trace; the data carry no support in range".into(),
        ));
    }
    Ok(sym.scale_re(1.0 / tr))
}

fn dilute(r: &CMat, eps: f64) -> CMat {
    let n = r.rows();
    let mut out = r.scale_re(eps / (1.0 + eps));
    let s = 1.0 / (1.0 + eps);
    for i in 0..n {
        out.add_at(i, i, C64::new(s, 0.0));
    }
    out
}

fn run_rr_mle(
    prob: &dyn Scan,
    cfg: &MleConfig,
    dim_per_mode: usize,
    mode_count: usize,
) -> Result<ReconstructionResult, CoreError> {
    let dim = prob.dim();
    let mut rho = CMat::identity(dim).scale_re(1.0 / dim as f64);
    let mut r = CMat::zeros(dim, dim);
    let mut l_prev = prob.scan(&rho, Some(&mut r), false);
    let mut iterations = 0usize;
    let mut converged = false;
    let mut final_delta = f64::INFINITY;
    while iterations < cfg.max_iterations {
        let mut cand = match cfg.dilution {
            Some(e) => apply_rr(&dilute(&r, e), &rho)?,
            None => apply_rr(&r, &rho)?,
        };
        let mut r_next = CMat::zeros(dim, dim);
        let mut l_new = prob.scan(&cand, Some(&mut r_next), false);
        if l_new < l_prev - slack(l_prev) {
            // monotonicity guard: redo this one step with shrinking dilution;
            // ε → 0 reproduces ρ itself, so termination is guaranteed
            let mut eps = cfg.dilution.unwrap_or(1.0).min(1.0);
            let mut fixed = false;
            for _ in 0..60 {
                let c2 = apply_rr(&dilute(&r, eps), &rho)?;
                let l2 = prob.scan(&c2, None, false);
                if l2 >= l_prev - slack(l_prev) {
                    cand = c2;
                    r_next = CMat::zeros(dim, dim);
                    l_new = prob.scan(&cand, Some(&mut r_next), false);
                    fixed = true;
                    break;
                }
                eps *= 0.25;
            }
            if !fixed {
                return Err(CoreError::InvalidState(
                    "likelihood guard exhausted dilution retries".into(),
                ));
            }
        }
        iterations += 1;
        // cheap trace-distance bracket ½‖Δ‖_F ≤ T ≤ ½√dim‖Δ‖_F; exact
        // eigenvalues only when the bracket straddles the tolerance
        let df = cand.sub(&rho).frobenius_norm();
        let done = if 0.5 * df * libm::sqrt(dim as f64) < cfg.convergence_tol {
            true
        } else if 0.5 * df >= cfg.convergence_tol {
            false
        } else {
            trace_distance(&cand, &rho)? < cfg.convergence_tol
        };
        if done || iterations == cfg.max_iterations {
            final_delta = trace_distance(&cand, &rho)?;
        }
        rho = cand;
        r = r_next;
        l_prev = l_new;
        if done {
            converged = true;
            break;
        }
    }
    let rho = DensityMatrix::new(rho, dim_per_mode, mode_count)?;
    Ok(ReconstructionResult { rho, iterations, final_delta, log_likelihood: l_prev, converged })
}
