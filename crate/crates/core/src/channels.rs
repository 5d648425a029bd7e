//! Channels and mode transforms: beam splitter, Bernoulli loss, dephasing.

use crate::density::DensityMatrix;
use crate::error::CoreError;
use crate::fock::{pair_index, split_index};
use crate::linalg::CMat;
use crate::math::{binomial, sqrt_factorial};
use crate::C64;
use alloc::format;
use alloc::vec::Vec;

/// Two-mode beam-splitter unitary on the d²-dimensional truncated space.
///
/// Convention (used identically everywhere in this crate):
/// a1† -> τ a1† − ρ e^{−iφ} a2†,  a2† -> ρ e^{iφ} a1† + τ a2†.
///
/// Photon-number conserving; exactly unitary on every total-number block
/// that fits inside the truncation (blocks with n1+n2 ≤ d−1). Components
/// that would leave the truncated space are dropped.
pub fn beamsplitter_unitary(d: usize, tau: f64, rho: f64, phi: f64) -> Result<CMat, CoreError> {
    if d < 2 {
        return Err(CoreError::InvalidDimension(format!("beam splitter needs d >= 2, got {d}")));
    }
    if (tau * tau + rho * rho - 1.0).abs() > 1e-10 {
        return Err(CoreError::InvalidArgument(format!(
            "beam splitter amplitudes not normalized: tau^2+rho^2 = {}",
            tau * tau + rho * rho
        )));
    }
    let refl_out = C64::from_polar(rho, phi); // ρ e^{iφ}, the a2† -> a1† term
    let refl_in = -C64::from_polar(rho, -phi); // −ρ e^{−iφ}, the a1† -> a2† term
    let mut u = CMat::zeros(d * d, d * d);
    for m in 0..d {
        for n in 0..d {
            let col = pair_index(m, n, d);
            let norm_in = sqrt_factorial(m) * sqrt_factorial(n);
            for j in 0..=m {
                for k in 0..=n {
                    let r = j + k;
                    let s = m + n - j - k;
                    if r >= d || s >= d {
                        continue;
                    }
                    let amp = binomial(m, j)
                        * binomial(n, k)
                        * libm::pow(tau, (j + n - k) as f64)
                        * (sqrt_factorial(r) * sqrt_factorial(s) / norm_in);
                    let phase = refl_in.powu((m - j) as u32) * refl_out.powu(k as u32);
                    u.add_at(pair_index(r, s, d), col, phase * amp);
                }
            }
        }
    }
    Ok(u)
}

/// Single-mode loss Kraus operators: K_j has entries
/// √C(n,j) η^{(n−j)/2} (1−η)^{j/2} at (n−j, n).
pub fn loss_kraus_ops(d: usize, eta: f64) -> Result<Vec<CMat>, CoreError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(CoreError::InvalidArgument(format!("efficiency {eta} outside [0,1]")));
    }
    let mut ops = Vec::with_capacity(d);
    for j in 0..d {
        let mut k = CMat::zeros(d, d);
        for n in j..d {
            let v = libm::sqrt(binomial(n, j))
                * libm::pow(eta, 0.5 * (n - j) as f64)
                * libm::pow(1.0 - eta, 0.5 * j as f64);
            k.set(n - j, n, C64::new(v, 0.0));
        }
        ops.push(k);
    }
    Ok(ops)
}

/// Bernoulli loss with efficiency η applied to every mode of the state.
pub fn apply_loss_channel(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix, CoreError> {
    let d = rho.dim_per_mode();
    let kraus = loss_kraus_ops(d, eta)?;
    let mut out = rho.clone();
    for mode in 1..=rho.mode_count() {
        out = apply_single_mode_kraus(&out, &kraus, mode)?;
    }
    Ok(out)
}

/// Apply a set of single-mode Kraus operators to one mode of a state.
pub fn apply_single_mode_kraus(
    rho: &DensityMatrix,
    kraus: &[CMat],
    mode: usize,
) -> Result<DensityMatrix, CoreError> {
    let d = rho.dim_per_mode();
    if mode < 1 || mode > rho.mode_count() {
        return Err(CoreError::InvalidArgument(format!("mode {mode} out of range")));
    }
    let id = CMat::identity(d);
    let mut acc = CMat::zeros(rho.dim(), rho.dim());
    for k in kraus {
        if k.rows() != d || k.cols() != d {
            return Err(CoreError::InvalidDimension("Kraus operator dimension mismatch".into()));
        }
        let full = if rho.mode_count() == 1 {
            k.clone()
        } else if mode == 1 {
            k.kron(&id)
        } else {
            id.kron(k)
        };
        acc = acc.add(&full.matmul(rho.matrix()).matmul(&full.dagger()));
    }
    DensityMatrix::from_parts_unchecked(acc, d, rho.mode_count())
}

/// Gaussian dephasing of one mode: coherences between number states n, n'
/// of that mode decay by exp(−σ²(n−n')²/2). This is exactly the average of
/// e^{i n φ_jitter} phase kicks over φ_jitter ~ N(0, σ²), so a per-sample
/// Gaussian phase jitter on an ensemble equals this channel on the state.
pub fn apply_phase_jitter(rho: &DensityMatrix, sigma: f64, mode: usize) -> Result<DensityMatrix, CoreError> {
    if sigma < 0.0 {
        return Err(CoreError::InvalidArgument(format!("jitter width {sigma} negative")));
    }
    if mode < 1 || mode > rho.mode_count() {
        return Err(CoreError::InvalidArgument(format!("mode {mode} out of range")));
    }
    if sigma == 0.0 {
        return Ok(rho.clone());
    }
    let d = rho.dim_per_mode();
    let n = rho.dim();
    let mut out = CMat::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let nr = if rho.mode_count() == 1 {
                r
            } else {
                let (a, b) = split_index(r, d);
                if mode == 1 {
                    a
                } else {
                    b
                }
            };
            let nc = if rho.mode_count() == 1 {
                c
            } else {
                let (a, b) = split_index(c, d);
                if mode == 1 {
                    a
                } else {
                    b
                }
            };
            let diff = nr as f64 - nc as f64;
            let damp = libm::exp(-0.5 * sigma * sigma * diff * diff);
            out.set(r, c, rho.matrix().at(r, c) * damp);
        }
    }
    DensityMatrix::from_parts_unchecked(out, d, rho.mode_count())
}
