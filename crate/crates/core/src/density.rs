//! Density matrices over one or two truncated modes.

use crate::error::CoreError;
use crate::fock::{pair_index, split_index, FockKet};
use crate::linalg::{self, CMat};
use crate::C64;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Mixed state with `dim_per_mode` levels per mode. Two-mode matrices use
/// the mode-1-major flat index throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
    dim_per_mode: usize,
    mode_count: usize,
}

/// Invariant tolerances: Hermiticity and trace at 1e-10, PSD at −1e-9.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = -1e-9;

impl DensityMatrix {
    /// Wrap and validate a matrix as a density operator.
    pub fn new(mat: CMat, dim_per_mode: usize, mode_count: usize) -> Result<Self, CoreError> {
        let dm = Self::from_parts_unchecked(mat, dim_per_mode, mode_count)?;
        dm.check_invariants()?;
        Ok(dm)
    }

    /// Wrap without the (eigenvalue-cost) invariant check. Shape is still
    /// verified. For callers that construct provably valid states.
    pub fn from_parts_unchecked(mat: CMat, dim_per_mode: usize, mode_count: usize) -> Result<Self, CoreError> {
        if mode_count != 1 && mode_count != 2 {
            return Err(CoreError::InvalidDimension(format!("mode_count must be 1 or 2, got {mode_count}")));
        }
        let n = dim_per_mode.pow(mode_count as u32);
        if mat.rows() != n || mat.cols() != n {
            return Err(CoreError::InvalidDimension(format!(
                "matrix is {}x{}, expected {n}x{n}",
                mat.rows(),
                mat.cols()
            )));
        }
        Ok(DensityMatrix { mat, dim_per_mode, mode_count })
    }

    /// |ψ⟩⟨ψ| from a ket.
    pub fn pure(psi: &FockKet) -> Result<Self, CoreError> {
        let n2 = psi.norm_sqr();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(CoreError::InvalidState(format!("ket norm² = {n2}, expected 1")));
        }
        Self::from_parts_unchecked(psi.outer(), psi.dim_per_mode(), psi.mode_count())
    }

    pub fn vacuum(dim_per_mode: usize, mode_count: usize) -> Result<Self, CoreError> {
        let n = dim_per_mode.pow(mode_count as u32);
        let mut m = CMat::zeros(n, n);
        m.set(0, 0, C64::new(1.0, 0.0));
        Self::from_parts_unchecked(m, dim_per_mode, mode_count)
    }

    pub fn maximally_mixed(dim_per_mode: usize, mode_count: usize) -> Result<Self, CoreError> {
        let n = dim_per_mode.pow(mode_count as u32);
        let mut m = CMat::zeros(n, n);
        let w = 1.0 / n as f64;
        for i in 0..n {
            m.set(i, i, C64::new(w, 0.0));
        }
        Self::from_parts_unchecked(m, dim_per_mode, mode_count)
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim_per_mode(&self) -> usize {
        self.dim_per_mode
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Total Hilbert dimension d^modes.
    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Hermiticity, unit trace, positivity (smallest eigenvalue ≥ −1e-9).
    pub fn check_invariants(&self) -> Result<(), CoreError> {
        if !self.mat.is_hermitian(HERMITICITY_TOL) {
            return Err(CoreError::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = self.mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(CoreError::InvalidState(format!("trace = {} + {}i, expected 1", tr.re, tr.im)));
        }
        let min = linalg::min_eigenvalue(&self.mat)?;
        if min < PSD_TOL {
            return Err(CoreError::InvalidState(format!("smallest eigenvalue {min} below {PSD_TOL}")));
        }
        Ok(())
    }

    /// Entry ⟨n1,n2|ρ|m1,m2⟩ of a two-mode state.
    pub fn entry_two_mode(&self, n1: usize, n2: usize, m1: usize, m2: usize) -> C64 {
        debug_assert_eq!(self.mode_count, 2);
        let d = self.dim_per_mode;
        self.mat.at(pair_index(n1, n2, d), pair_index(m1, m2, d))
    }

    /// Reduced state of the kept mode (1 or 2).
    pub fn partial_trace(&self, keep: usize) -> Result<DensityMatrix, CoreError> {
        if self.mode_count != 2 {
            return Err(CoreError::InvalidDimension("partial trace needs a two-mode state".into()));
        }
        if keep != 1 && keep != 2 {
            return Err(CoreError::InvalidArgument(format!("keep must be 1 or 2, got {keep}")));
        }
        let d = self.dim_per_mode;
        let mut out = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    let (r, c) = if keep == 1 {
                        (pair_index(i, k, d), pair_index(j, k, d))
                    } else {
                        (pair_index(k, i, d), pair_index(k, j, d))
                    };
                    acc += self.mat.at(r, c);
                }
                out.set(i, j, acc);
            }
        }
        DensityMatrix::from_parts_unchecked(out, d, 1)
    }

    /// Diagonal photon-number probabilities. Single mode: P(n) = ρ_nn.
    /// Two modes: total-number distribution P(n) = Σ_{n1+n2=n} ρ_(n1,n2),(n1,n2),
    /// length 2d−1.
    pub fn photon_number_distribution(&self) -> Vec<f64> {
        let d = self.dim_per_mode;
        match self.mode_count {
            1 => (0..d).map(|n| self.mat.at(n, n).re).collect(),
            _ => {
                let mut p = vec![0.0; 2 * d - 1];
                for idx in 0..self.mat.rows() {
                    let (n1, n2) = split_index(idx, d);
                    p[n1 + n2] += self.mat.at(idx, idx).re;
                }
                p
            }
        }
    }

    /// ⟨ψ|ρ|ψ⟩ against a pure target. Exact global-phase invariance.
    pub fn fidelity(&self, target: &FockKet) -> Result<f64, CoreError> {
        if target.len() != self.mat.rows() {
            return Err(CoreError::InvalidDimension(format!(
                "target length {} does not match state dimension {}",
                target.len(),
                self.mat.rows()
            )));
        }
        let rv = self.mat.matvec(target.amplitudes());
        let f: C64 = target
            .amplitudes()
            .iter()
            .zip(&rv)
            .map(|(t, r)| t.conj() * r)
            .sum();
        Ok(f.re.clamp(0.0, 1.0))
    }

    /// U ρ U†.
    pub fn apply_unitary(&self, u: &CMat) -> Result<DensityMatrix, CoreError> {
        if u.rows() != self.mat.rows() || u.cols() != self.mat.rows() {
            return Err(CoreError::InvalidDimension("unitary dimension mismatch".into()));
        }
        let m = u.matmul(&self.mat).matmul(&u.dagger());
        DensityMatrix::from_parts_unchecked(m, self.dim_per_mode, self.mode_count)
    }

    /// Renormalize trace to 1 (guards drift after long channel chains).
    pub fn renormalized(&self) -> Result<DensityMatrix, CoreError> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(CoreError::InvalidState("non-positive trace".into()));
        }
        DensityMatrix::from_parts_unchecked(self.mat.scale_re(1.0 / tr), self.dim_per_mode, self.mode_count)
    }

    /// Convex mixture w·self + (1−w)·other.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix, CoreError> {
        if self.mat.rows() != other.mat.rows() || self.mode_count != other.mode_count {
            return Err(CoreError::InvalidDimension("mixture dimension mismatch".into()));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(CoreError::InvalidArgument(format!("mixture weight {w} outside [0,1]")));
        }
        let m = self.mat.scale_re(w).add(&other.mat.scale_re(1.0 - w));
        DensityMatrix::from_parts_unchecked(m, self.dim_per_mode, self.mode_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn balanced_plus(d: usize) -> FockKet {
        FockKet::time_bin_qubit(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, d).unwrap()
    }

    #[test]
    fn vacuum_is_valid() {
        let v = DensityMatrix::vacuum(4, 2).unwrap();
        v.check_invariants().unwrap();
        assert_eq!(v.trace(), 1.0);
        assert_eq!(v.photon_number_distribution()[0], 1.0);
    }

    #[test]
    fn partial_trace_product_state() {
        // |1,0⟩⟨1,0| traced over mode 2 -> |1⟩⟨1|
        let d = 3;
        let psi = FockKet::two_mode_number_state(1, 0, d).unwrap();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let r1 = rho.partial_trace(1).unwrap();
        assert!((r1.matrix().at(1, 1).re - 1.0).abs() < 1e-12);
        let r2 = rho.partial_trace(2).unwrap();
        assert!((r2.matrix().at(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_qubit_marginal() {
        // either marginal of (|1,0⟩+|0,1⟩)/√2 is diag(1/2, 1/2)
        let d = 2;
        let rho = DensityMatrix::pure(&balanced_plus(d)).unwrap();
        for keep in [1, 2] {
            let r = rho.partial_trace(keep).unwrap();
            assert!((r.trace() - 1.0).abs() < 1e-12);
            assert!((r.matrix().at(0, 0).re - 0.5).abs() < 1e-12);
            assert!((r.matrix().at(1, 1).re - 0.5).abs() < 1e-12);
            assert!(r.matrix().at(0, 1).norm() < 1e-12);
        }
    }

    #[test]
    fn fidelity_anchors() {
        let d = 2;
        let psi = balanced_plus(d);
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!((rho.fidelity(&psi).unwrap() - 1.0).abs() < 1e-12);

        // maximally mixed qubit sector: fidelity 1/2 against any qubit ket.
        // build it as an even mixture of the two basis states
        let a = DensityMatrix::pure(&FockKet::two_mode_number_state(1, 0, d).unwrap()).unwrap();
        let b = DensityMatrix::pure(&FockKet::two_mode_number_state(0, 1, d).unwrap()).unwrap();
        let mixed = a.mix(&b, 0.5).unwrap();
        assert!((mixed.fidelity(&psi).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_global_phase_invariant() {
        let d = 2;
        let psi = balanced_plus(d);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let rotated = FockKet::new(
            psi.amplitudes().iter().map(|a| a * C64::from_polar(1.0, 1.234)).collect(),
            d,
            2,
        )
        .unwrap();
        assert!((rho.fidelity(&rotated).unwrap() - rho.fidelity(&psi).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn eigenbasis_mixture_fidelity() {
        // ρ = 0.9|ψ⟩⟨ψ| + 0.1|ψ⊥⟩⟨ψ⊥| -> fidelity 0.9
        let d = 2;
        let psi = balanced_plus(d);
        let perp = FockKet::time_bin_qubit(FRAC_1_SQRT_2, FRAC_1_SQRT_2, core::f64::consts::PI, d).unwrap();
        assert!(psi.inner(&perp).norm() < 1e-12);
        let rho = DensityMatrix::pure(&psi)
            .unwrap()
            .mix(&DensityMatrix::pure(&perp).unwrap(), 0.9)
            .unwrap();
        assert!((rho.fidelity(&psi).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn invariant_check_rejects_bad_trace() {
        let m = CMat::identity(4);
        assert!(DensityMatrix::new(m, 2, 2).is_err());
    }

    #[test]
    fn two_mode_number_distribution() {
        let d = 3;
        let rho = DensityMatrix::pure(&balanced_plus(d)).unwrap();
        let p = rho.photon_number_distribution();
        assert!((p[0] - 0.0).abs() < 1e-12);
        assert!((p[1] - 1.0).abs() < 1e-12);
        assert_eq!(p.len(), 2 * d - 1);
    }
}
