//! Kets and ladder operators in the truncated Fock basis.
//!
//! Two-mode objects use the mode-1-major flat index `(n1, n2) -> n1*d + n2`.
//! The canonical example pinning the sign convention: the target qubit
//! (|1,0⟩ − i|0,1⟩)/√2 has outer-product entry ρ[(1,0),(0,1)] = +0.5i.

use crate::error::CoreError;
use crate::linalg::CMat;
use crate::math;
use crate::C64;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Pure state over one or two modes, `d` levels per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FockKet {
    amplitudes: Vec<C64>,
    dim_per_mode: usize,
    mode_count: usize,
}

impl FockKet {
    pub fn new(amplitudes: Vec<C64>, dim_per_mode: usize, mode_count: usize) -> Result<Self, CoreError> {
        if mode_count != 1 && mode_count != 2 {
            return Err(CoreError::InvalidDimension(format!("mode_count must be 1 or 2, got {mode_count}")));
        }
        if dim_per_mode == 0 {
            return Err(CoreError::InvalidDimension("dim_per_mode must be positive".into()));
        }
        let want = dim_per_mode.pow(mode_count as u32);
        if amplitudes.len() != want {
            return Err(CoreError::InvalidDimension(format!(
                "amplitude vector has length {}, expected {want}",
                amplitudes.len()
            )));
        }
        Ok(FockKet { amplitudes, dim_per_mode, mode_count })
    }

    /// Single-mode number state |n⟩.
    pub fn number_state(n: usize, d: usize) -> Result<Self, CoreError> {
        if n >= d {
            return Err(CoreError::InvalidDimension(format!("|{n}⟩ does not fit in d={d}")));
        }
        let mut amp = vec![C64::new(0.0, 0.0); d];
        amp[n] = C64::new(1.0, 0.0);
        FockKet::new(amp, d, 1)
    }

    /// Two-mode number state |n1, n2⟩.
    pub fn two_mode_number_state(n1: usize, n2: usize, d: usize) -> Result<Self, CoreError> {
        if n1 >= d || n2 >= d {
            return Err(CoreError::InvalidDimension(format!("|{n1},{n2}⟩ does not fit in d={d}")));
        }
        let mut amp = vec![C64::new(0.0, 0.0); d * d];
        amp[n1 * d + n2] = C64::new(1.0, 0.0);
        FockKet::new(amp, d, 2)
    }

    /// Time-bin qubit c0|1,0⟩ + c1 e^{iΦ}|0,1⟩ (c0, c1 ≥ 0, normalized).
    pub fn time_bin_qubit(c0: f64, c1: f64, phi: f64, d: usize) -> Result<Self, CoreError> {
        if d < 2 {
            return Err(CoreError::InvalidDimension("time-bin qubit needs d >= 2".into()));
        }
        if (c0 * c0 + c1 * c1 - 1.0).abs() > 1e-10 {
            return Err(CoreError::InvalidArgument(format!(
                "amplitudes not normalized: c0^2+c1^2 = {}",
                c0 * c0 + c1 * c1
            )));
        }
        let mut amp = vec![C64::new(0.0, 0.0); d * d];
        amp[d] = C64::new(c0, 0.0); // |1,0⟩ at flat index 1*d+0
        amp[1] = C64::from_polar(c1, phi); // |0,1⟩
        FockKet::new(amp, d, 2)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim_per_mode(&self) -> usize {
        self.dim_per_mode
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescale to unit norm. Errors on the zero vector.
    pub fn normalized(&self) -> Result<Self, CoreError> {
        let n2 = self.norm_sqr();
        if n2 <= 0.0 {
            return Err(CoreError::InvalidState("cannot normalize zero ket".into()));
        }
        let s = 1.0 / libm::sqrt(n2);
        Ok(FockKet {
            amplitudes: self.amplitudes.iter().map(|a| a * s).collect(),
            dim_per_mode: self.dim_per_mode,
            mode_count: self.mode_count,
        })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &FockKet) -> C64 {
        assert_eq!(self.amplitudes.len(), other.amplitudes.len());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |self⟩⟨self| as a matrix.
    pub fn outer(&self) -> CMat {
        let n = self.amplitudes.len();
        CMat::from_fn(n, n, |i, j| self.amplitudes[i] * self.amplitudes[j].conj())
    }

    /// Tensor product, self as mode 1.
    pub fn tensor(&self, other: &FockKet) -> Result<FockKet, CoreError> {
        if self.mode_count != 1 || other.mode_count != 1 {
            return Err(CoreError::InvalidDimension("tensor of kets expects single-mode factors".into()));
        }
        if self.dim_per_mode != other.dim_per_mode {
            return Err(CoreError::InvalidDimension("tensor factors must share dim_per_mode".into()));
        }
        let d = self.dim_per_mode;
        let mut amp = Vec::with_capacity(d * d);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amp.push(a * b);
            }
        }
        FockKet::new(amp, d, 2)
    }
}

/// Flat index of |n1, n2⟩.
#[inline]
pub fn pair_index(n1: usize, n2: usize, d: usize) -> usize {
    n1 * d + n2
}

/// Inverse of `pair_index`.
#[inline]
pub fn split_index(idx: usize, d: usize) -> (usize, usize) {
    (idx / d, idx % d)
}

/// Annihilation operator: entries √n at (n−1, n).
pub fn annihilation_matrix(d: usize) -> Result<CMat, CoreError> {
    if d < 2 {
        return Err(CoreError::InvalidDimension(format!("annihilation operator needs d >= 2, got {d}")));
    }
    let mut a = CMat::zeros(d, d);
    for n in 1..d {
        a.set(n - 1, n, C64::new(libm::sqrt(n as f64), 0.0));
    }
    Ok(a)
}

/// Kronecker product of two operators, left factor = mode 1.
pub fn tensor_product(a: &CMat, b: &CMat) -> CMat {
    a.kron(b)
}

/// Coherent-state amplitudes ⟨n|α⟩ = e^{−|α|²/2} αⁿ/√(n!), truncated at d.
pub fn coherent_amplitudes(alpha: C64, d: usize) -> Vec<C64> {
    let w = libm::exp(-0.5 * alpha.norm_sqr());
    let mut amps = Vec::with_capacity(d);
    let mut pow = C64::new(1.0, 0.0);
    for n in 0..d {
        if n > 0 {
            pow *= alpha;
        }
        amps.push(pow * (w / math::sqrt_factorial(n)));
    }
    amps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annihilation_entries() {
        let a = annihilation_matrix(2).unwrap();
        assert_eq!(a.at(0, 1), C64::new(1.0, 0.0));
        assert_eq!(a.at(0, 0), C64::new(0.0, 0.0));
        assert_eq!(a.at(1, 0), C64::new(0.0, 0.0));
        assert_eq!(a.at(1, 1), C64::new(0.0, 0.0));

        let a3 = annihilation_matrix(3).unwrap();
        assert!((a3.at(1, 2).re - libm::sqrt(2.0)).abs() < 1e-12);
        assert!(annihilation_matrix(1).is_err());
    }

    #[test]
    fn commutator_truncation_corner() {
        // [a, a†] = 1 except the corner, which collects the truncated weight
        let d = 4;
        let a = annihilation_matrix(d).unwrap();
        let ad = a.dagger();
        let comm = a.matmul(&ad).sub(&ad.matmul(&a));
        for i in 0..d - 1 {
            assert!((comm.at(i, i) - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!((comm.at(d - 1, d - 1) - C64::new(-3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn tensor_index_convention() {
        // |1⟩⊗|0⟩ lands at flat index 1*d+0
        let d = 2;
        let one = FockKet::number_state(1, d).unwrap();
        let zero = FockKet::number_state(0, d).unwrap();
        let t = one.tensor(&zero).unwrap();
        assert_eq!(t.amplitudes()[2], C64::new(1.0, 0.0));
        assert_eq!(t.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);

        let id = CMat::identity(d);
        let both = tensor_product(&id, &id);
        assert_eq!(both, CMat::identity(d * d));
    }

    #[test]
    fn qubit_outer_product_sign() {
        // (|1,0⟩ − i|0,1⟩)/√2: Φ = −π/2, so ρ[(1,0),(0,1)] = c0·conj(c1 e^{−iπ/2}) = +0.5i
        let d = 2;
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let psi = FockKet::time_bin_qubit(s, s, -core::f64::consts::FRAC_PI_2, d).unwrap();
        let rho = psi.outer();
        let i10 = pair_index(1, 0, d);
        let i01 = pair_index(0, 1, d);
        assert!((rho.at(i10, i10).re - 0.5).abs() < 1e-12);
        assert!((rho.at(i01, i01).re - 0.5).abs() < 1e-12);
        assert!((rho.at(i10, i01) - C64::new(0.0, 0.5)).norm() < 1e-12);
        assert!((rho.at(i01, i10) - C64::new(0.0, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn coherent_amplitude_anchor() {
        // ⟨1|α=1⟩ = e^{−1/2} ≈ 0.6065
        let amps = coherent_amplitudes(C64::new(1.0, 0.0), 4);
        assert!((amps[1].re - 0.6065306597126334).abs() < 1e-12);
        assert!(amps[1].im.abs() < 1e-15);
    }

    #[test]
    fn normalization() {
        let k = FockKet::new(vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)], 2, 1).unwrap();
        let n = k.normalized().unwrap();
        assert!((n.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((n.amplitudes()[0].re - 0.6).abs() < 1e-12);
    }

    #[test]
    fn index_round_trip() {
        let d = 4;
        for n1 in 0..d {
            for n2 in 0..d {
                assert_eq!(split_index(pair_index(n1, n2, d), d), (n1, n2));
            }
        }
    }
}
