//! Dense complex matrices sized for truncated Fock spaces (≤ a few hundred
//! rows). Hand-rolled on purpose: the dimensions here never justify a BLAS
//! dependency, and `no_std` keeps the surface small.

use crate::error::CoreError;
use crate::C64;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] += v;
    }

    /// Raw row-major slice.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Raw mutable row-major slice.
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMat {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: f64) -> CMat {
        self.map(|z| z * s)
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row_k = k * other.cols;
                let row_i = i * other.cols;
                for j in 0..other.cols {
                    out.data[row_i + j] += a * other.data[row_k + j];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    /// Kronecker product, left factor major: index (i1*rB+i2, j1*cB+j2).
    pub fn kron(&self, other: &CMat) -> CMat {
        let (ra, ca, rb, cb) = (self.rows, self.cols, other.rows, other.cols);
        let mut out = CMat::zeros(ra * rb, ca * cb);
        for i1 in 0..ra {
            for j1 in 0..ca {
                let a = self.at(i1, j1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for i2 in 0..rb {
                    for j2 in 0..cb {
                        out.set(i1 * rb + i2, j1 * cb + j2, a * other.at(i2, j2));
                    }
                }
            }
        }
        out
    }

    /// y = M v.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let row = i * self.cols;
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.data[row + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self.at(i, j) - self.at(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// (self * other).trace() without forming the product.
    pub fn trace_of_product(&self, other: &CMat) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.at(i, k) * other.at(k, i);
            }
        }
        acc
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
/// Returned ascending. The input is checked for Hermiticity at 1e-8.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>, CoreError> {
    if m.rows() != m.cols() {
        return Err(CoreError::InvalidDimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_hermitian(1e-8 * (1.0 + m.max_abs())) {
        return Err(CoreError::InvalidState("matrix is not Hermitian".into()));
    }
    let n = m.rows();
    let mut a = m.clone();
    // symmetrize exactly so rounding in the input cannot drift the sweep
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (a.at(i, j) + a.at(j, i).conj()) * 0.5;
            a.set(i, j, v);
            a.set(j, i, v.conj());
        }
        let d = a.at(i, i);
        a.set(i, i, C64::new(d.re, 0.0));
    }

    let off = |a: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.at(i, j).norm_sqr();
                }
            }
        }
        s
    };
    let scale = a.frobenius_norm().max(1.0);
    let tol = 1e-30 * scale * scale;

    for _sweep in 0..60 {
        if off(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // phase factor making the pivot real, then a real Givens turn
                let phase = apq / mag; // e^{i phi}
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                // U = P J restricted to (p,q): U[p][p]=c, U[p][q]=s,
                // U[q][p]=-conj(phase) s, U[q][q]=conj(phase) c
                let ph_c = phase.conj();
                // rows: (U† A)
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, apk * c - aqk * phase * s);
                    a.set(q, k, apk * s + aqk * phase * c);
                }
                // cols: (· U)
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, akp * c - akq * ph_c * s);
                    a.set(k, q, akp * s + akq * ph_c * c);
                }
                // pivot entries are now real up to rounding; clamp
                let dpp = a.at(p, p);
                let dqq = a.at(q, q);
                a.set(p, p, C64::new(dpp.re, 0.0));
                a.set(q, q, C64::new(dqq.re, 0.0));
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalue NaN"));
    Ok(eig)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> Result<f64, CoreError> {
    Ok(hermitian_eigenvalues(m)?[0])
}

/// Trace distance ½‖A−B‖₁ between Hermitian matrices.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64, CoreError> {
    let d = a.sub(b);
    let eig = hermitian_eigenvalues(&d)?;
    Ok(0.5 * eig.iter().map(|l| l.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn matmul_identity() {
        let m = CMat::from_fn(3, 3, |i, j| c((i * 3 + j) as f64, (i + j) as f64));
        let id = CMat::identity(3);
        assert_eq!(m.matmul(&id), m);
        assert_eq!(id.matmul(&m), m);
    }

    #[test]
    fn kron_index_order() {
        // A ⊗ B with A 2x2, B 2x2: entry (i1*2+i2, j1*2+j2) = A[i1,j1] B[i2,j2]
        let a = CMat::from_fn(2, 2, |i, j| c((10 * i + j) as f64, 0.0));
        let b = CMat::from_fn(2, 2, |i, j| c((100 * i + j) as f64, 0.0));
        let k = a.kron(&b);
        assert_eq!(k.at(3, 2), a.at(1, 1) * b.at(1, 0));
        assert_eq!(k.at(0, 3), a.at(0, 1) * b.at(0, 1));
        assert_eq!(k.rows(), 4);
    }

    #[test]
    fn dagger_involution() {
        let m = CMat::from_fn(2, 3, |i, j| c(i as f64, j as f64 + 1.0));
        assert_eq!(m.dagger().dagger(), m);
        assert_eq!(m.dagger().at(2, 1), c(1.0, -3.0));
    }

    #[test]
    fn eigenvalues_diagonal() {
        let mut m = CMat::zeros(3, 3);
        m.set(0, 0, c(2.0, 0.0));
        m.set(1, 1, c(-1.0, 0.0));
        m.set(2, 2, c(0.5, 0.0));
        let e = hermitian_eigenvalues(&m).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-12);
        assert!((e[1] - 0.5).abs() < 1e-12);
        assert!((e[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_pauli_y_like() {
        // [[0, -i],[i, 0]] has eigenvalues ±1
        let mut m = CMat::zeros(2, 2);
        m.set(0, 1, c(0.0, -1.0));
        m.set(1, 0, c(0.0, 1.0));
        let e = hermitian_eigenvalues(&m).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-12);
        assert!((e[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_sum_is_trace() {
        // fixed pseudo-random Hermitian matrix
        let n = 6;
        let mut st = 12345u64;
        let mut next = || {
            st = crate::seed::splitmix64(st);
            (st >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let re = next();
                let im = if i == j { 0.0 } else { next() };
                m.set(i, j, c(re, im));
                m.set(j, i, c(re, -im));
            }
        }
        let e = hermitian_eigenvalues(&m).unwrap();
        let tr: f64 = (0..n).map(|i| m.at(i, i).re).sum();
        assert!((e.iter().sum::<f64>() - tr).abs() < 1e-10);
        // Frobenius norm preserved by unitary similarity
        let f2: f64 = e.iter().map(|l| l * l).sum();
        assert!((f2 - m.frobenius_norm().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn trace_distance_anchor() {
        // ½‖diag(1,0) − diag(0,1)‖₁ = 1
        let mut a = CMat::zeros(2, 2);
        a.set(0, 0, c(1.0, 0.0));
        let mut b = CMat::zeros(2, 2);
        b.set(1, 1, c(1.0, 0.0));
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMat::zeros(2, 2);
        m.set(0, 1, c(1.0, 0.0));
        assert!(hermitian_eigenvalues(&m).is_err());
    }

    #[test]
    fn trace_of_product_matches() {
        let a = CMat::from_fn(3, 3, |i, j| c(i as f64 - j as f64, (i * j) as f64));
        let b = CMat::from_fn(3, 3, |i, j| c((i + j) as f64, j as f64));
        let direct = a.matmul(&b).trace();
        let fast = a.trace_of_product(&b);
        assert!((direct - fast).norm() < 1e-12);
    }
}
