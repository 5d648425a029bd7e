//! Wigner function of single-mode states, Fock-basis kernel.
//!
//! Normalization: W integrates to 1 over the (x,p) plane and the vacuum has
//! W(0,0) = 1/π, consistent with vacuum quadrature variance ½.

use crate::density::DensityMatrix;
use crate::error::CoreError;
use crate::math::factorial;
use crate::C64;

use core::f64::consts::PI;

/// Generalized Laguerre polynomial L_n^k(z), three-term recurrence.
fn laguerre(n: usize, k: f64, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0; // L_0
    let mut l = 1.0 + k - z; // L_1
    for i in 1..n {
        let next = ((2 * i + 1) as f64 + k - z) * l - (i as f64 + k) * lm1;
        lm1 = l;
        l = next / (i + 1) as f64;
    }
    l
}

/// Wigner kernel of |m⟩⟨n| at phase-space point α = (x+ip)/√2, for m ≥ n:
/// (1/π)(−1)^n √(n!/m!) (2ᾱ)^{m−n} L_n^{m−n}(4|α|²) e^{−2|α|²}.
fn kernel(m: usize, n: usize, alpha: C64) -> C64 {
    if m < n {
        return kernel(n, m, alpha).conj();
    }
    let k = m - n;
    let a2 = alpha.norm_sqr();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let coeff = sign / PI * libm::sqrt(factorial(n) / factorial(m)) * libm::exp(-2.0 * a2);
    let pow = (alpha.conj() * 2.0).powu(k as u32);
    pow * (coeff * laguerre(n, k as f64, 4.0 * a2))
}

/// W(x, p) of a single-mode state.
pub fn wigner_function(rho: &DensityMatrix, x: f64, p: f64) -> Result<f64, CoreError> {
    if rho.mode_count() != 1 {
        return Err(CoreError::InvalidDimension("Wigner function expects a single-mode state".into()));
    }
    let d = rho.dim_per_mode();
    let alpha = C64::new(x, p) * core::f64::consts::FRAC_1_SQRT_2;
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..d {
        acc += rho.matrix().at(m, m) * kernel(m, m, alpha);
        for n in 0..m {
            // (m,n) and (n,m) terms combine into twice the real part
            let t = rho.matrix().at(m, n) * kernel(m, n, alpha);
            acc += C64::new(2.0 * t.re, 0.0);
        }
    }
    Ok(acc.re)
}

/// Exact parity form of the origin value: W(0,0) = Σ_n (−1)^n ρ_nn / π.
pub fn wigner_origin_parity(rho: &DensityMatrix) -> Result<f64, CoreError> {
    if rho.mode_count() != 1 {
        return Err(CoreError::InvalidDimension("Wigner function expects a single-mode state".into()));
    }
    let mut s = 0.0;
    for (n, p) in rho.photon_number_distribution().iter().enumerate() {
        s += if n % 2 == 0 { *p } else { -*p };
    }
    Ok(s / PI)
}

/// Riemann sum of W over the square [−half, half]² with the given step.
/// Converges to 1 for states well inside the truncation.
pub fn wigner_integral(rho: &DensityMatrix, half: f64, step: f64) -> Result<f64, CoreError> {
    if step <= 0.0 || half <= 0.0 {
        return Err(CoreError::InvalidArgument("integration grid must be positive".into()));
    }
    let n = (2.0 * half / step) as usize + 1;
    let mut acc = 0.0;
    for i in 0..n {
        let x = -half + i as f64 * step;
        for j in 0..n {
            let p = -half + j as f64 * step;
            acc += wigner_function(rho, x, p)?;
        }
    }
    Ok(acc * step * step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockKet;

    fn number_state_dm(n: usize, d: usize) -> DensityMatrix {
        DensityMatrix::pure(&FockKet::number_state(n, d).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_origin() {
        let w = wigner_function(&number_state_dm(0, 5), 0.0, 0.0).unwrap();
        assert!((w - 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn single_photon_origin() {
        let w = wigner_function(&number_state_dm(1, 5), 0.0, 0.0).unwrap();
        assert!((w + 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn parity_mix_origin() {
        // diag(0.19, 0.79, 0.02) -> (0.19 − 0.79 + 0.02)/π ≈ −0.1846
        let mut m = crate::linalg::CMat::zeros(3, 3);
        m.set(0, 0, C64::new(0.19, 0.0));
        m.set(1, 1, C64::new(0.79, 0.0));
        m.set(2, 2, C64::new(0.02, 0.0));
        let rho = DensityMatrix::new(m, 3, 1).unwrap();
        let w = wigner_function(&rho, 0.0, 0.0).unwrap();
        assert!((w - (0.19 - 0.79 + 0.02) / PI).abs() < 1e-12);
        assert!((w - (-0.1846)).abs() < 5e-4);
        assert!((w - wigner_origin_parity(&rho).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn vacuum_gaussian_profile() {
        // vacuum: W = e^{−x²−p²}/π
        let rho = number_state_dm(0, 4);
        for (x, p) in [(0.5, 0.0), (0.0, 1.0), (1.0, -1.0)] {
            let w = wigner_function(&rho, x, p).unwrap();
            let want = libm::exp(-(x * x + p * p)) / PI;
            assert!((w - want).abs() < 1e-12);
        }
    }

    #[test]
    fn integral_normalization() {
        for n in 0..4 {
            let rho = number_state_dm(n, 6);
            let total = wigner_integral(&rho, 6.0, 0.05).unwrap();
            assert!((total - 1.0).abs() < 1e-3, "n={n}: integral {total}");
        }
    }

    #[test]
    fn coherence_moves_mean() {
        // state (|0⟩+|1⟩)/√2 has ⟨x⟩ = 1/√2 > 0: W should lean to x > 0
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let k = FockKet::new(alloc::vec![C64::new(s, 0.0), C64::new(s, 0.0), C64::new(0.0, 0.0)], 3, 1).unwrap();
        let rho = DensityMatrix::pure(&k).unwrap();
        let wp = wigner_function(&rho, 1.0, 0.0).unwrap();
        let wm = wigner_function(&rho, -1.0, 0.0).unwrap();
        assert!(wp > wm);
    }
}
