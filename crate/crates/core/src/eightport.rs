//! Eight-port homodyne simulation.
//!
//! An eight-port (dual-homodyne) detector splits the signal 50/50 and reads
//! conjugate quadratures on both halves. Records are scaled to unit gain, so
//! each coordinate carries the signal plus one full vacuum unit: outcomes
//! (x1, p1, x2, p2) are distributed as the two-mode Husimi Q function under
//! α_j = (x_j + i p_j)/√2, and vacuum input gives per-coordinate variance 1
//! (twice the homodyne ½).
//!
//! Sampling is exact rejection sampling. Envelope constants are derived from
//! rigorous bounds, so a bound violation is a bug, never bad luck.

use crate::density::DensityMatrix;
use crate::error::CoreError;
use crate::fock::coherent_amplitudes;
use crate::generation::MziConfig;
use crate::linalg::hermitian_eigenvalues;
use crate::math::factorial;
use crate::seed::chunk_seed;
use crate::C64;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Samples per RNG substream; fixed so output is independent of how the
/// stream is consumed or parallelized.
const CHUNK: usize = 4096;

/// One eight-port record. Vacuum variance is 1 per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSample {
    pub x1: f64,
    pub p1: f64,
    pub x2: f64,
    pub p2: f64,
}

/// One phase-tagged tomography entry: rotated quadrature values of both
/// modes at phases in [0, π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyDatum {
    pub theta1: f64,
    pub x1: f64,
    pub theta2: f64,
    pub x2: f64,
}

/// Uniformly spaced time series of quadrature variances.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub times: Vec<f64>,
    pub variance: Vec<f64>,
}

impl TimeTrace {
    pub fn new(times: Vec<f64>, variance: Vec<f64>) -> Result<Self, CoreError> {
        if times.len() != variance.len() || times.len() < 2 {
            return Err(CoreError::InvalidData("trace needs matching times/values, length >= 2".into()));
        }
        let dt = times[1] - times[0];
        if dt <= 0.0 {
            return Err(CoreError::InvalidData("trace time stamps must increase".into()));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
                return Err(CoreError::InvalidData("trace grid must be uniform".into()));
            }
        }
        if variance.iter().any(|v| *v < 0.0) {
            return Err(CoreError::InvalidData("variance must be nonnegative".into()));
        }
        Ok(TimeTrace { times, variance })
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

/// x(θ) = x cos θ + p sin θ.
#[inline]
pub fn quadrature_at_phase(x: f64, p: f64, theta: f64) -> f64 {
    x * libm::cos(theta) + p * libm::sin(theta)
}

/// Largest eigenvalue clamped to at least a small positive floor, used in
/// rejection envelopes. The PSD tolerance of DensityMatrix allows tiny
/// negative dust, hence the cushion.
fn lambda_max(rho: &DensityMatrix) -> Result<f64, CoreError> {
    let eig = hermitian_eigenvalues(rho.matrix())?;
    Ok(eig[eig.len() - 1].max(1e-12) + 1e-9)
}

/// S(u) = Σ_{m<d} u^m / m!.
fn poisson_partial_sum(u: f64, d: usize) -> f64 {
    let mut term = 1.0;
    let mut acc = 1.0;
    for m in 1..d {
        term *= u / m as f64;
        acc += term;
    }
    acc
}

/// Rigorous bound for max_u S(u)·e^{−c·u}, c in (0,1): interval bounds on a
/// grid (S increasing, exponential decreasing), then a decreasing tail bound
/// S(u) ≤ d·u^{d−1}/(d−1)! valid for u ≥ d−1.
fn envelope_su_exp(d: usize, c: f64) -> f64 {
    let u_end = (60.0f64).max(2.0 * (d as f64 - 1.0) / c);
    let step = 0.01;
    let n = (u_end / step) as usize + 1;
    let mut best: f64 = 0.0;
    for i in 0..n {
        let lo = i as f64 * step;
        let hi = lo + step;
        best = best.max(poisson_partial_sum(hi, d) * libm::exp(-c * lo));
    }
    // tail at u_end: monotone decreasing there since u_end > (d−1)/c
    let tail = d as f64 * libm::pow(u_end, (d - 1) as f64) / factorial(d - 1) * libm::exp(-c * u_end);
    best.max(tail)
}

/// Draw eight-port records distributed as the Q function of `rho`.
/// Deterministic for a fixed seed; chunked substreams keep the stream
/// independent of batching.
pub fn sample_q_function(
    rho: &DensityMatrix,
    n: usize,
    seed: u64,
) -> Result<Vec<QuadratureSample>, CoreError> {
    if rho.mode_count() != 2 {
        return Err(CoreError::InvalidDimension("eight-port sampling expects a two-mode state".into()));
    }
    if n == 0 {
        return Err(CoreError::InvalidArgument("sample count must be >= 1".into()));
    }
    rho.check_invariants()?;
    let d = rho.dim_per_mode();

    // proposal: independent N(0, s²) on each of the four coordinates, s² = d.
    // ratio  q/g = v†ρv · s⁴ · exp(Σ_j u_j / s²)  with u_j = |α_j|²,
    // v the normalized two-mode coherent vector (holds e^{−u_j} inside), so
    // q/g ≤ λ_max s⁴ Π_j S(u_j) e^{−u_j (1−1/s²)} ≤ λ_max s⁴ H².
    let s2 = d as f64;
    let c = 1.0 - 1.0 / s2;
    let h = envelope_su_exp(d, c);
    let m_bound = lambda_max(rho)? * s2 * s2 * h * h;
    let sigma = libm::sqrt(s2);

    let mut out = Vec::with_capacity(n);
    let mut chunk_idx = 0u64;
    while out.len() < n {
        let want = (n - out.len()).min(CHUNK);
        let mut rng = ChaCha12Rng::seed_from_u64(chunk_seed(seed, chunk_idx));
        let mut got = 0usize;
        // proposals per chunk are unbounded; the expected count is
        // want·M/(accept rate) and the guard below catches envelope bugs
        let mut attempts = 0u64;
        while got < want {
            attempts += 1;
            if attempts > 10_000_000 {
                return Err(CoreError::SamplerFailure(
                    "Q sampler acceptance rate collapsed; envelope bound bug".into(),
                ));
            }
            let x1: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let p1: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let x2: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let p2: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let u = rng.gen::<f64>();

            let a1 = C64::new(x1, p1) * core::f64::consts::FRAC_1_SQRT_2;
            let a2 = C64::new(x2, p2) * core::f64::consts::FRAC_1_SQRT_2;
            let q_over_g = coherent_quadratic_form(rho, a1, a2)
                * s2
                * s2
                * libm::exp((a1.norm_sqr() + a2.norm_sqr()) / s2);
            if q_over_g > m_bound * (1.0 + 1e-9) {
                return Err(CoreError::SamplerFailure(format!(
                    "Q sampler envelope violated: ratio {q_over_g} > bound {m_bound}"
                )));
            }
            if u * m_bound < q_over_g {
                out.push(QuadratureSample { x1, p1, x2, p2 });
                got += 1;
            }
        }
        chunk_idx += 1;
    }
    Ok(out)
}

/// v†ρv for the normalized two-mode coherent vector at (α₁, α₂).
fn coherent_quadratic_form(rho: &DensityMatrix, a1: C64, a2: C64) -> f64 {
    let d = rho.dim_per_mode();
    let v1 = coherent_amplitudes(a1, d);
    let v2 = coherent_amplitudes(a2, d);
    let mut v = Vec::with_capacity(d * d);
    for c1 in &v1 {
        for c2 in &v2 {
            v.push(c1 * c2);
        }
    }
    let rv = rho.matrix().matvec(&v);
    let q: C64 = v.iter().zip(&rv).map(|(a, b)| a.conj() * b).sum();
    q.re.max(0.0)
}

/// Turn each record into two phase-tagged tomography entries: one at
/// (θ₁, θ₂) drawn uniformly on [0, π)², one at the orthogonal phases
/// (θ + π/2 wrapped back into [0, π)). Values are computed at the wrapped
/// phase, which flips the sign relative to the unwrapped θ + π/2 when the
/// wrap applies (x(θ − π) = −x(θ)).
pub fn make_tomography_data(
    samples: &[QuadratureSample],
    seed: u64,
) -> Result<Vec<TomographyDatum>, CoreError> {
    if samples.is_empty() {
        return Err(CoreError::InvalidData("no samples".into()));
    }
    let mut out = Vec::with_capacity(2 * samples.len());
    for (ci, chunk) in samples.chunks(CHUNK).enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(chunk_seed(seed, ci as u64));
        for s in chunk {
            let th1 = rng.gen::<f64>() * PI;
            let th2 = rng.gen::<f64>() * PI;
            let th1b = orthogonal_phase(th1);
            let th2b = orthogonal_phase(th2);
            out.push(TomographyDatum {
                theta1: th1,
                x1: quadrature_at_phase(s.x1, s.p1, th1),
                theta2: th2,
                x2: quadrature_at_phase(s.x2, s.p2, th2),
            });
            out.push(TomographyDatum {
                theta1: th1b,
                x1: quadrature_at_phase(s.x1, s.p1, th1b),
                theta2: th2b,
                x2: quadrature_at_phase(s.x2, s.p2, th2b),
            });
        }
    }
    Ok(out)
}

/// θ + π/2 wrapped into [0, π).
#[inline]
pub fn orthogonal_phase(theta: f64) -> f64 {
    let t = theta + PI / 2.0;
    if t >= PI {
        t - PI
    } else {
        t
    }
}

/// Single-mode variant of `make_tomography_data` for (x, p) pair records:
/// two (θ, x(θ)) entries per record.
pub fn make_tomography_data_single(
    pairs: &[(f64, f64)],
    seed: u64,
) -> Result<Vec<(f64, f64)>, CoreError> {
    if pairs.is_empty() {
        return Err(CoreError::InvalidData("no samples".into()));
    }
    let mut out = Vec::with_capacity(2 * pairs.len());
    for (ci, chunk) in pairs.chunks(CHUNK).enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(chunk_seed(seed, ci as u64));
        for &(x, p) in chunk {
            let th = rng.gen::<f64>() * PI;
            let thb = orthogonal_phase(th);
            out.push((th, quadrature_at_phase(x, p, th)));
            out.push((thb, quadrature_at_phase(x, p, thb)));
        }
    }
    Ok(out)
}

/// Hermite-Gauss quadrature wavefunctions φ_m(x), vacuum variance ½:
/// φ₀ = π^{−1/4} e^{−x²/2}, φ_{m+1} = √(2/(m+1)) x φ_m − √(m/(m+1)) φ_{m−1}.
pub(crate) fn hermite_gauss(x: f64, d: usize) -> Vec<f64> {
    let mut phi = vec![0.0; d];
    phi[0] = libm::exp(-0.5 * x * x) / libm::pow(PI, 0.25);
    if d > 1 {
        phi[1] = core::f64::consts::SQRT_2 * x * phi[0];
    }
    for m in 1..d.saturating_sub(1) {
        phi[m + 1] = libm::sqrt(2.0 / (m + 1) as f64) * x * phi[m]
            - libm::sqrt(m as f64 / (m + 1) as f64) * phi[m - 1];
    }
    phi
}

/// F(x) = Σ_{m<d} φ_m(x)².
fn hg_profile(x: f64, d: usize) -> f64 {
    hermite_gauss(x, d).iter().map(|v| v * v).sum()
}

/// Rigorous per-coordinate envelope max_x F(x)/N(x; 0, σ²) for the homodyne
/// rejection sampler. Grid with a Lipschitz cushion (|d ln F/dx| ≤
/// 2|x| + 2√(2(d−1))), plus a closed-form decreasing tail bound
/// F(x) ≤ √e/√π · S(2x²) e^{−x²} valid for x ≥ d.
fn envelope_homodyne(d: usize, sigma2: f64) -> f64 {
    let gauss_norm = 1.0 / libm::sqrt(2.0 * PI * sigma2);
    let lip_base = 2.0 * libm::sqrt(2.0 * (d as f64 - 1.0).max(0.0));
    let x_end = libm::sqrt(2.0 * d as f64 - 1.0) + 4.0;
    let x_end = x_end.max(d as f64);
    let step = 0.005;
    let n = (x_end / step) as usize + 1;
    let mut best: f64 = 0.0;
    for i in 0..n {
        let lo = i as f64 * step;
        let hi = lo + step;
        // F on the cell bounded by its left value times the Lipschitz growth;
        // the Gaussian divisor is smallest at the right edge
        let f_bound = hg_profile(lo, d) * libm::exp((2.0 * hi + lip_base) * step);
        let g_min = gauss_norm * libm::exp(-0.5 * hi * hi / sigma2);
        best = best.max(f_bound / g_min);
    }
    // tail in w = x²: C·S(2w)·e^{−c₂ w} with c₂ = 1 − 1/(2σ²); cell-bounded
    // until the closed form is decreasing, which holds for w > (d−1)/c₂
    let c2 = 1.0 - 0.5 / sigma2;
    let c_tail = libm::sqrt(core::f64::consts::E) / libm::sqrt(PI) / gauss_norm;
    let w_start = x_end * x_end;
    let w_end = (w_start + 200.0).max(2.0 * (d as f64 - 1.0) / c2);
    let wn = 2000;
    let wstep = (w_end - w_start) / wn as f64;
    for i in 0..wn {
        let lo = w_start + i as f64 * wstep;
        let hi = lo + wstep;
        best = best.max(c_tail * poisson_partial_sum(2.0 * hi, d) * libm::exp(-c2 * lo));
    }
    let tail = c_tail
        * (d as f64 * libm::pow(2.0 * w_end, (d - 1) as f64) / factorial(d - 1))
        * libm::exp(-c2 * w_end);
    best.max(tail)
}

/// Draw (x₁, x₂) from the true joint homodyne marginal of a two-mode state
/// at phase 0 (no added eight-port vacuum).
pub fn sample_homodyne_joint(
    rho: &DensityMatrix,
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, CoreError> {
    if rho.mode_count() != 2 {
        return Err(CoreError::InvalidDimension("joint homodyne sampling expects a two-mode state".into()));
    }
    if n == 0 {
        return Err(CoreError::InvalidArgument("sample count must be >= 1".into()));
    }
    rho.check_invariants()?;
    let d = rho.dim_per_mode();
    let sigma2 = d as f64 - 0.5; // max homodyne variance is ⟨n⟩ + ½ ≤ d − ½
    let env = envelope_homodyne(d, sigma2);
    let m_bound = lambda_max(rho)? * env * env;
    let sigma = libm::sqrt(sigma2);
    let gauss_norm = 1.0 / libm::sqrt(2.0 * PI * sigma2);

    let mut out = Vec::with_capacity(n);
    let mut chunk_idx = 0u64;
    while out.len() < n {
        let want = (n - out.len()).min(CHUNK);
        let mut rng = ChaCha12Rng::seed_from_u64(chunk_seed(seed, chunk_idx));
        let mut got = 0usize;
        let mut attempts = 0u64;
        while got < want {
            attempts += 1;
            if attempts > 10_000_000 {
                return Err(CoreError::SamplerFailure(
                    "homodyne sampler acceptance rate collapsed; envelope bound bug".into(),
                ));
            }
            let x1: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let x2: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let u = rng.gen::<f64>();

            let p = homodyne_joint_density(rho, x1, x2);
            let g = gauss_norm
                * libm::exp(-0.5 * x1 * x1 / sigma2)
                * gauss_norm
                * libm::exp(-0.5 * x2 * x2 / sigma2);
            let ratio = p / g;
            if ratio > m_bound * (1.0 + 1e-9) {
                return Err(CoreError::SamplerFailure(format!(
                    "homodyne envelope violated: ratio {ratio} > bound {m_bound}"
                )));
            }
            if u * m_bound < ratio {
                out.push((x1, x2));
                got += 1;
            }
        }
        chunk_idx += 1;
    }
    Ok(out)
}

/// Joint density p(x₁, x₂) = w†ρw with w = φ(x₁) ⊗ φ(x₂).
fn homodyne_joint_density(rho: &DensityMatrix, x1: f64, x2: f64) -> f64 {
    let d = rho.dim_per_mode();
    let h1 = hermite_gauss(x1, d);
    let h2 = hermite_gauss(x2, d);
    let mut w = Vec::with_capacity(d * d);
    for a in &h1 {
        for b in &h2 {
            w.push(C64::new(a * b, 0.0));
        }
    }
    let rv = rho.matrix().matvec(&w);
    let p: C64 = w.iter().zip(&rv).map(|(a, b)| a.conj() * b).sum();
    p.re.max(0.0)
}

/// Synthesize the time-resolved quadrature-variance trace seen by a single
/// homodyne detector with the two time-bin mode functions present.
///
/// Per trial, (x₁, x₂) come from the joint homodyne marginal, and each time
/// point adds the orthogonal-complement vacuum:
/// x(t_k) = Σ_j f_j(t_k)√dt·x_j + n_k, n_k ~ N(0, ½(1 − Σ_j f_j(t_k)²dt)).
/// The trace reports the across-trial variance per time point; vacuum floor ½.
pub fn synthesize_variance_trace(
    rho: &DensityMatrix,
    cfg: &MziConfig,
    n_trials: usize,
    grid: &[f64],
    seed: u64,
) -> Result<TimeTrace, CoreError> {
    cfg.validate()?;
    if grid.len() < 2 {
        return Err(CoreError::InvalidArgument("time grid needs at least 2 points".into()));
    }
    if n_trials < 2 {
        return Err(CoreError::InvalidArgument("variance needs n_trials >= 2".into()));
    }
    let dt = grid[1] - grid[0];
    if dt <= 0.0 {
        return Err(CoreError::InvalidArgument("time grid must increase".into()));
    }
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(CoreError::InvalidArgument("time grid must be uniform".into()));
        }
    }
    if dt > 1.0 / (10.0 * cfg.gamma) {
        return Err(CoreError::InvalidArgument(format!(
            "grid step {dt} too coarse; need <= 1/(10 gamma) = {}",
            1.0 / (10.0 * cfg.gamma)
        )));
    }

    let f1 = crate::generation::ModeFunction { gamma: cfg.gamma, offset: 0.0 };
    let f2 = crate::generation::ModeFunction { gamma: cfg.gamma, offset: cfg.delta_t };
    let sqrt_dt = libm::sqrt(dt);
    // per-time-point weights and complement variance
    let mut w1 = Vec::with_capacity(grid.len());
    let mut w2 = Vec::with_capacity(grid.len());
    let mut compl = Vec::with_capacity(grid.len());
    for &t in grid {
        let a = crate::generation::temporal_mode_eval(&f1, t) * sqrt_dt;
        let b = crate::generation::temporal_mode_eval(&f2, t) * sqrt_dt;
        w1.push(a);
        w2.push(b);
        let c = 0.5 * (1.0 - a * a - b * b);
        if c < 0.0 {
            return Err(CoreError::InvalidArgument(
                "grid step too coarse: mode weight exceeds unity".into(),
            ));
        }
        compl.push(libm::sqrt(c));
    }

    let pairs = sample_homodyne_joint(rho, n_trials, crate::seed::stage_seed(seed, "trace-signal"))?;
    let noise_seed = crate::seed::stage_seed(seed, "trace-noise");

    // accumulate mean and second moment per time point
    let mut sum = vec![0.0f64; grid.len()];
    let mut sum2 = vec![0.0f64; grid.len()];
    for (ci, chunk) in pairs.chunks(CHUNK).enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(chunk_seed(noise_seed, ci as u64));
        for &(x1, x2) in chunk {
            for k in 0..grid.len() {
                let n: f64 = rng.sample::<f64, _>(StandardNormal);
                let v = w1[k] * x1 + w2[k] * x2 + compl[k] * n;
                sum[k] += v;
                sum2[k] += v * v;
            }
        }
    }
    let nf = n_trials as f64;
    let variance: Vec<f64> = (0..grid.len())
        .map(|k| {
            let mean = sum[k] / nf;
            ((sum2[k] / nf - mean * mean) * nf / (nf - 1.0)).max(0.0)
        })
        .collect();
    TimeTrace::new(grid.to_vec(), variance)
}
