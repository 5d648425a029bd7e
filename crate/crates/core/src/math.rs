//! Small numeric helpers: factorials, binomials, erf, Gauss-related sums.

/// n! as f64. Exact for n <= 22, correctly rounded well past anything a
/// truncated Fock space here needs. Panics above 170 (f64 overflow).
pub fn factorial(n: usize) -> f64 {
    assert!(n <= 170, "factorial overflow");
    let mut acc = 1.0f64;
    for k in 2..=n {
        acc *= k as f64;
    }
    acc
}

/// ln(n!) via lgamma.
pub fn ln_factorial(n: usize) -> f64 {
    libm::lgamma((n + 1) as f64)
}

/// Binomial coefficient C(n, k) as f64, multiplicative form (no large
/// intermediates).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * ((n - i) as f64) / ((i + 1) as f64);
    }
    acc
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// √(n!) as f64.
pub fn sqrt_factorial(n: usize) -> f64 {
    libm::sqrt(factorial(n))
}
