//! Small special-function helpers: the additive character `e(x)`, `ζ` at
//! integers and logarithmic moments of the unit exponential law.

use std::f64::consts::PI;

use num_complex::Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `e(x) = exp(2πix)`.
pub fn e(x: f64) -> Complex64 {
    Complex64::cis(2.0 * PI * x)
}

/// `e(num/den)` with the numerator reduced modulo `den` first.
pub fn e_ratio(num: u64, den: u64) -> Complex64 {
    let r = num % den;
    e(r as f64 / den as f64)
}

/// Unit-circle table `e(m/q)` for `m = 0..q`.
pub fn roots_of_unity(q: u64) -> Vec<Complex64> {
    (0..q).map(|m| e(m as f64 / q as f64)).collect()
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `ζ(n)` for integer `n >= 2` by direct summation with an Euler–Maclaurin tail.
pub fn zeta_int(n: u32) -> f64 {
    assert!(n >= 2);
    let big = 64.0f64;
    let s = n as f64;
    let head: f64 = (1..64).map(|m| (m as f64).powf(-s)).sum();
    let tail = big.powf(1.0 - s) / (s - 1.0) + 0.5 * big.powf(-s) + s / 12.0 * big.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * big.powf(-s - 3.0);
    head + tail
}

/// `E[(log Z)^m]` for `Z ~ Exp(1)`, `m = 0..=max`.
///
/// The cumulants of `log Z` are `κ_1 = -γ` and `κ_n = (-1)^n (n-1)! ζ(n)`.
pub fn exp_log_moments(max: usize) -> Vec<f64> {
    let mut kappa = vec![0.0; max + 1];
    let mut fact = 1.0;
    for n in 1..=max {
        kappa[n] = if n == 1 {
            -EULER_GAMMA
        } else {
            fact *= (n - 1) as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact * zeta_int(n as u32)
        };
    }
    let mut mu = vec![0.0; max + 1];
    mu[0] = 1.0;
    for n in 1..=max {
        let mut acc = 0.0;
        let mut binom = 1.0; // binom(n-1, j-1)
        for j in 1..=n {
            acc += binom * kappa[j] * mu[n - j];
            binom *= (n - j) as f64 / j as f64;
        }
        mu[n] = acc;
    }
    mu
}
