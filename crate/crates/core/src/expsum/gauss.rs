use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arith::pow_mod;
use crate::error::{invalid, Result};
use crate::special::e_ratio;

/// `G_r(a, b; q) = Σ_{x mod q} e((a x^r + b x) / q)`.
///
/// The argument `a x^r + b x` is reduced modulo `q` in integer arithmetic
/// before it touches the unit circle.
pub fn gauss_sum(r: u32, a: i64, b: i64, q: u64) -> Result<Complex64> {
    if q < 1 {
        return Err(invalid("modulus q must be >= 1"));
    }
    let qi = q as i128;
    let a = (a as i128).rem_euclid(qi) as u128;
    let b = (b as i128).rem_euclid(qi) as u128;
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 0..q {
        let xr = pow_mod(x, r as u64, q) as u128;
        let m = (a * xr + b * x as u128) % q as u128;
        acc += e_ratio(m as u64, q);
    }
    Ok(acc)
}

/// `G_r(a, 0; q)` for every `a = 0..q` at once.
///
/// Counts `h[v] = #{x mod q : x^r ≡ v}` and evaluates `Σ_v h[v] e(a v / q)`
/// for all `a` with one length-`q` FFT.
pub fn gauss_sums_all(r: u32, q: u64) -> Result<Vec<Complex64>> {
    if q < 1 {
        return Err(invalid("modulus q must be >= 1"));
    }
    let n = q as usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for x in 0..q {
        buf[pow_mod(x, r as u64, q) as usize].re += 1.0;
    }
    let mut planner = FftPlanner::<f64>::new();
    // The unnormalized inverse transform carries the e(+a v / q) kernel.
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf)
}
