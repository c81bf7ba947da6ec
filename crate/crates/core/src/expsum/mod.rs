//! Exponential sums over powers and over the divisor function, complete Gauss
//! sums, the oscillatory profiles `Ψ_r` and `I_j`, and the Farey dissection.

mod arcs;
mod gauss;
mod profile;

pub use arcs::{
    dissect, gauss_bound_scan, major_arc_residual, major_arc_scan, minor_arc_scan, weyl_saving, ArcPartition, GaussBoundRow,
    RationalArc, ResidualRow, WeylRow,
};
pub use gauss::{gauss_sum, gauss_sums_all};
pub use profile::{
    i_profile, i_profile_unit, i_profile_unit_nonoscillatory, psi, psi_unit, psi_unit_nonoscillatory, ProfileConfig,
};

use num_complex::Complex64;

use crate::arith::{checked_pow, floor_root, CompensatedSum};
use crate::divisor::DivisorTable;
use crate::error::{invalid, Result};
use crate::special::e;

/// A frequency `α`, kept exact where possible so that `α·n` reduces mod 1
/// without losing precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    /// `num / den`, reduced in integer arithmetic.
    Rational { num: i64, den: u64 },
    /// `num / den + offset`; the rational part is exact.
    Shifted { num: i64, den: u64, offset: f64 },
    /// A binary floating-point value, reduced exactly as the dyadic rational it is.
    Real(f64),
}

impl Frequency {
    pub fn rational(num: i64, den: u64) -> Self {
        Frequency::Rational { num, den }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Frequency::Rational { num, den } => num as f64 / den as f64,
            Frequency::Shifted { num, den, offset } => num as f64 / den as f64 + offset,
            Frequency::Real(a) => a,
        }
    }

    fn is_exact_rational(&self) -> bool {
        matches!(self, Frequency::Rational { .. })
    }

    /// `{α·m}`, the fractional part of `α·m`, in `[0, 1)`.
    pub fn frac_times(&self, m: u128) -> f64 {
        match *self {
            Frequency::Rational { num, den } => rational_frac(num, den, m),
            Frequency::Shifted { num, den, offset } => {
                let f = rational_frac(num, den, m) + dyadic_frac(offset, m);
                f - f.floor()
            }
            Frequency::Real(a) => dyadic_frac(a, m),
        }
    }
}

fn rational_frac(num: i64, den: u64, m: u128) -> f64 {
    let d = den as u128;
    let n = num.rem_euclid(den as i64) as u128;
    let r = n * (m % d) % d;
    r as f64 / den as f64
}

/// Fractional part of `a·m` computed exactly for the dyadic rational `a`.
fn dyadic_frac(a: f64, m: u128) -> f64 {
    if a == 0.0 || m == 0 {
        return 0.0;
    }
    let bits = a.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_bits == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), exp_bits - 1075)
    };
    if exp >= 0 {
        return 0.0;
    }
    let shift = (-exp) as u32;
    if shift > 127 {
        let p = a * m as f64;
        return p - p.floor();
    }
    let mask = (1u128 << shift) - 1;
    let prod = (mantissa as u128).wrapping_mul(m) & mask;
    let prod = if negative { (mask + 1 - prod) & mask } else { prod };
    prod as f64 / (1u128 << shift) as f64
}

/// Value of a power sum with a flag for possible phase-precision loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TSum {
    pub value: Complex64,
    pub terms: u64,
    pub precision_warning: bool,
}

/// Terms beyond which a non-exact frequency may lose phase accuracy.
const PHASE_WARNING_TERMS: u64 = 1 << 26;

/// `T_r(α, X) = Σ_{1 ≤ n ≤ X^{1/r}} e(α n^r)`.
pub fn t_sum(r: u32, alpha: Frequency, x: f64) -> Result<TSum> {
    if r < 1 {
        return Err(invalid("power r must be >= 1"));
    }
    if !(x >= 1.0) {
        return Err(invalid(format!("X must be >= 1, got {x}")));
    }
    let n_max = floor_root(x, r);
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for n in 1..=n_max {
        let pow = checked_pow(n, r).ok_or(crate::Error::Overflow("t_sum"))?;
        let z = e(alpha.frac_times(pow));
        re.add(z.re);
        im.add(z.im);
    }
    Ok(TSum {
        value: Complex64::new(re.value(), im.value()),
        terms: n_max,
        precision_warning: n_max > PHASE_WARNING_TERMS && !alpha.is_exact_rational(),
    })
}

/// `F(α, X) = Σ_{1 ≤ n ≤ (ℓ+1)X} τ_k(n) e(-α n)`, read from `table`.
pub fn f_sum(k: u32, ell: u32, alpha: Frequency, x: f64, table: &DivisorTable) -> Result<Complex64> {
    let n_max = ((ell as f64 + 1.0) * x).floor() as u64;
    if n_max < 1 {
        return Err(invalid("(ℓ+1)X must be >= 1"));
    }
    if !table.covers_prefix(k, n_max) {
        return Err(invalid(format!(
            "table (k={}, [{}, {}]) does not cover τ_{k} on [1, {n_max}]",
            table.k(),
            table.lo(),
            table.hi()
        )));
    }
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for (i, &t) in table.values()[..n_max as usize].iter().enumerate() {
        let n = i as u128 + 1;
        let z = e(-alpha.frac_times(n)) * t as f64;
        re.add(z.re);
        im.add(z.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::{sieve_tau_k, SieveConfig};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn t_sum_examples() {
        let v = t_sum(2, Frequency::Real(0.0), 100.0).unwrap();
        assert!(close(v.value, Complex64::new(10.0, 0.0), 1e-12));
        let v = t_sum(2, Frequency::rational(1, 2), 16.0).unwrap();
        assert!(close(v.value, Complex64::new(0.0, 0.0), 1e-12));
        // n = 1, 2, 3: n³/3 ≡ 1/3, 8/3 ≡ 2/3, 0
        let expect = e(1.0 / 3.0) + e(2.0 / 3.0) + Complex64::new(1.0, 0.0);
        let v = t_sum(3, Frequency::rational(1, 3), 27.0).unwrap();
        assert!(close(v.value, expect, 1e-12));
    }

    #[test]
    fn t_sum_periodic_in_exact_mode() {
        let a = t_sum(3, Frequency::rational(2, 7), 5000.0).unwrap();
        let b = t_sum(3, Frequency::rational(9, 7), 5000.0).unwrap();
        assert_eq!(a.value, b.value);
        let c = t_sum(2, Frequency::Real(0.3125), 4000.0).unwrap();
        let d = t_sum(2, Frequency::Real(1.3125), 4000.0).unwrap();
        assert_eq!(c.value, d.value);
    }

    #[test]
    fn dyadic_reduction_is_exact() {
        // 0.1 as stored is 3602879701896397 / 2^55.
        let m: u128 = 123_456_789_012_345;
        let num = 3_602_879_701_896_397u128;
        let exact = (num * m) % (1u128 << 55);
        let expect = exact as f64 / (1u128 << 55) as f64;
        assert_eq!(dyadic_frac(0.1, m), expect);
        let neg = dyadic_frac(-0.1, m);
        assert!((neg + expect - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f_sum_examples() {
        let table = sieve_tau_k(2, 1, 6, &SieveConfig::default()).unwrap();
        let v = f_sum(2, 2, Frequency::Real(0.0), 2.0, &table).unwrap();
        assert!(close(v, Complex64::new(14.0, 0.0), 1e-12));
        let v = f_sum(2, 2, Frequency::rational(1, 2), 2.0, &table).unwrap();
        assert!(close(v, Complex64::new(4.0, 0.0), 1e-12));
    }

    #[test]
    fn f_sum_rejects_short_table() {
        let table = sieve_tau_k(2, 1, 5, &SieveConfig::default()).unwrap();
        assert!(f_sum(2, 2, Frequency::Real(0.0), 2.0, &table).is_err());
        let table = sieve_tau_k(3, 1, 6, &SieveConfig::default()).unwrap();
        assert!(f_sum(2, 2, Frequency::Real(0.0), 2.0, &table).is_err());
    }
}
