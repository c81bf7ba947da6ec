//! The power saving `δ_{k,r,s,ℓ}`: regime classification, the balancing
//! choices of `θ`, and the resulting exponent, all in exact rationals.

use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = Ratio<i128>;

/// Which minor-arc bound applies to `T_r` and `T_s`: Weyl's inequality for
/// exponents up to 7, the Vinogradov-type bound from 8 on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::III => "III",
            Regime::IV => "IV",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllClass {
    /// `2^{r-1} ≤ ℓ < 2^r`, except `ℓ = 2^r - 1` when `r = s`.
    Small,
    /// `ℓ ≥ 2^r`, or `ℓ = 2^r - 1` when `r = s`.
    Large,
}

impl fmt::Display for EllClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EllClass::Small => "small",
            EllClass::Large => "large",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub regime: Regime,
    pub class: EllClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaCandidate {
    pub label: &'static str,
    pub value: Q,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub k: u32,
    pub r: u32,
    pub s: u32,
    pub ell: u32,
    pub regime: Regime,
    pub class: EllClass,
    pub candidates: Vec<ThetaCandidate>,
    pub theta_candidate: Q,
    pub theta_i: Q,
    pub theta_used: Q,
    /// Minor-arc saving per unit `θ` in the active branch.
    pub slope: Q,
    /// The branch drops the `min{1/r, 1/s, ·}` wrapper.
    pub special_case: bool,
    pub delta: Q,
    pub k_validity: bool,
}

impl DeltaReport {
    pub fn delta_decimal(&self) -> f64 {
        to_f64(&self.delta)
    }

    pub fn cap_binds(&self) -> bool {
        self.theta_candidate > self.theta_i
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN)
}

/// `2^e` for a possibly negative exponent.
fn two_pow(e: i64) -> Q {
    if e >= 0 {
        Q::from_integer(1i128 << e)
    } else {
        Q::new(1, 1i128 << (-e))
    }
}

fn int(n: i64) -> Q {
    Q::from_integer(n as i128)
}

/// Largest exponent handled; keeps every intermediate inside `i128`.
const MAX_EXPONENT: u32 = 40;

fn check_domain(k: u32, r: u32, s: u32, ell: u32) -> Result<()> {
    if k < 4 || r < 2 || s < 2 {
        return Err(Error::OutOfTheorem(format!(
            "need k >= 4, r >= 2, s >= 2; got k={k} r={r} s={s}"
        )));
    }
    if r > MAX_EXPONENT || s > MAX_EXPONENT || ell > 1 << 30 {
        return Err(Error::Overflow("delta: parameters beyond exact 128-bit range"));
    }
    if (ell as u64) < 1u64 << (r - 1) {
        return Err(Error::OutOfTheorem(format!(
            "need ℓ >= 2^(r-1) = {}; got ℓ={ell}",
            1u64 << (r - 1)
        )));
    }
    Ok(())
}

pub fn classify(k: u32, r: u32, s: u32, ell: u32) -> Result<Classification> {
    check_domain(k, r, s, ell)?;
    let regime = match (r <= 7, s <= 7) {
        (true, true) => Regime::I,
        (true, false) => Regime::II,
        (false, true) => Regime::III,
        (false, false) => Regime::IV,
    };
    let two_r = 1u64 << r;
    let ell = ell as u64;
    let class = if ell >= two_r || (ell == two_r - 1 && r == s) {
        EllClass::Large
    } else {
        EllClass::Small
    };
    Ok(Classification { regime, class })
}

/// Every balancing value `θ_a … θ_h` and the cap `θ_i = 1/(k+r)`.
pub fn theta_values(k: u32, r: u32, s: u32, ell: u32) -> Result<Vec<(&'static str, Q)>> {
    check_domain(k, r, s, ell)?;
    let (k, r, s, l) = (int(k as i64), r as i64, s as i64, int(ell as i64));
    let (rq, sq) = (int(r), int(s));
    let one = Q::one();
    let kp2 = k + int(2);
    let km1 = k - one;
    let p_r = two_pow(r);
    let p_r1 = two_pow(r - 1);
    let base = p_r + l * (sq - one); // 2^r + ℓ(s-1)
    let l_shift = l - p_r1 + int(2) * (rq - one) * rq; // ℓ - 2^{r-1} + 2(r-1)r
    let ss = sq * (sq - one);
    let rr = rq * (rq - one);

    let theta_a = (kp2 * base - p_r * km1 * sq) / (int(2) * sq * kp2 * (l + two_pow(r - s)));
    let theta_b = (kp2 * (sq - one) * base - p_r * km1 * (sq - one) * sq) / (kp2 * (int(2) * ss * l + p_r1));
    let theta_c = (rq * kp2 * (rq - one) * base - p_r * km1 * rr * sq)
        / (sq * kp2 * (two_pow(r - s + 1) * rr + p_r1 * l_shift));
    let theta_d = (int(2) * rr * (sq - one) * kp2 * base - two_pow(r + 1) * km1 * (sq - one) * rr * sq)
        / (p_r * kp2 * (rr + ss * l_shift));
    let theta_e = int(3) * p_r1 / (kp2 * (l + two_pow(r - s)));
    let theta_f = int(3) * p_r * ss / (kp2 * (int(2) * ss * l + p_r1));
    let theta_g = int(3) * two_pow(s) * rr / (kp2 * (int(2) * rr + two_pow(s - 1) * l_shift));
    let theta_h = int(6) * rr * ss / (kp2 * (rr + ss * l_shift));
    let theta_i = one / (k + rq);
    Ok(vec![
        ("a", theta_a),
        ("b", theta_b),
        ("c", theta_c),
        ("d", theta_d),
        ("e", theta_e),
        ("f", theta_f),
        ("g", theta_g),
        ("h", theta_h),
        ("i", theta_i),
    ])
}

fn active_label(c: Classification) -> &'static str {
    match (c.class, c.regime) {
        (EllClass::Small, Regime::I) => "a",
        (EllClass::Small, Regime::II) => "b",
        (EllClass::Small, Regime::III) => "c",
        (EllClass::Small, Regime::IV) => "d",
        (EllClass::Large, Regime::I) => "e",
        (EllClass::Large, Regime::II) => "f",
        (EllClass::Large, Regime::III) => "g",
        (EllClass::Large, Regime::IV) => "h",
    }
}

/// All candidates with the regime-appropriate one marked active.
pub fn theta_candidates(k: u32, r: u32, s: u32, ell: u32) -> Result<Vec<ThetaCandidate>> {
    let c = classify(k, r, s, ell)?;
    let active = active_label(c);
    Ok(theta_values(k, r, s, ell)?
        .into_iter()
        .map(|(label, value)| ThetaCandidate {
            label,
            value,
            active: label == active,
        })
        .collect())
}

/// Saving per unit `θ` of the minor-arc bound in each regime.
fn minor_slope(regime: Regime, r: u32, s: u32, ell: u32) -> Q {
    let (rq, sq, l) = (int(r as i64), int(s as i64), int(ell as i64));
    let one = Q::one();
    let weyl_r = l / two_pow(r as i64 - 1) - one;
    let weyl_s = one / two_pow(s as i64 - 1);
    let vino_r = (l - two_pow(r as i64 - 1)) / (int(2) * rq * (rq - one));
    let vino_s = one / (int(2) * sq * (sq - one));
    match regime {
        Regime::I => weyl_r + weyl_s,
        Regime::II => weyl_r + vino_s,
        Regime::III => vino_r + weyl_s,
        Regime::IV => vino_r + vino_s,
    }
}

/// Upper bound on `k` in the small-ℓ class: `3s·2^r / ((s-1)(2^r - ℓ)) - 2`.
pub fn k_bound(r: u32, s: u32, ell: u32) -> Q {
    let p_r = two_pow(r as i64);
    let sq = int(s as i64);
    int(3) * sq * p_r / ((sq - Q::one()) * (p_r - int(ell as i64))) - int(2)
}

pub fn delta(k: u32, r: u32, s: u32, ell: u32) -> Result<DeltaReport> {
    let c = classify(k, r, s, ell)?;
    let candidates = theta_candidates(k, r, s, ell)?;
    let theta_candidate = candidates.iter().find(|t| t.active).expect("one active").value;
    let theta_i = candidates.last().expect("θ_i present").value;

    let k_validity = match c.class {
        EllClass::Small => int(k as i64) < k_bound(r, s, ell),
        EllClass::Large => true,
    };
    if !k_validity {
        return Err(Error::Validity {
            k,
            bound: k_bound(r, s, ell).to_string(),
        });
    }

    let theta_used = if theta_candidate <= theta_i {
        theta_candidate
    } else {
        theta_i
    };
    let special_case = c.class == EllClass::Small
        && matches!(c.regime, Regime::I | Regime::II)
        && ((r == 2 && ell == 2) || (r == 3 && ell == 4));
    // In the two special cases ℓ = 2^{r-1}, so the Weyl part of the slope vanishes.
    let slope = minor_slope(c.regime, r, s, ell);
    let saving = slope * theta_used;
    let delta = if special_case {
        saving
    } else {
        let caps = [Q::new(1, r as i128), Q::new(1, s as i128)];
        caps.into_iter().fold(saving, |m, x| if x < m { x } else { m })
    };
    debug_assert!(!delta.is_negative() || delta.is_zero() || theta_used.is_negative());
    Ok(DeltaReport {
        k,
        r,
        s,
        ell,
        regime: c.regime,
        class: c.class,
        candidates,
        theta_candidate,
        theta_i,
        theta_used,
        slope,
        special_case,
        delta,
        k_validity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify(4, 2, 2, 2).unwrap(),
            Classification {
                regime: Regime::I,
                class: EllClass::Small
            }
        );
        assert_eq!(classify(4, 2, 2, 5).unwrap().class, EllClass::Large);
        assert_eq!(classify(4, 2, 2, 3).unwrap().class, EllClass::Large);
        assert_eq!(classify(4, 2, 3, 3).unwrap().class, EllClass::Small);
        assert_eq!(classify(4, 8, 3, 200).unwrap().regime, Regime::III);
        assert_eq!(classify(4, 3, 9, 4).unwrap().regime, Regime::II);
        assert!(matches!(classify(3, 2, 2, 2), Err(Error::OutOfTheorem(_))));
        assert!(matches!(classify(4, 3, 2, 3), Err(Error::OutOfTheorem(_))));
    }

    #[test]
    fn theta_examples() {
        let t = theta_values(4, 2, 2, 2).unwrap();
        assert_eq!(t[8].1, q(1, 6));
        assert_eq!(t[0].1, q(1, 6));
        let t = theta_values(4, 2, 2, 5).unwrap();
        assert_eq!(t[4].1, q(1, 6));
    }

    #[test]
    fn table_reproduction() {
        for k in 4..=9i128 {
            let rep = delta(k as u32, 2, 2, 2).unwrap();
            assert_eq!(rep.delta, q(10 - k, 12 * k + 24), "k={k}");
            assert_eq!(rep.theta_candidate, q(10 - k, 6 * k + 12));
        }
        assert_eq!(delta(4, 2, 2, 3).unwrap().delta, q(1, 6));
        assert_eq!(delta(4, 2, 2, 4).unwrap().delta, q(1, 4));
        for ell in 5..=40i128 {
            let rep = delta(4, 2, 2, ell as u32).unwrap();
            assert_eq!(rep.delta, q(3 * (ell - 1), 6 * (ell + 1)), "ℓ={ell}");
        }
        assert!(matches!(delta(10, 2, 2, 2), Err(Error::Validity { .. })));
    }

    #[test]
    fn special_case_closed_forms() {
        // θ_a and θ_b in the ℓ = 2^{r-1} sub-cases, as displayed for those cases.
        for k in 4..=12i128 {
            for s in 2..=12i128 {
                for (r, ell) in [(2u32, 2u32), (3, 4)] {
                    let t = theta_values(k as u32, r, s as u32, ell).unwrap();
                    let a = q((k + 2) * (s + 1) - 2 * (k - 1) * s, 1)
                        / (q(2 * s * (k + 2), 1) * (Q::one() + q(2, 1) * two_pow(-(s as i64))));
                    let b = q((s - 1) * ((k + 2) * (s + 1) - 2 * (k - 1) * s), (k + 2) * (2 * s * (s - 1) + 1));
                    assert_eq!(t[0].1, a);
                    assert_eq!(t[1].1, b);
                }
            }
        }
    }

    #[test]
    fn balance_equations_hold() {
        // Each active θ equalizes the minor-arc exponent with the major-arc error exponent.
        for k in 4..=9u32 {
            for r in 2..=9u32 {
                for s in 2..=9u32 {
                    for ell in (1u32 << (r - 1))..=(1u32 << r) + 4 {
                        let c = classify(k, r, s, ell).unwrap();
                        let theta = theta_candidates(k, r, s, ell)
                            .unwrap()
                            .into_iter()
                            .find(|t| t.active)
                            .unwrap()
                            .value;
                        let (kq, sq, l) = (int(k as i64), int(s as i64), int(ell as i64));
                        let drop = match c.class {
                            EllClass::Small => l / two_pow(r as i64) * (Q::one() - Q::one() / sq),
                            EllClass::Large => Q::one() - Q::one() / sq,
                        };
                        let lhs = Q::one() / sq - minor_slope(c.regime, r, s, ell) * theta;
                        let rhs = -drop + (kq - Q::one()) / (kq + int(2)) + theta;
                        assert_eq!(lhs, rhs, "k={k} r={r} s={s} ℓ={ell}");
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_in_k() {
        let ds: Vec<Q> = (4..=9).map(|k| delta(k, 2, 2, 2).unwrap().delta).collect();
        assert!(ds.windows(2).all(|w| w[0] > w[1]));
    }

    proptest! {
        #[test]
        fn positivity_and_caps(k in 4u32..=12, r in 2u32..=9, s in 2u32..=9, extra in 0u32..=200) {
            let lo = 1u32 << (r - 1);
            let ell = lo + extra % (lo + 5);
            match delta(k, r, s, ell) {
                Ok(rep) => {
                    prop_assert!(rep.delta > Q::zero());
                    if !rep.special_case {
                        prop_assert!(rep.delta <= Q::new(1, r as i128));
                        prop_assert!(rep.delta <= Q::new(1, s as i128));
                    }
                    if rep.cap_binds() {
                        prop_assert_eq!(rep.theta_used, rep.theta_i);
                    } else {
                        prop_assert_eq!(rep.theta_used, rep.theta_candidate);
                    }
                    prop_assert!(rep.theta_used > Q::zero() && rep.theta_used <= rep.theta_i);
                }
                Err(Error::Validity { .. }) => {
                    prop_assert_eq!(classify(k, r, s, ell).unwrap().class, EllClass::Small);
                    let t = theta_values(k, r, s, ell).unwrap();
                    prop_assert!(t[0].1 <= Q::zero());
                }
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }
    }
}
