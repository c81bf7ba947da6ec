use proptest::prelude::*;
use taukit::arith::{floor_root, gcd, is_prime};
use taukit::divisor::{sieve_tau_k, tau_k_point, SieveConfig};
use taukit::expsum::{dissect, gauss_sum, t_sum, Frequency};
use taukit::harness::{lhs_sum, rep_histogram, rep_histogram_enumerate};

fn small_cfg() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(small_cfg())]

    #[test]
    fn tau_is_multiplicative(k in 2u32..=6, m in 1u64..=1_000_000, n in 1u64..=1_000_000) {
        prop_assume!(gcd(m, n) == 1);
        let mn = tau_k_point(k, m * n).unwrap();
        prop_assert_eq!(mn, tau_k_point(k, m).unwrap() * tau_k_point(k, n).unwrap());
    }

    #[test]
    fn tau_at_primes(k in 2u32..=6, p in 2u64..=10_000) {
        prop_assume!(is_prime(p));
        prop_assert_eq!(tau_k_point(k, p).unwrap(), k as u64);
    }

    #[test]
    fn sieve_ignores_segmentation(k in 2u32..=6, lo in 1u64..=50_000, len in 1u64..=5_000, seg in 1usize..=4096) {
        let hi = lo + len - 1;
        let base = sieve_tau_k(k, lo, hi, &SieveConfig::default()).unwrap();
        let cfg = SieveConfig { segment_len: seg, ..SieveConfig::default() };
        let other = sieve_tau_k(k, lo, hi, &cfg).unwrap();
        prop_assert_eq!(base.values(), other.values());
        prop_assert!(base.values().iter().all(|&v| v >= 1));
        let direct: u128 = base.values().iter().map(|&v| v as u128).sum();
        prop_assert_eq!(base.sum1(), direct);
    }

    #[test]
    fn arc_measures_sum_to_one(x in 1e3f64..1e7, theta in 0.05f64..0.45) {
        let part = dissect(x, theta).unwrap();
        prop_assert!((part.major_measure + part.minor_measure - 1.0).abs() <= 1e-12);
        for arc in &part.major {
            prop_assert_eq!(gcd(arc.a, arc.q), 1);
            prop_assert!(arc.a >= 1 && arc.a <= arc.q);
            prop_assert!((arc.halfwidth * arc.q as f64 * part.q - 1.0).abs() < 1e-9);
        }
        if part.q >= 2.0 * part.p * part.p {
            prop_assert!(part.disjoint);
        }
    }

    #[test]
    fn quadratic_gauss_magnitude(half in 0u64..500, a in 1i64..1000) {
        let q = 2 * half + 1;
        prop_assume!(gcd(a as u64, q) == 1);
        let g = gauss_sum(2, a, 0, q).unwrap();
        prop_assert!((g.norm() - (q as f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn t_sum_has_period_one(r in 2u32..=4, num in -500i64..500, den in 1u64..500, x in 1e2f64..1e6) {
        let a = t_sum(r, Frequency::rational(num, den), x).unwrap();
        let b = t_sum(r, Frequency::rational(num + den as i64, den), x).unwrap();
        prop_assert_eq!(a.value, b.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn histogram_mass_and_enumeration(r in 2u32..=3, s in 2u32..=3, ell in 2u32..=4, x in 10f64..3000.0) {
        let conv = rep_histogram(r, s, ell, x, 1 << 24).unwrap();
        let mass = (floor_root(x, r) as u128).pow(ell) * floor_root(x, s) as u128;
        prop_assert_eq!(conv.total, mass);
        prop_assert_eq!(conv.counts.iter().map(|&c| c as u128).sum::<u128>(), mass);
        prop_assert_eq!(conv.counts, rep_histogram_enumerate(r, s, ell, x).unwrap().counts);
    }

    #[test]
    fn lhs_ignores_coordinate_order(
        k in 2u32..=4,
        ell in 2u32..=3,
        x in 10f64..400.0,
        order in Just(vec![0usize, 1, 2]).prop_shuffle(),
    ) {
        let (r, s) = (2u32, 2u32);
        let top = ((ell + 1) as f64 * x) as u64;
        let table = sieve_tau_k(k, 1, top, &SieveConfig::default()).unwrap();
        let want = lhs_sum(k, r, s, ell, x, &table, 1 << 24).unwrap();
        let nr = floor_root(x, r);
        let ns = floor_root(x, s);
        let order: Vec<usize> = order.into_iter().filter(|&i| i < ell as usize).collect();
        let mut acc = 0u128;
        let mut idx = vec![1u64; ell as usize];
        loop {
            // Coordinates read back in shuffled order.
            let base: u64 = order.iter().map(|&i| idx[i].pow(r)).sum();
            for y in 1..=ns {
                acc += table.get(base + y.pow(s)).unwrap() as u128;
            }
            let mut pos = 0;
            while pos < idx.len() {
                idx[pos] += 1;
                if idx[pos] <= nr {
                    break;
                }
                idx[pos] = 1;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
        prop_assert_eq!(acc, want);
    }
}

#[test]
fn coefficients_stable_under_denser_grid_and_real() {
    use taukit::arith::log_spaced;
    use taukit::coeff::ResidueSums;
    let cfg = SieveConfig::default();
    let moduli: Vec<u64> = (1..=10).collect();
    for k in 2u32..=4 {
        let coarse = ResidueSums::build(k, 2, &moduli, &log_spaced(1e5, 1e6, 16), &cfg).unwrap();
        let dense = ResidueSums::build(k, 2, &moduli, &log_spaced(1e5, 1e6, 32), &cfg).unwrap();
        for q in 1..=10u64 {
            let a = coarse.extract_all(q).unwrap();
            let b = dense.extract_all(q).unwrap();
            assert!(b.imaginary_ratio() < 1e-2, "k={k} q={q}");
            for (u, v) in a.values.iter().zip(&b.values) {
                if v.norm() > 1e-3 / q as f64 {
                    assert!((u - v).norm() / v.norm() < 0.02, "k={k} q={q}: {u} vs {v}");
                }
            }
        }
    }
}
