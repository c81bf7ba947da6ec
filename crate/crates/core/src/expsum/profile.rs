//! Oscillatory profile integrals.
//!
//! Below the switch threshold each integral is computed by adaptive
//! Gauss–Kronrod quadrature on panels cut where the phase crosses an integer.
//! Above it the contour is turned onto vertical rays where `e(·)` decays
//! exponentially, which leaves smooth non-oscillatory integrals and, for the
//! endpoint at the origin, closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::quadrature::{integrate_with_breaks, Estimate, QuadOptions};
use crate::special::{e, exp_log_moments, gamma};

/// Number of phase cycles above which profiles switch to the rotated contour.
pub const DEFAULT_SWITCH_CYCLES: f64 = 50.0;

#[derive(Debug, Clone, Copy)]
pub struct ProfileConfig {
    pub switch_cycles: f64,
    pub quad: QuadOptions,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            switch_cycles: DEFAULT_SWITCH_CYCLES,
            quad: QuadOptions {
                abs_tol: 1e-13,
                rel_tol: 1e-11,
                max_panels: 20_000,
            },
        }
    }
}

fn exact(value: Complex64) -> Estimate {
    Estimate { value, error: 0.0 }
}

fn conj(est: Estimate) -> Estimate {
    Estimate {
        value: est.value.conj(),
        error: est.error,
    }
}

/// `∫_0^∞ h(y) e^{-c y} dy` for smooth, slowly varying `h` and `c > 0`.
fn laplace_ray<H: Fn(f64) -> Complex64>(h: H, c: f64, opts: &QuadOptions) -> Result<Estimate> {
    let est = integrate_with_breaks(
        |z| h(z / c) * (-z).exp(),
        0.0,
        48.0,
        &[0.5, 2.0, 6.0, 16.0],
        opts,
    )?;
    Ok(Estimate {
        value: est.value / c,
        error: est.error / c,
    })
}

/// Points in `(0, 1)` where `|b| t^r` crosses an integer.
fn power_phase_breaks(r: u32, b: f64) -> Vec<f64> {
    let cycles = b.abs().floor() as usize;
    (1..=cycles)
        .map(|m| (m as f64 / b.abs()).powf(1.0 / r as f64))
        .filter(|&t| t < 1.0)
        .collect()
}

/// Leading non-oscillatory part of [`psi_unit`]: `Γ(1+1/r) e^{±iπ/(2r)} (2π|b|)^{-1/r}`.
pub fn psi_unit_nonoscillatory(r: u32, b: f64) -> Complex64 {
    let rf = r as f64;
    let mag = gamma(1.0 + 1.0 / rf) * (2.0 * PI * b.abs()).powf(-1.0 / rf);
    let z = Complex64::from_polar(mag, PI / (2.0 * rf));
    if b < 0.0 {
        z.conj()
    } else {
        z
    }
}

/// `ψ_r(b) = ∫_0^1 e(b t^r) dt`.
pub fn psi_unit(r: u32, b: f64, cfg: &ProfileConfig) -> Result<Estimate> {
    if r < 1 {
        return Err(invalid("power r must be >= 1"));
    }
    if b == 0.0 {
        return Ok(exact(Complex64::new(1.0, 0.0)));
    }
    if b < 0.0 {
        return psi_unit(r, -b, cfg).map(conj);
    }
    let rf = r as f64;
    if b * rf <= cfg.switch_cycles {
        let breaks = power_phase_breaks(r, b);
        return integrate_with_breaks(|t| e(b * t.powi(r as i32)), 0.0, 1.0, &breaks, &cfg.quad);
    }
    // ∫_0^1 = ∫_0^∞ - ∫_1^∞; the second piece with v = t^r, v = 1 + iy.
    let whole = psi_unit_nonoscillatory(r, b);
    let expo = Complex64::new(1.0 / rf - 1.0, 0.0);
    let ray = laplace_ray(|y| Complex64::new(1.0, y).powc(expo), 2.0 * PI * b, &cfg.quad)?;
    let tail = Complex64::i() / rf * e(b) * ray.value;
    Ok(Estimate {
        value: whole - tail,
        error: ray.error / rf,
    })
}

/// `Ψ_r(β) = ∫_0^{X^{1/r}} e(β u^r) du = X^{1/r} ψ_r(βX)`.
pub fn psi(r: u32, beta: f64, x: f64, cfg: &ProfileConfig) -> Result<Estimate> {
    if !(x >= 1.0) {
        return Err(invalid(format!("X must be >= 1, got {x}")));
    }
    let scale = x.powf(1.0 / r as f64);
    let unit = psi_unit(r, beta * x, cfg)?;
    Ok(Estimate {
        value: unit.value * scale,
        error: unit.error * scale,
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `∫_a^b e(-βu) g(u) du` for `β > 0` by the two vertical rays from `a` and `b`.
fn rotated<G: Fn(Complex64) -> Complex64>(g: G, a: f64, b: f64, beta: f64, opts: &QuadOptions) -> Result<Estimate> {
    let c = 2.0 * PI * beta;
    let from_a = laplace_ray(|y| g(Complex64::new(a, -y)), c, opts)?;
    let from_b = laplace_ray(|y| g(Complex64::new(b, -y)), c, opts)?;
    let value = -Complex64::i() * (e(-beta * a) * from_a.value - e(-beta * b) * from_b.value);
    Ok(Estimate {
        value,
        error: from_a.error + from_b.error,
    })
}

/// Antiderivative of `log^j(u) / j!`: `u Σ_{m ≤ j} (-1)^{j-m} log^m(u) / m!`.
fn log_power_antiderivative(j: u32, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let l = u.ln();
    let mut acc = 0.0;
    let mut term = 1.0; // log^m(u) / m!
    for m in 0..=j {
        if m > 0 {
            term *= l / m as f64;
        }
        let sign = if (j - m) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * term;
    }
    u * acc
}

/// `I_j(β) = ∫_1^{(ℓ+1)X} e(-βu) log^j(u) / j! du`.
pub fn i_profile(j: u32, ell: u32, beta: f64, x: f64, cfg: &ProfileConfig) -> Result<Estimate> {
    let upper = (ell as f64 + 1.0) * x;
    if !(upper >= 1.0) {
        return Err(invalid(format!("(ℓ+1)X must be >= 1, got {upper}")));
    }
    if beta == 0.0 {
        let v = log_power_antiderivative(j, upper) - log_power_antiderivative(j, 1.0);
        return Ok(exact(Complex64::new(v, 0.0)));
    }
    if beta < 0.0 {
        return i_profile(j, ell, -beta, x, cfg).map(conj);
    }
    let jf = factorial(j);
    let cycles = beta * (upper - 1.0);
    if cycles <= cfg.switch_cycles {
        let n = cycles.floor() as usize;
        let breaks: Vec<f64> = (1..=n).map(|m| 1.0 + m as f64 / beta).collect();
        return integrate_with_breaks(
            |u| e(-beta * u) * (u.ln().powi(j as i32) / jf),
            1.0,
            upper,
            &breaks,
            &cfg.quad,
        );
    }
    rotated(|z| z.ln().powu(j) / jf, 1.0, upper, beta, &cfg.quad)
}

/// Contribution of the origin endpoint to [`i_profile_unit`] for `|β|` large:
/// `∫_0^{-i∞·sgn β} e(-βu) log^i(u) du`, in closed form.
pub fn i_profile_unit_nonoscillatory(i: u32, beta: f64) -> Complex64 {
    if beta < 0.0 {
        return i_profile_unit_nonoscillatory(i, -beta).conj();
    }
    let c = 2.0 * PI * beta;
    let mu = exp_log_moments(i as usize);
    let w = Complex64::new(-c.ln(), -PI / 2.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut binom = 1.0;
    for m in 0..=i {
        acc += binom * mu[m as usize] * w.powu(i - m);
        binom *= (i - m) as f64 / (m + 1) as f64;
    }
    -Complex64::i() * acc / c
}

/// `∫_0^{ℓ+1} e(-βu) log^i(u) du`, the first factor of the singular integral.
pub fn i_profile_unit(i: u32, ell: u32, beta: f64, cfg: &ProfileConfig) -> Result<Estimate> {
    let upper = ell as f64 + 1.0;
    let ifact = factorial(i);
    if beta == 0.0 {
        return Ok(exact(Complex64::new(ifact * log_power_antiderivative(i, upper), 0.0)));
    }
    if beta < 0.0 {
        return i_profile_unit(i, ell, -beta, cfg).map(conj);
    }
    if beta <= 2.0 {
        // [0, 1] by the series Σ_n (-2πiβ)^n / n! · ∫_0^1 u^n log^i u du.
        let z = Complex64::new(0.0, -2.0 * PI * beta);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut power = Complex64::new(1.0, 0.0); // z^n / n!
        let mut head = Complex64::new(0.0, 0.0);
        let mut n = 0u32;
        loop {
            let moment = sign * ifact / ((n + 1) as f64).powi(i as i32 + 1);
            head += power * moment;
            n += 1;
            power = power * z / n as f64;
            if power.norm() < 1e-18 && n as f64 > z.norm() {
                break;
            }
        }
        let cycles = (beta * (upper - 1.0)).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (1..cycles).map(|m| 1.0 + m as f64 / beta).collect();
        let rest = integrate_with_breaks(
            |u| e(-beta * u) * u.ln().powi(i as i32),
            1.0,
            upper,
            &breaks,
            &cfg.quad,
        )?;
        return Ok(Estimate {
            value: head + rest.value,
            error: rest.error + 1e-14,
        });
    }
    let origin = i_profile_unit_nonoscillatory(i, beta);
    let c = 2.0 * PI * beta;
    let from_end = laplace_ray(|y| Complex64::new(upper, -y).ln().powu(i), c, &cfg.quad)?;
    let value = origin + Complex64::i() * e(-beta * upper) * from_end.value;
    Ok(Estimate {
        value,
        error: from_end.error,
    })
}

/// Direct quadrature of `∫_a^b e(-βu) log^i(u) du`; used only to cross-check.
#[cfg(test)]
fn i_direct(i: u32, a: f64, b: f64, beta: f64) -> Complex64 {
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_panels: 200_000,
    };
    let n = (beta.abs() * (b - a)).ceil() as usize * 4 + 1;
    let breaks: Vec<f64> = (1..n).map(|m| a + (b - a) * m as f64 / n as f64).collect();
    integrate_with_breaks(|u| e(-beta * u) * u.ln().powi(i as i32), a, b, &breaks, &opts)
        .unwrap()
        .value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_examples() {
        let cfg = ProfileConfig::default();
        let p = psi(2, 0.0, 100.0, &cfg).unwrap();
        assert!((p.value - Complex64::new(10.0, 0.0)).norm() < 1e-12);
        // ∫_0^1 e(u²) du against composite Simpson with 2·10^6 panels.
        let n = 2_000_000;
        let h = 1.0 / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..=n {
            let t = m as f64 * h;
            let w = if m == 0 || m == n {
                1.0
            } else if m % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += e(t * t) * w;
        }
        let simpson = acc * h / 3.0;
        let p = psi(2, 1.0, 1.0, &cfg).unwrap();
        assert!((p.value - simpson).norm() < 1e-10, "{} vs {}", p.value, simpson);
    }

    #[test]
    fn psi_contour_matches_direct_quadrature() {
        let direct = ProfileConfig {
            switch_cycles: f64::INFINITY,
            ..Default::default()
        };
        let rotated = ProfileConfig {
            switch_cycles: 0.0,
            ..Default::default()
        };
        for r in 2..=4 {
            for b in [0.7, 3.0, 26.0, -41.5, 160.0] {
                let d = psi_unit(r, b, &direct).unwrap().value;
                let c = psi_unit(r, b, &rotated).unwrap().value;
                assert!((d - c).norm() < 1e-10, "r={r} b={b}: {d} vs {c}");
            }
        }
    }

    #[test]
    fn i_profile_examples() {
        let cfg = ProfileConfig::default();
        let v = i_profile(0, 2, 0.0, 10.0, &cfg).unwrap();
        assert!((v.value.re - 29.0).abs() < 1e-12);
        let v = i_profile(1, 0, 0.0, std::f64::consts::E, &cfg).unwrap();
        assert!((v.value.re - 1.0).abs() < 1e-12);
        // ∫_1^30 e(-u) du = (e(-30) - e(-1)) / (-2πi)
        let expect = (e(-30.0) - e(-1.0)) / Complex64::new(0.0, -2.0 * PI);
        let v = i_profile(0, 2, 1.0, 10.0, &cfg).unwrap();
        assert!((v.value - expect).norm() < 1e-11);
    }

    #[test]
    fn i_profile_routes_agree() {
        let direct = ProfileConfig {
            switch_cycles: f64::INFINITY,
            ..Default::default()
        };
        let rotated = ProfileConfig {
            switch_cycles: 0.0,
            ..Default::default()
        };
        for j in 0..=3 {
            for beta in [0.013, 0.37, -2.2] {
                let d = i_profile(j, 2, beta, 40.0, &direct).unwrap().value;
                let c = i_profile(j, 2, beta, 40.0, &rotated).unwrap().value;
                assert!((d - c).norm() < 1e-9 * (1.0 + d.norm()), "j={j} β={beta}: {d} vs {c}");
            }
        }
    }

    #[test]
    fn unit_profile_matches_direct() {
        let cfg = ProfileConfig::default();
        for i in 0..=3 {
            for beta in [0.0, 0.4, 1.9, -2.5, 7.3, 31.0] {
                let ours = i_profile_unit(i, 2, beta, &cfg).unwrap().value;
                let direct = i_direct(i, 0.0, 3.0, beta);
                assert!((ours - direct).norm() < 1e-8, "i={i} β={beta}: {ours} vs {direct}");
            }
        }
    }
}
