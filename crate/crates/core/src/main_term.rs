//! Singular series, singular integral and the predicted main term
//! `M(X) = Σ_j 𝔖_j Σ_{i≤j} binom(j,i) 𝔍_i X^{ℓ/r+1/s} (log X)^{j-i}`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{binomial, gcd, CompensatedSum};
use crate::coeff::ResidueSums;
use crate::error::{invalid, Error, Result};
use crate::expsum::{
    gauss_sums_all, i_profile_unit, i_profile_unit_nonoscillatory, psi_unit, psi_unit_nonoscillatory, ProfileConfig,
};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

pub const DEFAULT_Q_MAX: u64 = 100;
pub const DEFAULT_BETA_MAX: f64 = 200.0;

/// A truncated series or integral with a heuristic bound on what was left out.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationResult {
    pub value: f64,
    /// `q_max` for a series, `β_max` for an integral.
    pub truncation: f64,
    pub tail_estimate: f64,
    /// Quadrature error estimate or Monte Carlo standard error.
    pub error_estimate: f64,
    /// `|Im| / |Re|` of the raw complex value.
    pub imag_leakage: f64,
    /// Per-`q` contributions, for series.
    pub terms: Vec<(u64, f64)>,
}

/// `ℓ/r + 1/s`.
pub fn exponent(r: u32, s: u32, ell: u32) -> f64 {
    ell as f64 / r as f64 + 1.0 / s as f64
}

/// Supplies `A_0(q), …, A_{k-1}(q)`.
pub trait CoeffProvider {
    fn coeffs(&self, q: u64) -> Result<Vec<Complex64>>;
}

impl CoeffProvider for ResidueSums {
    fn coeffs(&self, q: u64) -> Result<Vec<Complex64>> {
        if !self.moduli().contains(&q) {
            return Err(Error::MissingCoefficients(q));
        }
        Ok(self.extract_all(q)?.values)
    }
}

impl<F: Fn(u64) -> Result<Vec<Complex64>>> CoeffProvider for F {
    fn coeffs(&self, q: u64) -> Result<Vec<Complex64>> {
        self(q)
    }
}

/// `q^{-(ℓ+1)} Σ_{(a,q)=1} G_r(a,0;q)^ℓ G_s(a,0;q)`.
pub fn gauss_product_sum(r: u32, s: u32, ell: u32, q: u64) -> Result<Complex64> {
    let gr = gauss_sums_all(r, q)?;
    let gs = gauss_sums_all(s, q)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 1..=q {
        if gcd(a % q, q) == 1 {
            let i = (a % q) as usize;
            acc += gr[i].powu(ell) * gs[i];
        }
    }
    Ok(acc / (q as f64).powi(ell as i32 + 1))
}

/// Moduli `q ≤ q_max` whose Gauss product sum is not negligibly small;
/// only these need coefficients.
pub fn series_moduli(r: u32, s: u32, ell: u32, q_max: u64) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        if gauss_product_sum(r, s, ell, q)?.norm() > 1e-10 {
            out.push(q);
        }
    }
    Ok(out)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `𝔖_j` for every `j = 0..k`, truncated at `q_max`.
pub fn singular_series_all(
    k: u32,
    r: u32,
    s: u32,
    ell: u32,
    q_max: u64,
    coeffs: &dyn CoeffProvider,
) -> Result<Vec<TruncationResult>> {
    let e = exponent(r, s, ell);
    if e <= 1.0 {
        return Err(Error::Divergent(e));
    }
    if q_max < 1 {
        return Err(invalid("q_max must be >= 1"));
    }
    let k = k as usize;
    let mut re = vec![CompensatedSum::default(); k];
    let mut im = vec![CompensatedSum::default(); k];
    let mut terms: Vec<Vec<(u64, f64)>> = vec![Vec::new(); k];
    let mut scale = vec![0.0f64; k];
    for q in 1..=q_max {
        let g = gauss_product_sum(r, s, ell, q)?;
        if g.norm() <= 1e-10 {
            continue;
        }
        let a = coeffs.coeffs(q)?;
        if a.len() < k {
            return Err(Error::MissingCoefficients(q));
        }
        for j in 0..k {
            let t = g * a[j] / factorial(j as u32);
            re[j].add(t.re);
            im[j].add(t.im);
            terms[j].push((q, t.re));
            scale[j] = scale[j].max(t.norm() * (q as f64).powf(e));
        }
    }
    let tail_sum = (q_max as f64).powf(1.0 - e) / (e - 1.0);
    Ok((0..k)
        .map(|j| {
            let value = re[j].value();
            TruncationResult {
                value,
                truncation: q_max as f64,
                tail_estimate: scale[j] * tail_sum,
                error_estimate: 0.0,
                imag_leakage: if value != 0.0 { im[j].value().abs() / value.abs() } else { 0.0 },
                terms: std::mem::take(&mut terms[j]),
            }
        })
        .collect())
}

pub fn singular_series(
    k: u32,
    r: u32,
    s: u32,
    ell: u32,
    j: u32,
    q_max: u64,
    coeffs: &dyn CoeffProvider,
) -> Result<TruncationResult> {
    if j >= k {
        return Err(invalid(format!("j must be < k, got j={j} k={k}")));
    }
    let mut all = singular_series_all(k, r, s, ell, q_max, coeffs)?;
    Ok(all.swap_remove(j as usize))
}

fn check_integral_args(r: u32, s: u32, ell: u32) -> Result<()> {
    if r < 1 || s < 1 || ell < 1 {
        return Err(invalid("need r, s, ℓ >= 1"));
    }
    Ok(())
}

/// `𝔍_i` by integrating the product of profiles over `|β| ≤ β_max`, plus the
/// non-oscillatory part of the integrand integrated over `|β| > β_max`.
pub fn singular_integral_fourier(r: u32, s: u32, ell: u32, i: u32, beta_max: f64) -> Result<TruncationResult> {
    check_integral_args(r, s, ell)?;
    if !(beta_max > 0.0) {
        return Err(invalid("β_max must be positive"));
    }
    let cfg = ProfileConfig::default();
    let failure = std::cell::Cell::new(None);
    let integrand = |beta: f64| -> Complex64 {
        let product = (|| -> Result<Complex64> {
            let u = i_profile_unit(i, ell, beta, &cfg)?.value;
            let pr = psi_unit(r, beta, &cfg)?.value;
            let ps = psi_unit(s, beta, &cfg)?.value;
            Ok(u * pr.powu(ell) * ps)
        })();
        product.unwrap_or_else(|e| {
            failure.set(Some(e));
            Complex64::new(0.0, 0.0)
        })
    };
    let opts = QuadOptions {
        abs_tol: 1e-9,
        rel_tol: 1e-8,
        max_panels: 200_000,
    };
    let step = 0.5;
    let n = (beta_max / step).ceil() as usize;
    let breaks: Vec<f64> = (1..n).map(|m| m as f64 * step).collect();
    let head = integrate_with_breaks(&integrand, 0.0, beta_max, &breaks, &opts)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }

    let tail_integrand = |t: f64| -> Complex64 {
        let beta = beta_max * t.exp();
        let v = i_profile_unit_nonoscillatory(i, beta)
            * psi_unit_nonoscillatory(r, beta).powu(ell)
            * psi_unit_nonoscillatory(s, beta);
        v * beta
    };
    let e = exponent(r, s, ell);
    let t_max = 80.0 / e;
    let tail_breaks: Vec<f64> = (1..16).map(|m| t_max * m as f64 / 16.0).collect();
    let tail = integrate_with_breaks(tail_integrand, 0.0, t_max, &tail_breaks, &opts)?;

    // The integrand at -β is the conjugate of the one at β.
    let value = 2.0 * (head.value.re + tail.value.re);
    // Panel estimates can be far below what was asked for; never claim better than the request.
    let requested = opts.abs_tol.max(opts.rel_tol * value.abs());
    Ok(TruncationResult {
        value,
        truncation: beta_max,
        tail_estimate: 2.0 * tail.value.re.abs(),
        error_estimate: (2.0 * (head.error + tail.error)).max(requested),
        imag_leakage: 0.0,
        terms: Vec::new(),
    })
}

/// `𝔍_i = ∫_{[0,1]^{ℓ+1}} log^i(t_1^r + … + t_ℓ^r + t_{ℓ+1}^s) dt` by Monte Carlo.
pub fn singular_integral_cube(r: u32, s: u32, ell: u32, i: u32, samples: u64, seed: u64) -> Result<TruncationResult> {
    check_integral_args(r, s, ell)?;
    if samples < 10_000 {
        return Err(invalid(format!("need at least 10^4 samples, got {samples}")));
    }
    if i == 0 {
        return Ok(TruncationResult {
            value: 1.0,
            truncation: samples as f64,
            tail_estimate: 0.0,
            error_estimate: 0.0,
            imag_leakage: 0.0,
            terms: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    for _ in 0..samples {
        let mut v = 0.0;
        for _ in 0..ell {
            v += rng.gen::<f64>().powi(r as i32);
        }
        v += rng.gen::<f64>().powi(s as i32);
        let f = v.max(1e-300).ln().powi(i as i32);
        sum.add(f);
        sum_sq.add(f * f);
    }
    let n = samples as f64;
    let mean = sum.value() / n;
    let var = (sum_sq.value() / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(TruncationResult {
        value: mean,
        truncation: n,
        tail_estimate: 0.0,
        error_estimate: (var / n).sqrt(),
        imag_leakage: 0.0,
        terms: Vec::new(),
    })
}

/// The arrays `𝔖_j` and `𝔍_i` that determine `M(X)`.
#[derive(Debug, Clone, Serialize)]
pub struct MainTermModel {
    pub k: u32,
    pub r: u32,
    pub s: u32,
    pub ell: u32,
    pub series: Vec<f64>,
    pub integrals: Vec<f64>,
    pub exponent: f64,
}

impl MainTermModel {
    pub fn new(k: u32, r: u32, s: u32, ell: u32, series: Vec<f64>, integrals: Vec<f64>) -> Result<Self> {
        if series.len() != k as usize || integrals.len() != k as usize {
            return Err(invalid(format!(
                "need {k} series and integral values, got {} and {}",
                series.len(),
                integrals.len()
            )));
        }
        Ok(MainTermModel {
            k,
            r,
            s,
            ell,
            series,
            integrals,
            exponent: exponent(r, s, ell),
        })
    }

    /// Coefficient of `X^{ℓ/r+1/s} (log X)^p` for `p = 0..k`.
    pub fn log_coefficients(&self) -> Vec<f64> {
        let k = self.k as usize;
        let mut c = vec![0.0; k];
        for j in 0..k {
            for i in 0..=j {
                let b = binomial(j as u64, i as u64).expect("small binomial") as f64;
                c[j - i] += self.series[j] * b * self.integrals[i];
            }
        }
        c
    }
}

pub fn main_term(model: &MainTermModel, x: f64) -> Result<f64> {
    if !(x >= 2.0) {
        return Err(invalid(format!("X must be >= 2, got {x}")));
    }
    let l = x.ln();
    let poly: f64 = model
        .log_coefficients()
        .iter()
        .enumerate()
        .map(|(p, c)| c * l.powi(p as i32))
        .sum();
    Ok(poly * x.powf(model.exponent))
}

/// Builds the model from extracted coefficients and the Fourier evaluator.
pub fn build_model(
    k: u32,
    r: u32,
    s: u32,
    ell: u32,
    q_max: u64,
    coeffs: &dyn CoeffProvider,
    beta_max: f64,
) -> Result<(MainTermModel, Vec<TruncationResult>, Vec<TruncationResult>)> {
    let series = singular_series_all(k, r, s, ell, q_max, coeffs)?;
    let integrals: Vec<TruncationResult> = (0..k)
        .map(|i| singular_integral_fourier(r, s, ell, i, beta_max))
        .collect::<Result<_>>()?;
    let model = MainTermModel::new(
        k,
        r,
        s,
        ell,
        series.iter().map(|t| t.value).collect(),
        integrals.iter().map(|t| t.value).collect(),
    )?;
    Ok((model, series, integrals))
}
