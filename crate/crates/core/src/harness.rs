//! Brute-force evaluation of `S(X) = Σ τ_k(n_1^r + … + n_ℓ^r + n_{ℓ+1}^s)`,
//! exact moment and Parseval checks, and the end-to-end comparison with `M(X)`.

use std::time::Instant;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::arith::{checked_pow, floor_root, pow_mod, CompensatedSum};
use crate::coeff::{default_x_grid, ResidueSums, DEFAULT_ORDER};
use crate::delta::{delta, to_f64, DeltaReport};
use crate::divisor::{sieve_tau_k, DivisorTable, SieveConfig};
use crate::error::{invalid, Error, Result};
use crate::main_term::{build_model, main_term, series_moduli, MainTermModel, TruncationResult};
use crate::special::e_ratio;

/// `counts[m]` = number of `(n_1, …, n_{ℓ+1})` with `Σ n_i^r + n_{ℓ+1}^s = m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepHistogram {
    pub r: u32,
    pub s: u32,
    pub ell: u32,
    pub x: f64,
    pub counts: Vec<u64>,
    pub total: u128,
}

impl RepHistogram {
    /// Nonzero entries as `(m, count)`.
    pub fn support(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(m, &c)| (m as u64, c))
    }

    pub fn max_value(&self) -> u64 {
        self.counts.len().saturating_sub(1) as u64
    }
}

fn powers(r: u32, n: u64) -> Result<Vec<usize>> {
    (1..=n)
        .map(|m| {
            checked_pow(m, r)
                .and_then(|p| usize::try_from(p).ok())
                .ok_or(Error::Overflow("power table"))
        })
        .collect()
}

/// `h * 1_P`, where `1_P` is the indicator of the set `P`; exact.
fn convolve_with_set(h: &[u64], set: &[usize]) -> Result<Vec<u64>> {
    let top = set.last().copied().unwrap_or(0);
    let mut out = vec![0u64; h.len() + top];
    let first = h.iter().position(|&c| c > 0).unwrap_or(h.len());
    let last = h.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
    if first >= last {
        return Ok(out);
    }
    let src = &h[first..last];
    for &p in set {
        let dst = &mut out[first + p..last + p];
        for (d, &c) in dst.iter_mut().zip(src) {
            *d += c;
        }
    }
    Ok(out)
}

fn check_rep_args(r: u32, s: u32, ell: u32, x: f64) -> Result<()> {
    if r < 1 || s < 1 || ell < 1 {
        return Err(invalid("need r, s, ℓ >= 1"));
    }
    if !(x >= 1.0) {
        return Err(invalid(format!("X must be >= 1, got {x}")));
    }
    Ok(())
}

/// Representation counts by iterated additive convolution in integers.
pub fn rep_histogram(r: u32, s: u32, ell: u32, x: f64, budget_entries: u64) -> Result<RepHistogram> {
    check_rep_args(r, s, ell, x)?;
    let nr = floor_root(x, r);
    let ns = floor_root(x, s);
    let pr = powers(r, nr)?;
    let ps = powers(s, ns)?;
    let size = (ell as u64)
        .checked_mul(*pr.last().unwrap_or(&0) as u64)
        .and_then(|v| v.checked_add(*ps.last().unwrap_or(&0) as u64 + 1))
        .ok_or(Error::Overflow("rep_histogram"))?;
    if size > budget_entries {
        return Err(Error::ResourceLimit {
            what: "representation histogram",
            required: size,
            budget: budget_entries,
        });
    }
    let mut h = vec![1u64];
    for _ in 0..ell {
        h = convolve_with_set(&h, &pr)?;
    }
    h = convolve_with_set(&h, &ps)?;
    let total = (nr as u128).pow(ell) * ns as u128;
    Ok(RepHistogram {
        r,
        s,
        ell,
        x,
        counts: h,
        total,
    })
}

/// The same counts by nested enumeration of every tuple; a check on
/// [`rep_histogram`] for small ranges.
pub fn rep_histogram_enumerate(r: u32, s: u32, ell: u32, x: f64) -> Result<RepHistogram> {
    check_rep_args(r, s, ell, x)?;
    let pr = powers(r, floor_root(x, r))?;
    let ps = powers(s, floor_root(x, s))?;
    let size = ell as usize * pr.last().copied().unwrap_or(0) + ps.last().copied().unwrap_or(0) + 1;
    let mut counts = vec![0u64; size];
    let mut idx = vec![0usize; ell as usize];
    let mut total = 0u128;
    if pr.is_empty() || ps.is_empty() {
        counts.truncate(1);
        counts[0] = 0;
    } else {
        loop {
            let base: usize = idx.iter().map(|&i| pr[i]).sum();
            for &p in &ps {
                counts[base + p] += 1;
                total += 1;
            }
            // Odometer over the ℓ equal-exponent coordinates.
            let mut pos = 0;
            while pos < idx.len() {
                idx[pos] += 1;
                if idx[pos] < pr.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    Ok(RepHistogram {
        r,
        s,
        ell,
        x,
        counts,
        total,
    })
}

/// `Σ_m counts[m] τ_k(m)`, exact.
pub fn lhs_from_histogram(k: u32, hist: &RepHistogram, table: &DivisorTable) -> Result<u128> {
    let top = hist.max_value();
    if top >= 1 && !table.covers_prefix(k, top) {
        return Err(invalid(format!(
            "table (k={}, [{}, {}]) does not cover τ_{k} on [1, {top}]",
            table.k(),
            table.lo(),
            table.hi()
        )));
    }
    let tau = table.values();
    let mut acc = 0u128;
    for (m, &c) in hist.counts.iter().enumerate().skip(1) {
        if c > 0 {
            acc += c as u128 * tau[m - 1] as u128;
        }
    }
    Ok(acc)
}

/// `S(X)` read from a table that covers `[1, (ℓ+1)X]`.
pub fn lhs_sum(k: u32, r: u32, s: u32, ell: u32, x: f64, table: &DivisorTable, budget_entries: u64) -> Result<u128> {
    let hist = rep_histogram(r, s, ell, x, budget_entries)?;
    lhs_from_histogram(k, &hist, table)
}

/// Number of solutions of `x_1^r + … + x_h^r = y_1^r + … + y_h^r` with
/// `h = 2^{j-1}` and `1 ≤ x_i, y_i ≤ N`.
pub fn hua_moment_exact(r: u32, j: u32, n: u64, budget_entries: u64) -> Result<u128> {
    if j < 1 || j > 16 {
        return Err(invalid(format!("need 1 <= j <= 16, got {j}")));
    }
    if n < 1 {
        return Err(invalid("N must be >= 1"));
    }
    let half = 1u64 << (j - 1);
    let top = checked_pow(n, r).ok_or(Error::Overflow("hua_moment_exact"))?;
    let size = (half as u128) * top + 1;
    if size > budget_entries as u128 {
        return Err(Error::ResourceLimit {
            what: "moment histogram",
            required: size.min(u64::MAX as u128) as u64,
            budget: budget_entries,
        });
    }
    let pr = powers(r, n)?;
    let mut h = vec![1u64];
    for _ in 0..half {
        h = convolve_with_set(&h, &pr)?;
    }
    Ok(h.iter().map(|&c| c as u128 * c as u128).sum())
}

/// `(1/M) Σ_{m<M} |T(m/M)|^{2^j}` with `T(α) = Σ_{n≤N} e(α n^r)`.
pub fn hua_moment_quadrature(r: u32, j: u32, n: u64, m: u64) -> Result<f64> {
    if j < 1 || j > 16 {
        return Err(invalid(format!("need 1 <= j <= 16, got {j}")));
    }
    let degree = (1u128 << (j - 1)) * checked_pow(n, r).ok_or(Error::Overflow("hua_moment_quadrature"))?;
    if (m as u128) <= 2 * degree {
        return Err(Error::Aliasing {
            samples: m,
            degree: degree.min(u64::MAX as u128) as u64,
        });
    }
    let residues: Vec<u64> = (1..=n).map(|x| pow_mod(x, r as u64, m)).collect();
    let power = 1i32 << j;
    let mut acc = CompensatedSum::default();
    for t in 0..m {
        let mut z = Complex64::new(0.0, 0.0);
        for &v in &residues {
            z += e_ratio(((t as u128 * v as u128) % m as u128) as u64, m);
        }
        acc.add(z.norm_sqr().powi(power / 2));
    }
    Ok(acc.value() / m as f64)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParsevalResult {
    pub lhs: f64,
    pub rhs: u128,
    pub relative_gap: f64,
}

/// `∫_0^1 |F(α, X)|² dα` as an `M`-point Riemann sum (one FFT), against
/// `Σ_{n ≤ (ℓ+1)X} τ_k(n)²`.
pub fn parseval_check(k: u32, ell: u32, x: f64, m: u64, cfg: &SieveConfig) -> Result<ParsevalResult> {
    let y = ((ell as f64 + 1.0) * x).floor() as u64;
    if y < 1 {
        return Err(invalid("(ℓ+1)X must be >= 1"));
    }
    if m <= 2 * y {
        return Err(Error::Aliasing { samples: m, degree: y });
    }
    if m > cfg.budget_entries {
        return Err(Error::ResourceLimit {
            what: "Parseval sample count",
            required: m,
            budget: cfg.budget_entries,
        });
    }
    let table = sieve_tau_k(k, 1, y, cfg)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); m as usize];
    for (i, &t) in table.values().iter().enumerate() {
        buf[i + 1] = Complex64::new(t as f64, 0.0);
    }
    FftPlanner::<f64>::new().plan_fft_forward(m as usize).process(&mut buf);
    let mut acc = CompensatedSum::default();
    for z in &buf {
        acc.add(z.norm_sqr());
    }
    let lhs = acc.value() / m as f64;
    let rhs = table.sum2();
    Ok(ParsevalResult {
        lhs,
        rhs,
        relative_gap: (lhs - rhs as f64).abs() / rhs as f64,
    })
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub x_grid: Vec<f64>,
    /// Sample sizes for coefficient extraction.
    pub coeff_grid: Vec<f64>,
    /// Riesz order of the extraction sums.
    pub coeff_order: u32,
    pub q_max: u64,
    pub beta_max: f64,
    pub sieve: SieveConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            x_grid: vec![1e4, 10f64.powf(4.5), 1e5, 10f64.powf(5.5), 1e6],
            coeff_grid: default_x_grid(),
            coeff_order: DEFAULT_ORDER,
            q_max: 100,
            beta_max: crate::main_term::DEFAULT_BETA_MAX,
            sieve: SieveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "S")]
    pub s: u128,
    #[serde(rename = "M")]
    pub m: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub k: u32,
    pub r: u32,
    pub s: u32,
    pub ell: u32,
    pub grid: Vec<GridRow>,
    pub delta: Option<DeltaReport>,
    pub delta_error: Option<String>,
    pub model: MainTermModel,
    pub series: Vec<TruncationResult>,
    pub integrals: Vec<TruncationResult>,
    /// Slope of `log|S/M - 1|` against `log X`.
    pub fitted_exponent: Option<f64>,
    pub parseval_gap: Option<f64>,
    pub hua: Vec<(u32, u32, u64, u128, f64)>,
    pub runtime_secs: f64,
}

impl VerifyReport {
    pub fn deviations(&self) -> Vec<f64> {
        self.grid.iter().map(|row| (row.ratio - 1.0).abs()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let delta = match &self.delta {
            Some(d) => serde_json::json!({
                "regime": format!("{}/{}", d.regime, d.class),
                "theta_used": d.theta_used.to_string(),
                "delta_rational": d.delta.to_string(),
                "delta_decimal": to_f64(&d.delta),
            }),
            None => serde_json::json!({ "error": self.delta_error }),
        };
        let hua: Vec<serde_json::Value> = self
            .hua
            .iter()
            .map(|&(r, j, n, exact, quad)| {
                serde_json::json!({"r": r, "j": j, "N": n, "exact": exact.to_string(), "quadrature": quad})
            })
            .collect();
        serde_json::json!({
            "version": 1,
            "params": {"k": self.k, "r": self.r, "s": self.s, "l": self.ell},
            "delta": delta,
            "grid": self.grid.iter().map(|row| serde_json::json!({
                "X": row.x, "S": row.s.to_string(), "M": row.m, "ratio": row.ratio
            })).collect::<Vec<_>>(),
            "checks": {"parseval_gap": self.parseval_gap, "hua": hua},
            "fitted_exponent": self.fitted_exponent,
            "model": {
                "series": self.model.series,
                "integrals": self.model.integrals,
                "exponent": self.model.exponent,
            },
            "runtime_secs": self.runtime_secs,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("X,S,M,ratio\n");
        for row in &self.grid {
            out.push_str(&format!("{},{},{},{}\n", row.x, row.s, row.m, row.ratio));
        }
        out
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_exponent(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Compares `S(X)` with `M(X)` over a grid of `X`, with `M` assembled from
/// extracted coefficients, the truncated singular series and the singular integral.
pub fn verify(k: u32, r: u32, s: u32, ell: u32, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let start = Instant::now();
    if cfg.x_grid.is_empty() {
        return Err(invalid("empty X grid"));
    }
    let moduli = series_moduli(r, s, ell, cfg.q_max)?;
    let sums = ResidueSums::build_with_order(k, ell, &moduli, &cfg.coeff_grid, cfg.coeff_order, &cfg.sieve)?;
    let (model, series, integrals) = build_model(k, r, s, ell, cfg.q_max, &sums, cfg.beta_max)?;
    verify_with_model(model, series, integrals, &cfg.x_grid, &cfg.sieve, start)
}

pub fn verify_with_model(
    model: MainTermModel,
    series: Vec<TruncationResult>,
    integrals: Vec<TruncationResult>,
    x_grid: &[f64],
    sieve: &SieveConfig,
    start: Instant,
) -> Result<VerifyReport> {
    let (k, r, s, ell) = (model.k, model.r, model.s, model.ell);
    let x_max = x_grid.iter().copied().fold(0.0, f64::max);
    let top = ((ell as f64 + 1.0) * x_max).floor() as u64;
    let table = sieve_tau_k(k, 1, top, sieve)?;
    let mut grid = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let s_val = lhs_sum(k, r, s, ell, x, &table, sieve.budget_entries)?;
        let m_val = main_term(&model, x)?;
        if !(m_val.abs() > 1e-300) || !m_val.is_finite() {
            return Err(Error::DegenerateModel(m_val));
        }
        grid.push(GridRow {
            x,
            s: s_val,
            m: m_val,
            ratio: s_val as f64 / m_val,
        });
    }
    let (delta_report, delta_error) = match delta(k, r, s, ell) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let devs: Vec<f64> = grid.iter().map(|row| (row.ratio - 1.0).abs()).collect();
    let fitted = fitted_exponent(x_grid, &devs);
    let parseval = parseval_check(k.min(4), ell, 50.0, 4 * (ell as u64 + 1) * 50, sieve)
        .ok()
        .map(|p| p.relative_gap);
    let mut hua = Vec::new();
    for j in 1..=3u32 {
        let n = 6;
        let exact = hua_moment_exact(r.min(3), j, n, sieve.budget_entries)?;
        let degree = (1u64 << (j - 1)) * (n as u64).pow(r.min(3));
        let quad = hua_moment_quadrature(r.min(3), j, n, 2 * degree + 1)?;
        hua.push((r.min(3), j, n, exact, quad));
    }
    Ok(VerifyReport {
        k,
        r,
        s,
        ell,
        grid,
        delta: delta_report,
        delta_error,
        model,
        series,
        integrals,
        fitted_exponent: fitted,
        parseval_gap: parseval,
        hua,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::tau_k_point;

    const BUDGET: u64 = 1 << 26;

    #[test]
    fn histogram_examples() {
        let h = rep_histogram(2, 2, 2, 4.0, BUDGET).unwrap();
        let support: Vec<(u64, u64)> = h.support().collect();
        assert_eq!(support, vec![(3, 1), (6, 3), (9, 3), (12, 1)]);
        assert_eq!(h.total, 8);
        let h = rep_histogram(3, 2, 3, 3.0, BUDGET).unwrap();
        assert_eq!(h.support().collect::<Vec<_>>(), vec![(4, 1)]);
        let h = rep_histogram(2, 2, 2, 100.0, BUDGET).unwrap();
        assert_eq!(h.counts.iter().map(|&c| c as u128).sum::<u128>(), 1000);
        assert!(matches!(
            rep_histogram(2, 2, 2, 1e6, 1000),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn convolution_matches_enumeration() {
        for (r, s, ell, x) in [(2, 2, 2, 300.0), (2, 3, 3, 500.0), (3, 2, 4, 900.0), (2, 2, 4, 120.0)] {
            let a = rep_histogram(r, s, ell, x, BUDGET).unwrap();
            let b = rep_histogram_enumerate(r, s, ell, x).unwrap();
            assert_eq!(a.counts, b.counts);
            assert_eq!(a.total, b.total);
        }
    }

    #[test]
    fn lhs_examples() {
        let table = sieve_tau_k(2, 1, 12, &SieveConfig::default()).unwrap();
        assert_eq!(lhs_sum(2, 2, 2, 2, 4.0, &table, BUDGET).unwrap(), 29);
        let table = sieve_tau_k(4, 1, 12, &SieveConfig::default()).unwrap();
        let expect: u64 = [(3u64, 1u64), (6, 3), (9, 3), (12, 1)]
            .iter()
            .map(|&(m, c)| c * tau_k_point(4, m).unwrap())
            .sum();
        assert_eq!(lhs_sum(4, 2, 2, 2, 4.0, &table, BUDGET).unwrap(), expect as u128);
        let short = sieve_tau_k(2, 1, 11, &SieveConfig::default()).unwrap();
        assert!(lhs_sum(2, 2, 2, 2, 4.0, &short, BUDGET).is_err());
    }

    fn hua_brute(r: u32, n: u64) -> u128 {
        // j = 2: x1^r + x2^r = y1^r + y2^r
        let mut count = 0u128;
        for a in 1..=n {
            for b in 1..=n {
                for c in 1..=n {
                    for d in 1..=n {
                        if a.pow(r) + b.pow(r) == c.pow(r) + d.pow(r) {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn hua_examples() {
        assert_eq!(hua_moment_exact(2, 2, 2, BUDGET).unwrap(), 6);
        assert_eq!(hua_moment_exact(2, 1, 7, BUDGET).unwrap(), 7);
        assert_eq!(hua_moment_exact(3, 2, 3, BUDGET).unwrap(), hua_brute(3, 3));
        assert_eq!(hua_moment_exact(2, 2, 9, BUDGET).unwrap(), hua_brute(2, 9));
        let q = hua_moment_quadrature(2, 2, 2, 200).unwrap();
        assert!((q - 6.0).abs() < 1e-6 * 6.0);
        let q = hua_moment_quadrature(2, 1, 5, 200).unwrap();
        assert!((q - 5.0).abs() < 1e-9);
        assert!(matches!(hua_moment_quadrature(2, 2, 2, 16), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn parseval_examples() {
        let cfg = SieveConfig::default();
        let p = parseval_check(2, 2, 2.0, 50, &cfg).unwrap();
        assert_eq!(p.rhs, 38);
        assert!(p.relative_gap < 1e-12);
        let p = parseval_check(4, 2, 50.0, 600, &cfg).unwrap();
        assert!(p.relative_gap <= 1e-8);
        assert!(matches!(parseval_check(2, 2, 2.0, 12, &cfg), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn slope_fit() {
        let xs = [1e4, 1e5, 1e6];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.25)).collect();
        assert!((fitted_exponent(&xs, &ys).unwrap() + 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_model_is_rejected() {
        let model = MainTermModel::new(2, 2, 2, 2, vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let r = verify_with_model(model, vec![], vec![], &[100.0], &SieveConfig::default(), Instant::now());
        assert!(matches!(r, Err(Error::DegenerateModel(_))));
    }
}
