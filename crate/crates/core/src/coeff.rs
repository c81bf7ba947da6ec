//! Regression of the major-arc coefficients `A_j(q)`.
//!
//! At a rational point the divisor-weighted sum behaves like
//! `F(a/q, X) ≈ Σ_j A_j(q) I_j(0)`, so sampling `F` on a grid of sizes and
//! fitting against the profiles `I_j(0)` recovers the `A_j(q)`.
//!
//! The sharp sums carry a remainder of size about `Y^{1/2}` that swamps the
//! lower coefficients once `k ≥ 3`. By default the fit therefore uses the Riesz
//! means `Σ_{n ≤ Y} τ_k(n) e(-an/q) (Y - n)^ρ`, whose main terms involve the
//! same `A_j(q)` against the weighted profiles `∫_1^Y (Y - t)^ρ log^j t / j! dt`,
//! plus one `Y^ρ` term from the kernel's pole at `s = 0`. With that term in the
//! model the remainder falls off quickly in `ρ`.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{gcd, log_spaced};
use crate::divisor::{for_each_segment, SieveConfig};
use crate::error::{invalid, Error, Result};
use crate::expsum::{i_profile, ProfileConfig};
use crate::quadrature::{integrate_with_breaks, uniform_breaks, QuadOptions};
use crate::special::e_ratio;

/// Largest design-matrix condition number accepted by the fit.
pub const MAX_CONDITION: f64 = 1e12;

/// Largest supported Riesz order.
pub const MAX_ORDER: u32 = 12;

/// Riesz order used unless asked otherwise.
pub const DEFAULT_ORDER: u32 = 8;

/// Default sample sizes: 48 points geometrically spaced in `[10^6, 10^7]`.
pub fn default_x_grid() -> Vec<f64> {
    log_spaced(1e6, 1e7, 48)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoeffEstimate {
    pub k: u32,
    pub q: u64,
    /// `A_0(q), …, A_{k-1}(q)`.
    pub values: Vec<Complex64>,
    /// Relative least-squares misfit.
    pub residual: f64,
    /// Largest relative disagreement between residues; zero for a single residue.
    pub a_spread: f64,
    pub x_grid: Vec<f64>,
    pub condition: f64,
}

impl CoeffEstimate {
    /// `max_j |A_j(q)| · q`.
    pub fn bound_ratio(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max) * self.q as f64
    }

    /// Largest `|Im A_j| / |A_j|` over components with `|A_j| > 10^{-3}/q`.
    pub fn imaginary_ratio(&self) -> f64 {
        let floor = 1e-3 / self.q as f64;
        self.values
            .iter()
            .filter(|v| v.norm() > floor)
            .map(|v| v.im.abs() / v.norm())
            .fold(0.0, f64::max)
    }
}

/// Riesz-weighted residue sums
/// `S_q[c](Y_t) = Σ_{n ≤ Y_t, n ≡ c (q)} τ_k(n) (Y_t - n)^ρ` for several moduli and
/// cut-offs `Y_t = ⌊(ℓ+1) X_t⌋`, gathered in one pass of the sieve.
///
/// Order `ρ = 0` gives the sharp sums behind `F(a/q, X)`. Positive orders damp
/// the oscillating remainder and are fitted against the matching weighted profiles.
#[derive(Debug, Clone)]
pub struct ResidueSums {
    k: u32,
    order: u32,
    x_grid: Vec<f64>,
    moduli: Vec<u64>,
    /// `sums[i][t][c]` for `moduli[i]`.
    sums: Vec<Vec<Vec<f64>>>,
    design: Design,
}

/// Row-scaled, column-normalized profile matrix and its SVD, shared by every residue.
#[derive(Debug, Clone)]
struct Design {
    /// Leading columns that are reported; the rest are nuisance terms.
    coeffs: usize,
    matrix: DMatrix<f64>,
    svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    row_scale: Vec<f64>,
    norms: Vec<f64>,
    condition: f64,
}

fn check_grid(x_grid: &[f64], k: u32) -> Result<()> {
    if x_grid.len() < 2 * k as usize {
        return Err(invalid(format!(
            "need at least {} sample sizes for k={k}, got {}",
            2 * k,
            x_grid.len()
        )));
    }
    if !x_grid.windows(2).all(|w| w[0] < w[1]) || !(x_grid[0] >= 1.0) {
        return Err(invalid("sample sizes must be >= 1 and strictly increasing"));
    }
    Ok(())
}

/// Pascal rows `binom[p][i]` for `p ≤ order`.
fn binomial_rows(order: u32) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    for p in 1..=order as usize {
        let prev = &rows[p - 1];
        let row = (0..=p)
            .map(|i| if i == 0 || i == p { 1.0 } else { prev[i - 1] + prev[i] })
            .collect();
        rows.push(row);
    }
    rows
}

/// Moves the moments from cut-off `C` to `C + d` using
/// `(C + d - n)^p = Σ_i binom(p,i) d^{p-i} (C - n)^i` and adds the new block.
/// Every term is nonnegative, so nothing cancels.
fn shift_moments(running: &mut [f64], block: &[f64], width: usize, d: f64, binom: &[Vec<f64>]) {
    let mut d_pow = vec![1.0; width];
    for p in 1..width {
        d_pow[p] = d_pow[p - 1] * d;
    }
    for (m, add) in running.chunks_exact_mut(width).zip(block.chunks_exact(width)) {
        for p in (0..width).rev() {
            let shifted: f64 = (0..=p).map(|i| binom[p][i] * d_pow[p - i] * m[i]).sum();
            m[p] = shifted + add[p];
        }
    }
}

impl ResidueSums {
    /// Riesz order [`DEFAULT_ORDER`].
    pub fn build(k: u32, ell: u32, moduli: &[u64], x_grid: &[f64], cfg: &SieveConfig) -> Result<Self> {
        Self::build_with_order(k, ell, moduli, x_grid, DEFAULT_ORDER, cfg)
    }

    pub fn build_with_order(
        k: u32,
        ell: u32,
        moduli: &[u64],
        x_grid: &[f64],
        order: u32,
        cfg: &SieveConfig,
    ) -> Result<Self> {
        check_grid(x_grid, k)?;
        if moduli.iter().any(|&q| q < 1) {
            return Err(invalid("moduli must be >= 1"));
        }
        if order > MAX_ORDER {
            return Err(invalid(format!("Riesz order must be at most {MAX_ORDER}, got {order}")));
        }
        let cutoffs: Vec<u64> = x_grid
            .iter()
            .map(|&x| ((ell as f64 + 1.0) * x).floor() as u64)
            .collect();
        let y_max = *cutoffs.last().expect("grid is nonempty");
        let design = Design::new(k, ell, order, x_grid, &cutoffs)?;
        let width = order as usize + 1;
        let binom = binomial_rows(order);
        // running[i][c*width + p] = Σ τ(n) (C - n)^p over n ≡ c, n ≤ C, where C is
        // the most recent cut-off; pending[i] collects the same with the next cut-off.
        let mut running: Vec<Vec<f64>> = moduli.iter().map(|&q| vec![0.0; q as usize * width]).collect();
        let mut pending = running.clone();
        let mut last_cut = 0u64;
        // Residue of the next n = 1 modulo each q.
        let mut phase: Vec<usize> = moduli.iter().map(|&q| (1 % q) as usize).collect();
        let mut sums: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(cutoffs.len()); moduli.len()];
        let mut next_cut = 0usize;
        let mut weights: Vec<f64> = Vec::new();
        for_each_segment(k, 1, y_max, cfg, |start, values| {
            let mut offset = 0usize;
            let end = start + values.len() as u64;
            while offset < values.len() {
                // Process up to the next cut-off (inclusive) or the end of the segment.
                let cut = cutoffs[next_cut];
                let stop = if cut < end { (cut - start + 1) as usize } else { values.len() };
                weights.clear();
                for (i, &v) in values[offset..stop].iter().enumerate() {
                    let gap = (cut - (start + (offset + i) as u64)) as f64;
                    let mut w = v as f64;
                    for _ in 0..width {
                        weights.push(w);
                        w *= gap;
                    }
                }
                for (i, &q) in moduli.iter().enumerate() {
                    let acc = &mut pending[i];
                    let mut c = phase[i];
                    let q = q as usize;
                    for w in weights.chunks_exact(width) {
                        for (slot, &x) in acc[c * width..(c + 1) * width].iter_mut().zip(w) {
                            *slot += x;
                        }
                        c += 1;
                        if c == q {
                            c = 0;
                        }
                    }
                    phase[i] = c;
                }
                offset = stop;
                while next_cut < cutoffs.len() && cutoffs[next_cut] == start + offset as u64 - 1 {
                    let d = (cutoffs[next_cut] - last_cut) as f64;
                    for i in 0..moduli.len() {
                        shift_moments(&mut running[i], &pending[i], width, d, &binom);
                        pending[i].iter_mut().for_each(|v| *v = 0.0);
                        sums[i].push(running[i].iter().skip(order as usize).step_by(width).copied().collect());
                    }
                    last_cut = cutoffs[next_cut];
                    next_cut += 1;
                }
            }
        })?;
        Ok(ResidueSums {
            k,
            order,
            x_grid: x_grid.to_vec(),
            moduli: moduli.to_vec(),
            sums,
            design,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    /// `Σ_c S_q[c](Y_t) e(-ac/q)`, which is `F(a/q, X_t)` at order zero.
    /// `t` indexes the sample sizes.
    pub fn f_value(&self, q: u64, a: u64, t: usize) -> Result<Complex64> {
        let i = self
            .moduli
            .iter()
            .position(|&m| m == q)
            .ok_or(Error::MissingCoefficients(q))?;
        let row = &self.sums[i][t];
        let minus_a = (q - a % q) % q;
        Ok(row
            .iter()
            .enumerate()
            .map(|(c, &s)| e_ratio((minus_a * c as u64) % q, q) * s)
            .sum())
    }

    /// Fits `A_j(q)` at one residue `a`.
    pub fn extract(&self, q: u64, a: u64) -> Result<CoeffEstimate> {
        if q < 1 || gcd(a % q, q) != 1 {
            return Err(invalid(format!("need gcd(a, q) = 1, got a={a} q={q}")));
        }
        let rhs: Vec<Complex64> = (0..self.x_grid.len())
            .map(|t| self.f_value(q, a, t))
            .collect::<Result<_>>()?;
        let fit = self.design.solve(&rhs)?;
        Ok(CoeffEstimate {
            k: self.k,
            q,
            values: fit.values,
            residual: fit.residual,
            a_spread: 0.0,
            x_grid: self.x_grid.clone(),
            condition: fit.condition,
        })
    }

    /// Fits every residue coprime to `q`, returning their mean and spread.
    pub fn extract_all(&self, q: u64) -> Result<CoeffEstimate> {
        let residues: Vec<u64> = (1..=q).filter(|&a| gcd(a % q, q) == 1).collect();
        let fits: Vec<CoeffEstimate> = residues.iter().map(|&a| self.extract(q, a)).collect::<Result<_>>()?;
        let k = self.k as usize;
        let n = fits.len() as f64;
        let mean: Vec<Complex64> = (0..k)
            .map(|j| fits.iter().map(|f| f.values[j]).sum::<Complex64>() / n)
            .collect();
        let floor = 1e-3 / q as f64;
        let mut spread = 0.0f64;
        for f in &fits {
            for j in 0..k {
                if mean[j].norm() > floor {
                    spread = spread.max((f.values[j] - mean[j]).norm() / mean[j].norm());
                }
            }
        }
        Ok(CoeffEstimate {
            k: self.k,
            q,
            values: mean,
            residual: fits.iter().map(|f| f.residual).fold(0.0, f64::max),
            a_spread: spread,
            x_grid: self.x_grid.clone(),
            condition: fits[0].condition,
        })
    }
}

struct Fit {
    values: Vec<Complex64>,
    residual: f64,
    condition: f64,
}

/// `Y^{-ρ-1} ∫_1^Y (Y - t)^ρ log^j t / j! dt`, via `t = Y e^{-w}`.
fn weighted_profile(j: u32, order: u32, y: f64) -> Result<f64> {
    let l = y.ln();
    let fact: f64 = (1..=j).map(f64::from).product();
    let f = |w: f64| {
        let v = (-w).exp();
        Complex64::new((1.0 - v).powi(order as i32) * (l - w).powi(j as i32) / fact * v, 0.0)
    };
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_panels: 2000,
    };
    Ok(integrate_with_breaks(f, 0.0, l, &uniform_breaks(0.0, l, 8), &opts)?.value.re)
}

impl Design {
    /// Columns are `I_j(0; X_t)` at order zero and the weighted profiles
    /// otherwise; rows are scaled by `Y_t^{-ρ-1}`.
    ///
    /// For `ρ ≥ 1` the kernel `Γ(s)/Γ(s+ρ+1)` also has a pole at `s = 0`,
    /// which adds `c·Y^ρ` to the Riesz mean. Left out of the model it leaks
    /// into `A_0`, so it gets a column of its own that is fitted and dropped.
    fn new(k: u32, ell: u32, order: u32, x_grid: &[f64], cutoffs: &[u64]) -> Result<Self> {
        let cfg = ProfileConfig::default();
        let cols = k as usize + usize::from(order > 0);
        let mut matrix = DMatrix::<f64>::zeros(x_grid.len(), cols);
        let mut row_scale = Vec::with_capacity(x_grid.len());
        for (t, &x) in x_grid.iter().enumerate() {
            let y = cutoffs[t] as f64;
            let w = if order == 0 {
                1.0 / ((ell as f64 + 1.0) * x)
            } else {
                y.powi(-(order as i32) - 1)
            };
            row_scale.push(w);
            for j in 0..cols {
                matrix[(t, j)] = if j == k as usize {
                    1.0 / y
                } else if order == 0 {
                    i_profile(j as u32, ell, 0.0, x, &cfg)?.value.re * w
                } else {
                    weighted_profile(j as u32, order, y)?
                };
            }
        }
        let norms: Vec<f64> = (0..cols).map(|j| matrix.column(j).norm()).collect();
        for (j, &norm) in norms.iter().enumerate() {
            if norm == 0.0 {
                return Err(Error::IllConditioned(f64::INFINITY));
            }
            matrix.column_mut(j).scale_mut(1.0 / norm);
        }
        let svd = SVD::new(matrix.clone(), true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned(condition));
        }
        Ok(Design {
            coeffs: k as usize,
            matrix,
            svd,
            row_scale,
            norms,
            condition,
        })
    }

    fn solve(&self, rhs: &[Complex64]) -> Result<Fit> {
        let mut b = DMatrix::<f64>::zeros(rhs.len(), 2);
        for (t, (v, w)) in rhs.iter().zip(&self.row_scale).enumerate() {
            b[(t, 0)] = v.re * w;
            b[(t, 1)] = v.im * w;
        }
        let sol = self.svd.solve(&b, 0.0).map_err(|e| invalid(e.to_string()))?;
        let misfit = (&self.matrix * &sol - &b).norm();
        let scale = b.norm();
        let values = self
            .norms
            .iter()
            .take(self.coeffs)
            .enumerate()
            .map(|(j, n)| Complex64::new(sol[(j, 0)], sol[(j, 1)]) / *n)
            .collect();
        Ok(Fit {
            values,
            residual: if scale > 0.0 { misfit / scale } else { misfit },
            condition: self.condition,
        })
    }
}

/// Extracts `A_j(q)` at residue `a`, sieving `τ_k` up to `(ℓ+1)·max(X_grid)`.
pub fn extract_coeffs(k: u32, q: u64, a: u64, x_grid: &[f64], ell: u32, cfg: &SieveConfig) -> Result<CoeffEstimate> {
    let sums = ResidueSums::build(k, ell, &[q], x_grid, cfg)?;
    sums.extract(q, a)
}

/// As [`extract_coeffs`], averaged over every residue coprime to `q`.
pub fn extract_coeffs_all(k: u32, q: u64, x_grid: &[f64], ell: u32, cfg: &SieveConfig) -> Result<CoeffEstimate> {
    let sums = ResidueSums::build(k, ell, &[q], x_grid, cfg)?;
    sums.extract_all(q)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub q: u64,
    /// `max_j |A_j(q)| · q`, absent when the extraction failed.
    pub ratio: Option<f64>,
    pub a_spread: Option<f64>,
    pub error: Option<String>,
}

/// Per-modulus `max_j |A_j(q)|·q` for `q ≤ q_max`, from one sieve pass.
pub fn coeff_bound_scan(k: u32, q_max: u64, ell: u32, x_grid: &[f64], cfg: &SieveConfig) -> Result<Vec<BoundRow>> {
    if !(1..=100).contains(&q_max) {
        return Err(invalid(format!("q_max must lie in [1, 100], got {q_max}")));
    }
    let moduli: Vec<u64> = (1..=q_max).collect();
    let sums = ResidueSums::build(k, ell, &moduli, x_grid, cfg)?;
    Ok(bound_rows(&sums, q_max))
}

pub fn bound_rows(sums: &ResidueSums, q_max: u64) -> Vec<BoundRow> {
    (1..=q_max)
        .map(|q| match sums.extract_all(q) {
            Ok(est) => BoundRow {
                q,
                ratio: Some(est.bound_ratio()),
                a_spread: Some(est.a_spread),
                error: None,
            },
            Err(e) => BoundRow {
                q,
                ratio: None,
                a_spread: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::EULER_GAMMA;

    fn small_grid() -> Vec<f64> {
        log_spaced(1e4, 1e6, 10)
    }

    #[test]
    fn divisor_function_matches_estermann() {
        // For k = 2: A_1(q) = 1/q and A_0(q) = (2γ - 2 log q)/q.
        let moduli = [1u64, 2, 3, 5, 6];
        let sums = ResidueSums::build(2, 2, &moduli, &small_grid(), &SieveConfig::default()).unwrap();
        for &q in &moduli {
            let est = sums.extract_all(q).unwrap();
            let qf = q as f64;
            let a1 = 1.0 / qf;
            let a0 = (2.0 * EULER_GAMMA - 2.0 * qf.ln()) / qf;
            assert!((est.values[1].re - a1).abs() < 2e-3 / qf, "q={q}: {:?}", est.values);
            assert!((est.values[0].re - a0).abs() < 3e-2 / qf, "q={q}: {:?}", est.values);
            assert!(est.a_spread < 0.05, "q={q}: spread {}", est.a_spread);
        }
    }

    #[test]
    fn residue_sums_reproduce_direct_sum() {
        use crate::divisor::sieve_tau_k;
        use crate::expsum::{f_sum, Frequency};
        let grid = log_spaced(100.0, 1000.0, 6);
        let sums = ResidueSums::build_with_order(3, 2, &[7], &grid, 0, &SieveConfig::default()).unwrap();
        let table = sieve_tau_k(3, 1, 3000, &SieveConfig::default()).unwrap();
        for (t, &x) in grid.iter().enumerate() {
            let direct = f_sum(3, 2, Frequency::rational(3, 7), x, &table).unwrap();
            assert!((sums.f_value(7, 3, t).unwrap() - direct).norm() < 1e-8);
        }
    }

    #[test]
    fn leading_coefficient_of_piltz_sum() {
        let est = extract_coeffs(3, 1, 1, &small_grid(), 2, &SieveConfig::default()).unwrap();
        assert!((est.values[2].re - 1.0).abs() < 0.02, "{:?}", est.values);
    }

    #[test]
    fn piltz_coefficients_from_laurent_expansion() {
        // Residue of ζ(s)^4 Y^s / s, written through the Stieltjes constants.
        let expected = [1.254246701, 2.290330925, 2.30886266, 1.0];
        let grid = log_spaced(1e5, 1e6, 16);
        let est = extract_coeffs(4, 1, 1, &grid, 2, &SieveConfig::default()).unwrap();
        for (j, (v, e)) in est.values.iter().zip(expected).enumerate() {
            assert!((v.re - e).abs() < 2e-3, "j={j}: {} vs {e}", v.re);
        }
    }

    #[test]
    fn higher_order_is_residue_independent() {
        let grid = log_spaced(1e5, 1e6, 24);
        let cfg = SieveConfig::default();
        let sums = ResidueSums::build_with_order(4, 2, &[7], &grid, 8, &cfg).unwrap();
        let est = sums.extract_all(7).unwrap();
        assert!(est.a_spread < 1e-3, "spread {}", est.a_spread);
        assert!(est.imaginary_ratio() < 1e-3);
        let low = ResidueSums::build_with_order(4, 2, &[7], &grid, 3, &cfg).unwrap();
        assert!(low.extract_all(7).unwrap().a_spread > 10.0 * est.a_spread);
    }

    #[test]
    fn riesz_sums_match_direct_weighting() {
        use crate::divisor::sieve_tau_k;
        let grid = log_spaced(50.0, 400.0, 6);
        let sums = ResidueSums::build_with_order(3, 2, &[5], &grid, 2, &SieveConfig::default()).unwrap();
        let table = sieve_tau_k(3, 1, 1200, &SieveConfig::default()).unwrap();
        for (t, &x) in grid.iter().enumerate() {
            let y = (3.0 * x).floor() as u64;
            let direct: Complex64 = (1..=y)
                .map(|n| e_ratio((4 * n) % 5, 5) * (table.get(n).unwrap() as f64 * ((y - n) as f64).powi(2)))
                .sum();
            let got = sums.f_value(5, 1, t).unwrap();
            assert!((got - direct).norm() < 1e-9 * direct.norm(), "{got} vs {direct}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = SieveConfig::default();
        assert!(extract_coeffs(2, 4, 2, &small_grid(), 2, &cfg).is_err());
        assert!(extract_coeffs(4, 1, 1, &[1e3, 1e4, 1e5], 2, &cfg).is_err());
        assert!(coeff_bound_scan(2, 101, 2, &small_grid(), &cfg).is_err());
    }

    #[test]
    fn near_duplicate_grid_is_ill_conditioned() {
        let grid: Vec<f64> = (0..8).map(|i| 1e5 + i as f64 * 1e-3).collect();
        let r = extract_coeffs(4, 1, 1, &grid, 2, &SieveConfig::default());
        assert!(matches!(r, Err(Error::IllConditioned(_))), "{r:?}");
    }
}
