//! Farey dissection of `[1/Q, 1 + 1/Q]` into major and minor arcs, with
//! empirical scans of the major-arc approximation and minor-arc bounds.

use num_complex::Complex64;
use serde::Serialize;

use super::{gauss_sum, gauss_sums_all, psi, t_sum, Frequency, ProfileConfig};
use crate::arith::gcd;
use crate::error::{invalid, Result};

/// The arc `|α - a/q| ≤ 1/(qQ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RationalArc {
    pub a: u64,
    pub q: u64,
    pub halfwidth: f64,
}

impl RationalArc {
    pub fn center(&self) -> f64 {
        self.a as f64 / self.q as f64
    }

    pub fn contains(&self, alpha: f64) -> bool {
        (alpha - self.center()).abs() <= self.halfwidth
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcPartition {
    pub p: f64,
    pub q: f64,
    pub major: Vec<RationalArc>,
    /// Total length of the major arcs, counting overlaps once.
    pub major_measure: f64,
    pub minor_measure: f64,
    /// No two major arcs intersect.
    pub disjoint: bool,
    /// `Q < 2P²`, where disjointness is not guaranteed.
    pub overlap_warning: bool,
}

impl ArcPartition {
    pub fn is_major(&self, alpha: f64) -> bool {
        self.major.iter().any(|arc| arc.contains(alpha))
    }
}

/// Largest integer not above `p`, forgiving rounding just below an integer.
fn floor_tolerant(p: f64) -> u64 {
    (p * (1.0 + 1e-12)).floor() as u64
}

/// Major arcs for `P = X^θ`, `Q = X^{1-θ}`.
pub fn dissect(x: f64, theta: f64) -> Result<ArcPartition> {
    if !(x > 1.0) {
        return Err(invalid(format!("X must be > 1, got {x}")));
    }
    if !(theta > 0.0 && theta < 0.5) {
        return Err(invalid(format!("θ must lie in (0, 1/2), got {theta}")));
    }
    let p = x.powf(theta);
    let big_q = x.powf(1.0 - theta);
    let q_max = floor_tolerant(p);
    let mut major = Vec::new();
    for q in 1..=q_max {
        for a in 1..=q {
            if gcd(a, q) == 1 {
                major.push(RationalArc {
                    a,
                    q,
                    halfwidth: 1.0 / (q as f64 * big_q),
                });
            }
        }
    }
    let lo = 1.0 / big_q;
    let hi = 1.0 + 1.0 / big_q;
    let mut intervals: Vec<(f64, f64)> = major
        .iter()
        .map(|arc| ((arc.center() - arc.halfwidth).max(lo), (arc.center() + arc.halfwidth).min(hi)))
        .collect();
    intervals.sort_by(|u, v| u.0.total_cmp(&v.0));
    let mut disjoint = true;
    let mut measure = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (s, t) in intervals {
        match cur {
            Some((cs, ct)) if s <= ct => {
                if s < ct {
                    disjoint = false;
                }
                cur = Some((cs, ct.max(t)));
            }
            Some((cs, ct)) => {
                measure += ct - cs;
                cur = Some((s, t));
            }
            None => cur = Some((s, t)),
        }
    }
    if let Some((cs, ct)) = cur {
        measure += ct - cs;
    }
    Ok(ArcPartition {
        p,
        q: big_q,
        major,
        major_measure: measure,
        minor_measure: (hi - lo) - measure,
        disjoint,
        overlap_warning: big_q < 2.0 * p * p,
    })
}

/// `|T_r(a/q + β, X) - G_r(a, 0; q)/q · Ψ_r(β)|`.
pub fn major_arc_residual(r: u32, a: u64, q: u64, beta: f64, x: f64) -> Result<f64> {
    Ok(major_arc_difference(r, a, q, beta, x, &ProfileConfig::default())?.norm())
}

fn major_arc_difference(r: u32, a: u64, q: u64, beta: f64, x: f64, cfg: &ProfileConfig) -> Result<Complex64> {
    if q < 1 || gcd(a, q) != 1 {
        return Err(invalid(format!("need gcd(a, q) = 1, got a={a} q={q}")));
    }
    let alpha = Frequency::Shifted {
        num: a as i64,
        den: q,
        offset: beta,
    };
    let t = t_sum(r, alpha, x)?.value;
    let g = gauss_sum(r, a as i64, 0, q)?;
    let p = psi(r, beta, x, cfg)?.value;
    Ok(t - g / q as f64 * p)
}

/// One sample of the major-arc approximation error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualRow {
    pub q: u64,
    pub a: u64,
    pub beta: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    /// `abs / (q^{1/2} (1 + |β|X)^{1/2})`.
    pub bound_ratio: f64,
}

/// Samples the major-arc residual at `points` values of `β` across every arc.
pub fn major_arc_scan(r: u32, x: f64, theta: f64, points: usize) -> Result<Vec<ResidualRow>> {
    let part = dissect(x, theta)?;
    let cfg = ProfileConfig::default();
    let points = points.max(1);
    let mut rows = Vec::new();
    for arc in &part.major {
        for m in 0..points {
            let beta = if points == 1 {
                0.0
            } else {
                arc.halfwidth * (2.0 * m as f64 / (points - 1) as f64 - 1.0)
            };
            let d = major_arc_difference(r, arc.a, arc.q, beta, x, &cfg)?;
            let abs = d.norm();
            rows.push(ResidualRow {
                q: arc.q,
                a: arc.a,
                beta,
                re: d.re,
                im: d.im,
                abs,
                bound_ratio: abs / ((arc.q as f64).sqrt() * (1.0 + beta.abs() * x).sqrt()),
            });
        }
    }
    Ok(rows)
}

/// One sample of `|T_r|` on the minor arcs against its Weyl-type envelope.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeylRow {
    pub alpha: f64,
    pub abs: f64,
    pub envelope: f64,
    pub ratio: f64,
}

/// Minor-arc saving exponent per unit `θ` for `T_r`.
pub fn weyl_saving(r: u32) -> f64 {
    if r <= 7 {
        1.0 / 2f64.powi(r as i32 - 1)
    } else {
        1.0 / (2.0 * r as f64 * (r as f64 - 1.0))
    }
}

/// `|T_r(α, X)| / X^{1/r - θ·saving}` on an even grid of `samples` points of
/// `[1/Q, 1 + 1/Q]`, keeping the points that fall on the minor arcs.
pub fn minor_arc_scan(r: u32, x: f64, theta: f64, samples: usize) -> Result<Vec<WeylRow>> {
    let part = dissect(x, theta)?;
    let envelope = x.powf(1.0 / r as f64 - theta * weyl_saving(r));
    let lo = 1.0 / part.q;
    let mut rows = Vec::new();
    for m in 0..samples {
        let alpha = lo + (m as f64 + 0.5) / samples as f64;
        if part.is_major(alpha) {
            continue;
        }
        let abs = t_sum(r, Frequency::Real(alpha), x)?.value.norm();
        rows.push(WeylRow {
            alpha,
            abs,
            envelope,
            ratio: abs / envelope,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussBoundRow {
    pub q: u64,
    /// `max_{(a,q)=1} |G_r(a, 0; q)|`.
    pub max_abs: f64,
    /// `max_abs · q^{-exponent}`.
    pub ratio: f64,
}

/// Per-modulus maximum of `|G_r(a, 0; q)| q^{-exponent}` over reduced residues.
pub fn gauss_bound_scan(r: u32, q_max: u64, exponent: f64) -> Result<Vec<GaussBoundRow>> {
    let mut rows = Vec::with_capacity(q_max as usize);
    for q in 1..=q_max {
        let all = gauss_sums_all(r, q)?;
        let max_abs = (1..=q)
            .filter(|&a| gcd(a, q) == 1)
            .map(|a| all[(a % q) as usize].norm())
            .fold(0.0, f64::max);
        rows.push(GaussBoundRow {
            q,
            max_abs,
            ratio: max_abs * (q as f64).powf(-exponent),
        });
    }
    Ok(rows)
}
