//! Adaptive Gauss–Kronrod (10/21 point) integration of complex-valued integrands.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    /// Roundoff level of the panel, below which its error cannot be pushed.
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut abs_sum = fc.norm() * WGK[10];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(10).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += (f1 + f2) * wk;
        abs_sum += (f1.norm() + f2.norm()) * wk;
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let raw = ((kronrod - gauss) * half).norm();
    let scale = abs_sum * half.abs();
    // QUADPACK-style rescaling of the Gauss/Kronrod difference.
    let mut error = if scale > 0.0 && raw > 0.0 {
        scale * (200.0 * raw / scale).powf(1.5).min(1.0)
    } else {
        raw
    };
    let floor = 50.0 * f64::EPSILON * scale;
    error = error.max(floor);
    Panel {
        a,
        b,
        value,
        error,
        floor,
    }
}

/// Integrates `f` over `[a, b]`, starting from panels split at `breaks`.
///
/// Breakpoints outside `(a, b)` are ignored. The panel with the largest error
/// estimate is bisected until the total error meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_with_breaks<F>(f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut floor = 0.0;
    for w in points.windows(2) {
        let p = gk21(&f, w[0], w[1]);
        total += p.value;
        err += p.error;
        floor += p.floor;
        heap.push(p);
    }
    loop {
        // Cancelling integrands can sit below the accumulated roundoff.
        let target = opts.abs_tol.max(opts.rel_tol * total.norm()).max(2.0 * floor);
        if err <= target {
            // Re-add from scratch so the running updates leave no drift.
            let (value, error) = heap
                .iter()
                .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.value, e + p.error));
            return Ok(Estimate {
                value: value * sign,
                error,
            });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Nonconvergence {
                achieved: err,
                target,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Nonconvergence {
                achieved: err,
                target,
            });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err = (err + left.error + right.error - worst.error).max(0.0);
        floor += left.floor + right.floor - worst.floor;
        heap.push(left);
        heap.push(right);
    }
}

/// Integrates `f` over `[a, b]` with no forced breakpoints.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Evenly spaced breakpoints splitting `[a, b]` into `n` panels.
pub fn uniform_breaks(a: f64, b: f64, n: usize) -> Vec<f64> {
    (1..n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}
