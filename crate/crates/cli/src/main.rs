//! `taukit`: command-line access to the divisor-sum toolkit.
//!
//! Every subcommand prints a short human-readable report, or JSON with
//! `--json`. Tabular results can also be written to a CSV file with `--csv`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use taukit::arith::log_spaced;
use taukit::coeff::{ResidueSums, DEFAULT_ORDER};
use taukit::delta::{delta, to_f64, DeltaReport};
use taukit::divisor::{sieve_tau_k, tau_k_point, DivisorTable, SieveConfig};
use taukit::expsum::{dissect, gauss_sum, gauss_sums_all, major_arc_scan, minor_arc_scan};
use taukit::harness::{
    hua_moment_exact, hua_moment_quadrature, parseval_check, verify, VerifyConfig, VerifyReport,
};
use taukit::main_term::{
    series_moduli, singular_integral_cube, singular_integral_fourier, singular_series_all, TruncationResult,
    DEFAULT_BETA_MAX, DEFAULT_Q_MAX,
};
use taukit::{Error, Result};

#[derive(Parser)]
#[command(name = "taukit", version, about = "Divisor sums over mixed power values and their circle-method main terms")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Also write the main table to this CSV file.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Worker threads for the sieve (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Seed for Monte Carlo estimates.
    #[arg(long, global = true, value_name = "S", default_value_t = 1)]
    seed: u64,
    /// Memory budget for materialized tables, in megabytes.
    #[arg(long = "budget-mb", global = true, value_name = "M")]
    budget_mb: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// τ_k at a point or over a range; optional binary dump.
    Tau(TauArgs),
    /// Complete Gauss sums G_r(a, b; q).
    Gauss(GaussArgs),
    /// Farey dissection and the major-arc approximation error of T_r.
    Arcs(ArcsArgs),
    /// |T_r| on the minor arcs against its Weyl-type envelope.
    Scan(ScanArgs),
    /// Regression of the major-arc coefficients A_j(q).
    Coeff(CoeffArgs),
    /// Truncated singular series S_j.
    Sseries(SeriesArgs),
    /// Singular integral J_i by the Fourier and cube evaluators.
    Sintegral(IntegralArgs),
    /// Power-saving exponent δ and its case analysis.
    Delta(DeltaArgs),
    /// Hua moment: exact count and quadrature.
    Moment(MomentArgs),
    /// Parseval identity for the divisor-weighted sum F.
    Parseval(ParsevalArgs),
    /// End-to-end comparison of S(X) with the predicted main term M(X).
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TauArgs {
    #[arg(long)]
    k: Option<u32>,
    /// Single point.
    #[arg(long, conflicts_with_all = ["lo", "hi", "read"])]
    n: Option<u64>,
    #[arg(long, requires = "hi")]
    lo: Option<u64>,
    #[arg(long, requires = "lo")]
    hi: Option<u64>,
    /// Write the range as a binary dump.
    #[arg(long, value_name = "PATH")]
    dump: Option<PathBuf>,
    /// Read a binary dump instead of sieving.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["k", "lo", "hi"])]
    read: Option<PathBuf>,
}

#[derive(Args)]
struct GaussArgs {
    #[arg(long, default_value_t = 2)]
    r: u32,
    /// Single modulus; with --a prints one value, otherwise every reduced residue.
    #[arg(long)]
    q: Option<u64>,
    #[arg(long, requires = "q")]
    a: Option<i64>,
    #[arg(long, default_value_t = 0)]
    b: i64,
    /// Scan every q up to this bound (b = 0, reduced residues).
    #[arg(long, conflicts_with = "q")]
    q_max: Option<u64>,
}

#[derive(Args)]
struct ArcsArgs {
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long)]
    x: f64,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    /// Samples of β per arc for the residual table.
    #[arg(long, default_value_t = 5)]
    points: usize,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long)]
    x: f64,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args)]
struct CoeffArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    q: u64,
    /// Single residue; omitted means every residue coprime to q.
    #[arg(long)]
    a: Option<u64>,
    #[arg(long = "l", default_value_t = 2)]
    ell: u32,
    #[command(flatten)]
    grid: CoeffGrid,
}

#[derive(Args)]
struct CoeffGrid {
    /// Smallest sample size X.
    #[arg(long, default_value_t = 1e6)]
    x_lo: f64,
    /// Largest sample size X; the sieve runs to (ℓ+1)·x_hi.
    #[arg(long, default_value_t = 1e7)]
    x_hi: f64,
    #[arg(long, default_value_t = 48)]
    points: usize,
    /// Riesz order of the fitted sums (0 = sharp sums).
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: u32,
}

impl CoeffGrid {
    fn grid(&self) -> Result<Vec<f64>> {
        if !(self.x_lo >= 1.0 && self.x_hi > self.x_lo) || self.points < 2 {
            return Err(Error::InvalidArgument("need 1 <= x_lo < x_hi and points >= 2".into()));
        }
        Ok(log_spaced(self.x_lo, self.x_hi, self.points))
    }
}

#[derive(Args)]
struct SeriesArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    s: u32,
    #[arg(long = "l")]
    ell: u32,
    /// Only this index; omitted means j = 0..k-1.
    #[arg(long)]
    j: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_Q_MAX)]
    q_max: u64,
    #[command(flatten)]
    grid: CoeffGrid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Fourier,
    Cube,
    Both,
}

#[derive(Args)]
struct IntegralArgs {
    #[arg(long)]
    r: u32,
    #[arg(long)]
    s: u32,
    #[arg(long = "l")]
    ell: u32,
    #[arg(long, default_value_t = 0)]
    i: u32,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    method: Method,
    #[arg(long, default_value_t = DEFAULT_BETA_MAX)]
    beta_max: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
}

#[derive(Args)]
struct DeltaArgs {
    #[arg(long, required_unless_present = "table")]
    k: Option<u32>,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    s: u32,
    #[arg(long = "l")]
    ell: u32,
    /// Range of k, written `kmin..kmax`.
    #[arg(long, value_parser = parse_range, conflicts_with = "k")]
    table: Option<RangeInclusive<u32>>,
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long)]
    j: u32,
    #[arg(long)]
    n: u64,
    /// Quadrature points; defaults to twice the degree plus one.
    #[arg(long)]
    m: Option<u64>,
}

#[derive(Args)]
struct ParsevalArgs {
    #[arg(long)]
    k: u32,
    #[arg(long = "l", default_value_t = 2)]
    ell: u32,
    #[arg(long)]
    x: f64,
    /// Quadrature points; defaults to 4(ℓ+1)X.
    #[arg(long)]
    m: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    s: u32,
    #[arg(long = "l")]
    ell: u32,
    /// Comma-separated sizes X.
    #[arg(long, value_delimiter = ',')]
    x_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_Q_MAX)]
    q_max: u64,
    #[arg(long, default_value_t = DEFAULT_BETA_MAX)]
    beta_max: f64,
    #[command(flatten)]
    grid: CoeffGrid,
}

fn parse_range(s: &str) -> std::result::Result<RangeInclusive<u32>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected kmin..kmax, got {s}"))?;
    let a: u32 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: u32 = b.trim_start_matches('=').trim().parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok(a..=b)
}

struct Ctx {
    json: bool,
    csv: Option<PathBuf>,
    seed: u64,
    sieve: SieveConfig,
}

impl Ctx {
    fn emit(&self, value: Value, text: String) -> Result<()> {
        let out = if self.json {
            serde_json::to_string_pretty(&value).map_err(|e| Error::Io(e.to_string()))? + "\n"
        } else {
            text
        };
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        match std::io::stdout().lock().write_all(out.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        }
    }

    fn write_csv<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let Some(path) = &self.csv else { return Ok(()) };
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        for row in rows {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_csv_text(&self, text: &str) -> Result<()> {
        if let Some(path) = &self.csv {
            std::fs::write(path, text)?;
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut sieve = SieveConfig::default();
    if let Some(mb) = cli.global.budget_mb {
        sieve = sieve.with_budget_mb(mb);
    }
    let ctx = Ctx {
        json: cli.global.json,
        csv: cli.global.csv,
        seed: cli.global.seed,
        sieve,
    };
    match run(cli.command, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command, ctx: &Ctx) -> Result<()> {
    match command {
        Command::Tau(a) => tau(a, ctx),
        Command::Gauss(a) => gauss(a, ctx),
        Command::Arcs(a) => arcs(a, ctx),
        Command::Scan(a) => scan(a, ctx),
        Command::Coeff(a) => coeff(a, ctx),
        Command::Sseries(a) => sseries(a, ctx),
        Command::Sintegral(a) => sintegral(a, ctx),
        Command::Delta(a) => delta_cmd(a, ctx),
        Command::Moment(a) => moment(a, ctx),
        Command::Parseval(a) => parseval(a, ctx),
        Command::Verify(a) => verify_cmd(a, ctx),
    }
}

#[derive(Serialize)]
struct TauRow {
    n: u64,
    tau: u64,
}

/// Tables up to this length are listed in full.
const LIST_LIMIT: usize = 100_000;

fn tau(args: TauArgs, ctx: &Ctx) -> Result<()> {
    if let Some(n) = args.n {
        let k = args.k.ok_or_else(|| Error::InvalidArgument("--k is required".into()))?;
        let v = tau_k_point(k, n)?;
        ctx.write_csv(&[TauRow { n, tau: v }])?;
        return ctx.emit(json!({"k": k, "n": n, "tau": v}), format!("tau_{k}({n}) = {v}\n"));
    }
    let table = if let Some(path) = &args.read {
        DivisorTable::read_dump(BufReader::new(File::open(path)?))?
    } else {
        let k = args.k.ok_or_else(|| Error::InvalidArgument("--k is required".into()))?;
        let (Some(lo), Some(hi)) = (args.lo, args.hi) else {
            return Err(Error::InvalidArgument("give --n, --lo/--hi, or --read".into()));
        };
        sieve_tau_k(k, lo, hi, &ctx.sieve)?
    };
    if let Some(path) = &args.dump {
        let mut w = BufWriter::new(File::create(path)?);
        table.write_dump(&mut w)?;
        w.flush()?;
    }
    let rows: Vec<TauRow> = (table.lo()..=table.hi())
        .zip(table.values())
        .map(|(n, &tau)| TauRow { n, tau })
        .collect();
    ctx.write_csv(&rows)?;
    let listed = rows.len() <= LIST_LIMIT;
    let mut value = json!({
        "k": table.k(), "lo": table.lo(), "hi": table.hi(),
        "sum1": table.sum1().to_string(), "sum2": table.sum2().to_string(),
    });
    if listed {
        value["values"] = json!(table.values());
    }
    let mut text = format!(
        "tau_{} on [{}, {}]: sum = {}, sum of squares = {}\n",
        table.k(),
        table.lo(),
        table.hi(),
        table.sum1(),
        table.sum2()
    );
    if rows.len() <= 50 {
        for row in &rows {
            text.push_str(&format!("{:>12} {}\n", row.n, row.tau));
        }
    }
    ctx.emit(value, text)
}

#[derive(Serialize)]
struct GaussRow {
    q: u64,
    a: i64,
    beta: f64,
    re: f64,
    im: f64,
    abs: f64,
    bound_ratio: f64,
}

impl GaussRow {
    fn new(r: u32, q: u64, a: i64, g: taukit::Complex64) -> Self {
        let abs = g.norm();
        GaussRow {
            q,
            a,
            beta: 0.0,
            re: g.re,
            im: g.im,
            abs,
            bound_ratio: abs * (q as f64).powf(1.0 / r as f64 - 1.0),
        }
    }
}

fn gauss(args: GaussArgs, ctx: &Ctx) -> Result<()> {
    let r = args.r;
    let mut rows = Vec::new();
    match (args.q, args.a, args.q_max) {
        (Some(q), Some(a), _) => rows.push(GaussRow::new(r, q, a, gauss_sum(r, a, args.b, q)?)),
        (Some(q), None, _) if args.b != 0 => {
            for a in 0..q as i64 {
                rows.push(GaussRow::new(r, q, a, gauss_sum(r, a, args.b, q)?));
            }
        }
        (q, None, q_max) => {
            let (lo, hi) = match (q, q_max) {
                (Some(q), _) => (q, q),
                (None, Some(m)) => (1, m),
                (None, None) => return Err(Error::InvalidArgument("give --q or --q-max".into())),
            };
            for q in lo..=hi {
                let all = gauss_sums_all(r, q)?;
                for a in 1..=q {
                    if taukit::arith::gcd(a, q) == 1 {
                        rows.push(GaussRow::new(r, q, a as i64, all[(a % q) as usize]));
                    }
                }
            }
        }
        (None, Some(_), _) => unreachable!("clap requires --q with --a"),
    }
    ctx.write_csv(&rows)?;
    let worst = rows.iter().map(|row| row.bound_ratio).fold(0.0, f64::max);
    let mut text = String::from("q,a,re,im,abs,bound_ratio\n");
    for row in rows.iter().take(200) {
        text.push_str(&format!("{},{},{:.12},{:.12},{:.12},{:.6}\n", row.q, row.a, row.re, row.im, row.abs, row.bound_ratio));
    }
    if rows.len() > 200 {
        text.push_str(&format!("... {} rows in total\n", rows.len()));
    }
    text.push_str(&format!("max |G| q^(1/r-1) = {worst:.6}\n"));
    ctx.emit(json!({"r": r, "rows": rows, "max_bound_ratio": worst}), text)
}

fn arcs(args: ArcsArgs, ctx: &Ctx) -> Result<()> {
    let part = dissect(args.x, args.theta)?;
    let rows = major_arc_scan(args.r, args.x, args.theta, args.points)?;
    ctx.write_csv(&rows)?;
    let worst = rows.iter().map(|row| row.bound_ratio).fold(0.0, f64::max);
    let text = format!(
        "P = {:.3}, Q = {:.3}: {} major arcs, measure {:.6e} (minor {:.6}), disjoint: {}{}\n\
         max residual / (q^(1/2) (1+|beta|X)^(1/2)) = {worst:.4} over {} samples\n",
        part.p,
        part.q,
        part.major.len(),
        part.major_measure,
        part.minor_measure,
        part.disjoint,
        if part.overlap_warning { " (warning: Q < 2P^2)" } else { "" },
        rows.len()
    );
    ctx.emit(json!({"partition": part, "residuals": rows, "max_bound_ratio": worst}), text)
}

fn scan(args: ScanArgs, ctx: &Ctx) -> Result<()> {
    let rows = minor_arc_scan(args.r, args.x, args.theta, args.samples)?;
    ctx.write_csv(&rows)?;
    let worst = rows.iter().map(|row| row.ratio).fold(0.0, f64::max);
    let text = format!(
        "{} minor-arc samples; max |T_r| / envelope = {worst:.4} (envelope {:.4e})\n",
        rows.len(),
        rows.first().map(|r| r.envelope).unwrap_or(f64::NAN)
    );
    ctx.emit(json!({"r": args.r, "X": args.x, "theta": args.theta, "rows": rows, "max_ratio": worst}), text)
}

fn complex_pairs(values: &[taukit::Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|v| [v.re, v.im]).collect()
}

fn coeff(args: CoeffArgs, ctx: &Ctx) -> Result<()> {
    let grid = args.grid.grid()?;
    let sums = ResidueSums::build_with_order(args.k, args.ell, &[args.q], &grid, args.grid.order, &ctx.sieve)?;
    let est = match args.a {
        Some(a) => sums.extract(args.q, a)?,
        None => sums.extract_all(args.q)?,
    };
    #[derive(Serialize)]
    struct Row {
        j: usize,
        re: f64,
        im: f64,
    }
    let rows: Vec<Row> = est
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| Row { j, re: v.re, im: v.im })
        .collect();
    ctx.write_csv(&rows)?;
    let mut text = String::new();
    for row in &rows {
        text.push_str(&format!("A_{}({}) = {:.8} {:+.2e}i\n", row.j, args.q, row.re, row.im));
    }
    text.push_str(&format!(
        "residual {:.3e}, a-spread {:.3e}, condition {:.3e}\n",
        est.residual, est.a_spread, est.condition
    ));
    ctx.emit(
        json!({
            "k": est.k, "q": est.q, "A": complex_pairs(&est.values), "residual": est.residual,
            "a_spread": est.a_spread, "X_grid": est.x_grid, "condition": est.condition,
        }),
        text,
    )
}

fn truncation_json(t: &TruncationResult) -> Value {
    json!({
        "value": t.value, "truncation": t.truncation, "tail_estimate": t.tail_estimate,
        "error_estimate": t.error_estimate, "imag_leakage": t.imag_leakage, "terms": t.terms,
    })
}

#[derive(Serialize)]
struct TruncationRow {
    index: u32,
    value: f64,
    truncation: f64,
    tail_estimate: f64,
    error_estimate: f64,
}

impl TruncationRow {
    fn new(index: u32, t: &TruncationResult) -> Self {
        TruncationRow {
            index,
            value: t.value,
            truncation: t.truncation,
            tail_estimate: t.tail_estimate,
            error_estimate: t.error_estimate,
        }
    }
}

fn sseries(args: SeriesArgs, ctx: &Ctx) -> Result<()> {
    let grid = args.grid.grid()?;
    if let Some(j) = args.j {
        if j >= args.k {
            return Err(Error::InvalidArgument(format!("j must be < k, got j={j} k={}", args.k)));
        }
    }
    let moduli = series_moduli(args.r, args.s, args.ell, args.q_max)?;
    let sums = ResidueSums::build_with_order(args.k, args.ell, &moduli, &grid, args.grid.order, &ctx.sieve)?;
    let all = singular_series_all(args.k, args.r, args.s, args.ell, args.q_max, &sums)?;
    let picked: Vec<(u32, &TruncationResult)> = all
        .iter()
        .enumerate()
        .map(|(j, t)| (j as u32, t))
        .filter(|(j, _)| args.j.map_or(true, |want| want == *j))
        .collect();
    ctx.write_csv(&picked.iter().map(|(j, t)| TruncationRow::new(*j, t)).collect::<Vec<_>>())?;
    let mut text = String::new();
    for (j, t) in &picked {
        text.push_str(&format!(
            "S_{j} = {:.10} (q <= {}, tail ~ {:.2e}, imaginary leakage {:.1e})\n",
            t.value, args.q_max, t.tail_estimate, t.imag_leakage
        ));
    }
    let value = json!({
        "k": args.k, "r": args.r, "s": args.s, "l": args.ell,
        "series": picked.iter().map(|(j, t)| json!({"j": j, "result": truncation_json(t)})).collect::<Vec<_>>(),
    });
    ctx.emit(value, text)
}

fn sintegral(args: IntegralArgs, ctx: &Ctx) -> Result<()> {
    let fourier = match args.method {
        Method::Fourier | Method::Both => Some(singular_integral_fourier(args.r, args.s, args.ell, args.i, args.beta_max)?),
        Method::Cube => None,
    };
    let cube = match args.method {
        Method::Cube | Method::Both => Some(singular_integral_cube(args.r, args.s, args.ell, args.i, args.samples, ctx.seed)?),
        Method::Fourier => None,
    };
    let mut rows = Vec::new();
    let mut text = String::new();
    if let Some(f) = &fourier {
        rows.push(TruncationRow::new(args.i, f));
        text.push_str(&format!(
            "J_{} (Fourier, beta <= {}) = {:.10} ± {:.2e}\n",
            args.i, args.beta_max, f.value, f.error_estimate
        ));
    }
    if let Some(c) = &cube {
        rows.push(TruncationRow::new(args.i, c));
        text.push_str(&format!(
            "J_{} (cube, {} samples)    = {:.10} ± {:.2e}\n",
            args.i, args.samples, c.value, c.error_estimate
        ));
    }
    if let (Some(f), Some(c)) = (&fourier, &cube) {
        let sigma = f.error_estimate.hypot(c.error_estimate);
        let gap = (f.value - c.value).abs();
        text.push_str(&format!("gap {gap:.3e} = {:.2} combined standard errors\n", gap / sigma));
    }
    ctx.write_csv(&rows)?;
    ctx.emit(
        json!({
            "r": args.r, "s": args.s, "l": args.ell, "i": args.i,
            "fourier": fourier.as_ref().map(truncation_json),
            "cube": cube.as_ref().map(truncation_json),
        }),
        text,
    )
}

fn delta_json(d: &DeltaReport) -> Value {
    json!({
        "k": d.k, "r": d.r, "s": d.s, "l": d.ell,
        "regime": d.regime.to_string(), "ell_class": d.class.to_string(),
        "candidates": d.candidates.iter().map(|c| json!({
            "label": c.label, "value": c.value.to_string(), "decimal": to_f64(&c.value), "active": c.active,
        })).collect::<Vec<_>>(),
        "theta_i": d.theta_i.to_string(),
        "theta_used": d.theta_used.to_string(),
        "special_case": d.special_case,
        "delta_rational": d.delta.to_string(),
        "delta_decimal": d.delta_decimal(),
        "k_validity": d.k_validity,
    })
}

#[derive(Serialize)]
struct DeltaRow {
    k: u32,
    regime: String,
    ell_class: String,
    candidates: String,
    theta_used: String,
    delta_rational: String,
    delta_decimal: f64,
}

fn delta_cmd(args: DeltaArgs, ctx: &Ctx) -> Result<()> {
    let ks: Vec<u32> = match (&args.table, args.k) {
        (Some(range), _) => range.clone().collect(),
        (None, Some(k)) => vec![k],
        (None, None) => unreachable!("clap requires --k or --table"),
    };
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for k in ks {
        match delta(k, args.r, args.s, args.ell) {
            Ok(d) => reports.push(d),
            // In table mode an invalid k is listed, not fatal.
            Err(e) if args.table.is_some() => errors.push((k, e)),
            Err(e) => return Err(e),
        }
    }
    let rows: Vec<DeltaRow> = reports
        .iter()
        .map(|d| DeltaRow {
            k: d.k,
            regime: d.regime.to_string(),
            ell_class: d.class.to_string(),
            candidates: d
                .candidates
                .iter()
                .map(|c| format!("{}={}{}", c.label, c.value, if c.active { "*" } else { "" }))
                .collect::<Vec<_>>()
                .join(" "),
            theta_used: d.theta_used.to_string(),
            delta_rational: d.delta.to_string(),
            delta_decimal: d.delta_decimal(),
        })
        .collect();
    ctx.write_csv(&rows)?;
    let mut text = String::new();
    for row in &rows {
        text.push_str(&format!(
            "k={:<3} regime {:<3} ell {:<5} theta_used {:<10} delta {:<12} ({:.6})  [{}]\n",
            row.k, row.regime, row.ell_class, row.theta_used, row.delta_rational, row.delta_decimal, row.candidates
        ));
    }
    for (k, e) in &errors {
        text.push_str(&format!("k={k:<3} {e}\n"));
    }
    let value = if args.table.is_some() {
        json!({
            "rows": reports.iter().map(delta_json).collect::<Vec<_>>(),
            "errors": errors.iter().map(|(k, e)| json!({"k": k, "error": e.to_string()})).collect::<Vec<_>>(),
        })
    } else {
        delta_json(&reports[0])
    };
    ctx.emit(value, text)
}

fn moment(args: MomentArgs, ctx: &Ctx) -> Result<()> {
    if args.j < 1 || args.j > 6 {
        return Err(Error::InvalidArgument(format!("j must lie in [1, 6], got {}", args.j)));
    }
    let exact = hua_moment_exact(args.r, args.j, args.n, ctx.sieve.budget_entries)?;
    let degree = (1u64 << (args.j - 1))
        .checked_mul(args.n.checked_pow(args.r).ok_or(Error::Overflow("moment degree"))?)
        .ok_or(Error::Overflow("moment degree"))?;
    let m = args.m.unwrap_or(2 * degree + 1);
    let quad = hua_moment_quadrature(args.r, args.j, args.n, m)?;
    let gap = (quad - exact as f64).abs() / exact as f64;
    #[derive(Serialize)]
    struct Row {
        r: u32,
        j: u32,
        n: u64,
        m: u64,
        exact: String,
        quadrature: f64,
        relative_gap: f64,
    }
    let row = Row {
        r: args.r,
        j: args.j,
        n: args.n,
        m,
        exact: exact.to_string(),
        quadrature: quad,
        relative_gap: gap,
    };
    ctx.write_csv(&[&row])?;
    let text = format!(
        "moment 2^{} of T_{} with N={}: exact {exact}, quadrature ({m} points) {quad:.6}, relative gap {gap:.2e}\n",
        args.j, args.r, args.n
    );
    ctx.emit(serde_json::to_value(&row).map_err(|e| Error::Io(e.to_string()))?, text)
}

fn parseval(args: ParsevalArgs, ctx: &Ctx) -> Result<()> {
    let top = ((args.ell as f64 + 1.0) * args.x).floor() as u64;
    let m = args.m.unwrap_or(4 * top.max(1));
    let p = parseval_check(args.k, args.ell, args.x, m, &ctx.sieve)?;
    ctx.write_csv(&[&p])?;
    let text = format!(
        "integral of |F|^2 = {:.6}, sum of tau_{}^2 = {}, relative gap {:.2e} ({m} points)\n",
        p.lhs, args.k, p.rhs, p.relative_gap
    );
    ctx.emit(serde_json::to_value(&p).map_err(|e| Error::Io(e.to_string()))?, text)
}

fn verify_text(report: &VerifyReport) -> String {
    let mut text = String::new();
    text.push_str(&format!(
        "k={} r={} s={} l={}: exponent {:.4}\n",
        report.k, report.r, report.s, report.ell, report.model.exponent
    ));
    match &report.delta {
        Some(d) => text.push_str(&format!(
            "delta = {} ({:.6}), regime {}/{}, theta_used {}\n",
            d.delta,
            d.delta_decimal(),
            d.regime,
            d.class,
            d.theta_used
        )),
        None => text.push_str(&format!("delta unavailable: {}\n", report.delta_error.clone().unwrap_or_default())),
    }
    text.push_str(&format!("{:>12} {:>24} {:>24} {:>12}\n", "X", "S", "M", "S/M"));
    for row in &report.grid {
        text.push_str(&format!("{:>12.4e} {:>24} {:>24.6} {:>12.6}\n", row.x, row.s, row.m, row.ratio));
    }
    if let Some(e) = report.fitted_exponent {
        text.push_str(&format!("|S/M - 1| ~ X^{e:.4}\n"));
    }
    if let Some(g) = report.parseval_gap {
        text.push_str(&format!("Parseval gap {g:.2e}\n"));
    }
    text.push_str(&format!("runtime {:.1}s\n", report.runtime_secs));
    text
}

fn verify_cmd(args: VerifyArgs, ctx: &Ctx) -> Result<()> {
    let start = Instant::now();
    let mut cfg = VerifyConfig {
        coeff_grid: args.grid.grid()?,
        coeff_order: args.grid.order,
        q_max: args.q_max,
        beta_max: args.beta_max,
        sieve: ctx.sieve,
        ..VerifyConfig::default()
    };
    if let Some(grid) = args.x_grid {
        cfg.x_grid = grid;
    }
    let report = verify(args.k, args.r, args.s, args.ell, &cfg)?;
    ctx.write_csv_text(&report.to_csv())?;
    let mut value = report.to_json();
    value["wall_secs"] = json!(start.elapsed().as_secs_f64());
    ctx.emit(value, verify_text(&report))
}
