//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::is_fundamental;
use crate::error::{invalid, Error, Result};
use crate::lift::{
    estimated_terms, eval_f, eval_phi_h, eval_phi_prime_h, eval_product, LiftValue, SeriesConfig,
};
use crate::modfun::faber_coefficients;
use crate::qforms::{class_representatives, forms_containing, geodesic_data, heegner_point, stabilizer_order};
use crate::traces::{twisted_keys, TraceFn, TraceKey, TraceKind, TraceTable, CACHE_ENV, CACHE_SCHEMA_VERSION, DEFAULT_TRACE_TOL};
use crate::verify::{run_suite, Suite};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (cache schema 1)");

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Parser, Debug)]
#[command(name = "modlift", version = VERSION, about = "Twisted traces, theta lifts and Borcherds products")]
pub struct Cli {
    /// Absolute accuracy target for series and cycle integrals.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Maximal number of Fourier terms.
    #[arg(long, global = true, default_value_t = 64)]
    pub trunc: usize,
    /// Trace table file (defaults to $MODLIFT_CACHE).
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    #[arg(long)]
    pub delta: i64,
    /// Point as "a+bi".
    #[arg(long, allow_hyphen_values = true, required_unless_present = "grid")]
    pub z: Option<String>,
    /// xmin xmax ymin ymax nx ny
    #[arg(long, num_args = 6, allow_hyphen_values = true, value_names = ["XMIN", "XMAX", "YMIN", "YMAX", "NX", "NY"])]
    pub grid: Option<Vec<String>>,
    /// Output file for --grid.
    #[arg(long, requires = "grid")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Class representatives of a discriminant, or the forms whose geodesic encloses a point.
    Forms {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// A CM trace or cycle trace.
    Trace {
        #[arg(long)]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// Exact q-expansion of the Faber polynomial J_m.
    Faber {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        order: usize,
    },
    /// The lift Phi_Delta(h, z).
    Lift(PointArgs),
    /// Its derivative Phi'_Delta(h, z).
    Deriv(PointArgs),
    /// The modular integral F_Delta(z).
    Integral(PointArgs),
    /// The Borcherds product Psi_Delta(z).
    Product(PointArgs),
    /// Numerical identity checks; exits with 2 if any residual exceeds its tolerance.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        delta: Option<i64>,
    },
}

/// Validated settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub delta: Option<i64>,
    pub tol: f64,
    pub trunc: usize,
    pub cache_path: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let delta = match &cli.command {
            Command::Lift(p) | Command::Deriv(p) | Command::Integral(p) | Command::Product(p) => Some(p.delta),
            Command::Verify { delta, .. } => *delta,
            _ => None,
        };
        let cache_path = cli.cache.clone().or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
        let cfg = RunConfig { delta, tol: cli.tol, trunc: cli.trunc, cache_path, format: cli.format, threads: cli.threads };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-12..=1e-2).contains(&self.tol) {
            return invalid(format!("--tol {} is outside [1e-12, 1e-2]", self.tol));
        }
        if !(4..=512).contains(&self.trunc) {
            return invalid(format!("--trunc {} is outside [4, 512]", self.trunc));
        }
        if let Some(d) = self.delta {
            if d <= 1 || !is_fundamental(d) {
                return invalid(format!("--delta {d} must be a fundamental discriminant > 1 (e.g. 5, 8, 12, 13)"));
            }
        }
        Ok(())
    }

    pub fn series(&self) -> SeriesConfig {
        SeriesConfig { trunc: self.trunc, tol: self.tol }
    }

    pub fn table(&self) -> Result<TraceTable> {
        let t = match &self.cache_path {
            Some(p) => TraceTable::open(p)?,
            None => TraceTable::new(),
        };
        Ok(t.with_tol(self.tol.min(DEFAULT_TRACE_TOL)))
    }
}

/// Parses `a+bi`, `a-bi`, `bi`, `i` or `a`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidInput(format!("cannot parse '{s}' as a complex number a+bi"));
    let num = |p: &str| f64::from_str(p).map_err(|_| bad());
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(num(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => num(x)?,
    };
    if !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

pub fn format_complex(z: Complex64) -> String {
    format!("{:.15}{:+.15}i", z.re, z.im)
}

/// A single output value.
#[derive(Clone, Debug)]
pub enum Field {
    Int(i64),
    Real(f64),
    Complex(Complex64),
    Text(String),
    /// An exact integer in decimal.
    Big(String),
}

type Row = Vec<(String, Field)>;

fn json_real(x: f64) -> String {
    if x.is_finite() { format!("{x:?}") } else { "null".into() }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn field_json(f: &Field) -> String {
    match f {
        Field::Int(n) => n.to_string(),
        Field::Real(x) => json_real(*x),
        Field::Complex(z) => format!("{{\"re\":{},\"im\":{}}}", json_real(z.re), json_real(z.im)),
        Field::Text(s) => json_str(s),
        Field::Big(s) => s.clone(),
    }
}

fn row_json(row: &Row) -> String {
    let body: Vec<String> = row.iter().map(|(k, v)| format!("{}:{}", json_str(k), field_json(v))).collect();
    format!("{{{}}}", body.join(","))
}

fn csv_cells(f: &Field) -> Vec<String> {
    match f {
        Field::Int(n) => vec![n.to_string()],
        Field::Real(x) => vec![format!("{x:?}")],
        Field::Complex(z) => vec![format!("{:?}", z.re), format!("{:?}", z.im)],
        Field::Text(s) if s.contains([',', '"', '\n']) => vec![format!("\"{}\"", s.replace('"', "\"\""))],
        Field::Text(s) | Field::Big(s) => vec![s.clone()],
    }
}

/// Renders rows in the requested format.
pub fn render(rows: &[Row], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Json => {
            if rows.len() == 1 {
                out.push_str(&row_json(&rows[0]));
            } else {
                let items: Vec<String> = rows.iter().map(row_json).collect();
                out = format!("[{}]", items.join(","));
            }
            out.push('\n');
        }
        Format::Csv => {
            if let Some(first) = rows.first() {
                let header: Vec<String> = first
                    .iter()
                    .flat_map(|(k, v)| match v {
                        Field::Complex(_) => vec![format!("{k}_re"), format!("{k}_im")],
                        _ => vec![k.clone()],
                    })
                    .collect();
                let _ = writeln!(out, "{}", header.join(","));
            }
            for row in rows {
                let cells: Vec<String> = row.iter().flat_map(|(_, v)| csv_cells(v)).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        Format::Text => {
            for (i, row) in rows.iter().enumerate() {
                if i > 0 && row.len() > 1 {
                    out.push('\n');
                }
                for (k, v) in row {
                    let s = match v {
                        Field::Real(x) => format!("{x:.15}"),
                        Field::Complex(z) => format_complex(*z),
                        Field::Int(n) => n.to_string(),
                        Field::Text(s) | Field::Big(s) => s.clone(),
                    };
                    let _ = writeln!(out, "{k}: {s}");
                }
            }
        }
    }
    out
}

fn row(items: Vec<(&str, Field)>) -> Row {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn forms_rows(disc: i64, z: Option<Complex64>) -> Result<Vec<Row>> {
    if let Some(z) = z {
        return Ok(forms_containing(disc, z, 1)?
            .into_iter()
            .map(|q| row(vec![("a", Field::Int(q.a)), ("b", Field::Int(q.b)), ("c", Field::Int(q.c))]))
            .collect());
    }
    let mut rows = Vec::new();
    for q in class_representatives(disc)? {
        let mut r = row(vec![
            ("a", Field::Int(q.a)),
            ("b", Field::Int(q.b)),
            ("c", Field::Int(q.c)),
            ("content", Field::Int(q.content())),
        ]);
        if disc < 0 {
            r.push(("heegner_point".into(), Field::Complex(heegner_point(&q)?)));
            r.push(("stabilizer".into(), Field::Int(stabilizer_order(&q)? as i64)));
        } else {
            r.push(("length".into(), Field::Real(geodesic_data(&q)?.length)));
        }
        rows.push(r);
    }
    Ok(rows)
}

fn trace_row(kind: &str, disc: i64, m: usize, table: &TraceTable) -> Result<Vec<Row>> {
    let kind: TraceKind = kind.parse()?;
    let key = match kind {
        TraceKind::Cm => TraceKey::cm(m, disc),
        TraceKind::Cycle => TraceKey::cycle(TraceFn::Faber(m), disc),
        TraceKind::One => TraceKey::cycle(TraceFn::One, disc),
    };
    let e = table.get_or_compute(key)?;
    Ok(vec![row(vec![
        ("kind", Field::Text(key.kind.to_string())),
        ("m", Field::Int(key.m as i64)),
        ("disc", Field::Int(disc)),
        ("value", Field::Real(e.value)),
        ("abs_err", Field::Real(e.abs_err)),
        ("provenance", Field::Text(e.provenance)),
    ])])
}

/// Faber output keeps exact integers and omits zero coefficients.
fn faber_output(m: usize, order: usize, format: Format) -> Result<String> {
    if m == 0 {
        return invalid("--m must be at least 1");
    }
    let s = faber_coefficients(m, order);
    let nonzero: Vec<(i64, String)> = (s.leading..=order as i64)
        .map(|n| (n, s.coeff(n)))
        .filter(|(_, c)| c != &num_bigint::BigInt::from(0))
        .map(|(n, c)| (n, c.to_string()))
        .collect();
    Ok(match format {
        Format::Json => {
            let items: Vec<String> = nonzero.iter().map(|(n, c)| format!("\"{n}\":{c}")).collect();
            format!("{{\"m\":{m},\"order\":{order},\"coefficients\":{{{}}}}}\n", items.join(","))
        }
        Format::Csv => {
            let mut out = String::from("n,coefficient\n");
            for (n, c) in &nonzero {
                let _ = writeln!(out, "{n},{c}");
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for (n, c) in &nonzero {
                let _ = writeln!(out, "q^{n}: {c}");
            }
            out
        }
    })
}

#[derive(Clone, Copy)]
enum PointKind {
    Lift,
    Deriv,
    Integral,
    Product,
}

fn lift_row(v: &LiftValue) -> Vec<(&'static str, Field)> {
    let forms: Vec<String> = v.contributing_forms.iter().map(|q| q.to_string()).collect();
    vec![
        ("total", Field::Complex(v.total)),
        ("smooth_part", Field::Complex(v.smooth_part)),
        ("singular_part", Field::Complex(v.singular_part)),
        ("contributing_forms", Field::Text(forms.join(" "))),
        ("terms", Field::Int(v.terms as i64)),
        ("tail", Field::Real(v.tail)),
    ]
}

/// Value at one point, plus whether a geodesic encloses it.
fn point_value(kind: PointKind, delta: i64, z: Complex64, table: &TraceTable, cfg: &SeriesConfig) -> Result<(Complex64, bool, Row)> {
    let mut items = vec![("delta", Field::Int(delta)), ("z", Field::Complex(z))];
    let (value, flag) = match kind {
        PointKind::Lift | PointKind::Deriv => {
            let v = match kind {
                PointKind::Lift => eval_phi_h(delta, table, z, cfg)?,
                _ => eval_phi_prime_h(delta, table, z, cfg)?,
            };
            items.extend(lift_row(&v));
            (v.total, !v.contributing_forms.is_empty())
        }
        PointKind::Integral => {
            let v = eval_f(delta, table, z, cfg)?;
            items.extend([("value", Field::Complex(v.value)), ("abs_err", Field::Real(v.abs_err)), ("terms", Field::Int(v.terms as i64))]);
            (v.value, false)
        }
        PointKind::Product => {
            let v = eval_product(delta, table, z, cfg)?;
            items.extend([
                ("value", Field::Complex(v.value)),
                ("log", Field::Complex(v.log)),
                ("abs_err", Field::Real(v.abs_err)),
                ("terms", Field::Int(v.terms as i64)),
            ]);
            (v.value, false)
        }
    };
    Ok((value, flag, row(items)))
}

/// Row-major grid `(x, y)` with `x` varying fastest.
pub fn grid_points(spec: &[String]) -> Result<Vec<Complex64>> {
    if spec.len() != 6 {
        return invalid("--grid takes xmin xmax ymin ymax nx ny");
    }
    let f = |s: &str| f64::from_str(s).map_err(|_| Error::InvalidInput(format!("bad grid bound '{s}'")));
    let n = |s: &str| usize::from_str(s).map_err(|_| Error::InvalidInput(format!("bad grid count '{s}'")));
    let (x0, x1, y0, y1) = (f(&spec[0])?, f(&spec[1])?, f(&spec[2])?, f(&spec[3])?);
    let (nx, ny) = (n(&spec[4])?, n(&spec[5])?);
    if nx == 0 || ny == 0 || nx * ny > 1_000_000 {
        return invalid("grid counts must be positive with at most 10^6 points");
    }
    if y0.min(y1) <= 0.0 {
        return invalid("grid must lie in the upper half plane (ymin > 0)");
    }
    let step = |a: f64, b: f64, k: usize, n: usize| if n == 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 };
    Ok((0..ny).flat_map(|j| (0..nx).map(move |i| Complex64::new(step(x0, x1, i, nx), step(y0, y1, j, ny)))).collect())
}

fn run_point(kind: PointKind, p: &PointArgs, rc: &RunConfig, table: &TraceTable) -> Result<String> {
    let cfg = rc.series();
    let Some(spec) = &p.grid else {
        let z = parse_complex(p.z.as_deref().unwrap_or_default())?;
        let (_, _, r) = point_value(kind, p.delta, z, table, &cfg)?;
        return Ok(render(&[r], rc.format));
    };
    let pts = grid_points(spec)?;
    let ymin = pts.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    let reach = match kind {
        PointKind::Integral | PointKind::Product => ymin.min(pts.iter().map(|z| z.im / z.norm_sqr()).fold(f64::INFINITY, f64::min)),
        _ => ymin,
    };
    table.prefetch(&twisted_keys(p.delta, estimated_terms(reach, cfg.tol).min(cfg.trunc) as u64))?;
    let vals: Vec<Result<(Complex64, bool, Row)>> =
        pts.par_iter().map(|&z| point_value(kind, p.delta, z, table, &cfg)).collect();
    let mut out = String::from("x,y,re,im,singular_flag\n");
    for (z, v) in pts.iter().zip(vals) {
        let (w, flag, _) = v?;
        let _ = writeln!(out, "{:?},{:?},{:?},{:?},{}", z.re, z.im, w.re, w.im, flag as u8);
    }
    match &p.out {
        Some(path) => {
            fs::write(path, &out)?;
            Ok(String::new())
        }
        None => Ok(out),
    }
}

/// Outcome of a run: text to print and the exit code.
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let rc = RunConfig::from_cli(cli)?;
    if rc.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(rc.threads).build_global();
    }
    let table = rc.table()?;
    let mut code = 0;
    let stdout = match &cli.command {
        Command::Forms { disc, z } => {
            let z = z.as_deref().map(parse_complex).transpose()?;
            render(&forms_rows(*disc, z)?, rc.format)
        }
        Command::Trace { kind, disc, m } => render(&trace_row(kind, *disc, *m, &table)?, rc.format),
        Command::Faber { m, order } => faber_output(*m, *order, rc.format)?,
        Command::Lift(p) => run_point(PointKind::Lift, p, &rc, &table)?,
        Command::Deriv(p) => run_point(PointKind::Deriv, p, &rc, &table)?,
        Command::Integral(p) => run_point(PointKind::Integral, p, &rc, &table)?,
        Command::Product(p) => run_point(PointKind::Product, p, &rc, &table)?,
        Command::Verify { suite, delta } => {
            let suite: Suite = suite.parse()?;
            let checks = run_suite(suite, *delta, &table, &rc.series())?;
            if checks.iter().any(|c| !c.pass) {
                code = 2;
            }
            let mut s = serde_json::to_string_pretty(&checks)?;
            s.push('\n');
            s
        }
    };
    if table.store_path().is_some() {
        table.persist()?;
    }
    Ok(Outcome { stdout, code })
}

/// Parses `args` (including the program name), runs, prints, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    debug_assert!(VERSION.ends_with(&format!("(cache schema {CACHE_SCHEMA_VERSION})")));
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            print!("{}", o.stdout);
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Truncation { required, .. } = e {
                eprintln!("hint: rerun with --trunc {} or a larger --tol", required.clamp(4, 512));
            }
            1
        }
    }
}
