//! Traces of CM values and of cycle integrals, the twisted divisor sums built
//! from them, and a persistent table of computed traces.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, is_discriminant, is_fundamental, is_square, kronecker};
use crate::error::{invalid, Error, Result};
use crate::modfun::{cycle_integral, eval_jm, faber_cycle_integral};
use crate::qforms::{class_representatives, geodesic_data, heegner_point, stabilizer_order};

/// Version of the on-disk table format.
pub const CACHE_SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default table location.
pub const CACHE_ENV: &str = "MODLIFT_CACHE";

/// Default accuracy of cycle integrals stored in a table.
pub const DEFAULT_TRACE_TOL: f64 = 1e-9;

/// Which trace a table entry holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    /// `sum J_m(z_Q) / |Gamma_Q|` over definite classes.
    Cm,
    /// `sum int J_m(z) dz / Q(z, 1)` over indefinite classes.
    Cycle,
    /// The cycle trace of the constant function 1.
    One,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceKind::Cm => "cm",
            TraceKind::Cycle => "cycle",
            TraceKind::One => "one",
        })
    }
}

impl FromStr for TraceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cm" => Ok(TraceKind::Cm),
            "cycle" => Ok(TraceKind::Cycle),
            "one" => Ok(TraceKind::One),
            _ => invalid(format!("unknown trace kind '{s}' (expected cm, cycle or one)")),
        }
    }
}

/// The function whose trace is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraceFn {
    One,
    /// The Faber polynomial `J_m`, `m >= 1`.
    Faber(usize),
}

/// Key of a table entry. `m` is the Faber index (0 for the constant function).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraceKey {
    pub kind: TraceKind,
    pub m: usize,
    pub disc: i64,
}

impl TraceKey {
    pub fn cm(m: usize, disc: i64) -> Self {
        TraceKey { kind: TraceKind::Cm, m, disc }
    }

    pub fn cycle(f: TraceFn, disc: i64) -> Self {
        match f {
            TraceFn::One => TraceKey { kind: TraceKind::One, m: 0, disc },
            TraceFn::Faber(m) => TraceKey { kind: TraceKind::Cycle, m, disc },
        }
    }
}

/// A computed trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub value: f64,
    pub abs_err: f64,
    pub provenance: String,
}

fn check_cm_disc(d: i64) -> Result<()> {
    if d >= 0 || !is_discriminant(d) {
        return invalid(format!("CM traces need a negative discriminant, got {d}"));
    }
    Ok(())
}

fn check_cycle_disc(d: i64) -> Result<()> {
    if d <= 0 || !is_discriminant(d) {
        return invalid(format!("cycle traces need a positive discriminant, got {d}"));
    }
    if is_square(d) {
        return invalid(format!("cycle traces of square discriminants need regularization ({d})"));
    }
    Ok(())
}

/// `sum_{Q in Q_D / Gamma} J_m(z_Q) / |Gamma_Q|` for `D < 0`.
pub fn trace_cm_m(m: usize, d: i64) -> Result<TraceEntry> {
    check_cm_disc(d)?;
    let reps = class_representatives(d)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for q in &reps {
        let w = stabilizer_order(q)? as f64;
        let z = heegner_point(q)?;
        // values grow like e^{2 pi m y}, so the attainable accuracy is relative
        let tol = (1e-11 * (2.0 * std::f64::consts::PI * m as f64 * z.im).exp()).max(1e-9);
        acc += eval_jm(m, z, tol)? / w;
        err += tol;
    }
    Ok(TraceEntry {
        value: acc.re,
        abs_err: err + acc.im.abs(),
        provenance: format!("q-expansion at {} reduced CM points", reps.len()),
    })
}

/// `sum_{Q in Q_D / Gamma} J(z_Q) / |Gamma_Q|` for `D < 0`.
pub fn trace_cm(d: i64) -> Result<f64> {
    Ok(trace_cm_m(1, d)?.value)
}

/// Sum of cycle integrals of `f` over all classes of discriminant `D > 0`.
pub fn trace_cycle_entry(f: TraceFn, d: i64, tol: f64) -> Result<TraceEntry> {
    check_cycle_disc(d)?;
    let reps = class_representatives(d)?;
    let per = tol / reps.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut samples = 0;
    for q in &reps {
        let g = geodesic_data(q)?;
        let v = match f {
            TraceFn::One => cycle_integral(|_| Complex64::new(1.0, 0.0), &g, per)?,
            TraceFn::Faber(m) => faber_cycle_integral(m, &g, per)?,
        };
        acc += v.value;
        err += v.error;
        samples += v.samples;
    }
    let provenance = match f {
        TraceFn::One => format!("adaptive Gauss-Kronrod over {} classes", reps.len()),
        TraceFn::Faber(m) => format!("J_{m}: trapezoid rule over {} classes, {samples} samples", reps.len()),
    };
    // the total is real; what remains of the imaginary part measures the error
    Ok(TraceEntry { value: acc.re, abs_err: err + acc.im.abs(), provenance })
}

/// `tr_F(D)` for `D > 0` non-square.
pub fn trace_cycle(f: TraceFn, d: i64) -> Result<f64> {
    Ok(trace_cycle_entry(f, d, DEFAULT_TRACE_TOL)?.value)
}

fn compute(key: TraceKey, tol: f64) -> Result<TraceEntry> {
    match key.kind {
        TraceKind::Cm => trace_cm_m(key.m, key.disc),
        TraceKind::One => trace_cycle_entry(TraceFn::One, key.disc, tol),
        TraceKind::Cycle => {
            if key.m == 0 {
                trace_cycle_entry(TraceFn::One, key.disc, tol)
            } else {
                trace_cycle_entry(TraceFn::Faber(key.m), key.disc, tol)
            }
        }
    }
}

type InFlight = Mutex<HashMap<TraceKey, Arc<OnceLock<std::result::Result<TraceEntry, String>>>>>;

/// Computed traces, shared between threads and optionally persisted.
///
/// Reads are concurrent; each missing entry is computed once even when
/// requested from several threads at the same time.
pub struct TraceTable {
    entries: RwLock<BTreeMap<TraceKey, TraceEntry>>,
    in_flight: InFlight,
    store_path: Option<PathBuf>,
    tol: f64,
}

impl Default for TraceTable {
    fn default() -> Self {
        TraceTable::new()
    }
}

impl fmt::Debug for TraceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TraceTable")
            .field("entries", &self.len())
            .field("store_path", &self.store_path)
            .field("tol", &self.tol)
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct StoredEntry {
    kind: TraceKind,
    m: usize,
    disc: i64,
    value: String,
    abs_err: String,
    provenance: String,
}

#[derive(Serialize, Deserialize)]
struct StoredTable {
    schema: u32,
    entries: Vec<StoredEntry>,
}

fn fmt18(v: f64) -> String {
    format!("{v:.17e}")
}

impl TraceTable {
    /// An empty in-memory table.
    pub fn new() -> Self {
        TraceTable { entries: RwLock::new(BTreeMap::new()), in_flight: Mutex::new(HashMap::new()), store_path: None, tol: DEFAULT_TRACE_TOL }
    }

    /// A table backed by `path`; existing entries are loaded.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut t = if path.exists() { TraceTable::load(&path)? } else { TraceTable::new() };
        t.store_path = Some(path);
        Ok(t)
    }

    /// The table named by `MODLIFT_CACHE`, or an in-memory one.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CACHE_ENV) {
            Some(p) if !p.is_empty() => TraceTable::open(PathBuf::from(p)),
            _ => Ok(TraceTable::new()),
        }
    }

    /// Accuracy requested for newly computed cycle traces.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn store_path(&self) -> Option<&Path> {
        self.store_path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &TraceKey) -> Option<TraceEntry> {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).get(key).cloned()
    }

    /// Inserts an entry, replacing any previous one.
    pub fn insert(&self, key: TraceKey, entry: TraceEntry) -> Result<()> {
        validate(&key, &entry)?;
        self.entries.write().unwrap_or_else(|e| e.into_inner()).insert(key, entry);
        Ok(())
    }

    /// All entries in key order.
    pub fn entries(&self) -> Vec<(TraceKey, TraceEntry)> {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).iter().map(|(k, v)| (*k, v.clone())).collect()
    }

    /// The entry for `key`, computed on first use.
    pub fn get_or_compute(&self, key: TraceKey) -> Result<TraceEntry> {
        if let Some(e) = self.get(&key) {
            return Ok(e);
        }
        let cell = {
            let mut fl = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
            fl.entry(key).or_default().clone()
        };
        let res = cell.get_or_init(|| {
            if let Some(e) = self.get(&key) {
                return Ok(e);
            }
            let r = compute(key, self.tol).map_err(|e| e.to_string());
            if let Ok(e) = &r {
                self.entries.write().unwrap_or_else(|e| e.into_inner()).insert(key, e.clone());
            }
            r
        });
        let out = res.clone();
        self.in_flight.lock().unwrap_or_else(|e| e.into_inner()).remove(&key);
        out.map_err(Error::Convergence)
    }

    /// Computes the missing entries among `keys` in parallel.
    pub fn prefetch(&self, keys: &[TraceKey]) -> Result<()> {
        let mut missing: Vec<TraceKey> = keys.iter().filter(|k| self.get(k).is_none()).copied().collect();
        missing.sort();
        missing.dedup();
        // the expensive entries first, for better load balance
        missing.sort_by_key(|k| std::cmp::Reverse(k.m as i64 * k.disc.abs()));
        missing.par_iter().map(|k| self.get_or_compute(*k).map(|_| ())).collect::<Result<Vec<()>>>()?;
        Ok(())
    }

    pub fn value(&self, key: TraceKey) -> Result<f64> {
        Ok(self.get_or_compute(key)?.value)
    }

    /// `tr_1(D)`.
    pub fn tr_one(&self, d: i64) -> Result<TraceEntry> {
        self.get_or_compute(TraceKey::cycle(TraceFn::One, d))
    }

    /// `tr_J(D)` for `D > 0`.
    pub fn tr_j(&self, d: i64) -> Result<TraceEntry> {
        self.get_or_compute(TraceKey::cycle(TraceFn::Faber(1), d))
    }

    /// Writes the table to its store path, if any.
    pub fn persist(&self) -> Result<()> {
        match &self.store_path {
            Some(p) => self.save(p),
            None => Ok(()),
        }
    }

    /// Writes the table as JSON through a temporary file and a rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = self.to_json()?;
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(json.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        TraceTable::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        let entries = self
            .entries()
            .into_iter()
            .map(|(k, e)| StoredEntry {
                kind: k.kind,
                m: k.m,
                disc: k.disc,
                value: fmt18(e.value),
                abs_err: fmt18(e.abs_err),
                provenance: e.provenance,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&StoredTable { schema: CACHE_SCHEMA_VERSION, entries })? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stored: StoredTable = serde_json::from_str(text)?;
        if stored.schema != CACHE_SCHEMA_VERSION {
            return Err(Error::Cache(format!(
                "table schema {} is not supported (expected {CACHE_SCHEMA_VERSION})",
                stored.schema
            )));
        }
        let t = TraceTable::new();
        for s in stored.entries {
            let parse = |v: &str| v.parse::<f64>().map_err(|e| Error::Cache(format!("bad number '{v}': {e}")));
            let key = TraceKey { kind: s.kind, m: s.m, disc: s.disc };
            let entry = TraceEntry { value: parse(&s.value)?, abs_err: parse(&s.abs_err)?, provenance: s.provenance };
            validate(&key, &entry).map_err(|e| Error::Cache(e.to_string()))?;
            t.entries.write().unwrap_or_else(|e| e.into_inner()).insert(key, entry);
        }
        Ok(t)
    }

    /// CSV with header `kind,m,disc,value,abs_err,provenance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,m,disc,value,abs_err,provenance\n");
        for (k, e) in self.entries() {
            let prov = e.provenance.replace('"', "\"\"");
            out.push_str(&format!("{},{},{},{},{},\"{}\"\n", k.kind, k.m, k.disc, fmt18(e.value), fmt18(e.abs_err), prov));
        }
        out
    }
}

fn validate(key: &TraceKey, entry: &TraceEntry) -> Result<()> {
    match key.kind {
        TraceKind::Cm => check_cm_disc(key.disc)?,
        TraceKind::Cycle | TraceKind::One => check_cycle_disc(key.disc)?,
    }
    if key.kind == TraceKind::One && key.m != 0 {
        return invalid("entries of kind 'one' have m = 0");
    }
    if !entry.value.is_finite() || !(entry.abs_err >= 0.0) {
        return invalid(format!("entry for {key:?} is not a finite value with an error"));
    }
    Ok(())
}

/// `sum_{m | n} (Delta / (n/m)) m tr_J(Delta m^2)` with its accumulated error.
pub fn twisted_coefficient(delta: i64, n: u64, table: &TraceTable) -> Result<(f64, f64)> {
    if delta <= 1 || !is_fundamental(delta) {
        return invalid(format!("{delta} is not a fundamental discriminant > 1"));
    }
    if n == 0 {
        return invalid("twisted coefficients start at n = 1");
    }
    let (mut v, mut e) = (0.0, 0.0);
    for m in divisors(n) {
        let chi = kronecker(delta, (n / m) as i64);
        if chi == 0 {
            continue;
        }
        let t = table.tr_j(delta * (m * m) as i64)?;
        v += chi as f64 * m as f64 * t.value;
        e += m as f64 * t.abs_err;
    }
    Ok((v, e))
}

/// Keys needed by [`twisted_coefficient`] for all `n <= n_max`.
pub fn twisted_keys(delta: i64, n_max: u64) -> Vec<TraceKey> {
    (1..=n_max).map(|m| TraceKey::cycle(TraceFn::Faber(1), delta * (m * m) as i64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cm_examples() {
        assert!((trace_cm(-3).unwrap() + 248.0).abs() < 1e-6);
        assert!((trace_cm(-4).unwrap() - 492.0).abs() < 1e-6);
        assert!(trace_cm(5).is_err());
    }

    #[test]
    fn cycle_rejects_bad_discriminants() {
        assert!(trace_cycle(TraceFn::One, 9).is_err());
        assert!(trace_cycle(TraceFn::One, -4).is_err());
        assert!(trace_cycle(TraceFn::One, 7).is_err());
    }

    #[test]
    fn constant_trace_closed_form() {
        let v = trace_cycle(TraceFn::One, 5).unwrap();
        assert!((v - 2.0 * ((3.0 + 5f64.sqrt()) / 2.0).ln() / 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn kind_strings() {
        for k in [TraceKind::Cm, TraceKind::Cycle, TraceKind::One] {
            assert_eq!(k.to_string().parse::<TraceKind>().unwrap(), k);
        }
        assert!("x".parse::<TraceKind>().is_err());
    }

    #[test]
    fn single_flight_computes_once() {
        let t = TraceTable::new();
        let key = TraceKey::cycle(TraceFn::Faber(1), 5);
        let vals: Vec<f64> = (0..8).into_par_iter().map(|_| t.value(key).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0].to_bits() == w[1].to_bits()));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn json_round_trip_is_bit_identical() {
        let t = TraceTable::new();
        t.insert(TraceKey::cycle(TraceFn::Faber(1), 5), TraceEntry { value: -32.431474209040483, abs_err: 1.1e-10, provenance: "x".into() }).unwrap();
        t.insert(TraceKey::cm(1, -3), TraceEntry { value: -248.0 + 1e-13, abs_err: 3e-9, provenance: "y".into() }).unwrap();
        t.insert(TraceKey::cycle(TraceFn::One, 5), TraceEntry { value: 0.1 + 0.2, abs_err: 0.0, provenance: "z".into() }).unwrap();
        let back = TraceTable::from_json(&t.to_json().unwrap()).unwrap();
        for ((k1, e1), (k2, e2)) in t.entries().into_iter().zip(back.entries()) {
            assert_eq!(k1, k2);
            assert_eq!(e1.value.to_bits(), e2.value.to_bits());
            assert_eq!(e1.abs_err.to_bits(), e2.abs_err.to_bits());
        }
        assert!(t.insert(TraceKey::cm(1, 5), TraceEntry { value: 0.0, abs_err: 0.0, provenance: String::new() }).is_err());
        assert!(TraceTable::from_json("{\"schema\": 99, \"entries\": []}").is_err());
    }
}
