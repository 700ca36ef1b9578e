//! C interface to `modlift`.
//!
//! Every function returns a [`ModliftStatus`]; on failure the message is kept
//! per thread and can be read with [`modlift_last_error`]. Trace tables are
//! passed around as opaque `ModliftTable` pointers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use modlift::lift::{self, SeriesConfig};
use modlift::qforms::QuadForm;
use modlift::traces::{trace_cm, TraceFn, TraceKey, TraceTable};
use modlift::verify::{run_suite, Suite};
use modlift::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModliftStatus {
    Ok = 0,
    InvalidInput = 1,
    Truncation = 2,
    Precision = 3,
    Convergence = 4,
    Cache = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModliftComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ModliftComplex {
    fn from(z: Complex64) -> Self {
        ModliftComplex { re: z.re, im: z.im }
    }
}

impl From<ModliftComplex> for Complex64 {
    fn from(z: ModliftComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Lift value split as in the Fourier expansion.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ModliftLift {
    pub smooth_part: ModliftComplex,
    pub singular_part: ModliftComplex,
    pub total: ModliftComplex,
    /// Number of forms whose bounded component contains the point.
    pub n_forms: usize,
    /// Number of Fourier terms used.
    pub terms: usize,
}

/// Opaque trace table.
pub struct ModliftTable(TraceTable);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ModliftStatus {
    match e {
        Error::InvalidInput(_) => ModliftStatus::InvalidInput,
        Error::Truncation { .. } => ModliftStatus::Truncation,
        Error::Precision { .. } => ModliftStatus::Precision,
        Error::Convergence(_) => ModliftStatus::Convergence,
        Error::Cache(_) | Error::Json(_) => ModliftStatus::Cache,
        Error::Io(_) => ModliftStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), ModliftStatus>) -> ModliftStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            ModliftStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            ModliftStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, ModliftStatus>;
}

impl<T> OrStatus<T> for modlift::Result<T> {
    fn or_status(self) -> Result<T, ModliftStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

fn null() -> ModliftStatus {
    set_error("null pointer argument".into());
    ModliftStatus::NullPointer
}

unsafe fn table_ref<'a>(t: *const ModliftTable) -> Result<&'a TraceTable, ModliftStatus> {
    // SAFETY: caller passes a pointer from modlift_table_new/open or null.
    unsafe { t.as_ref() }.map(|t| &t.0).ok_or_else(null)
}

unsafe fn out_mut<'a, T>(p: *mut T) -> Result<&'a mut T, ModliftStatus> {
    // SAFETY: caller passes a valid writable pointer or null.
    unsafe { p.as_mut() }.ok_or_else(null)
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, ModliftStatus> {
    if s.is_null() {
        return Err(null());
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(s) }.to_str().map_err(|_| {
        set_error("string argument is not UTF-8".into());
        ModliftStatus::InvalidInput
    })
}

fn series(trunc: usize, tol: f64) -> Result<SeriesConfig, ModliftStatus> {
    SeriesConfig::new(trunc, tol).or_status()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn modlift_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn modlift_version() -> *const c_char {
    static V: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr() as *const c_char
}

/// Schema version of trace table files.
#[no_mangle]
pub extern "C" fn modlift_cache_schema_version() -> u32 {
    modlift::traces::CACHE_SCHEMA_VERSION
}

/// New empty in-memory table. Free with [`modlift_table_free`].
#[no_mangle]
pub extern "C" fn modlift_table_new() -> *mut ModliftTable {
    Box::into_raw(Box::new(ModliftTable(TraceTable::new())))
}

/// Opens (or starts) the table stored at `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn modlift_table_open(path: *const c_char, out: *mut *mut ModliftTable) -> ModliftStatus {
    guard(|| {
        let path = unsafe { str_arg(path) }?;
        let out = unsafe { out_mut(out) }?;
        let t = TraceTable::open(Path::new(path)).or_status()?;
        *out = Box::into_raw(Box::new(ModliftTable(t)));
        Ok(())
    })
}

/// # Safety
/// `t` must come from [`modlift_table_new`] or [`modlift_table_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn modlift_table_free(t: *mut ModliftTable) {
    if !t.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(t) });
    }
}

/// Number of stored traces.
///
/// # Safety
/// `t` must be a live table.
#[no_mangle]
pub unsafe extern "C" fn modlift_table_len(t: *const ModliftTable, out: *mut usize) -> ModliftStatus {
    guard(|| {
        let n = unsafe { table_ref(t) }?.len();
        *unsafe { out_mut(out) }? = n;
        Ok(())
    })
}

/// Writes the table as JSON to `path`.
///
/// # Safety
/// `t` must be a live table and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn modlift_table_save(t: *const ModliftTable, path: *const c_char) -> ModliftStatus {
    guard(|| {
        let t = unsafe { table_ref(t) }?;
        let path = unsafe { str_arg(path) }?;
        t.save(Path::new(path)).or_status()
    })
}

/// CM trace of `J` over discriminant `disc < 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_trace_cm(disc: i64, out: *mut f64) -> ModliftStatus {
    guard(|| {
        let v = trace_cm(disc).or_status()?;
        *unsafe { out_mut(out) }? = v;
        Ok(())
    })
}

/// Cycle trace of `J_m` over discriminant `disc > 0`; `m = 0` is the constant function 1.
///
/// # Safety
/// `t` must be a live table and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_trace_cycle(t: *const ModliftTable, m: usize, disc: i64, out: *mut f64) -> ModliftStatus {
    guard(|| {
        let t = unsafe { table_ref(t) }?;
        let f = if m == 0 { TraceFn::One } else { TraceFn::Faber(m) };
        let v = t.value(TraceKey::cycle(f, disc)).or_status()?;
        *unsafe { out_mut(out) }? = v;
        Ok(())
    })
}

fn lift_out(v: lift::LiftValue) -> ModliftLift {
    ModliftLift {
        smooth_part: v.smooth_part.into(),
        singular_part: v.singular_part.into(),
        total: v.total.into(),
        n_forms: v.contributing_forms.len(),
        terms: v.terms,
    }
}

/// The lift of `h` twisted by `delta` at `z`.
///
/// # Safety
/// `t` must be a live table and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_eval_phi(
    t: *const ModliftTable,
    delta: i64,
    z: ModliftComplex,
    trunc: usize,
    tol: f64,
    out: *mut ModliftLift,
) -> ModliftStatus {
    guard(|| {
        let t = unsafe { table_ref(t) }?;
        let v = lift::eval_phi_h(delta, t, z.into(), &series(trunc, tol)?).or_status()?;
        *unsafe { out_mut(out) }? = lift_out(v);
        Ok(())
    })
}

/// The derivative of the lift at `z`.
///
/// # Safety
/// `t` must be a live table and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_eval_phi_prime(
    t: *const ModliftTable,
    delta: i64,
    z: ModliftComplex,
    trunc: usize,
    tol: f64,
    out: *mut ModliftLift,
) -> ModliftStatus {
    guard(|| {
        let t = unsafe { table_ref(t) }?;
        let v = lift::eval_phi_prime_h(delta, t, z.into(), &series(trunc, tol)?).or_status()?;
        *unsafe { out_mut(out) }? = lift_out(v);
        Ok(())
    })
}

/// The modular integral `F_Delta(z)`.
///
/// # Safety
/// `t` must be a live table and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_eval_f(
    t: *const ModliftTable,
    delta: i64,
    z: ModliftComplex,
    trunc: usize,
    tol: f64,
    out: *mut ModliftComplex,
) -> ModliftStatus {
    guard(|| {
        let t = unsafe { table_ref(t) }?;
        let v = lift::eval_f(delta, t, z.into(), &series(trunc, tol)?).or_status()?;
        *unsafe { out_mut(out) }? = v.value.into();
        Ok(())
    })
}

/// The Borcherds product: its logarithm (principal branches termwise) and value.
///
/// # Safety
/// `t` must be a live table; `out_log` and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_eval_product(
    t: *const ModliftTable,
    delta: i64,
    z: ModliftComplex,
    trunc: usize,
    tol: f64,
    out_log: *mut ModliftComplex,
    out_value: *mut ModliftComplex,
) -> ModliftStatus {
    guard(|| {
        let t = unsafe { table_ref(t) }?;
        let v = lift::eval_product(delta, t, z.into(), &series(trunc, tol)?).or_status()?;
        *unsafe { out_mut(out_log) }? = v.log.into();
        *unsafe { out_mut(out_value) }? = v.value.into();
        Ok(())
    })
}

/// `sum 1/Q(z,1)` over forms of discriminant `delta` with `c < 0 < a`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_period_qs(delta: i64, z: ModliftComplex, out: *mut ModliftComplex) -> ModliftStatus {
    guard(|| {
        let v = lift::period_qs(delta, z.into()).or_status()?;
        *unsafe { out_mut(out) }? = v.into();
        Ok(())
    })
}

/// The weight-0 cocycle attached to `S`, vanishing at `i`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_cocycle_rs(delta: i64, z: ModliftComplex, out: *mut ModliftComplex) -> ModliftStatus {
    guard(|| {
        let v = lift::cocycle_rs(delta, z.into()).or_status()?;
        *unsafe { out_mut(out) }? = v.into();
        Ok(())
    })
}

/// Genus character `chi_delta([a, b, c])`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_genus_character(delta: i64, a: i64, b: i64, c: i64, out: *mut i32) -> ModliftStatus {
    guard(|| {
        let v = modlift::qforms::genus_character(delta, &QuadForm::new(a, b, c)).or_status()?;
        *unsafe { out_mut(out) }? = v;
        Ok(())
    })
}

/// Runs a verification suite (`"period"`, `"product"`, `"jump"`, `"continuity"`,
/// `"traceid"` or `"all"`); `delta = 0` selects the default discriminants.
/// Writes the number of checks and of failed checks.
///
/// # Safety
/// `t` must be a live table, `suite` NUL-terminated, the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn modlift_verify(
    t: *const ModliftTable,
    suite: *const c_char,
    delta: i64,
    out_checks: *mut usize,
    out_failed: *mut usize,
) -> ModliftStatus {
    guard(|| {
        let t = unsafe { table_ref(t) }?;
        let suite: Suite = unsafe { str_arg(suite) }?.parse().or_status()?;
        let delta = (delta != 0).then_some(delta);
        let checks = run_suite(suite, delta, t, &SeriesConfig::default()).or_status()?;
        *unsafe { out_mut(out_checks) }? = checks.len();
        *unsafe { out_mut(out_failed) }? = checks.iter().filter(|c| !c.pass).count();
        Ok(())
    })
}
