//! The twisted lift of the h-family and its derivative via Fourier expansions,
//! the weight-2 modular integral `F_Delta`, its period functions, and the
//! Borcherds product `Psi_Delta`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{is_discriminant, is_fundamental, is_square, kronecker};
use crate::error::{invalid, Error, Result};
use crate::qforms::{forms_containing, forms_m_period, forms_s_period, genus_character, QuadForm, Sl2};
use crate::specfun::{dirichlet_l1, script_f, script_f_prime};
use crate::traces::{twisted_coefficient, twisted_keys, TraceTable};

/// Terms whose size is at most this fraction of the running sum count as small.
pub const TAIL_RATIO: f64 = 1e-3;

/// Truncation and accuracy for the q-series in this module.
#[derive(Clone, Copy, Debug)]
pub struct SeriesConfig {
    /// Largest index `m` that may be summed.
    pub trunc: usize,
    /// Absolute target for the estimated tail.
    pub tol: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { trunc: 64, tol: 1e-10 }
    }
}

impl SeriesConfig {
    pub fn new(trunc: usize, tol: f64) -> Result<Self> {
        if trunc == 0 {
            return invalid("truncation must be positive");
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return invalid(format!("tolerance {tol} must be positive"));
        }
        Ok(SeriesConfig { trunc, tol })
    }
}

/// Coefficients `c^+(D)` and `c^-(D)` of a harmonic form of weight 1/2.
///
/// `holo` is complete for `D <= holo_bound`; absent keys below the bound are zero.
#[derive(Clone, Debug, Default, Serialize)]
pub struct HarmonicCoefficients {
    pub holo: BTreeMap<i64, f64>,
    pub nonholo: BTreeMap<i64, f64>,
    pub holo_bound: i64,
}

impl HarmonicCoefficients {
    /// The h-family with `c^+(Delta m^2) = tr_J(Delta m^2) / 2 pi` for `m <= m_max`.
    ///
    /// Only the discriminants `Delta m^2` are filled, so the result is tied to `delta`.
    pub fn h(delta: i64, table: &TraceTable, m_max: usize) -> Result<Self> {
        check_delta(delta)?;
        table.prefetch(&twisted_keys(delta, m_max as u64))?;
        let mut holo = BTreeMap::new();
        for m in 1..=m_max as i64 {
            let d = delta * m * m;
            holo.insert(d, table.tr_j(d)?.value / (2.0 * PI));
        }
        let mut nonholo = BTreeMap::new();
        nonholo.insert(0, -8.0);
        nonholo.insert(1, 2.0);
        for d in (-20..0).filter(|&d| is_discriminant(d)) {
            nonholo.insert(d, table.value(crate::traces::TraceKey::cm(1, d))?);
        }
        Ok(HarmonicCoefficients { holo, nonholo, holo_bound: delta * (m_max * m_max) as i64 })
    }

    pub fn plus(&self, d: i64) -> Option<f64> {
        if d > self.holo_bound {
            return None;
        }
        Some(self.holo.get(&d).copied().unwrap_or(0.0))
    }

    pub fn minus(&self, d: i64) -> f64 {
        self.nonholo.get(&d).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((d, _)) = self.holo.iter().find(|(d, v)| **d < 0 && **v != 0.0) {
            return invalid(format!("c+({d}) must vanish for negative D"));
        }
        for (d, v) in self.holo.iter().chain(self.nonholo.iter()) {
            if !v.is_finite() {
                return invalid(format!("coefficient at D = {d} is not finite"));
            }
        }
        if let Some((d, _)) = self.nonholo.iter().find(|(d, v)| **d > 0 && **v != 0.0 && !is_discriminant(**d)) {
            return invalid(format!("c-({d}) is nonzero but {d} is not a discriminant"));
        }
        Ok(())
    }
}

/// A value split into the part given by Fourier series and the locally constant
/// indicator part.
#[derive(Clone, Debug, Serialize)]
pub struct LiftValue {
    pub smooth_part: Complex64,
    pub singular_part: Complex64,
    pub total: Complex64,
    pub contributing_forms: Vec<QuadForm>,
    pub terms: usize,
    pub tail: f64,
}

/// A truncated series value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub abs_err: f64,
    pub terms: usize,
}

/// `(2/pi) * scale * sum 1/Q(z,1)` over a finite set of forms of one discriminant.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodFunction {
    pub forms: Vec<QuadForm>,
    pub scale: f64,
}

impl PeriodFunction {
    /// The S-period set `{Q : c < 0 < a}` of disc `delta` with scale `2/pi`.
    pub fn s_period(delta: i64) -> Result<Self> {
        Ok(PeriodFunction { forms: forms_s_period(delta)?, scale: 2.0 / PI })
    }

    pub fn for_matrix(delta: i64, m: &Sl2) -> Result<Self> {
        Ok(PeriodFunction { forms: forms_m_period(delta, m)?, scale: 2.0 / PI })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.scale * self.forms.iter().map(|q| 1.0 / q.eval_at(z)).sum::<Complex64>()
    }
}

fn check_delta(delta: i64) -> Result<()> {
    if delta <= 1 || !is_fundamental(delta) {
        return invalid(format!("delta = {delta} must be a fundamental discriminant > 1"));
    }
    Ok(())
}

fn check_point(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return invalid(format!("z = {z} is not in the upper half plane"));
    }
    Ok(())
}

/// `e(w) = exp(2 pi i w)`.
fn e(w: Complex64) -> Complex64 {
    (Complex64::i() * 2.0 * PI * w).exp()
}

/// Number of terms a series in `e(n z)` with slowly growing coefficients needs.
pub fn estimated_terms(y: f64, tol: f64) -> usize {
    (((1e4 / tol).ln() / (2.0 * PI * y)).ceil() as usize + 3).max(4)
}

struct Summed {
    value: Complex64,
    coef_err: f64,
    tail: f64,
    terms: usize,
}

/// Sums `constant + sum_{n >= 1} term(n)` where `term(n) = O(n^2 e^{-2 pi n y})`.
///
/// Stops once three consecutive terms are below `TAIL_RATIO` of the running
/// sum and the geometric extrapolation of the tail is below `cfg.tol`.
fn sum_series(
    y: f64,
    constant: Complex64,
    cfg: &SeriesConfig,
    what: &str,
    mut term: impl FnMut(usize) -> Result<Option<(Complex64, f64)>>,
) -> Result<Summed> {
    let mut acc = constant;
    let mut coef_err = 0.0;
    let mut last = [f64::INFINITY; 3];
    let mut tail = f64::INFINITY;
    let mut n = 0;
    while n < cfg.trunc {
        let Some((t, err)) = term(n + 1)? else { break };
        n += 1;
        acc += t;
        coef_err += err;
        last = [last[1], last[2], t.norm()];
        if n < 3 {
            continue;
        }
        let small = last.iter().all(|&a| a <= TAIL_RATIO * acc.norm() || a <= cfg.tol * 1e-3);
        let rho = (-2.0 * PI * y).exp() * ((n + 1) as f64 / n as f64).powi(2);
        tail = if rho < 1.0 { last.iter().cloned().fold(0.0, f64::max) * rho / (1.0 - rho) } else { f64::INFINITY };
        if small && tail <= cfg.tol {
            return Ok(Summed { value: acc, coef_err, tail, terms: n });
        }
    }
    let extra = if tail.is_finite() && tail > 0.0 {
        ((tail / cfg.tol).ln() / (2.0 * PI * y)).ceil().max(1.0) as usize
    } else {
        estimated_terms(y, cfg.tol).saturating_sub(n).max(3)
    };
    Err(Error::Truncation {
        required: n + extra,
        what: format!("{what} at y = {y} (tail estimate {tail:.3e}, tolerance {:.1e})", cfg.tol),
    })
}

/// `sum_{b mod Delta} (Delta/b) g(b/Delta)`.
fn twisted_sum<T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default>(
    delta: i64,
    mut g: impl FnMut(f64) -> Result<T>,
) -> Result<T> {
    let mut s = T::default();
    for b in 1..delta {
        let chi = kronecker(delta, b);
        if chi != 0 {
            s = s + g(b as f64 / delta as f64)? * chi as f64;
        }
    }
    Ok(s)
}

/// `log |1 - w|` for `|w| < 1`.
fn log_abs_one_minus(w: Complex64) -> f64 {
    0.5 * (-2.0 * w.re + w.norm_sqr()).ln_1p()
}

fn nonholo_squares(delta: i64, coeffs: &HarmonicCoefficients) -> Vec<(i64, f64)> {
    coeffs
        .nonholo
        .iter()
        .filter(|(d, v)| **d > 0 && **v != 0.0 && *d % delta == 0 && is_square(*d / delta))
        .map(|(d, v)| (crate::arith::isqrt(d / delta), *v))
        .collect()
}

struct Singular {
    value: Complex64,
    forms: Vec<QuadForm>,
}

/// Collects `c^-(D) chi(Q) g(Q, D)` over `D > 0` and forms of disc `Delta D` containing `z`.
fn singular_sum(
    delta: i64,
    coeffs: &HarmonicCoefficients,
    z: Complex64,
    g: impl Fn(&QuadForm, i64) -> Complex64,
) -> Result<Singular> {
    let mut value = Complex64::new(0.0, 0.0);
    let mut forms = Vec::new();
    for (&d, &c) in coeffs.nonholo.range(1..) {
        if c == 0.0 {
            continue;
        }
        for q in forms_containing(delta * d, z, 1)? {
            let chi = genus_character(delta, &q)?;
            if chi != 0 {
                value += c * chi as f64 * g(&q, d);
            }
            forms.push(q);
        }
    }
    Ok(Singular { value, forms })
}

fn holo_coefficient(coeffs: &HarmonicCoefficients, d: i64, m: usize) -> Result<Option<f64>> {
    match coeffs.plus(d) {
        Some(c) => Ok(Some(c)),
        None => Err(Error::Truncation { required: m, what: format!("coefficient c+({d}) is not available") }),
    }
}

/// The lift `Phi_Delta(f, z)` from its Fourier expansion.
pub fn eval_phi(delta: i64, coeffs: &HarmonicCoefficients, z: Complex64, cfg: &SeriesConfig) -> Result<LiftValue> {
    check_delta(delta)?;
    check_point(z)?;
    coeffs.validate()?;
    let sd = (delta as f64).sqrt();
    let y = z.im;
    let l1 = dirichlet_l1(delta)?;
    let mut constant = sd * l1 * (2.0 * coeffs.plus(0).unwrap_or(0.0) + y * coeffs.minus(0));
    for (m, c) in nonholo_squares(delta, coeffs) {
        let mf = m as f64;
        let s = twisted_sum(delta, |t| script_f(mf * z + t))?;
        constant += 2.0 * c / (mf * sd) * s;
    }
    let summed = sum_series(y, constant.into(), cfg, "log-product line of the lift", |m| {
        let d = delta * (m * m) as i64;
        let Some(c) = holo_coefficient(coeffs, d, m)? else { return Ok(None) };
        let mf = m as f64;
        let s: f64 = twisted_sum(delta, |t| Ok(log_abs_one_minus(e(mf * z + t))))?;
        Ok(Some(((-4.0 * c * s).into(), 0.0)))
    })?;
    let singular = singular_sum(delta, coeffs, z, |q, d| {
        let p = q.a as f64 * z.norm_sqr() + q.b as f64 * z.re + q.c as f64;
        let theta = (y * ((delta * d) as f64).sqrt() / p).atan() + PI / 2.0;
        (-4.0 / (d as f64).sqrt() * theta).into()
    })?;
    Ok(LiftValue {
        smooth_part: summed.value,
        singular_part: singular.value,
        total: summed.value + singular.value,
        contributing_forms: singular.forms,
        terms: summed.terms,
        tail: summed.tail,
    })
}

/// The derivative `Phi'_Delta(f, z) = d/dz Phi_Delta(f, z)` off the geodesics.
pub fn eval_phi_prime(
    delta: i64,
    coeffs: &HarmonicCoefficients,
    z: Complex64,
    cfg: &SeriesConfig,
) -> Result<LiftValue> {
    check_delta(delta)?;
    check_point(z)?;
    coeffs.validate()?;
    let sd = (delta as f64).sqrt();
    let i = Complex64::i();
    let l1 = dirichlet_l1(delta)?;
    let mut constant = -0.5 * i * sd * l1 * coeffs.minus(0);
    for (m, c) in nonholo_squares(delta, coeffs) {
        let mf = m as f64;
        let s = twisted_sum(delta, |t| script_f_prime(mf * z + t))?;
        constant += 2.0 * c / sd * s;
    }
    let summed = sum_series(z.im, constant, cfg, "holomorphic part of the derivative", |n| {
        let mut a = 0.0;
        for m in crate::arith::divisors(n as u64) {
            let chi = kronecker(delta, (n as u64 / m) as i64);
            if chi == 0 {
                continue;
            }
            let d = delta * (m * m) as i64;
            let Some(c) = holo_coefficient(coeffs, d, m as usize)? else { return Ok(None) };
            a += chi as f64 * m as f64 * c;
        }
        Ok(Some((4.0 * PI * i * sd * a * e(n as f64 * z), 0.0)))
    })?;
    let singular = singular_sum(delta, coeffs, z, |q, _| 2.0 * i * sd / q.eval_at(z))?;
    Ok(LiftValue {
        smooth_part: summed.value,
        singular_part: singular.value,
        total: summed.value + singular.value,
        contributing_forms: singular.forms,
        terms: summed.terms,
        tail: summed.tail,
    })
}

/// Evaluates `f` with h-family coefficients, extending them until the series converges.
fn with_h<T>(
    delta: i64,
    table: &TraceTable,
    y: f64,
    cfg: &SeriesConfig,
    f: impl Fn(&HarmonicCoefficients) -> Result<T>,
) -> Result<T> {
    let mut m = estimated_terms(y, cfg.tol).min(cfg.trunc);
    loop {
        let coeffs = HarmonicCoefficients::h(delta, table, m)?;
        match f(&coeffs) {
            Err(Error::Truncation { required, .. }) if required > m && m < cfg.trunc => {
                m = required.min(cfg.trunc).max(m + 1);
            }
            r => return r,
        }
    }
}

/// [`eval_phi`] for the h-family with traces from `table`.
pub fn eval_phi_h(delta: i64, table: &TraceTable, z: Complex64, cfg: &SeriesConfig) -> Result<LiftValue> {
    check_delta(delta)?;
    check_point(z)?;
    with_h(delta, table, z.im, cfg, |c| eval_phi(delta, c, z, cfg))
}

/// [`eval_phi_prime`] for the h-family with traces from `table`.
pub fn eval_phi_prime_h(delta: i64, table: &TraceTable, z: Complex64, cfg: &SeriesConfig) -> Result<LiftValue> {
    check_delta(delta)?;
    check_point(z)?;
    with_h(delta, table, z.im, cfg, |c| eval_phi_prime(delta, c, z, cfg))
}

fn prefetch_for(delta: i64, table: &TraceTable, y: f64, cfg: &SeriesConfig) -> Result<()> {
    let n = estimated_terms(y, cfg.tol).min(cfg.trunc);
    table.prefetch(&twisted_keys(delta, n as u64))
}

/// `F_Delta(z) = (1/pi) sum_{m >= 0} tr_{J_m}(Delta) e(m z)` with `tr_{J_0} = tr_1`.
pub fn eval_f(delta: i64, table: &TraceTable, z: Complex64, cfg: &SeriesConfig) -> Result<SeriesValue> {
    check_delta(delta)?;
    check_point(z)?;
    prefetch_for(delta, table, z.im, cfg)?;
    let one = table.tr_one(delta)?;
    let summed = sum_series(z.im, one.value.into(), cfg, "modular integral", |n| {
        let (a, err) = twisted_coefficient(delta, n as u64, table)?;
        let q = e(n as f64 * z);
        Ok(Some((a * q, err * q.norm())))
    })?;
    Ok(SeriesValue {
        value: summed.value / PI,
        abs_err: (summed.tail + summed.coef_err + one.abs_err) / PI,
        terms: summed.terms,
    })
}

/// `sum_{Q : c < 0 < a} 1/Q(z,1)` over forms of discriminant `delta`.
pub fn period_qs(delta: i64, z: Complex64) -> Result<Complex64> {
    check_point(z)?;
    Ok(forms_s_period(delta)?.iter().map(|q| 1.0 / q.eval_at(z)).sum())
}

/// `sum 1/Q(z,1)` over the period set of `m`; satisfies `z^-2 F(Mz) ... ` relations
/// `F|M - F = (2/pi) q_M`.
pub fn period_q(delta: i64, m: &Sl2, z: Complex64) -> Result<Complex64> {
    check_point(z)?;
    Ok(forms_m_period(delta, m)?.iter().map(|q| 1.0 / q.eval_at(z)).sum())
}

/// Real endpoints `(w, w')` with `w > w'` of the geodesic of `q`.
fn endpoints(q: &QuadForm) -> (f64, f64) {
    let s = (q.disc() as f64).sqrt();
    let (a, b) = (q.a as f64, q.b as f64);
    let (u, v) = ((-b + s) / (2.0 * a), (-b - s) / (2.0 * a));
    if u > v { (u, v) } else { (v, u) }
}

/// The sum `sum_{c < 0 < a} (Log((z-w)/(i-w)) - Log((z-w')/(i-w')))`.
pub fn s_log_sum(delta: i64, z: Complex64) -> Result<Complex64> {
    check_point(z)?;
    let i = Complex64::i();
    Ok(forms_s_period(delta)?
        .iter()
        .map(|q| {
            let (w, w2) = endpoints(q);
            ((z - w) / (i - w)).ln() - ((z - w2) / (i - w2)).ln()
        })
        .sum())
}

/// Weight-0 cocycle `R_S = s_log_sum / sqrt(Delta)`, the primitive of `q_S` vanishing at `i`.
pub fn cocycle_rs(delta: i64, z: Complex64) -> Result<Complex64> {
    check_delta(delta)?;
    Ok(s_log_sum(delta, z)? / (delta as f64).sqrt())
}

/// `log Psi_Delta(z)` (principal logarithms termwise) and its exponential.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProductValue {
    pub log: Complex64,
    pub value: Complex64,
    pub abs_err: f64,
    pub terms: usize,
}

/// The Borcherds product `Psi_Delta(z)`, computed in log space.
pub fn eval_product(delta: i64, table: &TraceTable, z: Complex64, cfg: &SeriesConfig) -> Result<ProductValue> {
    check_delta(delta)?;
    check_point(z)?;
    prefetch_for(delta, table, z.im, cfg)?;
    let sd = (delta as f64).sqrt();
    let one = table.tr_one(delta)?;
    let lin = -2.0 * PI * Complex64::i() * sd * one.value * z;
    let summed = sum_series(z.im, lin, cfg, "Borcherds product", |m| {
        let t = table.tr_j(delta * (m * m) as i64)?;
        let mf = m as f64;
        let s: Complex64 = twisted_sum(delta, |b| Ok((1.0 - e(mf * z + b)).ln()))?;
        Ok(Some((t.value * s, t.abs_err * s.norm())))
    })?;
    let abs_err = summed.tail + summed.coef_err + 2.0 * PI * sd * one.abs_err * z.norm();
    Ok(ProductValue { log: summed.value, value: summed.value.exp(), abs_err, terms: summed.terms })
}

/// `|z^-2 F(-1/z) - F(z) - (2/pi) q_S(z)|`.
pub fn verify_period_relation(delta: i64, z: Complex64, table: &TraceTable, cfg: &SeriesConfig) -> Result<f64> {
    let w = -1.0 / z;
    let fw = eval_f(delta, table, w, cfg)?.value;
    let fz = eval_f(delta, table, z, cfg)?.value;
    let q = period_qs(delta, z)?;
    Ok((fw / (z * z) - fz - 2.0 / PI * q).norm())
}

/// `|F|M - F - (2/pi) q_M|` at `z` for any `M` in `SL_2(Z)`.
pub fn verify_period_relation_m(
    delta: i64,
    m: &Sl2,
    z: Complex64,
    table: &TraceTable,
    cfg: &SeriesConfig,
) -> Result<f64> {
    let fw = eval_f(delta, table, m.apply(z), cfg)?.value;
    let fz = eval_f(delta, table, z, cfg)?.value;
    let j = m.factor(z);
    Ok((fw / (j * j) - fz - 2.0 / PI * period_q(delta, m, z)?).norm())
}

/// `|Psi(-1/z) / (e(-2 sum ...) Psi(z)) - 1|`.
pub fn verify_product_s(delta: i64, z: Complex64, table: &TraceTable, cfg: &SeriesConfig) -> Result<f64> {
    let lw = eval_product(delta, table, -1.0 / z, cfg)?.log;
    let lz = eval_product(delta, table, z, cfg)?.log;
    let phase = 2.0 * PI * Complex64::i() * (-2.0) * s_log_sum(delta, z)?;
    Ok(((lw - lz - phase).exp() - 1.0).norm())
}
