//! q-expansions of `j` and the Faber polynomials `J_m`, reduction to the
//! fundamental domain, and geodesic cycle integrals.

mod cycle;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::qforms::Sl2;

pub use cycle::{cycle_integral, cycle_integral_from, faber_cycle_integral, CycleValue};

/// Default truncation order of q-expansions.
pub const DEFAULT_ORDER: usize = 64;

/// Smallest imaginary part of a point in the standard fundamental domain.
pub const FD_MIN_Y: f64 = 0.866_025_403_784_438_6;

/// A q-expansion with exact integer coefficients: `sum_k coeffs[k] q^{leading + k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactSeries {
    pub leading: i64,
    pub coeffs: Vec<BigInt>,
}

impl ExactSeries {
    /// Exponent of the last stored coefficient.
    pub fn order(&self) -> i64 {
        self.leading + self.coeffs.len() as i64 - 1
    }

    /// Coefficient of `q^n`, zero outside the stored range.
    pub fn coeff(&self, n: i64) -> BigInt {
        if n < self.leading || n > self.order() {
            return BigInt::zero();
        }
        self.coeffs[(n - self.leading) as usize].clone()
    }

    fn coeff_ref(&self, n: i64) -> Option<&BigInt> {
        if n < self.leading || n > self.order() {
            return None;
        }
        Some(&self.coeffs[(n - self.leading) as usize])
    }

    /// Product truncated at `q^order`.
    fn mul_trunc(&self, o: &ExactSeries, order: i64) -> ExactSeries {
        let leading = self.leading + o.leading;
        let len = (order - leading + 1).max(0) as usize;
        let mut coeffs = vec![BigInt::zero(); len];
        for (i, x) in self.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in o.coeffs.iter().enumerate() {
                let k = i + j;
                if k >= len {
                    break;
                }
                coeffs[k] += x * y;
            }
        }
        ExactSeries { leading, coeffs }
    }

    fn truncate(mut self, order: i64) -> ExactSeries {
        let len = (order - self.leading + 1).max(0) as usize;
        self.coeffs.truncate(len);
        self
    }

    /// `self - k * o`, both truncated to the order of `self`.
    fn sub_scaled(&mut self, k: &BigInt, o: &ExactSeries) {
        for n in o.leading..=o.order().min(self.order()) {
            if let Some(v) = o.coeff_ref(n) {
                if n < self.leading {
                    continue;
                }
                let idx = (n - self.leading) as usize;
                self.coeffs[idx] -= k * v;
            }
        }
    }
}

fn sigma3(n: u64) -> BigInt {
    crate::arith::divisors(n).into_iter().map(|d| BigInt::from(d).pow(3)).sum()
}

/// Exact coefficients of `J = j - 744 = q^{-1} + 196884 q + ...` through `q^order`,
/// from `j = E_4^3 / Delta`.
pub fn j_series(order: usize) -> ExactSeries {
    let n = order + 2;
    let e4 = ExactSeries {
        leading: 0,
        coeffs: (0..n).map(|k| if k == 0 { BigInt::from(1) } else { BigInt::from(240) * sigma3(k as u64) }).collect(),
    };
    let top = n as i64 - 1;
    let e43 = e4.mul_trunc(&e4, top).mul_trunc(&e4, top);
    // prod (1 - q^k)^24
    let mut p = vec![BigInt::zero(); n];
    p[0] = BigInt::from(1);
    for k in 1..n {
        for _ in 0..24 {
            for i in (k..n).rev() {
                let t = p[i - k].clone();
                p[i] -= t;
            }
        }
    }
    let mut inv = vec![BigInt::zero(); n];
    inv[0] = BigInt::from(1);
    for k in 1..n {
        let mut s = BigInt::zero();
        for i in 1..=k {
            s += &p[i] * &inv[k - i];
        }
        inv[k] = -s;
    }
    let inv = ExactSeries { leading: 0, coeffs: inv };
    let mut jq = e43.mul_trunc(&inv, top);
    jq.leading = -1;
    jq.coeffs[1] -= 744;
    jq.truncate(order as i64)
}

/// `J_m` through `q^order` by eliminating the principal part of `J^m`.
pub fn faber_exact(m: usize, order: usize) -> ExactSeries {
    if m == 0 {
        let mut coeffs = vec![BigInt::zero(); order + 1];
        coeffs[0] = BigInt::from(1);
        return ExactSeries { leading: 0, coeffs };
    }
    let ord = order as i64;
    let j = j_series(order + m);
    let mut powers = vec![ExactSeries { leading: 0, coeffs: vec![BigInt::from(1)] }];
    for k in 1..=m {
        let next = powers[k - 1].mul_trunc(&j, ord + (m - k) as i64);
        powers.push(next);
    }
    let mut r = powers[m].clone().truncate(ord);
    for e in (1..m).rev() {
        let k = r.coeff(-(e as i64));
        if !k.is_zero() {
            r.sub_scaled(&k, &powers[e]);
        }
    }
    let c0 = r.coeff(0);
    let idx = (0 - r.leading) as usize;
    r.coeffs[idx] -= c0;
    r
}

/// `J_0, ..., J_{m_max}` through `q^order` by the recursion
/// `J_{n+1} = J J_n - sum_{k=1}^{n} c_k J_{n-k} - n c_n`, `c_k` the coefficients of `J`.
pub fn faber_newton(m_max: usize, order: usize) -> Vec<ExactSeries> {
    let ord = order as i64;
    let j = j_series(order + m_max + 1);
    let c = |k: usize| j.coeff(k as i64);
    let mut out = vec![faber_exact(0, order + m_max + 1)];
    if m_max == 0 {
        return vec![out.remove(0).truncate(ord)];
    }
    out.push(j.clone().truncate(ord + m_max as i64));
    for n in 1..m_max {
        let keep = ord + (m_max - n - 1) as i64;
        let mut next = j.mul_trunc(&out[n], keep);
        for k in 1..=n {
            let ck = c(k);
            if !ck.is_zero() {
                next.sub_scaled(&ck, &out[n - k]);
            }
        }
        let idx = (0 - next.leading) as usize;
        next.coeffs[idx] -= BigInt::from(n) * c(n);
        out.push(next);
    }
    out.into_iter().map(|s| s.truncate(ord)).collect()
}

/// Upper bound `m^{1/4} n^{-3/4} e^{4 pi sqrt(mn)} / sqrt 2` for `|c_m(n)|`, `n >= 1`.
pub fn coefficient_bound(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    m.powf(0.25) * n.powf(-0.75) * (4.0 * PI * (m * n).sqrt()).exp() / std::f64::consts::SQRT_2
}

/// Bound on `sum_{n > order} |c_m(n)| e^{-2 pi n y}`.
pub fn tail_bound(m: usize, order: usize, y: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    // the log of the terms is concave in n, so once they decrease they keep decreasing
    let term = |n: usize| (coefficient_bound(m, n).ln() - 2.0 * PI * n as f64 * y).exp();
    let mut n = order + 1;
    let mut s = 0.0;
    let mut prev = f64::INFINITY;
    loop {
        let t = term(n);
        s += t;
        if t < prev && t <= 1e-18 * s.max(1e-300) || n > order + 100_000 {
            // remaining terms decay at least geometrically with ratio t / prev
            let ratio = (t / prev).min(0.99);
            return s + t * ratio / (1.0 - ratio);
        }
        prev = t;
        n += 1;
    }
}

/// Smallest order whose tail on `Im z >= y` is below `tol`.
pub fn required_order(m: usize, y: f64, tol: f64) -> usize {
    let mut order = 8;
    while tail_bound(m, order, y) > tol {
        order += 8;
    }
    order
}

/// A truncated q-expansion with complex coefficients and a tail bound valid
/// for `Im z >= min_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct QSeries {
    pub leading_exponent: i64,
    pub coefficients: Vec<Complex64>,
    pub truncation_order: i64,
    pub tail_bound: f64,
    pub min_y: f64,
}

impl QSeries {
    pub fn from_exact(s: &ExactSeries, tail: f64, min_y: f64) -> QSeries {
        QSeries {
            leading_exponent: s.leading,
            coefficients: s.coeffs.iter().map(|c| Complex64::new(c.to_f64().unwrap_or(f64::INFINITY), 0.0)).collect(),
            truncation_order: s.order(),
            tail_bound: tail,
            min_y,
        }
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n < self.leading_exponent || n > self.truncation_order {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients[(n - self.leading_exponent) as usize]
    }

    /// Value of the truncated series at `z` (no reduction).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let q = q_of(z);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coefficients.iter().rev() {
            acc = acc * q + c;
        }
        acc * q_pow(z, self.leading_exponent)
    }

    /// Sum of `|c_n| |q|^n` over the stored terms, a bound on the value used to
    /// size rounding errors.
    pub fn abs_sum(&self, y: f64) -> f64 {
        let aq = (-2.0 * PI * y).exp();
        let mut acc = 0.0;
        for c in self.coefficients.iter().rev() {
            acc = acc * aq + c.norm();
        }
        acc * (-2.0 * PI * y * self.leading_exponent as f64).exp()
    }
}

fn q_of(z: Complex64) -> Complex64 {
    let r = (-2.0 * PI * z.im).exp();
    let t = 2.0 * PI * (z.re - z.re.round());
    Complex64::new(r * t.cos(), r * t.sin())
}

fn q_pow(z: Complex64, k: i64) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let kf = k as f64;
    let r = (-2.0 * PI * kf * z.im).exp();
    let x = z.re - z.re.round();
    let t = 2.0 * PI * (kf * x).rem_euclid(1.0);
    Complex64::new(r * t.cos(), r * t.sin())
}

struct FaberEntry {
    exact: ExactSeries,
    series: QSeries,
}

type Memo = Mutex<HashMap<(usize, usize), Arc<OnceLock<Arc<FaberEntry>>>>>;

fn memo() -> &'static Memo {
    static MEMO: OnceLock<Memo> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

fn faber_entry(m: usize, order: usize) -> Arc<FaberEntry> {
    let cell = {
        let mut map = memo().lock().unwrap_or_else(|e| e.into_inner());
        map.entry((m, order)).or_default().clone()
    };
    cell.get_or_init(|| {
        let exact = faber_exact(m, order);
        let series = QSeries::from_exact(&exact, tail_bound(m, order, FD_MIN_Y), FD_MIN_Y);
        Arc::new(FaberEntry { exact, series })
    })
    .clone()
}

/// The q-expansion of `J_m` through `q^order` (memoized).
pub fn faber(m: usize, order: usize) -> Arc<QSeries> {
    Arc::new(faber_entry(m, order).series.clone())
}

/// Exact coefficients of `J_m` through `q^order` (memoized).
pub fn faber_coefficients(m: usize, order: usize) -> ExactSeries {
    faber_entry(m, order).exact.clone()
}

/// A point together with its image in the standard fundamental domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularPoint {
    pub z: Complex64,
    pub reduced: Complex64,
    /// `word.apply(z) = reduced`.
    pub word: Sl2,
}

/// Moves `z` into `|x| <= 1/2, |z| >= 1`.
pub fn reduce_point(z: Complex64) -> Result<ModularPoint> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return invalid("point must lie in the upper half plane");
    }
    let mut w = z;
    let mut word = Sl2::IDENTITY;
    for _ in 0..10_000 {
        let n = w.re.round();
        if n != 0.0 {
            let k = n as i64;
            w.re -= n;
            word = Sl2::t_pow(-k).mul(&word);
        }
        if w.norm_sqr() < 1.0 - 1e-14 {
            w = -w.inv();
            word = Sl2::S.mul(&word);
        } else {
            return Ok(ModularPoint { z, reduced: w, word });
        }
    }
    Err(Error::Convergence(format!("reduction of {z} did not terminate")))
}

/// `J_m(z)` with the default truncation order.
pub fn eval_jm(m: usize, z: Complex64, tol: f64) -> Result<Complex64> {
    eval_jm_with_order(m, z, tol, DEFAULT_ORDER)
}

/// `J_m(z)` at a given truncation order; fails with the required order when
/// the tail bound or rounding exceeds `tol`.
pub fn eval_jm_with_order(m: usize, z: Complex64, tol: f64, order: usize) -> Result<Complex64> {
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let p = reduce_point(z)?;
    if m == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let y = p.reduced.im.max(FD_MIN_Y);
    let f = faber(m, order);
    if tail_bound(m, order, y) > tol / 2.0 {
        return Err(Error::Truncation { required: required_order(m, y, tol / 2.0), what: format!("q-expansion of J_{m}") });
    }
    let rounding = 4.0 * f64::EPSILON * f.abs_sum(y) * (order as f64 + m as f64);
    if rounding > tol / 2.0 {
        return Err(Error::Precision {
            tol,
            reason: format!("rounding in double precision is about {rounding:e} for J_{m} at {z}"),
        });
    }
    Ok(f.eval(p.reduced))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_expansion() {
        let j = j_series(5);
        let want = ["1", "0", "196884", "21493760", "864299970", "20245856256", "333202640600"];
        let got: Vec<String> = j.coeffs.iter().map(|c| c.to_string()).collect();
        assert_eq!(got, want);
        // independent orders agree on the overlap
        let long = j_series(40);
        for n in -1..=5 {
            assert_eq!(j.coeff(n), long.coeff(n));
        }
    }

    #[test]
    fn faber_small_cases() {
        let j0 = faber_exact(0, 10);
        assert_eq!(j0.coeff(0), BigInt::from(1));
        assert!((1..=10).all(|n| j0.coeff(n).is_zero()));
        let j2 = faber_exact(2, 4);
        assert_eq!(j2.leading, -2);
        assert_eq!(j2.coeff(-2), BigInt::from(1));
        assert!(j2.coeff(-1).is_zero() && j2.coeff(0).is_zero());
        assert_eq!(j2.coeff(1), BigInt::from(42987520));
        assert_eq!(j2.coeff(2), BigInt::from(40491909396i64));
        assert_eq!(faber_exact(3, 2).coeff(1), BigInt::from(2592899910i64));
        assert_eq!(faber_exact(4, 2).coeff(1), BigInt::from(80983425024i64));
    }

    #[test]
    fn faber_constructions_agree() {
        let newton = faber_newton(6, 30);
        for (m, s) in newton.iter().enumerate() {
            assert_eq!(s, &faber_exact(m, 30), "m={m}");
        }
    }

    #[test]
    fn coefficient_bound_holds() {
        for m in 1..=6 {
            let s = faber_exact(m, 120);
            for n in 1..=120 {
                let c = s.coeff(n as i64).to_f64().unwrap().abs();
                assert!(c <= coefficient_bound(m, n), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn reduction_examples() {
        let p = reduce_point(Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(p.word, Sl2::IDENTITY);
        let p = reduce_point(Complex64::new(5.0, 1.0)).unwrap();
        assert!((p.reduced - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let z = Complex64::new(0.0, 0.1);
        let p = reduce_point(z).unwrap();
        assert!((p.reduced - Complex64::new(0.0, 10.0)).norm() < 1e-12);
        assert!((p.word.apply(z) - p.reduced).norm() < 1e-12);
        assert!(reduce_point(Complex64::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn classical_values() {
        let i = Complex64::new(0.0, 1.0);
        assert!((eval_jm(1, i, 1e-9).unwrap() - 984.0).norm() < 1e-9);
        let rho = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
        assert!((eval_jm(1, rho, 1e-9).unwrap() + 744.0).norm() < 1e-9);
        assert_eq!(eval_jm(0, rho, 1e-9).unwrap(), Complex64::new(1.0, 0.0));
        // the value at i through two truncation orders
        let a = eval_jm_with_order(1, i, 1e-9, 32).unwrap();
        let b = eval_jm_with_order(1, i, 1e-9, 64).unwrap();
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn truncation_error_reports_order() {
        match eval_jm_with_order(8, Complex64::new(0.1, 0.9), 1e-9, 16) {
            Err(Error::Truncation { required, .. }) => assert!(required > 16),
            other => panic!("expected a truncation error, got {other:?}"),
        }
    }
}
