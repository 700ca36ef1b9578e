//! Cycle integrals `int F(z) dz / Q(z, 1)` over one period of a closed geodesic.

use std::f64::consts::{LN_2, PI};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use rug::float::{Constant, Round};
use rug::{Assign, Float};

use super::{faber_coefficients, required_order, FD_MIN_Y};
use crate::error::{invalid, Error, Result};
use crate::qforms::GeodesicClass;
use crate::specfun::quad::integrate;

/// A cycle integral with its error estimate and the number of integrand samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleValue {
    pub value: Complex64,
    pub error: f64,
    pub samples: usize,
}

fn semicircle(g: &GeodesicClass) -> Result<(f64, f64)> {
    let q = g.form;
    if q.a == 0 {
        return invalid(format!("{q} has a vertical geodesic"));
    }
    let x0 = -(q.b as f64) / (2.0 * q.a as f64);
    let r = (g.disc as f64).sqrt() / (2.0 * q.a.abs() as f64);
    Ok((x0, r))
}

fn mobius_big(m: &[[BigInt; 2]; 2], z: Complex64) -> Complex64 {
    let f = |v: &BigInt| v.to_f64().unwrap_or(f64::INFINITY);
    (z * f(&m[0][0]) + f(&m[0][1])) / (z * f(&m[1][0]) + f(&m[1][1]))
}

/// `int F(z) dz / Q(z, 1)` along the geodesic from its apex to the image of the
/// apex under the automorph, oriented from `w` towards `w'`.
pub fn cycle_integral<F: Fn(Complex64) -> Complex64>(f: F, g: &GeodesicClass, tol: f64) -> Result<CycleValue> {
    cycle_integral_from(f, g, PI / 2.0, tol)
}

/// As [`cycle_integral`], starting at the point `x0 + r e^{i theta0}` of the geodesic.
pub fn cycle_integral_from<F: Fn(Complex64) -> Complex64>(
    f: F,
    g: &GeodesicClass,
    theta0: f64,
    tol: f64,
) -> Result<CycleValue> {
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    if !(theta0 > 0.0 && theta0 < PI) {
        return invalid("base point angle must lie in (0, pi)");
    }
    let (x0, r) = semicircle(g)?;
    let q = g.form;
    let z0 = Complex64::new(x0, 0.0) + Complex64::from_polar(r, theta0);
    // w sits at theta = 0 when a > 0 and at theta = pi when a < 0
    let forward = q.a > 0;
    let inv = [
        [g.automorph[1][1].clone(), -g.automorph[0][1].clone()],
        [-g.automorph[1][0].clone(), g.automorph[0][0].clone()],
    ];
    let angle = |z: Complex64| (z.im).atan2(z.re - x0);
    let t1 = angle(mobius_big(&g.automorph, z0));
    let t2 = angle(mobius_big(&inv, z0));
    let theta1 = if forward == (t1 > theta0) { t1 } else { t2 };
    let integrand = |th: f64| {
        let e = Complex64::from_polar(1.0, th);
        let z = Complex64::new(x0, 0.0) + e * r;
        let dz = Complex64::new(0.0, r) * e;
        f(z) * dz / q.eval_at(z)
    };
    let re = integrate(|th| integrand(th).re, theta0, theta1, tol / 4.0, 0.0, 20_000);
    let im = integrate(|th| integrand(th).im, theta0, theta1, tol / 4.0, 0.0, 20_000);
    let error = re.error + im.error;
    if !(error <= tol) || !re.value.is_finite() || !im.value.is_finite() {
        return Err(Error::Convergence(format!(
            "cycle integral over the geodesic of {q}: achieved error {error:e} > {tol:e}"
        )));
    }
    Ok(CycleValue { value: Complex64::new(re.value, im.value), error, samples: 0 })
}

fn big_to_float(v: &BigInt, prec: u32) -> Float {
    let parsed = Float::parse(v.to_string()).expect("decimal integer");
    Float::with_val(prec, parsed)
}

/// Everything the trapezoid samples need, at working precision.
struct Geodesic {
    prec: u32,
    x0: Float,
    r: Float,
    period: Float,
    two_pi_m: Float,
    two_pi: Float,
    /// Coefficients of `q^1, q^2, ...` of `J_m`.
    regular: Vec<f64>,
    regular_mp: Option<Vec<Float>>,
}

impl Geodesic {
    /// `J_m(z(u))` with `z(u) = x0 + r(-tanh u + i sech u)`.
    fn sample(&self, u: &Float) -> (Float, Float) {
        let p = self.prec;
        let th = Float::with_val(p, u.tanh_ref());
        let ch = Float::with_val(p, u.cosh_ref());
        let mut x = Float::with_val(p, &self.r * &th);
        x = Float::with_val(p, &self.x0 - &x);
        let mut y = Float::with_val(p, &self.r / &ch);
        reduce_mp(&mut x, &mut y);
        let mut mag = Float::with_val(p, &self.two_pi_m * &y);
        mag.exp_mut();
        let arg = Float::with_val(p, &self.two_pi_m * &x);
        let mut s = Float::new(p);
        let mut c = Float::new(p);
        (&mut s, &mut c).assign(arg.sin_cos_ref());
        let mut re = Float::with_val(p, &mag * &c);
        let mut im = -Float::with_val(p, &mag * &s);
        match &self.regular_mp {
            None => {
                let (xf, yf) = (x.to_f64(), y.to_f64());
                let rq = (-2.0 * PI * yf).exp();
                let q = Complex64::from_polar(rq, 2.0 * PI * xf);
                let mut acc = Complex64::new(0.0, 0.0);
                for c in self.regular.iter().rev() {
                    acc = (acc + c) * q;
                }
                re += acc.re;
                im += acc.im;
            }
            Some(coeffs) => {
                let mut rq = Float::with_val(p, &self.two_pi * &y);
                rq = -rq;
                rq.exp_mut();
                let arg = Float::with_val(p, &self.two_pi * &x);
                let (mut s1, mut c1) = (Float::new(p), Float::new(p));
                (&mut s1, &mut c1).assign(arg.sin_cos_ref());
                let qre = Float::with_val(p, &rq * &c1);
                let qim = Float::with_val(p, &rq * &s1);
                let (mut are, mut aim) = (Float::new(p), Float::new(p));
                for c in coeffs.iter().rev() {
                    are += c;
                    let t_re = Float::with_val(p, &are * &qre) - Float::with_val(p, &aim * &qim);
                    let t_im = Float::with_val(p, &are * &qim) + Float::with_val(p, &aim * &qre);
                    are = t_re;
                    aim = t_im;
                }
                re += are;
                im += aim;
            }
        }
        (re, im)
    }
}

/// Reduces `x + iy` into the standard fundamental domain at the working precision.
fn reduce_mp(x: &mut Float, y: &mut Float) {
    let p = x.prec();
    loop {
        let n = Float::with_val(p, x.round_ref());
        *x -= &n;
        let r2 = Float::with_val(p, x.square_ref()) + Float::with_val(p, y.square_ref());
        if r2 < 1 {
            x.assign(Float::with_val(p, &*x / &r2));
            *x = -std::mem::replace(x, Float::new(p));
            y.assign(Float::with_val(p, &*y / &r2));
        } else {
            return;
        }
    }
}

/// `int J_m(z) dz / Q(z, 1)` over one period of the closed geodesic of `g`,
/// by the trapezoid rule in the arclength parameter (where the integrand is
/// periodic and analytic) at multiple precision.
pub fn faber_cycle_integral(m: usize, g: &GeodesicClass, tol: f64) -> Result<CycleValue> {
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let q = g.form;
    if q.a == 0 {
        return invalid(format!("{q} has a vertical geodesic"));
    }
    let d = g.disc as f64;
    let length = g.length;
    let growth = PI * m as f64 * d.sqrt();
    let prec = ((growth + length) / LN_2).ceil() as u32 + 100;

    let (t, u) = &g.pell;
    let g0 = q.content();
    let d0 = g.disc / (g0 * g0);
    let sd0 = Float::with_val(prec, d0).sqrt();
    let mut eps = Float::with_val(prec, &sd0 * &big_to_float(u, prec));
    eps += big_to_float(t, prec);
    eps /= 2;
    let period = Float::with_val(prec, eps.ln_ref()) * 2u32;
    let pi = Float::with_val(prec, Constant::Pi);
    let two_pi = Float::with_val(prec, &pi * 2u32);
    let two_pi_m = Float::with_val(prec, &two_pi * m as u32);
    let x0 = Float::with_val(prec, -q.b) / Float::with_val(prec, 2 * q.a);
    let r = Float::with_val(prec, g.disc).sqrt() / Float::with_val(prec, 2 * q.a.abs());

    let (regular, regular_mp) = if m == 0 {
        (Vec::new(), None)
    } else {
        let order = required_order(m, FD_MIN_Y, tol * 1e-3 / length.max(1.0));
        let exact = faber_coefficients(m, order);
        let coeffs: Vec<BigInt> = (1..=order as i64).map(|n| exact.coeff(n)).collect();
        let f64s: Vec<f64> = coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY)).collect();
        let aq = (-2.0 * PI * FD_MIN_Y).exp();
        let abs_sum: f64 = f64s.iter().enumerate().map(|(k, c)| c.abs() * aq.powi(k as i32 + 1)).sum();
        let mp = if 1e-15 * abs_sum * length.max(1.0) <= tol * 1e-2 {
            None
        } else {
            Some(coeffs.iter().map(|c| big_to_float(c, prec)).collect())
        };
        (f64s, mp)
    };
    let arc = Geodesic { prec, x0, r, period, two_pi_m, two_pi, regular, regular_mp };

    if m == 0 {
        // J_0 = 1; the trapezoid rule is exact for constants
        let v = Float::with_val(prec, &arc.period / Float::with_val(prec, g.disc).sqrt());
        return Ok(CycleValue { value: Complex64::new(v.to_f64(), 0.0), error: 0.0, samples: 0 });
    }

    let mut n = 32usize;
    while (n as f64) < length * (growth + 8.0) / 4.0 {
        n *= 2;
    }
    let half = Float::with_val(prec, &arc.period / 2u32);
    let at = |k: usize, n: usize| {
        let mut u = Float::with_val(prec, &arc.period * k as u32);
        u /= n as u32;
        u -= &half;
        arc.sample(&u)
    };
    let sum_samples = |ks: Vec<usize>, n: usize| {
        // nested inside a rayon task (e.g. a table prefetch) the samples run
        // sequentially, so a blocked worker never steals work that waits on itself
        let vals: Vec<(Float, Float)> = if rayon::current_thread_index().is_some() {
            ks.into_iter().map(|k| at(k, n)).collect()
        } else {
            ks.into_par_iter().map(|k| at(k, n)).collect()
        };
        let mut re = Float::new(prec);
        let mut im = Float::new(prec);
        for (a, b) in vals {
            re += a;
            im += b;
        }
        (re, im)
    };
    let scale = |re: &Float, im: &Float, n: usize| {
        let mut f = Float::with_val(prec, &arc.period / Float::with_val(prec, g.disc).sqrt());
        f /= n as u32;
        let vr = Float::with_val(prec, re * &f).to_f64_round(Round::Nearest);
        let vi = Float::with_val(prec, im * &f).to_f64_round(Round::Nearest);
        Complex64::new(vr, vi)
    };

    let (mut re, mut im) = sum_samples((0..n).collect(), n);
    let mut value = scale(&re, &im, n);
    let mut small = 0;
    let max_n = 1usize << 22;
    loop {
        let n2 = 2 * n;
        if n2 > max_n {
            return Err(Error::Convergence(format!(
                "trapezoid rule for J_{m} over the geodesic of {q} did not settle with {n} samples"
            )));
        }
        let (r2, i2) = sum_samples((1..n2).step_by(2).collect(), n2);
        re += r2;
        im += i2;
        let next = scale(&re, &im, n2);
        let diff = (next - value).norm();
        value = next;
        n = n2;
        if diff <= tol / 4.0 {
            small += 1;
            if small >= 2 {
                return Ok(CycleValue { value, error: diff, samples: n });
            }
        } else {
            small = 0;
        }
    }
}
