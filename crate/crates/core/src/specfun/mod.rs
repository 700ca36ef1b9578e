//! Special functions: the incomplete gamma pieces `beta_{1/2}`, the
//! generalized arcsine `arcsin_s`, the K-Bessel function, the periodized
//! arcsine function `script_F` and its derivative, and `L_Delta(1)`.

pub mod quad;

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::arith::{is_fundamental, kronecker};
use crate::error::{invalid, Result};
use quad::{integrate, wynn_epsilon};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// `beta_{1/2}(s) = int_1^oo e^{-st} t^{-1/2} dt` for `s > 0`.
pub fn beta_half(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return invalid(format!("beta_half needs s > 0, got {s}"));
    }
    // t = (1 + v)^2: 2 e^{-s} int_0^oo e^{-s (2v + v^2)} dv, cut where the integrand is negligible
    let vmax = (-1.0 + (1.0 + 42.0 / s).sqrt()).max(1e-3);
    let r = integrate(|v| (-s * v * (2.0 + v)).exp(), 0.0, vmax, 0.0, 1e-15, 2000);
    Ok(2.0 * (-s).exp() * r.value)
}

/// `beta^c_{1/2}(s) = int_0^1 e^{-st} t^{-1/2} dt`, any real `s`.
pub fn beta_half_c(s: f64) -> Result<f64> {
    if !s.is_finite() {
        return invalid("beta_half_c needs a finite argument");
    }
    // t = u^2 removes the endpoint singularity
    let r = integrate(|u| (-s * u * u).exp(), 0.0, 1.0, 0.0, 1e-15, 500);
    Ok(2.0 * r.value)
}

/// `arcsin_s(a) = int_0^1 (a - t^2)^{-1/2} ((1 - t^2)/(a - t^2))^s dt`, `a >= 1`, `s > -1`.
pub fn arcsin_s(a: f64, s: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return invalid(format!("arcsin_s needs a >= 1, got {a}"));
    }
    arcsin_s_shifted(a - 1.0, s)
}

/// `arcsin_s` as a function of `e = a - 1`, avoiding the cancellation in `a - 1`.
pub fn arcsin_s_shifted(e: f64, s: f64) -> Result<f64> {
    if !(e >= 0.0) {
        return invalid(format!("arcsin_s needs a - 1 >= 0, got {e}"));
    }
    if !(s > -1.0) {
        return invalid(format!("arcsin_s needs s > -1, got {s}"));
    }
    if e == 0.0 {
        return Ok(PI / 2.0);
    }
    // t = cos(phi): integrand r^{1+2s}, r = sin(phi) / sqrt(e + sin^2(phi))
    let p = 1.0 + 2.0 * s;
    let r = |phi: f64| {
        let sn = phi.sin();
        sn / (e + sn * sn).sqrt()
    };
    let v = if p >= 0.0 {
        integrate(|phi| r(phi).powf(p), 0.0, PI / 2.0, 1e-15, 1e-14, 4000).value
    } else {
        // phi = (pi/2) v^k flattens the integrable singularity at phi = 0
        let k = 1.0 / (2.0 + 2.0 * s);
        let h = PI / 2.0;
        integrate(
            |v: f64| {
                if v == 0.0 {
                    return 0.0;
                }
                let phi = h * v.powf(k);
                r(phi).powf(p) * h * k * v.powf(k - 1.0)
            },
            0.0,
            1.0,
            1e-15,
            1e-14,
            4000,
        )
        .value
    };
    Ok(v)
}

/// `K_s(x)` for `x > 0`, from the cosine integral
/// `K_s(x) = Gamma(s+1/2) (2/x)^s / sqrt(pi) int_0^oo cos(x u) (1+u^2)^{-s-1/2} du`.
pub fn bessel_k(s: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return invalid(format!("bessel_k needs x > 0, got {x}"));
    }
    let s = s.abs();
    if s > 5.0 {
        return invalid(format!("bessel_k supports |s| <= 5, got {s}"));
    }
    if x > 700.0 {
        return Ok(0.0);
    }
    let pre = gamma(s + 0.5) * (2.0 / x).powf(s) / SQRT_PI;
    Ok(pre * cosine_transform(|u| (1.0 + u * u).powf(-s - 0.5), x))
}

/// `K_s(x) = int_0^oo e^{-x cosh u} cosh(s u) du` by the trapezoid rule, which
/// converges geometrically for this integrand. Used inside the Bessel profiles.
fn bessel_k_cosh(s: f64, x: f64) -> f64 {
    if x > 700.0 {
        return 0.0;
    }
    const H: f64 = 0.125;
    let upper = (1.0 + 760.0 / x).acosh();
    let n = (upper / H).ceil() as usize;
    let mut acc = 0.5 * (-x).exp();
    for k in 1..=n {
        let u = k as f64 * H;
        acc += (-x * u.cosh()).exp() * (s * u).cosh();
    }
    acc * H
}

/// `int_0^oo cos(x u) g(u) du` for slowly decaying monotone `g`, by summing
/// the half-period pieces and extrapolating with Wynn's epsilon.
fn cosine_transform<G: Fn(f64) -> f64>(g: G, x: f64) -> f64 {
    let f = |v: f64| v.cos() * g(v / x);
    let mut partial = Vec::with_capacity(64);
    let mut acc = integrate(&f, 0.0, PI / 2.0, 1e-17, 1e-15, 400).value;
    partial.push(acc);
    let scale = acc.abs();
    let mut last_est = f64::NAN;
    let mut stable = 0;
    for k in 1..4000 {
        let a = (k as f64 - 0.5) * PI;
        let piece = integrate(&f, a, a + PI, 1e-17, 1e-15, 400).value;
        acc += piece;
        partial.push(acc);
        if partial.len() >= 6 {
            let window = &partial[partial.len().saturating_sub(20)..];
            let (est, _) = wynn_epsilon(window);
            if (est - last_est).abs() <= 1e-15 * est.abs() + 1e-17 * scale {
                stable += 1;
                if stable >= 2 {
                    return est / x;
                }
            } else {
                stable = 0;
            }
            last_est = est;
        }
    }
    last_est / x
}

fn bernoulli_poly(k: u32, x: f64) -> f64 {
    match k {
        1 => x - 0.5,
        2 => x * x - x + 1.0 / 6.0,
        3 => x * x * x - 1.5 * x * x + 0.5 * x,
        4 => x.powi(4) - 2.0 * x.powi(3) + x * x - 1.0 / 30.0,
        5 => x.powi(5) - 2.5 * x.powi(4) + 5.0 / 3.0 * x.powi(3) - x / 6.0,
        6 => x.powi(6) - 3.0 * x.powi(5) + 2.5 * x.powi(4) - 0.5 * x * x + 1.0 / 42.0,
        _ => unreachable!("only low Bernoulli polynomials are used"),
    }
}

/// `sum_{n>=1} cos(2 pi n x) / n^{2j}` via Bernoulli polynomials.
fn cos_zeta(j: u32, x: f64) -> f64 {
    let fx = x - x.floor();
    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
    let fact: f64 = (1..=2 * j).map(|i| i as f64).product();
    sign * (2.0 * PI).powi(2 * j as i32) * bernoulli_poly(2 * j, fx) / (2.0 * fact)
}

/// Number of subtracted asymptotic terms in the Bessel series.
const ASYM_TERMS: u32 = 3;

/// `A_s(c) = int_0^1 (1-t^2)^{s/2} K_s(c sqrt(1-t^2)) dt`.
pub fn bessel_profile(s: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return invalid("bessel_profile needs c > 0");
    }
    // t = cos(phi); K_s underflows beyond c sin(phi) ~ 45
    let upper = if c > 45.0 { (45.0 / c).asin() } else { PI / 2.0 };
    let r = integrate(
        |phi: f64| {
            let w = phi.sin();
            if w == 0.0 {
                return 0.0;
            }
            w.powf(s + 1.0) * bessel_k_cosh(s, c * w)
        },
        0.0,
        upper,
        1e-16,
        1e-13,
        2000,
    );
    Ok(r.value)
}

/// `d/dc A_0(c) = -int_0^{pi/2} sin^2(phi) K_1(c sin phi) dphi`.
fn bessel_profile0_deriv(c: f64) -> f64 {
    let upper = if c > 45.0 { (45.0 / c).asin() } else { PI / 2.0 };
    -integrate(
        |phi: f64| {
            let w = phi.sin();
            if w == 0.0 {
                return 0.0;
            }
            w * w * bessel_k_cosh(1.0, c * w)
        },
        0.0,
        upper,
        1e-16,
        1e-13,
        2000,
    )
    .value
}

/// Leading coefficients `(2k)! Gamma(s+k+1) / k!` of the large-`c` expansion
/// `(c/2)^s A_s(c) ~ sum_k coef_k c^{-2-2k}`.
fn asym_coef(s: f64, k: u32) -> f64 {
    let f2k: f64 = (1..=2 * k).map(|i| i as f64).product();
    let fk: f64 = (1..=k).map(|i| i as f64).product();
    f2k * gamma(s + k as f64 + 1.0) / fk
}

/// Number of Bessel terms so that the neglected remainder is below `tol`.
fn bessel_terms(s: f64, y: f64, tol: f64) -> usize {
    let c1 = 2.0 * PI * y;
    let mut n = (45.0 / c1).ceil().max(4.0) as usize;
    let a = asym_coef(s, ASYM_TERMS) / c1.powi(2 + 2 * ASYM_TERMS as i32);
    while a / ((2 * ASYM_TERMS + 1) as f64 * (n as f64).powi(2 * ASYM_TERMS as i32 + 1)) > tol {
        n += 1;
    }
    n
}

fn check_point(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() {
        return invalid("point must lie in the upper half plane");
    }
    Ok(())
}

/// Right hand side of the Fourier expansion of `sum_l arcsin_s(y / |z + l|)`
/// for `s > 0`: the constant term `y sqrt(pi) Gamma(s) / Gamma(s+1/2)` plus the
/// Bessel series.
pub fn periodized_arcsin_fourier(s: f64, z: Complex64) -> Result<f64> {
    check_point(z)?;
    if !(s > 0.0) {
        return invalid("the periodized arcsine needs s > 0");
    }
    let pole = z.im * SQRT_PI * gamma(s) / gamma(s + 0.5);
    Ok(pole + bessel_series(s, z)?)
}

/// `2 y sqrt(pi) / Gamma(s+1/2) sum_{n != 0} (pi |n| y)^s A_s(2 pi |n| y) cos(2 pi n x)`.
fn bessel_series(s: f64, z: Complex64) -> Result<f64> {
    // the series is even and 1-periodic in x; fold so that x, -x, x+1 share one evaluation
    let fx = z.re - z.re.floor();
    let (x, y) = (fx.min(1.0 - fx), z.im);
    let c1 = 2.0 * PI * y;
    let n_max = bessel_terms(s, y, 1e-14);
    let mut rem = 0.0;
    for n in 1..=n_max {
        let nf = n as f64;
        let c = c1 * nf;
        let mut v = (PI * nf * y).powf(s) * bessel_profile(s, c)?;
        for k in 0..ASYM_TERMS {
            v -= asym_coef(s, k) / c.powi(2 + 2 * k as i32);
        }
        rem += (2.0 * PI * nf * x).cos() * v;
    }
    let mut asym = 0.0;
    for k in 0..ASYM_TERMS {
        asym += asym_coef(s, k) / c1.powi(2 + 2 * k as i32) * cos_zeta(k + 1, x);
    }
    Ok(2.0 * y * SQRT_PI / gamma(s + 0.5) * 2.0 * (rem + asym))
}

/// `script_F(z) = 4y sum_{n>=1} cos(2 pi n x) int_0^1 K_0(2 pi n y sqrt(1-t^2)) dt`.
pub fn script_f(z: Complex64) -> Result<f64> {
    check_point(z)?;
    bessel_series(0.0, z)
}

/// `d/dz script_F`, by term-wise differentiation of the Bessel series.
/// On the lines `x` in `Z` it returns the mean of the one-sided limits.
pub fn script_f_prime(z: Complex64) -> Result<Complex64> {
    check_point(z)?;
    let (x, y) = (z.re, z.im);
    let c1 = 2.0 * PI * y;
    let n_max = bessel_terms(0.0, y, 1e-14) + 4;
    let (mut dx, mut dy) = (0.0, 0.0);
    for n in 1..=n_max {
        let nf = n as f64;
        let c = c1 * nf;
        let mut rho = bessel_profile(0.0, c)?;
        let mut drho = bessel_profile0_deriv(c);
        for k in 0..ASYM_TERMS {
            let a = asym_coef(0.0, k);
            rho -= a / c.powi(2 + 2 * k as i32);
            drho += a * (2 + 2 * k) as f64 / c.powi(3 + 2 * k as i32);
        }
        let arg = 2.0 * PI * nf * x;
        dx -= 8.0 * PI * y * nf * arg.sin() * rho;
        dy += 4.0 * arg.cos() * (rho + c * drho);
    }
    let fx = x - x.floor();
    let b1 = if fx == 0.0 { 0.0 } else { bernoulli_poly(1, fx) };
    dx += 2.0 * b1 / y - 2.0 * bernoulli_poly(3, fx) / (3.0 * y.powi(3)) + 2.0 * bernoulli_poly(5, fx) / (5.0 * y.powi(5));
    dy += -bernoulli_poly(2, fx) / (y * y) + bernoulli_poly(4, fx) / (2.0 * y.powi(4)) - bernoulli_poly(6, fx) / (3.0 * y.powi(6));
    Ok(Complex64::new(0.5 * dx, -0.5 * dy))
}

/// `L(1, chi_Delta)` for a fundamental discriminant `Delta != 1`, by the finite
/// log-sine (real) or linear (imaginary) formula.
pub fn dirichlet_l1(delta: i64) -> Result<f64> {
    if delta == 1 || !is_fundamental(delta) {
        return invalid(format!("{delta} is not a nontrivial fundamental discriminant"));
    }
    let n = delta.abs();
    if delta > 0 {
        let s: f64 = (1..n)
            .map(|b| kronecker(delta, b) as f64 * (PI * b as f64 / n as f64).sin().ln())
            .sum();
        Ok(-s / (n as f64).sqrt())
    } else {
        let s: f64 = (1..n).map(|b| kronecker(delta, b) as f64 * b as f64).sum();
        Ok(-PI * s / (n as f64).powf(1.5))
    }
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_pieces() {
        assert!((beta_half_c(0.0).unwrap() - 2.0).abs() < 1e-14);
        let s = beta_half(1.0).unwrap() + beta_half_c(1.0).unwrap();
        assert!((s - SQRT_PI).abs() < 1e-12);
        assert!(beta_half(0.0).is_err());
        // int_0^1 e^{t} t^{-1/2} dt = sqrt(pi) erfi(1)
        assert!((beta_half_c(-1.0).unwrap() - 2.925303491814363).abs() < 1e-12);
    }

    #[test]
    fn arcsin_zero_is_arcsine() {
        for a in [1.0f64, 1.0001, 2.0, 4.0, 10.0, 1e6] {
            let got = arcsin_s(a, 0.0).unwrap();
            assert!((got - (1.0 / a.sqrt()).asin()).abs() < 1e-12, "a={a}");
        }
        assert!(arcsin_s(0.5, 0.0).is_err());
        assert!(arcsin_s(2.0, -1.0).is_err());
    }

    #[test]
    fn arcsin_below_minus_half() {
        // at s = -3/4 the integrand is (1-t^2)^{-3/4} (a - t^2)^{1/4}
        let a = 3.0f64;
        let direct = integrate(
            |th: f64| {
                let t = th.sin();
                (a - t * t).powf(0.25) * th.cos().powf(-0.5)
            },
            0.0,
            PI / 2.0,
            1e-13,
            0.0,
            20000,
        )
        .value;
        let got = arcsin_s(a, -0.75).unwrap();
        assert!((got - direct).abs() < 1e-8, "{got} {direct}");
    }

    #[test]
    fn bessel_half_order() {
        for x in [0.1f64, 1.0, 2.0, 5.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!((bessel_k(0.5, x).unwrap() - exact).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn bessel_representations_agree() {
        for s in [0.0f64, 0.3, 1.0, 1.5] {
            for x in [0.01f64, 0.2, 1.0, 3.0, 12.0, 40.0] {
                let a = bessel_k(s, x).unwrap();
                let b = bessel_k_cosh(s, x);
                assert!((a - b).abs() <= 1e-12, "s={s} x={x}: {a} {b}");
            }
        }
        // mpmath besselk at 30 digits
        let frozen = [
            (0.0, 0.01, 4.72124473016109),
            (0.0, 1.0, 0.421024438240708),
            (0.0, 12.0, 2.20082539731149e-6),
            (0.3, 0.2, 1.93460340449453),
            (1.0, 0.01, 99.9738941182962),
            (1.0, 40.0, 8.49713195486104e-19),
            (1.5, 3.0, 0.0480346468423528),
        ];
        for (s, x, v) in frozen {
            assert!((bessel_k_cosh(s, x) - v).abs() <= 1e-13 * v, "s={s} x={x}");
        }
    }

    #[test]
    fn bessel_small_argument() {
        let x = 1e-4f64;
        let euler = 0.5772156649015329;
        assert!((bessel_k(0.0, x).unwrap() - (-(x / 2.0).ln() - euler)).abs() < 1e-3);
    }

    #[test]
    fn l_values() {
        let l5 = dirichlet_l1(5).unwrap();
        assert!((l5 - ((3.0 + 5f64.sqrt()) / 2.0).ln() / 5f64.sqrt()).abs() < 1e-14);
        // L(1, chi_{-4}) = pi / 4
        assert!((dirichlet_l1(-4).unwrap() - PI / 4.0).abs() < 1e-14);
        // L(1, chi_{-3}) = pi / (3 sqrt 3)
        assert!((dirichlet_l1(-3).unwrap() - PI / (3.0 * 3f64.sqrt())).abs() < 1e-14);
        assert!(dirichlet_l1(1).is_err());
        assert!(dirichlet_l1(9).is_err());
    }

    #[test]
    fn script_f_symmetries() {
        let z = Complex64::new(0.3, 0.8);
        let a = script_f(z).unwrap();
        let b = script_f(Complex64::new(-0.3, 0.8)).unwrap();
        let c = script_f(Complex64::new(1.3, 0.8)).unwrap();
        assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
    }
}
