//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use modlift::arith::{divisors, is_square};
use modlift::qforms::{QuadForm, Sl2, BOUNDARY_EPS};
use modlift::specfun::{arcsin_s_shifted, gamma_fn};
use num_complex::Complex64;
use statrs::function::beta::{beta, beta_reg};

pub fn word(bits: &[bool]) -> Sl2 {
    bits.iter().fold(Sl2::IDENTITY, |m, &s| m.mul(if s { &Sl2::S } else { &Sl2::T }))
}

pub const DELTAS: [i64; 8] = [5, 8, 12, 13, -3, -4, -7, -8];
pub const COFACTORS: [i64; 10] = [1, 5, -3, -4, 8, -7, 12, 13, -20, 21];

/// A form `[a, b, c]` of discriminant `delta * d2` with `a` a divisor of `(b^2 - D)/4`.
pub fn random_form(delta: i64, d2: i64, b: i64, k: usize, neg: bool) -> Option<QuadForm> {
    let d = delta * d2;
    if is_square(d) || (b - d).rem_euclid(2) != 0 {
        return None;
    }
    let n = (b * b - d) / 4;
    if n == 0 {
        return None;
    }
    let divs = divisors(n.unsigned_abs());
    let a = divs[k % divs.len()] as i64 * if neg { -1 } else { 1 };
    Some(QuadForm::new(a, b, n / a))
}

/// Scan of the box `a <= 30`, `|b|, |c| <= 70`; for the test grids every
/// enclosing form lies well inside it.
pub fn brute_containing(d: i64, z: Complex64) -> Vec<QuadForm> {
    let mut out = Vec::new();
    for a in 1..=30i64 {
        for b in -70..=70i64 {
            for c in -70..=70i64 {
                if b * b - 4 * a * c != d {
                    continue;
                }
                let q = QuadForm::new(a, b, c);
                if q.height_value(z) < -BOUNDARY_EPS {
                    assert!(a < 30 && b.abs() < 70 && c.abs() < 70, "{q} touches the box");
                    out.push(q);
                }
            }
        }
    }
    out.sort();
    out
}

pub fn containment_grid() -> Vec<Complex64> {
    let mut grid = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            grid.push(Complex64::new(-0.9 + 0.43 * i as f64, 0.13 + 0.31 * j as f64));
        }
    }
    grid
}

pub fn incomplete_beta_form(a: f64, s: f64) -> f64 {
    let (p, q) = (s + 0.5, 0.5);
    PI.sqrt() * gamma_fn(s + 1.0) / (2.0 * gamma_fn(s + 0.5)) * beta_reg(p, q, 1.0 / a) * beta(p, q)
}

/// Sum of `arcsin_1(y / |z + l|)` over all `l`, directly for `|l| <= L` and by the
/// leading decay `(2/3)(y/l)^3` beyond.
pub fn periodized_arcsin_one(z: Complex64) -> f64 {
    let (x, y) = (z.re, z.im);
    let l_max = 10_000i64;
    let mut s = 0.0;
    for l in -l_max..=l_max {
        let v = x + l as f64;
        s += arcsin_s_shifted(v * v / (y * y), 1.0).unwrap();
    }
    let lf = l_max as f64;
    let zeta3_tail = 1.0 / (2.0 * lf * lf) - 1.0 / (2.0 * lf.powi(3));
    s + 2.0 * (2.0 / 3.0) * y.powi(3) * zeta3_tail
}

pub const SERIES_POINTS: [(f64, f64); 10] = [
    (0.0, 0.5),
    (0.3, 0.8),
    (0.5, 1.0),
    (0.1, 0.25),
    (0.77, 1.4),
    (0.2, 2.0),
    (0.45, 0.6),
    (0.05, 3.0),
    (0.9, 0.35),
    (0.6, 1.1),
];
