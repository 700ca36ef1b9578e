//! Binary quadratic forms `[a, b, c] = a x^2 + b x y + c y^2`, their
//! reduction, class representatives, genus characters and geodesics.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::arith::{self, gcd, is_square, isqrt, kronecker};
use crate::error::{invalid, Result};

/// Points with `|a|z|^2 + b x + c|` below this are treated as lying on the geodesic.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// An element of `SL_2(Z)`, `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sl2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Sl2 {
    pub const IDENTITY: Sl2 = Sl2 { a: 1, b: 0, c: 0, d: 1 };
    pub const S: Sl2 = Sl2 { a: 0, b: -1, c: 1, d: 0 };
    pub const T: Sl2 = Sl2 { a: 1, b: 1, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a as i128 * d as i128 - b as i128 * c as i128 != 1 {
            return invalid(format!("[[{a},{b}],[{c},{d}]] has determinant != 1"));
        }
        Ok(Sl2 { a, b, c, d })
    }

    pub fn t_pow(k: i64) -> Sl2 {
        Sl2 { a: 1, b: k, c: 0, d: 1 }
    }

    pub fn mul(&self, o: &Sl2) -> Sl2 {
        Sl2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Sl2 {
        Sl2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Moebius action on the upper half plane.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let num = z * self.a as f64 + self.b as f64;
        let den = z * self.c as f64 + self.d as f64;
        num / den
    }

    /// The automorphy factor `c z + d`.
    pub fn factor(&self, z: Complex64) -> Complex64 {
        z * self.c as f64 + self.d as f64
    }
}

/// `a x^2 + b x y + c y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn content(&self) -> i64 {
        gcd(gcd(self.a, self.b), self.c).abs()
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    pub fn neg(&self) -> QuadForm {
        QuadForm::new(-self.a, -self.b, -self.c)
    }

    pub fn eval(&self, x: i64, y: i64) -> i128 {
        let (x, y) = (x as i128, y as i128);
        self.a as i128 * x * x + self.b as i128 * x * y + self.c as i128 * y * y
    }

    /// `Q(z, 1)`.
    pub fn eval_at(&self, z: Complex64) -> Complex64 {
        (z * self.a as f64 + self.b as f64) * z + self.c as f64
    }

    /// `a|z|^2 + b x + c`; negative inside the geodesic when `a > 0`.
    pub fn height_value(&self, z: Complex64) -> f64 {
        self.a as f64 * z.norm_sqr() + self.b as f64 * z.re + self.c as f64
    }

    /// The form `Q(alpha x + beta y, gamma x + delta y)`.
    pub fn act(&self, m: &Sl2) -> QuadForm {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        let (al, be, ga, de) = (m.a as i128, m.b as i128, m.c as i128, m.d as i128);
        let na = a * al * al + b * al * ga + c * ga * ga;
        let nb = 2 * a * al * be + b * (al * de + be * ga) + 2 * c * ga * de;
        let nc = a * be * be + b * be * de + c * de * de;
        QuadForm::new(na as i64, nb as i64, nc as i64)
    }
}

impl std::fmt::Display for QuadForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

fn check_disc(d: i64) -> Result<()> {
    if !arith::is_discriminant(d) || d == 0 {
        return invalid(format!("{d} is not a nonzero discriminant"));
    }
    Ok(())
}

/// Reduces a definite form. Returns `(R, M)` with `Q.act(M) = R`.
pub fn reduce_definite(q: &QuadForm) -> Result<(QuadForm, Sl2)> {
    if q.disc() >= 0 {
        return invalid(format!("{q} is not definite"));
    }
    if q.a < 0 {
        let (r, m) = reduce_definite(&q.neg())?;
        return Ok((r.neg(), m));
    }
    let mut cur = *q;
    let mut m = Sl2::IDENTITY;
    loop {
        let k = Integer::div_floor(&(cur.a - cur.b), &(2 * cur.a));
        if k != 0 {
            let t = Sl2::t_pow(k);
            cur = cur.act(&t);
            m = m.mul(&t);
        }
        if cur.a > cur.c || (cur.a == cur.c && cur.b < 0) {
            cur = cur.act(&Sl2::S);
            m = m.mul(&Sl2::S);
            continue;
        }
        return Ok((cur, m));
    }
}

pub fn is_reduced_definite(q: &QuadForm) -> bool {
    q.a > 0
        && q.b.abs() <= q.a
        && q.a <= q.c
        && !(q.b < 0 && (q.b.abs() == q.a || q.a == q.c))
}

/// Gauss reduction for indefinite forms: `0 < b < sqrt D`, `sqrt D - b < 2|a| < sqrt D + b`.
pub fn is_reduced_indefinite(q: &QuadForm) -> bool {
    let d = q.disc() as i128;
    let (a, b) = ((q.a as i128).abs(), q.b as i128);
    if a == 0 || b <= 0 || b * b >= d {
        return false;
    }
    let lo = 2 * a + b;
    let hi = 2 * a - b;
    d < lo * lo && (hi <= 0 || hi * hi < d)
}

/// One step of the reduction operator; returns the new form and the matrix used.
pub fn rho(q: &QuadForm) -> (QuadForm, Sl2) {
    let d = q.disc();
    let c = q.c;
    let m = 2 * c.abs();
    let s = isqrt(d);
    let bp = if c.abs() as i128 * c.abs() as i128 <= d as i128 {
        // b' in (sqrt D - 2|c|, sqrt D)
        s - (s + q.b).rem_euclid(m)
    } else {
        // b' in (-|c|, |c|]
        let r = (-q.b).rem_euclid(m);
        if r > c.abs() {
            r - m
        } else {
            r
        }
    };
    let t = (q.b + bp) / (2 * c);
    let n = Sl2 { a: 0, b: -1, c: 1, d: t };
    let out = q.act(&n);
    debug_assert_eq!(out.b, bp);
    (out, n)
}

/// Reduces an indefinite form of non-square discriminant. Returns `(R, M)` with `Q.act(M) = R`.
pub fn reduce_indefinite(q: &QuadForm) -> Result<(QuadForm, Sl2)> {
    let d = q.disc();
    if d <= 0 || is_square(d) {
        return invalid(format!("{q} does not have a positive non-square discriminant"));
    }
    let mut cur = *q;
    let mut m = Sl2::IDENTITY;
    if cur.c == 0 {
        unreachable!("c = 0 forces a square discriminant");
    }
    for _ in 0..10_000 {
        if is_reduced_indefinite(&cur) {
            return Ok((cur, m));
        }
        let (n, step) = rho(&cur);
        cur = n;
        m = m.mul(&step);
    }
    invalid(format!("reduction of {q} did not terminate"))
}

/// The reduced forms in the cycle of a reduced indefinite form.
pub fn cycle_of(q: &QuadForm) -> Vec<QuadForm> {
    let mut out = vec![*q];
    let mut cur = rho(q).0;
    while cur != *q {
        out.push(cur);
        cur = rho(&cur).0;
    }
    out
}

fn reduced_indefinite_forms(d: i64) -> Vec<QuadForm> {
    let s = isqrt(d);
    let mut out = Vec::new();
    for b in 1..=s {
        if (b * b - d) % 4 != 0 {
            continue;
        }
        let ac = (b * b - d) / 4; // negative
        for a in 1..=ac.abs() {
            if ac % a != 0 {
                continue;
            }
            for sa in [a, -a] {
                let q = QuadForm::new(sa, b, ac / sa);
                if is_reduced_indefinite(&q) {
                    out.push(q);
                }
            }
        }
    }
    out.sort();
    out
}

/// Representatives of the `SL_2(Z)` classes of all forms (primitive or not)
/// of discriminant `d`.
///
/// For `d < 0`, the reduced positive definite forms. For `d > 0`, one form with
/// `a > 0` per cycle of reduced forms, namely the smallest in the cycle.
pub fn class_representatives(d: i64) -> Result<Vec<QuadForm>> {
    check_disc(d)?;
    if d < 0 {
        let mut out = Vec::new();
        let amax = isqrt(-d / 3);
        for a in 1..=amax {
            for b in -a + 1..=a {
                let num = b * b - d;
                if num % (4 * a) != 0 {
                    continue;
                }
                let q = QuadForm::new(a, b, num / (4 * a));
                if is_reduced_definite(&q) {
                    out.push(q);
                }
            }
        }
        out.sort();
        return Ok(out);
    }
    if is_square(d) {
        return invalid(format!("square discriminant {d} has no geodesic classes"));
    }
    let mut seen = BTreeSet::new();
    let mut reps = Vec::new();
    for q in reduced_indefinite_forms(d) {
        if seen.contains(&q) {
            continue;
        }
        let cyc = cycle_of(&q);
        for f in &cyc {
            seen.insert(*f);
        }
        let rep = cyc.iter().filter(|f| f.a > 0).min().copied().expect("cycles alternate in sign");
        reps.push(rep);
    }
    reps.sort();
    Ok(reps)
}

/// Primitive representatives only.
pub fn primitive_class_representatives(d: i64) -> Result<Vec<QuadForm>> {
    Ok(class_representatives(d)?.into_iter().filter(|q| q.is_primitive()).collect())
}

/// The canonical representative of the class of `q`, as returned by
/// [`class_representatives`].
pub fn class_of(q: &QuadForm) -> Result<QuadForm> {
    let d = q.disc();
    if d < 0 {
        return Ok(reduce_definite(q)?.0);
    }
    let (r, _) = reduce_indefinite(q)?;
    Ok(cycle_of(&r).into_iter().filter(|f| f.a > 0).min().expect("cycles alternate in sign"))
}

/// Order of the image in `PSL_2(Z)` of the stabilizer of a definite form.
pub fn stabilizer_order(q: &QuadForm) -> Result<u32> {
    let (r, _) = reduce_definite(q)?;
    Ok(if r.a == r.b && r.b == r.c {
        3
    } else if r.b == 0 && r.a == r.c {
        2
    } else {
        1
    })
}

/// The CM point `(-b + i sqrt|D|) / 2a` of a positive definite form.
pub fn heegner_point(q: &QuadForm) -> Result<Complex64> {
    let d = q.disc();
    if d >= 0 || q.a <= 0 {
        return invalid(format!("{q} is not positive definite"));
    }
    Ok(Complex64::new(-q.b as f64, (-d as f64).sqrt()) / (2.0 * q.a as f64))
}

/// The generalized genus character `chi_delta(Q)`.
pub fn genus_character(delta: i64, q: &QuadForm) -> Result<i32> {
    let d = q.disc();
    if delta == 0 || d % delta != 0 || !arith::is_discriminant(d / delta) || !arith::is_discriminant(delta) {
        return invalid(format!("{delta} and {}/{delta} must both be discriminants", d));
    }
    if gcd(q.content(), delta) != 1 {
        return Ok(0);
    }
    for r in 1..200i64 {
        for x in -r..=r {
            for y in [-r, r] {
                if let Some(k) = represented_symbol(delta, q, x, y) {
                    return Ok(k);
                }
            }
            if x.abs() < r {
                if let Some(k) = represented_symbol(delta, q, r, x) {
                    return Ok(k);
                }
            }
        }
    }
    invalid(format!("no value of {q} coprime to {delta} found"))
}

fn represented_symbol(delta: i64, q: &QuadForm, x: i64, y: i64) -> Option<i32> {
    if gcd(x, y) != 1 {
        return None;
    }
    let n = q.eval(x, y);
    if n == 0 {
        return None;
    }
    let n = i64::try_from(n).ok()?;
    if gcd(n, delta) != 1 {
        return None;
    }
    Some(kronecker(delta, n))
}

/// Endpoints of the geodesic of a form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Endpoints {
    /// A semicircle from `w = (-b + sqrt D) / 2a` to `w' = (-b - sqrt D) / 2a`.
    Semicircle { w: f64, w_prime: f64 },
    /// `a = 0`: the vertical line from `-c/b` to infinity.
    Vertical { x: f64 },
}

/// The closed geodesic attached to an indefinite form.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicClass {
    pub form: QuadForm,
    pub disc: i64,
    pub endpoints: Endpoints,
    /// Minimal `(t, u)` of `t^2 - (D/g^2) u^2 = 4`, `g` the content.
    pub pell: (BigInt, BigInt),
    /// `[[(t - b0 u)/2, -c0 u], [a0 u, (t + b0 u)/2]]`, with `Q = g Q0`.
    pub automorph: [[BigInt; 2]; 2],
    /// Hyperbolic length of the closed geodesic, `2 log((t + u sqrt(D/g^2)) / 2)`.
    pub length: f64,
}

pub fn endpoints(q: &QuadForm) -> Result<Endpoints> {
    let d = q.disc();
    if d <= 0 {
        return invalid(format!("{q} is not indefinite"));
    }
    if q.a == 0 {
        return Ok(Endpoints::Vertical { x: -(q.c as f64) / q.b as f64 });
    }
    let s = (d as f64).sqrt();
    let a2 = 2.0 * q.a as f64;
    Ok(Endpoints::Semicircle { w: (-q.b as f64 + s) / a2, w_prime: (-q.b as f64 - s) / a2 })
}

pub fn geodesic_data(q: &QuadForm) -> Result<GeodesicClass> {
    let d = q.disc();
    if d <= 0 || is_square(d) {
        return invalid(format!("{q} does not have a positive non-square discriminant"));
    }
    let g = q.content();
    let q0 = QuadForm::new(q.a / g, q.b / g, q.c / g);
    let d0 = q0.disc();
    let (t, u) = arith::pell_minimal(d0)?;
    let two = BigInt::from(2);
    let (a0, b0, c0) = (BigInt::from(q0.a), BigInt::from(q0.b), BigInt::from(q0.c));
    let automorph = [
        [(&t - &b0 * &u) / &two, -(&c0 * &u)],
        [&a0 * &u, (&t + &b0 * &u) / &two],
    ];
    let length = 2.0 * unit_log(&t, &u, d0);
    Ok(GeodesicClass { form: *q, disc: d, endpoints: endpoints(q)?, pell: (t, u), automorph, length })
}

/// `log((t + u sqrt d) / 2)` for large `t, u`.
pub(crate) fn unit_log(t: &BigInt, u: &BigInt, d: i64) -> f64 {
    let bits = t.bits();
    let shift = bits.saturating_sub(900);
    let tf = (t >> shift).to_f64().unwrap();
    let uf = (u >> shift).to_f64().unwrap();
    (tf + uf * (d as f64).sqrt()).ln() + shift as f64 * std::f64::consts::LN_2 - std::f64::consts::LN_2
}

/// `p_Q(z) = -(a|z|^2 + b x + c) / y`.
pub fn p_value(q: &QuadForm, z: Complex64) -> f64 {
    -q.height_value(z) / z.im
}

/// 1 on the bounded component cut out by the geodesic of `Q`, 0 elsewhere
/// (including the geodesic itself).
pub fn indicator(q: &QuadForm, z: Complex64) -> u8 {
    if q.a == 0 {
        return 0;
    }
    let v = q.height_value(z) * q.a.signum() as f64;
    u8::from(v < -BOUNDARY_EPS)
}

/// All forms of discriminant `d` with `a > 0`, `level | a`, whose geodesic
/// encloses `z`.
pub fn forms_containing(d: i64, z: Complex64, level: i64) -> Result<Vec<QuadForm>> {
    check_disc(d)?;
    if d <= 0 {
        return invalid(format!("discriminant {d} must be positive"));
    }
    if z.im <= 0.0 {
        return invalid("point must lie in the upper half plane");
    }
    if level < 1 {
        return invalid("level must be positive");
    }
    let df = d as f64;
    let mut out = Vec::new();
    let mut a = level;
    while 4.0 * (a as f64).powi(2) * z.im * z.im < df {
        let r = (df - 4.0 * (a as f64).powi(2) * z.im * z.im).sqrt();
        let centre = -2.0 * a as f64 * z.re;
        let lo = (centre - r).floor() as i64 - 1;
        let hi = (centre + r).ceil() as i64 + 1;
        for b in lo..=hi {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let q = QuadForm::new(a, b, num / (4 * a));
            if indicator(&q, z) == 1 {
                out.push(q);
            }
        }
        a += level;
    }
    Ok(out)
}

/// All forms of discriminant `d > 0` with `a > 0 > c`.
pub fn forms_s_period(d: i64) -> Result<Vec<QuadForm>> {
    check_disc(d)?;
    if d <= 0 {
        return invalid(format!("discriminant {d} must be positive"));
    }
    let mut out = Vec::new();
    let s = isqrt(d);
    for b in -s..=s {
        let num = d - b * b;
        if num <= 0 || num % 4 != 0 {
            continue;
        }
        let ac = num / 4;
        for a in arith::divisors(ac as u64) {
            let a = a as i64;
            out.push(QuadForm::new(a, b, -(ac / a)));
        }
    }
    out.sort();
    Ok(out)
}

/// Forms `Q` of discriminant `d` with `a_Q > 0 > a_{Q o M^{-1}}`, i.e. whose
/// geodesic separates infinity from `M^{-1}(infinity)`.
pub fn forms_m_period(d: i64, m: &Sl2) -> Result<Vec<QuadForm>> {
    check_disc(d)?;
    if d <= 0 || is_square(d) {
        return invalid(format!("discriminant {d} must be positive and non-square"));
    }
    let (p, r) = (m.d, -m.c); // first column of M^{-1}
    if r == 0 {
        return Ok(Vec::new());
    }
    let amax = d as i128 * (r as i128) * (r as i128) / 4;
    let mut out = Vec::new();
    let s = (d as f64).sqrt();
    let x0 = p as f64 / r as f64;
    for a in 1..=amax as i64 {
        let centre = -2.0 * a as f64 * x0;
        let lo = (centre - s).floor() as i64 - 1;
        let hi = (centre + s).ceil() as i64 + 1;
        for b in lo..=hi {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let q = QuadForm::new(a, b, num / (4 * a));
            if q.eval(p, r) < 0 {
                out.push(q);
            }
        }
    }
    Ok(out)
}
