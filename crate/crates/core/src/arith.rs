//! Integer arithmetic: Kronecker symbols, discriminants, divisors and the
//! Pell equation `t^2 - d u^2 = 4`.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Result};

const KRON_TWO: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];

/// Kronecker symbol `(n / m)`, defined for all integers.
pub fn kronecker(n: i64, m: i64) -> i32 {
    let mut a = n as i128;
    let mut b = m as i128;
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let v = b.trailing_zeros();
    b >>= v;
    let mut k = if v % 2 == 1 {
        KRON_TWO[(a & 7) as usize]
    } else {
        1
    };
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    loop {
        if a == 0 {
            return if b > 1 { 0 } else { k };
        }
        let v = a.trailing_zeros();
        a >>= v;
        if v % 2 == 1 {
            k *= KRON_TWO[(b & 7) as usize];
        }
        if a & b & 2 != 0 {
            k = -k;
        }
        let r = a.abs();
        a = b % r;
        b = r;
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

/// Floor of the square root of a non-negative integer.
pub fn isqrt(n: i64) -> i64 {
    assert!(n >= 0, "isqrt of negative number");
    (n as u64).sqrt() as i64
}

pub fn is_square(n: i64) -> bool {
    n >= 0 && {
        let s = isqrt(n);
        s * s == n
    }
}

pub fn is_squarefree(n: i64) -> bool {
    let mut n = n.unsigned_abs();
    if n == 0 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// True when `d` is a discriminant, i.e. `d = 0, 1 mod 4`.
pub fn is_discriminant(d: i64) -> bool {
    d.rem_euclid(4) <= 1
}

/// Fundamental discriminants. `d = 1` counts as the trivial one.
pub fn is_fundamental(d: i64) -> bool {
    match d.rem_euclid(4) {
        1 => is_squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m)
        }
        _ => false,
    }
}

/// A discriminant together with its classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Discriminant(i64);

impl Discriminant {
    pub fn new(d: i64) -> Result<Self> {
        if d == 0 || !is_discriminant(d) {
            return invalid(format!("{d} is not a nonzero discriminant"));
        }
        Ok(Discriminant(d))
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn is_fundamental(self) -> bool {
        is_fundamental(self.0)
    }

    /// `d = 1`: fundamental, but useless for twisting.
    pub fn is_trivial(self) -> bool {
        self.0 == 1
    }

    pub fn is_square(self) -> bool {
        is_square(self.0)
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Largest `f` with `d / f^2` still a discriminant.
    pub fn conductor(self) -> i64 {
        let mut f = 1;
        let mut k = 2;
        while k * k <= self.0.abs() {
            if self.0 % (k * k) == 0 && is_discriminant(self.0 / (k * k)) {
                f = k;
            }
            k += 1;
        }
        f
    }
}

/// Positive divisors of `n > 0`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    assert!(n > 0, "divisors of zero");
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

fn bigsqrt_floor(n: &BigInt) -> BigInt {
    n.sqrt()
}

/// `floor((p + sqrt(d)) / q)` for non-square `d > 0` and `q != 0`.
fn floor_quadratic(p: &BigInt, d: &BigInt, q: &BigInt) -> BigInt {
    let s = bigsqrt_floor(d);
    if q.is_positive() {
        (p + &s).div_floor(q)
    } else {
        let qa = -q;
        -((p + &s).div_floor(&qa) + BigInt::one())
    }
}

/// Minimal solution `(t, u)`, `u > 0`, of `t^2 - d u^2 = 4`.
pub fn pell_minimal(d: i64) -> Result<(BigInt, BigInt)> {
    if d <= 0 {
        return invalid(format!("Pell equation needs d > 0, got {d}"));
    }
    if is_square(d) {
        return invalid(format!("Pell equation needs non-square d, got {d}"));
    }
    let db = BigInt::from(d);
    match d.rem_euclid(4) {
        1 => {
            // continued fraction of (1 + sqrt d) / 2
            let (p, q, norm) = first_unit_convergent(&db, 1, 2, |p, q| {
                p * p - p * q + q * q * BigInt::from((1 - d) / 4)
            });
            let t = BigInt::from(2) * &p - &q;
            let u = q;
            Ok(square_if_negative(t, u, norm, &db))
        }
        r => {
            let n = if r == 0 { d / 4 } else { d };
            let nb = BigInt::from(n);
            let (p, q, norm) = first_unit_convergent(&nb, 0, 1, |p, q| p * p - &nb * q * q);
            // x^2 - n y^2 = +-1
            let (x, y) = if norm == -1 {
                (&p * &p + &nb * &q * &q, BigInt::from(2) * &p * &q)
            } else {
                (p, q)
            };
            if r == 0 {
                Ok((BigInt::from(2) * x, y))
            } else {
                Ok((BigInt::from(2) * x, BigInt::from(2) * y))
            }
        }
    }
}

fn square_if_negative(t: BigInt, u: BigInt, norm: i32, d: &BigInt) -> (BigInt, BigInt) {
    if norm == 1 {
        (t, u)
    } else {
        let t2 = (&t * &t + d * &u * &u) / 2;
        let u2 = &t * &u;
        (t2, u2)
    }
}

/// Walks the convergents of `(p0 + sqrt d) / q0` until `norm(p, q) = +-1`.
fn first_unit_convergent(
    d: &BigInt,
    p0: i64,
    q0: i64,
    norm: impl Fn(&BigInt, &BigInt) -> BigInt,
) -> (BigInt, BigInt, i32) {
    let mut pp = BigInt::from(p0);
    let mut qq = BigInt::from(q0);
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    loop {
        let a = floor_quadratic(&pp, d, &qq);
        let h_new = &a * &h + &h_prev;
        let k_new = &a * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_new);
        k_prev = std::mem::replace(&mut k, k_new);
        let n = norm(&h, &k);
        if n.is_one() {
            return (h, k, 1);
        }
        if n == -BigInt::one() {
            return (h, k, -1);
        }
        let p_next = &a * &qq - &pp;
        let q_next = (d - &p_next * &p_next) / &qq;
        pp = p_next;
        qq = q_next;
    }
}
