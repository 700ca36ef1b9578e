//! Numerical checks of the identities satisfied by the lift, the modular
//! integral and the Borcherds product.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lift::{
    eval_f, eval_phi_h, eval_phi_prime_h, eval_product, verify_period_relation, verify_product_s, SeriesConfig,
};
use crate::qforms::QuadForm;
use crate::traces::{twisted_coefficient, TraceFn, TraceKey, TraceTable};

/// One line of a verification report.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(check: impl Into<String>, residual: f64, tol: f64) -> Self {
        Check { check: check.into(), residual, tol, pass: residual <= tol }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Period,
    Product,
    Jump,
    Continuity,
    TraceId,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "period" => Suite::Period,
            "product" => Suite::Product,
            "jump" => Suite::Jump,
            "continuity" => Suite::Continuity,
            "traceid" => Suite::TraceId,
            "all" => Suite::All,
            _ => return invalid(format!("unknown suite '{s}' (period, product, jump, continuity, traceid, all)")),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Period => "period",
            Suite::Product => "product",
            Suite::Jump => "jump",
            Suite::Continuity => "continuity",
            Suite::TraceId => "traceid",
            Suite::All => "all",
        })
    }
}

pub const PERIOD_POINTS: [(f64, f64); 3] = [(0.0, 1.0), (0.5, 1.5), (0.25, 2.0)];
pub const PERIOD_TOL: f64 = 1e-4;
pub const T_PHASE_TOL: f64 = 1e-8;
pub const LOG_DERIV_TOL: f64 = 1e-5;
pub const PRODUCT_S_TOL: f64 = 1e-4;
pub const CONTINUITY_TOL: f64 = 1e-4;
pub const JUMP_REL_TOL: f64 = 1e-3;
pub const TRACE_ID_TOL: f64 = 1e-5;

/// Offset from the geodesic used for two-sided limits.
pub const SIDE_EPS: f64 = 1e-6;

fn pt(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

/// Period relation of `F_Delta` under `S` at the standard points.
pub fn period_suite(deltas: &[i64], table: &TraceTable, cfg: &SeriesConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &d in deltas {
        for (x, y) in PERIOD_POINTS {
            let z = Complex64::new(x, y);
            let r = verify_period_relation(d, z, table, cfg)?;
            out.push(Check::new(format!("period delta={d} z={}", pt(z)), r, PERIOD_TOL));
        }
    }
    Ok(out)
}

/// `|Psi(z+1)/Psi(z) - e(-sqrt(Delta) tr_1(Delta))|`.
pub fn product_t_residual(delta: i64, z: Complex64, table: &TraceTable, cfg: &SeriesConfig) -> Result<f64> {
    let a = eval_product(delta, table, z + 1.0, cfg)?.log;
    let b = eval_product(delta, table, z, cfg)?.log;
    let tr1 = table.tr_one(delta)?.value;
    let phase = (-2.0 * PI * Complex64::i() * (delta as f64).sqrt() * tr1).exp();
    Ok(((a - b).exp() - phase).norm())
}

/// `|(log Psi)'(z) + 2 pi^2 i sqrt(Delta) F_Delta(z)|` with a central difference.
pub fn log_derivative_residual(delta: i64, z: Complex64, table: &TraceTable, cfg: &SeriesConfig) -> Result<f64> {
    let h = 1e-5;
    let a = eval_product(delta, table, z + h, cfg)?.log;
    let b = eval_product(delta, table, z - h, cfg)?.log;
    let f = eval_f(delta, table, z, cfg)?.value;
    let rhs = -2.0 * PI * PI * Complex64::i() * (delta as f64).sqrt() * f;
    Ok(((a - b) / (2.0 * h) - rhs).norm())
}

pub fn product_suite(delta: i64, table: &TraceTable, cfg: &SeriesConfig) -> Result<Vec<Check>> {
    let z = Complex64::new(0.0, 2.0);
    let mut out = vec![
        Check::new(format!("product T-phase delta={delta} z={}", pt(z)), product_t_residual(delta, z, table, cfg)?, T_PHASE_TOL),
        Check::new(
            format!("product log-derivative delta={delta} z={}", pt(z)),
            log_derivative_residual(delta, z, table, cfg)?,
            LOG_DERIV_TOL,
        ),
    ];
    for z in [Complex64::new(0.0, 2.0), Complex64::new(0.5, 2.0)] {
        let r = verify_product_s(delta, z, table, cfg)?;
        out.push(Check::new(format!("product S delta={delta} z={}", pt(z)), r, PRODUCT_S_TOL));
    }
    Ok(out)
}

/// Apex `(-b + i sqrt(D)) / 2a` of a form with `a > 0`.
pub fn apex(q: &QuadForm) -> Complex64 {
    Complex64::new(-q.b as f64, (q.disc() as f64).sqrt()) / (2.0 * q.a as f64)
}

/// Values of the lift just outside and just inside the geodesic of `q` at its apex.
pub fn two_sided_phi(delta: i64, q: &QuadForm, eps: f64, table: &TraceTable, cfg: &SeriesConfig) -> Result<(f64, f64)> {
    let z0 = apex(q);
    let up = eval_phi_h(delta, table, z0 + Complex64::new(0.0, eps), cfg)?.total.re;
    let down = eval_phi_h(delta, table, z0 - Complex64::new(0.0, eps), cfg)?.total.re;
    Ok((up, down))
}

/// Jump `Phi'(outside) - Phi'(inside)` at the apex of `q` and its predicted value
/// `-2 i sqrt(Delta) c^-(D) chi(Q) / Q(z_0, 1)`.
pub fn derivative_jump(
    delta: i64,
    q: &QuadForm,
    eps: f64,
    table: &TraceTable,
    cfg: &SeriesConfig,
) -> Result<(Complex64, Complex64)> {
    let z0 = apex(q);
    let up = eval_phi_prime_h(delta, table, z0 + Complex64::new(0.0, eps), cfg)?.total;
    let down = eval_phi_prime_h(delta, table, z0 - Complex64::new(0.0, eps), cfg)?.total;
    let d = q.disc() / delta;
    let c_minus = match d {
        1 => 2.0,
        _ => return invalid(format!("h has no principal part at D = {d}")),
    };
    let chi = crate::qforms::genus_character(delta, q)? as f64;
    let pred = -2.0 * Complex64::i() * (delta as f64).sqrt() * c_minus * chi / q.eval_at(z0);
    Ok((up - down, pred))
}

/// Forms of discriminant `delta` whose apex is used for the crossing checks.
pub fn crossing_forms(delta: i64) -> Vec<QuadForm> {
    let b = delta % 2;
    vec![QuadForm::new(1, b, (b * b - delta) / 4)]
}

pub fn continuity_suite(delta: i64, table: &TraceTable, cfg: &SeriesConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for q in crossing_forms(delta) {
        let (a, b) = two_sided_phi(delta, &q, SIDE_EPS, table, cfg)?;
        out.push(Check::new(format!("continuity delta={delta} form={q}"), (a - b).abs(), CONTINUITY_TOL));
    }
    Ok(out)
}

pub fn jump_suite(delta: i64, table: &TraceTable, cfg: &SeriesConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for q in crossing_forms(delta) {
        let (jump, pred) = derivative_jump(delta, &q, SIDE_EPS, table, cfg)?;
        out.push(Check::new(format!("jump delta={delta} form={q}"), (jump - pred).norm() / pred.norm(), JUMP_REL_TOL));
    }
    Ok(out)
}

/// `|tr_{J_m}(Delta) - sum_{d | m} (Delta/(m/d)) d tr_J(Delta d^2)|`.
pub fn trace_identity_residual(delta: i64, m: usize, table: &TraceTable) -> Result<f64> {
    let lhs = table.value(TraceKey::cycle(TraceFn::Faber(m), delta))?;
    let (rhs, _) = twisted_coefficient(delta, m as u64, table)?;
    Ok((lhs - rhs).abs())
}

pub fn trace_identity_suite(delta: i64, ms: &[usize], table: &TraceTable) -> Result<Vec<Check>> {
    ms.iter()
        .map(|&m| Ok(Check::new(format!("traceid delta={delta} m={m}"), trace_identity_residual(delta, m, table)?, TRACE_ID_TOL)))
        .collect()
}

/// Runs `suite`; `delta = None` uses the standard discriminants of each suite.
pub fn run_suite(suite: Suite, delta: Option<i64>, table: &TraceTable, cfg: &SeriesConfig) -> Result<Vec<Check>> {
    let d = delta.unwrap_or(5);
    Ok(match suite {
        Suite::Period => match delta {
            Some(d) => period_suite(&[d], table, cfg)?,
            None => period_suite(&[5, 8, 12], table, cfg)?,
        },
        Suite::Product => product_suite(d, table, cfg)?,
        Suite::Jump => jump_suite(d, table, cfg)?,
        Suite::Continuity => continuity_suite(d, table, cfg)?,
        Suite::TraceId => match delta {
            Some(d) => trace_identity_suite(d, &[2, 3], table)?,
            None => {
                let mut v = trace_identity_suite(5, &[2, 3], table)?;
                v.extend(trace_identity_suite(8, &[2], table)?);
                v
            }
        },
        Suite::All => {
            let mut v = Vec::new();
            for s in [Suite::Period, Suite::Product, Suite::Jump, Suite::Continuity, Suite::TraceId] {
                v.extend(run_suite(s, delta, table, cfg)?);
            }
            v
        }
    })
}
