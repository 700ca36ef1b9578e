use std::f64::consts::PI;

use modlift::lift::*;
use modlift::qforms::{QuadForm, Sl2};
use modlift::traces::TraceTable;
use modlift::verify::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn cfg() -> SeriesConfig {
    SeriesConfig::default()
}

#[test]
fn period_relation_under_s() {
    let t = TraceTable::new();
    for delta in [5, 8, 12] {
        for (x, y) in PERIOD_POINTS {
            let r = verify_period_relation(delta, c(x, y), &t, &cfg()).unwrap();
            assert!(r <= PERIOD_TOL, "delta={delta} z={x}+{y}i: {r}");
        }
    }
}

#[test]
fn period_relation_other_matrices() {
    let t = TraceTable::new();
    let st = Sl2::S.mul(&Sl2::T);
    let ts = Sl2::T.mul(&Sl2::S);
    let sts = st.mul(&Sl2::S);
    for m in [st, ts, sts, Sl2::T] {
        let r = verify_period_relation_m(5, &m, c(0.2, 1.3), &t, &cfg()).unwrap();
        assert!(r <= PERIOD_TOL, "{m:?}: {r}");
    }
}

#[test]
fn modular_integral_at_i() {
    let t = TraceTable::new();
    let v = eval_f(5, &t, Complex64::i(), &cfg()).unwrap();
    assert!((v.value - 4.0 / (5.0 * PI)).norm() <= 1e-5, "{}", v.value);
}

fn slash(q: Complex64, m: &Sl2, z: Complex64) -> Complex64 {
    let j = m.factor(z);
    q / (j * j)
}

#[test]
fn period_functions_form_a_cocycle() {
    let st = Sl2::S.mul(&Sl2::T);
    let ts = Sl2::T.mul(&Sl2::S);
    let pairs = [(Sl2::S, Sl2::T), (Sl2::T, Sl2::S), (st, Sl2::S), (Sl2::S, ts), (st, st)];
    for delta in [5, 8, 13] {
        for z in [c(0.1, 0.9), c(-0.3, 1.7), c(0.45, 0.4)] {
            for (m, n) in &pairs {
                let lhs = period_q(delta, &m.mul(n), z).unwrap();
                let rhs = slash(period_q(delta, m, n.apply(z)).unwrap(), n, z) + period_q(delta, n, z).unwrap();
                assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()), "delta={delta} {m:?} {n:?} {z}");
            }
        }
    }
}

#[test]
fn s_period_is_twice_s_relation() {
    // q_S agrees with the generic period set of S
    for delta in [5, 8, 12] {
        let z = c(0.3, 1.1);
        assert!((period_qs(delta, z).unwrap() - period_q(delta, &Sl2::S, z).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn cocycle_is_primitive_of_period() {
    for delta in [5, 8] {
        assert!(cocycle_rs(delta, Complex64::i()).unwrap().norm() < 1e-14);
        for z in [c(0.2, 0.8), c(-0.6, 1.5)] {
            let h = 1e-5;
            let d = (cocycle_rs(delta, z + h).unwrap() - cocycle_rs(delta, z - h).unwrap()) / (2.0 * h);
            let q = period_qs(delta, z).unwrap();
            assert!((d - q).norm() < 1e-7 * (1.0 + q.norm()), "{z}: {d} vs {q}");
        }
    }
}

#[test]
fn translation_invariance() {
    let t = TraceTable::new();
    for z in [c(0.1, 0.6), c(0.4, 1.3)] {
        let a = eval_phi_h(5, &t, z, &cfg()).unwrap().total;
        let b = eval_phi_h(5, &t, z + 1.0, &cfg()).unwrap().total;
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        let a = eval_phi_prime_h(5, &t, z, &cfg()).unwrap().total;
        let b = eval_phi_prime_h(5, &t, z + 1.0, &cfg()).unwrap().total;
        assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "{a} vs {b}");
        let a = eval_f(8, &t, z, &cfg()).unwrap().value;
        let b = eval_f(8, &t, z + 1.0, &cfg()).unwrap().value;
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn lift_is_real() {
    let t = TraceTable::new();
    for z in [c(0.1, 0.6), c(0.4, 1.3), c(-0.2, 0.3)] {
        let v = eval_phi_h(5, &t, z, &cfg()).unwrap();
        assert!(v.total.im.abs() < 1e-8, "{z}: {}", v.total);
    }
}

#[test]
fn singular_part_vanishes_high_up() {
    let t = TraceTable::new();
    for delta in [5, 8, 12] {
        let y = (delta as f64).sqrt() / 2.0 + 0.01;
        for x in [-0.5, 0.0, 0.3] {
            let v = eval_phi_h(delta, &t, c(x, y), &cfg()).unwrap();
            assert_eq!(v.singular_part, Complex64::new(0.0, 0.0));
            assert!(v.contributing_forms.is_empty());
        }
    }
}

#[test]
fn derivative_holomorphic_off_geodesics() {
    let t = TraceTable::new();
    let h = 1e-4;
    let mut kept = 0;
    for i in 0..5 {
        for j in 0..5 {
            let z = c(-0.4 + 0.2 * i as f64, [0.45, 0.7, 1.0, 1.4, 1.9][j]);
            let f = |w: Complex64| eval_phi_prime_h(5, &t, w, &cfg()).unwrap();
            let stencil = [f(z + h), f(z - h), f(z + c(0.0, h)), f(z - c(0.0, h))];
            if stencil.iter().any(|v| v.contributing_forms != stencil[0].contributing_forms) {
                continue;
            }
            kept += 1;
            let dx = (stencil[0].total - stencil[1].total) / (2.0 * h);
            let dy = (stencil[2].total - stencil[3].total) / (2.0 * h);
            let dbar = (dx + Complex64::i() * dy) / 2.0;
            let scale = 1.0 + stencil[0].total.norm();
            assert!(dbar.norm() <= 1e-3 * scale, "{z}: {dbar}");
        }
    }
    assert!(kept >= 20, "{kept}");
}

#[test]
fn derivative_matches_lift_differences() {
    let t = TraceTable::new();
    let h = 1e-5;
    for z in [c(0.15, 0.7), c(0.35, 1.6)] {
        let dx = (eval_phi_h(8, &t, z + h, &cfg()).unwrap().total - eval_phi_h(8, &t, z - h, &cfg()).unwrap().total) / (2.0 * h);
        let dy = (eval_phi_h(8, &t, z + c(0.0, h), &cfg()).unwrap().total
            - eval_phi_h(8, &t, z - c(0.0, h), &cfg()).unwrap().total)
            / (2.0 * h);
        let want = (dx - Complex64::i() * dy) / 2.0;
        let got = eval_phi_prime_h(8, &t, z, &cfg()).unwrap().total;
        assert!((got - want).norm() < 1e-5 * (1.0 + got.norm()), "{z}: {got} vs {want}");
    }
}

#[test]
fn continuity_and_jumps_across_geodesics() {
    let t = TraceTable::new();
    let cases = [(5, QuadForm::new(1, 1, -1)), (5, QuadForm::new(5, 5, 1)), (8, QuadForm::new(1, 0, -2)), (12, QuadForm::new(1, 0, -3))];
    for (delta, q) in cases {
        let (a, b) = two_sided_phi(delta, &q, SIDE_EPS, &t, &cfg()).unwrap();
        assert!((a - b).abs() <= CONTINUITY_TOL, "delta={delta} {q}: {a} vs {b}");
        let (jump, pred) = derivative_jump(delta, &q, SIDE_EPS, &t, &cfg()).unwrap();
        assert!((jump - pred).norm() <= JUMP_REL_TOL * pred.norm(), "delta={delta} {q}: {jump} vs {pred}");
    }
}

#[test]
fn golden_jump_value() {
    // -2 i sqrt 5 * 2 / Q(z0, 1) with Q(z0, 1) = -5/2
    let t = TraceTable::new();
    let (jump, _) = derivative_jump(5, &QuadForm::new(1, 1, -1), SIDE_EPS, &t, &cfg()).unwrap();
    let want = Complex64::new(0.0, 8.0 / 5f64.sqrt());
    assert!((jump - want).norm() <= 1e-3 * want.norm(), "{jump}");
}

#[test]
fn product_transformations() {
    let t = TraceTable::new();
    for delta in [5, 8] {
        let z = c(0.0, 2.0);
        assert!(product_t_residual(delta, z, &t, &cfg()).unwrap() <= T_PHASE_TOL);
        assert!(log_derivative_residual(delta, z, &t, &cfg()).unwrap() <= LOG_DERIV_TOL);
        for z in [c(0.0, 2.0), c(0.5, 2.0)] {
            let r = verify_product_s(delta, z, &t, &cfg()).unwrap();
            assert!(r <= PRODUCT_S_TOL, "delta={delta} {z}: {r}");
        }
        let r = verify_product_s(delta, Complex64::i(), &t, &cfg()).unwrap();
        assert!(r <= 1e-6, "delta={delta} at i: {r}");
    }
}

#[test]
fn product_has_no_zeros_off_real_axis() {
    let t = TraceTable::new();
    for z in [c(0.0, 1.0), c(0.3, 0.9), c(-0.45, 1.2)] {
        let p = eval_product(5, &t, z, &cfg()).unwrap();
        assert!(p.value.norm() > 0.0 && p.log.re.is_finite());
        assert!((p.log.exp() - p.value).norm() < 1e-12 * p.value.norm());
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let t = TraceTable::new();
    assert!(eval_phi_h(4, &t, c(0.0, 1.0), &cfg()).is_err());
    assert!(eval_phi_h(5, &t, c(0.0, -1.0), &cfg()).is_err());
    assert!(eval_f(1, &t, c(0.0, 1.0), &cfg()).is_err());
    assert!(eval_product(5, &t, c(f64::NAN, 1.0), &cfg()).is_err());
    assert!(SeriesConfig::new(0, 1e-10).is_err());
    assert!(SeriesConfig::new(64, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cocycle_relation_random_points(x in -1.0f64..1.0, y in 0.2f64..2.0) {
        let z = c(x, y);
        let m = Sl2::S;
        let n = Sl2::T.mul(&Sl2::S);
        let lhs = period_q(5, &m.mul(&n), z).unwrap();
        let rhs = slash(period_q(5, &m, n.apply(z)).unwrap(), &n, z) + period_q(5, &n, z).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn s_log_sum_is_primitive(x in -1.0f64..1.0, y in 0.3f64..2.0) {
        let z = c(x, y);
        let h = 1e-6;
        let d = (s_log_sum(8, z + h).unwrap() - s_log_sum(8, z - h).unwrap()) / (2.0 * h);
        let want = 8f64.sqrt() * period_qs(8, z).unwrap();
        prop_assert!((d - want).norm() < 1e-5 * (1.0 + want.norm()));
    }
}

#[test]
fn derivative_matches_lift_at_2i() {
    // the singular part vanishes here
    let t = TraceTable::new();
    let z = c(0.0, 2.0);
    let h = 1e-4;
    let f = |w: Complex64| eval_phi_h(5, &t, w, &cfg()).unwrap().total;
    let dx = (f(z + h) - f(z - h)) / (2.0 * h);
    let dy = (f(z + c(0.0, h)) - f(z - c(0.0, h))) / (2.0 * h);
    let got = eval_phi_prime_h(5, &t, z, &cfg()).unwrap();
    assert!(got.contributing_forms.is_empty());
    assert!((got.total - (dx - Complex64::i() * dy) / 2.0).norm() <= 1e-4);
}

#[test]
fn derivative_smooth_part_is_multiple_of_integral() {
    let t = TraceTable::new();
    let z = c(0.0, 2.0);
    let phi = eval_phi_prime_h(5, &t, z, &cfg()).unwrap().smooth_part;
    let f = eval_f(5, &t, z, &cfg()).unwrap().value;
    let k = 2.0 * PI * Complex64::i() * 5f64.sqrt();
    assert!((phi - k * f).norm() <= 1e-8, "{phi} vs {}", k * f);
}

#[test]
fn integral_truncation_is_stable() {
    let t = TraceTable::new();
    let z = c(0.0, 3.0);
    let a = eval_f(5, &t, z, &SeriesConfig::new(10, 1e-12).unwrap()).unwrap().value;
    let b = eval_f(5, &t, z, &SeriesConfig::new(30, 1e-12).unwrap()).unwrap().value;
    assert!((a - b).norm() <= 1e-10);
}

#[test]
fn continuity_limits_converge() {
    let t = TraceTable::new();
    let q = QuadForm::new(1, 1, -1);
    let gaps: Vec<f64> = (3..=6)
        .map(|k| {
            let (a, b) = two_sided_phi(5, &q, 10f64.powi(-k), &t, &cfg()).unwrap();
            (a - b).abs()
        })
        .collect();
    assert!(gaps[3] <= CONTINUITY_TOL, "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn product_modulus_is_periodic() {
    let t = TraceTable::new();
    let z = c(0.2, 1.5);
    let a = eval_product(5, &t, z, &cfg()).unwrap().value.norm();
    let b = eval_product(5, &t, z + 1.0, &cfg()).unwrap().value.norm();
    assert!((a - b).abs() <= 1e-10 * a);
}
