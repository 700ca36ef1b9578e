use modlift::specfun::dirichlet_l1;
use modlift::traces::*;

/// Cycle traces of J from an mpmath prototype (trapezoid rule at 40 digits).
const TR_J: [(i64, f64); 13] = [
    (5, -32.4314742090405),
    (8, -42.5128224938533),
    (12, -52.019285742286),
    (13, -40.7943864371193),
    (17, -66.9679476941733),
    (20, -52.5433306912905),
    (21, -42.0594284645106),
    (45, -40.785995401778830357),
    (80, -58.967334181393398986),
    (125, -23.543754894516208035),
    (320, -61.778781476415763216),
    (405, -42.228869770494284579),
    (768, -73.602193902903693),
];

#[test]
fn cycle_traces_match_oracle() {
    let t = TraceTable::new();
    let keys: Vec<TraceKey> = TR_J.iter().map(|&(d, _)| TraceKey::cycle(TraceFn::Faber(1), d)).collect();
    t.prefetch(&keys).unwrap();
    for (d, v) in TR_J {
        let got = t.tr_j(d).unwrap();
        assert!((got.value - v).abs() < 1e-9 * v.abs().max(1.0), "D={d}: {} vs {v}", got.value);
        assert!(got.abs_err < 1e-8, "D={d}: {}", got.abs_err);
    }
}

#[test]
fn higher_faber_traces_match_oracle() {
    let t = TraceTable::new();
    for (m, d, v) in [(2, 5, -72.6551871735405), (3, 5, -89.926511996296), (2, 8, -112.621957110044335)] {
        let got = t.value(TraceKey::cycle(TraceFn::Faber(m), d)).unwrap();
        assert!((got - v).abs() < 1e-9, "m={m} D={d}: {got}");
    }
}

#[test]
fn constant_trace_is_twice_l_value() {
    let t = TraceTable::new();
    for (d, v) in [(5, 0.860817881928008), (8, 1.24645048028046), (12, 1.52069199260189)] {
        let got = t.tr_one(d).unwrap().value;
        assert!((got - v).abs() < 1e-12);
        assert!((got - 2.0 * dirichlet_l1(d).unwrap()).abs() < 1e-12);
    }
    assert!((t.tr_one(13).unwrap().value - 2.0 * dirichlet_l1(13).unwrap()).abs() < 1e-12);
}

#[test]
fn cm_traces_are_integers() {
    // -248, 492, -4119, 7256, -33512 are J-traces of the class sets
    for (d, want) in [(-3, -248.0), (-4, 492.0), (-7, -4119.0), (-8, 7256.0), (-11, -33512.0)] {
        let v = trace_cm(d).unwrap();
        assert!((v - v.round()).abs() < 1e-6, "D={d}: {v}");
        assert!((v - want).abs() < 1e-6, "D={d}: {v}");
    }
}

#[test]
fn trace_identity() {
    let t = TraceTable::new();
    for (delta, m) in [(5, 2u64), (5, 3), (8, 2), (8, 3)] {
        let lhs = t.value(TraceKey::cycle(TraceFn::Faber(m as usize), delta)).unwrap();
        let (rhs, _) = twisted_coefficient(delta, m, &t).unwrap();
        assert!((lhs - rhs).abs() <= 1e-5, "delta={delta} m={m}: {lhs} vs {rhs}");
    }
}

#[test]
fn cache_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traces.json");
    let t = TraceTable::open(&path).unwrap();
    for d in [5, 8, 12] {
        t.tr_j(d).unwrap();
        t.tr_one(d).unwrap();
    }
    t.value(TraceKey::cm(1, -7)).unwrap();
    t.persist().unwrap();
    let u = TraceTable::open(&path).unwrap();
    assert_eq!(u.len(), t.len());
    for (k, e) in t.entries() {
        let f = u.get(&k).unwrap();
        assert_eq!(e.value.to_bits(), f.value.to_bits(), "{k:?}");
        assert_eq!(e.abs_err.to_bits(), f.abs_err.to_bits(), "{k:?}");
    }
    assert_eq!(t.to_json().unwrap(), u.to_json().unwrap());
    let csv = u.to_csv();
    assert!(csv.lines().next().unwrap().starts_with("kind,m,disc,value"));
    assert_eq!(csv.lines().count(), u.len() + 1);
}

#[test]
fn stale_schema_is_rejected() {
    let text = r#"{"schema": 999, "entries": []}"#;
    assert!(TraceTable::from_json(text).is_err());
}
