//! Adaptive Gauss-Kronrod (7/15) quadrature and Wynn's epsilon algorithm.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Value and error estimate of a quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// One 15-point Kronrod panel; returns (Kronrod value, |Kronrod - Gauss|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`; stops when the summed
/// error estimate drops below `max(abs_tol, rel_tol |I|)` or after `max_panels`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_panels: usize) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0 };
    }
    if b < a {
        let r = integrate(f, b, a, abs_tol, rel_tol, max_panels);
        return QuadResult { value: -r.value, error: r.error };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut n = 1;
    while err > abs_tol.max(rel_tol * total.abs()) && n < max_panels {
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
        n += 1;
    }
    // resum to shed accumulated rounding in the running total
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult { value, error }
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
/// Returns the last diagonal estimate and the difference to the previous one.
pub fn wynn_epsilon(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    if n < 3 {
        let last = *s.last().unwrap_or(&0.0);
        let prev = if n >= 2 { s[n - 2] } else { last };
        return (last, (last - prev).abs());
    }
    // e[k] holds column k of the epsilon table; only even columns are estimates
    let mut prev_col: Vec<f64> = vec![0.0; n + 1];
    let mut cur_col: Vec<f64> = s.to_vec();
    let mut best = s[n - 1];
    let mut best_prev = s[n - 2];
    let mut k = 0;
    while cur_col.len() > 1 {
        let mut next = Vec::with_capacity(cur_col.len() - 1);
        for i in 0..cur_col.len() - 1 {
            let d = cur_col[i + 1] - cur_col[i];
            let base = prev_col[i + 1];
            if d == 0.0 || !d.is_finite() {
                next.push(f64::INFINITY);
            } else {
                next.push(base + 1.0 / d);
            }
        }
        k += 1;
        prev_col = cur_col;
        cur_col = next;
        if k % 2 == 0 && cur_col.len() >= 2 {
            let a = cur_col[cur_col.len() - 1];
            let b = cur_col[cur_col.len() - 2];
            if a.is_finite() && b.is_finite() {
                best = a;
                best_prev = b;
            } else {
                break;
            }
        }
    }
    (best, (best - best_prev).abs())
}
