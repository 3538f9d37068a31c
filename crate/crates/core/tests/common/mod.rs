#![allow(dead_code)]

use ccr_core::{ParameterPoint64, QuasiPolynomial64, ScalarExpr, Term};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn k(v: f64) -> ScalarExpr<f64> {
    ScalarExpr::constant(v)
}

pub fn p(name: &str) -> ScalarExpr<f64> {
    ScalarExpr::param(name)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn point(pairs: &[(&str, f64)]) -> ParameterPoint64 {
    pairs.iter().map(|&(n, v)| (n, v)).collect()
}

pub const EX1_B: [f64; 5] = [3.0, 2.8, 0.6, 0.8, 1.0];
pub const EX1_FIXED_DELAYS: [f64; 3] = [1.0, 1.5, 2.0];

/// `λ + a + Σ bᵢ e^{−λτᵢ}` with every coefficient and delay a parameter.
pub fn example1_symbolic() -> QuasiPolynomial64 {
    let mut terms = vec![Term::new(vec![p("a"), k(1.0)], k(0.0))];
    for i in 1..=5 {
        terms.push(Term::new(vec![p(&format!("b{i}"))], p(&format!("t{i}"))));
    }
    QuasiPolynomial64::new(terms).unwrap()
}

pub fn example1_symbolic_point(t1: f64, t2: f64) -> ParameterPoint64 {
    let mut pt = point(&[("a", 1.0), ("t1", t1), ("t2", t2), ("t3", 1.0), ("t4", 1.5), ("t5", 2.0)]);
    for (i, b) in EX1_B.iter().enumerate() {
        pt.set(format!("b{}", i + 1), *b);
    }
    pt
}

/// The first example with only `t1` and `t2` free.
pub fn example1() -> QuasiPolynomial64 {
    let mut terms = vec![
        Term::new(vec![k(1.0), k(1.0)], k(0.0)),
        Term::new(vec![k(EX1_B[0])], p("t1")),
        Term::new(vec![k(EX1_B[1])], p("t2")),
    ];
    for (b, t) in EX1_B[2..].iter().zip(EX1_FIXED_DELAYS) {
        terms.push(Term::new(vec![k(*b)], k(t)));
    }
    QuasiPolynomial64::new(terms).unwrap()
}

pub fn example1_point(t1: f64, t2: f64) -> ParameterPoint64 {
    point(&[("t1", t1), ("t2", t2)])
}

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// `λ² + a − b e^{−2πλ}`.
pub fn example2() -> QuasiPolynomial64 {
    QuasiPolynomial64::new(vec![
        Term::new(vec![p("a"), k(0.0), k(1.0)], k(0.0)),
        Term::new(vec![ScalarExpr::scaled(-1.0, "b")], k(TWO_PI)),
    ])
    .unwrap()
}

/// `λ² + a − b e^{−λτ}` with the delay as parameter `tau`.
pub fn example2_tau() -> QuasiPolynomial64 {
    QuasiPolynomial64::new(vec![
        Term::new(vec![p("a"), k(0.0), k(1.0)], k(0.0)),
        Term::new(vec![ScalarExpr::scaled(-1.0, "b")], p("tau")),
    ])
    .unwrap()
}

/// `λ² + a₁λ + a₂ + (b₁λ + b₂)e^{−λτ₁} + (b₃λ + b₄)e^{−λτ₂}`.
pub fn example3() -> QuasiPolynomial64 {
    QuasiPolynomial64::new(vec![
        Term::new(vec![p("a2"), p("a1"), k(1.0)], k(0.0)),
        Term::new(vec![p("b2"), p("b1")], p("t1")),
        Term::new(vec![p("b4"), p("b3")], p("t2")),
    ])
    .unwrap()
}

/// `[a1, a2, b1, b2, b3, b4]` of parameter sets 1 to 3.
pub const EX3_SETS: [[f64; 6]; 3] = [
    [0.8, 1.9, 0.0, 0.8, 0.0, 0.5],
    [3.0, 5.0, 0.5, 3.0, 0.6, 5.2],
    [1.5, 0.8, 2.0, 0.5, 1.0, 1.0],
];

pub fn example3_point(set: usize, t1: f64, t2: f64) -> ParameterPoint64 {
    let v = EX3_SETS[set - 1];
    point(&[
        ("a1", v[0]),
        ("a2", v[1]),
        ("b1", v[2]),
        ("b2", v[3]),
        ("b3", v[4]),
        ("b4", v[5]),
        ("t1", t1),
        ("t2", t2),
    ])
}

/// `λ + e^{−λ}`.
pub fn lambert_qp() -> QuasiPolynomial64 {
    QuasiPolynomial64::new(vec![
        Term::new(vec![k(0.0), k(1.0)], k(0.0)),
        Term::new(vec![k(1.0)], k(1.0)),
    ])
    .unwrap()
}

/// Branch `k` of the Lambert W function by Halley's iteration on
/// `w·eʷ − z`, started from the branch-point series for `k = 0` and the
/// logarithmic asymptote otherwise.
pub fn lambert_w(z: Complex64, branch: i32) -> Complex64 {
    let mut w = if branch == 0 {
        let q = (2.0 * (std::f64::consts::E * z + 1.0)).sqrt();
        -1.0 + q - q * q / 3.0 + 11.0 / 72.0 * q * q * q
    } else {
        let l1 = z.ln() + c(0.0, 2.0 * std::f64::consts::PI * branch as f64);
        l1 - l1.ln()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - z;
        let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.norm() < 1e-15 * (1.0 + w.norm()) {
            break;
        }
    }
    w
}

/// A random retarded quasi-polynomial over parameters `q0, q1, …` (some
/// coefficients, some delays) and a point assigning all of them.
pub fn random_problem(seed: u64) -> (QuasiPolynomial64, ParameterPoint64, Vec<String>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let order = rng.gen_range(1..=3usize);
    let mut names = Vec::new();
    let mut values = Vec::new();
    let mut slot = |value: f64, as_param: bool| {
        if as_param {
            let name = format!("q{}", names.len());
            names.push(name.clone());
            values.push(value);
            ScalarExpr::param(name)
        } else {
            ScalarExpr::constant(value)
        }
    };
    let mut undelayed: Vec<ScalarExpr<f64>> = (0..order)
        .map(|_| {
            let v = rng.gen_range(-2.0..2.0);
            let as_param = rng.gen_bool(0.4);
            slot(v, as_param)
        })
        .collect();
    undelayed.push(ScalarExpr::constant(1.0));
    let mut terms = vec![Term::new(undelayed, ScalarExpr::constant(0.0))];
    for _ in 0..rng.gen_range(1..=3usize) {
        let degree = rng.gen_range(0..order);
        let coeffs = (0..=degree)
            .map(|_| {
                let v = rng.gen_range(-1.5..1.5);
                let as_param = rng.gen_bool(0.4);
                slot(v, as_param)
            })
            .collect();
        let tau = rng.gen_range(0.1..1.5);
        let as_param = rng.gen_bool(0.5);
        let delay = slot(tau, as_param);
        terms.push(Term::new(coeffs, delay));
    }
    let qp = QuasiPolynomial64::new(terms).unwrap();
    let pt = names.iter().cloned().zip(values).collect();
    (qp, pt, names)
}

/// Winding number of `f` around the rectangle `[x0, x1] × [y0, y1]`.
///
/// Each edge is bisected until the phase increment over a segment is below
/// π/4 and agrees with the sum over its two halves.
pub fn winding_number(f: &dyn Fn(Complex64) -> Complex64, x0: f64, x1: f64, y0: f64, y1: f64) -> i64 {
    let corners = [c(x0, y0), c(x1, y0), c(x1, y1), c(x0, y1), c(x0, y0)];
    let mut total = 0.0;
    for w in corners.windows(2) {
        total += edge_phase(f, w[0], f(w[0]), w[1], f(w[1]), 0);
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

fn edge_phase(
    f: &dyn Fn(Complex64) -> Complex64,
    a: Complex64,
    fa: Complex64,
    b: Complex64,
    fb: Complex64,
    depth: u32,
) -> f64 {
    let d = (fb / fa).arg();
    let m = (a + b) * 0.5;
    let fm = f(m);
    let (d1, d2) = ((fm / fa).arg(), (fb / fm).arg());
    let settled = d.abs() < std::f64::consts::FRAC_PI_4 && (d1 + d2 - d).abs() < 1e-6;
    if depth > 40 || (settled && depth > 3) {
        return d1 + d2;
    }
    edge_phase(f, a, fa, m, fm, depth + 1) + edge_phase(f, m, fm, b, fb, depth + 1)
}

/// Every zero of `f` in the rectangle, located by recursive subdivision
/// until each cell holds one zero and is small, then polished by the secant
/// method inside that cell.
pub fn argument_principle_roots(
    f: &dyn Fn(Complex64) -> Complex64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
) -> Vec<Complex64> {
    let mut out = Vec::new();
    let n = winding_number(f, x0, x1, y0, y1);
    locate(f, (x0, x1, y0, y1), n, &mut out);
    out
}

fn locate(f: &dyn Fn(Complex64) -> Complex64, r: (f64, f64, f64, f64), n: i64, out: &mut Vec<Complex64>) {
    let (x0, x1, y0, y1) = r;
    if n <= 0 {
        return;
    }
    if n == 1 && (x1 - x0).max(y1 - y0) < 1e-2 {
        let mut z0 = c(x0 + 0.3 * (x1 - x0), y0 + 0.3 * (y1 - y0));
        let mut z1 = c(x0 + 0.7 * (x1 - x0), y0 + 0.7 * (y1 - y0));
        for _ in 0..60 {
            let (f0, f1) = (f(z0), f(z1));
            if f1 == f0 {
                break;
            }
            let z2 = z1 - f1 * (z1 - z0) / (f1 - f0);
            z0 = z1;
            z1 = z2;
            if (z1 - z0).norm() < 1e-15 {
                break;
            }
        }
        out.push(z1);
        return;
    }
    // Split the longer side; offsets avoid landing exactly on symmetric roots.
    let cells = if x1 - x0 >= y1 - y0 {
        let xm = x0 + 0.5013 * (x1 - x0);
        [(x0, xm, y0, y1), (xm, x1, y0, y1)]
    } else {
        let ym = y0 + 0.4987 * (y1 - y0);
        [(x0, x1, y0, ym), (x0, x1, ym, y1)]
    };
    for cell in cells {
        let m = winding_number(f, cell.0, cell.1, cell.2, cell.3);
        locate(f, cell, m, out);
    }
}

/// Nearest distance from `z` to any element of `set`.
pub fn nearest(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min)
}
