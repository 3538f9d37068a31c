mod common;

use ccr_core::quasipoly::DEFAULT_EPS_JACOBIAN;
use ccr_core::{Error, ParameterPoint64, QuasiPolynomial64, ScalarExpr, Term};
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

const H: f64 = 1e-3;

/// Fourth-order central difference of `f` at `x` with step `h`.
fn stencil<V>(f: impl Fn(V) -> Complex64, x: V, h: V) -> Complex64
where
    V: Copy + std::ops::Add<Output = V> + std::ops::Sub<Output = V> + std::ops::Mul<f64, Output = V>,
{
    (f(x - h * 2.0) - f(x + h * 2.0) + (f(x + h) - f(x - h)) * 8.0) / 12.0
}

fn rel_err(got: Complex64, want: Complex64) -> f64 {
    (got - want).norm() / want.norm().max(1.0)
}

#[test]
fn first_example_at_origin_sums_coefficients() {
    let qp = example1_symbolic();
    let v = qp.evaluate(&example1_symbolic_point(0.3, 0.7), c(0.0, 0.0)).unwrap();
    assert!((v - c(9.2, 0.0)).norm() < 1e-14, "{v}");
}

#[test]
fn undelayed_part_vanishes_on_imaginary_root() {
    let qp = example2();
    let v = qp.evaluate(&point(&[("a", 4.0), ("b", 0.0)]), c(0.0, 2.0)).unwrap();
    assert!(v.norm() < 1e-14);
}

#[test]
fn lambert_root_is_a_zero() {
    let root = lambert_w(c(-1.0, 0.0), 0);
    assert!((root - c(-0.31813, 1.33724)).norm() < 1e-4, "{root}");
    let v = lambert_qp().evaluate(&ParameterPoint64::new(), root).unwrap();
    assert!(v.norm() < 1e-13);
}

#[test]
fn derivative_of_undelayed_square() {
    let qp = example2_tau();
    for tau in [0.0, 1.0, TWO_PI] {
        let d = qp
            .d_dlambda(&point(&[("a", 3.0), ("b", 0.0), ("tau", tau)]), c(1.0, 0.0))
            .unwrap();
        assert!((d - c(2.0, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn third_example_derivative_matches_closed_form() {
    let qp = example3();
    let [a1, _, b1, b2, b3, b4] = EX3_SETS[0];
    for (t1, t2, lam) in [(0.4, 1.3, c(-0.2, 1.1)), (2.0, 0.01, c(0.3, -2.0)), (1.0, 1.0, c(-1.0, 0.0))] {
        let got = qp.d_dlambda(&example3_point(1, t1, t2), lam).unwrap();
        let e1 = (-lam * t1).exp();
        let e2 = (-lam * t2).exp();
        let delta = 2.0 * lam + a1 + b1 * (1.0 - lam * t1) * e1 - b2 * t1 * e1 + b3 * (1.0 - lam * t2) * e2
            - b4 * t2 * e2;
        assert!(rel_err(got, delta) < 1e-14, "{got} vs {delta}");
    }
}

#[test]
fn delay_sensitivity_of_first_example() {
    let qp = example1_symbolic();
    let mut pt = example1_symbolic_point(0.2, 0.6);
    pt.set("b1", 0.0);
    for lam in [c(0.0, 0.0), c(-0.5, 3.0), c(1.0, -2.0)] {
        assert_eq!(qp.d_dparam(&pt, lam, "t1").unwrap(), c(0.0, 0.0));
        let rhs = qp.continuation_rhs(&pt, lam, "t1", DEFAULT_EPS_JACOBIAN).unwrap();
        assert_eq!(rhs.norm(), 0.0);
        let got = qp.d_dparam(&pt, lam, "t2").unwrap();
        let want = -2.8 * lam * (-lam * 0.6).exp();
        assert!(rel_err(got, want) < 1e-15);
    }
}

#[test]
fn coefficient_rhs_on_undelayed_root() {
    let qp = example2_tau();
    for (a, tau) in [(2.0, TWO_PI), (0.5, 1.0), (7.0, 0.3)] {
        let s = f64::sqrt(a);
        let lam = c(0.0, s);
        let got = qp
            .continuation_rhs(&point(&[("a", a), ("b", 0.0), ("tau", tau)]), lam, "b", DEFAULT_EPS_JACOBIAN)
            .unwrap();
        let want = c(0.0, -tau * s).exp() / c(0.0, 2.0 * s);
        assert!(rel_err(got, want) < 1e-14, "{got} vs {want}");
    }
}

/// A real double root of the third example with set-3 constants at fixed
/// `τ₁`: `D(λ) = 0` fixes `e^{−λτ₂}` for each real λ, so the fold is a
/// sign change of `D′` along that one-dimensional family.
fn set3_double_root(t1: f64) -> Option<(f64, f64)> {
    let [a1, a2, b1, b2, b3, b4] = EX3_SETS[2];
    let tau2 = |l: f64| {
        let e1 = (-l * t1).exp();
        let e2 = -(l * l + a1 * l + a2 + (b1 * l + b2) * e1) / (b3 * l + b4);
        (e2 > 0.0).then(|| -e2.ln() / l)
    };
    let dprime = |l: f64| {
        let t2 = tau2(l)?;
        let e1 = (-l * t1).exp();
        let e2 = (-l * t2).exp();
        Some(2.0 * l + a1 + b1 * e1 - t1 * (b1 * l + b2) * e1 + b3 * e2 - t2 * (b3 * l + b4) * e2)
    };
    let ok = |l: f64| tau2(l).is_some_and(|t| (0.01..=3.0).contains(&t));
    let n = 40000;
    for i in 0..n {
        let (lo, hi) = (-40.0 + 40.0 * i as f64 / n as f64, -40.0 + 40.0 * (i + 1) as f64 / n as f64);
        if !(ok(lo) && ok(hi)) {
            continue;
        }
        let (flo, fhi) = (dprime(lo)?, dprime(hi)?);
        if flo.signum() == fhi.signum() {
            continue;
        }
        let (mut a, mut b, mut fa) = (lo, hi, flo);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let fm = dprime(m)?;
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let l = 0.5 * (a + b);
        return Some((l, tau2(l)?));
    }
    None
}

#[test]
fn set3_fold_has_singular_jacobian() {
    let qp = example3();
    let mut found = 0;
    for t1 in [0.01, 0.05, 0.1] {
        let Some((lam, t2)) = set3_double_root(t1) else { continue };
        found += 1;
        let pt = example3_point(3, t1, t2);
        let l = c(lam, 0.0);
        assert!(qp.evaluate(&pt, l).unwrap().norm() < 1e-10);
        match qp.continuation_rhs(&pt, l, "t2", DEFAULT_EPS_JACOBIAN) {
            Err(Error::SingularJacobian { magnitude, .. }) => assert!(magnitude < DEFAULT_EPS_JACOBIAN),
            other => panic!("expected a singular Jacobian at t1={t1}, got {other:?}"),
        }
    }
    assert_eq!(found, 3, "no fold located");
}

#[test]
fn unknown_parameter_and_non_finite_input_are_errors() {
    let qp = example2();
    let pt = point(&[("a", 1.0), ("b", 0.5)]);
    assert!(matches!(qp.evaluate(&point(&[("a", 1.0)]), c(0.0, 0.0)), Err(Error::UnknownParameter(_))));
    assert!(matches!(qp.d_dparam(&pt, c(0.0, 0.0), "zz"), Err(Error::UnknownParameter(_))));
    assert!(qp.evaluate(&pt, c(f64::NAN, 0.0)).is_err());
    assert!(qp.evaluate(&point(&[("a", f64::INFINITY), ("b", 0.5)]), c(0.0, 0.0)).is_err());
}

fn lambda_in_box() -> impl Strategy<Value = Complex64> {
    (-5.0..5.0f64, -10.0..10.0f64).prop_map(|(re, im)| c(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn d_dlambda_matches_central_difference(seed in any::<u64>(), lam in lambda_in_box()) {
        let (qp, pt, _) = random_problem(seed);
        let f = |z: Complex64| qp.evaluate(&pt, z).unwrap();
        let fd = stencil(f, lam, c(H, 0.0)) / H;
        let an = qp.d_dlambda(&pt, lam).unwrap();
        prop_assert!(rel_err(fd, an) < 1e-5, "fd {} analytic {}", fd, an);
    }

    #[test]
    fn d_dparam_matches_central_difference(seed in any::<u64>(), lam in lambda_in_box()) {
        let (qp, pt, names) = random_problem(seed);
        for name in &names {
            let v = pt.get(name).unwrap();
            let f = |x: f64| qp.evaluate(&pt.with(name, x), lam).unwrap();
            let fd = stencil(f, v, H) / H;
            let an = qp.d_dparam(&pt, lam, name).unwrap();
            prop_assert!(rel_err(fd, an) < 1e-5, "{}: fd {} analytic {}", name, fd, an);
        }
    }

    #[test]
    fn conjugate_symmetry(seed in any::<u64>(), lam in lambda_in_box()) {
        let (qp, pt, names) = random_problem(seed);
        let tol = |z: Complex64| 1e-14 * z.norm().max(1.0);
        let (v, vc) = (qp.evaluate(&pt, lam).unwrap(), qp.evaluate(&pt, lam.conj()).unwrap());
        prop_assert!((vc - v.conj()).norm() <= tol(v));
        let (d, dc) = (qp.d_dlambda(&pt, lam).unwrap(), qp.d_dlambda(&pt, lam.conj()).unwrap());
        prop_assert!((dc - d.conj()).norm() <= tol(d));
        for name in &names {
            let (s, sc) = (qp.d_dparam(&pt, lam, name).unwrap(), qp.d_dparam(&pt, lam.conj(), name).unwrap());
            prop_assert!((sc - s.conj()).norm() <= tol(s));
        }
    }

    #[test]
    fn splitting_terms_is_linear(seed in any::<u64>(), lam in lambda_in_box(), mask in any::<u8>()) {
        let (qp, pt, _) = random_problem(seed);
        let undelayed = qp.terms()[qp.undelayed_term()].clone();
        let (mut left, mut right) = (vec![undelayed.clone()], vec![undelayed.clone()]);
        for (i, t) in qp.terms().iter().enumerate().filter(|(i, _)| *i != qp.undelayed_term()) {
            if mask & (1 << (i % 8)) != 0 { left.push(t.clone()) } else { right.push(t.clone()) }
        }
        let part = |terms: Vec<Term<f64>>| {
            let sub = QuasiPolynomial64::new(terms).unwrap();
            let sub_pt: ParameterPoint64 = sub.param_names().iter().map(|n| (n.clone(), pt.get(n).unwrap())).collect();
            sub.evaluate(&sub_pt, lam).unwrap()
        };
        let whole = qp.evaluate(&pt, lam).unwrap();
        let sum = part(left) + part(right) - part(vec![undelayed]);
        prop_assert!(rel_err(sum, whole) < 1e-12, "{} vs {}", sum, whole);
    }

    #[test]
    fn shared_parameter_accumulates_slot_contributions(s in 0.1..2.0f64, lam in lambda_in_box()) {
        // `s` sits in a coefficient of each term, one delay and one scaled delay.
        let shared = QuasiPolynomial64::new(vec![
            Term::new(vec![p("s"), k(1.0), k(1.0)], k(0.0)),
            Term::new(vec![p("s"), k(0.5)], p("s")),
            Term::new(vec![k(0.7)], ScalarExpr::scaled(2.0, "s")),
        ]).unwrap();
        let apart = QuasiPolynomial64::new(vec![
            Term::new(vec![p("s1"), k(1.0), k(1.0)], k(0.0)),
            Term::new(vec![p("s2"), k(0.5)], p("s3")),
            Term::new(vec![k(0.7)], ScalarExpr::scaled(2.0, "s4")),
        ]).unwrap();
        let pt_shared = point(&[("s", s)]);
        let pt_apart = point(&[("s1", s), ("s2", s), ("s3", s), ("s4", s)]);
        prop_assert!(rel_err(apart.evaluate(&pt_apart, lam).unwrap(), shared.evaluate(&pt_shared, lam).unwrap()) < 1e-14);
        let total: Complex64 = ["s1", "s2", "s3", "s4"].iter().map(|n| apart.d_dparam(&pt_apart, lam, n).unwrap()).sum();
        let got = shared.d_dparam(&pt_shared, lam, "s").unwrap();
        prop_assert!(rel_err(got, total) < 1e-13, "{} vs {}", got, total);
    }
}
