//! Rightmost characteristic roots at a fixed parameter point.
//!
//! The delay equation is reduced to a first-order system, its solution
//! operator generator is collocated on Chebyshev–Gauss–Lobatto nodes over
//! `[−τ_max, 0]`, and the eigenvalues of the resulting dense matrix are
//! polished by Newton's method on `D(λ)` itself. The final roots therefore do
//! not depend on the discretization beyond the choice of starting points.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quasipoly::{Bound, ParameterPoint, QuasiPolynomial, ResolvedTerm, DEFAULT_EPS_JACOBIAN};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SeedConfig<T> {
    /// Number of roots to return.
    pub n_roots: usize,
    /// Collocation order; the eigenproblem has `order · (n_modes + 1)` rows.
    pub n_modes: usize,
    /// Residual tolerance on `|D(λ)|`.
    pub newton_tol: T,
    pub newton_max_iter: usize,
    /// Roots closer than this are treated as one.
    pub dedup_tol: T,
    /// Newton stops with `SingularJacobian` below this `|D′(λ)|`.
    pub eps_jacobian: T,
}

impl<T: Real> Default for SeedConfig<T> {
    fn default() -> Self {
        SeedConfig {
            n_roots: 25,
            n_modes: 200,
            newton_tol: T::lit(1e-10),
            newton_max_iter: 50,
            dedup_tol: T::lit(1e-8),
            eps_jacobian: T::lit(DEFAULT_EPS_JACOBIAN),
        }
    }
}

impl<T: Real> SeedConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_roots == 0 {
            return Err(Error::InvalidConfig("n_roots must be positive".into()));
        }
        if self.n_modes < self.n_roots {
            return Err(Error::InvalidConfig(format!(
                "n_modes ({}) must be at least n_roots ({})",
                self.n_modes, self.n_roots
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidConfig("newton_max_iter must be positive".into()));
        }
        for (name, v) in [
            ("newton_tol", self.newton_tol),
            ("dedup_tol", self.dedup_tol),
            ("eps_jacobian", self.eps_jacobian),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite")));
            }
        }
        Ok(())
    }
}

/// Characteristic roots at one parameter point, sorted by descending real
/// part and then descending imaginary part.
///
/// Conjugate pairs are complete except possibly for the last root, where the
/// cut at `n_roots` may split a pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet<T> {
    pub roots: Vec<Complex<T>>,
    pub residuals: Vec<T>,
    pub point: ParameterPoint<T>,
}

impl<T: Real> RootSet<T> {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Index of the rightmost root; the lowest index wins ties.
    pub fn dominant_index(&self) -> Option<usize> {
        dominant_index(&self.roots)
    }

    pub fn max_residual(&self) -> T {
        self.residuals.iter().copied().fold(T::zero(), T::max)
    }
}

/// Index of the root with the largest real part; the lowest index wins ties.
pub fn dominant_index<T: Real>(roots: &[Complex<T>]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (k, r) in roots.iter().enumerate() {
        match best {
            Some((_, re)) if !(r.re > re) => {}
            _ => best = Some((k, r.re)),
        }
    }
    best.map(|(k, _)| k)
}

/// Descending real part, then descending imaginary part.
pub fn root_order<T: Real>(a: &Complex<T>, b: &Complex<T>) -> Ordering {
    b.re
        .partial_cmp(&a.re)
        .unwrap_or(Ordering::Equal)
        .then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
}

/// Newton's method `λ ← λ − D(λ)/D′(λ)` until the residual of
/// [`Bound::residual`] is at most `newton_tol`, followed by one polishing step.
pub fn newton_refine<T: Real>(
    qp: &QuasiPolynomial<T>,
    point: &ParameterPoint<T>,
    lambda0: Complex<T>,
    cfg: &SeedConfig<T>,
) -> Result<Complex<T>> {
    let bound = qp.bind(point)?;
    newton_bound(&bound, lambda0, cfg).map(|(root, _)| root)
}

/// Newton iteration on an already bound quasi-polynomial; returns the root
/// and the number of updates taken.
pub fn newton_bound<T: Real>(
    bound: &Bound<'_, T>,
    lambda0: Complex<T>,
    cfg: &SeedConfig<T>,
) -> Result<(Complex<T>, usize)> {
    let mut lambda = lambda0;
    for iter in 0..=cfg.newton_max_iter {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(Error::ConvergenceFailure(format!(
                "Newton iterate became non-finite after {iter} steps from {lambda0}"
            )));
        }
        let (d, dd) = bound.value_and_derivative(lambda);
        let res = bound.residual(lambda);
        if res <= cfg.newton_tol {
            // One more step takes |D| down to rounding level wherever that
            // is attainable; keep it only if it does not hurt.
            if dd.norm() >= cfg.eps_jacobian {
                let polished = lambda - d / dd;
                if bound.residual(polished) <= res {
                    return Ok((polished, iter));
                }
            }
            return Ok((lambda, iter));
        }
        if iter == cfg.newton_max_iter {
            return Err(Error::ConvergenceFailure(format!(
                "Newton did not reach |D| <= {} in {} steps from {lambda0} (|D| = {res})",
                cfg.newton_tol, cfg.newton_max_iter
            )));
        }
        let mag = dd.norm();
        if !(mag >= cfg.eps_jacobian) {
            return Err(Error::SingularJacobian {
                re: lambda.re.as_f64(),
                im: lambda.im.as_f64(),
                magnitude: mag.as_f64(),
            });
        }
        lambda = lambda - d / dd;
    }
    unreachable!("loop returns on its last iteration")
}

/// The `n_roots` rightmost characteristic roots of `qp` at `point`.
///
/// When every delayed term vanishes at `point` and the remaining polynomial
/// has degree below `n_roots`, all of its roots are returned instead.
pub fn seed_roots<T: Real>(
    qp: &QuasiPolynomial<T>,
    point: &ParameterPoint<T>,
    cfg: &SeedConfig<T>,
) -> Result<RootSet<T>> {
    cfg.validate()?;
    let bound = qp.bind(point)?;
    let terms = resolved_f64(&bound)?;
    let lead = terms[qp.undelayed_term()]
        .coeffs
        .last()
        .copied()
        .unwrap_or(0.0);
    if lead == 0.0 {
        return Err(Error::DegenerateProblem(
            "leading coefficient of the undelayed term is zero".into(),
        ));
    }
    // Terms whose coefficients all vanish do not contribute to D.
    let max_delay = terms
        .iter()
        .filter(|t| t.coeffs.iter().any(|&c| c != 0.0))
        .map(|t| t.delay)
        .fold(0.0, f64::max);

    if max_delay == 0.0 {
        // A polynomial has only `degree` roots; return all of them when fewer
        // than `n_roots` exist.
        let poly = collapse_polynomial(&terms);
        let degree = poly.len() - 1;
        if degree == 0 {
            return Err(Error::DegenerateProblem("the characteristic function is a nonzero constant".into()));
        }
        let cfg = SeedConfig {
            n_roots: cfg.n_roots.min(degree),
            ..cfg.clone()
        };
        return roots_from_candidates(&bound, point, polynomial_roots(&poly), &cfg);
    }
    let eigenvalues = collocation_eigenvalues(&terms, qp.undelayed_term(), cfg.n_modes);
    roots_from_candidates(&bound, point, eigenvalues, cfg)
}

fn resolved_f64<T: Real>(bound: &Bound<'_, T>) -> Result<Vec<ResolvedTerm<f64>>> {
    bound
        .resolved_terms()
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            let delay = t.delay.as_f64();
            if !(delay >= 0.0) || !delay.is_finite() {
                return Err(Error::InvalidQuasiPolynomial(format!(
                    "term {k} resolves to delay {delay}; delays must be finite and nonnegative"
                )));
            }
            Ok(ResolvedTerm {
                coeffs: t.coeffs.iter().map(|c| c.as_f64()).collect(),
                delay,
            })
        })
        .collect()
}

/// Sum of all terms as one polynomial (valid when every delay is zero).
fn collapse_polynomial(terms: &[ResolvedTerm<f64>]) -> Vec<f64> {
    let len = terms.iter().map(|t| t.coeffs.len()).max().unwrap_or(1);
    let mut poly = vec![0.0; len];
    for t in terms {
        for (j, c) in t.coeffs.iter().enumerate() {
            poly[j] += c;
        }
    }
    while poly.len() > 1 && poly.last() == Some(&0.0) {
        poly.pop();
    }
    poly
}

/// Eigenvalues of the companion matrix of `Σ poly[j] λ^j`.
fn polynomial_roots(poly: &[f64]) -> Vec<Complex<f64>> {
    let n = poly.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = poly[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -poly[i] / lead;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Chebyshev–Gauss–Lobatto points `cos(jπ/M)`, `j = 0..=M`.
pub(crate) fn cheb_points(m: usize) -> Vec<f64> {
    (0..=m).map(|j| (PI * j as f64 / m as f64).cos()).collect()
}

/// Chebyshev differentiation matrix on `cheb_points(m)`.
pub(crate) fn cheb_diff_matrix(m: usize) -> DMatrix<f64> {
    let x = cheb_points(m);
    let n = m + 1;
    let c: Vec<f64> = (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == m {
                2.0 * s
            } else {
                s
            }
        })
        .collect();
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (c[i] / c[j]) / (x[i] - x[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    d
}

/// Values at `x` of the Lagrange basis on `cheb_points(m)` (barycentric form).
pub(crate) fn cheb_lagrange(m: usize, x: f64) -> Vec<f64> {
    let nodes = cheb_points(m);
    let w: Vec<f64> = (0..=m)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == m {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    if let Some(j) = nodes.iter().position(|&xj| x == xj) {
        let mut out = vec![0.0; m + 1];
        out[j] = 1.0;
        return out;
    }
    let terms: Vec<f64> = nodes.iter().zip(&w).map(|(xj, wj)| wj / (x - xj)).collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / denom).collect()
}

/// Eigenvalues of the collocated generator of the first-order companion
/// system equivalent to `Σₖ Pₖ(d/dt) x(t − τₖ) = 0`.
pub fn collocation_eigenvalues(
    terms: &[ResolvedTerm<f64>],
    undelayed: usize,
    n_modes: usize,
) -> Vec<Complex<f64>> {
    let m = n_modes.max(2);
    let order = terms[undelayed].coeffs.len() - 1;
    let lead = terms[undelayed].coeffs[order];
    let max_delay = terms.iter().map(|t| t.delay).fold(0.0, f64::max);
    let dim = order * (m + 1);

    let scale = 2.0 / max_delay;
    let diff = cheb_diff_matrix(m);
    let mut a = DMatrix::<f64>::zeros(dim, dim);

    // Nodes j ≥ 1: φ′(θ_j) from the interpolant.
    for j in 1..=m {
        for l in 0..=m {
            let v = scale * diff[(j, l)];
            if v != 0.0 {
                for i in 0..order {
                    a[(j * order + i, l * order + i)] = v;
                }
            }
        }
    }
    // Node 0 (θ = 0): companion structure plus the delayed feedback.
    for i in 0..order - 1 {
        a[(i, i + 1)] = 1.0;
    }
    let last = order - 1;
    for (k, t) in terms.iter().enumerate() {
        let x = 1.0 - 2.0 * t.delay / max_delay;
        let basis = cheb_lagrange(m, x.clamp(-1.0, 1.0));
        let upto = if k == undelayed { order } else { t.coeffs.len() };
        for (deriv, &c) in t.coeffs.iter().take(upto).enumerate() {
            if c == 0.0 {
                continue;
            }
            for (l, &b) in basis.iter().enumerate() {
                if b != 0.0 {
                    a[(last, l * order + deriv)] -= c * b / lead;
                }
            }
        }
    }
    a.complex_eigenvalues().iter().copied().collect()
}

fn roots_from_candidates<T: Real>(
    bound: &Bound<'_, T>,
    point: &ParameterPoint<T>,
    eigenvalues: Vec<Complex<f64>>,
    cfg: &SeedConfig<T>,
) -> Result<RootSet<T>> {
    let mut eig: Vec<Complex<f64>> = eigenvalues
        .into_iter()
        .filter(|z| z.re.is_finite() && z.im.is_finite() && z.im >= 0.0)
        .collect();
    eig.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(Ordering::Equal));

    // Upper-half candidates stand for conjugate pairs; the Nth rightmost root
    // estimate is found by counting both members of each pair.
    let mut counted = 0;
    let mut nth_re = eig.last().map_or(0.0, |z| z.re);
    for z in &eig {
        counted += if z.im > 0.0 { 2 } else { 1 };
        if counted >= cfg.n_roots {
            nth_re = z.re;
            break;
        }
    }
    let threshold = nth_re - 1.0;
    let (near, far): (Vec<_>, Vec<_>) = eig.into_iter().partition(|z| z.re >= threshold);

    let mut found: Vec<Complex<T>> = Vec::new();
    refine_into(bound, &near, cfg, &mut found);
    if full_count(&found) < cfg.n_roots {
        refine_into(bound, &far, cfg, &mut found);
    }
    let total = full_count(&found);
    if total < cfg.n_roots {
        return Err(Error::ConvergenceFailure(format!(
            "only {total} distinct roots refined, {} requested",
            cfg.n_roots
        )));
    }

    let mut roots: Vec<Complex<T>> = Vec::with_capacity(total);
    for z in found {
        roots.push(z);
        if z.im > T::zero() {
            roots.push(z.conj());
        }
    }
    roots.sort_by(root_order);
    roots.truncate(cfg.n_roots);
    let residuals = roots.iter().map(|z| bound.residual(*z)).collect();
    Ok(RootSet {
        roots,
        residuals,
        point: point.clone(),
    })
}

fn full_count<T: Real>(upper: &[Complex<T>]) -> usize {
    upper
        .iter()
        .map(|z| if z.im > T::zero() { 2 } else { 1 })
        .sum()
}

/// Polishes each candidate and appends new upper-half roots to `found`.
fn refine_into<T: Real>(
    bound: &Bound<'_, T>,
    candidates: &[Complex<f64>],
    cfg: &SeedConfig<T>,
    found: &mut Vec<Complex<T>>,
) {
    for z in candidates {
        let start = Complex::new(T::lit(z.re), T::lit(z.im));
        let Ok((mut root, _)) = newton_bound(bound, start, cfg) else {
            continue;
        };
        if root.im < T::zero() {
            root = root.conj();
        }
        if root.im <= cfg.dedup_tol {
            // Re-polish on the real axis so the root is exactly real.
            match newton_bound(bound, Complex::new(root.re, T::zero()), cfg) {
                Ok((r, _)) if r.im == T::zero() => root = r,
                _ => continue,
            }
        }
        if found.iter().all(|f| (*f - root).norm() > cfg.dedup_tol) {
            found.push(root);
        }
    }
}
