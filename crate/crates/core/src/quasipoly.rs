//! Parameterized quasi-polynomials `D(λ; p) = Σₖ Pₖ(λ)·exp(−λ·τₖ)` with exact
//! first derivatives in `λ` and in every named parameter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default threshold on `|∂D/∂λ|` below which the continuation right-hand side
/// is reported as singular.
pub const DEFAULT_EPS_JACOBIAN: f64 = 1e-8;

/// A coefficient or delay slot: either a real constant or a named parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr<T> {
    Constant(T),
    Parameter(String),
    /// `factor · parameter`, e.g. the `−b` coefficient of `λ² + a − b·e^{−λτ}`.
    Scaled { factor: T, name: String },
}

impl<T: Real> ScalarExpr<T> {
    pub fn constant(value: T) -> Self {
        ScalarExpr::Constant(value)
    }

    pub fn param(name: impl Into<String>) -> Self {
        ScalarExpr::Parameter(name.into())
    }

    pub fn scaled(factor: T, name: impl Into<String>) -> Self {
        ScalarExpr::Scaled {
            factor,
            name: name.into(),
        }
    }

    pub fn param_name(&self) -> Option<&str> {
        match self {
            ScalarExpr::Constant(_) => None,
            ScalarExpr::Parameter(n) | ScalarExpr::Scaled { name: n, .. } => Some(n),
        }
    }

    fn is_zero_constant(&self) -> bool {
        matches!(self, ScalarExpr::Constant(v) if v.is_zero())
    }
}

impl<T: Real> fmt::Display for ScalarExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Constant(v) => write!(f, "{v}"),
            ScalarExpr::Parameter(name) => f.write_str(name),
            ScalarExpr::Scaled { factor, name } if *factor == -T::one() => write!(f, "-{name}"),
            ScalarExpr::Scaled { factor, name } => write!(f, "{factor}*{name}"),
        }
    }
}

/// One exponential group `P(λ)·exp(−λ·τ)`; `coeffs[j]` multiplies `λ^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T> {
    pub coeffs: Vec<ScalarExpr<T>>,
    pub delay: ScalarExpr<T>,
}

impl<T: Real> Term<T> {
    pub fn new(coeffs: Vec<ScalarExpr<T>>, delay: ScalarExpr<T>) -> Self {
        Term { coeffs, delay }
    }

    /// Polynomial degree (position of the leading coefficient).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Assignment of numeric values to named parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterPoint<T> {
    values: BTreeMap<String, T>,
}

impl<T: Real> ParameterPoint<T> {
    pub fn new() -> Self {
        ParameterPoint {
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.values.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: T) {
        self.values.insert(name.into(), value);
    }

    /// Returns a copy with `name` set to `value`.
    pub fn with(&self, name: &str, value: T) -> Self {
        let mut out = self.clone();
        out.set(name, value);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<T: Real, S: Into<String>> FromIterator<(S, T)> for ParameterPoint<T> {
    fn from_iter<I: IntoIterator<Item = (S, T)>>(iter: I) -> Self {
        ParameterPoint {
            values: iter.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Slot<T> {
    Const(T),
    Param { idx: usize, factor: T },
}

impl<T: Real> Slot<T> {
    /// Derivative of the slot value with respect to parameter `idx`.
    #[inline]
    fn weight(self, idx: usize) -> Option<T> {
        match self {
            Slot::Param { idx: i, factor } if i == idx => Some(factor),
            _ => None,
        }
    }

    #[inline]
    fn resolve(self, values: &[T]) -> T {
        match self {
            Slot::Const(v) => v,
            Slot::Param { idx, factor } => factor * values[idx],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct CompiledTerm<T> {
    coeffs: Vec<Slot<T>>,
    delay: Slot<T>,
}

/// A term with every slot resolved to a number.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedTerm<T> {
    pub coeffs: Vec<T>,
    pub delay: T,
}

/// Retarded quasi-polynomial with real coefficients.
///
/// Exactly one term carries the constant delay `0`, and its degree exceeds
/// the degree of every delayed term.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiPolynomial<T> {
    terms: Vec<Term<T>>,
    compiled: Vec<CompiledTerm<T>>,
    param_names: Vec<String>,
    undelayed: usize,
}

impl<T: Real> QuasiPolynomial<T> {
    pub fn new(terms: Vec<Term<T>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidQuasiPolynomial("no terms".into()));
        }
        let mut names = BTreeSet::new();
        for (k, term) in terms.iter().enumerate() {
            if term.coeffs.is_empty() {
                return Err(Error::InvalidQuasiPolynomial(format!(
                    "term {k} has no coefficients"
                )));
            }
            for slot in term.coeffs.iter().chain(std::iter::once(&term.delay)) {
                match slot {
                    ScalarExpr::Constant(v) if !v.is_finite() => {
                        return Err(Error::InvalidQuasiPolynomial(format!(
                            "term {k} has a non-finite constant"
                        )));
                    }
                    ScalarExpr::Scaled { factor, .. } if !factor.is_finite() => {
                        return Err(Error::InvalidQuasiPolynomial(format!(
                            "term {k} has a non-finite parameter factor"
                        )));
                    }
                    ScalarExpr::Parameter(name) | ScalarExpr::Scaled { name, .. } => {
                        if name.is_empty() {
                            return Err(Error::InvalidQuasiPolynomial(format!(
                                "term {k} has an empty parameter name"
                            )));
                        }
                        names.insert(name.clone());
                    }
                    _ => {}
                }
            }
            if let ScalarExpr::Constant(d) = term.delay {
                if d < T::zero() {
                    return Err(Error::InvalidQuasiPolynomial(format!(
                        "term {k} has negative delay {d}"
                    )));
                }
            }
        }

        let undelayed: Vec<usize> = terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.delay.is_zero_constant())
            .map(|(k, _)| k)
            .collect();
        let undelayed = match undelayed.as_slice() {
            [k] => *k,
            [] => {
                return Err(Error::InvalidQuasiPolynomial(
                    "no undelayed term (exactly one term must have delay 0)".into(),
                ))
            }
            _ => {
                return Err(Error::InvalidQuasiPolynomial(
                    "more than one undelayed term".into(),
                ))
            }
        };
        if terms[undelayed].coeffs.last().is_some_and(|c| c.is_zero_constant()) {
            return Err(Error::InvalidQuasiPolynomial(format!(
                "undelayed term {undelayed} has a zero leading coefficient"
            )));
        }
        let lead = terms[undelayed].degree();
        if lead == 0 {
            return Err(Error::InvalidQuasiPolynomial(
                "undelayed term must have degree at least 1".into(),
            ));
        }
        if let Some((k, t)) = terms
            .iter()
            .enumerate()
            .find(|(k, t)| *k != undelayed && t.degree() >= lead)
        {
            return Err(Error::InvalidQuasiPolynomial(format!(
                "delayed term {k} has degree {} but the undelayed degree is {lead} (not retarded)",
                t.degree()
            )));
        }

        let param_names: Vec<String> = names.into_iter().collect();
        let index_of = |n: &String| param_names.binary_search(n).expect("parameter collected above");
        let compile = |e: &ScalarExpr<T>| match e {
            ScalarExpr::Constant(v) => Slot::Const(*v),
            ScalarExpr::Parameter(n) => Slot::Param {
                idx: index_of(n),
                factor: T::one(),
            },
            ScalarExpr::Scaled { factor, name } => Slot::Param {
                idx: index_of(name),
                factor: *factor,
            },
        };
        let compiled = terms
            .iter()
            .map(|t| CompiledTerm {
                coeffs: t.coeffs.iter().map(compile).collect(),
                delay: compile(&t.delay),
            })
            .collect();

        Ok(QuasiPolynomial {
            terms,
            compiled,
            param_names,
            undelayed,
        })
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    /// Sorted parameter identifiers appearing anywhere in the terms.
    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    /// Index of the undelayed term.
    pub fn undelayed_term(&self) -> usize {
        self.undelayed
    }

    /// Order of the underlying differential equation.
    pub fn order(&self) -> usize {
        self.terms[self.undelayed].degree()
    }

    /// Resolves every parameter against `point`.
    pub fn bind(&self, point: &ParameterPoint<T>) -> Result<Bound<'_, T>> {
        let values = self
            .param_names
            .iter()
            .map(|name| {
                let v = point
                    .get(name)
                    .ok_or_else(|| Error::UnknownParameter(name.clone()))?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("parameter `{name}` = {v}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<T>>>()?;
        Ok(Bound { qp: self, values })
    }

    /// `D(λ)` at `point`.
    pub fn evaluate(&self, point: &ParameterPoint<T>, lambda: Complex<T>) -> Result<Complex<T>> {
        check_lambda(lambda)?;
        Ok(self.bind(point)?.value(lambda))
    }

    /// Scaled residual of `λ` at `point`; see [`Bound::residual`].
    pub fn residual(&self, point: &ParameterPoint<T>, lambda: Complex<T>) -> Result<T> {
        check_lambda(lambda)?;
        Ok(self.bind(point)?.residual(lambda))
    }

    /// `∂D/∂λ` at fixed parameters.
    pub fn d_dlambda(&self, point: &ParameterPoint<T>, lambda: Complex<T>) -> Result<Complex<T>> {
        check_lambda(lambda)?;
        Ok(self.bind(point)?.d_dlambda(lambda))
    }

    /// `∂D/∂p`, summed over every slot in which `param` appears.
    pub fn d_dparam(
        &self,
        point: &ParameterPoint<T>,
        lambda: Complex<T>,
        param: &str,
    ) -> Result<Complex<T>> {
        check_lambda(lambda)?;
        let idx = self
            .param_index(param)
            .ok_or_else(|| Error::UnknownParameter(param.to_string()))?;
        Ok(self.bind(point)?.d_dparam(lambda, idx))
    }

    /// `dλ/dp = −(∂D/∂p)/(∂D/∂λ)`, or `SingularJacobian` when
    /// `|∂D/∂λ| < eps_jacobian`.
    pub fn continuation_rhs(
        &self,
        point: &ParameterPoint<T>,
        lambda: Complex<T>,
        param: &str,
        eps_jacobian: T,
    ) -> Result<Complex<T>> {
        check_lambda(lambda)?;
        let idx = self
            .param_index(param)
            .ok_or_else(|| Error::UnknownParameter(param.to_string()))?;
        self.bind(point)?.rhs(lambda, idx, eps_jacobian)
    }
}

impl<T: Real> fmt::Display for QuasiPolynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, term) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            f.write_str("(")?;
            for (j, c) in term.coeffs.iter().enumerate() {
                if j > 0 {
                    f.write_str(" + ")?;
                }
                match j {
                    0 => write!(f, "{c}")?,
                    1 => write!(f, "{c}·λ")?,
                    _ => write!(f, "{c}·λ^{j}")?,
                }
            }
            f.write_str(")")?;
            if !term.delay.is_zero_constant() {
                write!(f, "·exp(−λ·{})", term.delay)?;
            }
        }
        Ok(())
    }
}

fn check_lambda<T: Real>(lambda: Complex<T>) -> Result<()> {
    if lambda.re.is_finite() && lambda.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("lambda = {lambda}")))
    }
}

/// A quasi-polynomial with every parameter resolved to a value.
///
/// Individual parameter values can be overwritten in place, which is how the
/// continuation kernels move along a parameter without re-resolving names.
#[derive(Clone, Debug)]
pub struct Bound<'a, T> {
    qp: &'a QuasiPolynomial<T>,
    values: Vec<T>,
}

/// `P(λ)` and `P′(λ)` by Horner's rule.
#[inline]
fn horner<T: Real>(coeffs: &[Slot<T>], values: &[T], lambda: Complex<T>) -> (Complex<T>, Complex<T>) {
    let n = coeffs.len();
    let mut p = Complex::new(coeffs[n - 1].resolve(values), T::zero());
    let mut dp = Complex::new(T::zero(), T::zero());
    for c in coeffs[..n - 1].iter().rev() {
        dp = dp * lambda + p;
        p = p * lambda + c.resolve(values);
    }
    (p, dp)
}

#[inline]
fn delay_factor<T: Real>(lambda: Complex<T>, tau: T) -> Complex<T> {
    if tau.is_zero() {
        Complex::new(T::one(), T::zero())
    } else {
        (-lambda * tau).exp()
    }
}

impl<'a, T: Real> Bound<'a, T> {
    pub fn quasi_polynomial(&self) -> &'a QuasiPolynomial<T> {
        self.qp
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn set_value(&mut self, idx: usize, value: T) {
        self.values[idx] = value;
    }

    pub fn value_of(&self, idx: usize) -> T {
        self.values[idx]
    }

    /// Numeric coefficients and delays of every term.
    pub fn resolved_terms(&self) -> Vec<ResolvedTerm<T>> {
        self.qp
            .compiled
            .iter()
            .map(|t| ResolvedTerm {
                coeffs: t.coeffs.iter().map(|c| c.resolve(&self.values)).collect(),
                delay: t.delay.resolve(&self.values),
            })
            .collect()
    }

    pub fn value(&self, lambda: Complex<T>) -> Complex<T> {
        let mut sum = Complex::new(T::zero(), T::zero());
        for t in &self.qp.compiled {
            let (p, _) = horner(&t.coeffs, &self.values, lambda);
            sum = sum + p * delay_factor(lambda, t.delay.resolve(&self.values));
        }
        sum
    }

    /// Residual `|D(λ)| / max(1, Σₖ |Pₖ|(|λ|)·|exp(−λτₖ)|)`, where `|Pₖ|`
    /// has the absolute coefficients. Equals `|D(λ)|` for moderate roots and
    /// becomes the relative backward error once the terms grow past 1.
    pub fn residual(&self, lambda: Complex<T>) -> T {
        let r = lambda.norm();
        let mut sum = Complex::new(T::zero(), T::zero());
        let mut scale = T::zero();
        for t in &self.qp.compiled {
            let (p, _) = horner(&t.coeffs, &self.values, lambda);
            let e = delay_factor(lambda, t.delay.resolve(&self.values));
            sum = sum + p * e;
            let abs_p = t
                .coeffs
                .iter()
                .rev()
                .fold(T::zero(), |acc, c| acc * r + c.resolve(&self.values).abs());
            scale = scale + abs_p * e.norm();
        }
        sum.norm() / scale.max(T::one())
    }

    /// `Σₖ [Pₖ′(λ) − τₖ·Pₖ(λ)]·exp(−λτₖ)`.
    pub fn d_dlambda(&self, lambda: Complex<T>) -> Complex<T> {
        self.value_and_derivative(lambda).1
    }

    /// `(D(λ), ∂D/∂λ)` sharing the exponentials.
    pub fn value_and_derivative(&self, lambda: Complex<T>) -> (Complex<T>, Complex<T>) {
        let mut d = Complex::new(T::zero(), T::zero());
        let mut dd = Complex::new(T::zero(), T::zero());
        for t in &self.qp.compiled {
            let tau = t.delay.resolve(&self.values);
            let (p, dp) = horner(&t.coeffs, &self.values, lambda);
            let e = delay_factor(lambda, tau);
            d = d + p * e;
            dd = dd + (dp - p * tau) * e;
        }
        (d, dd)
    }

    pub fn d_dparam(&self, lambda: Complex<T>, idx: usize) -> Complex<T> {
        self.jacobian_and_sensitivity(lambda, idx).1
    }

    /// `(∂D/∂λ, ∂D/∂p)` for parameter `idx`, sharing the exponentials.
    pub fn jacobian_and_sensitivity(&self, lambda: Complex<T>, idx: usize) -> (Complex<T>, Complex<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        let mut dd = zero;
        let mut dp_sum = zero;
        for t in &self.qp.compiled {
            let tau = t.delay.resolve(&self.values);
            let (p, dp) = horner(&t.coeffs, &self.values, lambda);
            let e = delay_factor(lambda, tau);
            dd = dd + (dp - p * tau) * e;

            let mut sens = zero;
            let mut power = Complex::new(T::one(), T::zero());
            for c in &t.coeffs {
                if let Some(w) = c.weight(idx) {
                    sens = sens + power * w;
                }
                power = power * lambda;
            }
            if let Some(w) = t.delay.weight(idx) {
                sens = sens - lambda * p * w;
            }
            dp_sum = dp_sum + sens * e;
        }
        (dd, dp_sum)
    }

    /// `dλ/dp` for parameter `idx`.
    #[inline]
    pub fn rhs(&self, lambda: Complex<T>, idx: usize, eps_jacobian: T) -> Result<Complex<T>> {
        let (dd, dp) = self.jacobian_and_sensitivity(lambda, idx);
        let mag = dd.norm();
        if !(mag >= eps_jacobian) {
            return Err(Error::SingularJacobian {
                re: lambda.re.as_f64(),
                im: lambda.im.as_f64(),
                magnitude: mag.as_f64(),
            });
        }
        Ok(-dp / dd)
    }
}
