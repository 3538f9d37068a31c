//! Dormand–Prince 5(4) integrator for a single complex-valued ODE, with
//! continuous extension for output at prescribed points.
//!
//! The complex state is treated as two real components for error control.

use num_complex::Complex;

use crate::error::Error;
use crate::scalar::Real;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Why an integration ended before reaching its final time.
#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    /// The right-hand side refused to evaluate at a point the step size could
    /// not avoid (e.g. a singular Jacobian).
    Rhs(Error),
    /// The step size fell below the resolvable minimum.
    StepUnderflow,
    /// The state or error estimate became non-finite.
    NonFinite,
    /// `max_steps` accepted or rejected steps were taken.
    StepLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T> {
    /// State at each requested output, in order; entries past an early stop
    /// are missing.
    pub values: Vec<Complex<T>>,
    /// Time and reason of an early stop.
    pub stop: Option<(T, StopReason)>,
    /// Last accepted state.
    pub final_state: Complex<T>,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dopri5<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_step: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for Dopri5<T> {
    fn default() -> Self {
        Dopri5 {
            abs_tol: T::lit(1e-12),
            rel_tol: T::lit(1e-12),
            max_step: None,
            max_steps: 100_000,
        }
    }
}

#[inline]
fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

impl<T: Real> Dopri5<T> {
    /// RMS of the error components scaled by `abs_tol + rel_tol·max(|y|,|y_new|)`.
    #[inline]
    fn error_norm(&self, err: Complex<T>, y: Complex<T>, y_new: Complex<T>) -> T {
        let sc_re = self.abs_tol + self.rel_tol * y.re.abs().max(y_new.re.abs());
        let sc_im = self.abs_tol + self.rel_tol * y.im.abs().max(y_new.im.abs());
        let a = err.re / sc_re;
        let b = err.im / sc_im;
        ((a * a + b * b) / lit(2.0)).sqrt()
    }

    fn scaled_norm(&self, v: Complex<T>, y: Complex<T>) -> T {
        self.error_norm(v, y, y)
    }

    /// Integrates `y′ = f(t, y)` from `(t0, y0)` toward `t_end`, returning the
    /// state at every time in `outputs`.
    ///
    /// `outputs` must be ordered from `t0` toward `t_end` and lie between
    /// them. `f` may return an error, which is treated as a hard wall: the
    /// step is shrunk until the wall is resolved to the minimum step size.
    pub fn solve<F>(&self, mut f: F, t0: T, y0: Complex<T>, t_end: T, outputs: &[T]) -> Solution<T>
    where
        F: FnMut(T, Complex<T>) -> Result<Complex<T>, Error>,
    {
        let mut sol = Solution {
            values: Vec::with_capacity(outputs.len()),
            stop: None,
            final_state: y0,
            accepted: 0,
            rejected: 0,
            evaluations: 0,
        };
        let span = t_end - t0;
        let mut out_iter = outputs.iter().copied().peekable();
        while let Some(&s) = out_iter.peek() {
            if s == t0 {
                sol.values.push(y0);
                out_iter.next();
            } else {
                break;
            }
        }
        if span.is_zero() || out_iter.peek().is_none() {
            return sol;
        }
        let dir = span.signum();
        let t_scale = t0.abs().max(t_end.abs()).max(span.abs());
        let min_step = t_scale * T::epsilon() * lit(64.0);
        let max_step = self.max_step.map_or(span.abs(), |m| m.min(span.abs()));

        let mut t = t0;
        let mut y = y0;
        sol.evaluations += 1;
        let mut k1 = match f(t, y) {
            Ok(v) => v,
            Err(e) => {
                sol.stop = Some((t, StopReason::Rhs(e)));
                return sol;
            }
        };

        let mut h = match self.initial_step(&mut f, t, y, k1, dir, max_step, &mut sol.evaluations) {
            Some(h) => h,
            None => min_step.max(span.abs() * lit(1e-6)),
        };
        let mut last_rejected = false;
        let mut last_error: Option<Error> = None;

        loop {
            if sol.accepted + sol.rejected >= self.max_steps {
                sol.stop = Some((t, StopReason::StepLimit));
                return sol;
            }
            let remaining = (t_end - t) * dir;
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h < min_step {
                let reason = match last_error.take() {
                    Some(e) => StopReason::Rhs(e),
                    None => StopReason::StepUnderflow,
                };
                sol.stop = Some((t, reason));
                return sol;
            }
            let hs = h * dir;

            let stages = self.stages(&mut f, t, y, k1, hs, &mut sol.evaluations);
            let (y_new, k) = match stages {
                Ok(v) => v,
                Err(e) => {
                    last_error = Some(e);
                    sol.rejected += 1;
                    last_rejected = true;
                    h = h * lit(0.25);
                    continue;
                }
            };
            let [_, k2, k3, k4, k5, k6, k7] = k;
            let _ = k2;
            let err_vec = (k1 * lit::<T>(E1)
                + k3 * lit::<T>(E3)
                + k4 * lit::<T>(E4)
                + k5 * lit::<T>(E5)
                + k6 * lit::<T>(E6)
                + k7 * lit::<T>(E7))
                * hs;
            let err = self.error_norm(err_vec, y, y_new);

            if !err.is_finite() || !y_new.re.is_finite() || !y_new.im.is_finite() {
                sol.rejected += 1;
                last_rejected = true;
                h = h * lit(0.2);
                if h < min_step {
                    sol.stop = Some((t, StopReason::NonFinite));
                    return sol;
                }
                continue;
            }

            if err <= T::one() {
                last_error = None;
                // Continuous extension over [t, t + hs].
                let r1 = y;
                let r2 = y_new - y;
                let r3 = k1 * hs - r2;
                let r4 = r2 - k7 * hs - r3;
                let r5 = (k1 * lit::<T>(D1)
                    + k3 * lit::<T>(D3)
                    + k4 * lit::<T>(D4)
                    + k5 * lit::<T>(D5)
                    + k6 * lit::<T>(D6)
                    + k7 * lit::<T>(D7))
                    * hs;
                let t_new = if last { t_end } else { t + hs };
                while let Some(&s) = out_iter.peek() {
                    if (s - t_new) * dir > T::zero() {
                        break;
                    }
                    let value = if s == t_new {
                        y_new
                    } else {
                        let theta = (s - t) / hs;
                        let theta1 = T::one() - theta;
                        r1 + (r2 + (r3 + (r4 + r5 * theta1) * theta) * theta1) * theta
                    };
                    sol.values.push(value);
                    out_iter.next();
                }
                sol.accepted += 1;
                t = t_new;
                y = y_new;
                sol.final_state = y;
                k1 = k7;
                if last || out_iter.peek().is_none() {
                    return sol;
                }
                let mut fac = if err.is_zero() {
                    lit(5.0)
                } else {
                    (lit::<T>(0.9) * err.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2))
                };
                if last_rejected {
                    fac = fac.min(T::one());
                }
                last_rejected = false;
                h = (h * fac).min(max_step);
            } else {
                sol.rejected += 1;
                last_rejected = true;
                let fac = (lit::<T>(0.9) * err.powf(lit(-0.2))).max(lit(0.2));
                h = h * fac;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn initial_step<F>(
        &self,
        f: &mut F,
        t: T,
        y: Complex<T>,
        f0: Complex<T>,
        dir: T,
        max_step: T,
        evals: &mut usize,
    ) -> Option<T>
    where
        F: FnMut(T, Complex<T>) -> Result<Complex<T>, Error>,
    {
        let d0 = self.scaled_norm(y, y);
        let d1 = self.scaled_norm(f0, y);
        let h0 = if d0 < lit(1e-5) || d1 < lit(1e-5) {
            lit(1e-6)
        } else {
            lit::<T>(0.01) * d0 / d1
        };
        let h0 = h0.min(max_step);
        *evals += 1;
        let f1 = f(t + h0 * dir, y + f0 * (h0 * dir)).ok()?;
        let d2 = self.scaled_norm(f1 - f0, y) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= lit(1e-15) {
            (h0 * lit(1e-3)).max(lit(1e-6))
        } else {
            (lit::<T>(0.01) / dm).powf(lit(0.2))
        };
        Some((h0 * lit(100.0)).min(h1).min(max_step))
    }

    /// Stages 2–7; returns the 5th-order solution and all stage slopes.
    #[inline]
    fn stages<F>(
        &self,
        f: &mut F,
        t: T,
        y: Complex<T>,
        k1: Complex<T>,
        h: T,
        evals: &mut usize,
    ) -> Result<(Complex<T>, [Complex<T>; 7]), Error>
    where
        F: FnMut(T, Complex<T>) -> Result<Complex<T>, Error>,
    {
        *evals += 6;
        let k2 = f(t + h * lit(C2), y + k1 * (h * lit(A21)))?;
        let k3 = f(t + h * lit(C3), y + (k1 * lit::<T>(A31) + k2 * lit::<T>(A32)) * h)?;
        let k4 = f(
            t + h * lit(C4),
            y + (k1 * lit::<T>(A41) + k2 * lit::<T>(A42) + k3 * lit::<T>(A43)) * h,
        )?;
        let k5 = f(
            t + h * lit(C5),
            y + (k1 * lit::<T>(A51) + k2 * lit::<T>(A52) + k3 * lit::<T>(A53) + k4 * lit::<T>(A54)) * h,
        )?;
        let k6 = f(
            t + h,
            y + (k1 * lit::<T>(A61)
                + k2 * lit::<T>(A62)
                + k3 * lit::<T>(A63)
                + k4 * lit::<T>(A64)
                + k5 * lit::<T>(A65))
                * h,
        )?;
        let y_new = y + (k1 * lit::<T>(A71)
            + k3 * lit::<T>(A73)
            + k4 * lit::<T>(A74)
            + k5 * lit::<T>(A75)
            + k6 * lit::<T>(A76))
            * h;
        let k7 = f(t + h, y_new)?;
        Ok((y_new, [k1, k2, k3, k4, k5, k6, k7]))
    }
}
