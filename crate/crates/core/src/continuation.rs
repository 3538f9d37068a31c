//! Continuation of characteristic roots along one parameter.
//!
//! Each root obeys `dλ/dp = −(∂D/∂p)/(∂D/∂λ)`. The Jacobian of the vector
//! form is diagonal, so every root is integrated as its own complex ODE and a
//! singularity in one root leaves the others untouched.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::{Dopri5, StopReason};
use crate::quasipoly::{ParameterPoint, QuasiPolynomial, DEFAULT_EPS_JACOBIAN};
use crate::scalar::Real;
use crate::seeding::RootSet;

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    /// Threshold `ε_J` on `|∂D/∂λ|`.
    pub eps_jacobian: T,
    /// Largest admissible `|D(λ)|` at a grid node.
    pub residual_check_tol: T,
    /// Optional cap on the integrator step, in parameter units.
    pub max_step: Option<T>,
    /// Step budget per root and direction.
    pub max_steps: usize,
}

impl<T: Real> Default for ContinuationConfig<T> {
    fn default() -> Self {
        ContinuationConfig {
            abs_tol: T::lit(1e-12),
            rel_tol: T::lit(1e-12),
            eps_jacobian: T::lit(DEFAULT_EPS_JACOBIAN),
            residual_check_tol: T::lit(1e-6),
            max_step: None,
            max_steps: 100_000,
        }
    }
}

impl<T: Real> ContinuationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("eps_jacobian", self.eps_jacobian),
            ("residual_check_tol", self.residual_check_tol),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite")));
            }
        }
        if let Some(m) = self.max_step {
            if !(m > T::zero()) {
                return Err(Error::InvalidConfig("max_step must be positive".into()));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }

    fn integrator(&self) -> Dopri5<T> {
        Dopri5 {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Continued,
    Reseeded,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// `|∂D/∂λ|` dropped below `ε_J`, or the step size collapsed while
    /// `|∂D/∂λ| < √ε_J` (a fold the integrator cannot resolve further).
    SingularJacobian,
    /// The step size collapsed away from a singular Jacobian, typically a
    /// root escaping to `Re λ → −∞`.
    StepUnderflow,
    NonFinite,
    StepLimit,
}

/// A root whose integration ended early.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularEvent<T> {
    pub param_value: T,
    pub root: usize,
    pub kind: EventKind,
}

/// Roots at every node of a one-parameter grid.
///
/// Unavailable roots (past an event) are stored as NaN and their node is
/// marked [`NodeStatus::Failed`].
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub param: String,
    /// Values of every other parameter.
    pub base_point: ParameterPoint<T>,
    pub grid: Vec<T>,
    pub roots_at: Vec<Vec<Complex<T>>>,
    pub residuals_at: Vec<Vec<T>>,
    pub status_at: Vec<NodeStatus>,
    pub singular_events: Vec<SingularEvent<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn point_at(&self, node: usize) -> ParameterPoint<T> {
        self.base_point.with(&self.param, self.grid[node])
    }

    pub fn n_roots(&self) -> usize {
        self.roots_at.first().map_or(0, Vec::len)
    }
}

/// One `(node, root)` entry whose residual is above tolerance or not finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualViolation<T> {
    pub node: usize,
    pub root: usize,
    pub residual: T,
}

fn nan<T: Real>() -> Complex<T> {
    Complex::new(T::nan(), T::nan())
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty continuation grid".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidConfig("non-finite grid value".into()));
    }
    if grid.len() > 1 {
        let increasing = grid[1] > grid[0];
        let monotone = grid.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
        if !monotone {
            return Err(Error::InvalidConfig("grid must be strictly monotone".into()));
        }
    }
    Ok(())
}

/// Continues every root of `seed` along `param` and evaluates it at each
/// node of `grid` through the integrator's dense output.
///
/// The integration starts at the seed's value `p*` of `param` and runs
/// separately toward the nodes above and below it. Singular Jacobians,
/// non-finite states and step collapse end the affected root's run and are
/// recorded in `singular_events`; they are not errors.
pub fn continue_1d<T: Real>(
    qp: &QuasiPolynomial<T>,
    seed: &RootSet<T>,
    param: &str,
    grid: &[T],
    cfg: &ContinuationConfig<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    check_grid(grid)?;
    let idx = qp
        .param_index(param)
        .ok_or_else(|| Error::UnknownParameter(param.to_string()))?;
    let start = seed
        .point
        .get(param)
        .ok_or_else(|| Error::UnknownParameter(param.to_string()))?;
    let bound = qp.bind(&seed.point)?;

    // Node indices on each side of p*, ordered outward from p*.
    let mut up: Vec<usize> = (0..grid.len()).filter(|&j| grid[j] >= start).collect();
    let mut down: Vec<usize> = (0..grid.len()).filter(|&j| grid[j] < start).collect();
    up.sort_by(|&a, &b| grid[a].partial_cmp(&grid[b]).expect("finite grid"));
    down.sort_by(|&a, &b| grid[b].partial_cmp(&grid[a]).expect("finite grid"));

    // The right-hand side commutes with conjugation, so a root whose exact
    // conjugate is also in the seed is integrated once and mirrored.
    let mirror_of = conjugate_partners(&seed.roots);
    let primaries: Vec<usize> = (0..seed.roots.len()).filter(|&k| mirror_of[k].is_none()).collect();

    let integrator = cfg.integrator();
    let eps = cfg.eps_jacobian;
    let solved: Vec<(Vec<Complex<T>>, Vec<SingularEvent<T>>)> = primaries
        .par_iter()
        .map(|&k| {
            let root0 = seed.roots[k];
            let mut column = vec![nan(); grid.len()];
            let mut events = Vec::new();
            for side in [&up, &down] {
                let Some(&far) = side.last() else { continue };
                let outputs: Vec<T> = side.iter().map(|&j| grid[j]).collect();
                let mut local = bound.clone();
                let sol = integrator.solve(
                    |p, lambda| {
                        local.set_value(idx, p);
                        local.rhs(lambda, idx, eps)
                    },
                    start,
                    root0,
                    grid[far],
                    &outputs,
                );
                for (&j, v) in side.iter().zip(&sol.values) {
                    column[j] = *v;
                }
                if let Some((at, reason)) = sol.stop {
                    let kind = match reason {
                        StopReason::Rhs(Error::SingularJacobian { .. }) => EventKind::SingularJacobian,
                        StopReason::Rhs(_) | StopReason::NonFinite => EventKind::NonFinite,
                        StopReason::StepUnderflow => {
                            local.set_value(idx, at);
                            if local.d_dlambda(sol.final_state).norm() < eps.sqrt() {
                                EventKind::SingularJacobian
                            } else {
                                EventKind::StepUnderflow
                            }
                        }
                        StopReason::StepLimit => EventKind::StepLimit,
                    };
                    events.push(SingularEvent {
                        param_value: at,
                        root: k,
                        kind,
                    });
                }
            }
            (column, events)
        })
        .collect();

    let n = seed.roots.len();
    let mut slot_of = vec![usize::MAX; n];
    for (slot, &k) in primaries.iter().enumerate() {
        slot_of[k] = slot;
    }
    let mut roots_at = vec![Vec::with_capacity(n); grid.len()];
    let mut singular_events = Vec::new();
    for k in 0..n {
        let (source, conjugate) = match mirror_of[k] {
            Some(i) => (i, true),
            None => (k, false),
        };
        let (column, events) = &solved[slot_of[source]];
        for (j, v) in column.iter().enumerate() {
            roots_at[j].push(if conjugate { v.conj() } else { *v });
        }
        singular_events.extend(events.iter().map(|e| SingularEvent { root: k, ..e.clone() }));
    }

    let mut traj = Trajectory {
        param: param.to_string(),
        base_point: seed.point.clone(),
        grid: grid.to_vec(),
        roots_at,
        residuals_at: Vec::new(),
        status_at: Vec::new(),
        singular_events,
    };
    let (residuals, status) = node_residuals(qp, &traj, cfg.residual_check_tol)?;
    traj.residuals_at = residuals;
    traj.status_at = status;
    Ok(traj)
}

/// For each root with negative imaginary part, the index of an unclaimed
/// root that is its exact conjugate.
fn conjugate_partners<T: Real>(roots: &[Complex<T>]) -> Vec<Option<usize>> {
    let mut mirror_of = vec![None; roots.len()];
    let mut claimed = vec![false; roots.len()];
    for (k, z) in roots.iter().enumerate() {
        if !(z.im < T::zero()) {
            continue;
        }
        let partner = (0..roots.len()).find(|&i| !claimed[i] && roots[i].im > T::zero() && roots[i] == z.conj());
        if let Some(i) = partner {
            claimed[i] = true;
            mirror_of[k] = Some(i);
        }
    }
    mirror_of
}

/// Residuals at every `(node, root)` and the resulting node status.
pub(crate) fn node_residuals<T: Real>(
    qp: &QuasiPolynomial<T>,
    traj: &Trajectory<T>,
    tol: T,
) -> Result<(Vec<Vec<T>>, Vec<NodeStatus>)> {
    let idx = qp
        .param_index(&traj.param)
        .ok_or_else(|| Error::UnknownParameter(traj.param.clone()))?;
    let mut bound = qp.bind(&traj.base_point)?;
    let mut residuals = Vec::with_capacity(traj.grid.len());
    let mut status = Vec::with_capacity(traj.grid.len());
    for (j, roots) in traj.roots_at.iter().enumerate() {
        bound.set_value(idx, traj.grid[j]);
        let res: Vec<T> = roots.iter().map(|&z| bound.residual(z)).collect();
        let ok = res.iter().all(|&r| r <= tol);
        status.push(if ok { NodeStatus::Continued } else { NodeStatus::Failed });
        residuals.push(res);
    }
    Ok((residuals, status))
}

/// Recomputes `|D(λ)|` at every `(node, root)` of `traj` and returns the
/// entries above `residual_check_tol` (non-finite residuals included).
pub fn verify_residuals<T: Real>(
    qp: &QuasiPolynomial<T>,
    traj: &Trajectory<T>,
    cfg: &ContinuationConfig<T>,
) -> Vec<ResidualViolation<T>> {
    let Some(idx) = qp.param_index(&traj.param) else {
        return all_violations(traj);
    };
    let Ok(mut bound) = qp.bind(&traj.base_point) else {
        return all_violations(traj);
    };
    let mut out = Vec::new();
    for (node, roots) in traj.roots_at.iter().enumerate() {
        bound.set_value(idx, traj.grid[node]);
        for (root, &z) in roots.iter().enumerate() {
            let residual = bound.residual(z);
            if !(residual <= cfg.residual_check_tol) {
                out.push(ResidualViolation { node, root, residual });
            }
        }
    }
    out
}

fn all_violations<T: Real>(traj: &Trajectory<T>) -> Vec<ResidualViolation<T>> {
    traj.roots_at
        .iter()
        .enumerate()
        .flat_map(|(node, roots)| {
            (0..roots.len()).map(move |root| ResidualViolation {
                node,
                root,
                residual: T::nan(),
            })
        })
        .collect()
}
