//! Two-parameter stability charts.
//!
//! [`sweep2d`] seeds once, continues the roots along the first parameter,
//! then continues every first-stage node along the second parameter.
//! [`dense_sweep`] solves an independent seeding problem at every node and
//! serves as the oracle and the timing baseline for [`benchmark`].

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rayon::prelude::*;

use crate::continuation::{continue_1d, verify_residuals, ContinuationConfig, EventKind, NodeStatus, ResidualViolation, SingularEvent, Trajectory};
use crate::error::{Error, Result};
use crate::quasipoly::{ParameterPoint, QuasiPolynomial};
use crate::scalar::Real;
use crate::seeding::{dominant_index, seed_roots, RootSet, SeedConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig<T> {
    pub param1: String,
    pub param2: String,
    pub range1: (T, T),
    pub range2: (T, T),
    pub n1: usize,
    pub n2: usize,
    /// Full parameter assignment; its `param1`/`param2` values are the anchor.
    pub seed_point: ParameterPoint<T>,
    pub seed_cfg: SeedConfig<T>,
    pub cont_cfg: ContinuationConfig<T>,
}

/// `n` equidistant nodes including both endpoints.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let last = T::from_usize(n - 1).expect("grid size");
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * T::from_usize(i).expect("grid index") / last
                    }
                })
                .collect()
        }
    }
}

/// Corner of `range1 × range2` closest to the origin; ties go to the lower
/// coordinates.
pub fn default_anchor<T: Real>(range1: (T, T), range2: (T, T)) -> (T, T) {
    let pick = |(lo, hi): (T, T)| if hi.abs() < lo.abs() { hi } else { lo };
    (pick(range1), pick(range2))
}

impl<T: Real> SweepConfig<T> {
    pub fn grid1(&self) -> Vec<T> {
        linspace(self.range1.0, self.range1.1, self.n1)
    }

    pub fn grid2(&self) -> Vec<T> {
        linspace(self.range2.0, self.range2.1, self.n2)
    }

    pub fn anchor(&self) -> (T, T) {
        (
            self.seed_point.get(&self.param1).unwrap_or(T::nan()),
            self.seed_point.get(&self.param2).unwrap_or(T::nan()),
        )
    }

    pub fn validate(&self, qp: &QuasiPolynomial<T>) -> Result<()> {
        self.seed_cfg.validate()?;
        self.cont_cfg.validate()?;
        if self.param1 == self.param2 {
            return Err(Error::InvalidConfig("param1 and param2 must differ".into()));
        }
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidConfig("grid counts must be at least 1".into()));
        }
        for (name, (lo, hi), n) in [
            (&self.param1, self.range1, self.n1),
            (&self.param2, self.range2, self.n2),
        ] {
            if qp.param_index(name).is_none() {
                return Err(Error::UnknownParameter(name.clone()));
            }
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidConfig(format!("invalid range for `{name}`")));
            }
            if n > 1 && lo == hi {
                return Err(Error::InvalidConfig(format!(
                    "range for `{name}` is a single point but {n} nodes were requested"
                )));
            }
            let v = self
                .seed_point
                .get(name)
                .ok_or_else(|| Error::UnknownParameter(name.clone()))?;
            if !(v >= lo && v <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "anchor value {v} of `{name}` lies outside [{lo}, {hi}]"
                )));
            }
        }
        // Delays are linear in each parameter, so the corners bound them.
        for p1 in [self.range1.0, self.range1.1] {
            for p2 in [self.range2.0, self.range2.1] {
                let point = self.seed_point.with(&self.param1, p1).with(&self.param2, p2);
                let bound = qp.bind(&point)?;
                if let Some(t) = bound.resolved_terms().iter().find(|t| !(t.delay >= T::zero())) {
                    return Err(Error::InvalidConfig(format!(
                        "delay resolves to {} at ({p1}, {p2})",
                        t.delay
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Wall-clock durations of the sweep stages, in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub seeding: f64,
    pub stage1: f64,
    pub stage2: f64,
    pub total: f64,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Per-node stability data; matrices are indexed `[i][j]` with `i` along
/// `grid1` and `j` along `grid2`. Failed nodes carry NaN values.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityChart<T> {
    pub param1: String,
    pub param2: String,
    pub grid1: Vec<T>,
    pub grid2: Vec<T>,
    /// Real part of the dominant root.
    pub max_re: Vec<Vec<T>>,
    /// `|Im|` of the dominant root.
    pub max_im: Vec<Vec<T>>,
    pub dominant_index: Vec<Vec<Option<usize>>>,
    pub stable: Vec<Vec<bool>>,
    pub reseeded: Vec<Vec<bool>>,
    pub failed: Vec<Vec<bool>>,
    pub residual_max: Vec<Vec<T>>,
    /// Grid coordinates of the last node before each singular-Jacobian event.
    pub singular_points: Vec<(T, T)>,
    /// Stored residuals above the check tolerance at nodes not marked failed.
    pub residual_violations: usize,
    pub timings: StageTimings,
}

/// Classification of one node.
#[derive(Clone, Copy, Debug, PartialEq)]
struct NodeSummary<T> {
    max_re: T,
    max_im: T,
    dominant: Option<usize>,
    residual_max: T,
    failed: bool,
}

impl<T: Real> NodeSummary<T> {
    fn failed() -> Self {
        NodeSummary {
            max_re: T::nan(),
            max_im: T::nan(),
            dominant: None,
            residual_max: T::nan(),
            failed: true,
        }
    }

    fn from_roots(roots: &[Complex<T>], residuals: &[T]) -> Self {
        match dominant_index(roots) {
            Some(d) if roots.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => NodeSummary {
                max_re: roots[d].re,
                max_im: roots[d].im.abs(),
                dominant: Some(d),
                residual_max: residuals.iter().copied().fold(T::zero(), T::max),
                failed: false,
            },
            _ => Self::failed(),
        }
    }
}

impl<T: Real> StabilityChart<T> {
    fn assemble(
        cfg: &SweepConfig<T>,
        grid1: Vec<T>,
        grid2: Vec<T>,
        nodes: Vec<Vec<(NodeSummary<T>, bool)>>,
    ) -> Self {
        let map = |f: &dyn Fn(&(NodeSummary<T>, bool)) -> T| -> Vec<Vec<T>> {
            nodes.iter().map(|row| row.iter().map(f).collect()).collect()
        };
        let max_re = map(&|(s, _)| s.max_re);
        StabilityChart {
            param1: cfg.param1.clone(),
            param2: cfg.param2.clone(),
            max_im: map(&|(s, _)| s.max_im),
            residual_max: map(&|(s, _)| s.residual_max),
            dominant_index: nodes.iter().map(|r| r.iter().map(|(s, _)| s.dominant).collect()).collect(),
            // NaN compares false, so failed nodes are never stable.
            stable: max_re.iter().map(|r| r.iter().map(|&v| v <= T::zero()).collect()).collect(),
            reseeded: nodes.iter().map(|r| r.iter().map(|(_, re)| *re).collect()).collect(),
            failed: nodes.iter().map(|r| r.iter().map(|(s, _)| s.failed).collect()).collect(),
            max_re,
            grid1,
            grid2,
            singular_points: Vec::new(),
            residual_violations: 0,
            timings: StageTimings::default(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.grid1.len() * self.grid2.len()
    }

    fn count(m: &[Vec<bool>]) -> usize {
        m.iter().flatten().filter(|&&b| b).count()
    }

    pub fn stable_count(&self) -> usize {
        Self::count(&self.stable)
    }

    pub fn failed_count(&self) -> usize {
        Self::count(&self.failed)
    }

    pub fn reseeded_count(&self) -> usize {
        Self::count(&self.reseeded)
    }
}

/// Agreement between a chart and an oracle chart on the same grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChartComparison {
    /// Nodes where neither chart failed and `|oracle max_re| ≥ margin`.
    pub compared: usize,
    pub classification_mismatches: Vec<(usize, usize)>,
    /// Largest `|Δ max_re|` over compared nodes.
    pub max_re_deviation: f64,
    /// Nodes skipped because one of the charts failed there.
    pub skipped_failed: usize,
}

impl ChartComparison {
    pub fn agreement(&self) -> f64 {
        if self.compared == 0 {
            1.0
        } else {
            1.0 - self.classification_mismatches.len() as f64 / self.compared as f64
        }
    }
}

/// Compares `chart` against `oracle` at every node where the oracle's
/// `|max_re|` is at least `margin`.
pub fn compare_charts<T: Real>(chart: &StabilityChart<T>, oracle: &StabilityChart<T>, margin: T) -> Result<ChartComparison> {
    if chart.grid1.len() != oracle.grid1.len() || chart.grid2.len() != oracle.grid2.len() {
        return Err(Error::InvalidConfig("charts have different grids".into()));
    }
    let mut out = ChartComparison::default();
    for i in 0..chart.grid1.len() {
        for j in 0..chart.grid2.len() {
            if chart.failed[i][j] || oracle.failed[i][j] {
                out.skipped_failed += 1;
                continue;
            }
            if oracle.max_re[i][j].abs() < margin {
                continue;
            }
            out.compared += 1;
            if chart.stable[i][j] != oracle.stable[i][j] {
                out.classification_mismatches.push((i, j));
            }
            let dev = (chart.max_re[i][j] - oracle.max_re[i][j]).abs().as_f64();
            out.max_re_deviation = out.max_re_deviation.max(dev);
        }
    }
    Ok(out)
}

/// Greedy nearest-neighbour matching of `fresh` roots onto the slots of
/// `reference`; ties go to the fresh root with the larger real part.
/// Returns, for each slot, the index into `fresh`. Fresh roots left without
/// a slot fill the remaining slots in their own order.
pub fn align_roots<T: Real>(reference: &[Complex<T>], fresh: &[Complex<T>]) -> Vec<usize> {
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(reference.len() * fresh.len());
    for (slot, r) in reference.iter().enumerate() {
        for (j, z) in fresh.iter().enumerate() {
            let d = (*r - *z).norm();
            pairs.push((if d.is_finite() { d } else { T::infinity() }, slot, j));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(fresh[b.2].re.partial_cmp(&fresh[a.2].re).unwrap_or(Ordering::Equal))
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let n = fresh.len();
    let mut slot_of: Vec<Option<usize>> = vec![None; reference.len().max(n)];
    let mut used = vec![false; n];
    for (d, slot, j) in pairs {
        if !d.is_finite() {
            break;
        }
        if slot_of[slot].is_none() && !used[j] {
            slot_of[slot] = Some(j);
            used[j] = true;
        }
    }
    let mut leftovers = (0..n).filter(|&j| !used[j]);
    let mut out = Vec::with_capacity(n);
    for s in slot_of {
        match s {
            Some(j) => out.push(j),
            None => {
                if let Some(j) = leftovers.next() {
                    out.push(j);
                }
            }
        }
    }
    out
}

/// Fresh roots at `next_node`, index-aligned to `pre_event` by nearest-root
/// matching.
pub fn reseed_policy<T: Real>(
    qp: &QuasiPolynomial<T>,
    pre_event: &[Complex<T>],
    next_node: &ParameterPoint<T>,
    seed_cfg: &SeedConfig<T>,
) -> Result<RootSet<T>> {
    let fresh = seed_roots(qp, next_node, seed_cfg)?;
    let order = align_roots(pre_event, &fresh.roots);
    Ok(RootSet {
        roots: order.iter().map(|&j| fresh.roots[j]).collect(),
        residuals: order.iter().map(|&j| fresh.residuals[j]).collect(),
        point: fresh.point,
    })
}

/// A one-parameter run with reseeding after every failure.
#[derive(Clone, Debug)]
pub struct TrackedRun<T> {
    pub trajectory: Trajectory<T>,
    /// `(node value before the event, event)` for each singular Jacobian
    /// that forced a reseed.
    pub singular: Vec<(T, SingularEvent<T>)>,
}

/// Continues `seed` along `param` over `grid`, reseeding at the first node
/// past every event or residual violation.
pub fn track_with_reseed<T: Real>(
    qp: &QuasiPolynomial<T>,
    seed: &RootSet<T>,
    param: &str,
    grid: &[T],
    seed_cfg: &SeedConfig<T>,
    cont_cfg: &ContinuationConfig<T>,
) -> Result<TrackedRun<T>> {
    let start = seed
        .point
        .get(param)
        .ok_or_else(|| Error::UnknownParameter(param.to_string()))?;
    let n_roots = seed.roots.len();
    let nan = Complex::new(T::nan(), T::nan());
    let mut roots_at = vec![vec![nan; n_roots]; grid.len()];
    let mut residuals_at = vec![vec![T::nan(); n_roots]; grid.len()];
    let mut status_at = vec![NodeStatus::Failed; grid.len()];
    let mut events = Vec::new();
    let mut singular = Vec::new();

    let mut up: Vec<usize> = (0..grid.len()).filter(|&j| grid[j] >= start).collect();
    let mut down: Vec<usize> = (0..grid.len()).filter(|&j| grid[j] < start).collect();
    up.sort_by(|&a, &b| grid[a].partial_cmp(&grid[b]).unwrap_or(Ordering::Equal));
    down.sort_by(|&a, &b| grid[b].partial_cmp(&grid[a]).unwrap_or(Ordering::Equal));

    for side in [up, down] {
        let mut current = seed.clone();
        let mut pos = 0;
        let mut reseeded_here = false;
        while pos < side.len() {
            let sub = &side[pos..];
            let sub_grid: Vec<T> = sub.iter().map(|&j| grid[j]).collect();
            let traj = continue_1d(qp, &current, param, &sub_grid, cont_cfg)?;
            // Nodes fail exactly where a residual exceeds the check tolerance.
            let mut first_bad = traj.status_at.iter().position(|s| *s == NodeStatus::Failed);
            if current.roots.len() < n_roots && sub.len() > 1 {
                // A polynomial node supplied fewer roots than requested; the
                // missing ones reappear as soon as a delay term does.
                first_bad = Some(first_bad.map_or(1, |b| b.min(1)));
            }
            let good_until = first_bad.unwrap_or(sub.len());
            for local in 0..good_until {
                let j = sub[local];
                roots_at[j] = traj.roots_at[local].clone();
                residuals_at[j] = traj.residuals_at[local].clone();
                status_at[j] = if local == 0 && reseeded_here {
                    NodeStatus::Reseeded
                } else {
                    NodeStatus::Continued
                };
            }
            let Some(bad) = first_bad else { break };

            let bad_value = sub_grid[bad];
            let before = (bad > 0).then(|| sub_grid[bad - 1]);
            let dir = if bad_value >= start { T::one() } else { -T::one() };
            for e in &traj.singular_events {
                if (e.param_value - bad_value) * dir <= T::zero() {
                    if e.kind == EventKind::SingularJacobian {
                        singular.push((before.unwrap_or(e.param_value), e.clone()));
                    }
                    events.push(e.clone());
                }
            }

            // A fresh seed that fails its own residual check is given up on
            // and the next node is reseeded instead.
            let target = if bad == 0 && reseeded_here { 1 } else { bad };
            if target >= sub.len() {
                break;
            }
            pos += target;
            // Align against the continued values at the reseed node, falling
            // back to the last certified value of each root that stopped.
            let at_node = &traj.roots_at[target];
            let reference: Vec<Complex<T>> = (0..current.roots.len())
                .map(|k| {
                    let z = at_node[k];
                    if z.re.is_finite() && z.im.is_finite() {
                        z
                    } else if bad > 0 {
                        roots_at[sub[bad - 1]][k]
                    } else {
                        current.roots[k]
                    }
                })
                .collect();
            let next = current.point.with(param, grid[side[pos]]);
            match reseed_policy(qp, &reference, &next, seed_cfg) {
                Ok(fresh) => {
                    current = fresh;
                    reseeded_here = true;
                }
                Err(_) => break,
            }
        }
    }

    Ok(TrackedRun {
        trajectory: Trajectory {
            param: param.to_string(),
            base_point: seed.point.clone(),
            grid: grid.to_vec(),
            roots_at,
            residuals_at,
            status_at,
            singular_events: events,
        },
        singular,
    })
}

/// A chart together with the trajectories it was assembled from.
#[derive(Clone, Debug)]
pub struct SweepTrace<T> {
    pub chart: StabilityChart<T>,
    /// Continuation along `param1` at the anchor value of `param2`.
    pub stage1: Trajectory<T>,
    /// One continuation along `param2` per `grid1` node.
    pub columns: Vec<Trajectory<T>>,
}

impl<T: Real> SweepTrace<T> {
    /// Recomputes every residual of every trajectory.
    pub fn verify(&self, qp: &QuasiPolynomial<T>, cfg: &ContinuationConfig<T>) -> Vec<ResidualViolation<T>> {
        std::iter::once(&self.stage1)
            .chain(&self.columns)
            .flat_map(|t| verify_residuals(qp, t, cfg))
            .collect()
    }
}

/// Stored residuals above `tol` at nodes not marked failed.
fn stored_violations<T: Real>(traj: &Trajectory<T>, tol: T) -> usize {
    traj.residuals_at
        .iter()
        .zip(&traj.status_at)
        .filter(|(_, s)| **s != NodeStatus::Failed)
        .map(|(res, _)| res.iter().filter(|r| !(**r <= tol)).count())
        .sum()
}

/// Stability chart by two-stage continuation.
pub fn sweep2d<T: Real>(qp: &QuasiPolynomial<T>, cfg: &SweepConfig<T>) -> Result<StabilityChart<T>> {
    sweep2d_traced(qp, cfg).map(|t| t.chart)
}

/// [`sweep2d`], keeping the stage trajectories.
pub fn sweep2d_traced<T: Real>(qp: &QuasiPolynomial<T>, cfg: &SweepConfig<T>) -> Result<SweepTrace<T>> {
    cfg.validate(qp)?;
    let t_total = Instant::now();
    let grid1 = cfg.grid1();
    let grid2 = cfg.grid2();
    let (_, p2_star) = cfg.anchor();

    let t_seed = Instant::now();
    let seed = seed_roots(qp, &cfg.seed_point, &cfg.seed_cfg)?;
    let seeding = secs(t_seed.elapsed());

    let t1 = Instant::now();
    let stage1 = track_with_reseed(qp, &seed, &cfg.param1, &grid1, &cfg.seed_cfg, &cfg.cont_cfg)?;
    let stage1_secs = secs(t1.elapsed());

    let t2 = Instant::now();
    let anchor_node = grid2.iter().position(|&v| v == p2_star);
    let columns: Vec<Result<(TrackedRun<T>, bool)>> = (0..grid1.len())
        .into_par_iter()
        .map(|i| {
            let traj1 = &stage1.trajectory;
            let point = cfg.seed_point.with(&cfg.param1, grid1[i]);
            let column_seed = match traj1.status_at[i] {
                NodeStatus::Failed => seed_roots(qp, &point, &cfg.seed_cfg).map(|s| (s, true)),
                status => Ok((
                    RootSet {
                        roots: traj1.roots_at[i].clone(),
                        residuals: traj1.residuals_at[i].clone(),
                        point: point.clone(),
                    },
                    status == NodeStatus::Reseeded,
                )),
            };
            match column_seed {
                Ok((s, fresh)) => {
                    track_with_reseed(qp, &s, &cfg.param2, &grid2, &cfg.seed_cfg, &cfg.cont_cfg).map(|run| (run, fresh))
                }
                Err(_) => Ok((failed_run(&cfg.param2, &point, &grid2, cfg.seed_cfg.n_roots), false)),
            }
        })
        .collect();
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    let stage2_secs = secs(t2.elapsed());

    let mut nodes = Vec::with_capacity(grid1.len());
    let tol = cfg.cont_cfg.residual_check_tol;
    let mut violations = stored_violations(&stage1.trajectory, tol);
    let mut singular_points: Vec<(T, T)> = stage1.singular.iter().map(|(v, _)| (*v, p2_star)).collect();
    for (i, (run, fresh_seed)) in columns.iter().enumerate() {
        let traj = &run.trajectory;
        violations += stored_violations(traj, tol);
        singular_points.extend(run.singular.iter().map(|(v, _)| (grid1[i], *v)));
        let row = (0..grid2.len())
            .map(|j| {
                let summary = match traj.status_at[j] {
                    NodeStatus::Failed => NodeSummary::failed(),
                    _ => NodeSummary::from_roots(&traj.roots_at[j], &traj.residuals_at[j]),
                };
                let reseeded = traj.status_at[j] == NodeStatus::Reseeded || (*fresh_seed && anchor_node == Some(j));
                (summary, reseeded)
            })
            .collect();
        nodes.push(row);
    }

    // Conjugate roots and simultaneous events share a grid interval.
    let mut unique: Vec<(T, T)> = Vec::with_capacity(singular_points.len());
    for p in singular_points {
        if !unique.contains(&p) {
            unique.push(p);
        }
    }
    let mut chart = StabilityChart::assemble(cfg, grid1, grid2, nodes);
    chart.singular_points = unique;
    chart.residual_violations = violations;
    chart.timings = StageTimings {
        seeding,
        stage1: stage1_secs,
        stage2: stage2_secs,
        total: secs(t_total.elapsed()),
    };
    Ok(SweepTrace {
        chart,
        stage1: stage1.trajectory,
        columns: columns.into_iter().map(|(run, _)| run.trajectory).collect(),
    })
}

fn failed_run<T: Real>(param: &str, point: &ParameterPoint<T>, grid: &[T], n_roots: usize) -> TrackedRun<T> {
    let nan = Complex::new(T::nan(), T::nan());
    TrackedRun {
        trajectory: Trajectory {
            param: param.to_string(),
            base_point: point.clone(),
            grid: grid.to_vec(),
            roots_at: vec![vec![nan; n_roots]; grid.len()],
            residuals_at: vec![vec![T::nan(); n_roots]; grid.len()],
            status_at: vec![NodeStatus::Failed; grid.len()],
            singular_events: Vec::new(),
        },
        singular: Vec::new(),
    }
}

/// Stability chart by independent seeding at every node.
pub fn dense_sweep<T: Real>(qp: &QuasiPolynomial<T>, cfg: &SweepConfig<T>) -> Result<StabilityChart<T>> {
    cfg.validate(qp)?;
    let t_total = Instant::now();
    let grid1 = cfg.grid1();
    let grid2 = cfg.grid2();
    let n2 = grid2.len();
    let flat: Vec<NodeSummary<T>> = (0..grid1.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let point = cfg
                .seed_point
                .with(&cfg.param1, grid1[idx / n2])
                .with(&cfg.param2, grid2[idx % n2]);
            match seed_roots(qp, &point, &cfg.seed_cfg) {
                Ok(set) => NodeSummary::from_roots(&set.roots, &set.residuals),
                Err(_) => NodeSummary::failed(),
            }
        })
        .collect();
    let nodes = flat.chunks(n2).map(|row| row.iter().map(|s| (*s, false)).collect()).collect();
    let mut chart = StabilityChart::assemble(cfg, grid1, grid2, nodes);
    let total = secs(t_total.elapsed());
    chart.timings = StageTimings {
        seeding: total,
        stage1: 0.0,
        stage2: 0.0,
        total,
    };
    Ok(chart)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig<T> {
    pub repetitions: usize,
    /// Seeding configuration of the dense oracle; defaults to the sweep's.
    pub oracle_seed_cfg: Option<SeedConfig<T>>,
}

/// Timing comparison of [`sweep2d`] against [`dense_sweep`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchmarkRecord {
    pub repetitions: usize,
    pub nodes: usize,
    /// Wall time of each continuation run.
    pub sweep_seconds: Vec<f64>,
    /// Wall time of each dense run.
    pub dense_seconds: Vec<f64>,
    /// Stage breakdown of the fastest continuation run.
    pub sweep_stages: Option<StageTimings>,
    /// Fraction of nodes (both charts non-failed) with equal classification.
    pub agreement: Option<f64>,
    pub compared_nodes: usize,
    pub sweep_failed: usize,
    pub dense_failed: usize,
    /// Best dense time over best continuation time.
    pub speedup: Option<f64>,
}

pub fn benchmark<T: Real>(
    qp: &QuasiPolynomial<T>,
    cfg: &SweepConfig<T>,
    bench: &BenchmarkConfig<T>,
) -> Result<BenchmarkRecord> {
    let mut record = BenchmarkRecord {
        repetitions: bench.repetitions,
        ..BenchmarkRecord::default()
    };
    if bench.repetitions == 0 {
        return Ok(record);
    }
    let mut oracle_cfg = cfg.clone();
    if let Some(seed_cfg) = &bench.oracle_seed_cfg {
        oracle_cfg.seed_cfg = seed_cfg.clone();
    }
    let mut best_sweep: Option<StabilityChart<T>> = None;
    let mut last_dense: Option<StabilityChart<T>> = None;
    for _ in 0..bench.repetitions {
        let t = Instant::now();
        let chart = sweep2d(qp, cfg)?;
        let elapsed = secs(t.elapsed());
        if record.sweep_seconds.iter().all(|&s| elapsed < s) {
            best_sweep = Some(chart);
        }
        record.sweep_seconds.push(elapsed);

        let t = Instant::now();
        let oracle = dense_sweep(qp, &oracle_cfg)?;
        record.dense_seconds.push(secs(t.elapsed()));
        last_dense = Some(oracle);
    }
    let (Some(sweep), Some(dense)) = (best_sweep, last_dense) else {
        return Ok(record);
    };
    let cmp = compare_charts(&sweep, &dense, T::zero())?;
    record.nodes = sweep.n_nodes();
    record.sweep_stages = Some(sweep.timings);
    record.agreement = Some(cmp.agreement());
    record.compared_nodes = cmp.compared;
    record.sweep_failed = sweep.failed_count();
    record.dense_failed = dense.failed_count();
    let best = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    record.speedup = Some(best(&record.dense_seconds) / best(&record.sweep_seconds));
    Ok(record)
}
