mod common;

use ccr_core::chart::linspace;
use ccr_core::continuation::{continue_1d, verify_residuals, EventKind, NodeStatus};
use ccr_core::seeding::seed_roots;
use ccr_core::{ContinuationConfig64, Error, RootSet64, SeedConfig64, Trajectory64};
use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn seed_cfg(n_roots: usize) -> SeedConfig64 {
    SeedConfig64 { n_roots, ..SeedConfig64::default() }
}

fn constant_case() -> (ccr_core::QuasiPolynomial64, Trajectory64, RootSet64) {
    let qp = example1_symbolic();
    let mut pt = example1_symbolic_point(0.001, 0.25);
    pt.set("b1", 0.0);
    let seed = seed_roots(&qp, &pt, &seed_cfg(8)).unwrap();
    let traj = continue_1d(&qp, &seed, "t1", &linspace(0.001, 1.0, 40), &ContinuationConfig64::default()).unwrap();
    (qp, traj, seed)
}

#[test]
fn vanishing_sensitivity_keeps_roots_fixed() {
    let (qp, traj, seed) = constant_case();
    assert_eq!(traj.roots_at.len(), 40);
    for (j, roots) in traj.roots_at.iter().enumerate() {
        assert_eq!(roots, &seed.roots, "node {j}");
        assert_eq!(traj.status_at[j], NodeStatus::Continued);
        for (r, s) in traj.residuals_at[j].iter().zip(&seed.residuals) {
            assert_eq!(r, s);
        }
    }
    assert!(traj.singular_events.is_empty());
    assert!(verify_residuals(&qp, &traj, &ContinuationConfig64::default()).is_empty());
}

#[test]
fn injected_perturbation_is_reported_alone() {
    let (qp, mut traj, _) = constant_case();
    traj.roots_at[17][3] += c(1e-2, 0.0);
    let v = verify_residuals(&qp, &traj, &ContinuationConfig64::default());
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!((v[0].node, v[0].root), (17, 3));
    assert!(v[0].residual > 1e-6);
}

#[test]
fn oscillator_continued_in_stiffness_is_certified() {
    let qp = example2();
    let cfg = ContinuationConfig64::default();
    for b in [-1.5, -0.4, 0.5, 1.5] {
        let seed = seed_roots(&qp, &point(&[("a", 0.01), ("b", b)]), &SeedConfig64::default()).unwrap();
        let traj = continue_1d(&qp, &seed, "a", &linspace(0.01, 10.0, 200), &cfg).unwrap();
        let v = verify_residuals(&qp, &traj, &cfg);
        assert!(v.is_empty(), "b = {b}: {} violations, first {:?}", v.len(), v.first());
        assert!(traj.status_at.iter().all(|s| *s == NodeStatus::Continued));
    }
}

#[test]
fn round_trip_returns_to_the_seed() {
    let qp = example2();
    let cfg = ContinuationConfig64::default();
    let seed = seed_roots(&qp, &point(&[("a", 0.5), ("b", 0.7)]), &SeedConfig64::default()).unwrap();
    let grid = linspace(0.5, 5.0, 60);
    let fwd = continue_1d(&qp, &seed, "a", &grid, &cfg).unwrap();
    let end = grid.len() - 1;
    assert_eq!(fwd.status_at[end], NodeStatus::Continued);
    let back_seed = RootSet64 {
        roots: fwd.roots_at[end].clone(),
        residuals: fwd.residuals_at[end].clone(),
        point: fwd.point_at(end),
    };
    let back_grid: Vec<f64> = grid.iter().rev().copied().collect();
    let back = continue_1d(&qp, &back_seed, "a", &back_grid, &cfg).unwrap();
    for (k, (z0, z1)) in seed.roots.iter().zip(&back.roots_at[end]).enumerate() {
        assert!((z0 - z1).norm() < 1e-6, "root {k}: {z0} -> {z1}");
    }

    // A fresh seed at the far end continues back onto the original roots.
    let fresh = seed_roots(&qp, &fwd.point_at(end), &SeedConfig64::default()).unwrap();
    let back = continue_1d(&qp, &fresh, "a", &back_grid, &cfg).unwrap();
    for z in back.roots_at[end].iter().take(10) {
        assert!(nearest(*z, &seed.roots) < 1e-6, "{z}");
    }
}

#[test]
fn conjugate_roots_stay_conjugate() {
    let qp = example1();
    let seed = seed_roots(&qp, &example1_point(0.001, 0.25), &SeedConfig64::default()).unwrap();
    let cfg = ContinuationConfig64::default();
    let traj = continue_1d(&qp, &seed, "t1", &linspace(0.001, 1.0, 100), &cfg).unwrap();
    let pairs: Vec<(usize, usize)> = (0..seed.len())
        .filter(|&i| seed.roots[i].im > 0.0)
        .filter_map(|i| {
            (0..seed.len())
                .find(|&j| (seed.roots[j] - seed.roots[i].conj()).norm() < 1e-9)
                .map(|j| (i, j))
        })
        .collect();
    assert!(pairs.len() >= 10);
    for (j, roots) in traj.roots_at.iter().enumerate() {
        for &(a, b) in &pairs {
            let gap = (roots[a] - roots[b].conj()).norm();
            assert!(gap <= 10.0 * cfg.residual_check_tol, "node {j}, roots {a}/{b}: {gap}");
        }
    }
}

#[test]
fn continued_roots_match_fresh_seeds() {
    let qp = example1();
    let seed = seed_roots(&qp, &example1_point(0.001, 0.25), &SeedConfig64::default()).unwrap();
    let grid = linspace(0.001, 1.0, 200);
    let traj = continue_1d(&qp, &seed, "t1", &grid, &ContinuationConfig64::default()).unwrap();
    let mut rng = StdRng::seed_from_u64(20);
    for _ in 0..20 {
        let j = rng.gen_range(0..grid.len());
        let fresh = seed_roots(&qp, &traj.point_at(j), &seed_cfg(40)).unwrap();
        let floor = fresh.roots.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        for z in traj.roots_at[j].iter().filter(|z| z.re > floor + 1e-3) {
            let d = nearest(*z, &fresh.roots);
            assert!(d < 1e-6, "node {j}: {z} is {d} from the nearest fresh root");
        }
        let dom = traj.roots_at[j].iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        assert!((dom - fresh.roots[0].re).abs() < 1e-6);
    }
}

#[test]
fn permuting_the_seed_permutes_the_trajectory() {
    let qp = example3();
    let pt = example3_point(2, 0.5, 0.5);
    let seed = seed_roots(&qp, &pt, &seed_cfg(12)).unwrap();
    let perm: Vec<usize> = vec![5, 0, 11, 3, 8, 1, 10, 2, 7, 4, 9, 6];
    let shuffled = RootSet64 {
        roots: perm.iter().map(|&i| seed.roots[i]).collect(),
        residuals: perm.iter().map(|&i| seed.residuals[i]).collect(),
        point: seed.point.clone(),
    };
    let grid = linspace(0.01, 3.0, 50);
    let cfg = ContinuationConfig64::default();
    let a = continue_1d(&qp, &seed, "t2", &grid, &cfg).unwrap();
    let b = continue_1d(&qp, &shuffled, "t2", &grid, &cfg).unwrap();
    for j in 0..grid.len() {
        for (pos, &orig) in perm.iter().enumerate() {
            let (x, y) = (a.roots_at[j][orig], b.roots_at[j][pos]);
            assert!(x == y || (x.re.is_nan() && y.re.is_nan()), "node {j}: {x} vs {y}");
        }
    }
}

#[test]
fn single_node_grid_returns_the_seed() {
    let qp = example2();
    let seed = seed_roots(&qp, &point(&[("a", 3.0), ("b", 0.2)]), &seed_cfg(6)).unwrap();
    let traj = continue_1d(&qp, &seed, "a", &[3.0], &ContinuationConfig64::default()).unwrap();
    assert_eq!(traj.roots_at, vec![seed.roots.clone()]);
    assert_eq!(traj.status_at, vec![NodeStatus::Continued]);
    assert_eq!(traj.n_roots(), 6);
}

#[test]
fn decreasing_grid_is_accepted() {
    let qp = example2();
    let seed = seed_roots(&qp, &point(&[("a", 3.0), ("b", 0.2)]), &seed_cfg(6)).unwrap();
    let cfg = ContinuationConfig64::default();
    let up = continue_1d(&qp, &seed, "a", &linspace(1.0, 5.0, 9), &cfg).unwrap();
    let down = continue_1d(&qp, &seed, "a", &linspace(5.0, 1.0, 9), &cfg).unwrap();
    for j in 0..9 {
        for k in 0..6 {
            assert!((up.roots_at[j][k] - down.roots_at[8 - j][k]).norm() < 1e-9);
        }
    }
}

#[test]
fn bad_grids_and_parameters_are_errors() {
    let qp = example2();
    let seed = seed_roots(&qp, &point(&[("a", 3.0), ("b", 0.2)]), &seed_cfg(2)).unwrap();
    let cfg = ContinuationConfig64::default();
    assert!(matches!(continue_1d(&qp, &seed, "a", &[], &cfg), Err(Error::InvalidConfig(_))));
    assert!(matches!(continue_1d(&qp, &seed, "a", &[1.0, 3.0, 2.0], &cfg), Err(Error::InvalidConfig(_))));
    assert!(matches!(continue_1d(&qp, &seed, "a", &[1.0, f64::NAN], &cfg), Err(Error::InvalidConfig(_))));
    assert!(matches!(continue_1d(&qp, &seed, "zz", &[1.0, 2.0], &cfg), Err(Error::UnknownParameter(_))));
    let bad = ContinuationConfig64 { abs_tol: 0.0, ..cfg };
    assert!(matches!(continue_1d(&qp, &seed, "a", &[1.0, 2.0], &bad), Err(Error::InvalidConfig(_))));
}

#[test]
fn colliding_real_roots_end_in_a_singular_event() {
    let qp = example3();
    let seed = seed_roots(&qp, &example3_point(3, 0.01, 0.01), &SeedConfig64::default()).unwrap();
    let grid = linspace(0.01, 3.0, 50);
    let cfg = ContinuationConfig64::default();
    let traj = continue_1d(&qp, &seed, "t2", &grid, &cfg).unwrap();
    let events: Vec<_> = traj
        .singular_events
        .iter()
        .filter(|e| e.kind == EventKind::SingularJacobian)
        .collect();
    assert!(!events.is_empty(), "{:?}", traj.singular_events);
    for e in &events {
        assert!((e.param_value - 0.2049).abs() < 1e-3, "{e:?}");
        let z = seed.roots[e.root];
        assert!(z.im == 0.0 && z.re < -1.0, "{z}");
    }
    let first_failed = traj.status_at.iter().position(|s| *s == NodeStatus::Failed).unwrap();
    assert!(grid[first_failed] > 0.2049 && grid[first_failed - 1] <= 0.2049);
    // Everything before the event is still certified.
    let v = verify_residuals(&qp, &traj, &cfg);
    assert!(v.iter().all(|x| x.node >= first_failed));
}
