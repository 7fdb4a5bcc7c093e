//! Brute-force verifiers checked on problems with known answers.

mod common;

use common::{random_scenario, relax};
use qoe_market::asp_solver::{best_response, interior_optimum, BestResponseConfig};
use qoe_market::model::{qoe, Grid, Scenario};
use qoe_market::mu_game::{run_game, GameConfig, StepSchedule};
use qoe_market::oracle::*;

#[test]
fn hessian_of_a_paraboloid() {
    let h = numeric_hessian(|x| Ok(-(x[0] * x[0]) - x[1] * x[1] + 3.0 * x[0]), &[0.7, -1.3], 1e-4).unwrap();
    assert!((h[0][0] + 2.0).abs() < 1e-6 && (h[1][1] + 2.0).abs() < 1e-6);
    assert!(h[0][1].abs() < 1e-6 && h[1][0].abs() < 1e-6);
    assert!((max_eigenvalue(&h) + 2.0).abs() < 1e-6);
    assert!(numeric_hessian(|x| Ok(x[0]), &[1.0], 0.0).is_err());
}

#[test]
fn max_eigenvalue_of_symmetric_matrix() {
    let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
    assert!((max_eigenvalue(&m) - 3.0).abs() < 1e-12);
}

#[test]
fn golden_section_finds_parabola_peak() {
    let (x, v) = golden_section_max(|x| Ok(-(x - 0.3f64).powi(2) + 1.0), -2.0, 5.0, 1e-10).unwrap();
    assert!((x - 0.3).abs() < 1e-7);
    assert!((v - 1.0).abs() < 1e-15);
}

fn utility(sc: &Scenario, n: usize, r: &[f64], alloc: &[(f64, f64)]) -> f64 {
    let a = &sc.asps[n];
    alloc
        .iter()
        .enumerate()
        .map(|(m, &(f, b))| {
            r[m] * qoe(a, &sc.demands[(n, m)], &sc.channels[(n, m)], f, b).unwrap() - a.c_f * f - a.c_b * b
        })
        .sum()
}

#[test]
fn two_point_grid_returns_best_feasible_corner() {
    let sc = random_scenario(7, 1, 1);
    let r = Grid::filled(1, 1, 0.1);
    let spec = GridSpec {
        points_per_axis: 2,
        refine_points: 2,
        refine_passes: 0,
        bounds: None,
    };
    let (alloc, u) = grid_best_response(&sc, 0, &r, &spec).unwrap();
    let a = &sc.asps[0];
    let mut best = f64::NEG_INFINITY;
    for f in [a.f_max * 1e-3, a.f_max] {
        for b in [a.b_max * 1e-3, a.b_max] {
            let q = qoe(a, &sc.demands[(0, 0)], &sc.channels[(0, 0)], f, b).unwrap();
            if q >= 0.0 {
                best = best.max(utility(&sc, 0, &[0.1], &[(f, b)]));
            }
        }
    }
    assert_eq!(u, best);
    assert!((utility(&sc, 0, &[0.1], &alloc) - u).abs() <= 1e-15 * u.abs());
}

#[test]
fn single_mu_grid_lands_within_one_cell_of_closed_form() {
    for seed in 0..5 {
        let mut sc = random_scenario(seed, 1, 1);
        relax(&mut sc);
        let r = Grid::filled(1, 1, 0.08);
        let l = sc.load(0, 0);
        let (f, b) = interior_optimum(0.08, l.compute, l.comm, sc.asps[0].c_f, sc.asps[0].c_b).unwrap();
        let spec = GridSpec {
            points_per_axis: 200,
            refine_points: 2,
            refine_passes: 0,
            bounds: Some(GridBounds {
                f: (0.5 * f, 2.0 * f),
                b: (0.5 * b, 2.0 * b),
            }),
        };
        let (alloc, _) = grid_best_response(&sc, 0, &r, &spec).unwrap();
        let (cf, cb) = (1.5 * f / 199.0, 1.5 * b / 199.0);
        assert!((alloc[0].0 - f).abs() <= cf && (alloc[0].1 - b).abs() <= cb, "seed {seed}");
    }
}

#[test]
fn grid_rejects_oversized_problems() {
    let sc = random_scenario(0, 1, 4);
    let r = sc.midpoint_rewards();
    assert!(grid_best_response(&sc, 0, &r, &GridSpec::for_mus(4)).is_err());
    let sc = random_scenario(0, 1, 3);
    let spec = GridSpec {
        points_per_axis: 1,
        ..GridSpec::default()
    };
    assert!(grid_best_response(&sc, 0, &sc.midpoint_rewards(), &spec).is_err());
    assert!(grid_best_response(&sc, 3, &sc.midpoint_rewards(), &GridSpec::for_mus(3)).is_err());
}

fn solver_response(sc: &Scenario, n: usize, r: &qoe_market::model::RewardMatrix) -> qoe_market::Result<Vec<(f64, f64)>> {
    let br = best_response(sc, n, r, &BestResponseConfig::default())?;
    Ok(br.f.into_iter().zip(br.b).collect())
}

#[test]
fn single_pair_search_has_one_equilibrium() {
    let sc = random_scenario(11, 1, 1);
    let found = grid_ne_search_with(&sc, 40, solver_response).unwrap();
    assert_eq!(found.len(), 1);
    // The lone equilibrium maximizes the MU's utility over the reward grid.
    let u = &sc.mus[0];
    let value = |r: f64| {
        let br = best_response(&sc, 0, &Grid::filled(1, 1, r), &BestResponseConfig::default()).unwrap();
        u.mu * br.qoe[0].ln_1p() - r * br.qoe[0]
    };
    let best = (0..40)
        .map(|i| u.r_min + (u.r_max - u.r_min) * i as f64 / 39.0)
        .max_by(|a, b| value(*a).total_cmp(&value(*b)))
        .unwrap();
    assert_eq!(found[0][(0, 0)], best);
}

#[test]
fn degenerate_reward_interval_yields_that_point() {
    let mut sc = random_scenario(2, 2, 2);
    for u in &mut sc.mus {
        u.r_min = 0.05;
        u.r_max = 0.05;
    }
    let found = grid_ne_search_with(&sc, 10, solver_response).unwrap();
    assert_eq!(found, vec![Grid::filled(2, 2, 0.05)]);
}

#[test]
fn search_rejects_large_markets() {
    let sc = random_scenario(0, 2, 3);
    assert!(grid_ne_search_with(&sc, 10, solver_response).is_err());
    let sc = random_scenario(0, 1, 1);
    assert!(grid_ne_search_with(&sc, 51, solver_response).is_err());
}

#[test]
fn oracle_search_with_grid_inner_agrees_on_one_pair() {
    let sc = random_scenario(3, 1, 1);
    let spec = NeGridSpec {
        points_per_axis: 12,
        inner: NeInner::Grid(GridSpec::for_mus(1)),
    };
    let grid = grid_ne_search(&sc, &spec).unwrap();
    let exact = grid_ne_search_with(&sc, 12, solver_response).unwrap();
    assert_eq!(grid, exact);
}

#[test]
fn game_lands_near_a_grid_equilibrium() {
    for seed in [1u64, 4] {
        let sc = random_scenario(seed, 2, 2);
        let k = 25;
        let found = grid_ne_search_with(&sc, k, solver_response).unwrap();
        assert!(!found.is_empty(), "seed {seed}");
        let mut cfg = GameConfig::new(StepSchedule::Constant { delta: 1e-4 }, 1e-10, 20000);
        cfg.certify = None;
        let report = run_game(&sc, &cfg).unwrap();
        let step = (sc.mus[0].r_max - sc.mus[0].r_min) / (k - 1) as f64;
        let near = found.iter().any(|g| {
            (0..2).all(|n| (0..2).all(|m| (g[(n, m)] - report.rewards[(n, m)]).abs() <= 1.5 * step))
        });
        assert!(near, "seed {seed}: {:?} not near {:?}", report.rewards, found);
    }
}
