//! Shared scenario builders for the integration tests.
#![allow(dead_code)]

use qoe_market::asp_solver::interior_optimum;
use qoe_market::harness::{generate_scenario, Calibration, ScenarioRanges};
use qoe_market::model::{RewardMatrix, Scenario};

pub fn random_scenario(seed: u64, asps: usize, mus: usize) -> Scenario {
    generate_scenario(seed, asps, mus, &ScenarioRanges::default(), &Calibration::default()).unwrap()
}

/// Sums of the unconstrained per-MU optima of ASP `n`.
pub fn interior_sums(sc: &Scenario, n: usize, rewards: &RewardMatrix) -> (f64, f64) {
    let a = &sc.asps[n];
    (0..sc.n_mus()).fold((0.0, 0.0), |(sf, sb), m| {
        let l = sc.load(n, m);
        let (f, b) = interior_optimum(rewards[(n, m)], l.compute, l.comm, a.c_f, a.c_b).unwrap();
        (sf + f, sb + b)
    })
}

/// Scales ASP `n`'s budgets to `frac` of the unconstrained demand.
pub fn squeeze(sc: &mut Scenario, n: usize, rewards: &RewardMatrix, frac: f64) {
    let (sf, sb) = interior_sums(sc, n, rewards);
    sc.asps[n].f_max = frac * sf;
    sc.asps[n].b_max = frac * sb;
}

/// Generous budgets so no constraint binds.
pub fn relax(sc: &mut Scenario) {
    for a in &mut sc.asps {
        a.f_max = 1e18;
        a.b_max = 1e15;
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
