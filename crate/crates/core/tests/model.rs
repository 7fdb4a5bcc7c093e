//! QoE metric, gap bound, token cost and utility functions.

use proptest::prelude::*;
use qoe_market::model::*;

fn gp(eta: f64, zeta0: f64, upsilon: f64, k: u32) -> GapBoundParams {
    GapBoundParams {
        eta,
        zeta0,
        upsilon,
        k_examples: k,
    }
}

fn one_pair(kappa: f64, xi: f64, theta: f64, x_in: u32, x_out: u32, snr: f64) -> Scenario {
    Scenario {
        asps: vec![AspParams {
            kappa,
            xi,
            c_f: 0.01,
            c_b: 0.01,
            f_max: 1e6,
            b_max: 1e6,
        }],
        mus: vec![MuParams {
            mu: 10.0,
            r_min: 0.01,
            r_max: 1.0,
        }],
        demands: Grid::filled(1, 1, Demand {
            theta_hat: theta,
            x_in,
            x_out,
        }),
        channels: Grid::filled(1, 1, Channel { snr }),
        seed: 0,
    }
}

#[test]
fn gap_bound_hand_values() {
    let b = gap_bound(&gp(0.2, 0.1, 1.0, 2)).unwrap();
    assert!((b - 0.2222222222222222 * 0.0625).abs() < 1e-15);
    assert!((b - 0.013888888888888888).abs() < 1e-15);
    let b0 = gap_bound(&gp(0.2, 0.1, 1.0, 0)).unwrap();
    assert!((b0 - 2.0 * 0.1 / 0.9).abs() < 1e-15);
}

#[test]
fn gap_bound_rejects_bad_params() {
    assert!(gap_bound(&gp(0.5, 0.1, 1.0, 2)).is_err());
    assert!(gap_bound(&gp(0.2, 1.0, 1.0, 2)).is_err());
    assert!(gap_bound(&gp(0.2, 0.1, 0.9, 2)).is_err());
}

#[test]
fn default_lookup_reproduces_listed_pairs() {
    let lk = AccuracyLookup::default();
    for &(theta, k) in &lk.pairs {
        assert_eq!(lk.invert(theta).unwrap(), k, "theta {theta}");
        assert_eq!(lk.k_for(theta).unwrap(), k);
        let bound = lk.theta_for(k).unwrap();
        assert!(((bound - theta) / theta).abs() < 1e-9);
    }
    // Between two listed targets the ceiling picks the larger K.
    assert_eq!(lk.invert(3e-8).unwrap(), 7);
    assert_eq!(lk.k_values(), vec![2, 4, 6, 8, 10]);
}

#[test]
fn token_cost_sum_values() {
    assert_eq!(token_cost_sum(100, 300), 74850);
    assert_eq!(token_cost_sum(37, 1), 37);
    assert_eq!(token_cost_sum(500, 0), 0);
}

#[test]
fn token_cost_sum_matches_loop_on_sampled_grid() {
    for x_in in (0..=2000u64).step_by(37) {
        let mut acc = 0u64;
        for x_out in 0..=2000u64 {
            assert_eq!(token_cost_sum(x_in, x_out), acc, "x_in {x_in} x_out {x_out}");
            acc += x_in + x_out;
        }
    }
}

#[test]
fn qoe_hand_value() {
    let sc = one_pair(1.0, 1.0, (-1.0f64).exp(), 10, 1, 1.0);
    let q = qoe(&sc.asps[0], &sc.demands[(0, 0)], &sc.channels[(0, 0)], 100.0, 3520.0).unwrap();
    assert!((q - 0.8).abs() < 1e-12, "{q}");
}

#[test]
fn qoe_limits() {
    let sc = one_pair(0.7, 1e3, 1e-5, 500, 500, 50.0);
    let (a, d, c) = (&sc.asps[0], &sc.demands[(0, 0)], &sc.channels[(0, 0)]);
    let q = qoe(a, d, c, 1e30, 1e30).unwrap();
    assert!((q - 0.7).abs() < 1e-12);
    assert!(qoe(a, d, c, 0.0, 1.0).is_err());
    assert!(qoe(a, d, c, 1.0, -1.0).is_err());
}

#[test]
fn qoe_compute_term_vanishes_as_theta_approaches_one() {
    let near_one = 1.0 - 1e-15;
    let sc = one_pair(1.0, 1e3, near_one, 100, 100, 10.0);
    let load = sc.load(0, 0);
    assert!(load.compute < 1e-6);
}

#[test]
fn mu_utility_hand_values() {
    let e = std::f64::consts::E;
    let u = mu_utility_from_qoe(10.0, &[0.0], &[e - 1.0]).unwrap();
    assert!((u - 10.0).abs() < 1e-12);
    let z = mu_utility_from_qoe(3.0, &[0.5, 0.2], &[0.0, 0.0]).unwrap();
    assert_eq!(z, 0.0);
}

#[test]
fn asp_utility_with_zero_reward_is_minus_cost() {
    let sc = one_pair(1.0, 1e3, 1e-5, 100, 100, 10.0);
    let rewards = Grid::filled(1, 1, 0.0);
    let alloc = Allocation {
        f: Grid::filled(1, 1, 2e4),
        b: Grid::filled(1, 1, 3e4),
    };
    let u = asp_utility(&sc, 0, &rewards, &alloc).unwrap();
    assert!((u + 0.01 * 2e4 + 0.01 * 3e4).abs() < 1e-9);
}

#[test]
fn asp_utility_at_interior_point_matches_closed_form() {
    let sc = one_pair(1.0, 1e3, 1e-5, 100, 100, 10.0);
    let r = 0.3;
    let l = sc.load(0, 0);
    let (c_f, c_b) = (sc.asps[0].c_f, sc.asps[0].c_b);
    let f = (r * l.compute / c_f).sqrt();
    let b = (r * l.comm / c_b).sqrt();
    let alloc = Allocation {
        f: Grid::filled(1, 1, f),
        b: Grid::filled(1, 1, b),
    };
    let u = asp_utility(&sc, 0, &Grid::filled(1, 1, r), &alloc).unwrap();
    let expect = r * 1.0 - 2.0 * (r * l.compute * c_f).sqrt() - 2.0 * (r * l.comm * c_b).sqrt();
    assert!(((u - expect) / expect.abs()).abs() < 1e-12, "{u} vs {expect}");
}

#[test]
fn channel_constructors() {
    let c = Channel::from_snr_db(20.0).unwrap();
    assert!((c.snr - 100.0).abs() < 1e-12);
    assert!((c.snr_db() - 20.0).abs() < 1e-12);
    let l = Channel::from_link(2.0, 0.5, 0.01).unwrap();
    assert!((l.snr - 100.0).abs() < 1e-12);
    assert!((Channel::from_snr(1.0).unwrap().spectral_efficiency() - 1.0).abs() < 1e-15);
    assert!(Channel::from_snr(0.0).is_err());
}

#[test]
fn scenario_validation_catches_shape_and_domain_errors() {
    let mut sc = one_pair(1.0, 1e3, 1e-5, 100, 100, 10.0);
    assert!(sc.validate().is_ok());
    sc.demands = Grid::filled(1, 2, sc.demands[(0, 0)]);
    assert!(sc.validate().is_err());
    let mut sc = one_pair(1.0, 1e3, 1e-5, 100, 100, 10.0);
    sc.mus[0].r_min = 0.0;
    assert!(sc.validate().is_err());
    let mut sc = one_pair(1.0, 1e3, 1e-5, 100, 100, 10.0);
    sc.demands[(0, 0)].theta_hat = 1.0;
    assert!(sc.validate().is_err());
}

#[test]
fn grid_serde_round_trip() {
    let g = Grid::from_fn(2, 3, |i, j| (i * 10 + j) as f64);
    let json = serde_json::to_string(&g).unwrap();
    assert_eq!(json, "[[0.0,1.0,2.0],[10.0,11.0,12.0]]");
    let back: Grid<f64> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, g);
    assert!(serde_json::from_str::<Grid<f64>>("[[1.0],[1.0,2.0]]").is_err());
}

proptest! {
    #[test]
    fn gap_ratio_is_geometric(eta in 0.0f64..0.49, zeta0 in 0.0f64..0.99, ups in 1.0f64..3.0, k in 0u32..20) {
        let a = gap_bound(&gp(eta, zeta0, ups, k)).unwrap();
        let b = gap_bound(&gp(eta, zeta0, ups, k + 1)).unwrap();
        prop_assume!(a > 1e-300);
        let ratio = ups * eta / (1.0 - eta);
        prop_assert!((b / a - ratio).abs() <= 1e-12 * ratio.max(1.0));
    }

    #[test]
    fn gap_decreasing_when_contracting(eta in 0.01f64..0.49, zeta0 in 0.01f64..0.99, k in 0u32..30) {
        let a = gap_bound(&gp(eta, zeta0, 1.0, k)).unwrap();
        let b = gap_bound(&gp(eta, zeta0, 1.0, k + 1)).unwrap();
        prop_assert!(b < a);
    }

    #[test]
    fn token_cost_sum_closed_form(x_in in 0u64..=2000, x_out in 0u64..=2000) {
        let brute: u64 = (0..x_out).map(|i| x_in + i).sum();
        prop_assert_eq!(token_cost_sum(x_in, x_out), brute);
    }

    #[test]
    fn qoe_monotone(
        f in 1e3f64..1e9, b in 1e3f64..1e9, scale in 1.01f64..4.0,
        theta_exp in -11.0f64..-1.0, x_in in 1u32..2000, x_out in 1u32..1999,
    ) {
        let theta = 10f64.powf(theta_exp);
        let sc = one_pair(1.0, 1e3, theta, x_in, x_out, 20.0);
        let (a, d, c) = (&sc.asps[0], &sc.demands[(0, 0)], &sc.channels[(0, 0)]);
        let q = qoe(a, d, c, f, b).unwrap();
        prop_assert!(q.is_finite());
        prop_assert!(qoe(a, d, c, f * scale, b).unwrap() > q);
        prop_assert!(qoe(a, d, c, f, b * scale).unwrap() > q);
        let looser = Demand { theta_hat: (theta * scale).min(0.999), ..*d };
        prop_assert!(qoe(a, &looser, c, f, b).unwrap() > q);
        let longer = Demand { x_out: x_out + 1, ..*d };
        prop_assert!(qoe(a, &longer, c, f, b).unwrap() < q);
    }

    #[test]
    fn lookup_inversion_is_tight(k in 0u32..15) {
        let lk = AccuracyLookup::default();
        let theta = lk.theta_for(k).unwrap();
        prop_assert_eq!(lk.invert(theta).unwrap(), k);
        prop_assert_eq!(lk.invert(theta * 1.5).unwrap(), k);
    }
}
