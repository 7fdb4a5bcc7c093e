//! Approximate Nash equilibrium certificate for a reward matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asp_solver::{self, BestResponseConfig, MaskRule};
use crate::error::Result;
use crate::model::{mu_utility_from_qoe, RewardMatrix, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Deviations R +- probe_delta are always tried.
    pub probe_delta: f64,
    pub epsilon: f64,
    /// Extra deviations spread evenly over [r_min, r_max].
    pub grid_points: usize,
    pub solver: BestResponseConfig,
    pub mask: MaskRule,
}

/// One unilateral deviation and the utility it gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub asp: usize,
    pub mu: usize,
    pub reward: f64,
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub certified: bool,
    pub epsilon: f64,
    /// Largest gain found over all tried deviations (may be negative).
    pub max_improvement: f64,
    pub worst: Option<Deviation>,
    pub deviations_tried: usize,
}

/// Certificate with a 20-point deviation grid and the joint solver.
pub fn certify_epsilon_ne(
    scenario: &Scenario,
    rewards: &RewardMatrix,
    probe_delta: f64,
    epsilon: f64,
) -> Result<Certification> {
    certify_with(
        scenario,
        rewards,
        &CertifyOptions {
            probe_delta,
            epsilon,
            grid_points: 20,
            solver: BestResponseConfig::default(),
            mask: MaskRule::Joint,
        },
    )
}

/// Tries every listed deviation of every coordinate, each with a full
/// re-response of the affected ASP, and reports the best gain.
pub fn certify_with(
    scenario: &Scenario,
    rewards: &RewardMatrix,
    opts: &CertifyOptions,
) -> Result<Certification> {
    let (nn, mm) = (scenario.n_asps(), scenario.n_mus());
    let solve = |n: usize, row: &[f64]| {
        let mask = opts.mask.for_asp(scenario, n);
        asp_solver::best_response_masked(scenario, n, row, &opts.solver, &mask)
    };
    let base: Vec<_> = (0..nn)
        .into_par_iter()
        .map(|n| solve(n, rewards.row(n)))
        .collect::<Result<_>>()?;
    let base_utility = |m: usize| -> Result<f64> {
        let qs: Vec<f64> = base.iter().map(|r| r.qoe[m]).collect();
        mu_utility_from_qoe(scenario.mus[m].mu, &rewards.column(m), &qs)
    };
    let base_u: Vec<f64> = (0..mm).map(base_utility).collect::<Result<_>>()?;

    let mut tasks = Vec::new();
    for n in 0..nn {
        for m in 0..mm {
            let u = &scenario.mus[m];
            let r0 = rewards[(n, m)];
            let mut cands = vec![u.clamp(r0 + opts.probe_delta), u.clamp(r0 - opts.probe_delta)];
            if opts.grid_points >= 2 {
                let k = opts.grid_points;
                cands.extend((0..k).map(|i| u.r_min + (u.r_max - u.r_min) * i as f64 / (k - 1) as f64));
            }
            for r in cands {
                if r != r0 {
                    tasks.push((n, m, r));
                }
            }
        }
    }
    let gains: Vec<Deviation> = tasks
        .par_iter()
        .map(|&(n, m, r)| {
            let mut row = rewards.row(n).to_vec();
            row[m] = r;
            let resp = solve(n, &row)?;
            let mut rs = rewards.column(m);
            rs[n] = r;
            let qs: Vec<f64> = (0..nn)
                .map(|k| if k == n { resp.qoe[m] } else { base[k].qoe[m] })
                .collect();
            let u = mu_utility_from_qoe(scenario.mus[m].mu, &rs, &qs)?;
            Ok(Deviation {
                asp: n,
                mu: m,
                reward: r,
                improvement: u - base_u[m],
            })
        })
        .collect::<Result<_>>()?;
    let worst = gains
        .iter()
        .copied()
        .fold(None, |acc: Option<Deviation>, d| match acc {
            Some(a) if a.improvement >= d.improvement => Some(a),
            _ => Some(d),
        });
    let max_improvement = worst.map_or(f64::NEG_INFINITY, |d| d.improvement);
    Ok(Certification {
        certified: max_improvement <= opts.epsilon,
        epsilon: opts.epsilon,
        max_improvement,
        worst,
        deviations_tried: gains.len(),
    })
}
