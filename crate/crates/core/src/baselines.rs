//! Comparison pricing schemes and market-level metrics.
//!
//! `Ratio` splits a fixed total reward per MU across ASPs, `Token` prices
//! by token count, and `OnlyF`/`OnlyB` play the reward game while the ASPs
//! split one resource equally and optimize only the other.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asp_solver::{self, MaskRule};
use crate::error::{Error, Result};
use crate::model::{
    asp_utility, compute_load, mu_utility, qoe, Allocation, Grid, RewardMatrix, Scenario,
};
use crate::mu_game::{run_game, EquilibriumReport, GameConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SchemeId {
    Proposed,
    /// Total reward per MU, split across ASPs.
    Ratio { r_total: f64 },
    /// Reward per token; `None` calibrates it per scenario.
    Token { rho: Option<f64> },
    OnlyF,
    OnlyB,
}

impl SchemeId {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SchemeId::Ratio { r_total } if !(r_total > 0.0) => {
                Err(Error::Config(format!("ratio total must be positive, got {r_total}")))
            }
            SchemeId::Token { rho: Some(rho) } if !(rho > 0.0) => {
                Err(Error::Config(format!("token price must be positive, got {rho}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeId::Proposed => write!(f, "proposed"),
            SchemeId::Ratio { r_total } => write!(f, "ratio:{r_total}"),
            SchemeId::Token { rho: None } => write!(f, "token"),
            SchemeId::Token { rho: Some(rho) } => write!(f, "token:{rho}"),
            SchemeId::OnlyF => write!(f, "onlyf"),
            SchemeId::OnlyB => write!(f, "onlyb"),
        }
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    /// Accepts `proposed`, `ratio:<total>`, `token`, `token:<rho>`, `onlyf`, `onlyb`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((a, b)) => (a.to_string(), Some(b.to_string())),
            None => (lower.clone(), None),
        };
        let num = |a: &str| {
            a.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{a}' in scheme '{s}'")))
        };
        let scheme = match (name.as_str(), arg.as_deref()) {
            ("proposed", None) => SchemeId::Proposed,
            ("ratio", Some(a)) => SchemeId::Ratio { r_total: num(a)? },
            ("token", None) => SchemeId::Token { rho: None },
            ("token", Some(a)) => SchemeId::Token { rho: Some(num(a)?) },
            ("onlyf", None) => SchemeId::OnlyF,
            ("onlyb", None) => SchemeId::OnlyB,
            _ => return Err(Error::Config(format!("unknown scheme '{s}'"))),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

/// How `Ratio` divides each MU's total across ASPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RatioSplit {
    #[default]
    Equal,
    /// In proportion to the compute load of each pair.
    ProportionalToLoad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketMetrics {
    /// Allocated compute over capacity, per ASP.
    pub f_usage: Vec<f64>,
    /// Allocated bandwidth over capacity, per ASP.
    pub b_usage: Vec<f64>,
    /// (1/M) sum over MUs and ASPs of R * Q.
    pub avg_mu_cost: f64,
    /// (1/N) sum over ASPs and MUs of c_f f + c_b b.
    pub avg_asp_cost: f64,
    pub avg_mu_utility: f64,
    pub avg_asp_utility: f64,
    pub mu_utilities: Vec<f64>,
    pub asp_utilities: Vec<f64>,
}

impl MarketMetrics {
    pub fn mean_f_usage(&self) -> f64 {
        mean(&self.f_usage)
    }

    pub fn mean_b_usage(&self) -> f64 {
        mean(&self.b_usage)
    }

    /// Mean of the compute and bandwidth usage ratios.
    pub fn mean_usage(&self) -> f64 {
        0.5 * (self.mean_f_usage() + self.mean_b_usage())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn compute_metrics(
    scenario: &Scenario,
    rewards: &RewardMatrix,
    alloc: &Allocation,
) -> Result<MarketMetrics> {
    let (nn, mm) = (scenario.n_asps(), scenario.n_mus());
    let mut f_usage = Vec::with_capacity(nn);
    let mut b_usage = Vec::with_capacity(nn);
    let mut asp_cost = 0.0;
    let mut mu_cost = 0.0;
    for n in 0..nn {
        let asp = &scenario.asps[n];
        let (sf, sb): (f64, f64) = (alloc.f.row(n).iter().sum(), alloc.b.row(n).iter().sum());
        f_usage.push(sf / asp.f_max);
        b_usage.push(sb / asp.b_max);
        asp_cost += asp.c_f * sf + asp.c_b * sb;
        for m in 0..mm {
            let q = qoe(
                asp,
                &scenario.demands[(n, m)],
                &scenario.channels[(n, m)],
                alloc.f[(n, m)],
                alloc.b[(n, m)],
            )?;
            mu_cost += rewards[(n, m)] * q;
        }
    }
    let mu_utilities: Vec<f64> = (0..mm)
        .map(|m| mu_utility(scenario, m, rewards, alloc))
        .collect::<Result<_>>()?;
    let asp_utilities: Vec<f64> = (0..nn)
        .map(|n| asp_utility(scenario, n, rewards, alloc))
        .collect::<Result<_>>()?;
    Ok(MarketMetrics {
        f_usage,
        b_usage,
        avg_mu_cost: mu_cost / mm as f64,
        avg_asp_cost: asp_cost / nn as f64,
        avg_mu_utility: mean(&mu_utilities),
        avg_asp_utility: mean(&asp_utilities),
        mu_utilities,
        asp_utilities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutcome {
    pub scheme: SchemeId,
    pub rewards: RewardMatrix,
    pub alloc: Allocation,
    pub qoe: Grid<f64>,
    pub metrics: MarketMetrics,
    /// Game report for the schemes that play the reward game.
    pub report: Option<EquilibriumReport>,
}

/// Token price making the average token reward equal the average midpoint
/// of the MUs' reward intervals.
pub fn token_rho(scenario: &Scenario) -> f64 {
    let mid = mean(&scenario.mus.iter().map(|u| u.midpoint()).collect::<Vec<_>>());
    let tokens: Vec<f64> = scenario
        .demands
        .iter()
        .map(|d| (d.x_in + d.x_out) as f64)
        .collect();
    mid / mean(&tokens)
}

/// Fixed rewards a non-game scheme pays.
pub fn scheme_rewards(scenario: &Scenario, scheme: SchemeId, split: RatioSplit) -> Option<RewardMatrix> {
    let (nn, mm) = (scenario.n_asps(), scenario.n_mus());
    match scheme {
        SchemeId::Ratio { r_total } => Some(match split {
            RatioSplit::Equal => Grid::filled(nn, mm, r_total / nn as f64),
            RatioSplit::ProportionalToLoad => {
                let loads = Grid::from_fn(nn, mm, |n, m| {
                    compute_load(&scenario.asps[n], &scenario.demands[(n, m)])
                });
                Grid::from_fn(nn, mm, |n, m| {
                    let total: f64 = loads.column(m).iter().sum();
                    r_total * loads[(n, m)] / total
                })
            }
        }),
        SchemeId::Token { rho } => {
            let rho = rho.unwrap_or_else(|| token_rho(scenario));
            Some(scenario.demands.map(|d| rho * (d.x_in + d.x_out) as f64))
        }
        _ => None,
    }
}

pub fn run_scheme(scenario: &Scenario, scheme: SchemeId, cfg: &GameConfig) -> Result<SchemeOutcome> {
    run_scheme_with(scenario, scheme, cfg, RatioSplit::Equal)
}

pub fn run_scheme_with(
    scenario: &Scenario,
    scheme: SchemeId,
    cfg: &GameConfig,
    split: RatioSplit,
) -> Result<SchemeOutcome> {
    scheme.validate()?;
    scenario.validate()?;
    let name = scheme.to_string();
    let mask = match scheme {
        SchemeId::OnlyF => MaskRule::EqualBandwidth,
        SchemeId::OnlyB => MaskRule::EqualCompute,
        _ => MaskRule::Joint,
    };
    let (rewards, alloc, qoe, report) = match scheme_rewards(scenario, scheme, split) {
        Some(rewards) => {
            let results = asp_solver::best_response_all(scenario, &rewards, &cfg.solver, &mask)
                .map_err(|e| e.with_scheme(&name))?;
            let qoe = Grid::from_fn(scenario.n_asps(), scenario.n_mus(), |n, m| results[n].qoe[m]);
            (rewards, asp_solver::allocation_of(&results), qoe, None)
        }
        None => {
            let game_cfg = GameConfig {
                mask,
                ..cfg.clone()
            };
            let report = run_game(scenario, &game_cfg).map_err(|e| e.with_scheme(&name))?;
            (
                report.rewards.clone(),
                report.alloc.clone(),
                report.qoe.clone(),
                Some(report),
            )
        }
    };
    let metrics = compute_metrics(scenario, &rewards, &alloc)?;
    Ok(SchemeOutcome {
        scheme,
        rewards,
        alloc,
        qoe,
        metrics,
        report,
    })
}
