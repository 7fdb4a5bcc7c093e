//! The MUs' reward game.
//!
//! Each round every ASP best-responds to the current rewards; each MU then
//! probes every one of its reward coordinates at R + step and R - step,
//! letting the affected ASP re-respond, and moves to whichever of the three
//! values gives it the highest utility. Trials within a round see the other
//! rewards as they were at the start of the round, so the round result does
//! not depend on evaluation order. The game stops when the total absolute
//! change of MU utilities over a round falls to epsilon or the round budget
//! runs out.

mod certify;
pub mod convergence;

pub use certify::{certify_epsilon_ne, certify_with, CertifyOptions, Certification, Deviation};

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asp_solver::{self, BestResponseConfig, BestResponseResult, MaskRule};
use crate::error::{Error, Result};
use crate::model::{mu_utility_from_qoe, Allocation, Grid, RewardMatrix, Scenario};

/// Utility differences at or below this count as ties.
pub const DEAD_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSchedule {
    /// Step u / t in round t.
    Diminishing { u: f64 },
    /// Fixed step in every round.
    Constant { delta: f64 },
}

impl StepSchedule {
    /// Constant step that splits [r_min, r_max] into `levels` intervals.
    pub fn quantized(r_min: f64, r_max: f64, levels: u32) -> Self {
        StepSchedule::Constant {
            delta: (r_max - r_min) / levels as f64,
        }
    }

    /// Step of round `t`, counting from 1.
    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Diminishing { u } => u / t.max(1) as f64,
            StepSchedule::Constant { delta } => delta,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            StepSchedule::Diminishing { u } => u,
            StepSchedule::Constant { delta } => delta,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialRewards {
    /// (r_min + r_max) / 2 for every coordinate.
    Midpoint,
    Matrix(RewardMatrix),
    /// Uniform within each MU's bounds.
    Random { seed: u64 },
}

/// How a coordinate moves after its two trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum UpdateRule {
    /// Best of R - step, R, R + step.
    #[default]
    ThreeWay,
    /// step * sign(U(R + step) - U(R - step)).
    SignGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub schedule: StepSchedule,
    /// Stop once the summed absolute MU utility change of a round is at most this.
    pub epsilon: f64,
    pub max_rounds: usize,
    pub initial: InitialRewards,
    pub solver: BestResponseConfig,
    pub mask: MaskRule,
    pub rule: UpdateRule,
    /// Certify the final rewards; the probe step defaults to the last step size.
    pub certify: Option<CertifySettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifySettings {
    pub probe_delta: Option<f64>,
    pub grid_points: usize,
}

impl Default for CertifySettings {
    fn default() -> Self {
        CertifySettings {
            probe_delta: None,
            grid_points: 20,
        }
    }
}

impl GameConfig {
    pub fn new(schedule: StepSchedule, epsilon: f64, max_rounds: usize) -> Self {
        GameConfig {
            schedule,
            epsilon,
            max_rounds,
            initial: InitialRewards::Midpoint,
            solver: BestResponseConfig::default(),
            mask: MaskRule::Joint,
            rule: UpdateRule::ThreeWay,
            certify: Some(CertifySettings::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.solver.validate()?;
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub rewards: RewardMatrix,
    pub alloc: Allocation,
    pub qoe: Grid<f64>,
    pub mu_utilities: Vec<f64>,
    pub asp_utilities: Vec<f64>,
    pub rounds_used: usize,
    pub converged: bool,
    /// Summed absolute MU utility change of each round.
    pub utility_change: Vec<f64>,
    /// MU utilities at the initial rewards and after each round.
    pub mu_utility_trajectory: Vec<Vec<f64>>,
    /// Rewards at the start and after each round.
    pub reward_trajectory: Vec<RewardMatrix>,
    pub certification: Option<Certification>,
    pub clamp_events: usize,
}

impl EquilibriumReport {
    pub fn ne_certified(&self) -> Option<bool> {
        self.certification.as_ref().map(|c| c.certified)
    }
}

/// The reward game with the three-way comparison.
pub fn run_game(scenario: &Scenario, cfg: &GameConfig) -> Result<EquilibriumReport> {
    let cfg = GameConfig {
        rule: UpdateRule::ThreeWay,
        ..cfg.clone()
    };
    play(scenario, &cfg)
}

/// Same loop with the two-sided finite-difference sign rule.
pub fn finite_diff_update(scenario: &Scenario, cfg: &GameConfig) -> Result<EquilibriumReport> {
    let cfg = GameConfig {
        rule: UpdateRule::SignGradient,
        ..cfg.clone()
    };
    play(scenario, &cfg)
}

/// Starting rewards, clamped into bounds.
pub fn initial_rewards(scenario: &Scenario, init: &InitialRewards) -> Result<RewardMatrix> {
    let (nn, mm) = (scenario.n_asps(), scenario.n_mus());
    let r = match init {
        InitialRewards::Midpoint => scenario.midpoint_rewards(),
        InitialRewards::Matrix(r) => {
            if r.shape() != (nn, mm) {
                return Err(Error::Config(format!(
                    "initial rewards must be {nn} x {mm}, got {:?}",
                    r.shape()
                )));
            }
            Grid::from_fn(nn, mm, |n, m| scenario.mus[m].clamp(r[(n, m)]))
        }
        InitialRewards::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Grid::from_fn(nn, mm, |_, m| {
                let u = &scenario.mus[m];
                rng.gen_range(u.r_min..=u.r_max)
            })
        }
    };
    Ok(r)
}

type Key = (usize, Vec<u64>);

/// Best responses keyed by ASP and exact reward row.
struct Cache {
    current: HashMap<Key, Arc<BestResponseResult>>,
    previous: HashMap<Key, Arc<BestResponseResult>>,
}

impl Cache {
    fn new() -> Self {
        Cache {
            current: HashMap::new(),
            previous: HashMap::new(),
        }
    }

    fn key(n: usize, row: &[f64]) -> Key {
        (n, row.iter().map(|r| r.to_bits()).collect())
    }

    fn get(&self, key: &Key) -> Option<Arc<BestResponseResult>> {
        self.current
            .get(key)
            .or_else(|| self.previous.get(key))
            .cloned()
    }

    /// Keeps this round's and last round's entries only.
    fn next_round(&mut self) {
        self.previous = std::mem::take(&mut self.current);
    }
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    cfg: &'a GameConfig,
}

impl Ctx<'_> {
    fn solve(&self, n: usize, row: &[f64]) -> Result<BestResponseResult> {
        let mask = self.cfg.mask.for_asp(self.scenario, n);
        asp_solver::best_response_masked(self.scenario, n, row, &self.cfg.solver, &mask)
    }

    /// Responses for a batch of (asp, row) requests, through the cache.
    fn solve_batch(
        &self,
        cache: &mut Cache,
        requests: &[(usize, Vec<f64>)],
    ) -> Result<Vec<Arc<BestResponseResult>>> {
        let keys: Vec<Key> = requests.iter().map(|(n, row)| Cache::key(*n, row)).collect();
        let mut missing: Vec<usize> = Vec::new();
        let mut seen: HashMap<&Key, ()> = HashMap::new();
        for (i, k) in keys.iter().enumerate() {
            if cache.get(k).is_none() && seen.insert(k, ()).is_none() {
                missing.push(i);
            }
        }
        let solved: Vec<Result<BestResponseResult>> = missing
            .par_iter()
            .map(|&i| self.solve(requests[i].0, &requests[i].1))
            .collect();
        for (&i, res) in missing.iter().zip(solved) {
            cache.current.insert(keys[i].clone(), Arc::new(res?));
        }
        keys.iter()
            .map(|k| {
                let hit = cache.get(k).expect("response was just inserted");
                cache.current.entry(k.clone()).or_insert_with(|| hit.clone());
                Ok(hit)
            })
            .collect()
    }
}

/// State at a reward matrix: every ASP's response and every MU's utility.
struct Snapshot {
    rewards: RewardMatrix,
    responses: Vec<Arc<BestResponseResult>>,
    utilities: Vec<f64>,
}

fn mu_utilities(
    scenario: &Scenario,
    rewards: &RewardMatrix,
    responses: &[Arc<BestResponseResult>],
) -> Result<Vec<f64>> {
    (0..scenario.n_mus())
        .map(|m| {
            let qs: Vec<f64> = responses.iter().map(|r| r.qoe[m]).collect();
            mu_utility_from_qoe(scenario.mus[m].mu, &rewards.column(m), &qs)
        })
        .collect()
}

fn snapshot(ctx: &Ctx<'_>, cache: &mut Cache, rewards: RewardMatrix) -> Result<Snapshot> {
    let requests: Vec<(usize, Vec<f64>)> = (0..ctx.scenario.n_asps())
        .map(|n| (n, rewards.row(n).to_vec()))
        .collect();
    let responses = ctx.solve_batch(cache, &requests)?;
    let utilities = mu_utilities(ctx.scenario, &rewards, &responses)?;
    Ok(Snapshot {
        rewards,
        responses,
        utilities,
    })
}

/// Utility of MU `m` when ASP `n` alone re-responds to reward `r` on (n, m).
fn trial_utility(scenario: &Scenario, snap: &Snapshot, n: usize, m: usize, r: f64, resp: &BestResponseResult) -> Result<f64> {
    let nn = scenario.n_asps();
    let mut rewards = Vec::with_capacity(nn);
    let mut qs = Vec::with_capacity(nn);
    for k in 0..nn {
        if k == n {
            rewards.push(r);
            qs.push(resp.qoe[m]);
        } else {
            rewards.push(snap.rewards[(k, m)]);
            qs.push(snap.responses[k].qoe[m]);
        }
    }
    mu_utility_from_qoe(scenario.mus[m].mu, &rewards, &qs)
}

fn play(scenario: &Scenario, cfg: &GameConfig) -> Result<EquilibriumReport> {
    cfg.validate()?;
    scenario.validate()?;
    let ctx = Ctx { scenario, cfg };
    let (nn, mm) = (scenario.n_asps(), scenario.n_mus());
    let mut cache = Cache::new();
    let mut snap = snapshot(&ctx, &mut cache, initial_rewards(scenario, &cfg.initial)?)?;
    let mut utility_change = Vec::new();
    let mut mu_traj = vec![snap.utilities.clone()];
    let mut reward_traj = vec![snap.rewards.clone()];
    let mut converged = false;
    let mut rounds = 0;
    let mut last_step = cfg.schedule.step(1);

    for t in 1..=cfg.max_rounds {
        rounds = t;
        last_step = cfg.schedule.step(t);
        cache.next_round();
        // Trial rows: (n, m, +) then (n, m, -) for every coordinate.
        let mut requests = Vec::with_capacity(2 * nn * mm);
        let mut trial_r = Vec::with_capacity(2 * nn * mm);
        for n in 0..nn {
            for m in 0..mm {
                let u = &scenario.mus[m];
                let r0 = snap.rewards[(n, m)];
                for r in [u.clamp(r0 + last_step), u.clamp(r0 - last_step)] {
                    let mut row = snap.rewards.row(n).to_vec();
                    row[m] = r;
                    requests.push((n, row));
                    trial_r.push(r);
                }
            }
        }
        let responses = ctx.solve_batch(&mut cache, &requests)?;
        let mut next = snap.rewards.clone();
        for n in 0..nn {
            for m in 0..mm {
                let i = 2 * (n * mm + m);
                let u0 = snap.utilities[m];
                let up = trial_utility(scenario, &snap, n, m, trial_r[i], &responses[i])?;
                let down = trial_utility(scenario, &snap, n, m, trial_r[i + 1], &responses[i + 1])?;
                let target = match cfg.rule {
                    UpdateRule::ThreeWay => {
                        if up > u0 + DEAD_BAND && up >= down {
                            trial_r[i]
                        } else if down > u0 + DEAD_BAND {
                            trial_r[i + 1]
                        } else {
                            snap.rewards[(n, m)]
                        }
                    }
                    UpdateRule::SignGradient => {
                        if up - down > DEAD_BAND {
                            trial_r[i]
                        } else if down - up > DEAD_BAND {
                            trial_r[i + 1]
                        } else {
                            snap.rewards[(n, m)]
                        }
                    }
                };
                next[(n, m)] = target;
            }
        }
        let new_snap = snapshot(&ctx, &mut cache, next)?;
        let change: f64 = new_snap
            .utilities
            .iter()
            .zip(&snap.utilities)
            .map(|(a, b)| (a - b).abs())
            .sum();
        utility_change.push(change);
        mu_traj.push(new_snap.utilities.clone());
        reward_traj.push(new_snap.rewards.clone());
        snap = new_snap;
        if change <= cfg.epsilon {
            converged = true;
            break;
        }
    }

    let results: Vec<BestResponseResult> = snap.responses.iter().map(|r| (**r).clone()).collect();
    let certification = match &cfg.certify {
        Some(c) => Some(certify_with(
            scenario,
            &snap.rewards,
            &CertifyOptions {
                probe_delta: c.probe_delta.unwrap_or(last_step),
                epsilon: cfg.epsilon,
                grid_points: c.grid_points,
                solver: cfg.solver,
                mask: cfg.mask,
            },
        )?),
        None => None,
    };
    Ok(EquilibriumReport {
        alloc: asp_solver::allocation_of(&results),
        qoe: Grid::from_fn(nn, mm, |n, m| results[n].qoe[m]),
        asp_utilities: results.iter().map(|r| r.utility).collect(),
        clamp_events: results.iter().map(|r| r.clamp_events).sum(),
        mu_utilities: snap.utilities,
        rewards: snap.rewards,
        rounds_used: rounds,
        converged,
        utility_change,
        mu_utility_trajectory: mu_traj,
        reward_trajectory: reward_traj,
        certification,
    })
}
