//! Best-response resource allocation of a single ASP.
//!
//! The ASP maximizes sum_m R_m Q_m - c_f f_m - c_b b_m subject to Q_m >= 0
//! for every MU and the compute and bandwidth budgets. The objective is
//! separable and strictly concave, so the optimum is characterized by two
//! budget multipliers plus one QoE-floor multiplier per MU. The main path
//! finds those multipliers by water-filling (see `waterfill`); a barrier
//! projected-gradient ascent (see `ascent`) is the fallback and the
//! independent route used to test uniqueness.

mod ascent;
mod waterfill;

pub use ascent::{projected_ascent, AscentOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{qoe, Allocation, Grid, RewardMatrix, Scenario};

/// Smallest resource amount handed out; keeps the QoE formula finite.
pub const ALLOC_FLOOR: f64 = 1e-12;

/// Relative tolerance for budget and QoE-floor comparisons.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponseConfig {
    /// Relative bracket width at which multiplier bisection stops.
    pub multiplier_tol: f64,
    /// Stationarity tolerance of the fallback ascent, also the KKT acceptance level.
    pub ascent_tol: f64,
    pub max_iters: usize,
}

impl Default for BestResponseConfig {
    fn default() -> Self {
        BestResponseConfig {
            multiplier_tol: 1e-10,
            ascent_tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

impl BestResponseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.multiplier_tol > 0.0 && self.ascent_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::Config(
                "solver tolerances must be positive and max_iters at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which resources the ASP optimizes. The fixed variants hold the other
/// resource at the given per-MU amounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ResourceMask {
    Joint,
    FixedBandwidth(Vec<f64>),
    FixedCompute(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveConstraints {
    pub f_budget: bool,
    pub b_budget: bool,
    /// QoE floor binding, per MU.
    pub qoe_floor: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseResult {
    pub asp: usize,
    pub f: Vec<f64>,
    pub b: Vec<f64>,
    pub qoe: Vec<f64>,
    pub utility: f64,
    pub active: ActiveConstraints,
    pub lambda_f: f64,
    pub lambda_b: f64,
    pub kkt_residual: f64,
    /// Allocations raised to `ALLOC_FLOOR`.
    pub clamp_events: usize,
    pub used_fallback: bool,
}

/// Per-MU data of one ASP's problem.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pair {
    pub r: f64,
    /// Compute load A, FLOPs.
    pub a: f64,
    /// Communication load C, Hz * s.
    pub c: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub asp: usize,
    pub kappa: f64,
    pub c_f: f64,
    pub c_b: f64,
    pub f_max: f64,
    pub b_max: f64,
    pub pairs: Vec<Pair>,
}

impl Problem {
    pub fn new(scenario: &Scenario, n: usize, rewards: &[f64]) -> Result<Self> {
        scenario.check_asp(n)?;
        if rewards.len() != scenario.n_mus() {
            return Err(Error::domain(format!(
                "expected {} rewards, got {}",
                scenario.n_mus(),
                rewards.len()
            )));
        }
        let asp = &scenario.asps[n];
        asp.validate()?;
        let mut pairs = Vec::with_capacity(rewards.len());
        for (m, &r) in rewards.iter().enumerate() {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::domain(format!("reward R[{n}][{m}] = {r} is not a valid reward")));
            }
            let load = scenario.load(n, m);
            if !(load.compute > 0.0 && load.comm > 0.0) {
                return Err(Error::domain(format!("pair ({n}, {m}) has a nonpositive load")));
            }
            pairs.push(Pair {
                r,
                a: load.compute,
                c: load.comm,
            });
        }
        Ok(Problem {
            asp: n,
            kappa: asp.kappa,
            c_f: asp.c_f,
            c_b: asp.c_b,
            f_max: asp.f_max,
            b_max: asp.b_max,
            pairs,
        })
    }

    pub fn qoe(&self, m: usize, f: f64, b: f64) -> f64 {
        let p = &self.pairs[m];
        self.kappa - p.a / f - p.c / b
    }

    pub fn utility(&self, f: &[f64], b: &[f64]) -> f64 {
        self.pairs
            .iter()
            .enumerate()
            .map(|(m, p)| p.r * self.qoe(m, f[m], b[m]) - self.c_f * f[m] - self.c_b * b[m])
            .sum()
    }
}

/// Unconstrained maximizer of R (kappa - A/f - C/b) - c_f f - c_b b.
pub fn interior_optimum(r: f64, a: f64, c: f64, c_f: f64, c_b: f64) -> Result<(f64, f64)> {
    for (name, v) in [("R", r), ("A", a), ("C", c), ("c_f", c_f), ("c_b", c_b)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(((r * a / c_f).sqrt(), (r * c / c_b).sqrt()))
}

/// Best response of ASP `n` to its row of the reward matrix.
pub fn best_response(
    scenario: &Scenario,
    n: usize,
    rewards: &RewardMatrix,
    cfg: &BestResponseConfig,
) -> Result<BestResponseResult> {
    best_response_masked(scenario, n, rewards.row(n), cfg, &ResourceMask::Joint)
}

/// Best response for an explicit reward row and resource mask.
pub fn best_response_masked(
    scenario: &Scenario,
    n: usize,
    rewards: &[f64],
    cfg: &BestResponseConfig,
    mask: &ResourceMask,
) -> Result<BestResponseResult> {
    cfg.validate()?;
    let prob = Problem::new(scenario, n, rewards)?;
    let sol = match mask {
        ResourceMask::Joint => solve_joint(&prob, n, cfg)?,
        ResourceMask::FixedBandwidth(b) => solve_single(&prob, n, b, Side::Compute)?,
        ResourceMask::FixedCompute(f) => solve_single(&prob, n, f, Side::Bandwidth)?,
    };
    finish(&prob, n, sol, cfg, mask)
}

/// All ASPs' best responses, assembled into one allocation.
pub fn best_response_all(
    scenario: &Scenario,
    rewards: &RewardMatrix,
    cfg: &BestResponseConfig,
    mask: &MaskRule,
) -> Result<Vec<BestResponseResult>> {
    use rayon::prelude::*;
    (0..scenario.n_asps())
        .into_par_iter()
        .map(|n| best_response_masked(scenario, n, rewards.row(n), cfg, &mask.for_asp(scenario, n)))
        .collect()
}

/// Market-wide masking rule; expands to a per-ASP `ResourceMask`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MaskRule {
    #[default]
    Joint,
    /// Bandwidth split equally across MUs, compute optimized.
    EqualBandwidth,
    /// Compute split equally across MUs, bandwidth optimized.
    EqualCompute,
}

impl MaskRule {
    pub fn for_asp(&self, scenario: &Scenario, n: usize) -> ResourceMask {
        let m = scenario.n_mus();
        match self {
            MaskRule::Joint => ResourceMask::Joint,
            MaskRule::EqualBandwidth => {
                ResourceMask::FixedBandwidth(vec![scenario.asps[n].b_max / m as f64; m])
            }
            MaskRule::EqualCompute => {
                ResourceMask::FixedCompute(vec![scenario.asps[n].f_max / m as f64; m])
            }
        }
    }
}

pub fn allocation_of(results: &[BestResponseResult]) -> Allocation {
    let n = results.len();
    let m = results.first().map_or(0, |r| r.f.len());
    Allocation {
        f: Grid::from_fn(n, m, |i, j| results[i].f[j]),
        b: Grid::from_fn(n, m, |i, j| results[i].b[j]),
    }
}

/// QoE of every MU at a best-response allocation, straight from the model.
pub fn qoe_at(
    result: &BestResponseResult,
    scenario: &Scenario,
    n: usize,
    rewards: &RewardMatrix,
) -> Result<Vec<f64>> {
    scenario.check_asp(n)?;
    if rewards.shape() != (scenario.n_asps(), scenario.n_mus()) {
        return Err(Error::domain("reward matrix does not match the scenario"));
    }
    (0..scenario.n_mus())
        .map(|m| {
            qoe(
                &scenario.asps[n],
                &scenario.demands[(n, m)],
                &scenario.channels[(n, m)],
                result.f[m],
                result.b[m],
            )
        })
        .collect()
}

/// Raw solution before floors, residual and fallback.
struct RawSolution {
    f: Vec<f64>,
    b: Vec<f64>,
    lifted: Vec<bool>,
    /// Effective prices c + lambda.
    p_f: f64,
    p_b: f64,
}

fn infeasible(prob: &Problem, n: usize) -> Error {
    let alone: Vec<usize> = prob
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.a / prob.f_max + p.c / prob.b_max >= prob.kappa)
        .map(|(m, _)| m)
        .collect();
    let mus = if alone.is_empty() {
        (0..prob.pairs.len()).collect()
    } else {
        alone
    };
    Error::Infeasible {
        asp: n,
        mus,
        scheme: None,
    }
}

fn solve_joint(prob: &Problem, n: usize, cfg: &BestResponseConfig) -> Result<RawSolution> {
    use waterfill::*;
    let s0 = 1.0 / prob.c_f.sqrt();
    let t0 = 1.0 / prob.c_b.sqrt();
    let mut scratch = Vec::with_capacity(prob.pairs.len());
    let eval = |t: f64, scratch: &mut Vec<MaxAffine>| {
        bandwidth_sum(&prob.pairs, prob.kappa, prob.f_max, s0, t, scratch)
    };

    let (s_top, h_top) = eval(t0, &mut scratch).ok_or_else(|| infeasible(prob, n))?;
    let (s, t) = if h_top <= prob.b_max {
        (s_top, t0)
    } else {
        match min_bandwidth_sum(&prob.pairs, prob.kappa, prob.f_max) {
            Some(h) if h < prob.b_max => {}
            _ => return Err(infeasible(prob, n)),
        }
        // Bracket [t_lo, t_hi] with sum(t_lo) <= b_max < sum(t_hi).
        let mut t_hi = t0;
        let mut t_lo = 0.5 * t0;
        let mut lo = eval(t_lo, &mut scratch).ok_or_else(|| infeasible(prob, n))?;
        let mut iters = 0;
        while lo.1 > prob.b_max {
            t_hi = t_lo;
            t_lo *= 0.5;
            lo = eval(t_lo, &mut scratch).ok_or_else(|| infeasible(prob, n))?;
            iters += 1;
            if iters > cfg.max_iters || t_lo == 0.0 {
                return Err(Error::NonConvergence {
                    iterations: iters,
                    residual: lo.1 / prob.b_max - 1.0,
                });
            }
        }
        while t_hi - t_lo > cfg.multiplier_tol * t_hi {
            iters += 1;
            if iters > cfg.max_iters {
                return Err(Error::NonConvergence {
                    iterations: iters,
                    residual: (t_hi - t_lo) / t_hi,
                });
            }
            let mid = 0.5 * (t_lo + t_hi);
            if mid <= t_lo || mid >= t_hi {
                break;
            }
            let r = eval(mid, &mut scratch).ok_or_else(|| infeasible(prob, n))?;
            if r.1 <= prob.b_max {
                t_lo = mid;
                lo = r;
            } else {
                t_hi = mid;
            }
        }
        (lo.0, t_lo)
    };

    let mut f = Vec::with_capacity(prob.pairs.len());
    let mut b = Vec::with_capacity(prob.pairs.len());
    let mut lifted = Vec::with_capacity(prob.pairs.len());
    for p in &prob.pairs {
        let (fi, bi, l) = joint_alloc(p, prob.kappa, s, t);
        f.push(fi);
        b.push(bi);
        lifted.push(l);
    }
    Ok(RawSolution {
        f,
        b,
        lifted,
        p_f: 1.0 / (s * s),
        p_b: 1.0 / (t * t),
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Compute,
    Bandwidth,
}

/// One resource optimized, the other fixed at `fixed` per MU.
fn solve_single(prob: &Problem, n: usize, fixed: &[f64], side: Side) -> Result<RawSolution> {
    use waterfill::*;
    if fixed.len() != prob.pairs.len() {
        return Err(Error::domain("fixed allocation length does not match MU count"));
    }
    let (cost, cap) = match side {
        Side::Compute => (prob.c_f, prob.f_max),
        Side::Bandwidth => (prob.c_b, prob.b_max),
    };
    let mut terms = Vec::with_capacity(prob.pairs.len());
    let mut short = Vec::new();
    for (m, (p, &x)) in prob.pairs.iter().zip(fixed).enumerate() {
        let (load, other) = match side {
            Side::Compute => (p.a, p.c / x),
            Side::Bandwidth => (p.c, p.a / x),
        };
        let headroom = prob.kappa - other;
        if !(x > 0.0) || headroom <= 0.0 {
            short.push(m);
            continue;
        }
        terms.push(MaxAffine {
            k: (p.r * load).sqrt(),
            alpha: load / headroom,
            beta: 0.0,
        });
    }
    if !short.is_empty() {
        return Err(Error::Infeasible {
            asp: n,
            mus: short,
            scheme: None,
        });
    }
    let s0 = 1.0 / cost.sqrt();
    let s = solve_budget(&terms, cap, s0).ok_or_else(|| infeasible(prob, n))?;
    let opt: Vec<f64> = terms.iter().map(|t| t.eval(s)).collect();
    let lifted = terms.iter().map(|t| t.alpha > t.k * s).collect();
    let price = 1.0 / (s * s);
    Ok(match side {
        Side::Compute => RawSolution {
            f: opt,
            b: fixed.to_vec(),
            lifted,
            p_f: price,
            p_b: prob.c_b,
        },
        Side::Bandwidth => RawSolution {
            f: fixed.to_vec(),
            b: opt,
            lifted,
            p_f: prob.c_f,
            p_b: price,
        },
    })
}

fn finish(
    prob: &Problem,
    n: usize,
    mut sol: RawSolution,
    cfg: &BestResponseConfig,
    mask: &ResourceMask,
) -> Result<BestResponseResult> {
    let mut clamp_events = 0;
    for v in sol.f.iter_mut().chain(sol.b.iter_mut()) {
        if *v < ALLOC_FLOOR {
            *v = ALLOC_FLOOR;
            clamp_events += 1;
        }
    }
    let residual = kkt_residual(prob, &sol, mask);
    let mut used_fallback = false;
    let mut kkt = residual;
    if !(residual <= cfg.ascent_tol) {
        let out = projected_ascent_problem(prob, &sol.f, &sol.b, cfg, mask)?;
        sol.f = out.f;
        sol.b = out.b;
        sol.lifted = (0..prob.pairs.len())
            .map(|m| prob.qoe(m, sol.f[m], sol.b[m]) <= CONSTRAINT_TOL * prob.kappa)
            .collect();
        kkt = out.stationarity;
        used_fallback = true;
    }
    let qoe: Vec<f64> = (0..prob.pairs.len())
        .map(|m| prob.qoe(m, sol.f[m], sol.b[m]))
        .collect();
    let sum_f: f64 = sol.f.iter().sum();
    let sum_b: f64 = sol.b.iter().sum();
    let (f_free, b_free) = match mask {
        ResourceMask::Joint => (true, true),
        ResourceMask::FixedBandwidth(_) => (true, false),
        ResourceMask::FixedCompute(_) => (false, true),
    };
    Ok(BestResponseResult {
        asp: n,
        utility: prob.utility(&sol.f, &sol.b),
        active: ActiveConstraints {
            f_budget: f_free && sum_f >= prob.f_max * (1.0 - CONSTRAINT_TOL),
            b_budget: b_free && sum_b >= prob.b_max * (1.0 - CONSTRAINT_TOL),
            qoe_floor: sol.lifted.clone(),
        },
        qoe,
        f: sol.f,
        b: sol.b,
        lambda_f: if f_free { sol.p_f - prob.c_f } else { 0.0 },
        lambda_b: if b_free { sol.p_b - prob.c_b } else { 0.0 },
        kkt_residual: kkt,
        clamp_events,
        used_fallback,
    })
}

/// Largest relative violation among stationarity, sign, feasibility and
/// complementary-slackness conditions at the given multipliers.
fn kkt_residual(prob: &Problem, sol: &RawSolution, mask: &ResourceMask) -> f64 {
    let (f_free, b_free) = match mask {
        ResourceMask::Joint => (true, true),
        ResourceMask::FixedBandwidth(_) => (true, false),
        ResourceMask::FixedCompute(_) => (false, true),
    };
    let mut worst: f64 = 0.0;
    for (m, p) in prob.pairs.iter().enumerate() {
        let (f, b) = (sol.f[m], sol.b[m]);
        let q = prob.qoe(m, f, b);
        worst = worst.max((-q / prob.kappa).max(0.0));
        // Effective weight R + nu implied by each free stationarity condition.
        let w_f = sol.p_f * f * f / p.a;
        let w_b = sol.p_b * b * b / p.c;
        let w = if f_free { w_f } else { w_b };
        if f_free && b_free {
            worst = worst.max((w_f - w_b).abs() / w_f.max(w_b));
        }
        let nu = w - p.r;
        let scale = p.r.max(w).max(f64::MIN_POSITIVE);
        if sol.lifted[m] {
            worst = worst.max((-nu / scale).max(0.0));
            worst = worst.max(q.abs() / prob.kappa);
        } else {
            worst = worst.max(nu.abs() / scale);
        }
    }
    let sum_f: f64 = sol.f.iter().sum();
    let sum_b: f64 = sol.b.iter().sum();
    if f_free {
        worst = worst.max((sum_f / prob.f_max - 1.0).max(0.0));
        let lam = (sol.p_f - prob.c_f) / sol.p_f;
        worst = worst.max(lam * (1.0 - sum_f / prob.f_max).abs());
    }
    if b_free {
        worst = worst.max((sum_b / prob.b_max - 1.0).max(0.0));
        let lam = (sol.p_b - prob.c_b) / sol.p_b;
        worst = worst.max(lam * (1.0 - sum_b / prob.b_max).abs());
    }
    worst
}

pub(crate) use ascent::projected_ascent_problem;

/// Solver result next to the exhaustive grid oracle on the same instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub solver_utility: f64,
    pub oracle_utility: f64,
    /// (oracle - solver) / |oracle|; positive means the oracle found better.
    pub relative_shortfall: f64,
}

/// Best response plus a comparison against `oracle::grid_best_response`.
pub fn best_response_certified(
    scenario: &Scenario,
    n: usize,
    rewards: &RewardMatrix,
    cfg: &BestResponseConfig,
    grid: &crate::oracle::GridSpec,
) -> Result<(BestResponseResult, OracleCheck)> {
    let br = best_response(scenario, n, rewards, cfg)?;
    let (_, oracle_u) = crate::oracle::grid_best_response(scenario, n, rewards, grid)?;
    let check = OracleCheck {
        solver_utility: br.utility,
        oracle_utility: oracle_u,
        relative_shortfall: (oracle_u - br.utility) / oracle_u.abs().max(f64::MIN_POSITIVE),
    };
    Ok((br, check))
}
