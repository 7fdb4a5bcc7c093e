//! Barrier projected-gradient ascent for one ASP.
//!
//! Variables are scaled to budget fractions x = f / f_max and y = b / b_max.
//! The QoE floors enter through a log barrier rho * ln Q whose weight is
//! cut tenfold per stage; the budgets are kept by projection. Steps are
//! diagonally scaled by the curvature of each coordinate and accepted
//! under an Armijo test.

use serde::{Deserialize, Serialize};

use super::{Pair, Problem, ResourceMask, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentOutcome {
    pub f: Vec<f64>,
    pub b: Vec<f64>,
    pub utility: f64,
    /// Largest relative projected step at termination.
    pub stationarity: f64,
    pub iterations: usize,
}

/// Ascent from `(f0, b0)` for ASP `n` facing `rewards`.
///
/// The start is used as given when strictly feasible; otherwise it is
/// blended with a strictly feasible point.
pub fn projected_ascent(
    scenario: &Scenario,
    n: usize,
    rewards: &[f64],
    f0: &[f64],
    b0: &[f64],
    cfg: &super::BestResponseConfig,
    mask: &ResourceMask,
) -> Result<AscentOutcome> {
    cfg.validate()?;
    let prob = Problem::new(scenario, n, rewards)?;
    let (mut f0, mut b0) = (f0.to_vec(), b0.to_vec());
    match mask {
        ResourceMask::Joint => {}
        ResourceMask::FixedBandwidth(b) => b0 = b.clone(),
        ResourceMask::FixedCompute(f) => f0 = f.clone(),
    }
    projected_ascent_problem(&prob, &f0, &b0, cfg, mask)
}

const LOWER: f64 = 1e-14;
const ARMIJO: f64 = 1e-4;

struct Scaled<'a> {
    prob: &'a Problem,
    a: Vec<f64>,
    c: Vec<f64>,
    free_f: bool,
    free_b: bool,
}

impl Scaled<'_> {
    fn q(&self, m: usize, x: f64, y: f64) -> f64 {
        self.prob.kappa - self.a[m] / x - self.c[m] / y
    }

    fn objective(&self, x: &[f64], y: &[f64], rho: f64) -> Option<f64> {
        let p = self.prob;
        let mut total = 0.0;
        for (m, pair) in p.pairs.iter().enumerate() {
            let q = self.q(m, x[m], y[m]);
            if rho > 0.0 && q <= 0.0 {
                return None;
            }
            total += pair.r * q - p.c_f * p.f_max * x[m] - p.c_b * p.b_max * y[m];
            if rho > 0.0 {
                total += rho * q.ln();
            }
        }
        Some(total)
    }
}

pub(crate) fn projected_ascent_problem(
    prob: &Problem,
    f0: &[f64],
    b0: &[f64],
    cfg: &super::BestResponseConfig,
    mask: &ResourceMask,
) -> Result<AscentOutcome> {
    let mm = prob.pairs.len();
    let (free_f, free_b) = match mask {
        ResourceMask::Joint => (true, true),
        ResourceMask::FixedBandwidth(_) => (true, false),
        ResourceMask::FixedCompute(_) => (false, true),
    };
    let sc = Scaled {
        prob,
        a: prob.pairs.iter().map(|p| p.a / prob.f_max).collect(),
        c: prob.pairs.iter().map(|p| p.c / prob.b_max).collect(),
        free_f,
        free_b,
    };
    let mut x: Vec<f64> = f0.iter().map(|f| f / prob.f_max).collect();
    let mut y: Vec<f64> = b0.iter().map(|b| b / prob.b_max).collect();
    let strictly_feasible = |x: &[f64], y: &[f64]| {
        x.iter().sum::<f64>() <= 1.0
            && y.iter().sum::<f64>() <= 1.0
            && (0..mm).all(|m| x[m] > 0.0 && y[m] > 0.0 && sc.q(m, x[m], y[m]) > 0.0)
    };
    if !strictly_feasible(&x, &y) {
        let (xi, yi) = interior_point(&sc, &x, &y).ok_or_else(|| Error::Infeasible {
            asp: prob.asp,
            mus: (0..mm).collect(),
            scheme: None,
        })?;
        let weakly = x.iter().sum::<f64>() <= 1.0 + 1e-12
            && y.iter().sum::<f64>() <= 1.0 + 1e-12
            && (0..mm).all(|m| x[m] > 0.0 && y[m] > 0.0 && sc.q(m, x[m], y[m]) >= 0.0);
        if weakly {
            for m in 0..mm {
                x[m] = 0.5 * (x[m] + xi[m]);
                y[m] = 0.5 * (y[m] + yi[m]);
            }
        } else {
            x = xi;
            y = yi;
        }
    }

    let scale: f64 = prob.pairs.iter().map(|p| p.r * prob.kappa).sum::<f64>()
        + prob.c_f * prob.f_max
        + prob.c_b * prob.b_max;
    let mut rho = 1e-3 * scale / mm as f64;
    let rho_final = 1e-14 * scale / mm as f64;
    let mut iterations = 0;
    let mut stationarity;
    let mut gx = vec![0.0; mm];
    let mut gy = vec![0.0; mm];
    let mut hx = vec![0.0; mm];
    let mut hy = vec![0.0; mm];
    loop {
        loop {
            for (m, pair) in prob.pairs.iter().enumerate() {
                let q = sc.q(m, x[m], y[m]);
                let w = pair.r + rho / q;
                let dqx = sc.a[m] / (x[m] * x[m]);
                let dqy = sc.c[m] / (y[m] * y[m]);
                gx[m] = w * dqx - prob.c_f * prob.f_max;
                gy[m] = w * dqy - prob.c_b * prob.b_max;
                hx[m] = w * 2.0 * dqx / x[m] + rho * dqx * dqx / (q * q);
                hy[m] = w * 2.0 * dqy / y[m] + rho * dqy * dqy / (q * q);
            }
            let dx = if sc.free_f { direction(&x, &gx, &hx) } else { vec![0.0; mm] };
            let dy = if sc.free_b { direction(&y, &gy, &hy) } else { vec![0.0; mm] };
            stationarity = (0..mm)
                .map(|m| (dx[m] / x[m]).abs().max((dy[m] / y[m]).abs()))
                .fold(0.0, f64::max);
            if stationarity <= cfg.ascent_tol {
                break;
            }
            iterations += 1;
            if iterations > cfg.max_iters {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: stationarity,
                });
            }
            let phi0 = sc.objective(&x, &y, rho).unwrap_or(f64::NEG_INFINITY);
            let slope: f64 = (0..mm).map(|m| gx[m] * dx[m] + gy[m] * dy[m]).sum();
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-30 {
                let xn: Vec<f64> = (0..mm).map(|m| x[m] + alpha * dx[m]).collect();
                let yn: Vec<f64> = (0..mm).map(|m| y[m] + alpha * dy[m]).collect();
                if let Some(phi) = sc.objective(&xn, &yn, rho) {
                    if phi >= phi0 + ARMIJO * alpha * slope {
                        x = xn;
                        y = yn;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                // No representable improvement along the projected direction.
                break;
            }
        }
        if rho <= rho_final {
            break;
        }
        rho = (rho * 0.1).max(rho_final);
    }
    let f: Vec<f64> = x.iter().map(|v| v * prob.f_max).collect();
    let b: Vec<f64> = y.iter().map(|v| v * prob.b_max).collect();
    Ok(AscentOutcome {
        utility: prob.utility(&f, &b),
        f,
        b,
        stationarity,
        iterations,
    })
}

/// Scaled Newton step projected onto {v >= LOWER, sum v <= 1}, minus the
/// current point.
fn direction(v: &[f64], g: &[f64], h: &[f64]) -> Vec<f64> {
    let z: Vec<f64> = v.iter().zip(g).zip(h).map(|((v, g), h)| v + g / h).collect();
    let at = |tau: f64| -> f64 {
        z.iter()
            .zip(h)
            .map(|(z, h)| (z - tau / h).max(LOWER))
            .sum::<f64>()
    };
    let tau = if at(0.0) <= 1.0 {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = z
            .iter()
            .zip(h)
            .map(|(z, h)| h * (z - LOWER))
            .fold(0.0, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if at(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    z.iter()
        .zip(h)
        .zip(v)
        .map(|((z, h), v)| (z - tau / h).max(LOWER) - v)
        .collect()
}

/// A point with every QoE strictly positive within the budgets: the
/// cheapest allocation meeting a tightened latency bound.
fn interior_point(sc: &Scaled<'_>, x0: &[f64], y0: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let prob = sc.prob;
    let mm = prob.pairs.len();
    for shrink in [0.5, 0.2, 0.1, 1e-2, 1e-3, 1e-4, 1e-6] {
        let kappa = prob.kappa * (1.0 - shrink);
        let cand = match (sc.free_f, sc.free_b) {
            (true, true) => {
                let pairs: &[Pair] = &prob.pairs;
                let sum_a: f64 = pairs.iter().map(|p| p.a).sum();
                let sum_ac: f64 = pairs.iter().map(|p| (p.a * p.c).sqrt()).sum();
                let f_cap = prob.f_max * (1.0 - 1e-9);
                let slack = kappa * f_cap - sum_a;
                if slack <= 0.0 {
                    continue;
                }
                let r = slack / sum_ac;
                let x: Vec<f64> = pairs
                    .iter()
                    .map(|p| (p.a + (p.a * p.c).sqrt() * r) / kappa / prob.f_max)
                    .collect();
                let y: Vec<f64> = pairs
                    .iter()
                    .map(|p| (p.c + (p.a * p.c).sqrt() / r) / kappa / prob.b_max)
                    .collect();
                (x, y)
            }
            (true, false) => {
                let x = (0..mm)
                    .map(|m| {
                        let room = kappa - sc.c[m] / y0[m];
                        if room > 0.0 { sc.a[m] / room } else { f64::INFINITY }
                    })
                    .collect();
                (x, y0.to_vec())
            }
            (false, true) => {
                let y = (0..mm)
                    .map(|m| {
                        let room = kappa - sc.a[m] / x0[m];
                        if room > 0.0 { sc.c[m] / room } else { f64::INFINITY }
                    })
                    .collect();
                (x0.to_vec(), y)
            }
            (false, false) => (x0.to_vec(), y0.to_vec()),
        };
        let (x, y) = cand;
        let ok = x.iter().sum::<f64>() <= 1.0
            && y.iter().sum::<f64>() <= 1.0
            && (0..mm).all(|m| sc.q(m, x[m], y[m]) > 0.0);
        if ok {
            return Some((x, y));
        }
    }
    None
}
