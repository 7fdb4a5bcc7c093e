//! Exhaustive grid search over one ASP's allocations.
//!
//! Every MU shares one uniform step per resource, so a grid allocation is a
//! vector of integer offsets and the budgets become bounds on the offset
//! sums. An exact max-plus dynamic program over those sums enumerates all
//! budget-feasible grid points without materializing the product grid.
//! Refinement passes repeat the search on a finer grid centered on the
//! previous argmax.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{comm_load, compute_load, RewardMatrix, Scenario};

/// Per-MU bounds, canonical units, applied to every MU of the ASP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub f: (f64, f64),
    pub b: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub refine_points: usize,
    pub refine_passes: usize,
    /// Defaults to [cap / 1000, cap] per resource.
    pub bounds: Option<GridBounds>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_axis: 400,
            refine_points: 400,
            refine_passes: 1,
            bounds: None,
        }
    }
}

impl GridSpec {
    /// Default resolution for an ASP serving `mus` MUs: 400 x 400 for one MU;
    /// coarser grids with more refinement passes otherwise, since the
    /// budget program is quartic in the points per axis.
    pub fn for_mus(mus: usize) -> Self {
        if mus <= 1 {
            GridSpec::default()
        } else {
            GridSpec {
                points_per_axis: 48,
                refine_points: 48,
                refine_passes: 4,
                bounds: None,
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.points_per_axis < 2 || (self.refine_passes > 0 && self.refine_points < 2) {
            return Err(Error::Config("grid needs at least 2 points per axis".into()));
        }
        if let Some(bd) = self.bounds {
            for (lo, hi) in [bd.f, bd.b] {
                if !(lo > 0.0 && hi > lo) {
                    return Err(Error::Config(format!("grid bounds must satisfy 0 < lo < hi, got ({lo}, {hi})")));
                }
            }
        }
        Ok(())
    }
}

const MAX_MUS: usize = 3;
const MAX_WORK: f64 = 4e9;

struct Instance {
    kappa: f64,
    c_f: f64,
    c_b: f64,
    f_max: f64,
    b_max: f64,
    r: Vec<f64>,
    a: Vec<f64>,
    c: Vec<f64>,
}

impl Instance {
    fn value(&self, m: usize, f: f64, b: f64) -> f64 {
        let q = self.kappa - self.a[m] / f - self.c[m] / b;
        if q < 0.0 || !q.is_finite() {
            f64::NEG_INFINITY
        } else {
            self.r[m] * q - self.c_f * f - self.c_b * b
        }
    }
}

/// One axis of the search: MU m's values are lo[m] + i * step.
struct Axis {
    lo: Vec<f64>,
    step: f64,
    points: usize,
    /// Largest admissible sum of offsets.
    max_sum: usize,
}

impl Axis {
    fn new(lo: Vec<f64>, step: f64, points: usize, cap: f64) -> Option<Self> {
        let room = cap - lo.iter().sum::<f64>();
        if room < 0.0 {
            return None;
        }
        let max_sum = ((room / step) * (1.0 + 1e-12)).floor();
        let max_sum = max_sum.min((lo.len() * (points - 1)) as f64) as usize;
        Some(Axis {
            lo,
            step,
            points,
            max_sum,
        })
    }

    fn value(&self, m: usize, i: usize) -> f64 {
        self.lo[m] + i as f64 * self.step
    }
}

/// Best allocation of ASP `n` on the grid, with its utility.
pub fn grid_best_response(
    scenario: &Scenario,
    n: usize,
    rewards: &RewardMatrix,
    grid: &GridSpec,
) -> Result<(Vec<(f64, f64)>, f64)> {
    grid.validate()?;
    if n >= scenario.n_asps() {
        return Err(Error::Index {
            what: "ASP",
            index: n,
            size: scenario.n_asps(),
        });
    }
    let mm = scenario.n_mus();
    if mm > MAX_MUS {
        return Err(Error::Size(format!(
            "grid best response supports at most {MAX_MUS} MUs, got {mm}"
        )));
    }
    let work = |k: usize| (mm.saturating_sub(1)) as f64 * (mm as f64 * k as f64).powi(2) * (k as f64).powi(2);
    if work(grid.points_per_axis) > MAX_WORK || work(grid.refine_points) > MAX_WORK {
        return Err(Error::Size(format!(
            "{} points per axis for {mm} MUs exceeds the search budget",
            grid.points_per_axis.max(grid.refine_points)
        )));
    }
    let asp = &scenario.asps[n];
    let inst = Instance {
        kappa: asp.kappa,
        c_f: asp.c_f,
        c_b: asp.c_b,
        f_max: asp.f_max,
        b_max: asp.b_max,
        r: (0..mm).map(|m| rewards[(n, m)]).collect(),
        a: (0..mm)
            .map(|m| compute_load(asp, &scenario.demands[(n, m)]))
            .collect(),
        c: (0..mm)
            .map(|m| comm_load(&scenario.demands[(n, m)], &scenario.channels[(n, m)]))
            .collect(),
    };
    let bounds = grid.bounds.unwrap_or(GridBounds {
        f: (inst.f_max * 1e-3, inst.f_max),
        b: (inst.b_max * 1e-3, inst.b_max),
    });
    let k = grid.points_per_axis;
    let step_f = (bounds.f.1 - bounds.f.0) / (k - 1) as f64;
    let step_b = (bounds.b.1 - bounds.b.0) / (k - 1) as f64;
    let infeasible = || Error::Infeasible {
        asp: n,
        mus: (0..mm).collect(),
        scheme: None,
    };
    let fx = Axis::new(vec![bounds.f.0; mm], step_f, k, inst.f_max).ok_or_else(infeasible)?;
    let bx = Axis::new(vec![bounds.b.0; mm], step_b, k, inst.b_max).ok_or_else(infeasible)?;
    let (mut best, mut value) = search(&inst, &fx, &bx).ok_or_else(infeasible)?;

    let (mut span_f, mut span_b) = (2.0 * step_f, 2.0 * step_b);
    for _ in 0..grid.refine_passes {
        let kr = grid.refine_points;
        let sf = 2.0 * span_f / (kr - 1) as f64;
        let sb = 2.0 * span_b / (kr - 1) as f64;
        let lo_f: Vec<f64> = best.iter().map(|p| (p.0 - span_f).max(sf)).collect();
        let lo_b: Vec<f64> = best.iter().map(|p| (p.1 - span_b).max(sb)).collect();
        let fx = Axis::new(lo_f, sf, kr, inst.f_max);
        let bx = Axis::new(lo_b, sb, kr, inst.b_max);
        if let (Some(fx), Some(bx)) = (fx, bx) {
            if let Some((cand, v)) = search(&inst, &fx, &bx) {
                if v > value {
                    best = cand;
                    value = v;
                }
            }
        }
        span_f = 2.0 * sf;
        span_b = 2.0 * sb;
    }
    Ok((best, value))
}

/// Exact maximum over all grid allocations within the offset-sum limits.
fn search(inst: &Instance, fx: &Axis, bx: &Axis) -> Option<(Vec<(f64, f64)>, f64)> {
    let mm = inst.r.len();
    let (kf, kb) = (fx.points, bx.points);
    // Per-MU value tables, indexed [i * kb + j].
    let tables: Vec<Vec<f64>> = (0..mm)
        .map(|m| {
            (0..kf * kb)
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = (idx / kb, idx % kb);
                    inst.value(m, fx.value(m, i), bx.value(m, j))
                })
                .collect()
        })
        .collect();

    // acc[(i, j)] = best total of the MUs so far using offset sums exactly i, j.
    let (mut ni, mut nj) = ((kf - 1).min(fx.max_sum) + 1, (kb - 1).min(bx.max_sum) + 1);
    let mut acc: Vec<f64> = (0..ni * nj)
        .map(|idx| tables[0][(idx / nj) * kb + idx % nj])
        .collect();
    let mut choices: Vec<Vec<(u32, u32)>> = Vec::with_capacity(mm);
    for table in tables.iter().skip(1) {
        let ti = (ni - 1 + kf - 1).min(fx.max_sum) + 1;
        let tj = (nj - 1 + kb - 1).min(bx.max_sum) + 1;
        let prev = &acc;
        let (vals, picks): (Vec<f64>, Vec<(u32, u32)>) = (0..ti * tj)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / tj, idx % tj);
                let mut best = f64::NEG_INFINITY;
                let mut pick = (0u32, 0u32);
                for i1 in i.saturating_sub(kf - 1)..=i.min(ni - 1) {
                    for j1 in j.saturating_sub(kb - 1)..=j.min(nj - 1) {
                        let v = prev[i1 * nj + j1] + table[(i - i1) * kb + (j - j1)];
                        if v > best {
                            best = v;
                            pick = (i1 as u32, j1 as u32);
                        }
                    }
                }
                (best, pick)
            })
            .unzip();
        acc = vals;
        choices.push(picks);
        ni = ti;
        nj = tj;
    }
    let (mut bi, mut bj, mut bv) = (0, 0, f64::NEG_INFINITY);
    for i in 0..ni {
        for j in 0..nj {
            if acc[i * nj + j] > bv {
                bv = acc[i * nj + j];
                bi = i;
                bj = j;
            }
        }
    }
    if !bv.is_finite() {
        return None;
    }
    // Walk the choices back to per-MU offsets.
    let mut offsets = vec![(0usize, 0usize); mm];
    let (mut i, mut j) = (bi, bj);
    let mut widths: Vec<usize> = Vec::with_capacity(mm);
    let mut w = (kb - 1).min(bx.max_sum) + 1;
    widths.push(w);
    for _ in 1..mm {
        w = (w - 1 + kb - 1).min(bx.max_sum) + 1;
        widths.push(w);
    }
    for m in (1..mm).rev() {
        let (i1, j1) = choices[m - 1][i * widths[m] + j];
        offsets[m] = (i - i1 as usize, j - j1 as usize);
        i = i1 as usize;
        j = j1 as usize;
    }
    offsets[0] = (i, j);
    let alloc = offsets
        .iter()
        .enumerate()
        .map(|(m, &(i, j))| (fx.value(m, i), bx.value(m, j)))
        .collect();
    Some((alloc, bv))
}
