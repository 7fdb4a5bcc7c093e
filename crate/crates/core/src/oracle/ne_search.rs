//! Exhaustive search for pure reward-game equilibria on a reward grid.

use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::error::{Error, Result};
use crate::model::{Grid, RewardMatrix, Scenario};

/// ASP response used inside the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NeInner {
    Grid(GridSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeGridSpec {
    /// Reward values per coordinate, spread evenly over [r_min, r_max].
    pub points_per_axis: usize,
    pub inner: NeInner,
}

const MAX_POINTS: usize = 50;

/// Grid equilibria with the oracle's own best response inside.
pub fn grid_ne_search(scenario: &Scenario, spec: &NeGridSpec) -> Result<Vec<RewardMatrix>> {
    let NeInner::Grid(grid) = spec.inner;
    grid_ne_search_with(scenario, spec.points_per_axis, |sc, n, rewards| {
        super::grid_best_response(sc, n, rewards, &grid).map(|(alloc, _)| alloc)
    })
}

/// Grid equilibria with a caller-supplied ASP response returning per-MU
/// (f, b).
///
/// A reward matrix is returned when no MU gains by moving any one of its
/// coordinates to another grid value.
pub fn grid_ne_search_with<F>(
    scenario: &Scenario,
    points_per_axis: usize,
    respond: F,
) -> Result<Vec<RewardMatrix>>
where
    F: Fn(&Scenario, usize, &RewardMatrix) -> Result<Vec<(f64, f64)>> + Sync,
{
    let (nn, mm) = (scenario.n_asps(), scenario.n_mus());
    if nn > 2 || mm > 2 {
        return Err(Error::Size(format!(
            "grid equilibrium search supports at most 2 x 2 markets, got {nn} x {mm}"
        )));
    }
    if !(2..=MAX_POINTS).contains(&points_per_axis) {
        return Err(Error::Size(format!(
            "reward grid must have 2..={MAX_POINTS} points per axis, got {points_per_axis}"
        )));
    }
    // Reward values of MU m; a degenerate interval has a single value.
    let values: Vec<Vec<f64>> = scenario
        .mus
        .iter()
        .map(|u| {
            if u.r_max > u.r_min {
                let k = points_per_axis;
                (0..k)
                    .map(|i| u.r_min + (u.r_max - u.r_min) * i as f64 / (k - 1) as f64)
                    .collect()
            } else {
                vec![u.r_min]
            }
        })
        .collect();
    let sizes: Vec<usize> = values.iter().map(Vec::len).collect();
    let rows: usize = sizes.iter().product();

    // QoE of each ASP's MUs for every possible reward row.
    let mut qoe_rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(nn);
    for n in 0..nn {
        let mut per_row = Vec::with_capacity(rows);
        for r in 0..rows {
            let idx = unrank(r, &sizes);
            let rewards = Grid::from_fn(nn, mm, |_, m| values[m][idx[m]]);
            let alloc = respond(scenario, n, &rewards)?;
            let asp = &scenario.asps[n];
            let qs = (0..mm)
                .map(|m| {
                    crate::model::qoe(
                        asp,
                        &scenario.demands[(n, m)],
                        &scenario.channels[(n, m)],
                        alloc[m].0,
                        alloc[m].1,
                    )
                })
                .collect::<Result<Vec<f64>>>()?;
            per_row.push(qs);
        }
        qoe_rows.push(per_row);
    }

    let utility = |m: usize, row_of: &[usize], reward_of: &dyn Fn(usize) -> f64| -> f64 {
        let mut total_q = 0.0;
        let mut paid = 0.0;
        for n in 0..nn {
            let q = qoe_rows[n][row_of[n]][m];
            total_q += q;
            paid += reward_of(n) * q;
        }
        if 1.0 + total_q <= 0.0 {
            f64::NEG_INFINITY
        } else {
            scenario.mus[m].mu * total_q.ln_1p() - paid
        }
    };

    let total: usize = rows.pow(nn as u32);
    let mut found = Vec::new();
    for combo in 0..total {
        let row_idx = unrank(combo, &vec![rows; nn]);
        let idx: Vec<Vec<usize>> = row_idx.iter().map(|&r| unrank(r, &sizes)).collect();
        let mut is_ne = true;
        'check: for m in 0..mm {
            let base = utility(m, &row_idx, &|n| values[m][idx[n][m]]);
            let tol = 1e-12 * (1.0 + base.abs());
            for n in 0..nn {
                for alt in 0..sizes[m] {
                    if alt == idx[n][m] {
                        continue;
                    }
                    let mut alt_idx = idx[n].clone();
                    alt_idx[m] = alt;
                    let mut rows_alt = row_idx.clone();
                    rows_alt[n] = rank(&alt_idx, &sizes);
                    let u = utility(m, &rows_alt, &|k| {
                        if k == n {
                            values[m][alt]
                        } else {
                            values[m][idx[k][m]]
                        }
                    });
                    if u > base + tol {
                        is_ne = false;
                        break 'check;
                    }
                }
            }
        }
        if is_ne {
            found.push(Grid::from_fn(nn, mm, |n, m| values[m][idx[n][m]]));
        }
    }
    Ok(found)
}

fn unrank(mut r: usize, sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&s| {
            let v = r % s;
            r /= s;
            v
        })
        .collect()
}

fn rank(idx: &[usize], sizes: &[usize]) -> usize {
    idx.iter()
        .zip(sizes)
        .rev()
        .fold(0, |acc, (&i, &s)| acc * s + i)
}
