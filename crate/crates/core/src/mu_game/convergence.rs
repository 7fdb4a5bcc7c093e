//! Utility-gap measurements for comparing step-size schedules.

use super::EquilibriumReport;

/// Per-round gap sum_m |U_m(reference) - U_m(round)|, including the start.
pub fn utility_gap_series(report: &EquilibriumReport, reference: &[f64]) -> Vec<f64> {
    report
        .mu_utility_trajectory
        .iter()
        .map(|us| us.iter().zip(reference).map(|(u, r)| (r - u).abs()).sum())
        .collect()
}

/// Radius delta * M * N / 2 of the equilibrium neighborhood reached with a
/// constant step delta.
pub fn neighborhood_radius(delta: f64, mus: usize, asps: usize) -> f64 {
    delta * (mus * asps) as f64 / 2.0
}

/// First round index whose gap is at most `level`.
pub fn rounds_to_reach(series: &[f64], level: f64) -> Option<usize> {
    series.iter().position(|g| *g <= level)
}

/// First round index from which the gap stays at or below `level`.
pub fn rounds_to_settle(series: &[f64], level: f64) -> Option<usize> {
    let last_above = series.iter().rposition(|g| *g > level);
    match last_above {
        None => Some(0),
        Some(i) if i + 1 < series.len() => Some(i + 1),
        Some(_) => None,
    }
}
