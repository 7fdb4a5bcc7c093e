use super::{qoe, Allocation, RewardMatrix, Scenario};
use crate::error::{Error, Result};

/// Reward income minus resource cost of ASP `n`.
pub fn asp_utility(
    scenario: &Scenario,
    n: usize,
    rewards: &RewardMatrix,
    alloc: &Allocation,
) -> Result<f64> {
    scenario.check_asp(n)?;
    let asp = &scenario.asps[n];
    let mut total = 0.0;
    for m in 0..scenario.n_mus() {
        let (f, b) = (alloc.f[(n, m)], alloc.b[(n, m)]);
        let q = qoe(asp, &scenario.demands[(n, m)], &scenario.channels[(n, m)], f, b)?;
        total += rewards[(n, m)] * q - asp.c_f * f - asp.c_b * b;
    }
    Ok(total)
}

/// mu * ln(1 + sum of QoE) minus the rewards paid, for MU `m`.
pub fn mu_utility(
    scenario: &Scenario,
    m: usize,
    rewards: &RewardMatrix,
    alloc: &Allocation,
) -> Result<f64> {
    scenario.check_mu(m)?;
    let mut qs = Vec::with_capacity(scenario.n_asps());
    for n in 0..scenario.n_asps() {
        qs.push(qoe(
            &scenario.asps[n],
            &scenario.demands[(n, m)],
            &scenario.channels[(n, m)],
            alloc.f[(n, m)],
            alloc.b[(n, m)],
        )?);
    }
    mu_utility_from_qoe(scenario.mus[m].mu, &rewards.column(m), &qs)
}

/// MU utility from per-ASP rewards and QoE values.
pub fn mu_utility_from_qoe(mu: f64, rewards: &[f64], qoes: &[f64]) -> Result<f64> {
    let total_q: f64 = qoes.iter().sum();
    if !(1.0 + total_q > 0.0) {
        return Err(Error::domain(format!(
            "1 + total QoE must be positive, got {}",
            1.0 + total_q
        )));
    }
    let paid: f64 = rewards.iter().zip(qoes).map(|(r, q)| r * q).sum();
    Ok(mu * total_q.ln_1p() - paid)
}
