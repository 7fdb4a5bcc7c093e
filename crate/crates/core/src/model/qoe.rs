use serde::{Deserialize, Serialize};

use super::{AspParams, Channel, Demand};
use crate::error::{Error, Result};

/// Payload per token: 4 bytes.
pub const BITS_PER_TOKEN: f64 = 32.0;

/// Total context tokens processed while generating `x_out` tokens after an
/// `x_in`-token prompt: sum over i < x_out of (x_in + i).
pub fn token_cost_sum(x_in: u64, x_out: u64) -> u64 {
    x_in * x_out + x_out * x_out.saturating_sub(1) / 2
}

/// Loads that turn resources into latency: compute latency is A/f and
/// transmission latency is C/b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLoad {
    /// A = xi * ln(1/theta_hat) * token_cost_sum, FLOPs.
    pub compute: f64,
    /// C = 32 (x_in + x_out) / log2(1 + snr), Hz * s.
    pub comm: f64,
}

pub fn compute_load(asp: &AspParams, d: &Demand) -> f64 {
    let s = token_cost_sum(d.x_in as u64, d.x_out as u64) as f64;
    asp.xi * (1.0 / d.theta_hat).ln() * s
}

pub fn comm_load(d: &Demand, ch: &Channel) -> f64 {
    BITS_PER_TOKEN * (d.x_in as f64 + d.x_out as f64) / ch.spectral_efficiency()
}

/// QoE in seconds: latency headroom kappa - A/f - C/b. May be negative.
pub fn qoe(asp: &AspParams, d: &Demand, ch: &Channel, f: f64, b: f64) -> Result<f64> {
    if !(f > 0.0) || !(b > 0.0) {
        return Err(Error::domain(format!(
            "resources must be positive to evaluate QoE (f = {f}, b = {b})"
        )));
    }
    Ok(qoe_from_loads(asp.kappa, compute_load(asp, d), comm_load(d, ch), f, b))
}

#[inline]
pub fn qoe_from_loads(kappa: f64, compute: f64, comm: f64, f: f64, b: f64) -> f64 {
    kappa - compute / f - comm / b
}
