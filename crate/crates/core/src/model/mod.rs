//! Domain types, the QoE metric, the accuracy gap bound and both utility
//! functions.
//!
//! All quantities are canonical SI: seconds, FLOPS, Hz. Rewards are
//! currency per second of QoE.

mod gap;
mod grid;
mod qoe;
mod utility;

pub use gap::{gap_bound, AccuracyLookup, GapBoundParams};
pub use grid::Grid;
pub use qoe::{
    comm_load, compute_load, qoe, qoe_from_loads, token_cost_sum, PairLoad, BITS_PER_TOKEN,
};
pub use utility::{asp_utility, mu_utility, mu_utility_from_qoe};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One MU's service request to one ASP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    /// Accuracy gap target in (0, 1).
    pub theta_hat: f64,
    pub x_in: u32,
    pub x_out: u32,
}

impl Demand {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_hat > 0.0 && self.theta_hat < 1.0) {
            return Err(Error::domain(format!(
                "theta_hat must lie in (0, 1), got {}",
                self.theta_hat
            )));
        }
        if self.x_in == 0 || self.x_out == 0 {
            return Err(Error::domain("token counts must be at least 1"));
        }
        Ok(())
    }
}

/// Uplink channel summarized by its linear SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub snr: f64,
}

impl Channel {
    pub fn from_snr(snr: f64) -> Result<Self> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::domain(format!("snr must be positive, got {snr}")));
        }
        Ok(Channel { snr })
    }

    pub fn from_snr_db(db: f64) -> Result<Self> {
        Self::from_snr(10f64.powf(db / 10.0))
    }

    /// SNR from power gain, transmit power (W) and noise power (W).
    pub fn from_link(gain: f64, tx_power: f64, noise_power: f64) -> Result<Self> {
        if !(gain > 0.0 && tx_power > 0.0 && noise_power > 0.0) {
            return Err(Error::domain(
                "gain, transmit power and noise power must be positive",
            ));
        }
        Self::from_snr(gain * tx_power / noise_power)
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr.log10()
    }

    /// log2(1 + snr), bits per second per Hz.
    pub fn spectral_efficiency(&self) -> f64 {
        self.snr.ln_1p() / std::f64::consts::LN_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspParams {
    /// Maximum tolerable latency, seconds.
    pub kappa: f64,
    /// FLOPs per token.
    pub xi: f64,
    /// Cost per FLOPS of allocated compute.
    pub c_f: f64,
    /// Cost per Hz of allocated bandwidth.
    pub c_b: f64,
    pub f_max: f64,
    pub b_max: f64,
}

impl AspParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kappa", self.kappa),
            ("xi", self.xi),
            ("c_f", self.c_f),
            ("c_b", self.c_b),
            ("f_max", self.f_max),
            ("b_max", self.b_max),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("ASP {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuParams {
    /// Weight of the logarithmic QoE gain.
    pub mu: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl MuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::domain(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(Error::domain(format!(
                "reward bounds must satisfy 0 < r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.r_min + self.r_max)
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.r_min, self.r_max)
    }
}

/// The full market: N ASPs, M MUs and the N x M demand and channel grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub asps: Vec<AspParams>,
    pub mus: Vec<MuParams>,
    pub demands: Grid<Demand>,
    pub channels: Grid<Channel>,
    pub seed: u64,
}

impl Scenario {
    pub fn n_asps(&self) -> usize {
        self.asps.len()
    }

    pub fn n_mus(&self) -> usize {
        self.mus.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_asps(), self.n_mus());
        if n == 0 || m == 0 {
            return Err(Error::domain("scenario needs at least one ASP and one MU"));
        }
        if self.demands.shape() != (n, m) || self.channels.shape() != (n, m) {
            return Err(Error::domain(format!(
                "demand/channel grids must be {n} x {m}, got {:?} and {:?}",
                self.demands.shape(),
                self.channels.shape()
            )));
        }
        for a in &self.asps {
            a.validate()?;
        }
        for u in &self.mus {
            u.validate()?;
        }
        for d in self.demands.iter() {
            d.validate()?;
        }
        for c in self.channels.iter() {
            if !(c.snr > 0.0 && c.snr.is_finite()) {
                return Err(Error::domain(format!("snr must be positive, got {}", c.snr)));
            }
        }
        Ok(())
    }

    pub(crate) fn check_asp(&self, n: usize) -> Result<()> {
        if n >= self.n_asps() {
            return Err(Error::Index {
                what: "ASP",
                index: n,
                size: self.n_asps(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_mu(&self, m: usize) -> Result<()> {
        if m >= self.n_mus() {
            return Err(Error::Index {
                what: "MU",
                index: m,
                size: self.n_mus(),
            });
        }
        Ok(())
    }

    /// Compute and communication loads of pair (n, m).
    pub fn load(&self, n: usize, m: usize) -> PairLoad {
        PairLoad {
            compute: compute_load(&self.asps[n], &self.demands[(n, m)]),
            comm: comm_load(&self.demands[(n, m)], &self.channels[(n, m)]),
        }
    }

    /// Every MU at the midpoint of its reward interval.
    pub fn midpoint_rewards(&self) -> RewardMatrix {
        Grid::from_fn(self.n_asps(), self.n_mus(), |_, m| self.mus[m].midpoint())
    }
}

/// R[n][m], reward per second of QoE paid by MU m to ASP n.
pub type RewardMatrix = Grid<f64>;

/// Compute (FLOPS) and bandwidth (Hz) granted by each ASP to each MU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub f: Grid<f64>,
    pub b: Grid<f64>,
}

impl Allocation {
    pub fn zeros(n: usize, m: usize) -> Self {
        Allocation {
            f: Grid::filled(n, m, 0.0),
            b: Grid::filled(n, m, 0.0),
        }
    }
}
