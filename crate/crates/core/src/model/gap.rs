//! Upper bound on the output-distribution gap after K chain-of-thought
//! examples, and the accuracy-target to K lookup built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBoundParams {
    /// Ambiguity ceiling, in [0, 0.5).
    pub eta: f64,
    /// Ambiguity of the initial task, in [0, 1).
    pub zeta0: f64,
    /// Skewness, at least 1.
    pub upsilon: f64,
    pub k_examples: u32,
}

impl GapBoundParams {
    fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta < 0.5) {
            return Err(Error::domain(format!("eta must lie in [0, 0.5), got {}", self.eta)));
        }
        if !(self.zeta0 >= 0.0 && self.zeta0 < 1.0) {
            return Err(Error::domain(format!("zeta0 must lie in [0, 1), got {}", self.zeta0)));
        }
        if !(self.upsilon >= 1.0 && self.upsilon.is_finite()) {
            return Err(Error::domain(format!("upsilon must be >= 1, got {}", self.upsilon)));
        }
        Ok(())
    }

    /// beta = 2 * upsilon^K * zeta0 / (1 - zeta0).
    pub fn beta(&self) -> f64 {
        2.0 * self.upsilon.powi(self.k_examples as i32) * self.zeta0 / (1.0 - self.zeta0)
    }
}

/// beta * (eta / (1 - eta))^K.
pub fn gap_bound(p: &GapBoundParams) -> Result<f64> {
    p.validate()?;
    Ok(p.beta() * (p.eta / (1.0 - p.eta)).powi(p.k_examples as i32))
}

/// Maps an accuracy target theta_hat to the number of examples K.
///
/// Listed pairs are used verbatim; other targets take the smallest K whose
/// bound does not exceed the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyLookup {
    pub eta: f64,
    pub zeta0: f64,
    pub upsilon: f64,
    /// (theta_hat, K) pairs.
    pub pairs: Vec<(f64, u32)>,
}

impl Default for AccuracyLookup {
    /// eta = 1/11, zeta0 = 1/21, upsilon = 1 give bound(K) = 10^-(K+1), which
    /// reproduces the five listed pairs exactly.
    fn default() -> Self {
        AccuracyLookup {
            eta: 1.0 / 11.0,
            zeta0: 1.0 / 21.0,
            upsilon: 1.0,
            pairs: vec![(1e-11, 10), (1e-9, 8), (1e-7, 6), (1e-5, 4), (1e-3, 2)],
        }
    }
}

impl AccuracyLookup {
    pub fn params(&self, k: u32) -> GapBoundParams {
        GapBoundParams {
            eta: self.eta,
            zeta0: self.zeta0,
            upsilon: self.upsilon,
            k_examples: k,
        }
    }

    /// Bound on the gap after `k` examples.
    pub fn theta_for(&self, k: u32) -> Result<f64> {
        gap_bound(&self.params(k))
    }

    /// Per-example contraction factor upsilon * eta / (1 - eta).
    pub fn ratio(&self) -> f64 {
        self.upsilon * self.eta / (1.0 - self.eta)
    }

    /// K for `theta_hat`: a listed pair if one matches, otherwise the inversion.
    pub fn k_for(&self, theta_hat: f64) -> Result<u32> {
        if let Some(&(_, k)) = self
            .pairs
            .iter()
            .find(|(t, _)| ((t - theta_hat) / t).abs() <= 1e-9)
        {
            return Ok(k);
        }
        self.invert(theta_hat)
    }

    /// Smallest K with bound(K) <= theta_hat, ignoring the listed pairs.
    pub fn invert(&self, theta_hat: f64) -> Result<u32> {
        self.params(0).validate()?;
        if !(theta_hat > 0.0 && theta_hat < 1.0) {
            return Err(Error::domain(format!(
                "theta_hat must lie in (0, 1), got {theta_hat}"
            )));
        }
        let ratio = self.ratio();
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::domain(format!(
                "bound does not decrease in K (contraction factor {ratio})"
            )));
        }
        let beta0 = 2.0 * self.zeta0 / (1.0 - self.zeta0);
        if theta_hat >= beta0 {
            return Ok(0);
        }
        let k = (theta_hat / beta0).ln() / ratio.ln();
        // Values within rounding of an integer are that integer.
        let k = (k - 1e-9).ceil().max(0.0);
        if k > u32::MAX as f64 {
            return Err(Error::domain(format!("theta_hat {theta_hat} needs too many examples")));
        }
        Ok(k as u32)
    }

    /// K values present in the table, ascending.
    pub fn k_values(&self) -> Vec<u32> {
        let mut ks: Vec<u32> = self.pairs.iter().map(|p| p.1).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    /// Table entry for `k`, falling back to the bound itself.
    pub fn theta_for_listed(&self, k: u32) -> Result<f64> {
        match self.pairs.iter().find(|p| p.1 == k) {
            Some(&(t, _)) => Ok(t),
            None => self.theta_for(k),
        }
    }
}
