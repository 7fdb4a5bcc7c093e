//! Hidden model constants and the ranges generated scenarios draw from.

use serde::{Deserialize, Serialize};

use super::units::de;
use crate::error::{Error, Result};
use crate::model::AccuracyLookup;

/// The shipped calibration file, identical to [`Calibration::default`].
pub const SHIPPED_CALIBRATION: &str = include_str!("../../../../config/calibration.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    /// FLOPs per processed token.
    pub xi: f64,
    /// Cost per FLOPS.
    pub c_f: f64,
    /// Cost per Hz.
    pub c_b: f64,
    pub mu: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub eta: f64,
    pub zeta0: f64,
    pub upsilon: f64,
    pub case_study: CaseStudyCalibration,
}

/// Values the case study leaves unstated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudyCalibration {
    pub x_in: u32,
    /// Linear SNR of every link.
    #[serde(deserialize_with = "de::snr")]
    pub snr: f64,
    #[serde(deserialize_with = "de::compute")]
    pub f_max: f64,
    #[serde(deserialize_with = "de::bandwidth")]
    pub b_max: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        let lookup = AccuracyLookup::default();
        Calibration {
            xi: 1e3,
            c_f: 1e-14,
            c_b: 1e-10,
            mu: 1.0,
            r_min: 1e-3,
            r_max: 0.2,
            eta: lookup.eta,
            zeta0: lookup.zeta0,
            upsilon: lookup.upsilon,
            case_study: CaseStudyCalibration {
                x_in: 1000,
                snr: 100.0,
                f_max: 10e12,
                b_max: 300e6,
            },
        }
    }
}

impl Calibration {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Calibration =
            toml::from_str(text).map_err(|e| Error::Config(format!("calibration: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn shipped() -> Result<Self> {
        Self::from_toml(SHIPPED_CALIBRATION)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("xi", self.xi),
            ("c_f", self.c_f),
            ("c_b", self.c_b),
            ("mu", self.mu),
            ("case_study.snr", self.case_study.snr),
            ("case_study.f_max", self.case_study.f_max),
            ("case_study.b_max", self.case_study.b_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("calibration {name} must be positive, got {v}")));
            }
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(Error::Config(format!(
                "calibration needs 0 < r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.case_study.x_in == 0 {
            return Err(Error::Config("case_study.x_in must be at least 1".into()));
        }
        crate::model::gap_bound(&self.lookup().params(1))
            .map(|_| ())
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// The default (theta_hat, K) table under this calibration's bound constants.
    pub fn lookup(&self) -> AccuracyLookup {
        AccuracyLookup {
            eta: self.eta,
            zeta0: self.zeta0,
            upsilon: self.upsilon,
            ..AccuracyLookup::default()
        }
    }
}

/// Parameter ranges for generated scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRanges {
    pub n_asps: (usize, usize),
    pub n_mus: (usize, usize),
    pub k_values: Vec<u32>,
    pub tokens: (u32, u32),
    #[serde(deserialize_with = "de::compute_range")]
    pub f_max: (f64, f64),
    #[serde(deserialize_with = "de::bandwidth_range")]
    pub b_max: (f64, f64),
    #[serde(deserialize_with = "de::time_range")]
    pub kappa: (f64, f64),
    pub snr_db: (f64, f64),
}

impl Default for ScenarioRanges {
    fn default() -> Self {
        ScenarioRanges {
            n_asps: (1, 5),
            n_mus: (5, 25),
            k_values: vec![2, 4, 6, 8, 10],
            tokens: (100, 2000),
            f_max: (5e12, 30e12),
            b_max: (100e6, 500e6),
            kappa: (0.3, 1.5),
            snr_db: (10.0, 30.0),
        }
    }
}

impl ScenarioRanges {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid range for {what}")));
        if !(self.n_asps.0 >= 1 && self.n_asps.0 <= self.n_asps.1) {
            return bad("n_asps");
        }
        if !(self.n_mus.0 >= 1 && self.n_mus.0 <= self.n_mus.1) {
            return bad("n_mus");
        }
        if self.k_values.is_empty() {
            return bad("k_values");
        }
        if !(self.tokens.0 >= 1 && self.tokens.0 <= self.tokens.1) {
            return bad("tokens");
        }
        for (name, (lo, hi)) in [
            ("f_max", self.f_max),
            ("b_max", self.b_max),
            ("kappa", self.kappa),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(name);
            }
        }
        if !(self.snr_db.0 <= self.snr_db.1 && self.snr_db.0.is_finite() && self.snr_db.1.is_finite()) {
            return bad("snr_db");
        }
        Ok(())
    }

    pub fn contains_n_asps(&self, n: usize) -> bool {
        (self.n_asps.0..=self.n_asps.1).contains(&n)
    }

    pub fn contains_n_mus(&self, m: usize) -> bool {
        (self.n_mus.0..=self.n_mus.1).contains(&m)
    }
}
