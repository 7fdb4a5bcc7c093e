//! TOML form of a [`Scenario`], with unit-suffixed quantities.
//!
//! ```toml
//! seed = 7
//!
//! [[asp]]
//! kappa = "500ms"
//! xi = 1000.0
//! c_f = 1e-14
//! c_b = 1e-10
//! f_max = "10TFLOPS"
//! b_max = "300MHz"
//!
//! [[mu]]
//! mu = 1.0
//! r_min = 0.001
//! r_max = 0.2
//!
//! [[pair]]
//! asp = 1
//! mu = 1
//! theta_hat = 1e-7
//! x_in = 1000
//! x_out = 200
//! snr = "20dB"
//! ```
//!
//! Indices are 1-based and every (asp, mu) pair must appear exactly once.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::units::{to_quantity, Dimension, Quantity};
use crate::error::{Error, Result};
use crate::model::{AspParams, Channel, Demand, Grid, MuParams, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub seed: u64,
    pub asp: Vec<AspEntry>,
    pub mu: Vec<MuParams>,
    pub pair: Vec<PairEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AspEntry {
    pub kappa: Quantity,
    pub xi: f64,
    pub c_f: f64,
    pub c_b: f64,
    pub f_max: Quantity,
    pub b_max: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub asp: usize,
    pub mu: usize,
    pub theta_hat: f64,
    pub x_in: u32,
    pub x_out: u32,
    pub snr: Quantity,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        let asp = s
            .asps
            .iter()
            .map(|a| AspEntry {
                kappa: to_quantity(a.kappa, Dimension::Time),
                xi: a.xi,
                c_f: a.c_f,
                c_b: a.c_b,
                f_max: to_quantity(a.f_max, Dimension::Compute),
                b_max: to_quantity(a.b_max, Dimension::Bandwidth),
            })
            .collect();
        let mut pair = Vec::with_capacity(s.n_asps() * s.n_mus());
        for n in 0..s.n_asps() {
            for m in 0..s.n_mus() {
                let d = s.demands[(n, m)];
                pair.push(PairEntry {
                    asp: n + 1,
                    mu: m + 1,
                    theta_hat: d.theta_hat,
                    x_in: d.x_in,
                    x_out: d.x_out,
                    snr: to_quantity(s.channels[(n, m)].snr, Dimension::Snr),
                });
            }
        }
        ScenarioFile {
            seed: s.seed,
            asp,
            mu: s.mus.clone(),
            pair,
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let asps = self
            .asp
            .iter()
            .map(|a| {
                Ok(AspParams {
                    kappa: a.kappa.to_si(Dimension::Time)?,
                    xi: a.xi,
                    c_f: a.c_f,
                    c_b: a.c_b,
                    f_max: a.f_max.to_si(Dimension::Compute)?,
                    b_max: a.b_max.to_si(Dimension::Bandwidth)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (nn, mm) = (asps.len(), self.mu.len());
        let mut cells: Grid<Option<(Demand, Channel)>> = Grid::filled(nn, mm, None);
        for p in &self.pair {
            if p.asp == 0 || p.asp > nn || p.mu == 0 || p.mu > mm {
                return Err(Error::Config(format!(
                    "pair ({}, {}) outside {nn} ASPs x {mm} MUs",
                    p.asp, p.mu
                )));
            }
            let cell = &mut cells[(p.asp - 1, p.mu - 1)];
            if cell.is_some() {
                return Err(Error::Config(format!("pair ({}, {}) listed twice", p.asp, p.mu)));
            }
            let demand = Demand {
                theta_hat: p.theta_hat,
                x_in: p.x_in,
                x_out: p.x_out,
            };
            *cell = Some((demand, Channel::from_snr(p.snr.to_si(Dimension::Snr)?)?));
        }
        for n in 0..nn {
            for m in 0..mm {
                if cells[(n, m)].is_none() {
                    return Err(Error::Config(format!("pair ({}, {}) missing", n + 1, m + 1)));
                }
            }
        }
        let scenario = Scenario {
            asps,
            mus: self.mu.clone(),
            demands: cells.map(|c| c.unwrap().0),
            channels: cells.map(|c| c.unwrap().1),
            seed: self.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

pub fn scenario_to_toml(s: &Scenario) -> Result<String> {
    toml::to_string(&ScenarioFile::from_scenario(s)).map_err(|e| Error::Serde(e.to_string()))
}

pub fn scenario_from_toml(text: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
    file.to_scenario()
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scenario_from_toml(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<()> {
    fs::write(path, scenario_to_toml(s)?).map_err(|e| Error::io(path, e))
}
