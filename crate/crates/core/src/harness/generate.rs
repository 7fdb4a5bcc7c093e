//! Seeded scenario generation and the built-in two-ASP case study.
//!
//! Every drawn value comes from its own ChaCha stream keyed by
//! (seed, n, m, field), so a scenario with fewer agents is a sub-grid of a
//! larger one generated from the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::calibration::{Calibration, ScenarioRanges};
use crate::error::{Error, Result};
use crate::model::{AspParams, Channel, Demand, Grid, MuParams, Scenario};

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Field {
    FMax = 1,
    BMax = 2,
    Kappa = 3,
    K = 4,
    XIn = 5,
    XOut = 6,
    Snr = 7,
}

/// Column index used for per-ASP fields.
const ASP_KEY: u64 = u64::MAX;

fn stream(seed: u64, n: u64, m: u64, field: Field) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&n.to_le_bytes());
    key[16..24].copy_from_slice(&m.to_le_bytes());
    key[24..].copy_from_slice(&(field as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn uniform(seed: u64, n: u64, m: u64, field: Field, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    stream(seed, n, m, field).gen_range(lo..=hi)
}

pub fn generate_scenario(
    seed: u64,
    n_asps: usize,
    n_mus: usize,
    ranges: &ScenarioRanges,
    calib: &Calibration,
) -> Result<Scenario> {
    ranges.validate()?;
    calib.validate()?;
    if n_asps == 0 || n_mus == 0 {
        return Err(Error::Config("scenario needs at least one ASP and one MU".into()));
    }
    let lookup = calib.lookup();
    let asps = (0..n_asps as u64)
        .map(|n| AspParams {
            kappa: uniform(seed, n, ASP_KEY, Field::Kappa, ranges.kappa),
            xi: calib.xi,
            c_f: calib.c_f,
            c_b: calib.c_b,
            f_max: uniform(seed, n, ASP_KEY, Field::FMax, ranges.f_max),
            b_max: uniform(seed, n, ASP_KEY, Field::BMax, ranges.b_max),
        })
        .collect();
    let mus = vec![
        MuParams {
            mu: calib.mu,
            r_min: calib.r_min,
            r_max: calib.r_max,
        };
        n_mus
    ];
    let mut thetas = Grid::filled(n_asps, n_mus, 0.0);
    for n in 0..n_asps {
        for m in 0..n_mus {
            let i = stream(seed, n as u64, m as u64, Field::K).gen_range(0..ranges.k_values.len());
            thetas[(n, m)] = lookup.theta_for_listed(ranges.k_values[i])?;
        }
    }
    let tokens = |n: usize, m: usize, field| {
        stream(seed, n as u64, m as u64, field).gen_range(ranges.tokens.0..=ranges.tokens.1)
    };
    let demands = Grid::from_fn(n_asps, n_mus, |n, m| Demand {
        theta_hat: thetas[(n, m)],
        x_in: tokens(n, m, Field::XIn),
        x_out: tokens(n, m, Field::XOut),
    });
    let channels = Grid::from_fn(n_asps, n_mus, |n, m| Channel {
        snr: 10f64.powf(uniform(seed, n as u64, m as u64, Field::Snr, ranges.snr_db) / 10.0),
    });
    let scenario = Scenario {
        asps,
        mus,
        demands,
        channels,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Accuracy targets and output tokens of the case study, [MU][ASP].
pub const CASE_STUDY_DEMANDS: [[(f64, u32); 2]; 3] = [
    [(1e-7, 200), (1e-5, 1400)],
    [(1e-9, 500), (1e-7, 1200)],
    [(1e-8, 800), (1e-8, 1000)],
];

/// Latency limits of the two case-study ASPs, seconds.
pub const CASE_STUDY_KAPPA: [f64; 2] = [0.5, 1.0];

/// Values pinned on top of a generated scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverride {
    /// Latency limit per ASP, seconds.
    pub kappa: Option<Vec<f64>>,
    pub demands: Option<Grid<Demand>>,
    /// Linear SNR of every link.
    pub snr: Option<f64>,
}

impl ScenarioOverride {
    pub fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        if let Some(kappa) = &self.kappa {
            if kappa.len() != scenario.n_asps() {
                return Err(Error::Config(format!(
                    "kappa override has {} entries for {} ASPs",
                    kappa.len(),
                    scenario.n_asps()
                )));
            }
            for (a, &k) in scenario.asps.iter_mut().zip(kappa) {
                a.kappa = k;
            }
        }
        if let Some(d) = &self.demands {
            if d.shape() != scenario.demands.shape() {
                return Err(Error::Config(format!(
                    "demand override is {:?}, scenario is {:?}",
                    d.shape(),
                    scenario.demands.shape()
                )));
            }
            scenario.demands = d.clone();
        }
        if let Some(snr) = self.snr {
            scenario.channels = scenario.channels.map(|_| Channel { snr });
        }
        scenario.validate()
    }
}

/// Ranges that pin the case-study capacities and input length.
pub fn case_study_ranges(calib: &Calibration) -> ScenarioRanges {
    let cs = &calib.case_study;
    ScenarioRanges {
        n_asps: (2, 2),
        n_mus: (3, 3),
        tokens: (cs.x_in, cs.x_in),
        f_max: (cs.f_max, cs.f_max),
        b_max: (cs.b_max, cs.b_max),
        ..ScenarioRanges::default()
    }
}

/// The case-study demand grid and latency limits as an override.
pub fn case_study_override(calib: &Calibration) -> ScenarioOverride {
    ScenarioOverride {
        kappa: Some(CASE_STUDY_KAPPA.to_vec()),
        demands: Some(Grid::from_fn(2, 3, |n, m| {
            let (theta_hat, x_out) = CASE_STUDY_DEMANDS[m][n];
            Demand {
                theta_hat,
                x_in: calib.case_study.x_in,
                x_out,
            }
        })),
        snr: Some(calib.case_study.snr),
    }
}

/// Two ASPs and three MUs with the personalized demands above.
pub fn case_study_scenario(calib: &Calibration) -> Result<Scenario> {
    let mut scenario = generate_scenario(0, 2, 3, &case_study_ranges(calib), calib)?;
    case_study_override(calib).apply(&mut scenario)?;
    Ok(scenario)
}
