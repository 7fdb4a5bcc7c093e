//! Unit-suffixed quantities in configuration files.
//!
//! Values may be bare numbers (already canonical) or strings such as
//! `"500ms"`, `"30TFLOPS"`, `"300MHz"` or `"20dB"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Seconds.
    Time,
    /// FLOPS.
    Compute,
    /// Hz.
    Bandwidth,
    /// Linear SNR; strings ending in dB are converted.
    Snr,
    Plain,
}

/// A raw config value before unit conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    pub fn to_si(&self, dim: Dimension) -> Result<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => parse(s, dim),
        }
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

const TIME: &[(&str, f64)] = &[("ms", 1e-3), ("us", 1e-6), ("s", 1.0)];
const COMPUTE: &[(&str, f64)] = &[
    ("pflops", 1e15),
    ("tflops", 1e12),
    ("gflops", 1e9),
    ("mflops", 1e6),
    ("flops", 1.0),
];
const BANDWIDTH: &[(&str, f64)] = &[("ghz", 1e9), ("mhz", 1e6), ("khz", 1e3), ("hz", 1.0)];

/// Converts a suffixed string to canonical units.
pub fn parse(text: &str, dim: Dimension) -> Result<f64> {
    let s = text.trim();
    let lower = s.to_ascii_lowercase();
    let bad = || Error::Config(format!("cannot read '{text}' as {dim:?}"));
    let number = |body: &str| body.trim().parse::<f64>().map_err(|_| bad());
    let table = match dim {
        Dimension::Time => TIME,
        Dimension::Compute => COMPUTE,
        Dimension::Bandwidth => BANDWIDTH,
        Dimension::Snr => {
            return match lower.strip_suffix("db") {
                Some(body) => Ok(10f64.powf(number(body)? / 10.0)),
                None => number(&lower),
            };
        }
        Dimension::Plain => return number(&lower),
    };
    for (suffix, scale) in table {
        if let Some(body) = lower.strip_suffix(suffix) {
            return Ok(number(body)? * scale);
        }
    }
    number(&lower)
}

/// `v` as a unit string when that string reads back to exactly `v`,
/// otherwise as a bare number.
pub fn to_quantity(v: f64, dim: Dimension) -> Quantity {
    let text = match dim {
        Dimension::Time => format!("{}ms", v * 1e3),
        Dimension::Compute => format!("{}TFLOPS", v / 1e12),
        Dimension::Bandwidth => format!("{}MHz", v / 1e6),
        Dimension::Snr => format!("{}dB", 10.0 * v.log10()),
        Dimension::Plain => return Quantity::Number(v),
    };
    match parse(&text, dim) {
        Ok(back) if back == v => Quantity::Text(text),
        _ => Quantity::Number(v),
    }
}

/// `deserialize_with` adapters reading a [`Quantity`] into canonical units.
pub mod de {
    use super::{Dimension, Quantity};
    use serde::{Deserialize, Deserializer};

    fn read<'de, D: Deserializer<'de>>(d: D, dim: Dimension) -> Result<f64, D::Error> {
        Quantity::deserialize(d)?
            .to_si(dim)
            .map_err(serde::de::Error::custom)
    }

    pub fn time<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        read(d, Dimension::Time)
    }

    pub fn compute<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        read(d, Dimension::Compute)
    }

    pub fn bandwidth<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        read(d, Dimension::Bandwidth)
    }

    pub fn snr<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        read(d, Dimension::Snr)
    }

    fn read_pair<'de, D: Deserializer<'de>>(d: D, dim: Dimension) -> Result<(f64, f64), D::Error> {
        let (lo, hi) = <(Quantity, Quantity)>::deserialize(d)?;
        let conv = |q: Quantity| q.to_si(dim).map_err(serde::de::Error::custom);
        Ok((conv(lo)?, conv(hi)?))
    }

    pub fn time_range<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        read_pair(d, Dimension::Time)
    }

    pub fn compute_range<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        read_pair(d, Dimension::Compute)
    }

    pub fn bandwidth_range<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        read_pair(d, Dimension::Bandwidth)
    }
}
