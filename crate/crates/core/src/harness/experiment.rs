//! Experiment specs, sweeps over one scenario parameter, and the run manifest.
//!
//! A spec file looks like
//!
//! ```toml
//! name = "theta"
//! output_dir = "out/theta"
//! schemes = ["proposed", "token"]
//!
//! [scenario]
//! source = "case-study"      # or "generate" (seed, n_asps, n_mus) or "file" (path)
//!
//! [sweep]
//! variable = "theta_hat"     # theta_hat, x_out, kappa, M or N
//! values = [1e-11, 1e-9, 1e-7, 1e-5, 1e-3]
//!
//! [game]
//! schedule = "constant:1e-4"
//! epsilon = 1e-9
//! max_rounds = 5000
//! ```
//!
//! `theta_hat` and `x_out` act on the pair (ASP 1, MU 1), `kappa` on ASP 1,
//! and `M` / `N` regenerate the scenario with that many MUs / ASPs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::calibration::{Calibration, ScenarioRanges};
use super::csv_out::{emit_csv, CsvKind, TrendRow};
use super::generate::{case_study_scenario, generate_scenario, ScenarioOverride};
use super::scenario_file::load_scenario;
use super::units::{Dimension, Quantity};
use crate::baselines::{run_scheme, MarketMetrics, SchemeId, SchemeOutcome};
use crate::error::{Error, Result};
use crate::model::{Allocation, Grid, RewardMatrix, Scenario};
use crate::mu_game::{CertifySettings, GameConfig, InitialRewards, StepSchedule, UpdateRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    ThetaHat,
    XOut,
    Kappa,
    M,
    N,
}

impl SweepVar {
    pub fn dimension(&self) -> Dimension {
        match self {
            SweepVar::Kappa => Dimension::Time,
            _ => Dimension::Plain,
        }
    }

    fn is_integer(&self) -> bool {
        matches!(self, SweepVar::XOut | SweepVar::M | SweepVar::N)
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVar::ThetaHat => "theta_hat",
            SweepVar::XOut => "x_out",
            SweepVar::Kappa => "kappa",
            SweepVar::M => "M",
            SweepVar::N => "N",
        })
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "theta_hat" | "theta" => SweepVar::ThetaHat,
            "x_out" => SweepVar::XOut,
            "kappa" => SweepVar::Kappa,
            "M" | "m" | "mus" => SweepVar::M,
            "N" | "n" | "asps" => SweepVar::N,
            other => return Err(Error::Config(format!("unknown sweep variable '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVar,
    /// Canonical units.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScenarioSource {
    CaseStudy,
    Generate { n_asps: usize, n_mus: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub source: ScenarioSource,
    /// Seed of generated scenarios and of random initial rewards.
    pub seed: u64,
    pub overrides: ScenarioOverride,
    pub ranges: ScenarioRanges,
    /// Allow sweep values outside `ranges`.
    pub override_ranges: bool,
    pub sweep: Option<Sweep>,
    pub schemes: Vec<SchemeId>,
    pub game: GameConfig,
    pub calibration: Calibration,
    pub output_dir: PathBuf,
}

/// Default game settings used by the harness.
pub fn default_game() -> GameConfig {
    GameConfig::new(StepSchedule::Constant { delta: 1e-4 }, 1e-9, 5000)
}

/// `constant:<delta>` or `diminishing:<u>`.
pub fn parse_schedule(s: &str) -> Result<StepSchedule> {
    let bad = || Error::Config(format!("schedule must be constant:<delta> or diminishing:<u>, got '{s}'"));
    let (kind, v) = s.trim().split_once(':').ok_or_else(bad)?;
    let v: f64 = v.trim().parse().map_err(|_| bad())?;
    let sched = match kind.trim().to_ascii_lowercase().as_str() {
        "constant" => StepSchedule::Constant { delta: v },
        "diminishing" => StepSchedule::Diminishing { u: v },
        _ => return Err(bad()),
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(bad());
    }
    Ok(sched)
}

pub fn format_schedule(s: &StepSchedule) -> String {
    match s {
        StepSchedule::Constant { delta } => format!("constant:{delta}"),
        StepSchedule::Diminishing { u } => format!("diminishing:{u}"),
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    name: Option<String>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    schemes: Vec<String>,
    #[serde(default)]
    override_ranges: bool,
    /// Path to a calibration file, relative to the spec file.
    calibration: Option<PathBuf>,
    scenario: Option<ScenarioSection>,
    ranges: Option<ScenarioRanges>,
    sweep: Option<SweepSection>,
    game: Option<GameSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    source: String,
    #[serde(default)]
    seed: u64,
    n_asps: Option<usize>,
    n_mus: Option<usize>,
    path: Option<PathBuf>,
    #[serde(default, rename = "override")]
    overrides: ScenarioOverride,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    variable: String,
    values: Vec<Quantity>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameSection {
    schedule: Option<String>,
    epsilon: Option<f64>,
    max_rounds: Option<usize>,
    /// "midpoint", "max" or "random".
    initial: Option<String>,
    /// "three-way" or "sign".
    rule: Option<String>,
    certify: Option<bool>,
}

impl ExperimentSpec {
    /// One unswept proposed-scheme run on the case study.
    pub fn case_study(calibration: Calibration, output_dir: PathBuf) -> Self {
        ExperimentSpec {
            name: "case-study".into(),
            source: ScenarioSource::CaseStudy,
            seed: 0,
            overrides: ScenarioOverride::default(),
            ranges: ScenarioRanges::default(),
            override_ranges: false,
            sweep: None,
            schemes: vec![SchemeId::Proposed],
            game: default_game(),
            calibration,
            output_dir,
        }
    }

    /// Parses a spec file; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let file: SpecFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("experiment spec: {e}")))?;
        let calibration = match &file.calibration {
            Some(p) => {
                let path = base.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Calibration::from_toml(&text)?
            }
            None => Calibration::default(),
        };
        let (source, seed, overrides) = match file.scenario {
            None => (ScenarioSource::CaseStudy, 0, ScenarioOverride::default()),
            Some(sec) => {
                let source = match sec.source.as_str() {
                    "case-study" | "case_study" => ScenarioSource::CaseStudy,
                    "generate" => ScenarioSource::Generate {
                        n_asps: sec.n_asps.ok_or_else(|| Error::Config("generate needs n_asps".into()))?,
                        n_mus: sec.n_mus.ok_or_else(|| Error::Config("generate needs n_mus".into()))?,
                    },
                    "file" => ScenarioSource::File(base.join(
                        sec.path.ok_or_else(|| Error::Config("file source needs path".into()))?,
                    )),
                    other => return Err(Error::Config(format!("unknown scenario source '{other}'"))),
                };
                (source, sec.seed, sec.overrides)
            }
        };
        let sweep = match file.sweep {
            None => None,
            Some(sec) => {
                let variable: SweepVar = sec.variable.parse()?;
                let values = sec
                    .values
                    .iter()
                    .map(|q| q.to_si(variable.dimension()))
                    .collect::<Result<_>>()?;
                Some(Sweep { variable, values })
            }
        };
        let schemes = if file.schemes.is_empty() {
            vec![SchemeId::Proposed]
        } else {
            file.schemes.iter().map(|s| s.parse()).collect::<Result<_>>()?
        };
        let g = file.game.unwrap_or_default();
        let mut game = default_game();
        if let Some(s) = &g.schedule {
            game.schedule = parse_schedule(s)?;
        }
        if let Some(e) = g.epsilon {
            game.epsilon = e;
        }
        if let Some(t) = g.max_rounds {
            game.max_rounds = t;
        }
        if let Some(init) = &g.initial {
            game.initial = match init.as_str() {
                "midpoint" => InitialRewards::Midpoint,
                "random" => InitialRewards::Random { seed },
                other => return Err(Error::Config(format!("unknown initial rewards '{other}'"))),
            };
        }
        if let Some(rule) = &g.rule {
            game.rule = match rule.as_str() {
                "three-way" | "three_way" => UpdateRule::ThreeWay,
                "sign" => UpdateRule::SignGradient,
                other => return Err(Error::Config(format!("unknown update rule '{other}'"))),
            };
        }
        if let Some(c) = g.certify {
            game.certify = c.then(CertifySettings::default);
        }
        let spec = ExperimentSpec {
            name: file.name.unwrap_or_else(|| "experiment".into()),
            source,
            seed,
            overrides,
            ranges: file.ranges.unwrap_or_default(),
            override_ranges: file.override_ranges,
            sweep,
            schemes,
            game,
            calibration,
            output_dir: base.join(file.output_dir.unwrap_or_else(|| PathBuf::from("out"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        for s in &self.schemes {
            s.validate()?;
        }
        self.ranges.validate()?;
        self.calibration.validate()?;
        self.game.validate()?;
        let Some(sweep) = &self.sweep else {
            return Ok(());
        };
        if matches!(sweep.variable, SweepVar::M | SweepVar::N)
            && !matches!(self.source, ScenarioSource::Generate { .. })
        {
            return Err(Error::Config(format!(
                "sweeping {} needs a generated scenario",
                sweep.variable
            )));
        }
        for &v in &sweep.values {
            if !v.is_finite() || (sweep.variable.is_integer() && (v.fract() != 0.0 || v < 1.0)) {
                return Err(Error::Config(format!("bad {} value {v}", sweep.variable)));
            }
            if !self.override_ranges && !self.in_range(sweep.variable, v)? {
                return Err(Error::Config(format!(
                    "{} = {v} lies outside the configured ranges (use override_ranges)",
                    sweep.variable
                )));
            }
        }
        Ok(())
    }

    fn in_range(&self, var: SweepVar, v: f64) -> Result<bool> {
        let r = &self.ranges;
        Ok(match var {
            SweepVar::ThetaHat => {
                let lookup = self.calibration.lookup();
                let thetas = r
                    .k_values
                    .iter()
                    .map(|&k| lookup.theta_for_listed(k))
                    .collect::<Result<Vec<_>>>()?;
                let lo = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9)
            }
            SweepVar::XOut => v >= r.tokens.0 as f64 && v <= r.tokens.1 as f64,
            SweepVar::Kappa => v >= r.kappa.0 * (1.0 - 1e-12) && v <= r.kappa.1 * (1.0 + 1e-12),
            SweepVar::M => r.contains_n_mus(v as usize),
            SweepVar::N => r.contains_n_asps(v as usize),
        })
    }

    /// SHA-256 of the canonical JSON form of the spec.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Scenario at the unswept baseline.
    pub fn base_scenario(&self) -> Result<Scenario> {
        self.scenario_with(None)
    }

    fn scenario_with(&self, point: Option<(SweepVar, f64)>) -> Result<Scenario> {
        let (mut nn, mut mm) = match self.source {
            ScenarioSource::Generate { n_asps, n_mus } => (n_asps, n_mus),
            _ => (0, 0),
        };
        match point {
            Some((SweepVar::M, v)) => mm = v as usize,
            Some((SweepVar::N, v)) => nn = v as usize,
            _ => {}
        }
        let mut scenario = match &self.source {
            ScenarioSource::CaseStudy => case_study_scenario(&self.calibration)?,
            ScenarioSource::Generate { .. } => {
                generate_scenario(self.seed, nn, mm, &self.ranges, &self.calibration)?
            }
            ScenarioSource::File(path) => load_scenario(path)?,
        };
        self.overrides.apply(&mut scenario)?;
        match point {
            Some((SweepVar::ThetaHat, v)) => scenario.demands[(0, 0)].theta_hat = v,
            Some((SweepVar::XOut, v)) => scenario.demands[(0, 0)].x_out = v as u32,
            Some((SweepVar::Kappa, v)) => scenario.asps[0].kappa = v,
            _ => {}
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Result of one (sweep point, scheme) run.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    /// Position in the sweep.
    pub index: usize,
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub scenario: Option<Scenario>,
    pub outcome: std::result::Result<SchemeOutcome, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
    Flat,
    Mixed,
}

/// Monotonicity of one metric across the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub scheme: String,
    pub metric: String,
    pub direction: Direction,
    /// Sign of the least-squares slope against the sweep value: -1, 0 or 1.
    pub slope_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub rewards: RewardMatrix,
    pub alloc: Allocation,
    pub qoe: Grid<f64>,
    pub metrics: MarketMetrics,
    pub rounds: Option<usize>,
    pub converged: Option<bool>,
    pub ne_certified: Option<bool>,
    pub max_deviation_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub result: std::result::Result<PointSummary, String>,
}

/// Run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub spec_hash: String,
    pub seed: u64,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub calibration: Calibration,
    pub game: GameConfig,
    pub sweep_var: Option<String>,
    pub points: Vec<PointRecord>,
    pub trends: Vec<Trend>,
    pub failures: usize,
    pub files: Vec<PathBuf>,
}

impl RunRecord {
    pub fn partial(&self) -> bool {
        self.failures > 0
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub record: RunRecord,
    pub points: Vec<PointOutcome>,
}

impl ExperimentResult {
    /// Long-format rows of every metric, in sweep, scheme, metric order.
    pub fn trend_rows(&self) -> Vec<TrendRow> {
        let var = self.record.sweep_var.clone().unwrap_or_default();
        let mut rows = Vec::new();
        for p in &self.points {
            if let Ok(out) = &p.outcome {
                for (metric, value) in metric_series(out) {
                    rows.push(TrendRow {
                        sweep_var: var.clone(),
                        sweep_value: p.sweep_value,
                        scheme: p.scheme.clone(),
                        metric,
                        value,
                    });
                }
            }
        }
        rows
    }

    /// Values of `metric` for `scheme` across the sweep, skipping failed points.
    pub fn series(&self, scheme: &str, metric: &str) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.scheme == scheme)
            .filter_map(|p| {
                let out = p.outcome.as_ref().ok()?;
                let v = metric_series(out).into_iter().find(|(k, _)| k == metric)?.1;
                Some((p.sweep_value.unwrap_or(f64::NAN), v))
            })
            .collect()
    }
}

/// Named scalar metrics of one outcome; indices are 1-based.
pub fn metric_series(out: &SchemeOutcome) -> Vec<(String, f64)> {
    let m = &out.metrics;
    let mut v = vec![
        ("avg_mu_utility".to_string(), m.avg_mu_utility),
        ("avg_asp_utility".to_string(), m.avg_asp_utility),
        ("avg_mu_cost".to_string(), m.avg_mu_cost),
        ("avg_asp_cost".to_string(), m.avg_asp_cost),
        ("f_usage".to_string(), m.mean_f_usage()),
        ("b_usage".to_string(), m.mean_b_usage()),
    ];
    if let Some(r) = &out.report {
        v.push(("rounds".into(), r.rounds_used as f64));
        v.push(("converged".into(), if r.converged { 1.0 } else { 0.0 }));
    }
    for (i, u) in m.mu_utilities.iter().enumerate() {
        v.push((format!("mu_utility[{}]", i + 1), *u));
    }
    for (i, u) in m.asp_utilities.iter().enumerate() {
        v.push((format!("asp_utility[{}]", i + 1), *u));
    }
    for (i, u) in m.f_usage.iter().enumerate() {
        v.push((format!("f_usage[{}]", i + 1), *u));
    }
    for (i, u) in m.b_usage.iter().enumerate() {
        v.push((format!("b_usage[{}]", i + 1), *u));
    }
    let (nn, mm) = out.rewards.shape();
    for (name, grid) in [
        ("reward", &out.rewards),
        ("qoe", &out.qoe),
        ("f", &out.alloc.f),
        ("b", &out.alloc.b),
    ] {
        for n in 0..nn {
            for k in 0..mm {
                v.push((format!("{name}[{},{}]", n + 1, k + 1), grid[(n, k)]));
            }
        }
    }
    v
}

fn direction(values: &[f64]) -> Direction {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let up = diffs.iter().any(|d| *d > 0.0);
    let down = diffs.iter().any(|d| *d < 0.0);
    match (up, down) {
        (true, false) => Direction::Increasing,
        (false, true) => Direction::Decreasing,
        (false, false) => Direction::Flat,
        (true, true) => Direction::Mixed,
    }
}

fn slope_sign(xs: &[f64], ys: &[f64]) -> i8 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if s > 0.0 {
        1
    } else if s < 0.0 {
        -1
    } else {
        0
    }
}

fn trends(points: &[PointOutcome], schemes: &[String]) -> Vec<Trend> {
    let mut out = Vec::new();
    for scheme in schemes {
        let ok: Vec<(f64, Vec<(String, f64)>)> = points
            .iter()
            .filter(|p| &p.scheme == scheme)
            .filter_map(|p| Some((p.sweep_value?, metric_series(p.outcome.as_ref().ok()?))))
            .collect();
        if ok.len() < 2 {
            continue;
        }
        let xs: Vec<f64> = ok.iter().map(|p| p.0).collect();
        for (metric, _) in &ok[0].1 {
            let ys: Option<Vec<f64>> = ok
                .iter()
                .map(|p| p.1.iter().find(|(k, _)| k == metric).map(|kv| kv.1))
                .collect();
            if let Some(ys) = ys {
                out.push(Trend {
                    scheme: scheme.clone(),
                    metric: metric.clone(),
                    direction: direction(&ys),
                    slope_sign: slope_sign(&xs, &ys),
                });
            }
        }
    }
    out
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Runs every (sweep value, scheme) pair without writing files.
///
/// Failures of individual points are kept in the result; only an invalid
/// spec is an error.
pub fn run_points(spec: &ExperimentSpec) -> Result<Vec<PointOutcome>> {
    spec.validate()?;
    let values: Vec<Option<f64>> = match &spec.sweep {
        Some(s) => s.values.iter().map(|v| Some(*v)).collect(),
        None => vec![None],
    };
    let tasks: Vec<(usize, Option<f64>, SchemeId)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, v)| spec.schemes.iter().map(move |s| (i, *v, *s)))
        .collect();
    let var = spec.sweep.as_ref().map(|s| s.variable);
    Ok(tasks
        .into_par_iter()
        .map(|(index, value, scheme)| {
            let scenario = spec.scenario_with(var.zip(value));
            let (scenario, outcome) = match scenario {
                Ok(sc) => {
                    let out = run_scheme(&sc, scheme, &spec.game).map_err(|e| e.to_string());
                    (Some(sc), out)
                }
                Err(e) => (None, Err(e.to_string())),
            };
            PointOutcome {
                index,
                sweep_value: value,
                scheme: scheme.to_string(),
                scenario,
                outcome,
            }
        })
        .collect())
}

/// Runs the spec, writes CSVs and `manifest.json` into the output directory.
///
/// `jobs` bounds the number of worker threads; results do not depend on it.
pub fn run_experiment(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<ExperimentResult> {
    let started = unix_now();
    let points = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_points(spec))?,
        None => run_points(spec)?,
    };
    let schemes: Vec<String> = spec.schemes.iter().map(|s| s.to_string()).collect();
    let records = points
        .iter()
        .map(|p| PointRecord {
            index: p.index,
            sweep_value: p.sweep_value,
            scheme: p.scheme.clone(),
            result: p.outcome.as_ref().map(summarize).map_err(|e| e.clone()),
        })
        .collect();
    let mut result = ExperimentResult {
        record: RunRecord {
            name: spec.name.clone(),
            spec_hash: spec.hash(),
            seed: spec.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: started,
            finished_unix: 0.0,
            calibration: spec.calibration.clone(),
            game: spec.game.clone(),
            sweep_var: spec.sweep.as_ref().map(|s| s.variable.to_string()),
            failures: points.iter().filter(|p| p.outcome.is_err()).count(),
            trends: trends(&points, &schemes),
            points: records,
            files: Vec::new(),
        },
        points,
    };
    let dir = &spec.output_dir;
    let mut files = Vec::new();
    for kind in [CsvKind::Trend, CsvKind::Allocation, CsvKind::Trajectory] {
        files.extend(emit_csv(&result, kind, dir)?);
    }
    let manifest = dir.join("manifest.json");
    files.push(manifest.clone());
    result.record.files = files;
    result.record.finished_unix = unix_now();
    let json = serde_json::to_string_pretty(&result.record).map_err(|e| Error::Serde(e.to_string()))?;
    std::fs::write(&manifest, json).map_err(|e| Error::io(&manifest, e))?;
    Ok(result)
}

fn summarize(out: &SchemeOutcome) -> PointSummary {
    let report = out.report.as_ref();
    PointSummary {
        rewards: out.rewards.clone(),
        alloc: out.alloc.clone(),
        qoe: out.qoe.clone(),
        metrics: out.metrics.clone(),
        rounds: report.map(|r| r.rounds_used),
        converged: report.map(|r| r.converged),
        ne_certified: report.and_then(|r| r.ne_certified()),
        max_deviation_gain: report.and_then(|r| r.certification.as_ref().map(|c| c.max_improvement)),
    }
}
