//! `qoe-market` command-line driver.
//!
//! Exit status: 0 on success, 2 when some sweep points failed, 1 on a fatal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qoe_market::asp_solver::{best_response_certified, BestResponseConfig};
use qoe_market::baselines::SchemeId;
use qoe_market::harness::experiment::{default_game, parse_schedule};
use qoe_market::harness::scenario_file::scenario_to_toml;
use qoe_market::harness::units::parse;
use qoe_market::harness::{
    case_study_scenario, generate_scenario, load_scenario, run_experiment, Calibration,
    ExperimentResult, ExperimentSpec, ScenarioRanges, ScenarioSource, Sweep, SweepVar,
};
use qoe_market::model::Scenario;
use qoe_market::mu_game::{certify_epsilon_ne, run_game, StepSchedule};
use qoe_market::oracle::GridSpec;

#[derive(Parser)]
#[command(name = "qoe-market", version, about = "QoE-driven reward market simulator")]
struct Cli {
    /// Calibration file replacing the built-in constants.
    #[arg(long, global = true)]
    calibration: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec file.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the built-in two-ASP, three-MU case study and print its table.
    CaseStudy {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter from the command line.
    Sweep {
        /// theta_hat, x_out, kappa, M or N.
        #[arg(long)]
        var: String,
        /// Comma-separated values; kappa accepts units such as 500ms.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Generate a scenario with this many ASPs instead of using the case study.
        #[arg(long)]
        asps: Option<usize>,
        #[arg(long)]
        mus: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Play the game and check the result with the deviation certificate and the grid oracle.
    Certify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Write a generated scenario file.
    Gen {
        #[arg(long, default_value_t = 2)]
        asps: usize,
        #[arg(long, default_value_t = 3)]
        mus: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scheme to run; repeatable. proposed, ratio:<total>, token[:<rho>], onlyf, onlyb.
    #[arg(long = "scheme")]
    schemes: Vec<String>,
    /// constant:<delta> or diminishing:<u>.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Allow sweep values outside the configured ranges.
    #[arg(long)]
    override_ranges: bool,
    /// Worker threads for sweep points.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Scenario file; the case study when neither this nor --asps is given.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    asps: Option<usize>,
    #[arg(long, default_value_t = 3)]
    mus: usize,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let calib = match &cli.calibration {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Calibration::from_toml(&text)?
        }
        None => Calibration::default(),
    };
    match cli.command {
        Command::Run { spec, common } => {
            let mut spec = ExperimentSpec::load(&spec)?;
            if cli.calibration.is_some() {
                spec.calibration = calib;
            }
            apply_common(&mut spec, &common)?;
            finish(run_experiment(&spec, common.jobs)?)
        }
        Command::CaseStudy { common } => {
            let mut spec = ExperimentSpec::case_study(calib, PathBuf::from("out/case-study"));
            apply_common(&mut spec, &common)?;
            let result = run_experiment(&spec, common.jobs)?;
            for p in &result.points {
                if let (Ok(out), Some(sc)) = (&p.outcome, &p.scenario) {
                    println!("scheme {}", p.scheme);
                    print_table(sc, out);
                }
            }
            finish(result)
        }
        Command::Sweep {
            var,
            values,
            asps,
            mus,
            common,
        } => {
            let variable: SweepVar = var.parse()?;
            let values = values
                .iter()
                .map(|v| parse(v, variable.dimension()))
                .collect::<qoe_market::Result<Vec<_>>>()?;
            let mut spec = ExperimentSpec::case_study(calib, PathBuf::from(format!("out/sweep-{variable}")));
            spec.name = format!("sweep-{variable}");
            if asps.is_some() || mus.is_some() || matches!(variable, SweepVar::M | SweepVar::N) {
                spec.source = ScenarioSource::Generate {
                    n_asps: asps.unwrap_or(3),
                    n_mus: mus.unwrap_or(15),
                };
            }
            spec.sweep = Some(Sweep { variable, values });
            apply_common(&mut spec, &common)?;
            finish(run_experiment(&spec, common.jobs)?)
        }
        Command::Certify { source, common } => certify(&calib, &source, &common),
        Command::Gen {
            asps,
            mus,
            seed,
            out,
        } => {
            let sc = generate_scenario(seed, asps, mus, &ScenarioRanges::default(), &calib)?;
            let text = scenario_to_toml(&sc)?;
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn apply_common(spec: &mut ExperimentSpec, c: &Common) -> Result<()> {
    if let Some(seed) = c.seed {
        spec.seed = seed;
    }
    if let Some(out) = &c.out {
        spec.output_dir = out.clone();
    }
    if !c.schemes.is_empty() {
        spec.schemes = c
            .schemes
            .iter()
            .map(|s| s.parse::<SchemeId>())
            .collect::<qoe_market::Result<_>>()?;
    }
    if let Some(s) = &c.schedule {
        spec.game.schedule = parse_schedule(s)?;
    }
    if let Some(e) = c.epsilon {
        spec.game.epsilon = e;
    }
    if let Some(t) = c.max_rounds {
        spec.game.max_rounds = t;
    }
    spec.override_ranges |= c.override_ranges;
    spec.validate()?;
    Ok(())
}

fn finish(result: ExperimentResult) -> Result<ExitCode> {
    let r = &result.record;
    for f in &r.files {
        println!("wrote {}", f.display());
    }
    for p in &r.points {
        if let Err(e) = &p.result {
            eprintln!("point {} ({}) failed: {e}", p.index, p.scheme);
        }
    }
    Ok(if r.partial() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn print_table(sc: &Scenario, out: &qoe_market::baselines::SchemeOutcome) {
    println!("{:>4} {:>4} {:>10} {:>10} {:>9} {:>9}", "asp", "mu", "f(TFLOPS)", "b(MHz)", "reward", "QoE(ms)");
    for n in 0..sc.n_asps() {
        for m in 0..sc.n_mus() {
            println!(
                "{:>4} {:>4} {:>10.4} {:>10.4} {:>9.5} {:>9.2}",
                n + 1,
                m + 1,
                out.alloc.f[(n, m)] / 1e12,
                out.alloc.b[(n, m)] / 1e6,
                out.rewards[(n, m)],
                out.qoe[(n, m)] * 1e3
            );
        }
    }
}

fn load_source(calib: &Calibration, s: &SourceArgs, seed: u64) -> Result<Scenario> {
    Ok(match (&s.scenario, s.asps) {
        (Some(p), _) => load_scenario(Path::new(p))?,
        (None, Some(n)) => generate_scenario(seed, n, s.mus, &ScenarioRanges::default(), calib)?,
        (None, None) => case_study_scenario(calib)?,
    })
}

fn certify(calib: &Calibration, source: &SourceArgs, common: &Common) -> Result<ExitCode> {
    let sc = load_source(calib, source, common.seed.unwrap_or(0))?;
    let mut game = default_game();
    if let Some(s) = &common.schedule {
        game.schedule = parse_schedule(s)?;
    }
    if let Some(e) = common.epsilon {
        game.epsilon = e;
    }
    if let Some(t) = common.max_rounds {
        game.max_rounds = t;
    }
    game.certify = None;
    let report = run_game(&sc, &game)?;
    let probe = match game.schedule {
        StepSchedule::Constant { delta } => delta,
        s @ StepSchedule::Diminishing { .. } => s.step(report.rounds_used.max(1)),
    };
    let cert = certify_epsilon_ne(&sc, &report.rewards, probe, game.epsilon)?;
    println!(
        "game: {} rounds, converged {}; epsilon-NE certificate: {} (best deviation gain {:.3e} over {} deviations)",
        report.rounds_used, report.converged, cert.certified, cert.max_improvement, cert.deviations_tried
    );
    let mut ok = cert.certified;
    if sc.n_mus() <= 3 {
        let grid = GridSpec::for_mus(sc.n_mus());
        for n in 0..sc.n_asps() {
            let (_, check) =
                best_response_certified(&sc, n, &report.rewards, &BestResponseConfig::default(), &grid)?;
            let pass = check.relative_shortfall <= 0.01;
            ok &= pass;
            println!(
                "ASP {}: solver utility {:.9e}, grid oracle {:.9e}, shortfall {:.2e} ({})",
                n + 1,
                check.solver_utility,
                check.oracle_utility,
                check.relative_shortfall,
                if pass { "ok" } else { "FAIL" }
            );
        }
    } else {
        println!("oracle check skipped: more than 3 MUs");
    }
    if !ok {
        bail!("certification failed");
    }
    Ok(ExitCode::SUCCESS)
}
