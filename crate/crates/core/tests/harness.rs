//! Calibration, scenario generation, files, sweeps and CSV output.

use std::path::Path;

use qoe_market::baselines::SchemeId;
use qoe_market::harness::calibration::SHIPPED_CALIBRATION;
use qoe_market::harness::csv_out::{fmt_float, write_trend, TREND_HEADER};
use qoe_market::harness::experiment::{format_schedule, parse_schedule, Direction};
use qoe_market::harness::generate::{case_study_override, CASE_STUDY_DEMANDS, CASE_STUDY_KAPPA};
use qoe_market::harness::scenario_file::{scenario_from_toml, scenario_to_toml};
use qoe_market::harness::units::{parse, to_quantity, Dimension, Quantity};
use qoe_market::harness::*;
use qoe_market::model::Scenario;
use qoe_market::mu_game::StepSchedule;

#[test]
fn unit_strings() {
    assert_eq!(parse("500ms", Dimension::Time).unwrap(), 0.5);
    assert_eq!(parse("1.5 s", Dimension::Time).unwrap(), 1.5);
    assert_eq!(parse("10TFLOPS", Dimension::Compute).unwrap(), 1e13);
    assert_eq!(parse("300MHz", Dimension::Bandwidth).unwrap(), 3e8);
    assert_eq!(parse("2 GHz", Dimension::Bandwidth).unwrap(), 2e9);
    assert!((parse("20dB", Dimension::Snr).unwrap() - 100.0).abs() < 1e-12);
    assert_eq!(parse("0.25", Dimension::Time).unwrap(), 0.25);
    assert!(parse("5MHz", Dimension::Time).is_err());
    assert!(parse("fast", Dimension::Compute).is_err());
    assert_eq!(to_quantity(0.5, Dimension::Time), Quantity::Text("500ms".into()));
    assert_eq!(to_quantity(3e8, Dimension::Bandwidth), Quantity::Text("300MHz".into()));
    for (v, dim) in [(0.123456789123, Dimension::Time), (7.77e12, Dimension::Compute), (31.6, Dimension::Snr)] {
        assert_eq!(to_quantity(v, dim).to_si(dim).unwrap(), v);
    }
}

#[test]
fn shipped_calibration_matches_defaults() {
    let shipped = Calibration::from_toml(SHIPPED_CALIBRATION).unwrap();
    assert_eq!(shipped, Calibration::default());
    assert_eq!(Calibration::shipped().unwrap(), shipped);
    let c = Calibration::default();
    assert_eq!((c.case_study.f_max, c.case_study.b_max), (1e13, 3e8));
    assert!((c.case_study.snr - 100.0).abs() < 1e-12);
    assert!(Calibration::from_toml("xi = 1.0\nbogus = 2\n").is_err());
    // The accuracy lookup lists 10^-(K+1) for the configured constants.
    let lk = c.lookup();
    for k in [2u32, 4, 6, 8, 10] {
        let t = lk.theta_for(k).unwrap();
        assert!((t / 10f64.powi(-(k as i32 + 1)) - 1.0).abs() < 1e-9, "K={k}");
    }
}

#[test]
fn generator_is_deterministic_and_in_range() {
    let (ranges, calib) = (ScenarioRanges::default(), Calibration::default());
    let a = generate_scenario(42, 3, 7, &ranges, &calib).unwrap();
    assert_eq!(a, generate_scenario(42, 3, 7, &ranges, &calib).unwrap());
    assert_ne!(a, generate_scenario(43, 3, 7, &ranges, &calib).unwrap());
    assert!(generate_scenario(0, 0, 3, &ranges, &calib).is_err());
    let lookup = calib.lookup();
    let allowed: Vec<f64> = ranges.k_values.iter().map(|&k| lookup.theta_for_listed(k).unwrap()).collect();
    for seed in 0..10_000u64 {
        let s = generate_scenario(seed, 1, 1, &ranges, &calib).unwrap();
        let (a, d, c) = (&s.asps[0], &s.demands[(0, 0)], &s.channels[(0, 0)]);
        assert!(a.kappa >= ranges.kappa.0 && a.kappa <= ranges.kappa.1);
        assert!(a.f_max >= ranges.f_max.0 && a.f_max <= ranges.f_max.1);
        assert!(a.b_max >= ranges.b_max.0 && a.b_max <= ranges.b_max.1);
        assert!(d.x_in >= ranges.tokens.0 && d.x_in <= ranges.tokens.1);
        assert!(d.x_out >= ranges.tokens.0 && d.x_out <= ranges.tokens.1);
        assert!(allowed.contains(&d.theta_hat));
        let db = c.snr_db();
        assert!(db >= ranges.snr_db.0 - 1e-9 && db <= ranges.snr_db.1 + 1e-9);
    }
}

#[test]
fn smaller_scenarios_nest_in_larger_ones() {
    let (ranges, calib) = (ScenarioRanges::default(), Calibration::default());
    let big = generate_scenario(9, 4, 10, &ranges, &calib).unwrap();
    let small = generate_scenario(9, 2, 6, &ranges, &calib).unwrap();
    assert_eq!(small.asps[..], big.asps[..2]);
    for n in 0..2 {
        for m in 0..6 {
            assert_eq!(small.demands[(n, m)], big.demands[(n, m)]);
            assert_eq!(small.channels[(n, m)], big.channels[(n, m)]);
        }
    }
}

#[test]
fn case_study_has_the_pinned_values() {
    let calib = Calibration::default();
    let sc = case_study_scenario(&calib).unwrap();
    assert_eq!((sc.n_asps(), sc.n_mus()), (2, 3));
    for n in 0..2 {
        assert_eq!(sc.asps[n].kappa, CASE_STUDY_KAPPA[n]);
        assert_eq!((sc.asps[n].f_max, sc.asps[n].b_max), (1e13, 3e8));
        for m in 0..3 {
            let d = sc.demands[(n, m)];
            assert_eq!((d.theta_hat, d.x_out), CASE_STUDY_DEMANDS[m][n]);
            assert_eq!(d.x_in, 1000);
            assert!((sc.channels[(n, m)].snr - 100.0).abs() < 1e-12);
        }
    }
    let mut again = case_study_scenario(&calib).unwrap();
    case_study_override(&calib).apply(&mut again).unwrap();
    assert_eq!(again, sc);
}

#[test]
fn scenario_files_round_trip() {
    let sc = generate_scenario(5, 2, 3, &ScenarioRanges::default(), &Calibration::default()).unwrap();
    let text = scenario_to_toml(&sc).unwrap();
    assert_eq!(scenario_from_toml(&text).unwrap(), sc);
    let cs = case_study_scenario(&Calibration::default()).unwrap();
    let text = scenario_to_toml(&cs).unwrap();
    assert!(text.contains("500ms") && text.contains("10TFLOPS") && text.contains("300MHz"));
    assert_eq!(scenario_from_toml(&text).unwrap(), cs);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    save_scenario(&cs, &path).unwrap();
    assert_eq!(load_scenario(&path).unwrap(), cs);
    assert!(load_scenario(&dir.path().join("missing.toml")).is_err());
    // Dropping a pair makes the file incomplete.
    let cut: String = text.split("[[pair]]").take(2).collect::<Vec<_>>().join("[[pair]]");
    assert!(scenario_from_toml(&cut).is_err());
}

#[test]
fn csv_floats_keep_nine_digits() {
    for v in [1.0 / 3.0, 2.718281828459045e-9, -123456.789, 0.0] {
        let s = fmt_float(v);
        let back: f64 = s.parse().unwrap();
        assert!((back - v).abs() <= 5e-9 * v.abs(), "{s}");
        assert_eq!(fmt_float(back), s);
    }
    assert_eq!(fmt_float(0.5), "5.00000000e-1");
}

#[test]
fn empty_trend_file_has_only_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trend(&path, &[]).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{}\n", TREND_HEADER.join(",")));
}

#[test]
fn schedules_parse_and_print() {
    assert_eq!(parse_schedule("constant:1e-4").unwrap(), StepSchedule::Constant { delta: 1e-4 });
    assert_eq!(parse_schedule("diminishing:0.02").unwrap(), StepSchedule::Diminishing { u: 0.02 });
    assert!(parse_schedule("linear:1").is_err());
    let s = StepSchedule::Diminishing { u: 0.5 };
    assert_eq!(parse_schedule(&format_schedule(&s)).unwrap(), s);
}

#[test]
fn spec_files_parse() {
    let text = r#"
        name = "kappa"
        output_dir = "runs/kappa"
        schemes = ["proposed", "ratio:5"]

        [scenario]
        source = "case-study"

        [sweep]
        variable = "kappa"
        values = ["500ms", "1s", 1.2]

        [game]
        schedule = "constant:1e-3"
        epsilon = 1e-8
        max_rounds = 100
        certify = false
    "#;
    let spec = ExperimentSpec::from_toml(text, Path::new("/base")).unwrap();
    assert_eq!(spec.name, "kappa");
    assert_eq!(spec.output_dir, Path::new("/base/runs/kappa"));
    assert_eq!(spec.schemes, vec![SchemeId::Proposed, SchemeId::Ratio { r_total: 5.0 }]);
    let sweep = spec.sweep.as_ref().unwrap();
    assert_eq!(sweep.variable, SweepVar::Kappa);
    assert_eq!(sweep.values, vec![0.5, 1.0, 1.2]);
    assert_eq!(spec.game.max_rounds, 100);
    assert!(spec.game.certify.is_none());
    assert_eq!(spec.hash(), spec.clone().hash());

    let out_of_range = text.replace("1.2]", "9.0]");
    assert!(ExperimentSpec::from_toml(&out_of_range, Path::new(".")).is_err());
    let forced = format!("override_ranges = true\n{out_of_range}");
    assert!(ExperimentSpec::from_toml(&forced, Path::new(".")).is_ok());
    let needs_gen = text.replace("\"kappa\"\n        values", "\"M\"\n        values").replace("[\"500ms\", \"1s\", 1.2]", "[5, 10]");
    assert!(ExperimentSpec::from_toml(&needs_gen, Path::new(".")).is_err());
    assert!(ExperimentSpec::from_toml("schemes = [\"cheap\"]", Path::new(".")).is_err());
}

fn sweep_spec(var: SweepVar, values: Vec<f64>, dir: &Path) -> ExperimentSpec {
    let mut spec = ExperimentSpec::case_study(Calibration::default(), dir.to_path_buf());
    spec.game.certify = None;
    spec.sweep = Some(Sweep { variable: var, values });
    spec
}

#[test]
fn sweep_output_is_independent_of_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut spec = sweep_spec(SweepVar::XOut, vec![200.0, 800.0, 1400.0], a.path());
    spec.schemes = vec![SchemeId::Proposed, SchemeId::Token { rho: None }];
    let ra = run_experiment(&spec, Some(1)).unwrap();
    spec.output_dir = b.path().to_path_buf();
    let rb = run_experiment(&spec, Some(4)).unwrap();
    assert_eq!(ra.record.points, rb.record.points);
    for f in &ra.record.files {
        let name = f.file_name().unwrap();
        if name == "manifest.json" {
            continue;
        }
        let x = std::fs::read(f).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
    assert!(a.path().join("trend.csv").exists());
    assert!(!a.path().join("allocation_proposed.csv").exists());
    assert!(a.path().join("trajectory_0_proposed.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["spec_hash"], ra.record.spec_hash.as_str());
    assert_eq!(manifest["failures"], 0);
}

#[test]
fn unswept_run_writes_allocation_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::case_study(Calibration::default(), dir.path().to_path_buf());
    spec.game.certify = None;
    let r = run_experiment(&spec, None).unwrap();
    let text = std::fs::read_to_string(dir.path().join("allocation_proposed.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "asp,mu,f_tflops,b_mhz,reward,qoe_ms");
    assert_eq!(lines.count(), 6);
    assert!(!r.record.partial());
}

#[test]
fn theta_sweep_trends() {
    let dir = tempfile::tempdir().unwrap();
    let spec = sweep_spec(SweepVar::ThetaHat, vec![1e-11, 1e-9, 1e-7, 1e-5, 1e-3], dir.path());
    let r = run_experiment(&spec, None).unwrap();
    let trend = |metric: &str| {
        r.record
            .trends
            .iter()
            .find(|t| t.metric == metric && t.scheme == "proposed")
            .unwrap()
            .direction
            .clone()
    };
    assert_eq!(trend("reward[1,1]"), Direction::Decreasing);
    assert_eq!(trend("qoe[1,1]"), Direction::Increasing);
    assert_eq!(trend("mu_utility[1]"), Direction::Increasing);
    assert_eq!(r.series("proposed", "reward[1,1]").len(), 5);
}

#[test]
fn failed_points_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = sweep_spec(SweepVar::Kappa, vec![1e-9, 0.5], dir.path());
    spec.override_ranges = true;
    let r = run_experiment(&spec, None).unwrap();
    assert_eq!(r.record.failures, 1);
    assert!(r.record.partial());
    assert!(r.points[0].outcome.is_err());
    assert!(r.points[1].outcome.is_ok());
}

#[test]
fn file_source_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let sc: Scenario = generate_scenario(2, 1, 2, &ScenarioRanges::default(), &Calibration::default()).unwrap();
    let path = dir.path().join("sc.toml");
    save_scenario(&sc, &path).unwrap();
    let mut spec = ExperimentSpec::case_study(Calibration::default(), dir.path().join("out"));
    spec.source = ScenarioSource::File(path);
    assert_eq!(spec.base_scenario().unwrap(), sc);
}
