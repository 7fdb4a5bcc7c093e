//! Configuration, scenario generation, experiment sweeps and CSV output.

pub mod calibration;
pub mod csv_out;
pub mod experiment;
pub mod generate;
pub mod scenario_file;
pub mod units;

pub use calibration::{Calibration, CaseStudyCalibration, ScenarioRanges};
pub use csv_out::{emit_csv, CsvKind};
pub use experiment::{
    run_experiment, run_points, ExperimentResult, ExperimentSpec, RunRecord, ScenarioSource,
    Sweep, SweepVar,
};
pub use generate::{case_study_scenario, generate_scenario, ScenarioOverride};
pub use scenario_file::{load_scenario, save_scenario};
