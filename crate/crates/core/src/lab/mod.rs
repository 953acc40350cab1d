//! Batch runner for the named experiments: configuration, execution and
//! machine-readable reports.

mod config;
mod experiments;
mod report;

use std::time::Instant;

pub use config::{
    default_bump, BerezinSpec, Experiment, GridSpec, LabConfig, QuadratureOrders, QuotientSpec, SampleSpec,
    SeriesSpec, SlSpec, Tolerances,
};
pub use report::{write_report, Check, CheckStatus, ExperimentReport, Table, Timing};

use crate::error::{Error, Result};

/// Validates the configuration, runs the selected experiment and records the
/// wall-clock time separately from the results.
pub fn run_experiment(config: &LabConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let experiment = config
        .experiment
        .ok_or_else(|| Error::InvalidConfig("no experiment selected".into()))?;
    let start = Instant::now();
    let mut report = ExperimentReport::new(experiment.name(), config.clone());
    experiments::run(experiment, config, &mut report)?;
    report.timing = Some(Timing {
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    });
    Ok(report)
}
