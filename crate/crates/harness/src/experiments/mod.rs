//! The five experiments. Each one draws its instances and chain seeds from
//! `(seed, tag, point, realization)` streams, fans realizations out over the
//! worker pool and gathers results by index, so outputs do not depend on the
//! number of threads.

pub mod dist_histogram;
pub mod llr_fidelity;
pub mod rate_boxplot;
pub mod ser_sweep;
pub mod tv_curve;

use std::path::Path;
use std::time::Instant;

use dmala::oracle::StateSpace;
use dmala::rng::{derive_seed, stream};
use dmala::DetectionInstance64;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::csv::write_text;
use crate::error::{HarnessError, Result};
use crate::plot::PLOT_SCRIPT;
use crate::record::{write_json, Metrics, ResultRecord};

/// Stream tags keeping the random draws of different roles apart.
pub(crate) mod tag {
    pub const INSTANCE: u64 = 0;
    pub const SAMPLER: u64 = 1;
    pub const CSI: u64 = 2;
    pub const BASELINE: u64 = 3;
}

pub(crate) fn draw_instance(config: &ExperimentConfig, point: usize, realization: usize) -> Result<DetectionInstance64> {
    let mut rng = stream(config.seed, &[tag::INSTANCE, point as u64, realization as u64]);
    let snr = config.snr_db_list[point];
    Ok(DetectionInstance64::simulate(&config.channel, config.modulation, snr, &mut rng)?)
}

pub(crate) fn chain_seed(config: &ExperimentConfig, role: u64, point: usize, realization: usize) -> u64 {
    derive_seed(config.seed, &[role, point as u64, realization as u64])
}

pub(crate) fn oracle_space(config: &ExperimentConfig) -> Result<StateSpace> {
    Ok(StateSpace::new(config.modulation, config.n_real())?)
}

/// Runs the configured experiment without touching the filesystem.
pub fn compute(config: &ExperimentConfig) -> Result<ResultRecord> {
    config.validate()?;
    let start = Instant::now();
    let metrics = match config.experiment {
        ExperimentKind::TvCurve => Metrics::TvCurve(tv_curve::run_tv_curve(config)?),
        ExperimentKind::RateBoxplot => Metrics::RateBoxplot(rate_boxplot::run_rate_boxplot(config)?),
        ExperimentKind::SerSweep => Metrics::SerSweep(ser_sweep::run_ser_sweep(config)?),
        ExperimentKind::LlrFidelity => Metrics::LlrFidelity(llr_fidelity::run_llr_fidelity(config)?),
        ExperimentKind::DistHistogram => Metrics::DistHistogram(dist_histogram::run_dist_histogram(config)?),
    };
    let mut record = ResultRecord::new(config, metrics);
    record.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Runs the experiment and writes its record, data files and plotting script to `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<ResultRecord> {
    let record = compute(config)?;
    write_outputs(config, &record, out)?;
    Ok(record)
}

pub fn write_outputs(config: &ExperimentConfig, record: &ResultRecord, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|source| HarnessError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let title = vec![
        format!("experiment: {}", config.experiment),
        format!("config_hash: {}", record.config_hash),
        format!("seed: {}", config.seed),
    ];
    match &record.metrics {
        Metrics::TvCurve(m) => tv_curve::write(config, m, &title, out)?,
        Metrics::RateBoxplot(m) => rate_boxplot::write(m, &title, out)?,
        Metrics::SerSweep(m) => ser_sweep::write(m, &title, out)?,
        Metrics::LlrFidelity(m) => llr_fidelity::write(m, &title, out)?,
        Metrics::DistHistogram(m) => dist_histogram::write(config, m, &title, out)?,
    }
    write_json(&out.join("config.json"), config)?;
    write_text(&out.join("record.json"), &record.to_json())?;
    write_text(&out.join("plot_results.py"), PLOT_SCRIPT)
}
