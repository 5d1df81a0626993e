use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::csv::write_text;
use crate::error::{HarnessError, Result};
use crate::experiments::{
    dist_histogram::DistHistogramMetrics, llr_fidelity::LlrFidelityMetrics, rate_boxplot::RateBoxplotMetrics,
    ser_sweep::SerSweepMetrics, tv_curve::TvCurveMetrics,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metrics {
    TvCurve(TvCurveMetrics),
    RateBoxplot(RateBoxplotMetrics),
    SerSweep(SerSweepMetrics),
    LlrFidelity(LlrFidelityMetrics),
    DistHistogram(DistHistogramMetrics),
}

/// Outcome of one experiment run.
///
/// The wall-clock time is kept in memory only; every serialized byte is a
/// function of the configuration and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    pub metrics: Metrics,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl PartialEq for ResultRecord {
    fn eq(&self, other: &Self) -> bool {
        self.experiment == other.experiment
            && self.config_hash == other.config_hash
            && self.seed == other.seed
            && self.metrics == other.metrics
    }
}

impl ResultRecord {
    pub fn new(config: &ExperimentConfig, metrics: Metrics) -> Self {
        Self {
            experiment: config.experiment,
            config_hash: config.hash(),
            seed: config.seed,
            metrics,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("record: {e}")))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_text(path, &s)
}
