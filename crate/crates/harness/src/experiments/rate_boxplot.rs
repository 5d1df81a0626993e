//! Spectral convergence rates of naive and preconditioned DMALA across SNR.

use std::path::Path;

use dmala::oracle::{build_transition_matrix, convergence_rate, exact_posterior};
use dmala::DmalaSampler;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chain_seed, draw_instance, oracle_space, tag};
use crate::config::{ExperimentConfig, ModeKind};
use crate::csv::{self, float, parse_float, parse_int, CsvRow};
use crate::error::Result;
use crate::stats::FiveNumber;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub snr_db: f64,
    pub realization: usize,
    pub naive_r: f64,
    pub preconditioned_r: f64,
}

impl CsvRow for RatePoint {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("snr_db", "SNR per receive antenna in dB"),
        ("realization", "channel realization index at this SNR"),
        ("naive_r", "second-largest eigenvalue modulus of the naive kernel"),
        ("preconditioned_r", "second-largest eigenvalue modulus of the preconditioned kernel"),
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            float(self.snr_db),
            self.realization.to_string(),
            float(self.naive_r),
            float(self.preconditioned_r),
        ]
    }

    fn parse(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            snr_db: parse_float(f[0])?,
            realization: parse_int(f[1])?,
            naive_r: parse_float(f[2])?,
            preconditioned_r: parse_float(f[3])?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub snr_db: f64,
    pub mode: ModeKind,
    pub summary: FiveNumber,
}

impl CsvRow for RateSummary {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("snr_db", "SNR per receive antenna in dB"),
        ("mode", "naive or preconditioned"),
        ("min", "smallest r"),
        ("q1", "first quartile of r (linear interpolation)"),
        ("median", "median r"),
        ("q3", "third quartile of r"),
        ("max", "largest r"),
    ];

    fn fields(&self) -> Vec<String> {
        let s = &self.summary;
        vec![
            float(self.snr_db),
            match self.mode {
                ModeKind::Naive => "naive".into(),
                ModeKind::Preconditioned => "preconditioned".into(),
            },
            float(s.min),
            float(s.q1),
            float(s.median),
            float(s.q3),
            float(s.max),
        ]
    }

    fn parse(f: &[&str]) -> std::result::Result<Self, String> {
        let mode = match f[1] {
            "naive" => ModeKind::Naive,
            "preconditioned" => ModeKind::Preconditioned,
            other => return Err(format!("unknown mode {other:?}")),
        };
        Ok(Self {
            snr_db: parse_float(f[0])?,
            mode,
            summary: FiveNumber {
                min: parse_float(f[2])?,
                q1: parse_float(f[3])?,
                median: parse_float(f[4])?,
                q3: parse_float(f[5])?,
                max: parse_float(f[6])?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBoxplotMetrics {
    pub points: Vec<RatePoint>,
    pub summaries: Vec<RateSummary>,
}

impl RateBoxplotMetrics {
    pub fn median(&self, snr_db: f64, mode: ModeKind) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.snr_db == snr_db && s.mode == mode)
            .map(|s| s.summary.median)
    }
}

fn rate_for(config: &ExperimentConfig, point: usize, realization: usize) -> Result<RatePoint> {
    let inst = draw_instance(config, point, realization)?;
    let seed = chain_seed(config, tag::SAMPLER, point, realization);
    let pi = exact_posterior(&inst, config.sampler.tau)?.pi;
    let rate = |mode| -> Result<f64> {
        let sampler = DmalaSampler::new(&inst, config.sampler.resolve_mode(&inst, mode, seed)?)?;
        let p = build_transition_matrix(&sampler)?;
        Ok(convergence_rate(&p, &pi)?.r)
    };
    Ok(RatePoint {
        snr_db: config.snr_db_list[point],
        realization,
        naive_r: rate(ModeKind::Naive)?,
        preconditioned_r: rate(ModeKind::Preconditioned)?,
    })
}

pub fn run_rate_boxplot(config: &ExperimentConfig) -> Result<RateBoxplotMetrics> {
    oracle_space(config)?;
    let jobs: Vec<(usize, usize)> = (0..config.snr_db_list.len())
        .flat_map(|p| (0..config.n_realizations).map(move |r| (p, r)))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(p, r)| rate_for(config, p, r))
        .collect::<Result<Vec<_>>>()?;
    let mut summaries = Vec::new();
    for (p, &snr_db) in config.snr_db_list.iter().enumerate() {
        let at: Vec<&RatePoint> = points[p * config.n_realizations..(p + 1) * config.n_realizations]
            .iter()
            .collect();
        for mode in [ModeKind::Naive, ModeKind::Preconditioned] {
            let values: Vec<f64> = at
                .iter()
                .map(|r| match mode {
                    ModeKind::Naive => r.naive_r,
                    ModeKind::Preconditioned => r.preconditioned_r,
                })
                .collect();
            summaries.push(RateSummary {
                snr_db,
                mode,
                summary: FiveNumber::of(&values),
            });
        }
    }
    Ok(RateBoxplotMetrics { points, summaries })
}

pub(crate) fn write(m: &RateBoxplotMetrics, title: &[String], out: &Path) -> Result<()> {
    csv::write(&out.join("rates.csv"), title, &m.points)?;
    csv::write(&out.join("rate_summary.csv"), title, &m.summaries)
}
