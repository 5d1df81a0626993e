//! Per-state probabilities: exact posterior against DMALA and the always-accept kernel.

use std::path::Path;

use dmala::oracle::{build_unadjusted_matrix, exact_posterior, tv_distance, StateSpace};
use dmala::{state_histograms, DmalaSampler, Kernel, UnadjustedDla};
use serde::{Deserialize, Serialize};

use super::{chain_seed, draw_instance, oracle_space, tag};
use crate::config::ExperimentConfig;
use crate::csv::{self, float, parse_bool, parse_float, parse_int, CsvRow};
use crate::error::Result;
use crate::record::write_json;

/// States whose exact probability falls below this are flagged.
pub const DISPLAY_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub state: usize,
    pub symbols: String,
    pub pi: f64,
    pub dmala: f64,
    pub unadjusted: f64,
    pub unadjusted_stationary: f64,
    pub below_cutoff: bool,
}

impl CsvRow for HistogramRow {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("state", "state index; coordinate 0 is the most significant base-Q digit"),
        ("symbols", "alphabet indices of the real coordinates joined by '-'"),
        ("pi", "exact posterior probability"),
        ("dmala", "fraction of DMALA chains in this state at step hist_t"),
        ("unadjusted", "fraction of always-accept chains in this state at step hist_t"),
        ("unadjusted_stationary", "stationary probability of the always-accept kernel"),
        ("below_cutoff", "true when pi < 1e-3"),
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.state.to_string(),
            self.symbols.clone(),
            float(self.pi),
            float(self.dmala),
            float(self.unadjusted),
            float(self.unadjusted_stationary),
            self.below_cutoff.to_string(),
        ]
    }

    fn parse(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            state: parse_int(f[0])?,
            symbols: f[1].to_string(),
            pi: parse_float(f[2])?,
            dmala: parse_float(f[3])?,
            unadjusted: parse_float(f[4])?,
            unadjusted_stationary: parse_float(f[5])?,
            below_cutoff: parse_bool(f[6])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistHistogramMetrics {
    pub snr_db: f64,
    pub hist_t: usize,
    pub chains: usize,
    pub tv_dmala: f64,
    pub tv_unadjusted: f64,
    pub tv_unadjusted_stationary: f64,
    pub flagged_states: usize,
    pub rows: Vec<HistogramRow>,
    pub instance: dmala::InstanceRecord,
}

fn snapshot<K: Kernel>(kernel: &K, space: &StateSpace, chains: usize, t: usize) -> Vec<f64> {
    let counts = state_histograms(kernel, chains, t, space.len(), |x| space.index(x));
    counts[t - 1].iter().map(|&c| c as f64 / chains as f64).collect()
}

pub fn run_dist_histogram(config: &ExperimentConfig) -> Result<DistHistogramMetrics> {
    let space = oracle_space(config)?;
    let inst = draw_instance(config, 0, 0)?;
    let dmala_config = config.sampler.resolve(&inst, chain_seed(config, tag::SAMPLER, 0, 0))?;
    let pi = exact_posterior(&inst, dmala_config.tau)?.pi;
    let sampler = DmalaSampler::new(&inst, dmala_config)?;
    let chains = config.empirical_chains;
    let dmala = snapshot(&sampler, &space, chains, config.hist_t);

    let mut unadjusted_config = dmala_config;
    unadjusted_config.seed = chain_seed(config, tag::BASELINE, 0, 0);
    let unadjusted_sampler = DmalaSampler::new(&inst, unadjusted_config)?;
    let stationary = build_unadjusted_matrix(&unadjusted_sampler)?.stationary_distribution()?;
    let unadjusted = snapshot(&UnadjustedDla::new(unadjusted_sampler), &space, chains, config.hist_t);

    let rows: Vec<HistogramRow> = (0..space.len())
        .map(|s| HistogramRow {
            state: s,
            symbols: space
                .state(s)
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join("-"),
            pi: pi[s],
            dmala: dmala[s],
            unadjusted: unadjusted[s],
            unadjusted_stationary: stationary[s],
            below_cutoff: pi[s] < DISPLAY_CUTOFF,
        })
        .collect();
    Ok(DistHistogramMetrics {
        snr_db: config.snr_db_list[0],
        hist_t: config.hist_t,
        chains,
        tv_dmala: tv_distance(&dmala, &pi),
        tv_unadjusted: tv_distance(&unadjusted, &pi),
        tv_unadjusted_stationary: tv_distance(&stationary, &pi),
        flagged_states: rows.iter().filter(|r| r.below_cutoff).count(),
        rows,
        instance: inst.to_record(config.seed),
    })
}

pub(crate) fn write(config: &ExperimentConfig, m: &DistHistogramMetrics, title: &[String], out: &Path) -> Result<()> {
    let mut head = title.to_vec();
    head.push(format!(
        "{} chains per kernel at step {}; TV to pi: dmala {}, always-accept {}",
        config.empirical_chains,
        m.hist_t,
        float(m.tv_dmala),
        float(m.tv_unadjusted)
    ));
    csv::write(&out.join("histogram.csv"), &head, &m.rows)?;
    write_json(&out.join("instance.json"), &m.instance)
}
