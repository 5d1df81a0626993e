//! Importance-sampling and list LLRs against the exhaustive reference.

use std::path::Path;

use dmala::oracle::exact_llr;
use dmala::{llr_is, llr_list, DmalaSampler, LlrOptions, LlrVector64, LseMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chain_seed, draw_instance, oracle_space, tag};
use crate::config::ExperimentConfig;
use crate::csv::{self, float, parse_float, parse_int, CsvRow};
use crate::error::Result;
use crate::record::write_json;
use crate::stats;

/// Bits with `|L_exact|` above this count towards sign agreement.
pub const CONFIDENT_LLR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrErrorRow {
    pub snr_db: f64,
    pub samples: usize,
    /// Median over realizations of the per-realization mean `|L_is − L_exact|`.
    pub is_realization_median: f64,
    pub list_realization_median: f64,
    /// Mean and median over all bits of all realizations.
    pub is_mean_abs_error: f64,
    pub list_mean_abs_error: f64,
    pub is_bit_median: f64,
    pub list_bit_median: f64,
    pub confident_bits: u64,
    pub is_sign_agreement: f64,
    pub list_sign_agreement: f64,
}

impl CsvRow for LlrErrorRow {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("snr_db", "SNR per receive antenna in dB"),
        ("samples", "S, the number of chains whose final states form the list"),
        ("is_realization_median", "median over realizations of mean_k |L_is - L_exact|"),
        ("list_realization_median", "median over realizations of mean_k |L_list - L_exact|"),
        ("is_mean_abs_error", "mean over all bits and realizations of |L_is - L_exact|"),
        ("list_mean_abs_error", "mean over all bits and realizations of |L_list - L_exact|"),
        ("is_bit_median", "median over all bits and realizations of |L_is - L_exact|"),
        ("list_bit_median", "median over all bits and realizations of |L_list - L_exact|"),
        ("confident_bits", "bits with |L_exact| > 2"),
        ("is_sign_agreement", "fraction of confident bits where sign(L_is) = sign(L_exact)"),
        ("list_sign_agreement", "fraction of confident bits where sign(L_list) = sign(L_exact)"),
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            float(self.snr_db),
            self.samples.to_string(),
            float(self.is_realization_median),
            float(self.list_realization_median),
            float(self.is_mean_abs_error),
            float(self.list_mean_abs_error),
            float(self.is_bit_median),
            float(self.list_bit_median),
            self.confident_bits.to_string(),
            float(self.is_sign_agreement),
            float(self.list_sign_agreement),
        ]
    }

    fn parse(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            snr_db: parse_float(f[0])?,
            samples: parse_int(f[1])?,
            is_realization_median: parse_float(f[2])?,
            list_realization_median: parse_float(f[3])?,
            is_mean_abs_error: parse_float(f[4])?,
            list_mean_abs_error: parse_float(f[5])?,
            is_bit_median: parse_float(f[6])?,
            list_bit_median: parse_float(f[7])?,
            confident_bits: parse_int(f[8])?,
            is_sign_agreement: parse_float(f[9])?,
            list_sign_agreement: parse_float(f[10])?,
        })
    }
}

/// LLR vectors of the first realization at the first SNR point, largest `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrExample {
    pub exact: LlrVector64,
    pub importance_sampling: LlrVector64,
    pub list: LlrVector64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrFidelityMetrics {
    pub tau: f64,
    pub rows: Vec<LlrErrorRow>,
    pub example: LlrExample,
}

impl LlrFidelityMetrics {
    pub fn row(&self, snr_db: f64, samples: usize) -> Option<&LlrErrorRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db && r.samples == samples)
    }
}

struct Realization {
    exact: LlrVector64,
    /// Per sample size: (IS, list).
    estimates: Vec<(LlrVector64, LlrVector64)>,
}

fn realization(config: &ExperimentConfig, point: usize, r: usize) -> Result<Realization> {
    let inst = draw_instance(config, point, r)?;
    let exact = exact_llr(&inst, config.clip)?;
    let s_max = *config.sample_sizes.iter().max().expect("validated nonempty");
    let mut sampler_config = config.sampler.resolve(&inst, chain_seed(config, tag::SAMPLER, point, r))?;
    sampler_config.n_chains = s_max;
    let list = DmalaSampler::new(&inst, sampler_config)?.run_chains_serial();
    let options = LlrOptions {
        clip: config.clip,
        mode: LseMode::Exact,
    };
    let estimates = config
        .sample_sizes
        .iter()
        .map(|&s| {
            let sub = list.truncated(s);
            Ok((llr_is(&sub, &inst, config.sampler.tau, options)?, llr_list(&sub, &inst, config.clip)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Realization { exact, estimates })
}

fn sign_agreement(exact: &[f64], est: &[f64]) -> (u64, u64) {
    let mut agree = 0;
    let mut total = 0;
    for (&e, &l) in exact.iter().zip(est) {
        if e.abs() > CONFIDENT_LLR {
            total += 1;
            if e.signum() == l.signum() && l != 0.0 {
                agree += 1;
            }
        }
    }
    (agree, total)
}

fn abs_errors(exact: &LlrVector64, est: &LlrVector64) -> Vec<f64> {
    exact.llrs.iter().zip(&est.llrs).map(|(e, l)| (l - e).abs()).collect()
}

fn summarize(snr_db: f64, samples: usize, triples: &[(&LlrVector64, &LlrVector64, &LlrVector64)]) -> LlrErrorRow {
    let mut is_err = Vec::new();
    let mut list_err = Vec::new();
    let mut is_per = Vec::new();
    let mut list_per = Vec::new();
    let (mut is_agree, mut list_agree, mut confident) = (0, 0, 0);
    for (exact, is, list) in triples {
        let e_is = abs_errors(exact, is);
        let e_list = abs_errors(exact, list);
        is_per.push(stats::mean(&e_is));
        list_per.push(stats::mean(&e_list));
        is_err.extend(e_is);
        list_err.extend(e_list);
        let (a, t) = sign_agreement(&exact.llrs, &is.llrs);
        is_agree += a;
        confident += t;
        list_agree += sign_agreement(&exact.llrs, &list.llrs).0;
    }
    let rate = |a: u64| if confident == 0 { 1.0 } else { a as f64 / confident as f64 };
    LlrErrorRow {
        snr_db,
        samples,
        is_realization_median: stats::median(&is_per),
        list_realization_median: stats::median(&list_per),
        is_mean_abs_error: stats::mean(&is_err),
        list_mean_abs_error: stats::mean(&list_err),
        is_bit_median: stats::median(&is_err),
        list_bit_median: stats::median(&list_err),
        confident_bits: confident,
        is_sign_agreement: rate(is_agree),
        list_sign_agreement: rate(list_agree),
    }
}

pub fn run_llr_fidelity(config: &ExperimentConfig) -> Result<LlrFidelityMetrics> {
    oracle_space(config)?;
    let mut rows = Vec::new();
    let mut example = None;
    for (p, &snr_db) in config.snr_db_list.iter().enumerate() {
        let reals = (0..config.n_realizations)
            .into_par_iter()
            .map(|r| realization(config, p, r))
            .collect::<Result<Vec<_>>>()?;
        for (k, &s) in config.sample_sizes.iter().enumerate() {
            let triples: Vec<_> = reals
                .iter()
                .map(|r| (&r.exact, &r.estimates[k].0, &r.estimates[k].1))
                .collect();
            rows.push(summarize(snr_db, s, &triples));
        }
        if example.is_none() {
            let first = &reals[0];
            let k = (0..config.sample_sizes.len())
                .max_by_key(|&k| (config.sample_sizes[k], usize::MAX - k))
                .expect("validated nonempty");
            example = Some(LlrExample {
                exact: first.exact.clone(),
                importance_sampling: first.estimates[k].0.clone(),
                list: first.estimates[k].1.clone(),
            });
        }
    }
    Ok(LlrFidelityMetrics {
        tau: config.sampler.tau,
        rows,
        example: example.expect("at least one SNR point"),
    })
}

pub(crate) fn write(m: &LlrFidelityMetrics, title: &[String], out: &Path) -> Result<()> {
    let mut head = title.to_vec();
    head.push(format!(
        "importance sampling at tau {}; list LLRs reuse the same samples",
        float(m.tau)
    ));
    csv::write(&out.join("llr_errors.csv"), &head, &m.rows)?;
    write_json(&out.join("llr_exact.json"), &m.example.exact)?;
    write_json(&out.join("llr_is.json"), &m.example.importance_sampling)?;
    write_json(&out.join("llr_list.json"), &m.example.list)
}
