//! Exact and empirical total-variation decay of DMALA from a uniform start.

use std::path::Path;

use dmala::oracle::{
    build_transition_matrix, build_unadjusted_matrix, convergence_rate, exact_posterior, tv_distance, Spectrum,
    StateSpace, TransitionMatrix,
};
use dmala::{state_histograms, DmalaSampler, Kernel, UnadjustedDla};
use serde::{Deserialize, Serialize};

use super::{chain_seed, draw_instance, oracle_space, tag};
use crate::config::{DetectorKind, ExperimentConfig};
use crate::csv::{self, float, parse_float, parse_int, CsvRow};
use crate::error::Result;
use crate::record::write_json;

/// Upper edge of the decade used for the late-time slope fit.
pub const SLOPE_DECADE_TOP: f64 = 1e-11;
/// TV level treated as the numerical floor.
pub const SLOPE_FLOOR: f64 = 1e-12;
const SLOPE_MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvPoint {
    pub t: usize,
    pub tv_exact: f64,
    pub tv_empirical: f64,
    /// Three binomial standard deviations of the empirical curve around the exact one.
    pub tolerance: f64,
}

impl CsvRow for TvPoint {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("t", "chain step; t = 1 is the uniform initialization"),
        ("tv_exact", "TV between the exact step-t law (uniform start times P^(t-1)) and the target"),
        ("tv_empirical", "TV between the histogram of all chains at step t and the target"),
        ("tv_tolerance", "3 * 0.5 * sum_i sqrt(p_i (1 - p_i) / chains) with p the exact step-t law"),
    ];

    fn fields(&self) -> Vec<String> {
        vec![self.t.to_string(), float(self.tv_exact), float(self.tv_empirical), float(self.tolerance)]
    }

    fn parse(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            t: parse_int(f[0])?,
            tv_exact: parse_float(f[1])?,
            tv_empirical: parse_float(f[2])?,
            tolerance: parse_float(f[3])?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Geometric mean of `TV(t+1)/TV(t)` over the window.
    pub fitted_rate: f64,
    /// Largest `|TV(t+1)/TV(t) − r|` over the window.
    pub max_deviation: f64,
    pub t_start: usize,
    pub t_end: usize,
}

/// Ratio of successive exact TV values over the last decade above the
/// numerical floor, `TV ∈ (1e-12, 1e-11]`.
///
/// Returns `None` if the curve does not reach the decade within the step budget.
pub fn late_slope(p: &TransitionMatrix<f64>, pi: &[f64], start: &[f64], r: f64) -> Option<SlopeFit> {
    let mut dist = start.to_vec();
    let mut prev = tv_distance(&dist, pi);
    let mut t = 1;
    let mut ratios = Vec::new();
    let mut t_start = 0;
    while t < SLOPE_MAX_STEPS {
        dist = p.propagate(&dist);
        t += 1;
        let cur = tv_distance(&dist, pi);
        if prev <= SLOPE_DECADE_TOP && prev > SLOPE_FLOOR {
            if ratios.is_empty() {
                t_start = t - 1;
            }
            ratios.push(cur / prev);
        }
        if cur <= SLOPE_FLOOR {
            break;
        }
        prev = cur;
    }
    if ratios.is_empty() {
        return None;
    }
    let fitted_rate = (ratios.iter().map(|v| v.ln()).sum::<f64>() / ratios.len() as f64).exp();
    let max_deviation = ratios.iter().map(|v| (v - r).abs()).fold(0.0, f64::max);
    Some(SlopeFit {
        fitted_rate,
        max_deviation,
        t_start,
        t_end: t_start + ratios.len(),
    })
}

/// Exact and empirical curves for one kernel, both started from the uniform law.
pub fn tv_series<K: Kernel>(
    kernel: &K,
    p: &TransitionMatrix<f64>,
    pi: &[f64],
    space: &StateSpace,
    chains: usize,
    t_max: usize,
) -> Vec<TvPoint> {
    let counts = state_histograms(kernel, chains, t_max, space.len(), |x| space.index(x));
    let n = chains as f64;
    let mut dist = vec![1.0 / space.len() as f64; space.len()];
    let mut points = Vec::with_capacity(t_max);
    for (t, row) in counts.iter().enumerate() {
        if t > 0 {
            dist = p.propagate(&dist);
        }
        let empirical: Vec<f64> = row.iter().map(|&c| c as f64 / n).collect();
        let sd_sum: f64 = dist.iter().map(|&q| (q * (1.0 - q) / n).max(0.0).sqrt()).sum();
        points.push(TvPoint {
            t: t + 1,
            tv_exact: tv_distance(&dist, pi),
            tv_empirical: tv_distance(&empirical, pi),
            tolerance: 3.0 * 0.5 * sd_sum,
        });
    }
    points
}

pub fn band_violations(points: &[TvPoint]) -> usize {
    points
        .iter()
        .filter(|p| (p.tv_empirical - p.tv_exact).abs() > p.tolerance)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnadjustedTv {
    /// TV between the always-accept kernel's stationary law and the target.
    pub plateau: f64,
    pub points: Vec<TvPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvCurveMetrics {
    pub snr_db: f64,
    pub sigma2: f64,
    pub n_states: usize,
    pub empirical_chains: usize,
    pub spectrum: Spectrum<f64>,
    pub slope: Option<SlopeFit>,
    pub band_violations: usize,
    pub points: Vec<TvPoint>,
    pub unadjusted: Option<UnadjustedTv>,
    pub instance: dmala::InstanceRecord,
}

pub fn run_tv_curve(config: &ExperimentConfig) -> Result<TvCurveMetrics> {
    let space = oracle_space(config)?;
    let inst = draw_instance(config, 0, 0)?;
    let sampler_config = config.sampler.resolve(&inst, chain_seed(config, tag::SAMPLER, 0, 0))?;
    let sampler = DmalaSampler::new(&inst, sampler_config)?;
    let pi = exact_posterior(&inst, sampler_config.tau)?.pi;
    let p = build_transition_matrix(&sampler)?;
    let spectrum = convergence_rate(&p, &pi)?;
    let uniform = vec![1.0 / space.len() as f64; space.len()];
    let slope = late_slope(&p, &pi, &uniform, spectrum.r);
    let points = tv_series(&sampler, &p, &pi, &space, config.empirical_chains, config.t_max);

    let unadjusted = if config.detectors.contains(&DetectorKind::UnadjustedDla) {
        let q = build_unadjusted_matrix(&sampler)?;
        let plateau = tv_distance(&q.stationary_distribution()?, &pi);
        let kernel = UnadjustedDla::new(sampler.clone());
        let points = tv_series(&kernel, &q, &pi, &space, config.empirical_chains, config.t_max);
        Some(UnadjustedTv { plateau, points })
    } else {
        None
    };

    Ok(TvCurveMetrics {
        snr_db: config.snr_db_list[0],
        sigma2: inst.sigma2(),
        n_states: space.len(),
        empirical_chains: config.empirical_chains,
        spectrum,
        slope,
        band_violations: band_violations(&points),
        points,
        unadjusted,
        instance: inst.to_record(config.seed),
    })
}

pub(crate) fn write(config: &ExperimentConfig, m: &TvCurveMetrics, title: &[String], out: &Path) -> Result<()> {
    let mut head = title.to_vec();
    head.push(format!(
        "{} chains, {} states, snr_db {}, r {}",
        config.empirical_chains,
        m.n_states,
        float(m.snr_db),
        float(m.spectrum.r)
    ));
    csv::write(&out.join("tv_curve.csv"), &head, &m.points)?;
    if let Some(u) = &m.unadjusted {
        let mut head = title.to_vec();
        head.push(format!("always-accept kernel; stationary TV plateau {}", float(u.plateau)));
        csv::write(&out.join("tv_unadjusted.csv"), &head, &u.points)?;
    }
    write_json(&out.join("spectrum.json"), &m.spectrum)?;
    write_json(&out.join("instance.json"), &m.instance)
}
