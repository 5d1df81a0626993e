//! Uncoded symbol and vector error rates with a fresh channel per transmitted vector.

use std::path::Path;

use dmala::oracle::{map_detect, StateSpace};
use dmala::rng::stream;
use dmala::{
    collect_samples, hard_decision, mmse_detect, perturb_csi, Collection, DetectionInstance64, DmalaSampler,
    GibbsSampler, Kernel, SampleList, ScanOrder, UnadjustedDla,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chain_seed, draw_instance, tag};
use crate::config::{DetectorKind, ExperimentConfig, SamplerSettings};
use crate::csv::{self, float, parse_float, parse_int, CsvRow};
use crate::error::Result;

/// Detectors scored by the sweep; `Map` is added whenever the exhaustive search fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SerDetector {
    Dmala,
    Mmse,
    Gibbs,
    UnadjustedDla,
    Map,
}

impl SerDetector {
    pub fn as_str(self) -> &'static str {
        match self {
            SerDetector::Dmala => "dmala",
            SerDetector::Mmse => "mmse",
            SerDetector::Gibbs => "gibbs",
            SerDetector::UnadjustedDla => "unadjusted_dla",
            SerDetector::Map => "map",
        }
    }

    fn parse(s: &str) -> std::result::Result<Self, String> {
        [Self::Dmala, Self::Mmse, Self::Gibbs, Self::UnadjustedDla, Self::Map]
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown detector {s:?}"))
    }
}

impl From<DetectorKind> for SerDetector {
    fn from(d: DetectorKind) -> Self {
        match d {
            DetectorKind::Dmala => SerDetector::Dmala,
            DetectorKind::Mmse => SerDetector::Mmse,
            DetectorKind::Gibbs => SerDetector::Gibbs,
            DetectorKind::UnadjustedDla => SerDetector::UnadjustedDla,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerPoint {
    pub snr_db: f64,
    pub detector: SerDetector,
    pub symbol_errors: u64,
    pub symbols: u64,
    pub ser: f64,
    pub vector_errors: u64,
    pub vectors: u64,
    pub vector_error_rate: f64,
}

impl CsvRow for SerPoint {
    const COLUMNS: &'static [(&'static str, &'static str)] = &[
        ("snr_db", "SNR per receive antenna in dB"),
        ("detector", "dmala, mmse, gibbs, unadjusted_dla or map (exhaustive search)"),
        ("symbol_errors", "complex symbols with a wrong in-phase or quadrature decision"),
        ("symbols", "complex symbols transmitted (vectors * N_t)"),
        ("ser", "symbol_errors / symbols"),
        ("vector_errors", "transmitted vectors with at least one symbol error"),
        ("vectors", "transmitted vectors, each through a fresh channel"),
        ("vector_error_rate", "vector_errors / vectors"),
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            float(self.snr_db),
            self.detector.as_str().into(),
            self.symbol_errors.to_string(),
            self.symbols.to_string(),
            float(self.ser),
            self.vector_errors.to_string(),
            self.vectors.to_string(),
            float(self.vector_error_rate),
        ]
    }

    fn parse(f: &[&str]) -> std::result::Result<Self, String> {
        Ok(Self {
            snr_db: parse_float(f[0])?,
            detector: SerDetector::parse(f[1])?,
            symbol_errors: parse_int(f[2])?,
            symbols: parse_int(f[3])?,
            ser: parse_float(f[4])?,
            vector_errors: parse_int(f[5])?,
            vectors: parse_int(f[6])?,
            vector_error_rate: parse_float(f[7])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerSweepMetrics {
    pub nmse: Option<f64>,
    pub points: Vec<SerPoint>,
}

impl SerSweepMetrics {
    pub fn ser(&self, snr_db: f64, detector: SerDetector) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.snr_db == snr_db && p.detector == detector)
            .map(|p| p.ser)
    }
}

/// Detector list for a config: the configured ones in their given order, then `Map` if it fits.
pub fn detectors_for(config: &ExperimentConfig) -> Vec<SerDetector> {
    let mut out: Vec<SerDetector> = Vec::new();
    for &d in &config.detectors {
        let d = SerDetector::from(d);
        if !out.contains(&d) {
            out.push(d);
        }
    }
    if StateSpace::new(config.modulation, config.n_real()).is_ok() {
        out.push(SerDetector::Map);
    }
    out
}

fn decide<K: Kernel>(kernel: &K, inst: &DetectionInstance64, settings: &SamplerSettings) -> Vec<usize> {
    let collection = match settings.burn_in {
        Some(b) => Collection::AfterBurnIn(b),
        None => Collection::FinalOnly,
    };
    let samples = collect_samples(kernel, settings.n_chains, settings.iterations, collection, false);
    let list = SampleList::from_samples(inst, samples, 1.0).expect("at least one chain");
    hard_decision(&list).to_vec()
}

fn detect(
    config: &ExperimentConfig,
    detector: SerDetector,
    inst: &DetectionInstance64,
    point: usize,
    vector: usize,
) -> Result<Vec<usize>> {
    let s = &config.sampler;
    let sampler_seed = chain_seed(config, tag::SAMPLER, point, vector);
    Ok(match detector {
        SerDetector::Dmala => {
            let sampler = DmalaSampler::new(inst, s.resolve(inst, sampler_seed)?)?;
            decide(&sampler, inst, s)
        }
        SerDetector::UnadjustedDla => {
            let sampler = DmalaSampler::new(inst, s.resolve(inst, sampler_seed)?)?;
            decide(&UnadjustedDla::new(sampler), inst, s)
        }
        SerDetector::Gibbs => {
            let seed = chain_seed(config, tag::BASELINE, point, vector);
            let gibbs = GibbsSampler::new(inst, s.tau, ScanOrder::Systematic, seed);
            decide(&gibbs, inst, s)
        }
        SerDetector::Mmse => mmse_detect(inst).1,
        SerDetector::Map => map_detect(inst)?,
    })
}

/// Complex-symbol errors: symbol `k` lives in real coordinates `k` and `k + N_t`.
pub fn symbol_errors(truth: &[usize], decision: &[usize]) -> u64 {
    let nt = truth.len() / 2;
    (0..nt)
        .filter(|&k| truth[k] != decision[k] || truth[k + nt] != decision[k + nt])
        .count() as u64
}

fn vector_errors(
    config: &ExperimentConfig,
    detectors: &[SerDetector],
    point: usize,
    vector: usize,
) -> Result<Vec<u64>> {
    let inst = draw_instance(config, point, vector)?;
    let truth = inst.true_x().expect("simulated instance").to_vec();
    let seen = match config.nmse {
        Some(nmse) => {
            let mut rng = stream(config.seed, &[tag::CSI, point as u64, vector as u64]);
            inst.with_channel(perturb_csi(inst.h(), nmse, &mut rng)?)?
        }
        None => inst,
    };
    detectors
        .iter()
        .map(|&d| Ok(symbol_errors(&truth, &detect(config, d, &seen, point, vector)?)))
        .collect()
}

pub fn run_ser_sweep(config: &ExperimentConfig) -> Result<SerSweepMetrics> {
    let detectors = detectors_for(config);
    let vectors = config.n_symbol_vectors;
    let nt = config.channel.nt as u64;
    let mut points = Vec::new();
    for (p, &snr_db) in config.snr_db_list.iter().enumerate() {
        let per_vector = (0..vectors)
            .into_par_iter()
            .map(|v| vector_errors(config, &detectors, p, v))
            .collect::<Result<Vec<_>>>()?;
        for (k, &detector) in detectors.iter().enumerate() {
            let symbol_errors: u64 = per_vector.iter().map(|e| e[k]).sum();
            let vector_errors = per_vector.iter().filter(|e| e[k] > 0).count() as u64;
            let symbols = vectors as u64 * nt;
            points.push(SerPoint {
                snr_db,
                detector,
                symbol_errors,
                symbols,
                ser: symbol_errors as f64 / symbols as f64,
                vector_errors,
                vectors: vectors as u64,
                vector_error_rate: vector_errors as f64 / vectors as f64,
            });
        }
    }
    Ok(SerSweepMetrics {
        nmse: config.nmse,
        points,
    })
}

pub(crate) fn write(m: &SerSweepMetrics, title: &[String], out: &Path) -> Result<()> {
    let mut head = title.to_vec();
    head.push(match m.nmse {
        Some(nmse) => format!("detectors see H + E with NMSE {}", float(nmse)),
        None => "detectors see the true channel".into(),
    });
    csv::write(&out.join("ser.csv"), &head, &m.points)
}
