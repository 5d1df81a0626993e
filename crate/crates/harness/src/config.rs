//! Experiment configuration: JSON overlay on per-experiment defaults.

use std::fmt;

use dmala::model::snr_to_sigma2;
use dmala::{ChannelSpec, Constellation64, DetectionInstance64, Initialization, SamplerConfig, SamplerMode};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TvCurve,
    RateBoxplot,
    SerSweep,
    LlrFidelity,
    DistHistogram,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::TvCurve,
        ExperimentKind::RateBoxplot,
        ExperimentKind::SerSweep,
        ExperimentKind::LlrFidelity,
        ExperimentKind::DistHistogram,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::TvCurve => "tv_curve",
            ExperimentKind::RateBoxplot => "rate_boxplot",
            ExperimentKind::SerSweep => "ser_sweep",
            ExperimentKind::LlrFidelity => "llr_fidelity",
            ExperimentKind::DistHistogram => "dist_histogram",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Dmala,
    Mmse,
    Gibbs,
    UnadjustedDla,
}

impl DetectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Dmala => "dmala",
            DetectorKind::Mmse => "mmse",
            DetectorKind::Gibbs => "gibbs",
            DetectorKind::UnadjustedDla => "unadjusted_dla",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Naive,
    Preconditioned,
}

/// Sampler parameters as written in a config file. Step size, perturbation
/// scale and damping left unset are derived per SNR point from σ² and d_min.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    pub mode: ModeKind,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma_damp: Option<f64>,
    #[serde(rename = "T")]
    pub iterations: usize,
    pub n_chains: usize,
    pub tau: f64,
    pub init: Initialization,
    /// Hard decisions pick from every state after this step instead of the
    /// final states only. Used by the SER sweep.
    pub burn_in: Option<usize>,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            mode: ModeKind::Preconditioned,
            alpha: None,
            beta: None,
            gamma_damp: None,
            iterations: 100,
            n_chains: 128,
            tau: 1.0,
            init: Initialization::Uniform,
            burn_in: None,
        }
    }
}

impl SamplerSettings {
    /// Concrete kernel parameters for one instance.
    pub fn resolve(&self, instance: &DetectionInstance64, seed: u64) -> Result<SamplerConfig<f64>> {
        self.resolve_mode(instance, self.mode, seed)
    }

    pub fn resolve_mode(&self, instance: &DetectionInstance64, mode: ModeKind, seed: u64) -> Result<SamplerConfig<f64>> {
        let sigma2 = instance.sigma2();
        let d2 = instance.constellation().d_min().powi(2);
        let mode = match mode {
            ModeKind::Naive => SamplerMode::Naive,
            ModeKind::Preconditioned => SamplerMode::Preconditioned {
                beta: self.beta.unwrap_or(d2 / sigma2),
                gamma_damp: self.gamma_damp.unwrap_or(sigma2 / (2.0 * d2)),
            },
        };
        let config = SamplerConfig {
            alpha: self.alpha.unwrap_or(sigma2),
            mode,
            iterations: self.iterations,
            n_chains: self.n_chains,
            tau: self.tau,
            seed,
            init: self.init,
        };
        config.validate().map_err(|e| HarnessError::Config(format!("sampler: {e}")))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub channel: ChannelSpec,
    /// Alphabet size per real dimension (2: QPSK, 4: 16-QAM, 8: 64-QAM).
    pub modulation: usize,
    pub snr_db_list: Vec<f64>,
    pub sampler: SamplerSettings,
    pub detectors: Vec<DetectorKind>,
    pub n_realizations: usize,
    pub n_symbol_vectors: usize,
    pub nmse: Option<f64>,
    pub output_path: Option<String>,
    pub seed: u64,
    /// Last step of the TV curves.
    pub t_max: usize,
    /// Independent chains behind every empirical distribution.
    pub empirical_chains: usize,
    /// Step at which the histogram experiment snapshots the chains.
    pub hist_t: usize,
    /// Sample-list sizes for the LLR fidelity experiment.
    pub sample_sizes: Vec<usize>,
    pub clip: f64,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            channel: ChannelSpec::rayleigh(2, 2),
            modulation: 2,
            snr_db_list: vec![8.0],
            sampler: SamplerSettings::default(),
            detectors: vec![DetectorKind::Dmala],
            n_realizations: 1,
            n_symbol_vectors: 1000,
            nmse: None,
            output_path: None,
            seed: 0,
            t_max: 100,
            empirical_chains: 100_000,
            hist_t: 100,
            sample_sizes: vec![256, 1024, 4096],
            clip: dmala::DEFAULT_CLIP,
        };
        match kind {
            ExperimentKind::TvCurve | ExperimentKind::DistHistogram => base,
            ExperimentKind::RateBoxplot => Self {
                snr_db_list: vec![4.0, 6.0, 8.0, 10.0],
                n_realizations: 100,
                ..base
            },
            ExperimentKind::SerSweep => Self {
                channel: ChannelSpec::rayleigh(4, 4),
                modulation: 4,
                snr_db_list: vec![10.0, 12.0, 14.0, 16.0],
                detectors: vec![DetectorKind::Dmala, DetectorKind::Mmse],
                sampler: SamplerSettings {
                    n_chains: 16,
                    ..SamplerSettings::default()
                },
                ..base
            },
            ExperimentKind::LlrFidelity => Self {
                channel: ChannelSpec::rayleigh(4, 4),
                n_realizations: 100,
                sampler: SamplerSettings {
                    tau: 2.0,
                    ..SamplerSettings::default()
                },
                ..base
            },
        }
    }

    /// Overlays a JSON object on the defaults of `kind`. Nested objects merge
    /// key by key; unknown keys are rejected.
    pub fn from_json(kind: ExperimentKind, text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("invalid JSON: {e}")))?;
        if !user.is_object() {
            return Err(HarnessError::Config("config must be a JSON object".into()));
        }
        if let Some(v) = user.get("experiment") {
            let named: ExperimentKind = serde_json::from_value(v.clone())
                .map_err(|e| HarnessError::Config(format!("experiment: {e}")))?;
            if named != kind {
                return Err(HarnessError::Config(format!(
                    "config is for {named} but {kind} was requested"
                )));
            }
        }
        let mut merged = serde_json::to_value(Self::defaults(kind)).expect("defaults serialize");
        merge(&mut merged, user);
        let config: Self = serde_json::from_value(merged).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        self.channel.validate().map_err(|e| HarnessError::Config(format!("channel: {e}")))?;
        Constellation64::new(self.modulation).map_err(|e| HarnessError::Config(format!("modulation: {e}")))?;
        if self.snr_db_list.is_empty() {
            return bad("snr_db_list must not be empty".into());
        }
        if self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return bad("snr_db_list entries must be finite".into());
        }
        if matches!(self.experiment, ExperimentKind::TvCurve | ExperimentKind::DistHistogram) && self.snr_db_list.len() != 1 {
            return bad(format!("{} takes exactly one SNR point", self.experiment));
        }
        if self.n_realizations == 0 {
            return bad("n_realizations must be >= 1".into());
        }
        if self.n_symbol_vectors == 0 {
            return bad("n_symbol_vectors must be >= 1".into());
        }
        if let Some(nmse) = self.nmse {
            if !(nmse >= 0.0) || !nmse.is_finite() {
                return bad(format!("nmse {nmse} must be >= 0"));
            }
        }
        let s = &self.sampler;
        for (name, v) in [("alpha", s.alpha), ("beta", s.beta), ("gamma_damp", s.gamma_damp)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return bad(format!("sampler.{name} must be positive"));
                }
            }
        }
        if s.iterations == 0 || s.n_chains == 0 {
            return bad("sampler.T and sampler.n_chains must be >= 1".into());
        }
        if s.burn_in.is_some_and(|b| b >= s.iterations) {
            return bad("sampler.burn_in must be below sampler.T".into());
        }
        if !(s.tau >= 1.0) || !s.tau.is_finite() {
            return bad("sampler.tau must be >= 1".into());
        }
        if self.experiment == ExperimentKind::LlrFidelity && !(s.tau > 1.0) {
            return bad("llr_fidelity needs sampler.tau > 1 for importance-sampling LLRs".into());
        }
        if self.detectors.is_empty() {
            return bad("detectors must not be empty".into());
        }
        if self.t_max == 0 || self.empirical_chains == 0 || self.hist_t == 0 {
            return bad("t_max, empirical_chains and hist_t must be >= 1".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return bad("sample_sizes must be nonempty and positive".into());
        }
        if !(self.clip > 0.0) {
            return bad("clip must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every field except `output_path`.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("output_path");
        }
        let digest = Sha256::digest(serde_json::to_vec(&v).expect("value serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sigma2(&self, snr_db: f64) -> f64 {
        snr_to_sigma2(snr_db, self.channel.nt)
    }

    /// Number of real coordinates `N = 2 N_t`.
    pub fn n_real(&self) -> usize {
        2 * self.channel.nt
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
