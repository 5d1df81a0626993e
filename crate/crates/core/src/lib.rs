//! Discrete Metropolis-adjusted Langevin (DMALA) sampling for MIMO detection.
//!
//! The crate covers the real-valued channel model, the DMALA chain with and
//! without preconditioning, importance-sampling and list LLR estimators, an
//! exhaustive oracle for small state spaces, and baseline detectors. All
//! numerics are generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar for the common cases.
//!
//! ```
//! use dmala::{ChannelSpec, DetectionInstance64, DmalaSampler, SamplerConfig, llr_is, LlrOptions};
//! use dmala::rng::stream;
//!
//! let inst = DetectionInstance64::simulate(&ChannelSpec::rayleigh(2, 2), 4, 12.0, &mut stream(7, &[])).unwrap();
//! let config = SamplerConfig::recommended(&inst).with_tau(2.0).with_seed(1);
//! let samples = DmalaSampler::new(&inst, config).unwrap().run_parallel_chains();
//! let llrs = llr_is(&samples, &inst, 2.0, LlrOptions::default()).unwrap();
//! assert_eq!(llrs.len(), inst.n_bits());
//! ```

pub mod baselines;
pub mod chains;
pub mod error;
pub mod linalg;
pub mod llr;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod scalar;

pub use baselines::{mmse_detect, BaselineConfig, BaselineKind, GibbsSampler, ScanOrder, UnadjustedDla};
pub use chains::{collect_samples, state_histograms, Collection, Kernel};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use llr::{hard_decision, llr_is, llr_list, LlrOptions, LlrVector, LseMode, SampleList, DEFAULT_CLIP};
pub use model::{
    demap_bits, generate_channel, map_bits, perturb_csi, snr_to_sigma2, transmit, Bit, ChannelKind, ChannelSpec,
    Constellation, DetectionInstance, InstanceRecord,
};
pub use oracle::{
    build_transition_matrix, build_unadjusted_matrix, convergence_rate, detailed_balance_check, exact_llr,
    exact_posterior, map_detect, tv_decay_curve, tv_distance, PosteriorTable, Spectrum, StateSpace,
    TransitionMatrix, STATE_SPACE_CAP,
};
pub use sampler::{DmalaSampler, Initialization, SamplerConfig, SamplerMode};
pub use scalar::Real;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Constellation64 = Constellation<f64>;
pub type Constellation32 = Constellation<f32>;
pub type DetectionInstance64 = DetectionInstance<f64>;
pub type DetectionInstance32 = DetectionInstance<f32>;
pub type SamplerConfig64 = SamplerConfig<f64>;
pub type SamplerConfig32 = SamplerConfig<f32>;
pub type DmalaSampler64<'a> = DmalaSampler<'a, f64>;
pub type DmalaSampler32<'a> = DmalaSampler<'a, f32>;
pub type LlrVector64 = LlrVector<f64>;
pub type LlrVector32 = LlrVector<f32>;
pub type SampleList64 = SampleList<f64>;
pub type SampleList32 = SampleList<f32>;
