//! Soft and hard decisions from a list of sampled symbol vectors.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::model::DetectionInstance;
use crate::scalar::{softplus, Real};

/// Default LLR magnitude clamp.
pub const DEFAULT_CLIP: f64 = 30.0;

/// Sampled states with their untempered metric values.
///
/// Repetitions are kept: the importance-sampling estimator weighs states by
/// how often they occur.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleList<T> {
    samples: Vec<Vec<usize>>,
    f_values: Vec<T>,
    source_tau: T,
}

impl<T: Real> SampleList<T> {
    pub fn from_samples(instance: &DetectionInstance<T>, samples: Vec<Vec<usize>>, source_tau: T) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("empty sample list".into()));
        }
        if samples
            .iter()
            .any(|s| s.len() != instance.n() || s.iter().any(|&i| i >= instance.q()))
        {
            return Err(Error::DimensionMismatch("sample does not fit the instance".into()));
        }
        let f_values = samples.iter().map(|s| instance.metric(s)).collect();
        Ok(Self {
            samples,
            f_values,
            source_tau,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn samples(&self) -> &[Vec<usize>] {
        &self.samples
    }

    #[inline]
    pub fn f_values(&self) -> &[T] {
        &self.f_values
    }

    #[inline]
    pub fn source_tau(&self) -> T {
        self.source_tau
    }

    /// First `len` samples, e.g. the first `S` chains of a larger run.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.clamp(1, self.len());
        Self {
            samples: self.samples[..len].to_vec(),
            f_values: self.f_values[..len].to_vec(),
            source_tau: self.source_tau,
        }
    }
}

/// Per-bit LLRs (natural log, `+` favours bit `+1`), clamped to `±clip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrVector<T> {
    pub llrs: Vec<T>,
    pub clip: T,
}

impl<T: Real> LlrVector<T> {
    pub fn from_raw(raw: Vec<T>, clip: T) -> Self {
        let llrs = raw.into_iter().map(|l| clamp(l, clip)).collect();
        Self { llrs, clip }
    }

    pub fn len(&self) -> usize {
        self.llrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llrs.is_empty()
    }
}

#[inline]
fn clamp<T: Real>(l: T, clip: T) -> T {
    if l.is_nan() {
        T::zero()
    } else {
        l.max(-clip).min(clip)
    }
}

/// How the correction term `F(a) = log(1 + e^a)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LseMode {
    #[default]
    Exact,
    /// Piecewise-linear table on `[−8, 0]` with step 1/16, `e^a` below it.
    Lookup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrOptions<T> {
    pub clip: T,
    pub mode: LseMode,
}

impl<T: Real> Default for LlrOptions<T> {
    fn default() -> Self {
        Self {
            clip: T::lit(DEFAULT_CLIP),
            mode: LseMode::Exact,
        }
    }
}

const TABLE_MIN: f64 = -8.0;
const TABLE_STEPS_PER_UNIT: usize = 16;
const TABLE_LEN: usize = 8 * TABLE_STEPS_PER_UNIT + 1;

fn softplus_table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; TABLE_LEN];
        for (i, v) in t.iter_mut().enumerate() {
            *v = softplus(TABLE_MIN + i as f64 / TABLE_STEPS_PER_UNIT as f64);
        }
        t
    })
}

/// `F(a) = log(1 + e^a)` in the selected mode.
pub fn correction<T: Real>(a: T, mode: LseMode) -> T {
    match mode {
        LseMode::Exact => softplus(a),
        LseMode::Lookup => {
            if a > T::zero() {
                return a + correction(-a, mode);
            }
            let pos = (a.to_f64_lossy() - TABLE_MIN) * TABLE_STEPS_PER_UNIT as f64;
            if !(pos >= 0.0) {
                // below the table F(a) = e^a to within e^{2a}/2
                return a.exp();
            }
            let table = softplus_table();
            let i = (pos.floor() as usize).min(TABLE_LEN - 2);
            let frac = pos - i as f64;
            T::lit(table[i] + frac * (table[i + 1] - table[i]))
        }
    }
}

/// Streaming log-sum-exp accumulator: `v ← max(v, a) + F(−|v − a|)`, starting at `−∞`.
#[derive(Debug, Clone, Copy)]
pub struct LseAccumulator<T> {
    value: T,
    mode: LseMode,
}

impl<T: Real> LseAccumulator<T> {
    pub fn new(mode: LseMode) -> Self {
        Self {
            value: T::neg_infinity(),
            mode,
        }
    }

    #[inline]
    pub fn push(&mut self, a: T) {
        if self.value == T::neg_infinity() {
            self.value = a;
        } else if a != T::neg_infinity() {
            self.value = self.value.max(a) + correction(-(self.value - a).abs(), self.mode);
        }
    }

    #[inline]
    pub fn value(&self) -> T {
        self.value
    }
}

/// `log Σ e^{a_s}` by the streaming recursion. Empty input gives `−∞`.
pub fn logsumexp_stream<T: Real>(values: impl IntoIterator<Item = T>, mode: LseMode) -> T {
    let mut acc = LseAccumulator::new(mode);
    for v in values {
        acc.push(v);
    }
    acc.value()
}

/// Importance-sampling LLRs from samples of the tempered posterior.
///
/// For each sample and bit, the two neighbours `x_{±1}` that force the bit
/// differ from the demapped sample in one coordinate, so their metrics come
/// from the cached residual by a rank-one update.
pub fn llr_is<T: Real>(
    list: &SampleList<T>,
    instance: &DetectionInstance<T>,
    tau: T,
    options: LlrOptions<T>,
) -> Result<LlrVector<T>> {
    if !(tau > T::one()) {
        return Err(Error::InvalidArgument(format!(
            "importance-sampling LLRs need tau > 1, got {tau}"
        )));
    }
    if (tau - list.source_tau()).abs() > T::epsilon() * tau * T::lit(16.0) {
        return Err(Error::InvalidArgument(format!(
            "tau {tau} differs from the sampling temperature {}",
            list.source_tau()
        )));
    }
    if list.is_empty() {
        return Err(Error::InvalidArgument("empty sample list".into()));
    }
    let c = instance.constellation();
    let bps = c.bits_per_symbol();
    let n_bits = instance.n_bits();
    let sigma2 = instance.sigma2();
    let weight = (tau - T::one()) / tau;
    let h = instance.h();

    let mut plus = vec![LseAccumulator::new(options.mode); n_bits];
    let mut minus = vec![LseAccumulator::new(options.mode); n_bits];
    for x in list.samples() {
        let r = instance.residual(x);
        let base = norm_sq(&r);
        let proj = h.tr_matvec(&r)?;
        for (n, &xi) in x.iter().enumerate() {
            let a0 = c.amplitude(xi);
            let col = instance.column_norm_sq(n);
            let metric_at = |idx: usize| {
                let d = c.amplitude(idx) - a0;
                -(base - T::lit(2.0) * d * proj[n] + d * d * col) / sigma2
            };
            for j in 0..bps {
                let f_plus = metric_at(c.with_bit(xi, j, 1));
                let f_minus = metric_at(c.with_bit(xi, j, -1));
                let gamma = (f_plus - f_minus) / tau;
                let k = n * bps + j;
                plus[k].push(weight * f_plus - correction(-gamma, options.mode));
                minus[k].push(weight * f_minus - correction(gamma, options.mode));
            }
        }
    }
    let raw = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| p.value() - m.value())
        .collect();
    Ok(LlrVector::from_raw(raw, options.clip))
}

/// List-based LLRs over the distinct states of the list.
///
/// A bit whose `+1` (resp. `−1`) subset is empty gets `−clip` (resp. `+clip`).
pub fn llr_list<T: Real>(list: &SampleList<T>, instance: &DetectionInstance<T>, clip: T) -> Result<LlrVector<T>> {
    if list.is_empty() {
        return Err(Error::InvalidArgument("empty sample list".into()));
    }
    let mut distinct: Vec<(&Vec<usize>, T)> = list.samples().iter().zip(list.f_values().iter().copied()).collect();
    distinct.sort_by(|a, b| a.0.cmp(b.0));
    distinct.dedup_by(|a, b| a.0 == b.0);

    let c = instance.constellation();
    let bps = c.bits_per_symbol();
    let mut plus = vec![LseAccumulator::new(LseMode::Exact); instance.n_bits()];
    let mut minus = vec![LseAccumulator::new(LseMode::Exact); instance.n_bits()];
    for (x, f) in distinct {
        for (n, &xi) in x.iter().enumerate() {
            for j in 0..bps {
                let k = n * bps + j;
                if c.bit(xi, j) > 0 {
                    plus[k].push(f);
                } else {
                    minus[k].push(f);
                }
            }
        }
    }
    let raw = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| match (p.value() == T::neg_infinity(), m.value() == T::neg_infinity()) {
            (true, true) => Err(Error::InvalidArgument("both bit subsets empty".into())),
            (true, false) => Ok(-clip),
            (false, true) => Ok(clip),
            (false, false) => Ok(p.value() - m.value()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LlrVector::from_raw(raw, clip))
}

/// Sample with the smallest residual norm; ties go to the earliest entry.
pub fn hard_decision<T: Real>(list: &SampleList<T>) -> &[usize] {
    let mut best = 0;
    for (i, &f) in list.f_values().iter().enumerate().skip(1) {
        if f > list.f_values()[best] {
            best = i;
        }
    }
    &list.samples()[best]
}
