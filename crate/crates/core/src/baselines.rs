//! Reference detectors and contrast samplers: linear MMSE, single-site Gibbs,
//! and the discrete Langevin proposal without the accept/reject step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chains::Kernel;
use crate::error::Result;
use crate::linalg::{dot, Matrix};
use crate::model::DetectionInstance;
use crate::oracle::{StateSpace, TransitionMatrix};
use crate::rng::uniform;
use crate::sampler::{ChainState, DmalaSampler};
use crate::scalar::{log_sum_exp, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Mmse,
    Gibbs,
    UnadjustedDla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    #[serde(rename = "T", default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_iterations() -> usize {
    100
}

fn default_chains() -> usize {
    128
}

/// Regularized linear estimate `(HᵀH + σ²I)⁻¹ Hᵀy` and its per-coordinate
/// nearest alphabet point.
///
/// Symbols carry power 1/2 per real dimension and noise σ²/2, so the ratio
/// that regularizes the Gram matrix is σ².
pub fn mmse_detect<T: Real>(instance: &DetectionInstance<T>) -> (Vec<T>, Vec<usize>) {
    let h = instance.h();
    let mut a = h.gram();
    a.add_diagonal(instance.sigma2());
    let rhs = h.tr_matvec(instance.y()).expect("instance dimensions");
    let x_soft = a.spd_solve(&rhs).expect("regularized Gram matrix is positive definite");
    let c = instance.constellation();
    let x_hat = x_soft.iter().map(|&v| c.nearest_index(v)).collect();
    (x_soft, x_hat)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    /// Coordinates `0, 1, …, N−1` in every sweep.
    #[default]
    Systematic,
    /// `N` updates per sweep, each at a uniformly drawn coordinate.
    Random,
}

#[derive(Debug, Clone)]
pub struct GibbsState<T> {
    x: Vec<usize>,
    residual: Vec<T>,
}

impl<T> GibbsState<T> {
    pub fn x(&self) -> &[usize] {
        &self.x
    }
}

/// Single-site Gibbs sampler targeting `exp(f(x)/τ)`.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a, T> {
    instance: &'a DetectionInstance<T>,
    tau: T,
    scan: ScanOrder,
    seed: u64,
    columns: Vec<Vec<T>>,
    column_norms: Vec<T>,
}

impl<'a, T: Real> GibbsSampler<'a, T> {
    pub fn new(instance: &'a DetectionInstance<T>, tau: T, scan: ScanOrder, seed: u64) -> Self {
        let columns: Vec<Vec<T>> = (0..instance.n()).map(|j| instance.h().column(j)).collect();
        let column_norms = (0..instance.n()).map(|j| instance.column_norm_sq(j)).collect();
        Self {
            instance,
            tau,
            scan,
            seed,
            columns,
            column_norms,
        }
    }

    pub fn state_at(&self, x: Vec<usize>) -> GibbsState<T> {
        let residual = self.instance.residual(&x);
        GibbsState { x, residual }
    }

    /// `π(x_n = a | x_−n)` for every `a`, from the current residual.
    pub fn full_conditional(&self, state: &GibbsState<T>, n: usize) -> Vec<T> {
        let alphabet = self.instance.constellation().alphabet();
        let current = alphabet[state.x[n]];
        let hr = dot(&self.columns[n], &state.residual);
        let scale = T::one() / (self.tau * self.instance.sigma2());
        // ‖r + h_n (x_n − a)‖² = ‖r‖² + 2 (x_n − a) h_nᵀr + (x_n − a)² ‖h_n‖²
        let logits: Vec<T> = alphabet
            .iter()
            .map(|&a| {
                let d = current - a;
                -(T::lit(2.0) * d * hr + d * d * self.column_norms[n]) * scale
            })
            .collect();
        let z = log_sum_exp(&logits);
        logits.iter().map(|&l| (l - z).exp()).collect()
    }

    /// Resamples coordinate `n` from its full conditional.
    pub fn update_site<R: Rng + ?Sized>(&self, state: &mut GibbsState<T>, n: usize, rng: &mut R) {
        let probs = self.full_conditional(state, n);
        let u: T = uniform(rng);
        let mut acc = T::zero();
        let mut pick = probs.len() - 1;
        for (a, &p) in probs.iter().enumerate() {
            acc = acc + p;
            if u < acc {
                pick = a;
                break;
            }
        }
        if pick != state.x[n] {
            let alphabet = self.instance.constellation().alphabet();
            let delta = alphabet[pick] - alphabet[state.x[n]];
            for (r, &h) in state.residual.iter_mut().zip(&self.columns[n]) {
                *r = *r - h * delta;
            }
            state.x[n] = pick;
        }
    }

    /// One sweep of `N` single-site updates.
    pub fn gibbs_step<R: Rng + ?Sized>(&self, state: &mut GibbsState<T>, rng: &mut R) {
        let n = self.instance.n();
        for k in 0..n {
            let site = match self.scan {
                ScanOrder::Systematic => k,
                ScanOrder::Random => rng.random_range(0..n),
            };
            self.update_site(state, site, rng);
        }
        state.residual = self.instance.residual(&state.x);
    }

    /// Exact sweep kernel over the full state space.
    pub fn transition_matrix(&self) -> Result<TransitionMatrix<T>> {
        let space = StateSpace::for_instance(self.instance)?;
        let n = self.instance.n();
        let q = self.instance.q();
        // conditionals[s][a]: probability of symbol a at site n given the other
        // coordinates of state s, for each site n
        let conditionals: Vec<Vec<Vec<T>>> = (0..n)
            .map(|site| {
                (0..space.len())
                    .map(|s| self.full_conditional(&self.state_at(space.state(s)), site))
                    .collect()
            })
            .collect();
        let weights: Vec<T> = match self.scan {
            ScanOrder::Systematic => vec![T::one()],
            ScanOrder::Random => vec![T::one() / T::of_usize(n); n],
        };
        let stride = |site: usize| q.pow((n - 1 - site) as u32);
        let apply_site = |dist: &[T], site: usize| -> Vec<T> {
            let st = stride(site);
            let mut out = vec![T::zero(); dist.len()];
            for (s, o) in out.iter_mut().enumerate() {
                let digit = (s / st) % q;
                let base = s - digit * st;
                let mass: T = (0..q).map(|a| dist[base + a * st]).sum();
                *o = mass * conditionals[site][s][digit];
            }
            out
        };
        let sweep = |start: Vec<T>| -> Vec<T> {
            match self.scan {
                ScanOrder::Systematic => (0..n).fold(start, |d, site| apply_site(&d, site)),
                ScanOrder::Random => (0..n).fold(start, |d, _| {
                    let mut acc = vec![T::zero(); d.len()];
                    for (site, &w) in weights.iter().enumerate() {
                        for (a, v) in acc.iter_mut().zip(apply_site(&d, site)) {
                            *a = *a + w * v;
                        }
                    }
                    acc
                }),
            }
        };
        let rows: Vec<Vec<T>> = (0..space.len())
            .map(|i| sweep(crate::oracle::point_mass(space.len(), i)))
            .collect();
        Ok(TransitionMatrix {
            p: Matrix::from_rows(&rows)?,
        })
    }
}

impl<T: Real> Kernel for GibbsSampler<'_, T> {
    type State = GibbsState<T>;

    fn seed(&self) -> u64 {
        self.seed
    }

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State {
        let x = (0..self.instance.n())
            .map(|_| rng.random_range(0..self.instance.q()))
            .collect();
        self.state_at(x)
    }

    fn advance<R: Rng + ?Sized>(&self, state: &mut Self::State, rng: &mut R) -> bool {
        self.gibbs_step(state, rng);
        true
    }

    fn symbols<'s>(&self, state: &'s Self::State) -> &'s [usize] {
        &state.x
    }
}

/// The DMALA proposal with every move accepted. Its stationary law is biased
/// away from the target; it exists as a negative control.
#[derive(Debug, Clone)]
pub struct UnadjustedDla<'a, T> {
    inner: DmalaSampler<'a, T>,
}

impl<'a, T: Real> UnadjustedDla<'a, T> {
    pub fn new(inner: DmalaSampler<'a, T>) -> Self {
        Self { inner }
    }

    pub fn sampler(&self) -> &DmalaSampler<'a, T> {
        &self.inner
    }

    pub fn unadjusted_dla_step<R: Rng + ?Sized>(&self, state: &mut ChainState<T>, rng: &mut R) -> bool {
        self.inner.step_unadjusted(state, rng)
    }
}

impl<T: Real> Kernel for UnadjustedDla<'_, T> {
    type State = ChainState<T>;

    fn seed(&self) -> u64 {
        self.inner.config().seed
    }

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State {
        self.inner.initial_state(rng)
    }

    fn advance<R: Rng + ?Sized>(&self, state: &mut Self::State, rng: &mut R) -> bool {
        self.unadjusted_dla_step(state, rng)
    }

    fn symbols<'s>(&self, state: &'s Self::State) -> &'s [usize] {
        state.x()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelSpec, Constellation};
    use crate::oracle::{exact_posterior, stationarity_error, tv_distance};
    use crate::rng::stream;
    use crate::sampler::SamplerConfig;

    fn instance(seed: u64) -> DetectionInstance<f64> {
        DetectionInstance::simulate(&ChannelSpec::rayleigh(2, 2), 2, 8.0, &mut stream(seed, &[])).unwrap()
    }

    #[test]
    fn mmse_normal_equations_hold() {
        for seed in 0..20 {
            let inst = DetectionInstance::<f64>::simulate(&ChannelSpec::rayleigh(4, 4), 16, 10.0, &mut stream(seed, &[])).unwrap();
            let (x_soft, _) = mmse_detect(&inst);
            let mut a = inst.h().gram();
            a.add_diagonal(inst.sigma2());
            let lhs = a.matvec(&x_soft).unwrap();
            let rhs = inst.h().tr_matvec(inst.y()).unwrap();
            let err: f64 = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(err <= 1e-8 * scale);
        }
    }

    #[test]
    fn mmse_recovers_noise_free_symbols() {
        let c = Constellation::<f64>::new(4).unwrap();
        let h = crate::model::generate_channel::<f64, _>(&ChannelSpec::rayleigh(2, 4), &mut stream(5, &[])).unwrap();
        let truth = vec![3, 0, 1, 2];
        let y = h.matvec(&c.amplitudes(&truth)).unwrap();
        let inst = DetectionInstance::new(h, y, 1e-10, c).unwrap();
        assert_eq!(mmse_detect(&inst).1, truth);
    }

    #[test]
    fn full_conditionals_normalized() {
        let inst = instance(1);
        let g = GibbsSampler::new(&inst, 1.0, ScanOrder::Systematic, 0);
        let state = g.state_at(vec![0, 1, 1, 0]);
        for n in 0..4 {
            let p = g.full_conditional(&state, n);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_conditional_matches_brute_force() {
        let inst = instance(2);
        let g = GibbsSampler::new(&inst, 2.0, ScanOrder::Systematic, 0);
        let x = vec![1, 0, 1, 1];
        let state = g.state_at(x.clone());
        for n in 0..4 {
            let logits: Vec<f64> = (0..2)
                .map(|a| {
                    let mut y = x.clone();
                    y[n] = a;
                    inst.metric(&y) / 2.0
                })
                .collect();
            let z = log_sum_exp(&logits);
            for (a, p) in g.full_conditional(&state, n).iter().enumerate() {
                assert!((p - (logits[a] - z).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gibbs_kernels_preserve_posterior() {
        for scan in [ScanOrder::Systematic, ScanOrder::Random] {
            let inst = instance(3);
            let g = GibbsSampler::new(&inst, 1.0, scan, 0);
            let p = g.transition_matrix().unwrap();
            assert!(p.max_row_sum_error() < 1e-12);
            let pi = exact_posterior(&inst, 1.0).unwrap().pi;
            assert!(stationarity_error(&p, &pi) < 1e-12);
            let stat = p.stationary_distribution().unwrap();
            assert!(tv_distance(&stat, &pi) <= 1e-10);
        }
    }

    #[test]
    fn single_coordinate_sweep_is_exact() {
        let c = Constellation::<f64>::new(4).unwrap();
        let h = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let inst = DetectionInstance::new(h, vec![0.3, -0.2], 0.4, c).unwrap();
        let g = GibbsSampler::new(&inst, 1.0, ScanOrder::Systematic, 0);
        let p = g.transition_matrix().unwrap();
        let pi = exact_posterior(&inst, 1.0).unwrap().pi;
        // independent coordinates: one sweep from any state lands on π
        for i in 0..p.len() {
            assert!(tv_distance(p.p.row(i), &pi) < 1e-12);
        }
    }

    #[test]
    fn unadjusted_always_accepts() {
        let inst = instance(4);
        let s = DmalaSampler::new(&inst, SamplerConfig::recommended(&inst)).unwrap();
        let u = UnadjustedDla::new(s);
        let mut rng = stream(9, &[]);
        let mut state = u.init(&mut rng);
        for _ in 0..200 {
            assert!(u.advance(&mut state, &mut rng));
        }
    }

    #[test]
    fn baseline_config_json_keys() {
        let c: BaselineConfig = serde_json::from_str(r#"{"kind":"unadjusted_dla","T":50,"n_chains":8,"seed":3}"#).unwrap();
        assert_eq!(c.kind, BaselineKind::UnadjustedDla);
        assert_eq!(c.iterations, 50);
    }
}
