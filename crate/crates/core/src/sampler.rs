//! The discrete Metropolis-adjusted Langevin (DMALA) chain.
//!
//! Each step draws every coordinate independently from a categorical
//! proposal whose log-weights are a gradient-informed quadratic,
//!
//! ```text
//! score_n(a) = g_n (a − x_n) / 2 − (a − x_n)² / (2 α_eff)
//! ```
//!
//! and then corrects with a Metropolis-Hastings accept/reject. The naive
//! kernel uses `(g, α_eff) = (∇f, α)`; the preconditioned kernel uses
//! `((1/β) M ∇f, αβ)` with `M = (HᵀH + γI)⁻¹`. A temperature `τ` replaces
//! `f` by `f/τ` everywhere (metric, gradient, acceptance).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::mmse_detect;
use crate::chains::{collect_samples, Collection, Kernel};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, Matrix};
use crate::llr::SampleList;
use crate::model::DetectionInstance;
use crate::rng::uniform;
use crate::scalar::{log_sum_exp, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SamplerMode<T> {
    Naive,
    Preconditioned { beta: T, gamma_damp: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// Uniform over `A^N`, independently per chain.
    #[default]
    Uniform,
    /// Linear MMSE estimate snapped to the alphabet.
    MmseRounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig<T> {
    pub alpha: T,
    pub mode: SamplerMode<T>,
    /// Chain length `T`, counting the initial state.
    #[serde(rename = "T")]
    pub iterations: usize,
    pub n_chains: usize,
    /// Target temperature; 1 samples the posterior itself.
    pub tau: T,
    pub seed: u64,
    #[serde(default)]
    pub init: Initialization,
}

impl<T: Real> SamplerConfig<T> {
    /// Preconditioned kernel with `α = σ²`, `β = d_min²/σ²`, `γ = σ²/(2 d_min²)`,
    /// `T = 100`, 128 chains and `τ = 1`.
    pub fn recommended(instance: &DetectionInstance<T>) -> Self {
        let sigma2 = instance.sigma2();
        let d2 = instance.constellation().d_min().powi(2);
        Self {
            alpha: sigma2,
            mode: SamplerMode::Preconditioned {
                beta: d2 / sigma2,
                gamma_damp: sigma2 / (T::lit(2.0) * d2),
            },
            iterations: 100,
            n_chains: 128,
            tau: T::one(),
            seed: 0,
            init: Initialization::Uniform,
        }
    }

    /// Naive kernel with `α = σ²` and otherwise the same defaults.
    pub fn recommended_naive(instance: &DetectionInstance<T>) -> Self {
        Self {
            mode: SamplerMode::Naive,
            ..Self::recommended(instance)
        }
    }

    pub fn with_tau(mut self, tau: T) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_chains(mut self, n_chains: usize, iterations: usize) -> Self {
        self.n_chains = n_chains;
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return bad("alpha must be positive");
        }
        if let SamplerMode::Preconditioned { beta, gamma_damp } = self.mode {
            if !(beta > T::zero()) || !beta.is_finite() {
                return bad("beta must be positive");
            }
            if !(gamma_damp > T::zero()) || !gamma_damp.is_finite() {
                return bad("gamma_damp must be positive");
            }
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if self.n_chains == 0 {
            return bad("n_chains must be >= 1");
        }
        if !(self.tau >= T::one()) || !self.tau.is_finite() {
            return bad("tau must be >= 1");
        }
        Ok(())
    }
}

/// `N × Q` table of per-coordinate categorical proposals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalTable<T> {
    q: usize,
    probs: Vec<T>,
    log_probs: Vec<T>,
}

impl<T: Real> ProposalTable<T> {
    #[inline]
    pub fn n(&self) -> usize {
        self.probs.len() / self.q
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[T] {
        &self.probs[n * self.q..(n + 1) * self.q]
    }

    #[inline]
    pub fn log_row(&self, n: usize) -> &[T] {
        &self.log_probs[n * self.q..(n + 1) * self.q]
    }

    #[inline]
    pub fn log_prob_at(&self, n: usize, index: usize) -> T {
        self.log_probs[n * self.q + index]
    }
}

/// Builds the factorized proposal at `x` from an effective gradient and step.
pub fn build_proposal<T: Real>(alphabet: &[T], x: &[usize], grad_effective: &[T], alpha_effective: T) -> ProposalTable<T> {
    debug_assert_eq!(x.len(), grad_effective.len());
    let q = alphabet.len();
    let half = T::lit(0.5);
    let inv_two_alpha = T::one() / (T::lit(2.0) * alpha_effective);
    let mut log_probs = Vec::with_capacity(x.len() * q);
    let mut scores = vec![T::zero(); q];
    for (&xi, &g) in x.iter().zip(grad_effective) {
        let xn = alphabet[xi];
        for (s, &a) in scores.iter_mut().zip(alphabet) {
            let d = a - xn;
            *s = half * g * d - d * d * inv_two_alpha;
        }
        let lse = log_sum_exp(&scores);
        log_probs.extend(scores.iter().map(|&s| s - lse));
    }
    let probs = log_probs.iter().map(|&l| l.exp()).collect();
    ProposalTable { q, probs, log_probs }
}

/// Draws every coordinate independently; returns the draw and its joint log-probability.
pub fn sample_proposal<T: Real, R: Rng + ?Sized>(table: &ProposalTable<T>, rng: &mut R) -> (Vec<usize>, T) {
    let x: Vec<usize> = (0..table.n())
        .map(|n| {
            let u: T = uniform(rng);
            let row = table.row(n);
            let mut acc = T::zero();
            let mut last_positive = 0;
            for (i, &p) in row.iter().enumerate() {
                if p > T::zero() {
                    last_positive = i;
                }
                acc = acc + p;
                if u < acc {
                    return i;
                }
            }
            last_positive
        })
        .collect();
    let log_q = proposal_log_prob(table, &x);
    (x, log_q)
}

/// `Σ_n log q_n(x_n)`.
pub fn proposal_log_prob<T: Real>(table: &ProposalTable<T>, x_target: &[usize]) -> T {
    x_target
        .iter()
        .enumerate()
        .fold(T::zero(), |s, (n, &i)| s + table.log_prob_at(n, i))
}

/// Log of the Metropolis-Hastings ratio, clipped at zero.
#[inline]
pub fn log_acceptance<T: Real>(f_x: T, f_xp: T, log_q_fwd: T, log_q_rev: T) -> T {
    ((f_xp - f_x) + (log_q_rev - log_q_fwd)).min(T::zero())
}

/// `min{1, exp(f(x') − f(x)) q(x|x') / q(x'|x)}` evaluated in the log domain.
#[inline]
pub fn acceptance_probability<T: Real>(f_x: T, f_xp: T, log_q_fwd: T, log_q_rev: T) -> T {
    let l = log_acceptance(f_x, f_xp, log_q_fwd, log_q_rev);
    if l >= T::zero() {
        T::one()
    } else {
        l.exp()
    }
}

/// Tempered metric `−‖y − Hx‖² / (τσ²)` at real-valued `x`.
pub fn metric_f<T: Real>(instance: &DetectionInstance<T>, x: &[T], tau: T) -> Result<T> {
    let hx = instance.h().matvec(x)?;
    let r: Vec<T> = instance.y().iter().zip(&hx).map(|(&y, &v)| y - v).collect();
    Ok(-norm_sq(&r) / (tau * instance.sigma2()))
}

/// Gradient of the continuous relaxation, `(2 / (τσ²)) Hᵀ(y − Hx)`.
pub fn gradient_f<T: Real>(instance: &DetectionInstance<T>, x: &[T], tau: T) -> Result<Vec<T>> {
    let hx = instance.h().matvec(x)?;
    let r: Vec<T> = instance.y().iter().zip(&hx).map(|(&y, &v)| y - v).collect();
    let c = T::lit(2.0) / (tau * instance.sigma2());
    Ok(instance.h().tr_matvec(&r)?.into_iter().map(|v| v * c).collect())
}

/// `M = (HᵀH + γI)⁻¹`, computed once per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner<T> {
    m: Matrix<T>,
}

impl<T: Real> Preconditioner<T> {
    #[inline]
    pub fn matrix(&self) -> &Matrix<T> {
        &self.m
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        self.m.matvec(v).expect("preconditioner dimension")
    }
}

pub fn compute_preconditioner<T: Real>(h: &Matrix<T>, gamma_damp: T) -> Result<Preconditioner<T>> {
    if !(gamma_damp > T::zero()) {
        return Err(Error::InvalidArgument("gamma_damp must be positive".into()));
    }
    let mut g = h.gram();
    g.add_diagonal(gamma_damp);
    Ok(Preconditioner { m: g.spd_inverse()? })
}

/// A chain position together with everything the next step reuses.
#[derive(Debug, Clone)]
pub struct ChainState<T> {
    x: Vec<usize>,
    residual: Vec<T>,
    f_x: T,
    grad: Vec<T>,
    proposal: ProposalTable<T>,
    accept_count: usize,
}

impl<T: Real> ChainState<T> {
    #[inline]
    pub fn x(&self) -> &[usize] {
        &self.x
    }

    /// Cached target metric (tempered when `τ > 1`).
    #[inline]
    pub fn f_x(&self) -> T {
        self.f_x
    }

    #[inline]
    pub fn grad(&self) -> &[T] {
        &self.grad
    }

    #[inline]
    pub fn proposal(&self) -> &ProposalTable<T> {
        &self.proposal
    }

    #[inline]
    pub fn residual(&self) -> &[T] {
        &self.residual
    }

    #[inline]
    pub fn accept_count(&self) -> usize {
        self.accept_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    FinalOnly,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub x: Vec<usize>,
    /// Untempered metric `f(x)`.
    pub f: T,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun<T> {
    pub final_x: Vec<usize>,
    pub final_f: T,
    pub accept_count: usize,
    pub trajectory: Option<Vec<TrajectoryPoint<T>>>,
}

/// DMALA kernel bound to one instance. Shared read-only across chains.
#[derive(Debug, Clone)]
pub struct DmalaSampler<'a, T> {
    instance: &'a DetectionInstance<T>,
    config: SamplerConfig<T>,
    preconditioner: Option<Preconditioner<T>>,
    /// `1 / (τσ²)`
    precision: T,
}

impl<'a, T: Real> DmalaSampler<'a, T> {
    pub fn new(instance: &'a DetectionInstance<T>, config: SamplerConfig<T>) -> Result<Self> {
        config.validate()?;
        let preconditioner = match config.mode {
            SamplerMode::Naive => None,
            SamplerMode::Preconditioned { gamma_damp, .. } => Some(compute_preconditioner(instance.h(), gamma_damp)?),
        };
        let precision = T::one() / (config.tau * instance.sigma2());
        Ok(Self {
            instance,
            config,
            preconditioner,
            precision,
        })
    }

    #[inline]
    pub fn instance(&self) -> &'a DetectionInstance<T> {
        self.instance
    }

    #[inline]
    pub fn config(&self) -> &SamplerConfig<T> {
        &self.config
    }

    pub fn preconditioner(&self) -> Option<&Preconditioner<T>> {
        self.preconditioner.as_ref()
    }

    /// Step size entering the quadratic penalty of the proposal.
    pub fn alpha_effective(&self) -> T {
        match self.config.mode {
            SamplerMode::Naive => self.config.alpha,
            SamplerMode::Preconditioned { beta, .. } => self.config.alpha * beta,
        }
    }

    /// Direction entering the linear term of the proposal.
    pub fn effective_gradient(&self, grad: &[T]) -> Vec<T> {
        match (&self.preconditioner, self.config.mode) {
            (Some(p), SamplerMode::Preconditioned { beta, .. }) => {
                p.apply(grad).into_iter().map(|v| v / beta).collect()
            }
            _ => grad.to_vec(),
        }
    }

    /// Proposal table the kernel uses at state `x`.
    pub fn proposal_at(&self, x: &[usize]) -> ProposalTable<T> {
        self.state_at(x.to_vec()).proposal
    }

    /// Tempered metric at `x`.
    pub fn target_metric(&self, x: &[usize]) -> T {
        -norm_sq(&self.instance.residual(x)) * self.precision
    }

    pub fn state_at(&self, x: Vec<usize>) -> ChainState<T> {
        let residual = self.instance.residual(&x);
        self.state_from_residual(x, residual, 0)
    }

    fn state_from_residual(&self, x: Vec<usize>, residual: Vec<T>, accept_count: usize) -> ChainState<T> {
        let f_x = -norm_sq(&residual) * self.precision;
        let c = T::lit(2.0) * self.precision;
        let grad: Vec<T> = self
            .instance
            .h()
            .tr_matvec(&residual)
            .expect("residual length")
            .into_iter()
            .map(|v| v * c)
            .collect();
        let proposal = build_proposal(
            self.instance.constellation().alphabet(),
            &x,
            &self.effective_gradient(&grad),
            self.alpha_effective(),
        );
        ChainState {
            x,
            residual,
            f_x,
            grad,
            proposal,
            accept_count,
        }
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> ChainState<T> {
        let x = match self.config.init {
            Initialization::Uniform => (0..self.instance.n())
                .map(|_| rng.random_range(0..self.instance.q()))
                .collect(),
            Initialization::MmseRounded => mmse_detect(self.instance).1,
        };
        self.state_at(x)
    }

    /// One DMALA transition. Rejected proposals keep the current table;
    /// accepted ones install the reverse-side table built at `x'`.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut ChainState<T>, rng: &mut R) -> bool {
        self.transition(state, rng, true)
    }

    /// Discrete Langevin move without the Metropolis-Hastings correction.
    pub fn step_unadjusted<R: Rng + ?Sized>(&self, state: &mut ChainState<T>, rng: &mut R) -> bool {
        self.transition(state, rng, false)
    }

    fn transition<R: Rng + ?Sized>(&self, state: &mut ChainState<T>, rng: &mut R, adjust: bool) -> bool {
        let (xp, log_q_fwd) = sample_proposal(&state.proposal, rng);
        let mut residual = state.residual.clone();
        let alphabet = self.instance.constellation().alphabet();
        let h = self.instance.h();
        for (j, (&new, &old)) in xp.iter().zip(&state.x).enumerate() {
            if new != old {
                let delta = alphabet[new] - alphabet[old];
                for (i, r) in residual.iter_mut().enumerate() {
                    *r = *r - h[(i, j)] * delta;
                }
            }
        }
        let candidate = self.state_from_residual(xp, residual, state.accept_count + 1);
        let u: T = uniform(rng);
        let accept = if adjust {
            let log_q_rev = proposal_log_prob(&candidate.proposal, &state.x);
            u < acceptance_probability(state.f_x, candidate.f_x, log_q_fwd, log_q_rev)
        } else {
            true
        };
        if accept {
            *state = candidate;
        }
        accept
    }

    /// Runs one chain of `iterations` states from a fresh initialization.
    pub fn run_chain<R: Rng + ?Sized>(&self, rng: &mut R, record: Record) -> ChainRun<T> {
        let mut state = self.initial_state(rng);
        let tau = self.config.tau;
        let mut trajectory = (record == Record::Trajectory).then(|| {
            vec![TrajectoryPoint {
                x: state.x.clone(),
                f: state.f_x * tau,
                accepted: false,
            }]
        });
        for _ in 1..self.config.iterations {
            let accepted = self.step(&mut state, rng);
            if let Some(t) = trajectory.as_mut() {
                t.push(TrajectoryPoint {
                    x: state.x.clone(),
                    f: state.f_x * tau,
                    accepted,
                });
            }
        }
        ChainRun {
            final_f: state.f_x * tau,
            final_x: state.x,
            accept_count: state.accept_count,
            trajectory,
        }
    }

    /// Final samples of `n_chains` independent chains; chain `i` uses stream `(seed, i)`.
    pub fn run_parallel_chains(&self) -> SampleList<T> {
        self.collect(Collection::FinalOnly, true)
    }

    /// Same as [`run_parallel_chains`](Self::run_parallel_chains) on the calling thread.
    pub fn run_chains_serial(&self) -> SampleList<T> {
        self.collect(Collection::FinalOnly, false)
    }

    pub fn collect(&self, collection: Collection, parallel: bool) -> SampleList<T> {
        let samples = collect_samples(
            self,
            self.config.n_chains,
            self.config.iterations,
            collection,
            parallel,
        );
        SampleList::from_samples(self.instance, samples, self.config.tau)
            .expect("at least one chain")
    }
}

impl<T: Real> Kernel for DmalaSampler<'_, T> {
    type State = ChainState<T>;

    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State {
        self.initial_state(rng)
    }

    fn advance<R: Rng + ?Sized>(&self, state: &mut Self::State, rng: &mut R) -> bool {
        self.step(state, rng)
    }

    fn symbols<'s>(&self, state: &'s Self::State) -> &'s [usize] {
        &state.x
    }
}
