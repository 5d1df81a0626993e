//! Brute-force ground truth over the whole state space `A^N`.
//!
//! Everything here enumerates all `Q^N` states, so it is limited to
//! [`STATE_SPACE_CAP`] states. The transition matrix is built from the
//! sampler's own proposal and acceptance code, which makes the spectral and
//! detailed-balance checks certify the production kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::llr::{LlrVector, LseAccumulator, LseMode};
use crate::model::DetectionInstance;
use crate::sampler::{acceptance_probability, proposal_log_prob, DmalaSampler, ProposalTable};
use crate::scalar::{log_sum_exp, Real};

pub const STATE_SPACE_CAP: usize = 65_536;

/// Mixed-radix enumeration of `A^N`; coordinate 0 is the most significant digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    q: usize,
    n: usize,
    len: usize,
}

impl StateSpace {
    pub fn new(q: usize, n: usize) -> Result<Self> {
        let size = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if size > STATE_SPACE_CAP as u128 {
            return Err(Error::StateSpaceTooLarge {
                size,
                cap: STATE_SPACE_CAP,
            });
        }
        Ok(Self {
            q,
            n,
            len: size as usize,
        })
    }

    pub fn for_instance<T: Real>(instance: &DetectionInstance<T>) -> Result<Self> {
        Self::new(instance.q(), instance.n())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn state(&self, mut index: usize) -> Vec<usize> {
        let mut x = vec![0; self.n];
        for slot in x.iter_mut().rev() {
            *slot = index % self.q;
            index /= self.q;
        }
        x
    }

    pub fn index(&self, x: &[usize]) -> usize {
        x.iter().fold(0, |acc, &d| acc * self.q + d)
    }

    pub fn states(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len).map(|i| self.state(i))
    }
}

/// Exact (possibly tempered) posterior over the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTable<T> {
    pub pi: Vec<T>,
}

/// Row-stochastic `Q^N × Q^N` kernel, `p[(i, j)] = P(x_j | x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    pub p: Matrix<T>,
}

impl<T: Real> TransitionMatrix<T> {
    pub fn len(&self) -> usize {
        self.p.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.rows() == 0
    }

    /// Row vector times the kernel.
    pub fn propagate(&self, dist: &[T]) -> Vec<T> {
        self.p.tr_matvec(dist).expect("distribution length")
    }

    /// Stationary distribution from `π(P − I) = 0`, `Σπ = 1`.
    pub fn stationary_distribution(&self) -> Result<Vec<T>> {
        let n = self.len();
        // rows of the system are columns of (P − I); the last equation is the normalization
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == n - 1 {
                T::one()
            } else {
                self.p[(j, i)] - if i == j { T::one() } else { T::zero() }
            }
        });
        let mut b = vec![T::zero(); n];
        b[n - 1] = T::one();
        a.lu_solve(&b)
    }

    pub fn max_row_sum_error(&self) -> T {
        (0..self.len())
            .map(|i| (self.p.row(i).iter().copied().sum::<T>() - T::one()).abs())
            .fold(T::zero(), T::max)
    }
}

fn tempered_log_weights<T: Real>(instance: &DetectionInstance<T>, space: &StateSpace, tau: T) -> Vec<T> {
    (0..space.len())
        .into_par_iter()
        .map(|i| instance.metric(&space.state(i)) / tau)
        .collect()
}

/// Normalized `exp(f(x)/τ)` over every state.
pub fn exact_posterior<T: Real>(instance: &DetectionInstance<T>, tau: T) -> Result<PosteriorTable<T>> {
    let space = StateSpace::for_instance(instance)?;
    let logw = tempered_log_weights(instance, &space, tau);
    let z = log_sum_exp(&logw);
    Ok(PosteriorTable {
        pi: logw.iter().map(|&l| (l - z).exp()).collect(),
    })
}

/// Exact per-bit posterior LLRs by summing over both halves of the space.
pub fn exact_llr<T: Real>(instance: &DetectionInstance<T>, clip: T) -> Result<LlrVector<T>> {
    let space = StateSpace::for_instance(instance)?;
    let logw = tempered_log_weights(instance, &space, T::one());
    let c = instance.constellation();
    let bps = c.bits_per_symbol();
    let mut plus = vec![LseAccumulator::new(LseMode::Exact); instance.n_bits()];
    let mut minus = plus.clone();
    for (i, &f) in logw.iter().enumerate() {
        for (n, &xi) in space.state(i).iter().enumerate() {
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
    let raw = plus.iter().zip(&minus).map(|(p, m)| p.value() - m.value()).collect();
    Ok(LlrVector::from_raw(raw, clip))
}

/// Exhaustive maximum-a-posteriori hard decision (minimum residual norm).
///
/// Walks the space depth-first, updating the residual one column at a time.
/// Ties keep the first state in enumeration order.
pub fn map_detect<T: Real>(instance: &DetectionInstance<T>) -> Result<Vec<usize>> {
    StateSpace::for_instance(instance)?;
    let n = instance.n();
    let m = instance.m();
    let alphabet = instance.constellation().alphabet();
    let h = instance.h();
    let columns: Vec<Vec<T>> = (0..n).map(|j| h.column(j)).collect();
    // residual stack: level d holds y − Σ_{k<d} a_k h_k
    let mut stack = vec![vec![T::zero(); m]; n + 1];
    stack[0].copy_from_slice(instance.y());
    let mut digits = vec![0usize; n];
    let mut best = T::infinity();
    let mut best_x = vec![0; n];

    fn descend<T: Real>(
        d: usize,
        stack: &mut [Vec<T>],
        digits: &mut [usize],
        columns: &[Vec<T>],
        alphabet: &[T],
        best: &mut T,
        best_x: &mut [usize],
    ) {
        let n = digits.len();
        for (i, &a) in alphabet.iter().enumerate() {
            digits[d] = i;
            let (head, tail) = stack.split_at_mut(d + 1);
            let prev = &head[d];
            let next = &mut tail[0];
            for ((o, &p), &c) in next.iter_mut().zip(prev.iter()).zip(&columns[d]) {
                *o = p - a * c;
            }
            if d + 1 == n {
                let cost = next.iter().fold(T::zero(), |s, &v| s + v * v);
                if cost < *best {
                    *best = cost;
                    best_x.copy_from_slice(digits);
                }
            } else {
                descend(d + 1, stack, digits, columns, alphabet, best, best_x);
            }
        }
    }

    descend(0, &mut stack, &mut digits, &columns, alphabet, &mut best, &mut best_x);
    Ok(best_x)
}

/// Per-state caches needed to evaluate the kernel between any two states.
struct KernelCache<T> {
    f: Vec<T>,
    tables: Vec<ProposalTable<T>>,
}

fn kernel_cache<T: Real>(sampler: &DmalaSampler<'_, T>, space: &StateSpace) -> KernelCache<T> {
    let (f, tables) = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let state = sampler.state_at(space.state(i));
            (state.f_x(), state.proposal().clone())
        })
        .unzip();
    KernelCache { f, tables }
}

fn assemble<T: Real>(space: &StateSpace, off_diagonal: impl Fn(usize, usize, &[usize], &[usize]) -> T + Sync) -> Matrix<T> {
    let n = space.len();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = space.state(i);
            let mut row = vec![T::zero(); n];
            let mut off = T::zero();
            for (j, slot) in row.iter_mut().enumerate() {
                if j != i {
                    let v = off_diagonal(i, j, &xi, &space.state(j));
                    *slot = v;
                    off = off + v;
                }
            }
            row[i] = T::one() - off;
            row
        })
        .collect();
    Matrix::from_rows(&rows).expect("square kernel")
}

/// DMALA kernel: `P(x'|x) = q(x'|x) A(x'|x)` off the diagonal, complement on it.
pub fn build_transition_matrix<T: Real>(sampler: &DmalaSampler<'_, T>) -> Result<TransitionMatrix<T>> {
    let space = StateSpace::for_instance(sampler.instance())?;
    let cache = kernel_cache(sampler, &space);
    let p = assemble(&space, |i, j, xi, xj| {
        let log_fwd = proposal_log_prob(&cache.tables[i], xj);
        let log_rev = proposal_log_prob(&cache.tables[j], xi);
        log_fwd.exp() * acceptance_probability(cache.f[i], cache.f[j], log_fwd, log_rev)
    });
    Ok(TransitionMatrix { p })
}

/// Kernel of the same proposal with every move accepted: `P(x'|x) = q(x'|x)`.
pub fn build_unadjusted_matrix<T: Real>(sampler: &DmalaSampler<'_, T>) -> Result<TransitionMatrix<T>> {
    let space = StateSpace::for_instance(sampler.instance())?;
    let cache = kernel_cache(sampler, &space);
    let p = assemble(&space, |i, _, _, xj| proposal_log_prob(&cache.tables[i], xj).exp());
    Ok(TransitionMatrix { p })
}

/// `max |π(x)P(x'|x) − π(x')P(x|x')|` over all pairs.
pub fn detailed_balance_check<T: Real>(p: &TransitionMatrix<T>, pi: &[T]) -> Result<T> {
    if pi.len() != p.len() {
        return Err(Error::DimensionMismatch("pi length differs from kernel size".into()));
    }
    let n = p.len();
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (pi[i] * p.p[(i, j)] - pi[j] * p.p[(j, i)]).abs();
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// `‖πP − π‖_∞`.
pub fn stationarity_error<T: Real>(p: &TransitionMatrix<T>, pi: &[T]) -> T {
    p.propagate(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (*a - *b).abs())
        .fold(T::zero(), T::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<T> {
    /// Second-largest eigenvalue modulus.
    pub r: T,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<T>,
}

/// Spectrum of a kernel reversible with respect to `pi`.
///
/// Decomposes the symmetrized `D^{1/2} P D^{−1/2}`, `D = diag(π)`, which is
/// similar to `P` and therefore has the same (real) eigenvalues.
pub fn convergence_rate<T: Real>(p: &TransitionMatrix<T>, pi: &[T]) -> Result<Spectrum<T>> {
    let n = p.len();
    if pi.len() != n {
        return Err(Error::DimensionMismatch("pi length differs from kernel size".into()));
    }
    if n == 1 {
        return Ok(Spectrum {
            r: T::zero(),
            eigenvalues: vec![p.p[(0, 0)]],
        });
    }
    let sqrt_pi: Vec<T> = pi.iter().map(|v| v.sqrt()).collect();
    let s = Matrix::from_fn(n, n, |i, j| {
        let a = sqrt_pi[i] * p.p[(i, j)] / sqrt_pi[j];
        let b = sqrt_pi[j] * p.p[(j, i)] / sqrt_pi[i];
        (a + b) / T::lit(2.0)
    });
    let (eigenvalues, _) = s.symmetric_eigen()?;
    let lead = eigenvalues[0];
    if (lead - T::one()).abs() > T::lit(1e-8) {
        return Err(Error::BrokenKernel(lead.to_f64_lossy()));
    }
    // the eigenvalue 1 is removed once; the rest determine the rate
    let r = eigenvalues[1..]
        .iter()
        .map(|v| v.abs())
        .fold(T::zero(), T::max);
    Ok(Spectrum { r, eigenvalues })
}

/// `½ Σ |p1 − p2|`.
pub fn tv_distance<T: Real>(p1: &[T], p2: &[T]) -> T {
    debug_assert_eq!(p1.len(), p2.len());
    p1.iter()
        .zip(p2)
        .map(|(&a, &b)| (a - b).abs())
        .sum::<T>()
        / T::lit(2.0)
}

pub fn point_mass<T: Real>(len: usize, index: usize) -> Vec<T> {
    let mut v = vec![T::zero(); len];
    v[index] = T::one();
    v
}

/// `TV(start · P^t, π)` for `t = 1..=t_max`.
pub fn tv_decay_curve<T: Real>(p: &TransitionMatrix<T>, pi: &[T], start: &[T], t_max: usize) -> Vec<T> {
    let mut dist = start.to_vec();
    (0..t_max)
        .map(|_| {
            dist = p.propagate(&dist);
            tv_distance(&dist, pi)
        })
        .collect()
}

/// Normalized histogram of where `n_chains` chains sit at step `t`
/// (step 1 is the initialization).
pub fn empirical_distribution<T: Real, K: crate::chains::Kernel>(
    kernel: &K,
    space: &StateSpace,
    n_chains: usize,
    t: usize,
) -> Vec<T> {
    let counts = crate::chains::state_histograms(kernel, n_chains, t.max(1), space.len(), |x| space.index(x));
    let total = T::of_usize(n_chains);
    counts[t.max(1) - 1]
        .iter()
        .map(|&c| T::lit(c as f64) / total)
        .collect()
}
