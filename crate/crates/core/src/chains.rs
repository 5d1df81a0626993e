//! Running many independent chains of any discrete kernel.
//!
//! Chain `i` draws everything (initialization included) from stream
//! `(seed, i)`, and results are gathered by chain index, so the output does
//! not depend on how many threads execute the chains.

use rand::Rng;
use rayon::prelude::*;

use crate::rng::{stream, StreamRng};

/// A Markov kernel on symbol-index vectors.
pub trait Kernel: Sync {
    type State: Send;

    fn seed(&self) -> u64;

    fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Moves `state` one step; returns whether a proposal was accepted.
    fn advance<R: Rng + ?Sized>(&self, state: &mut Self::State, rng: &mut R) -> bool;

    fn symbols<'s>(&self, state: &'s Self::State) -> &'s [usize];
}

/// Which states of each chain end up in the sample list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collection {
    /// Only the final state `x^(T)`.
    FinalOnly,
    /// Every state `x^(t)` with `t > burn_in` (1-based).
    AfterBurnIn(usize),
}

#[inline]
pub fn chain_rng(seed: u64, chain: usize) -> StreamRng {
    stream(seed, &[chain as u64])
}

fn run_one<K: Kernel>(kernel: &K, chain: usize, iterations: usize, collection: Collection) -> Vec<Vec<usize>> {
    let mut rng = chain_rng(kernel.seed(), chain);
    let mut state = kernel.init(&mut rng);
    let mut out = Vec::new();
    let keep = |t: usize| match collection {
        Collection::FinalOnly => t == iterations,
        Collection::AfterBurnIn(b) => t > b,
    };
    if keep(1) {
        out.push(kernel.symbols(&state).to_vec());
    }
    for t in 2..=iterations {
        kernel.advance(&mut state, &mut rng);
        if keep(t) {
            out.push(kernel.symbols(&state).to_vec());
        }
    }
    out
}

/// Samples from `n_chains` chains of `iterations` states each, chain-major.
pub fn collect_samples<K: Kernel>(
    kernel: &K,
    n_chains: usize,
    iterations: usize,
    collection: Collection,
    parallel: bool,
) -> Vec<Vec<usize>> {
    if parallel {
        (0..n_chains)
            .into_par_iter()
            .map(|i| run_one(kernel, i, iterations, collection))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    } else {
        (0..n_chains)
            .flat_map(|i| run_one(kernel, i, iterations, collection))
            .collect()
    }
}

/// Visit counts per step: `counts[t-1][s]` is how many chains sit in state
/// `s` at step `t` (step 1 is the initialization).
///
/// `index` maps a symbol vector to its state index in `0..n_states`.
pub fn state_histograms<K: Kernel>(
    kernel: &K,
    n_chains: usize,
    t_max: usize,
    n_states: usize,
    index: impl Fn(&[usize]) -> usize + Sync,
) -> Vec<Vec<u64>> {
    const BLOCK: usize = 1024;
    let blocks = n_chains.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut counts = vec![vec![0u64; n_states]; t_max];
            for chain in (b * BLOCK)..((b + 1) * BLOCK).min(n_chains) {
                let mut rng = chain_rng(kernel.seed(), chain);
                let mut state = kernel.init(&mut rng);
                counts[0][index(kernel.symbols(&state))] += 1;
                for row in counts.iter_mut().skip(1) {
                    kernel.advance(&mut state, &mut rng);
                    row[index(kernel.symbols(&state))] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![vec![0u64; n_states]; t_max],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(&b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        )
}
