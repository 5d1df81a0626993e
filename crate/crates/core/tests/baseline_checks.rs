mod common;

use common::{qpsk_2x2, tv};
use dmala::chains::chain_rng;
use dmala::oracle::{build_unadjusted_matrix, exact_posterior, StateSpace};
use dmala::{DmalaSampler, GibbsSampler, Kernel, SamplerConfig, ScanOrder, UnadjustedDla};

#[test]
fn gibbs_long_run_frequencies_match_posterior() {
    for scan in [ScanOrder::Systematic, ScanOrder::Random] {
        let inst = qpsk_2x2(30, 8.0);
        let space = StateSpace::for_instance(&inst).unwrap();
        let pi = exact_posterior(&inst, 1.0).unwrap().pi;
        let g = GibbsSampler::new(&inst, 1.0, scan, 30);
        let mut rng = chain_rng(30, 0);
        let mut state = g.init(&mut rng);
        let mut freq = vec![0.0; space.len()];
        let sweeps = 100_000;
        for _ in 0..sweeps {
            g.advance(&mut state, &mut rng);
            freq[space.index(state.x())] += 1.0 / sweeps as f64;
        }
        assert!(tv(&freq, &pi) < 0.02, "{scan:?}");
    }
}

#[test]
fn unadjusted_chain_follows_its_own_biased_law() {
    let inst = qpsk_2x2(31, 8.0);
    let space = StateSpace::for_instance(&inst).unwrap();
    let pi = exact_posterior(&inst, 1.0).unwrap().pi;
    let s = DmalaSampler::new(&inst, SamplerConfig::recommended(&inst).with_seed(31)).unwrap();
    let biased = build_unadjusted_matrix(&s).unwrap().stationary_distribution().unwrap();
    let u = UnadjustedDla::new(s);
    let mut rng = chain_rng(31, 0);
    let mut state = u.init(&mut rng);
    let mut freq = vec![0.0; space.len()];
    let steps = 200_000;
    for _ in 0..steps {
        assert!(u.advance(&mut state, &mut rng));
        freq[space.index(state.x())] += 1.0 / steps as f64;
    }
    let gap = tv(&biased, &pi);
    assert!(gap > 0.01);
    assert!(tv(&freq, &biased) < gap / 2.0);
}
