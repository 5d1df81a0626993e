#![allow(dead_code)]

use dmala::rng::stream;
use dmala::{ChannelSpec, DetectionInstance64};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn qpsk_2x2(seed: u64, snr_db: f64) -> DetectionInstance64 {
    DetectionInstance64::simulate(&ChannelSpec::rayleigh(2, 2), 2, snr_db, &mut stream(seed, &[])).unwrap()
}

pub fn instance(nt: usize, nr: usize, q: usize, seed: u64, snr_db: f64) -> DetectionInstance64 {
    DetectionInstance64::simulate(&ChannelSpec::rayleigh(nt, nr), q, snr_db, &mut stream(seed, &[])).unwrap()
}

/// Pearson goodness-of-fit p-value. Cells with expected count below 5 are
/// pooled into a single cell before the statistic is formed.
pub fn chi_square_p_value(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n;
        if e < 5.0 {
            pooled_obs += c as f64;
            pooled_exp += e;
        } else {
            cells.push((c as f64, e));
        }
    }
    if pooled_exp > 0.0 {
        cells.push((pooled_obs, pooled_exp));
    }
    if cells.len() < 2 {
        return 1.0;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (cells.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}
