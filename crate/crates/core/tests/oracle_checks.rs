mod common;

use common::{qpsk_2x2, tv};
use dmala::oracle::{
    build_transition_matrix, build_unadjusted_matrix, convergence_rate, detailed_balance_check,
    empirical_distribution, exact_llr, exact_posterior, map_detect, point_mass, stationarity_error,
    tv_decay_curve, StateSpace,
};
use dmala::{DmalaSampler, SamplerConfig};

#[test]
fn posterior_matches_nested_loop_enumeration() {
    for seed in 0..5 {
        let inst = qpsk_2x2(seed, 8.0);
        let a = inst.constellation().alphabet().to_vec();
        let mut direct = Vec::new();
        for i0 in 0..2 {
            for i1 in 0..2 {
                for i2 in 0..2 {
                    for i3 in 0..2 {
                        let x = [a[i0], a[i1], a[i2], a[i3]];
                        let mut e = 0.0;
                        for r in 0..4 {
                            let hx: f64 = (0..4).map(|c| inst.h()[(r, c)] * x[c]).sum();
                            e += (inst.y()[r] - hx).powi(2);
                        }
                        direct.push((-e / inst.sigma2()).exp());
                    }
                }
            }
        }
        let z: f64 = direct.iter().sum();
        let pi = exact_posterior(&inst, 1.0).unwrap().pi;
        for (p, d) in pi.iter().zip(&direct) {
            assert!((p - d / z).abs() < 1e-12);
        }
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pi.iter().all(|&p| p > 0.0));
    }
}

#[test]
fn exact_llr_matches_linear_domain_sums() {
    for seed in 0..5 {
        let inst = common::instance(4, 4, 2, seed, 4.0);
        let space = StateSpace::for_instance(&inst).unwrap();
        let c = inst.constellation();
        let mut plus = vec![0.0; inst.n_bits()];
        let mut minus = vec![0.0; inst.n_bits()];
        for x in space.states() {
            let w = inst.metric(&x).exp();
            for (k, &b) in c.bits_from_indices(&x).iter().enumerate() {
                if b > 0 {
                    plus[k] += w;
                } else {
                    minus[k] += w;
                }
            }
        }
        let l = exact_llr(&inst, 1e3).unwrap();
        for k in 0..inst.n_bits() {
            assert!((l.llrs[k] - (plus[k] / minus[k]).ln()).abs() < 1e-8);
        }
    }
}

#[test]
fn kernels_balance_and_keep_posterior_invariant() {
    for seed in 0..20 {
        let inst = qpsk_2x2(seed, 8.0);
        let pi = exact_posterior(&inst, 1.0).unwrap().pi;
        for config in [SamplerConfig::recommended(&inst), SamplerConfig::recommended_naive(&inst)] {
            let s = DmalaSampler::new(&inst, config).unwrap();
            let p = build_transition_matrix(&s).unwrap();
            assert!(p.max_row_sum_error() <= 1e-12);
            assert!(detailed_balance_check(&p, &pi).unwrap() <= 1e-12);
            assert!(stationarity_error(&p, &pi) <= 1e-12);
            let spec = convergence_rate(&p, &pi).unwrap();
            assert!((spec.eigenvalues[0] - 1.0).abs() <= 1e-10);
            assert!(spec.r > 0.0 && spec.r < 1.0);
        }
    }
}

#[test]
fn sixteen_qam_kernel_balance() {
    let inst = common::instance(2, 2, 4, 1, 12.0);
    let pi = exact_posterior(&inst, 1.0).unwrap().pi;
    let s = DmalaSampler::new(&inst, SamplerConfig::recommended(&inst)).unwrap();
    let p = build_transition_matrix(&s).unwrap();
    assert_eq!(p.len(), 256);
    assert!(detailed_balance_check(&p, &pi).unwrap() <= 1e-12);
    assert!(stationarity_error(&p, &pi) <= 1e-12);
    let stat = p.stationary_distribution().unwrap();
    assert!(tv(&stat, &pi) < 1e-9);
}

#[test]
fn late_tv_ratio_tracks_second_eigenvalue() {
    for seed in 0..5 {
        let inst = qpsk_2x2(seed, 8.0);
        let pi = exact_posterior(&inst, 1.0).unwrap().pi;
        let s = DmalaSampler::new(&inst, SamplerConfig::recommended(&inst)).unwrap();
        let p = build_transition_matrix(&s).unwrap();
        let r = convergence_rate(&p, &pi).unwrap().r;
        let curve = tv_decay_curve(&p, &pi, &point_mass(16, 0), 2000);
        // last ratio before TV drops into the 1e-10 range
        let t = curve.iter().position(|&v| v < 1e-10).expect("decays") - 1;
        let ratio = curve[t] / curve[t - 1];
        assert!((ratio - r).abs() < 1e-3, "seed {seed}: {ratio} vs {r}");
        assert!(curve[t] < curve[0]);
    }
}

#[test]
fn unadjusted_kernel_is_biased() {
    let mut biased = 0;
    for seed in 0..40 {
        let inst = qpsk_2x2(1000 + seed, 8.0);
        let pi = exact_posterior(&inst, 1.0).unwrap().pi;
        let s = DmalaSampler::new(&inst, SamplerConfig::recommended(&inst)).unwrap();
        let q = build_unadjusted_matrix(&s).unwrap();
        assert!(q.max_row_sum_error() < 1e-12);
        if stationarity_error(&q, &pi) > 1e-3 && detailed_balance_check(&q, &pi).unwrap() > 1e-3 {
            biased += 1;
        }
        let stat = q.stationary_distribution().unwrap();
        let plateau = tv_decay_curve(&q, &pi, &point_mass(16, 3), 3000);
        assert!((plateau[2999] - tv(&stat, &pi)).abs() < 1e-6);
    }
    assert!(biased >= 38, "{biased}/40");
}

#[test]
fn first_step_distribution_is_uniform_initialization() {
    let inst = qpsk_2x2(21, 8.0);
    let space = StateSpace::for_instance(&inst).unwrap();
    let s = DmalaSampler::new(&inst, SamplerConfig::recommended(&inst).with_seed(21)).unwrap();
    let emp: Vec<f64> = empirical_distribution(&s, &space, 100_000, 1);
    let uniform = vec![1.0 / 16.0; 16];
    // 3 binomial standard deviations summed over cells
    let bound = 3.0 * 0.5 * 16.0 * (1.0 / 16.0 * 15.0 / 16.0 / 1e5f64).sqrt();
    assert!(tv(&emp, &uniform) < bound);
    assert!((emp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn exhaustive_map_is_posterior_mode() {
    for seed in 0..5 {
        let inst = common::instance(4, 4, 2, seed, 6.0);
        let space = StateSpace::for_instance(&inst).unwrap();
        let pi = exact_posterior(&inst, 1.0).unwrap().pi;
        let best = (0..space.len()).max_by(|&a, &b| pi[a].total_cmp(&pi[b])).unwrap();
        assert_eq!(space.index(&map_detect(&inst).unwrap()), best);
    }
}
