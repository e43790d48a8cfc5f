use lockstep_hmc::diagnostics::{ess, StreamingMoments, TraceRecorder};
use lockstep_hmc::model::{Dataset, GaussianTarget, LogDensity, SparseLogisticRegression};
use lockstep_hmc::sampler::*;
use lockstep_hmc::{ChainMatrix, RandomKey};

fn random_matrix(key: RandomKey, chains: usize, dim: usize, scale: f64) -> ChainMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..chains)
        .map(|c| key.child(c as u64).normal(dim).iter().map(|v| v * scale).collect())
        .collect();
    ChainMatrix::from_rows(&rows)
}

fn small_sparse_model() -> SparseLogisticRegression<f64> {
    let data = Dataset::synthetic(RandomKey::from_seed(17), 200, 5, 0.4)
        .unwrap()
        .dataset;
    SparseLogisticRegression::new(&data)
}

fn reversibility_residual<M: LogDensity<f64>>(target: &M, z: Vec<f64>, m: Vec<f64>, eps: f64, steps: usize) -> f64 {
    let mut s = LeapfrogState::new(target, z.clone(), m.clone());
    integrate(target, eps, steps, &mut s, None);
    s.m.iter_mut().for_each(|v| *v = -*v);
    integrate(target, eps, steps, &mut s, None);
    let dz = s.z.iter().zip(&z).map(|(a, b)| (a - b).abs());
    let dm = s.m.iter().zip(&m).map(|(a, b)| (a + b).abs());
    dz.chain(dm).fold(0.0, f64::max)
}

#[test]
fn leapfrog_is_reversible() {
    let root = RandomKey::from_seed(40);
    for i in 0..10u64 {
        let keys = root.child(i).split(3).unwrap();
        let scales: Vec<f64> = keys[0].uniform(6).iter().map(|u| 0.5 + 3.0 * u).collect();
        let t = GaussianTarget::<f64>::with_scales(&scales);
        let r = reversibility_residual(&t, keys[1].normal(6), keys[2].normal(6), 0.2, 25);
        assert!(r < 1e-8, "gaussian residual {r}");
    }
    let m = small_sparse_model();
    for i in 0..5u64 {
        let keys = root.child(100 + i).split(2).unwrap();
        let z: Vec<f64> = keys[0].normal(m.dim()).iter().map(|v| 0.3 * v).collect();
        let r = reversibility_residual(&m, z, keys[1].normal(m.dim()), 0.01, 20);
        assert!(r < 1e-8, "sparse residual {r}");
    }
}

fn max_energy_error(eps: f64, steps: usize) -> f64 {
    let t = GaussianTarget::<f64>::standard(4);
    let mut s = LeapfrogState::new(&t, vec![0.8, -0.3, 1.2, 0.1], vec![0.5, 1.0, -0.7, 0.2]);
    let h0 = s.energy(None);
    let mut worst = 0.0f64;
    for _ in 0..steps {
        leapfrog_step(&t, eps, &mut s, None);
        worst = worst.max((s.energy(None) - h0).abs());
    }
    worst
}

#[test]
fn energy_error_is_second_order() {
    let ratio = max_energy_error(0.1, 50) / max_energy_error(0.05, 100);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn zero_step_size_is_identity() {
    let t = GaussianTarget::<f64>::standard(3);
    let z = random_matrix(RandomKey::from_seed(1), 4, 3, 1.0);
    let mut batch = ChainBatch::new(&t, z.clone()).unwrap();
    let keys = RandomKey::from_seed(2).split(2).unwrap();
    for stable in [false, true] {
        let cfg = HmcConfig::new(0.0, 5).with_stable_ratio(stable);
        let out = hmc_step(&t, &cfg, &mut batch, keys[0], keys[1]).unwrap();
        assert_eq!(out.z, z);
        assert!(out.log_accept_ratio.iter().all(|&r| r == 0.0));
        assert!(out.is_accepted.iter().all(|&a| a));
    }
}

#[test]
fn non_negative_log_ratio_always_accepts() {
    let t = GaussianTarget::<f64>::standard(2);
    let cfg = HmcConfig::new(0.9, 3);
    let mut seen = 0;
    let mut sink = |d: &Draw<'_, f64>| {
        for (&r, &a) in d.output.log_accept_ratio.iter().zip(&d.output.is_accepted) {
            if r >= 0.0 {
                assert!(a);
                seen += 1;
            }
        }
        Ok(())
    };
    let z = random_matrix(RandomKey::from_seed(3), 16, 2, 1.0);
    run_chains(&t, &cfg, z, RandomKey::from_seed(4), 200, &mut sink).unwrap();
    assert!(seen > 0);
}

#[test]
fn one_step_acceptance_on_standard_normal() {
    let t = GaussianTarget::<f64>::standard(1);
    let cfg = HmcConfig::new(1.0, 1);
    let z = ChainMatrix::from_rows(&[[0.0]]);
    let summary = run_chains(&t, &cfg, z, RandomKey::from_seed(5), 100_000, &mut NullSink).unwrap();
    // E[min(1, exp(-dH))] for one unit leapfrog step from the stationary
    // distribution is 0.9207 (Monte Carlo over 4e6 phase-space points).
    let rate = summary.acceptance_rate();
    assert!((0.90..=0.94).contains(&rate), "acceptance {rate}");
}

#[test]
fn trajectory_length_draws() {
    let key = RandomKey::from_seed(6);
    assert_eq!(draw_trajectory_length(key, 10, false), 10);
    let root = RandomKey::from_seed(7);
    let mut total = 0usize;
    let n = 100_000;
    for i in 0..n {
        let l = draw_trajectory_length(root.child(i), 10, true);
        assert!((1..=20).contains(&l));
        total += l;
    }
    let mean = total as f64 / n as f64;
    assert!((10.3..=10.7).contains(&mean), "mean {mean}");
}

#[test]
fn lockstep_holds_with_shared_jitter() {
    let t = GaussianTarget::<f64>::standard(2);
    let cfg = HmcConfig::new(0.3, 4).with_jitter(true);
    let mut lengths = std::collections::HashSet::new();
    let mut sink = |d: &Draw<'_, f64>| {
        lengths.insert(d.output.num_leapfrog_used);
        Ok(())
    };
    let z = random_matrix(RandomKey::from_seed(8), 64, 2, 1.0);
    run_chains(&t, &cfg, z, RandomKey::from_seed(9), 300, &mut sink).unwrap();
    assert!(lengths.len() > 1, "jitter should vary the length across steps");
}

#[test]
fn per_chain_jitter_trips_lockstep_check() {
    let t = GaussianTarget::<f64>::standard(2);
    let mut cfg = HmcConfig::new(0.3, 4).with_jitter(true);
    cfg.jitter_scope = JitterScope::PerChain;
    let z = random_matrix(RandomKey::from_seed(10), 64, 2, 1.0);
    let err = run_chains(&t, &cfg, z, RandomKey::from_seed(11), 10, &mut NullSink).unwrap_err();
    assert!(matches!(err, SamplerError::LockstepViolation { .. }), "{err}");
}

#[test]
fn chain_trajectory_depends_only_on_its_index() {
    let t = GaussianTarget::<f64>::standard(3);
    let cfg = HmcConfig::new(0.4, 5).with_jitter(true);
    let row = [0.2, -0.5, 1.0];
    let root = RandomKey::from_seed(12);
    let mut solo = TraceRecorder::new(1, 3);
    run_chains(&t, &cfg, ChainMatrix::from_rows(&[row]), root, 50, &mut solo).unwrap();
    let mut pair = TraceRecorder::new(2, 3);
    let z = ChainMatrix::from_rows(&[row, [3.0, 3.0, 3.0]]);
    run_chains(&t, &cfg, z, root, 50, &mut pair).unwrap();
    for draw in 0..50 {
        for p in 0..3 {
            assert_eq!(solo.value(draw, 0, p), pair.value(draw, 0, p));
        }
    }
}

#[test]
fn identical_rows_with_identical_keys_agree() {
    let t = GaussianTarget::<f64>::standard(2);
    let cfg = HmcConfig::new(0.5, 3);
    let z = ChainMatrix::from_rows(&[[0.1, 0.2], [0.1, 0.2]]);
    let key = RandomKey::from_seed(13);
    let a = run_chains(&t, &cfg, z.clone(), key, 40, &mut NullSink).unwrap();
    let b = run_chains(&t, &cfg, z, key, 40, &mut NullSink).unwrap();
    assert_eq!(a.batch, b.batch);
}

#[test]
fn empty_run_leaves_state_unchanged() {
    let t = GaussianTarget::<f64>::standard(2);
    let z = random_matrix(RandomKey::from_seed(14), 3, 2, 1.0);
    let s = run_chains(&t, &HmcConfig::new(0.5, 3), z.clone(), RandomKey::from_seed(1), 0, &mut NullSink)
        .unwrap();
    assert_eq!(s.num_steps, 0);
    assert_eq!(s.batch.z(), &z);
    assert_eq!(s.acceptance_rate(), 0.0);
}

fn pooled_mean_within_mcse(rec: &TraceRecorder, dim: usize) {
    for p in 0..dim {
        let trace = rec.trace(p);
        let n = trace.len() as f64;
        let mean = trace.iter().sum::<f64>() / n;
        let var = trace.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let mcse = (var / ess(trace, rec.chains()).unwrap()).sqrt();
        assert!(mean.abs() < 4.0 * mcse, "dim {p}: mean {mean}, mcse {mcse}");
        assert!((var - 1.0).abs() < 0.1, "dim {p}: variance {var}");
    }
}

#[test]
fn standard_normal_moments_from_overdispersed_start() {
    let t = GaussianTarget::<f64>::standard(10);
    let cfg = HmcConfig::new(0.3, 8).with_jitter(true);
    let z = random_matrix(RandomKey::from_seed(15), 64, 10, 2.0);
    let warm = run_chains(&t, &cfg, z, RandomKey::from_seed(16), 100, &mut NullSink).unwrap();
    let mut rec = TraceRecorder::new(64, 10);
    continue_chains(&t, &cfg, warm.batch, RandomKey::from_seed(17), 1000, &mut rec).unwrap();
    pooled_mean_within_mcse(&rec, 10);
}

#[test]
fn exact_start_stays_stationary() {
    let t = GaussianTarget::<f64>::standard(5);
    let cfg = HmcConfig::new(0.5, 4).with_jitter(true);
    let z = random_matrix(RandomKey::from_seed(18), 32, 5, 1.0);
    let mut rec = TraceRecorder::new(32, 5);
    run_chains(&t, &cfg, z, RandomKey::from_seed(19), 1000, &mut rec).unwrap();
    pooled_mean_within_mcse(&rec, 5);
}

#[test]
fn runs_are_bitwise_deterministic_across_thread_counts() {
    let m = small_sparse_model();
    let cfg = HmcConfig::new(0.05, 6).with_jitter(true);
    let z = random_matrix(RandomKey::from_seed(20), 20, m.dim(), 0.1);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut rec = TraceRecorder::new(20, m.dim());
            run_chains(&m, &cfg, z.clone(), RandomKey::from_seed(21), 30, &mut rec).unwrap();
            rec
        })
    };
    let a = run(1);
    let b = run(4);
    let c = run(1);
    for p in 0..m.dim() {
        let bits = |r: &TraceRecorder| r.trace(p).iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(bits(&a), bits(&c));
    }
    assert_eq!(a.log_accept_ratios(), b.log_accept_ratios());
}

#[test]
fn stable_and_naive_ratios_agree_in_double() {
    let m = small_sparse_model();
    let z = random_matrix(RandomKey::from_seed(22), 16, m.dim(), 0.1);
    let collect = |stable: bool| {
        let cfg = HmcConfig::new(0.03, 5).with_stable_ratio(stable);
        let mut rec = TraceRecorder::new(16, m.dim());
        run_chains(&m, &cfg, z.clone(), RandomKey::from_seed(23), 40, &mut rec).unwrap();
        rec
    };
    let naive = collect(false);
    let stable = collect(true);
    for (a, b) in naive.log_accept_ratios().iter().zip(stable.log_accept_ratios()) {
        assert!((a - b).abs() < 1e-9 || (a.is_infinite() && a == b), "{a} vs {b}");
    }
}

#[test]
fn divergent_proposals_are_rejected() {
    let t = GaussianTarget::<f64>::standard(2);
    let z = random_matrix(RandomKey::from_seed(24), 4, 2, 1.0);
    let mut batch = ChainBatch::new(&t, z.clone()).unwrap();
    let keys = RandomKey::from_seed(25).split(2).unwrap();
    let cfg = HmcConfig::new(1e200, 3);
    let out = hmc_step(&t, &cfg, &mut batch, keys[0], keys[1]).unwrap();
    assert!(out.is_accepted.iter().all(|a| !a));
    assert!(out.log_accept_ratio.iter().all(|&r| r == f64::NEG_INFINITY));
    assert_eq!(batch.z(), &z);
    assert!(batch.value().iter().all(|v| v.is_finite()));
}

#[test]
fn non_finite_start_rejected() {
    let t = GaussianTarget::<f64>::standard(2);
    let z = ChainMatrix::from_rows(&[[0.0, 0.0], [f64::NAN, 1.0]]);
    assert!(matches!(
        ChainBatch::new(&t, z),
        Err(SamplerError::NonFiniteInit { chain: 1 })
    ));
}

#[test]
fn diagonal_mass_from_moments() {
    let mut acc = StreamingMoments::new(4, 3);
    let root = RandomKey::from_seed(26);
    for t in 0..1000u64 {
        let rows: Vec<[f64; 3]> = (0..4u64)
            .map(|c| {
                let n = root.child(t).fold_in(c).normal(2);
                [n[0], 10.0 * n[1], 7.0]
            })
            .collect();
        acc.update(&ChainMatrix::from_rows(&rows)).unwrap();
    }
    let mass = estimate_diag_mass(&acc).unwrap();
    assert!((mass[0] - 1.0).abs() < 0.2, "{mass:?}");
    assert!((mass[1] - 0.01).abs() < 0.002, "{mass:?}");
    assert_eq!(mass[2], 1e8);
}

#[test]
fn warmup_tunes_step_size_and_mass() {
    let t = GaussianTarget::<f64>::with_scales(&[1.0, 10.0]);
    let cfg = HmcConfig::new(1.0, 5);
    let z = random_matrix(RandomKey::from_seed(27), 32, 2, 1.0);
    let out = warmup(&t, &cfg, z, RandomKey::from_seed(28), 1000, &AdaptConfig::default()).unwrap();
    let mass = out.config.mass_diag.clone().unwrap();
    assert!((mass[0] - 1.0).abs() < 0.25, "{mass:?}");
    assert!((mass[1] - 0.01).abs() < 0.0025, "{mass:?}");
    assert_eq!(out.step_sizes.len(), 1000);
    let summary = continue_chains(&t, &out.config, out.batch, RandomKey::from_seed(29), 300, &mut NullSink)
        .unwrap();
    let rate = summary.acceptance_rate();
    assert!((0.7..0.99).contains(&rate), "acceptance {rate}");
}

#[test]
fn sink_errors_propagate() {
    let t = GaussianTarget::<f64>::standard(1);
    let mut sink = |d: &Draw<'_, f64>| -> Result<(), SinkError> {
        if d.index == 3 {
            Err("disk full".into())
        } else {
            Ok(())
        }
    };
    let z = ChainMatrix::from_rows(&[[0.0]]);
    let err = run_chains(&t, &HmcConfig::new(0.5, 2), z, RandomKey::from_seed(1), 10, &mut sink).unwrap_err();
    assert!(matches!(err, SamplerError::Sink(_)));
    assert!(err.to_string().contains("disk full"));
}

#[test]
fn invalid_configs_rejected() {
    let t = GaussianTarget::<f64>::standard(2);
    let z = ChainMatrix::from_rows(&[[0.0, 0.0]]);
    let bad = HmcConfig::new(0.5, 0);
    assert!(matches!(
        run_chains(&t, &bad, z.clone(), RandomKey::from_seed(1), 1, &mut NullSink),
        Err(SamplerError::InvalidConfig(_))
    ));
    let wrong_shape = ChainMatrix::from_rows(&[[0.0, 0.0, 0.0]]);
    assert!(run_chains(&t, &HmcConfig::new(0.5, 1), wrong_shape, RandomKey::from_seed(1), 1, &mut NullSink).is_err());
}
