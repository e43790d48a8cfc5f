use lockstep_hmc::gradients::{finite_difference_check, value_and_grad, DEFAULT_STEP};
use lockstep_hmc::model::{Dataset, GaussianTarget, LogDensity, SparseLogisticRegression};
use lockstep_hmc::RandomKey;
use proptest::prelude::*;

fn credit_sized_model() -> SparseLogisticRegression<f64> {
    let mut data = Dataset::synthetic(RandomKey::from_seed(2024), 1000, 24, 0.25)
        .unwrap()
        .dataset;
    data.standardize();
    SparseLogisticRegression::new(&data)
}

#[test]
fn gaussian_harness_is_exact() {
    let t = GaussianTarget::<f64>::standard(10);
    for i in 0..20 {
        let z = RandomKey::from_seed(i).normal(10);
        let err = finite_difference_check(&t, &z, DEFAULT_STEP).unwrap();
        assert!(err < 1e-8, "error {err}");
    }
}

#[test]
fn sparse_model_matches_central_differences() {
    let m = credit_sized_model();
    let root = RandomKey::from_seed(5);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let z = root.child(i).normal(m.dim());
        let err = finite_difference_check(&m, &z, DEFAULT_STEP).unwrap();
        worst = worst.max(err);
    }
    assert!(worst < 1e-5, "max relative error {worst}");
}

#[test]
fn value_is_the_log_density_bitwise() {
    let m = credit_sized_model();
    let z = RandomKey::from_seed(8).normal(m.dim());
    let vg = value_and_grad(&m, &z).unwrap();
    assert_eq!(vg.value.to_bits(), m.log_prob(&z).to_bits());
    assert_eq!(vg.value, m.unconstrained_log_prob(&z).unwrap());
    assert!(vg.grad.iter().all(|g| g.is_finite()));
}

#[test]
fn value_and_grad_is_deterministic() {
    let m = credit_sized_model();
    let z = RandomKey::from_seed(9).normal(m.dim());
    assert_eq!(value_and_grad(&m, &z), value_and_grad(&m, &z));
}

#[test]
fn scale_gradients_vanish_without_likelihood_signal() {
    let n = 50;
    let d = 3;
    let y = (0..n).map(|i| (i % 2) as u8).collect();
    let data = Dataset::new(vec![0.0; n * d], y, d, None).unwrap();
    let m = SparseLogisticRegression::<f64>::new(&data);
    let mut z = vec![0.0; m.dim()];
    z[1 + d] = 0.7;
    z[1 + d + 2] = -1.3;
    let vg = value_and_grad(&m, &z).unwrap();
    for &g in &vg.grad[..1 + d] {
        assert_eq!(g, 0.0);
    }
    assert_eq!(vg.grad[1 + d], -0.7);
    assert_eq!(vg.grad[1 + d + 2], 1.3);
}

fn simpson_line_integral(m: &SparseLogisticRegression<f64>, a: &[f64], b: &[f64]) -> f64 {
    let panels = 10_000;
    let dir: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mut z = vec![0.0; a.len()];
    let mut grad = vec![0.0; a.len()];
    let mut slope = |s: f64| {
        for i in 0..a.len() {
            z[i] = a[i] + s * dir[i];
        }
        m.value_and_grad(&z, &mut grad);
        grad.iter().zip(&dir).map(|(g, v)| g * v).sum::<f64>()
    };
    let h = 1.0 / panels as f64;
    let mut acc = slope(0.0) + slope(1.0);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * slope(k as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn gradient_integrates_to_density_difference() {
    let m = credit_sized_model();
    let root = RandomKey::from_seed(31);
    for i in 0..5 {
        let pair = root.child(i).split(2).unwrap();
        let a: Vec<f64> = pair[0].normal(m.dim()).iter().map(|v| 0.5 * v).collect();
        let b: Vec<f64> = pair[1].normal(m.dim()).iter().map(|v| 0.5 * v).collect();
        let integral = simpson_line_integral(&m, &a, &b);
        let diff = m.log_prob(&b) - m.log_prob(&a);
        let rel = (integral - diff).abs() / diff.abs().max(1.0);
        assert!(rel < 1e-6, "pair {i}: integral {integral} vs {diff}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaled_gaussian_passes_oracle(
        z in prop::collection::vec(-5.0f64..5.0, 4),
        s in prop::collection::vec(0.1f64..10.0, 4),
    ) {
        let t = GaussianTarget::<f64>::with_scales(&s);
        let err = finite_difference_check(&t, &z, DEFAULT_STEP).unwrap();
        prop_assert!(err < 1e-6, "error {}", err);
    }

    #[test]
    fn sparse_oracle_on_small_model(seed in 0u64..1000) {
        let data = Dataset::synthetic(RandomKey::from_seed(seed), 40, 3, 0.5).unwrap().dataset;
        let m = SparseLogisticRegression::<f64>::new(&data);
        let z = RandomKey::from_seed(seed + 1).normal(m.dim());
        let err = finite_difference_check(&m, &z, DEFAULT_STEP).unwrap();
        prop_assert!(err < 1e-5, "error {}", err);
    }
}
