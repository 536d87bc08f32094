use pptk::schedule::{clip_gradients, lr_at, DecayKind, LRScheduleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn step_is_piecewise_constant_and_nonincreasing() {
    let cfg = LRScheduleConfig::default();
    let mut prev = f64::INFINITY;
    for iter in (4000..=500_000).step_by(997) {
        let lr = lr_at(&cfg, iter).unwrap();
        assert!(lr <= prev);
        prev = lr;
    }
    let levels: std::collections::BTreeSet<u64> = (4000..=500_000)
        .step_by(1000)
        .map(|i| lr_at(&cfg, i).unwrap().to_bits())
        .collect();
    assert_eq!(levels.len(), 3);
}

#[test]
fn warmup_is_linear() {
    let cfg = LRScheduleConfig::default();
    for iter in [1, 100, 1000, 3999] {
        assert!((lr_at(&cfg, iter).unwrap() - 0.005 * iter as f64 / 4000.0).abs() < 1e-18);
    }
}

#[test]
fn cosine_continuous_and_nonincreasing() {
    let cfg = LRScheduleConfig {
        variant: DecayKind::Cosine,
        ..Default::default()
    };
    let mut prev = lr_at(&cfg, 4000).unwrap();
    for iter in 4001..=500_000 {
        let lr = lr_at(&cfg, iter).unwrap();
        assert!(lr <= prev && prev - lr < 1e-7);
        prev = lr;
    }
    assert!(prev >= 0.0);
}

#[test]
fn clipping_properties_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let n = rng.random_range(1..64);
        let scale = 10f64.powf(rng.random_range(-2.0..3.0));
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        let max_norm = rng.random_range(0.1..50.0);
        let c = clip_gradients(&g, max_norm).unwrap();
        assert!((norm(&c) - norm(&g).min(max_norm)).abs() <= 1e-6 * max_norm.max(1.0));
        let cos = g.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / (norm(&g) * norm(&c));
        assert!((cos - 1.0).abs() < 1e-6);
        assert_eq!(clip_gradients(&c, max_norm).unwrap(), c);
    }
}
