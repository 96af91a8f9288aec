use cspath::instance::{DistributionSpec, Instance, StorageMode};
use cspath::rng::CounterStream;
use cspath::theory;

/// Kolmogorov-Smirnov distance between a sample and a CDF.
fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

fn lengths(n: usize, seed: u64, d: DistributionSpec) -> Vec<f64> {
    let inst = Instance::generate(n, seed, d, DistributionSpec::Uniform, StorageMode::Implicit).unwrap();
    inst.edges().map(|(_, _, w)| w.length).collect()
}

// 1% critical value of the one-sample KS statistic is about 1.63 / sqrt(m).
fn ks_critical(m: usize) -> f64 {
    1.63 / (m as f64).sqrt()
}

#[test]
fn uniform_power_lengths_follow_x_to_the_one_over_gamma() {
    for g in [1.0, 0.7, 0.3] {
        let xs = lengths(200, 17, DistributionSpec::UniformPower(g));
        let m = xs.len();
        let d = ks_distance(xs, |x| x.powf(1.0 / g));
        assert!(d < ks_critical(m), "gamma={g}: D={d}");
    }
}

#[test]
fn exp_power_lengths_follow_weibull() {
    let s = 0.5;
    let xs = lengths(200, 23, DistributionSpec::ExpPower(s));
    let m = xs.len();
    // P(xi^s <= x) = 1 - exp(-x^(1/s)).
    let d = ks_distance(xs, |x| 1.0 - (-x.powf(1.0 / s)).exp());
    assert!(d < ks_critical(m), "D={d}");
}

#[test]
fn costs_and_lengths_are_uncorrelated() {
    let inst = Instance::generate(300, 5, DistributionSpec::Uniform, DistributionSpec::Uniform, StorageMode::Implicit).unwrap();
    let pairs: Vec<(f64, f64)> = inst.edges().map(|(_, _, w)| (w.length, w.cost)).collect();
    let m = pairs.len() as f64;
    let cov = pairs.iter().map(|(a, b)| (a - 0.5) * (b - 0.5)).sum::<f64>() / m;
    // Var(U) = 1/12; the sample correlation has standard error 1/sqrt(m).
    assert!((cov * 12.0).abs() < 4.0 / m.sqrt());
}

#[test]
fn irwin_hall_lower_tail_matches_simplex_volume() {
    let mut rng = CounterStream::new(99);
    let samples = 400_000;
    for (k, u) in [(2u32, 0.5f64), (3, 0.8), (4, 1.0)] {
        let hits = (0..samples)
            .filter(|_| (0..k).map(|_| rng.next_unit()).sum::<f64>() <= u)
            .count() as f64;
        let p = hits / samples as f64;
        let exact = theory::simplex_volume_bound(k, 1.0, u);
        let se = (exact * (1.0 - exact) / samples as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se, "k={k} u={u}: {p} vs {exact}");
    }
}

#[test]
fn simplex_volume_bounds_power_sums() {
    let mut rng = CounterStream::new(7);
    let samples = 200_000;
    for (k, g, u) in [(2u32, 0.5f64, 0.6f64), (3, 0.7, 1.2)] {
        let hits = (0..samples)
            .filter(|_| (0..k).map(|_| rng.next_unit().powf(g)).sum::<f64>() <= u)
            .count() as f64;
        let p = hits / samples as f64;
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        assert!(theory::simplex_volume_bound(k, g, u) >= p - 3.0 * se);
    }
}
