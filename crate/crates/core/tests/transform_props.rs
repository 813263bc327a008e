mod common;

use common::{erf, normal_cdf};
use gpcid_core::transform::{std_normal_cdf, std_normal_quantile, InputProbabilityModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn cdf_matches_series() {
    let oracle = 0.5 * (1.0 + erf(1.96 / std::f64::consts::SQRT_2));
    assert!((std_normal_cdf(1.96) - oracle).abs() < 1e-12);
    for k in -80..=80 {
        let z = k as f64 * 0.1;
        let (a, b) = (std_normal_cdf(z), normal_cdf(z));
        assert!((a - b).abs() <= 1e-14 + 1e-12 * b, "z={z}: {a} vs {b}");
    }
}

#[test]
fn clip_example() {
    let (lo, hi) = (normal_cdf(-1.0), normal_cdf(1.0));
    let u = lo + normal_cdf(1.0) * (hi - lo);
    // invert the series CDF by bisection
    let (mut a, mut b) = (-1.0, 1.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if normal_cdf(m) < u {
            a = m;
        } else {
            b = m;
        }
    }
    let m = InputProbabilityModel::new(vec![0.0], vec![1.0], vec![-1.0], vec![1.0]).unwrap();
    assert!((m.to_physical(&[1.0])[0] - 0.5 * (a + b)).abs() < 1e-12);
    let shifted = InputProbabilityModel::new(vec![3.0], vec![2.0], vec![1.0], vec![5.0]).unwrap();
    assert_eq!(shifted.to_physical(&[0.0])[0], 3.0);
}

#[test]
fn truncated_normal_ks() {
    let (mu, sigma, lo, hi) = (0.5, 2.0, -1.0, 4.0);
    let model = InputProbabilityModel::new(vec![mu], vec![sigma], vec![lo], vec![hi]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut xs: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let t: f64 = StandardNormal.sample(&mut rng);
            model.to_physical(&[t])[0]
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    let (fl, fh) = (normal_cdf((lo - mu) / sigma), normal_cdf((hi - mu) / sigma));
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (normal_cdf((x - mu) / sigma) - fl) / (fh - fl);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.002, "KS statistic {ks}");
}

#[test]
fn quantile_inverts_series_cdf() {
    for p in [1e-10, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.999] {
        let z = std_normal_quantile(p).unwrap();
        assert!((normal_cdf(z) - p).abs() <= 1e-12 * p.max(1e-3), "p={p}");
    }
}

fn bounded_model() -> impl Strategy<Value = InputProbabilityModel> {
    (-5.0..5.0f64, 0.01..3.0f64, -4.0..4.0f64, 1e-3..6.0f64).prop_map(|(mu, sigma, lo, width)| {
        InputProbabilityModel::new(vec![mu], vec![sigma], vec![lo], vec![lo + width]).unwrap()
    })
}

proptest! {
    #[test]
    fn stays_inside_bounds(m in bounded_model(), t in -37.0..37.0f64) {
        let x = m.to_physical(&[t])[0];
        prop_assert!(x > m.lower()[0] && x < m.upper()[0]);
    }

    #[test]
    fn monotone_in_theta(m in bounded_model(), t in -37.0..37.0f64, dt in 0.0..5.0f64) {
        prop_assert!(m.to_physical(&[t + dt])[0] >= m.to_physical(&[t])[0]);
    }

    #[test]
    fn one_sided_bounds_stay_inside(mu in -3.0..3.0f64, sigma in 0.1..2.0f64, lo in -3.0..3.0f64, t in -37.0..37.0f64) {
        let m = InputProbabilityModel::new(vec![mu], vec![sigma], vec![lo], vec![f64::INFINITY]).unwrap();
        let x = m.to_physical(&[t])[0];
        prop_assert!(x > lo && x.is_finite());
    }

    #[test]
    fn infinite_bounds_are_affine(mu in -10.0..10.0f64, sigma in 0.01..10.0f64) {
        let m = InputProbabilityModel::unbounded(vec![mu], vec![sigma]).unwrap();
        let worst = (0..=100)
            .map(|k| -5.0 + 0.1 * k as f64)
            .map(|t| (m.to_physical(&[t])[0] - (mu + sigma * t)).abs())
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12);
    }
}
