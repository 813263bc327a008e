mod common;

use common::{emd_lp, normal_pdf, simpson};
use gpcid_core::density::{
    emd_density, emd_discrete, fit_maxent, Density, GaussianDensity, HistogramDensity, MaxEntOptions, Signature,
};
use gpcid_core::gpc::MomentVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn maxent_two_moments_is_standard_normal() {
    let m = MomentVector::new(vec![0.0, 1.0]).unwrap();
    let d = fit_maxent(&m, (-8.0, 8.0), None, &MaxEntOptions::default()).unwrap();
    let sup = (0..=1600)
        .map(|k| -8.0 + 0.01 * k as f64)
        .map(|y| (d.pdf(y) - normal_pdf(y)).abs())
        .fold(0.0, f64::max);
    assert!(sup < 1e-4, "sup-norm {sup}");
}

#[test]
fn maxent_reproduces_bimodal_moments() {
    // equal mixture of N(±1, 0.5²)
    let target = [0.0, 1.25, 0.0, 2.6875];
    let m = MomentVector::new(target.to_vec()).unwrap();
    let d = fit_maxent(&m, (-5.0, 5.0), None, &MaxEntOptions::default()).unwrap();
    let mass = simpson(&|y| d.pdf(y), -5.0, 5.0, 1e-13);
    assert!((mass - 1.0).abs() < 1e-9, "mass {mass}");
    for (k, t) in target.iter().enumerate() {
        let mk = simpson(&|y| y.powi(k as i32 + 1) * d.pdf(y), -5.0, 5.0, 1e-13);
        assert!((mk - t).abs() < 1e-6, "moment {}: {mk} vs {t}", k + 1);
    }
    // two modes, dip at zero
    assert!(d.pdf(0.0) < d.pdf(1.0) && d.pdf(0.0) < d.pdf(-1.0));
}

#[test]
fn maxent_penalty_outside_support() {
    let m = MomentVector::new(vec![0.0, 1.0, 0.0, 3.0]).unwrap();
    let d = fit_maxent(&m, (-6.0, 6.0), None, &MaxEntOptions::default()).unwrap();
    let inside_min = (0..=1200).map(|k| d.log_pdf(-6.0 + 0.01 * k as f64)).fold(f64::INFINITY, f64::min);
    let (a, b, c) = (d.log_pdf(6.5), d.log_pdf(7.0), d.log_pdf(-9.0));
    assert!(a.is_finite() && b.is_finite() && c.is_finite());
    assert!(a < inside_min && b < a);
    assert_eq!(d.pdf(7.0), 0.0);
}

#[test]
fn histogram_has_unit_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let h = HistogramDensity::from_samples(&xs).unwrap();
    let (lo, hi) = h.effective_support();
    let mass = simpson(&|y| h.pdf(y), lo, hi, 1e-10);
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    assert!((h.pdf(0.0) - normal_pdf(0.0)).abs() < 0.05);
}

fn random_signature(rng: &mut ChaCha8Rng, mass: f64) -> Vec<(f64, f64)> {
    let n = rng.random_range(1..=7);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| (rng.random_range(-3.0..3.0), mass * w / s)).collect()
}

fn signature(p: &[(f64, f64)]) -> Signature {
    Signature::new(p.iter().map(|x| x.0).collect(), p.iter().map(|x| x.1).collect()).unwrap()
}

#[test]
fn discrete_emd_matches_transport_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for k in 0..50 {
        let (mp, mq) = if k % 2 == 0 {
            (1.0, 1.0)
        } else {
            (rng.random_range(0.3..2.0), rng.random_range(0.3..2.0))
        };
        let p = random_signature(&mut rng, mp);
        let q = random_signature(&mut rng, mq);
        let ours = emd_discrete(&signature(&p), &signature(&q)).unwrap();
        let lp = emd_lp(&p, &q);
        assert!((ours - lp).abs() < 1e-8, "pair {k}: {ours} vs {lp}");
    }
}

#[test]
fn density_emd_of_normals() {
    let a = GaussianDensity::new(0.0, 1.0).unwrap();
    let b = GaussianDensity::new(1.0, 1.0).unwrap();
    assert!((emd_density(&a, &b, 2048).unwrap() - 1.0).abs() < 1e-4);
    // same mean, sd 1 against sd 2: E|Z|
    let c = GaussianDensity::new(0.0, 2.0).unwrap();
    let expected = (2.0 / std::f64::consts::PI).sqrt();
    assert!((emd_density(&a, &c, 2048).unwrap() - expected).abs() < 1e-4);
}

#[test]
fn density_emd_matches_binned_signatures() {
    let a = GaussianDensity::new(0.3, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..20_000).map(|_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        if rng.random::<bool>() { z * 0.4 - 1.0 } else { z * 0.4 + 1.0 }
    }).collect();
    let b = HistogramDensity::from_samples(&xs).unwrap();
    let (lo, hi) = (-8.0, 8.0);
    let bins = 2048;
    let h = (hi - lo) / bins as f64;
    let binned = |d: &dyn Density| {
        let centers: Vec<f64> = (0..bins).map(|k| lo + (k as f64 + 0.5) * h).collect();
        let raw: Vec<f64> = centers.iter().map(|&x| d.pdf(x)).collect();
        let total: f64 = raw.iter().sum();
        let masses = raw.into_iter().map(|w| w / total).collect();
        Signature::new(centers, masses).unwrap()
    };
    let discrete = emd_discrete(&binned(&a), &binned(&b)).unwrap();
    let continuous = emd_density(&a, &b, 2048).unwrap();
    assert!((discrete - continuous).abs() < 5e-3 * continuous, "{discrete} vs {continuous}");
}

fn unit_signature() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0..5.0f64, 0.01..1.0f64), 1..8).prop_map(|v| {
        let s: f64 = v.iter().map(|x| x.1).sum();
        v.into_iter().map(|(x, w)| (x, w / s)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn emd_metric_axioms(p in unit_signature(), q in unit_signature(), r in unit_signature()) {
        let (sp, sq, sr) = (signature(&p), signature(&q), signature(&r));
        let pq = emd_discrete(&sp, &sq).unwrap();
        prop_assert!(emd_discrete(&sp, &sp).unwrap().abs() < 1e-12);
        prop_assert!(pq >= 0.0);
        prop_assert!((pq - emd_discrete(&sq, &sp).unwrap()).abs() < 1e-12);
        let via = emd_discrete(&sp, &sr).unwrap() + emd_discrete(&sr, &sq).unwrap();
        prop_assert!(pq <= via + 1e-12);
    }
}
