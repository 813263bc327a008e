mod common;

use gpcid_core::basis::{gauss_quadrature, PolynomialFamily, UnivariateBasis};
use proptest::prelude::*;

fn families() -> Vec<PolynomialFamily> {
    vec![
        PolynomialFamily::Hermite,
        PolynomialFamily::Legendre,
        PolynomialFamily::Laguerre { alpha: 0.0 },
        PolynomialFamily::Laguerre { alpha: 1.5 },
        PolynomialFamily::Jacobi { alpha: 1.0, beta: 2.0 },
        PolynomialFamily::Jacobi { alpha: -0.5, beta: -0.5 },
    ]
}

#[test]
fn rules_integrate_monomials_to_degree_2q_minus_1() {
    for family in families() {
        for q in 1..=10 {
            let rule = gauss_quadrature(family, q).unwrap();
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for k in 0..2 * q as u32 {
                let exact = common::weight_moment(family, k);
                let approx = rule.integrate(|x| x.powi(k as i32));
                let scale = exact.abs().max(common::weight_moment(family, k + k % 2).abs()).max(1.0);
                assert!(
                    (approx - exact).abs() <= 1e-10 * scale,
                    "{family} q={q} k={k}: {approx} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn gram_matrix_is_identity() {
    for family in families() {
        for d in 0..=10 {
            let basis = UnivariateBasis::new(family, d).unwrap();
            let rule = gauss_quadrature(family, d + 1).unwrap();
            for i in 0..=d {
                for j in 0..=d {
                    let g = rule.integrate(|x| basis.evaluate(i, x).unwrap() * basis.evaluate(j, x).unwrap());
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((g - target).abs() <= 1e-9, "{family} d={d} ({i},{j}) = {g}");
                }
            }
        }
    }
}

#[test]
fn basis_matches_gram_schmidt_oracle() {
    for family in families() {
        let basis = UnivariateBasis::new(family, 5).unwrap();
        let oracle = common::orthonormal_polys(family, 5);
        for (j, poly) in oracle.iter().enumerate() {
            for x in [-0.9, -0.3, 0.0, 0.4, 0.8, 1.7] {
                let want = common::poly_eval(poly, x);
                let got = basis.evaluate(j, x).unwrap();
                assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{family} j={j} x={x}");
            }
        }
    }
}

#[test]
fn documented_points() {
    let h = UnivariateBasis::new(PolynomialFamily::Hermite, 3).unwrap();
    assert_eq!(h.evaluate(0, 4.2).unwrap(), 1.0);
    assert_eq!(h.evaluate(1, 2.0).unwrap(), 2.0);
    let want = (1.5f64.powi(3) - 4.5) / 6f64.sqrt();
    assert!((h.evaluate(3, 1.5).unwrap() - want).abs() < 1e-14);
    assert!(h.evaluate(4, 0.0).is_err());
    let h2 = UnivariateBasis::new(PolynomialFamily::Hermite, 2).unwrap();
    assert!((h2.inner_product(&[(1, 2), (2, 1)]).unwrap() - 2f64.sqrt()).abs() < 1e-13);
    assert!((h2.inner_product(&[(0, 1)]).unwrap() - 1.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn univariate_inner_products_match_expansion(
        e0 in 0u32..3, e1 in 0u32..3, e2 in 0u32..3, e3 in 0u32..3, fam in 0usize..4
    ) {
        let family = [
            PolynomialFamily::Hermite,
            PolynomialFamily::Legendre,
            PolynomialFamily::Laguerre { alpha: 0.5 },
            PolynomialFamily::Jacobi { alpha: 1.0, beta: 2.0 },
        ][fam];
        let basis = UnivariateBasis::new(family, 3).unwrap();
        let polys = common::orthonormal_polys(family, 3);
        let mut prod = vec![1.0];
        for (j, e) in [e0, e1, e2, e3].into_iter().enumerate() {
            for _ in 0..e {
                prod = common::poly_mul(&prod, &polys[j]);
            }
        }
        let want = common::expectation(family, &prod);
        let got = basis.inner_product(&[(0, e0), (1, e1), (2, e2), (3, e3)]).unwrap();
        prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{} vs {}", got, want);
    }
}
