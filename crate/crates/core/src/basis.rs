//! Univariate orthonormal polynomial families of the Wiener–Askey scheme.
//!
//! Every family is normalized against a probability weight (the density of
//! the matching standard random variable), so quadrature weights sum to one
//! and inner products are expectations. Polynomials are generated by their
//! three-term recurrence; Gauss rules come from the eigen-decomposition of
//! the symmetric tridiagonal Jacobi matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthogonal polynomial family paired with its standard input density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolynomialFamily {
    /// Standard normal weight, probabilists' Hermite polynomials.
    Hermite,
    /// Uniform weight on [-1, 1].
    Legendre,
    /// Gamma weight `x^alpha e^-x / Γ(alpha+1)` on [0, ∞).
    Laguerre { alpha: f64 },
    /// Beta weight proportional to `(1-x)^alpha (1+x)^beta` on [-1, 1].
    Jacobi { alpha: f64, beta: f64 },
}

impl PolynomialFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PolynomialFamily::Hermite | PolynomialFamily::Legendre => Ok(()),
            PolynomialFamily::Laguerre { alpha } => {
                if alpha.is_finite() && alpha > -1.0 {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain(format!(
                        "laguerre shape must be > -1, got {alpha}"
                    )))
                }
            }
            PolynomialFamily::Jacobi { alpha, beta } => {
                if alpha.is_finite() && beta.is_finite() && alpha > -1.0 && beta > -1.0 {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain(format!(
                        "jacobi parameters must be > -1, got ({alpha}, {beta})"
                    )))
                }
            }
        }
    }

    /// True when the weight is even, so odd-degree integrands vanish.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            PolynomialFamily::Hermite | PolynomialFamily::Legendre => true,
            PolynomialFamily::Laguerre { .. } => false,
            PolynomialFamily::Jacobi { alpha, beta } => alpha == beta,
        }
    }

    /// Monic recurrence coefficients `(a_k, b_k)` with
    /// `p_{k+1} = (x - a_k) p_k - b_k p_{k-1}`; `b_0` is the total mass (1).
    pub fn recurrence(&self, k: usize) -> (f64, f64) {
        let kf = k as f64;
        match *self {
            PolynomialFamily::Hermite => (0.0, if k == 0 { 1.0 } else { kf }),
            PolynomialFamily::Legendre => {
                let b = if k == 0 {
                    1.0
                } else {
                    kf * kf / (4.0 * kf * kf - 1.0)
                };
                (0.0, b)
            }
            PolynomialFamily::Laguerre { alpha } => {
                let b = if k == 0 { 1.0 } else { kf * (kf + alpha) };
                (2.0 * kf + alpha + 1.0, b)
            }
            PolynomialFamily::Jacobi { alpha, beta } => {
                let ab = alpha + beta;
                let a = if k == 0 {
                    (beta - alpha) / (ab + 2.0)
                } else {
                    let s = 2.0 * kf + ab;
                    (beta * beta - alpha * alpha) / (s * (s + 2.0))
                };
                let b = match k {
                    0 => 1.0,
                    1 => 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab)),
                    _ => {
                        let s = 2.0 * kf + ab;
                        4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab)
                            / (s * s * (s + 1.0) * (s - 1.0))
                    }
                };
                (a, b)
            }
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PolynomialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PolynomialFamily::Hermite => write!(f, "hermite"),
            PolynomialFamily::Legendre => write!(f, "legendre"),
            PolynomialFamily::Laguerre { alpha } => write!(f, "laguerre({alpha})"),
            PolynomialFamily::Jacobi { alpha, beta } => write!(f, "jacobi({alpha};{beta})"),
        }
    }
}

impl FromStr for PolynomialFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .ok_or_else(|| Error::Parse(format!("unbalanced family spec {s:?}")))?;
                (&s[..open], Some(&s[open + 1..close]))
            }
            None => (s.as_str(), None),
        };
        let params: Vec<f64> = match args {
            Some(a) => a
                .split([';', ' '])
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("family parameter {t:?}: {e}")))
                })
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let family = match (name, params.as_slice()) {
            ("hermite", []) => PolynomialFamily::Hermite,
            ("legendre", []) => PolynomialFamily::Legendre,
            ("laguerre", []) => PolynomialFamily::Laguerre { alpha: 0.0 },
            ("laguerre", [a]) => PolynomialFamily::Laguerre { alpha: *a },
            ("jacobi", [a, b]) => PolynomialFamily::Jacobi { alpha: *a, beta: *b },
            _ => return Err(Error::Parse(format!("unknown polynomial family {s:?}"))),
        };
        family.validate()?;
        Ok(family)
    }
}

/// Orthonormal basis `φ_0..φ_d` of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateBasis {
    family: PolynomialFamily,
    max_degree: usize,
    /// `(a_k, sqrt(b_k))` for k = 0..=max_degree+1.
    recurrence: Vec<(f64, f64)>,
    /// Squared norms of the monic polynomials, kept for reporting.
    monic_norms: Vec<f64>,
}

impl UnivariateBasis {
    pub fn new(family: PolynomialFamily, max_degree: usize) -> Result<Self> {
        family.validate()?;
        let recurrence: Vec<(f64, f64)> = (0..=max_degree + 1)
            .map(|k| {
                let (a, b) = family.recurrence(k);
                (a, b.sqrt())
            })
            .collect();
        let mut monic_norms = Vec::with_capacity(max_degree + 1);
        let mut acc = 1.0;
        for k in 0..=max_degree {
            if k > 0 {
                acc *= family.recurrence(k).1;
            }
            monic_norms.push(acc);
        }
        Ok(Self {
            family,
            max_degree,
            recurrence,
            monic_norms,
        })
    }

    pub fn family(&self) -> PolynomialFamily {
        self.family
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `⟨p_j²⟩` of the monic polynomial of degree j (e.g. `j!` for Hermite).
    pub fn monic_norms(&self) -> &[f64] {
        &self.monic_norms
    }

    /// Orthonormal `φ_j(x)`.
    pub fn evaluate(&self, j: usize, x: f64) -> Result<f64> {
        if j > self.max_degree {
            return Err(Error::Index {
                index: j,
                max: self.max_degree,
            });
        }
        let mut prev = 0.0;
        let mut cur = 1.0;
        for k in 0..j {
            let (a, sb) = self.recurrence[k];
            let next = ((x - a) * cur - sb * prev) / self.recurrence[k + 1].1;
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// Fills `out[j] = φ_j(x)` for every `j < out.len()` (at most `d+1`).
    pub fn evaluate_all(&self, x: f64, out: &mut [f64]) {
        debug_assert!(out.len() <= self.max_degree + 1);
        if out.is_empty() {
            return;
        }
        out[0] = 1.0;
        let mut prev = 0.0;
        for k in 0..out.len() - 1 {
            let (a, sb) = self.recurrence[k];
            let next = ((x - a) * out[k] - sb * prev) / self.recurrence[k + 1].1;
            prev = out[k];
            out[k + 1] = next;
        }
    }

    /// `⟨∏ φ_j^e⟩` for a list of `(degree, power)` pairs, using a Gauss rule
    /// of order `⌈(Σ e·j + 1)/2⌉` so the integrand is integrated exactly.
    pub fn inner_product(&self, exponents: &[(usize, u32)]) -> Result<f64> {
        let mut total_degree = 0usize;
        for &(j, e) in exponents {
            if j > self.max_degree {
                return Err(Error::Index {
                    index: j,
                    max: self.max_degree,
                });
            }
            total_degree += j * e as usize;
        }
        let q = (total_degree + 2) / 2;
        let rule = gauss_quadrature(self.family, q.max(1))?;
        let mut values = vec![0.0; self.max_degree + 1];
        let mut sum = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            self.evaluate_all(x, &mut values);
            let prod: f64 = exponents
                .iter()
                .map(|&(j, e)| values[j].powi(e as i32))
                .product();
            sum += w * prod;
        }
        if !sum.is_finite() {
            return Err(Error::Numeric("inner product overflow".into()));
        }
        Ok(sum)
    }
}

/// Gauss rule `{(w_j, θ_j)}` normalized to a probability weight.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

impl fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            writeln!(f, "{x:.17e} {w:.17e}")?;
        }
        Ok(())
    }
}

/// Orthonormal value and derivative of `φ_q` via the recurrence.
fn orthonormal_with_derivative(family: PolynomialFamily, q: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..q {
        let (a, b) = family.recurrence(k);
        let sb = if k == 0 { 0.0 } else { b.sqrt() };
        let norm = family.recurrence(k + 1).1.sqrt();
        let p_next = ((x - a) * p - sb * p_prev) / norm;
        let d_next = (p + (x - a) * d - sb * d_prev) / norm;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Gauss quadrature of order `q` for the family's probability weight.
pub fn gauss_quadrature(family: PolynomialFamily, q: usize) -> Result<QuadratureRule> {
    family.validate()?;
    if q == 0 {
        return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
    }
    let mut jacobi = DMatrix::<f64>::zeros(q, q);
    for k in 0..q {
        let (a, _) = family.recurrence(k);
        jacobi[(k, k)] = a;
        if k + 1 < q {
            let off = family.recurrence(k + 1).1.sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let eigen = SymmetricEigen::try_new(jacobi, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric(format!("Jacobi matrix eigen-solver did not converge (q={q})")))?;

    let mut nodes: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let basis = UnivariateBasis::new(family, q.saturating_sub(1))?;
    let mut values = vec![0.0; q];
    let mut weights = Vec::with_capacity(q);
    for x in nodes.iter_mut() {
        // Newton polish on φ_q; the eigenvalues are already close.
        for _ in 0..2 {
            let (p, dp) = orthonormal_with_derivative(family, q, *x);
            if dp != 0.0 && dp.is_finite() {
                let step = p / dp;
                if step.is_finite() {
                    *x -= step;
                }
            }
        }
        basis.evaluate_all(*x, &mut values);
        let christoffel: f64 = values.iter().map(|v| v * v).sum();
        weights.push(1.0 / christoffel);
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    if nodes.iter().chain(&weights).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite Gauss rule (q={q})")));
    }
    Ok(QuadratureRule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_single_node_is_the_mean() {
        let rule = gauss_quadrature(PolynomialFamily::Hermite, 1).unwrap();
        assert_eq!(rule.nodes, vec![0.0]);
        assert_eq!(rule.weights, vec![1.0]);
    }

    #[test]
    fn hermite_two_nodes() {
        let rule = gauss_quadrature(PolynomialFamily::Hermite, 2).unwrap();
        assert_abs_diff_eq!(rule.nodes[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.nodes[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.weights[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.weights[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn legendre_two_nodes() {
        let rule = gauss_quadrature(PolynomialFamily::Legendre, 2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(rule.nodes[0], -r, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.nodes[1], r, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.weights[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn orthonormal_hermite_values() {
        let b = UnivariateBasis::new(PolynomialFamily::Hermite, 3).unwrap();
        assert_eq!(b.evaluate(0, 12.3).unwrap(), 1.0);
        assert_abs_diff_eq!(b.evaluate(1, 2.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            b.evaluate(3, 1.5).unwrap(),
            -0.459_279_326_771_845_9,
            epsilon = 1e-14
        );
        assert!(matches!(b.evaluate(4, 0.0), Err(Error::Index { index: 4, max: 3 })));
        assert_eq!(b.monic_norms(), &[1.0, 1.0, 2.0, 6.0]);
    }

    #[test]
    fn inner_products() {
        let b = UnivariateBasis::new(PolynomialFamily::Hermite, 2).unwrap();
        assert_abs_diff_eq!(b.inner_product(&[(0, 1)]).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.inner_product(&[(1, 2)]).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            b.inner_product(&[(1, 2), (2, 1)]).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(
            gauss_quadrature(PolynomialFamily::Laguerre { alpha: -1.0 }, 3),
            Err(Error::ParameterDomain(_))
        ));
        assert!(UnivariateBasis::new(PolynomialFamily::Jacobi { alpha: 0.5, beta: -2.0 }, 2).is_err());
        assert!(gauss_quadrature(PolynomialFamily::Hermite, 0).is_err());
    }

    #[test]
    fn family_round_trips_through_text() {
        for fam in [
            PolynomialFamily::Hermite,
            PolynomialFamily::Legendre,
            PolynomialFamily::Laguerre { alpha: 0.5 },
            PolynomialFamily::Jacobi { alpha: 1.0, beta: 2.5 },
        ] {
            assert_eq!(fam.to_string().parse::<PolynomialFamily>().unwrap(), fam);
        }
        assert!("chebyshev".parse::<PolynomialFamily>().is_err());
    }

    #[test]
    fn rule_prints_two_columns() {
        let rule = gauss_quadrature(PolynomialFamily::Hermite, 3).unwrap();
        let text = rule.to_string();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.split_whitespace().count() == 2));
    }
}
