//! Generalized polynomial chaos expansions: projection by tensor Gauss
//! quadrature and exact raw-moment extraction.
//!
//! Moments of order 1 and 2 follow from orthonormality directly. Higher
//! orders use the multinomial expansion of `(Σ c_i ψ_i)^m` with the nonzero
//! inner products precomputed in an [`InnerProductCache`].

mod cache;
pub mod hexfloat;

use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::{gauss_quadrature, PolynomialFamily, QuadratureRule, UnivariateBasis};
use crate::error::{Error, Result};
use crate::multiindex::{graded_basis_indices, GradedIndexSet};

pub use cache::{
    CacheHeader, CacheOptions, CacheSet, InnerProductCache, DEFAULT_ZERO_TOLERANCE,
};

/// Default highest moment order handled by the caches.
pub const DEFAULT_MAX_MOMENT: u32 = 5;

/// Multivariate orthonormal basis `ψ_i = ∏_k φ^{(k)}_{i_k}` of total degree ≤ d.
#[derive(Debug, Clone)]
pub struct ChaosBasis {
    families: Vec<PolynomialFamily>,
    univariate: Vec<UnivariateBasis>,
    index_set: GradedIndexSet,
}

impl ChaosBasis {
    pub fn new(families: &[PolynomialFamily], degree: usize) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::InvalidArgument("basis needs at least one dimension".into()));
        }
        let univariate = families
            .iter()
            .map(|&f| UnivariateBasis::new(f, degree))
            .collect::<Result<Vec<_>>>()?;
        let index_set = graded_basis_indices(families.len(), degree)?;
        Ok(Self {
            families: families.to_vec(),
            univariate,
            index_set,
        })
    }

    pub fn isotropic(family: PolynomialFamily, n: usize, degree: usize) -> Result<Self> {
        Self::new(&vec![family; n], degree)
    }

    pub fn dimension(&self) -> usize {
        self.families.len()
    }

    pub fn degree(&self) -> usize {
        self.index_set.degree()
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    pub fn families(&self) -> &[PolynomialFamily] {
        &self.families
    }

    pub fn univariate(&self) -> &[UnivariateBasis] {
        &self.univariate
    }

    pub fn index_set(&self) -> &GradedIndexSet {
        &self.index_set
    }

    /// Values of every `ψ_i` at `theta`.
    pub fn evaluate(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.degree();
        let tables: Vec<Vec<f64>> = self
            .univariate
            .iter()
            .zip(theta)
            .map(|(b, &x)| {
                let mut v = vec![0.0; d + 1];
                b.evaluate_all(x, &mut v);
                v
            })
            .collect();
        self.combine(&tables)
    }

    fn combine(&self, tables: &[Vec<f64>]) -> Vec<f64> {
        self.index_set
            .indices()
            .iter()
            .map(|idx| {
                idx.0
                    .iter()
                    .zip(tables)
                    .map(|(&deg, t)| t[deg as usize])
                    .product()
            })
            .collect()
    }
}

/// Full tensor product of univariate Gauss rules.
#[derive(Debug, Clone)]
pub struct TensorQuadrature {
    rules: Vec<QuadratureRule>,
    nodes: Vec<Vec<f64>>,
    /// Per node, the index into each univariate rule.
    positions: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl TensorQuadrature {
    /// Order-`q` rule in every dimension; first dimension varies slowest.
    pub fn new(families: &[PolynomialFamily], q: usize) -> Result<Self> {
        let rules = families
            .iter()
            .map(|&f| gauss_quadrature(f, q))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rules(rules)
    }

    pub fn from_rules(rules: Vec<QuadratureRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidArgument("tensor quadrature needs a rule".into()));
        }
        let total: usize = rules.iter().map(|r| r.order()).product();
        let n = rules.len();
        let mut nodes = Vec::with_capacity(total);
        let mut positions = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut pos = vec![0usize; n];
        for _ in 0..total {
            nodes.push(pos.iter().zip(&rules).map(|(&j, r)| r.nodes[j]).collect());
            weights.push(pos.iter().zip(&rules).map(|(&j, r)| r.weights[j]).product());
            positions.push(pos.clone());
            for k in (0..n).rev() {
                pos[k] += 1;
                if pos[k] < rules[k].order() {
                    break;
                }
                pos[k] = 0;
            }
        }
        Ok(Self {
            rules,
            nodes,
            positions,
            weights,
        })
    }

    pub fn rules(&self) -> &[QuadratureRule] {
        &self.rules
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Coefficients of a degree-d expansion over a [`ChaosBasis`].
#[derive(Debug, Clone)]
pub struct GpcExpansion {
    basis: Arc<ChaosBasis>,
    coefficients: Vec<f64>,
    evaluations: usize,
}

impl GpcExpansion {
    pub fn new(basis: Arc<ChaosBasis>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::Contract(format!(
                "expected {} coefficients, got {}",
                basis.len(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("non-finite expansion coefficient".into()));
        }
        Ok(Self {
            basis,
            coefficients,
            evaluations: 0,
        })
    }

    pub fn basis(&self) -> &Arc<ChaosBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Forward-model calls spent building this expansion.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        self.basis
            .evaluate(theta)
            .iter()
            .zip(&self.coefficients)
            .map(|(psi, c)| psi * c)
            .sum()
    }

    /// `(μ₁, μ₂) = (c₁, Σ c_i²)`.
    pub fn low_order_moments(&self) -> (f64, f64) {
        let mean = self.coefficients[0];
        let second = self.coefficients.iter().map(|c| c * c).sum();
        (mean, second)
    }

    /// Raw moment `E[Y^m]` of the expansion from a matching cache.
    pub fn high_order_moment(&self, cache: &InnerProductCache) -> Result<f64> {
        cache.check_compatible(self.basis.families(), self.basis.degree())?;
        Ok(cache.evaluate(&self.coefficients))
    }

    /// Raw moments μ₁..μ_M; orders above 2 are read from `caches`.
    pub fn moments(&self, caches: &CacheSet, max_order: u32) -> Result<MomentVector> {
        let (m1, m2) = self.low_order_moments();
        let mut raw = vec![m1];
        if max_order >= 2 {
            raw.push(m2);
        }
        for m in 3..=max_order {
            let cache = caches.get(m).ok_or_else(|| {
                Error::Incompatible(format!("no inner-product cache for moment order {m}"))
            })?;
            raw.push(self.high_order_moment(cache)?);
        }
        MomentVector::new(raw)
    }
}

/// Projection of a model onto a basis with a fixed tensor rule. The basis
/// values at the nodes are tabulated once and reused for every model.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: Arc<ChaosBasis>,
    quadrature: TensorQuadrature,
    /// Node-major table of `w_j ψ_i(θ_j)`.
    weighted_psi: Vec<f64>,
    parallel: bool,
}

impl Projector {
    pub fn new(basis: Arc<ChaosBasis>, quadrature: TensorQuadrature) -> Result<Self> {
        if quadrature.rules().len() != basis.dimension() {
            return Err(Error::Contract(format!(
                "quadrature has {} dimensions, basis {}",
                quadrature.rules().len(),
                basis.dimension()
            )));
        }
        let d = basis.degree();
        for (k, rule) in quadrature.rules().iter().enumerate() {
            if rule.order() < d + 1 {
                log::warn!(
                    "quadrature order {} in dimension {k} is below d+1 = {}; top coefficients will be inexact",
                    rule.order(),
                    d + 1
                );
            }
        }
        // per-dimension φ tables at the univariate nodes
        let tables: Vec<Vec<Vec<f64>>> = basis
            .univariate()
            .iter()
            .zip(quadrature.rules())
            .map(|(b, rule)| {
                rule.nodes
                    .iter()
                    .map(|&x| {
                        let mut v = vec![0.0; d + 1];
                        b.evaluate_all(x, &mut v);
                        v
                    })
                    .collect()
            })
            .collect();
        let p = basis.len();
        let mut weighted_psi = Vec::with_capacity(p * quadrature.len());
        let mut node_tables = vec![Vec::new(); basis.dimension()];
        for (pos, &w) in quadrature.positions.iter().zip(quadrature.weights()) {
            for (k, &j) in pos.iter().enumerate() {
                node_tables[k] = tables[k][j].clone();
            }
            weighted_psi.extend(basis.combine(&node_tables).into_iter().map(|psi| psi * w));
        }
        Ok(Self {
            basis,
            quadrature,
            weighted_psi,
            parallel: true,
        })
    }

    /// Evaluate the model sequentially (for models that are not pure).
    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn basis(&self) -> &Arc<ChaosBasis> {
        &self.basis
    }

    pub fn quadrature(&self) -> &TensorQuadrature {
        &self.quadrature
    }

    /// `c_i = Σ_j y(θ_j) ψ_i(θ_j) w_j`; the model is called exactly once per node.
    pub fn project<F>(&self, model: F) -> Result<GpcExpansion>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let eval = |node: &Vec<f64>| {
            model(node).map_err(|e| Error::ModelEvaluation {
                node: node.clone(),
                source: Box::new(e),
            })
        };
        let values: Vec<f64> = if self.parallel {
            self.quadrature.nodes().par_iter().map(eval).collect::<Result<_>>()?
        } else {
            self.quadrature.nodes().iter().map(eval).collect::<Result<_>>()?
        };
        self.project_values(&values)
    }

    /// Projection from model values already computed at the nodes.
    pub fn project_values(&self, values: &[f64]) -> Result<GpcExpansion> {
        if values.len() != self.quadrature.len() {
            return Err(Error::Contract(format!(
                "expected {} node values, got {}",
                self.quadrature.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::ModelEvaluation {
                node: self.quadrature.nodes()[pos].clone(),
                source: Box::new(Error::Numeric("non-finite model output".into())),
            });
        }
        let p = self.basis.len();
        let mut coefficients = vec![0.0; p];
        for (row, &y) in self.weighted_psi.chunks_exact(p).zip(values) {
            for (c, &wpsi) in coefficients.iter_mut().zip(row) {
                *c += y * wpsi;
            }
        }
        let mut exp = GpcExpansion::new(self.basis.clone(), coefficients)?;
        exp.evaluations = values.len();
        Ok(exp)
    }
}

/// One-shot projection; see [`Projector`] for repeated use.
pub fn project<F>(model: F, quadrature: &TensorQuadrature, basis: Arc<ChaosBasis>) -> Result<GpcExpansion>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    Projector::new(basis, quadrature.clone())?.project(model)
}

/// Raw moments `μ₁..μ_M` about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    raw: Vec<f64>,
}

impl MomentVector {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidArgument("moment vector is empty".into()));
        }
        if raw.iter().any(|m| !m.is_finite()) {
            return Err(Error::Numeric("non-finite moment".into()));
        }
        if raw.len() >= 2 {
            let (m1, m2) = (raw[0], raw[1]);
            if m2 - m1 * m1 < -1e-9 * (1.0 + m2.abs()) {
                return Err(Error::Contract(format!(
                    "invalid raw moments: μ₂ = {m2} < μ₁² = {}",
                    m1 * m1
                )));
            }
        }
        Ok(Self { raw })
    }

    pub fn order(&self) -> usize {
        self.raw.len()
    }

    /// Raw moment of order `m` (1-based).
    pub fn raw(&self, m: usize) -> f64 {
        self.raw[m - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.raw
    }

    /// Leading `m` moments.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.raw.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate {} moments to {m}",
                self.raw.len()
            )));
        }
        Ok(Self {
            raw: self.raw[..m].to_vec(),
        })
    }

    /// Moments of `(Y - shift) / scale` about zero.
    pub fn standardized(&self, shift: f64, scale: f64) -> Vec<f64> {
        let mut full = Vec::with_capacity(self.raw.len() + 1);
        full.push(1.0);
        full.extend_from_slice(&self.raw);
        (1..full.len())
            .map(|k| {
                let s: f64 = (0..=k)
                    .map(|j| binom(k, j) * full[j] * (-shift).powi((k - j) as i32))
                    .sum();
                s / scale.powi(k as i32)
            })
            .collect()
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Central and standardized summaries of a raw moment sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    /// `central[k]` is the k-th central moment (`central[0] = 1`).
    pub central: Vec<f64>,
    /// `standardized[k] = central[k] / σ^k`.
    pub standardized: Vec<f64>,
}

impl MomentSummary {
    pub fn skewness(&self) -> Option<f64> {
        self.standardized.get(3).copied()
    }

    pub fn kurtosis(&self) -> Option<f64> {
        self.standardized.get(4).copied()
    }
}

pub fn raw_to_central_standardized(moments: &MomentVector) -> Result<MomentSummary> {
    if moments.order() < 2 {
        return Err(Error::InvalidArgument(
            "central summaries need at least two moments".into(),
        ));
    }
    let mean = moments.raw(1);
    let central = {
        let mut c = vec![1.0];
        c.extend(moments.standardized(mean, 1.0));
        c
    };
    let variance = central[2];
    if variance <= 0.0 || variance <= 1e-14 * moments.raw(2).abs() {
        return Err(Error::Degenerate(format!("variance {variance} is not positive")));
    }
    let sd = variance.sqrt();
    let standardized = central
        .iter()
        .enumerate()
        .map(|(k, c)| c / sd.powi(k as i32))
        .collect();
    Ok(MomentSummary {
        mean,
        variance,
        central,
        standardized,
    })
}
