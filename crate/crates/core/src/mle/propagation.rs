use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiments::ExperimentSet;
use crate::basis::PolynomialFamily;
use crate::density::{
    fit_gaussian, fit_maxent, maxent_support, Density, FittedDensity, HistogramDensity, MaxEntOptions,
};
use crate::error::{Error, Result};
use crate::gpc::{CacheOptions, CacheSet, ChaosBasis, MomentVector, Projector, TensorQuadrature};
use crate::models::{ExperimentConfig, ForwardModel};
use crate::transform::{std_normal_quantile, InputProbabilityModel};

/// Log-likelihood assigned to an experiment whose propagation failed.
pub const DEFAULT_FAILURE_LOG_LIKELIHOOD: f64 = -1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropagationMethod {
    GpcGaussian,
    GpcMaxEnt { order: u32 },
    Mc { samples: usize, seed: u64 },
    Qmc { samples: usize },
}

impl PropagationMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PropagationMethod::GpcGaussian => Ok(()),
            PropagationMethod::GpcMaxEnt { order } if (2..=5).contains(&order) => Ok(()),
            PropagationMethod::GpcMaxEnt { order } => {
                Err(Error::InvalidArgument(format!("maxent order {order} outside 2..=5")))
            }
            PropagationMethod::Mc { samples, .. } | PropagationMethod::Qmc { samples } if samples < 2 => {
                Err(Error::InvalidArgument(format!("sampling needs at least 2 samples, got {samples}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_gpc(&self) -> bool {
        matches!(self, PropagationMethod::GpcGaussian | PropagationMethod::GpcMaxEnt { .. })
    }

    /// Highest raw moment the method extracts.
    pub fn moment_order(&self) -> u32 {
        match *self {
            PropagationMethod::GpcMaxEnt { order } => order,
            _ => 2,
        }
    }
}

impl fmt::Display for PropagationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropagationMethod::GpcGaussian => write!(f, "gpc-gauss"),
            PropagationMethod::GpcMaxEnt { order } => write!(f, "gpc-maxent{order}"),
            PropagationMethod::Mc { samples, .. } => write!(f, "mc{samples}"),
            PropagationMethod::Qmc { samples } => write!(f, "qmc{samples}"),
        }
    }
}

/// Hermite chaos of total degree `degree` projected with `nodes` points per input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpcSettings {
    pub degree: usize,
    pub nodes: usize,
}

impl Default for GpcSettings {
    fn default() -> Self {
        Self { degree: 4, nodes: 5 }
    }
}

/// Outcome class of one experiment's likelihood term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermStatus {
    Fitted,
    GaussianFallback,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodReport {
    pub total: f64,
    pub per_experiment: Vec<f64>,
    pub status: Vec<TermStatus>,
    pub model_evaluations: usize,
}

impl LikelihoodReport {
    pub fn fallbacks(&self) -> usize {
        self.status.iter().filter(|s| **s == TermStatus::GaussianFallback).count()
    }

    pub fn failures(&self) -> usize {
        self.status.iter().filter(|s| **s == TermStatus::Failed).count()
    }
}

struct GpcState {
    projector: Projector,
    caches: CacheSet,
}

/// Evaluates `log L(α) = Σ_l log f_{Y_l}(y_l | α)` with one propagation method.
pub struct LikelihoodEngine {
    model: Arc<dyn ForwardModel>,
    method: PropagationMethod,
    gpc: Option<GpcState>,
    maxent: MaxEntOptions,
    failure_log_likelihood: f64,
}

impl LikelihoodEngine {
    /// Builds the inner-product caches in memory when the method needs them.
    pub fn new(model: Arc<dyn ForwardModel>, method: PropagationMethod, settings: GpcSettings) -> Result<Self> {
        let caches = if method.moment_order() > 2 {
            let families = vec![PolynomialFamily::Hermite; model.input_dimension()];
            CacheSet::build(&families, settings.degree, method.moment_order(), &CacheOptions::default())?
        } else {
            CacheSet::new()
        };
        Self::with_caches(model, method, settings, caches)
    }

    pub fn with_caches(
        model: Arc<dyn ForwardModel>,
        method: PropagationMethod,
        settings: GpcSettings,
        caches: CacheSet,
    ) -> Result<Self> {
        method.validate()?;
        let n = model.input_dimension();
        let gpc = if method.is_gpc() {
            if settings.nodes == 0 {
                return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
            }
            let families = vec![PolynomialFamily::Hermite; n];
            for m in 3..=method.moment_order() {
                caches
                    .get(m)
                    .ok_or_else(|| Error::Contract(format!("no inner-product cache for m = {m}")))?
                    .check_compatible(&families, settings.degree)?;
            }
            let basis = Arc::new(ChaosBasis::new(&families, settings.degree)?);
            let quadrature = TensorQuadrature::new(&families, settings.nodes)?;
            let mut projector = Projector::new(basis, quadrature)?;
            if !model.is_pure() {
                projector = projector.sequential();
            }
            Some(GpcState { projector, caches })
        } else {
            if let PropagationMethod::Qmc { samples } = method {
                qmc_nodes(n, samples)?;
            }
            None
        };
        Ok(Self {
            model,
            method,
            gpc,
            maxent: MaxEntOptions::default(),
            failure_log_likelihood: DEFAULT_FAILURE_LOG_LIKELIHOOD,
        })
    }

    pub fn with_failure_log_likelihood(mut self, value: f64) -> Self {
        self.failure_log_likelihood = value;
        self
    }

    pub fn with_maxent_options(mut self, options: MaxEntOptions) -> Self {
        self.maxent = options;
        self
    }

    pub fn method(&self) -> PropagationMethod {
        self.method
    }

    pub fn model(&self) -> &Arc<dyn ForwardModel> {
        &self.model
    }

    /// Model calls spent per experiment.
    pub fn evaluations_per_experiment(&self) -> usize {
        match (&self.gpc, self.method) {
            (Some(g), _) => g.projector.quadrature().len(),
            (None, PropagationMethod::Mc { samples, .. } | PropagationMethod::Qmc { samples }) => samples,
            _ => 0,
        }
    }

    /// Output moments of one experiment from the gPC surrogate.
    pub fn experiment_moments(&self, alpha: &InputProbabilityModel, config: &ExperimentConfig) -> Result<(MomentVector, Vec<f64>)> {
        let g = self
            .gpc
            .as_ref()
            .ok_or_else(|| Error::Contract("moments are only produced by gPC methods".into()))?;
        let values = self.node_values(g, alpha, config)?;
        let expansion = g.projector.project_values(&values)?;
        Ok((expansion.moments(&g.caches, self.method.moment_order())?, values))
    }

    fn node_values(&self, g: &GpcState, alpha: &InputProbabilityModel, config: &ExperimentConfig) -> Result<Vec<f64>> {
        let eval = |theta: &Vec<f64>| {
            self.model.evaluate(config, &alpha.to_physical(theta)).map_err(|e| Error::ModelEvaluation {
                node: theta.clone(),
                source: Box::new(e),
            })
        };
        let nodes = g.projector.quadrature().nodes();
        if self.model.is_pure() {
            nodes.par_iter().map(eval).collect()
        } else {
            nodes.iter().map(eval).collect()
        }
    }

    /// Output density of one experiment and whether the Gaussian fallback was used.
    pub fn experiment_density(
        &self,
        alpha: &InputProbabilityModel,
        config: &ExperimentConfig,
    ) -> Result<(FittedDensity, TermStatus)> {
        if alpha.dimension() != self.model.input_dimension() {
            return Err(Error::Contract(format!(
                "input model has {} components, forward model {}",
                alpha.dimension(),
                self.model.input_dimension()
            )));
        }
        match self.method {
            PropagationMethod::GpcGaussian => {
                let (moments, _) = self.experiment_moments(alpha, config)?;
                Ok((FittedDensity::Gaussian(fit_gaussian(&moments)?), TermStatus::Fitted))
            }
            PropagationMethod::GpcMaxEnt { .. } => {
                let (moments, values) = self.experiment_moments(alpha, config)?;
                let fit = maxent_support(&moments, &values)
                    .and_then(|support| fit_maxent(&moments, support, None, &self.maxent));
                match fit {
                    Ok(d) => Ok((FittedDensity::MaxEnt(d), TermStatus::Fitted)),
                    Err(e) => {
                        log::debug!("experiment {}: maxent fit failed ({e}), using normal fit", config.id);
                        Ok((FittedDensity::Gaussian(fit_gaussian(&moments)?), TermStatus::GaussianFallback))
                    }
                }
            }
            PropagationMethod::Mc { samples, seed } => {
                Ok((FittedDensity::Histogram(mc_propagate(&*self.model, alpha, config, samples, seed)?), TermStatus::Fitted))
            }
            PropagationMethod::Qmc { samples } => {
                Ok((FittedDensity::Histogram(qmc_propagate(&*self.model, alpha, config, samples)?), TermStatus::Fitted))
            }
        }
    }

    pub fn log_likelihood(&self, alpha: &InputProbabilityModel, experiments: &ExperimentSet) -> Result<LikelihoodReport> {
        if alpha.dimension() != self.model.input_dimension() {
            return Err(Error::Contract(format!(
                "input model has {} components, forward model {}",
                alpha.dimension(),
                self.model.input_dimension()
            )));
        }
        let term = |record: &super::experiments::ExperimentRecord| match self.experiment_density(alpha, &record.config) {
            Ok((density, status)) => (density.log_pdf(record.y), status),
            Err(e) => {
                log::debug!("experiment {}: propagation failed ({e})", record.config.id);
                (self.failure_log_likelihood, TermStatus::Failed)
            }
        };
        let terms: Vec<(f64, TermStatus)> = if self.model.is_pure() {
            experiments.records().par_iter().map(term).collect()
        } else {
            experiments.records().iter().map(term).collect()
        };
        let per_experiment: Vec<f64> = terms.iter().map(|t| t.0).collect();
        Ok(LikelihoodReport {
            total: per_experiment.iter().sum(),
            status: terms.iter().map(|t| t.1).collect(),
            model_evaluations: experiments.len() * self.evaluations_per_experiment(),
            per_experiment,
        })
    }
}

/// Model outputs at `S` standard normal draws; failed evaluations are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub values: Vec<f64>,
    pub failures: usize,
}

/// Draws `theta ~ N(0, I)` from a ChaCha8 stream selected by the experiment id.
pub fn mc_output_samples(
    model: &dyn ForwardModel,
    alpha: &InputProbabilityModel,
    config: &ExperimentConfig,
    samples: usize,
    seed: u64,
) -> Result<SampleOutcome> {
    let n = model.input_dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(config.id as u64);
    let thetas: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    evaluate_points(model, alpha, config, &thetas)
}

fn evaluate_points(
    model: &dyn ForwardModel,
    alpha: &InputProbabilityModel,
    config: &ExperimentConfig,
    thetas: &[Vec<f64>],
) -> Result<SampleOutcome> {
    if alpha.dimension() != model.input_dimension() {
        return Err(Error::Contract("input model and forward model dimensions differ".into()));
    }
    let eval = |t: &Vec<f64>| model.evaluate(config, &alpha.to_physical(t)).ok().filter(|v| v.is_finite());
    let outputs: Vec<Option<f64>> = if model.is_pure() {
        thetas.par_iter().map(eval).collect()
    } else {
        thetas.iter().map(eval).collect()
    };
    let values: Vec<f64> = outputs.iter().flatten().copied().collect();
    Ok(SampleOutcome {
        failures: outputs.len() - values.len(),
        values,
    })
}

fn histogram(outcome: SampleOutcome, config: &ExperimentConfig) -> Result<HistogramDensity> {
    if outcome.failures > 0 {
        log::debug!("experiment {}: {} sample evaluations failed", config.id, outcome.failures);
    }
    if outcome.values.len() < 2 {
        return Err(Error::Numeric(format!(
            "experiment {}: only {} successful samples",
            config.id,
            outcome.values.len()
        )));
    }
    HistogramDensity::from_samples(&outcome.values)
}

pub fn mc_propagate(
    model: &dyn ForwardModel,
    alpha: &InputProbabilityModel,
    config: &ExperimentConfig,
    samples: usize,
    seed: u64,
) -> Result<HistogramDensity> {
    if samples < 100 {
        log::debug!("histogram from only {samples} samples");
    }
    histogram(mc_output_samples(model, alpha, config, samples, seed)?, config)
}

/// Equal-probability grid with `k` midpoint quantiles `Φ⁻¹((j − ½)/k)` per
/// input, `k^n = samples`; the first input varies slowest.
pub fn qmc_nodes(n: usize, samples: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid needs at least one input".into()));
    }
    let k = (samples as f64).powf(1.0 / n as f64).round() as usize;
    if k < 1 || k.checked_pow(n as u32) != Some(samples) {
        return Err(Error::InvalidArgument(format!("{samples} samples is not a k^{n} grid")));
    }
    let axis = (1..=k)
        .map(|j| std_normal_quantile((j as f64 - 0.5) / k as f64))
        .collect::<Result<Vec<_>>>()?;
    let mut nodes = Vec::with_capacity(samples);
    for mut r in 0..samples {
        let mut node = vec![0.0; n];
        for slot in node.iter_mut().rev() {
            *slot = axis[r % k];
            r /= k;
        }
        nodes.push(node);
    }
    Ok(nodes)
}

pub fn qmc_output_samples(
    model: &dyn ForwardModel,
    alpha: &InputProbabilityModel,
    config: &ExperimentConfig,
    samples: usize,
) -> Result<SampleOutcome> {
    evaluate_points(model, alpha, config, &qmc_nodes(model.input_dimension(), samples)?)
}

pub fn qmc_propagate(
    model: &dyn ForwardModel,
    alpha: &InputProbabilityModel,
    config: &ExperimentConfig,
    samples: usize,
) -> Result<HistogramDensity> {
    histogram(qmc_output_samples(model, alpha, config, samples)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mle::experiments::ExperimentRecord;
    use crate::models::LoadLevel;
    use approx::assert_abs_diff_eq;

    struct Identity;

    impl ForwardModel for Identity {
        fn input_dimension(&self) -> usize {
            1
        }

        fn evaluate(&self, _: &ExperimentConfig, x: &[f64]) -> Result<f64> {
            Ok(x[0])
        }
    }

    fn config(id: u32) -> ExperimentConfig {
        ExperimentConfig {
            id,
            dt: 0.1,
            u0: 0.4,
            du: 0.2,
            omega_m_rpm: 1500.0,
            load: LoadLevel::Low,
        }
    }

    fn one(y: f64) -> ExperimentSet {
        ExperimentSet::new(vec![ExperimentRecord { config: config(1), y }]).unwrap()
    }

    #[test]
    fn identity_gaussian_likelihood() {
        let engine = LikelihoodEngine::new(Arc::new(Identity), PropagationMethod::GpcGaussian, GpcSettings::default()).unwrap();
        let alpha = InputProbabilityModel::unbounded(vec![0.0], vec![1.0]).unwrap();
        let report = engine.log_likelihood(&alpha, &one(0.0)).unwrap();
        assert_abs_diff_eq!(report.total, -0.918_938_533_204_672_8, epsilon = 1e-12);
        assert_eq!(report.model_evaluations, 5);
        let empty = engine.log_likelihood(&alpha, &ExperimentSet::default()).unwrap();
        assert_eq!(empty.total, 0.0);
    }

    #[test]
    fn qmc_grid_nodes() {
        let nodes = qmc_nodes(1, 3).unwrap();
        assert_abs_diff_eq!(nodes[0][0], std_normal_quantile(1.0 / 6.0).unwrap(), epsilon = 0.0);
        assert_eq!(nodes[1][0], 0.0);
        assert_abs_diff_eq!(nodes[2][0], std_normal_quantile(5.0 / 6.0).unwrap(), epsilon = 0.0);
        assert_eq!(qmc_nodes(2, 9).unwrap()[1], vec![nodes[0][0], 0.0]);
        assert!(qmc_nodes(2, 10).is_err());
    }

    #[test]
    fn mc_is_seeded() {
        let alpha = InputProbabilityModel::unbounded(vec![0.0], vec![1.0]).unwrap();
        let a = mc_output_samples(&Identity, &alpha, &config(1), 500, 7).unwrap();
        let b = mc_output_samples(&Identity, &alpha, &config(1), 500, 7).unwrap();
        let c = mc_output_samples(&Identity, &alpha, &config(2), 500, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn failed_experiment_gets_penalty() {
        struct Failing;
        impl ForwardModel for Failing {
            fn input_dimension(&self) -> usize {
                1
            }
            fn evaluate(&self, _: &ExperimentConfig, _: &[f64]) -> Result<f64> {
                Err(Error::Timeout { horizon: 5.0 })
            }
        }
        let engine = LikelihoodEngine::new(Arc::new(Failing), PropagationMethod::GpcGaussian, GpcSettings::default()).unwrap();
        let alpha = InputProbabilityModel::unbounded(vec![0.0], vec![1.0]).unwrap();
        let report = engine.log_likelihood(&alpha, &one(0.0)).unwrap();
        assert_eq!(report.total, DEFAULT_FAILURE_LOG_LIKELIHOOD);
        assert_eq!(report.failures(), 1);
    }

    #[test]
    fn method_guards() {
        assert!(PropagationMethod::GpcMaxEnt { order: 6 }.validate().is_err());
        assert!(PropagationMethod::Mc { samples: 1, seed: 0 }.validate().is_err());
        assert!(PropagationMethod::Qmc { samples: 4 }.validate().is_ok());
    }
}
